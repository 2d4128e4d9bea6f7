//! Constants frozen from the first full run at the default configurations
//! (seed 1729).

pub const THEOREM1_MAX_RATIO: f64 = 1.0000000000000024;
pub const CARLESON_MAX_CONSTANT: f64 = 1.3633241753754932;
pub const CAP_L1_MAX: f64 = 2.4217204872768003;
pub const ALGEBRA_PRODUCT_CONSTANT: f64 = 0.40548620850223704;
pub const ALGEBRA_EXP_CONSTANT: f64 = 0.732783212872938;

/// `(p, q)` exponent pairs of the Bernstein check.
pub const BERNSTEIN_PAIRS: [(f64, f64); 3] = [(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)];
pub const BERNSTEIN_CONSTANTS: [f64; 3] = [0.787949808474916, 1.2701073169591277, 0.9660767798402923];
