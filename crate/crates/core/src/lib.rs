//! Numerical laboratory for pseudodifferential operators with rough symbols.
//!
//! Functions live on the discrete torus `[0,1)^n` (`n` = 1 or 2) sampled on a
//! power-of-two grid; symbols are tabulated on grid x frequency lattice. The
//! crate applies `T_sigma f(x) = sum_xi sigma(x, xi) e^{2 pi i xi x} f^(xi)`,
//! evaluates the dyadic Besov-type bound quantities of rough symbols, and
//! measures operator norms, maximal operators and cap-kernel certificates.

pub mod bounds;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod lp_decomp;
pub mod maximal;
pub mod pdo;
pub mod sphere;
pub mod symbols;

pub use bounds::{BandRow, BandTable, BoundReport};
pub use error::{Error, Result};
pub use grid::{GridFn, Spectrum};
pub use lp_decomp::{BandIndex, DyadicCutoff};
pub use num_complex::Complex64;
pub use pdo::{DenseOperator, NormEstimate, NormMethod};
pub use sphere::SphereSymbol;
pub use symbols::{DirectionField, Symbol, SymbolTag};
