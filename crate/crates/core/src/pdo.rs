//! Discrete pseudodifferential operators
//! `(T f)(x_i) = sum_xi sigma(x_i, xi) e^{2 pi i xi . x_i} f^(xi)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, fft_nd, forward_transform, freq_vec, GridFn};
use crate::symbols::{SeparableSymbol, Symbol, SymbolTag};

/// Largest `N^dim` for which a dense matrix is built.
pub const DENSE_LIMIT: usize = 4096;
pub const POWER_TOL: f64 = 1e-9;
pub const POWER_MAX_ITER: usize = 500;
const POWER_SEED: u64 = 0x5eed_0f_7a11;

fn check_pair(s: &Symbol, f: &GridFn) -> Result<()> {
    if s.dim() != f.dim() || s.n() != f.n() {
        return Err(Error::Shape(format!(
            "symbol on ({}, {}) applied to a function on ({}, {})",
            s.dim(),
            s.n(),
            f.dim(),
            f.n()
        )));
    }
    Ok(())
}

fn roots(n: usize) -> Vec<Complex64> {
    (0..n).map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64)).collect()
}

/// `(xi . i) mod N`, the phase index of `e^{2 pi i xi . x_i}`.
#[inline]
fn phase_index(xi: [i64; 2], i: usize, n: usize, dim: usize) -> usize {
    let (i0, i1) = if dim == 1 { (i as i64, 0) } else { ((i / n) as i64, (i % n) as i64) };
    (xi[0] * i0 + xi[1] * i1).rem_euclid(n as i64) as usize
}

/// Multiplier pass `F^{-1}(h f^)`, `h` in FFT order.
pub fn apply_multiplier(h: &[Complex64], f: &GridFn) -> Result<GridFn> {
    if h.len() != f.len() {
        return Err(Error::Length { expected: f.len(), actual: h.len() });
    }
    let mut buf = forward_transform(f).coeffs().to_vec();
    buf.iter_mut().zip(h).for_each(|(c, m)| *c *= m);
    fft_nd(&mut buf, f.n(), f.dim(), true);
    GridFn::new(f.dim(), f.n(), buf)
}

/// `g(x) h(xi)`: multiplier pass followed by pointwise multiplication.
pub fn apply_rank_one(g: &GridFn, h: &[Complex64], f: &GridFn) -> Result<GridFn> {
    f.check_shape(g)?;
    apply_multiplier(h, f)?.mul(g)
}

pub fn apply_separable(s: &SeparableSymbol, f: &GridFn) -> Result<GridFn> {
    if s.dim() != f.dim() || s.n() != f.n() {
        return Err(Error::Shape("separable symbol and function disagree".into()));
    }
    let mut out = GridFn::zeros(f.dim(), f.n())?;
    for (g, h) in s.terms() {
        out = out.add(&apply_rank_one(g, h, f)?)?;
    }
    Ok(out)
}

/// Direct phase sum, with the multiplier pass when `sigma` does not depend on x.
pub fn apply(s: &Symbol, f: &GridFn) -> Result<GridFn> {
    check_pair(s, f)?;
    if let Some(h) = s.x_independent() {
        return apply_multiplier(h, f);
    }
    apply_direct(s, f)
}

pub(crate) fn apply_direct(s: &Symbol, f: &GridFn) -> Result<GridFn> {
    check_pair(s, f)?;
    let (n, dim) = (s.n(), s.dim());
    let spec = forward_transform(f);
    let fh = spec.coeffs();
    let w = roots(n);
    let xis: Vec<[i64; 2]> = (0..fh.len()).map(|k| freq_vec(k, n, dim)).collect();
    let out: Vec<Complex64> = s
        .values()
        .par_chunks(s.row_len())
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .zip(fh)
                .zip(&xis)
                .map(|((sv, c), xi)| sv * c * w[phase_index(*xi, i, n, dim)])
                .sum()
        })
        .collect();
    GridFn::new(dim, n, out)
}

/// Matrix adjoint of `apply` for the normalized inner product.
pub fn apply_adjoint(s: &Symbol, g: &GridFn) -> Result<GridFn> {
    check_pair(s, g)?;
    let (n, dim) = (s.n(), s.dim());
    let len = g.len();
    if let Some(h) = s.x_independent() {
        let conj: Vec<Complex64> = h.iter().map(|v| v.conj()).collect();
        return apply_multiplier(&conj, g);
    }
    let w = roots(n);
    let xis: Vec<[i64; 2]> = (0..len).map(|k| freq_vec(k, n, dim)).collect();
    let gv = g.values();
    let vals = s.values();
    // column sums in a fixed order keep the result bit-reproducible
    let mut h: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map(|k| {
            let xi = xis[k];
            (0..len)
                .filter(|&i| gv[i] != Complex64::default())
                .map(|i| gv[i] * (vals[i * len + k] * w[phase_index(xi, i, n, dim)]).conj())
                .sum()
        })
        .collect();
    let scale = 1.0 / len as f64;
    h.iter_mut().for_each(|c| *c *= scale);
    fft_nd(&mut h, n, dim, true);
    GridFn::new(dim, n, h)
}

/// `T` as an `N^dim x N^dim` matrix acting on sample vectors.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: DMatrix<Complex64>,
    pub tag: Option<SymbolTag>,
    pub dim: usize,
    pub n: usize,
}

impl DenseOperator {
    pub fn apply(&self, f: &GridFn) -> Result<GridFn> {
        if f.dim() != self.dim || f.n() != self.n {
            return Err(Error::Shape("dense operator and function disagree".into()));
        }
        let v = nalgebra::DVector::from_column_slice(f.values());
        let out = &self.matrix * v;
        GridFn::new(self.dim, self.n, out.as_slice().to_vec())
    }

    pub fn largest_singular_value(&self) -> f64 {
        self.matrix.clone().singular_values().max()
    }
}

fn check_dense(len: usize) -> Result<()> {
    if len > DENSE_LIMIT {
        return Err(Error::SizeGuard(format!("N^dim = {len} exceeds {DENSE_LIMIT}")));
    }
    Ok(())
}

pub fn dense_matrix(s: &Symbol) -> Result<DenseOperator> {
    let (n, dim) = (s.n(), s.dim());
    let len = s.row_len();
    check_dense(len)?;
    let w = roots(n);
    let scale = 1.0 / len as f64;
    let rows: Vec<Vec<Complex64>> = s
        .values()
        .par_chunks(len)
        .enumerate()
        .map(|(i, row)| {
            let mut buf: Vec<Complex64> = row
                .iter()
                .enumerate()
                .map(|(k, v)| v * w[phase_index(freq_vec(k, n, dim), i, n, dim)])
                .collect();
            fft_nd(&mut buf, n, dim, false);
            buf.iter_mut().for_each(|c| *c *= scale);
            buf
        })
        .collect();
    let matrix = DMatrix::from_fn(len, len, |r, c| rows[r][c]);
    Ok(DenseOperator { matrix, tag: s.tag().cloned(), dim, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMethod {
    Power,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
}

/// Largest singular value of a linear map given with its adjoint, by power
/// iteration on `A* A` from a seeded start vector.
pub fn power_norm<A, B>(dim: usize, n: usize, forward: A, adjoint: B) -> Result<NormEstimate>
where
    A: Fn(&GridFn) -> Result<GridFn>,
    B: Fn(&GridFn) -> Result<GridFn>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let len = n.pow(dim as u32);
    let start = (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut v = GridFn::new(dim, n, start)?;
    let mut prev = f64::NAN;
    for it in 1..=POWER_MAX_ITER {
        let nv = grid::lp_norm(&v, 2.0)?;
        if nv == 0.0 {
            return Ok(NormEstimate { value: 0.0, method: NormMethod::Power, iterations: it });
        }
        v = v.scale((1.0 / nv).into());
        let tv = forward(&v)?;
        let rayleigh = grid::lp_norm(&tv, 2.0)?.powi(2);
        if rayleigh == 0.0 || ((rayleigh - prev) / rayleigh).abs() < POWER_TOL {
            return Ok(NormEstimate { value: rayleigh.sqrt(), method: NormMethod::Power, iterations: it });
        }
        prev = rayleigh;
        v = adjoint(&tv)?;
    }
    Err(Error::NotConverged { iterations: POWER_MAX_ITER, estimate: prev.max(0.0).sqrt() })
}

pub fn operator_norm(s: &Symbol, method: NormMethod) -> Result<NormEstimate> {
    match method {
        NormMethod::Dense => {
            let d = dense_matrix(s)?;
            Ok(NormEstimate { value: d.largest_singular_value(), method, iterations: 0 })
        }
        NormMethod::Power => {
            if let Some(h) = s.x_independent() {
                let value = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
                return Ok(NormEstimate { value, method, iterations: 0 });
            }
            power_norm(s.dim(), s.n(), |f| apply_direct(s, f), |g| apply_adjoint(s, g))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, inverse_transform, Spectrum};
    use crate::symbols::{constant_symbol, random_symbol};

    fn random_fn(dim: usize, n: usize, seed: u64) -> GridFn {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n.pow(dim as u32)).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        GridFn::new(dim, n, v).unwrap()
    }

    fn random_table(dim: usize, n: usize, seed: u64) -> Symbol {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n.pow(2 * dim as u32)).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Symbol::from_table(dim, n, v, None).unwrap()
    }

    // Literal double sum over y and xi, independent of every transform.
    fn brute_apply(s: &Symbol, f: &GridFn) -> Vec<Complex64> {
        let (n, dim) = (s.n(), s.dim());
        let len = f.len();
        (0..len)
            .map(|i| {
                let x = grid::point(i, n, dim);
                let mut acc = Complex64::default();
                for k in 0..len {
                    let xi = freq_vec(k, n, dim);
                    let mut fh = Complex64::default();
                    for (j, fv) in f.values().iter().enumerate() {
                        let y = grid::point(j, n, dim);
                        let ph = -2.0 * PI * (xi[0] as f64 * y[0] + xi[1] as f64 * y[1]);
                        fh += fv * Complex64::from_polar(1.0, ph);
                    }
                    fh /= len as f64;
                    let ph = 2.0 * PI * (xi[0] as f64 * x[0] + xi[1] as f64 * x[1]);
                    acc += s.row(i)[k] * fh * Complex64::from_polar(1.0, ph);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn generic_apply_matches_brute_force() {
        for (dim, n) in [(1, 16), (2, 4)] {
            let s = random_table(dim, n, 1);
            let f = random_fn(dim, n, 2);
            let a = apply(&s, &f).unwrap();
            let b = brute_apply(&s, &f);
            let err = a.values().iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-11, "dim {dim}: {err}");
        }
    }

    #[test]
    fn identity_symbol() {
        let one = constant_symbol(1, 256, 1.0.into()).unwrap();
        let f = random_fn(1, 256, 3);
        assert!(apply(&one, &f).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
        assert!(apply_direct(&one, &f).unwrap().max_abs_diff(&f).unwrap() < 1e-11);
        assert!(apply_adjoint(&one, &f).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn multiplier_fast_path_agrees() {
        let n = 64;
        let s = Symbol::from_function(|_, xi| Complex64::new(1.0 / (1.0 + xi[0].abs() as f64), 0.5), 1, n).unwrap();
        let f = random_fn(1, n, 4);
        let fast = apply(&s, &f).unwrap();
        let slow = apply_direct(&s, &f).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-10);
        let mut spec = forward_transform(&f);
        let row = s.row(0).to_vec();
        spec.coeffs_mut().iter_mut().zip(&row).for_each(|(c, m)| *c *= m);
        assert!(inverse_transform(&spec).max_abs_diff(&fast).unwrap() < 1e-12);
    }

    #[test]
    fn rank_one_fast_path_agrees() {
        let n = 32;
        let g = random_fn(1, n, 5);
        let h = random_fn(1, n, 6).into_values();
        let s = Symbol::rank_one(&g, &h).unwrap();
        let f = random_fn(1, n, 7);
        let a = apply_rank_one(&g, &h, &f).unwrap();
        assert!(a.max_abs_diff(&apply(&s, &f).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn adjoint_identity() {
        for (dim, n) in [(1, 64), (2, 8)] {
            let s = random_table(dim, n, 8);
            for seed in 0..5 {
                let f = random_fn(dim, n, 100 + seed);
                let g = random_fn(dim, n, 200 + seed);
                let lhs = inner(&apply(&s, &f).unwrap(), &g).unwrap();
                let rhs = inner(&f, &apply_adjoint(&s, &g).unwrap()).unwrap();
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn dense_matches_apply() {
        let s = random_symbol(1, 64, 2, 3).unwrap();
        let d = dense_matrix(&s).unwrap();
        for seed in 0..20 {
            let f = random_fn(1, 64, seed);
            assert!(d.apply(&f).unwrap().max_abs_diff(&apply(&s, &f).unwrap()).unwrap() < 1e-10);
        }
        let id = dense_matrix(&constant_symbol(1, 16, 1.0.into()).unwrap()).unwrap();
        assert!((id.matrix - DMatrix::<Complex64>::identity(16, 16)).norm() < 1e-12);
        assert!(check_dense(4096).is_ok());
        assert!(matches!(check_dense(8192), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn multiplier_matrix_is_conjugated_diagonal() {
        let n = 16;
        let s = Symbol::from_function(|_, xi| Complex64::new(xi[0] as f64, 1.0), 1, n).unwrap();
        let d = dense_matrix(&s).unwrap();
        for k in 0..n {
            let mut sp = Spectrum::zeros(1, n).unwrap();
            sp.coeffs_mut()[k] = 1.0.into();
            let e = inverse_transform(&sp);
            let out = d.apply(&e).unwrap();
            let want = e.scale(s.row(0)[k]);
            assert!(out.max_abs_diff(&want).unwrap() < 1e-12);
        }
    }

    #[test]
    fn norms() {
        let one = constant_symbol(1, 64, 1.0.into()).unwrap();
        assert_eq!(operator_norm(&one, NormMethod::Power).unwrap().value, 1.0);
        assert!((operator_norm(&one, NormMethod::Dense).unwrap().value - 1.0).abs() < 1e-12);
        // rank one with a unimodular x-factor: the norm is the sup of the multiplier
        let n = 64;
        let g = GridFn::from_fn(1, n, |x| Complex64::from_polar(1.5, (7.0 * x[0]).sin())).unwrap();
        let h: Vec<Complex64> = (0..n).map(|k| (0.25 + (k as f64 / n as f64)).into()).collect();
        let s = Symbol::rank_one(&g, &h).unwrap();
        let hmax = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let dense = operator_norm(&s, NormMethod::Dense).unwrap().value;
        assert!((dense - 1.5 * hmax).abs() < 1e-10);
        let power = operator_norm(&s, NormMethod::Power).unwrap().value;
        assert!((power - dense).abs() / dense < 1e-6);
        // and with a unimodular xi-factor it is the sup of |g|
        let g2 = GridFn::from_fn(1, n, |x| (2.0 + (2.0 * PI * x[0]).sin()).into()).unwrap();
        let h2: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, k as f64)).collect();
        let s2 = Symbol::rank_one(&g2, &h2).unwrap();
        let gmax = g2.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((operator_norm(&s2, NormMethod::Dense).unwrap().value - gmax).abs() < 1e-10);
    }

    #[test]
    fn power_reports_non_convergence() {
        let step = std::cell::Cell::new(1.0f64);
        let drifting = |f: &GridFn| {
            step.set(step.get() * 1.01);
            Ok(f.scale(step.get().into()))
        };
        let bad = power_norm(1, 8, drifting, |g| Ok(g.clone()));
        assert!(matches!(bad, Err(Error::NotConverged { iterations: 500, .. })));
    }
}
