//! Grid functions on the torus `[0,1)^n` and the unitary DFT between
//! physical samples and the integer frequency lattice.
//!
//! Spectra are stored in FFT order: storage index `k` along an axis holds the
//! frequency `k` for `k < N/2` and `k - N` otherwise, so the lattice is
//! `{-N/2, ..., N/2 - 1}` per axis. The forward transform carries the
//! `1/N^dim` factor, which makes grid sums approximate integrals and turns the
//! inverse into a plain lattice sum.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        map.entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// Unnormalized in-place DFT over an `n^dim` row-major block.
/// Forward uses `e^{-2 pi i k j / n}`, inverse `e^{+2 pi i k j / n}`.
pub(crate) fn fft_nd(buf: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), n.pow(dim as u32));
    let fft = plan(n, inverse);
    match dim {
        1 => fft.process(buf),
        2 => {
            // rows are contiguous
            fft.process(buf);
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = buf[r * n + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    buf[r * n + c] = col[r];
                }
            }
        }
        _ => unreachable!("dimension validated at construction"),
    }
}

/// Validates a grid size and returns `log2(n)`.
pub fn check_size(n: usize) -> Result<u32> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::GridSize(n));
    }
    Ok(n.trailing_zeros())
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Dimension(dim))
    }
}

/// Signed lattice frequency stored at FFT-order index `k`.
#[inline]
pub fn freq(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// FFT-order storage index of the signed frequency `xi` (taken mod `n`).
#[inline]
pub fn index_of(xi: i64, n: usize) -> usize {
    xi.rem_euclid(n as i64) as usize
}

/// Frequency vector at flat storage index `idx` (second entry 0 in 1D).
#[inline]
pub fn freq_vec(idx: usize, n: usize, dim: usize) -> [i64; 2] {
    if dim == 1 {
        [freq(idx, n), 0]
    } else {
        [freq(idx / n, n), freq(idx % n, n)]
    }
}

/// Euclidean length of the frequency at flat storage index `idx`.
#[inline]
pub fn freq_radius(idx: usize, n: usize, dim: usize) -> f64 {
    let [a, b] = freq_vec(idx, n, dim);
    ((a * a + b * b) as f64).sqrt()
}

/// `(sum |v|^p)^{1/p}` with counting measure; `p = inf` gives the max.
pub fn counting_norm(values: &[Complex64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    } else if p == 2.0 {
        values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    } else if p == 1.0 {
        values.iter().map(|v| v.norm()).sum()
    } else {
        values.iter().map(|v| v.norm().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Exponent(format!("p = {p} must satisfy p >= 1")));
    }
    Ok(())
}

/// Complex-valued function sampled on the uniform grid `x_i = i/N` of `[0,1)^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    dim: usize,
    n: usize,
    values: Vec<Complex64>,
}

impl GridFn {
    pub fn new(dim: usize, n: usize, values: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        check_size(n)?;
        let expected = n.pow(dim as u32);
        if values.len() != expected {
            return Err(Error::Length { expected, actual: values.len() });
        }
        Ok(Self { dim, n, values })
    }

    pub fn zeros(dim: usize, n: usize) -> Result<Self> {
        Self::constant(dim, n, Complex64::new(0.0, 0.0))
    }

    pub fn constant(dim: usize, n: usize, c: Complex64) -> Result<Self> {
        check_dim(dim)?;
        check_size(n)?;
        Ok(Self { dim, n, values: vec![c; n.pow(dim as u32)] })
    }

    /// Tabulates `gen` at the grid points (second coordinate is 0 in 1D).
    pub fn from_fn(dim: usize, n: usize, gen: impl Fn([f64; 2]) -> Complex64) -> Result<Self> {
        check_dim(dim)?;
        check_size(n)?;
        let len = n.pow(dim as u32);
        let values = (0..len).map(|i| gen(point(i, n, dim))).collect();
        Ok(Self { dim, n, values })
    }

    /// Pure tone `e^{2 pi i k . x}`.
    pub fn tone(dim: usize, n: usize, k: [i64; 2]) -> Result<Self> {
        Self::from_fn(dim, n, |x| {
            let phase = 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]);
            Complex64::from_polar(1.0, phase)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_shape(&self, other: &GridFn) -> bool {
        self.dim == other.dim && self.n == other.n
    }

    pub(crate) fn check_shape(&self, other: &GridFn) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid {}^{} vs {}^{}",
                self.n, self.dim, other.n, other.dim
            )))
        }
    }

    /// Pointwise modulus as a new grid function.
    pub fn abs(&self) -> GridFn {
        GridFn {
            dim: self.dim,
            n: self.n,
            values: self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> GridFn {
        GridFn { dim: self.dim, n: self.n, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &GridFn) -> Result<GridFn> {
        self.check_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFn { dim: self.dim, n: self.n, values })
    }

    pub fn sub(&self, other: &GridFn) -> Result<GridFn> {
        self.check_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFn { dim: self.dim, n: self.n, values })
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFn) -> Result<GridFn> {
        self.check_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(GridFn { dim: self.dim, n: self.n, values })
    }

    /// Sup-norm distance to another grid function of the same shape.
    pub fn max_abs_diff(&self, other: &GridFn) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Coordinates of the flat grid index `i`.
#[inline]
pub fn point(i: usize, n: usize, dim: usize) -> [f64; 2] {
    let h = 1.0 / n as f64;
    if dim == 1 {
        [i as f64 * h, 0.0]
    } else {
        [(i / n) as f64 * h, (i % n) as f64 * h]
    }
}

/// Fourier coefficients on the integer lattice `{-N/2..N/2-1}^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    dim: usize,
    n: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    /// Builds a spectrum from coefficients in FFT storage order.
    pub fn new(dim: usize, n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let probe = GridFn::new(dim, n, coeffs)?;
        Ok(Self { dim, n, coeffs: probe.values })
    }

    pub fn zeros(dim: usize, n: usize) -> Result<Self> {
        let g = GridFn::zeros(dim, n)?;
        Ok(Self { dim, n, coeffs: g.values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficients in FFT storage order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    fn flat(&self, xi: [i64; 2]) -> usize {
        if self.dim == 1 {
            index_of(xi[0], self.n)
        } else {
            index_of(xi[0], self.n) * self.n + index_of(xi[1], self.n)
        }
    }

    /// Coefficient at the signed frequency `xi` (second entry ignored in 1D).
    pub fn get(&self, xi: [i64; 2]) -> Complex64 {
        self.coeffs[self.flat(xi)]
    }

    pub fn set(&mut self, xi: [i64; 2], value: Complex64) {
        let k = self.flat(xi);
        self.coeffs[k] = value;
    }

    /// `(sum |c_xi|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        counting_norm(&self.coeffs, 2.0)
    }

    /// Multiplies every coefficient by `m(xi)`.
    pub fn apply_multiplier(&mut self, m: impl Fn([i64; 2]) -> f64) {
        let (n, dim) = (self.n, self.dim);
        for (k, c) in self.coeffs.iter_mut().enumerate() {
            *c *= m(freq_vec(k, n, dim));
        }
    }

    /// Largest `|xi|` carrying a coefficient above `tol`.
    pub fn max_active_radius(&self, tol: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(k, _)| freq_radius(k, self.n, self.dim))
            .fold(0.0, f64::max)
    }
}

/// `coeffs[xi] = N^{-dim} sum_i f(x_i) e^{-2 pi i x_i . xi}`.
pub fn forward_transform(f: &GridFn) -> Spectrum {
    let mut coeffs = f.values.clone();
    fft_nd(&mut coeffs, f.n, f.dim, false);
    let scale = 1.0 / f.len() as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Spectrum { dim: f.dim, n: f.n, coeffs }
}

/// `f(x_i) = sum_xi coeffs[xi] e^{2 pi i x_i . xi}`.
pub fn inverse_transform(s: &Spectrum) -> GridFn {
    let mut values = s.coeffs.clone();
    fft_nd(&mut values, s.n, s.dim, true);
    GridFn { dim: s.dim, n: s.n, values }
}

/// `(N^{-dim} sum_i |f(x_i)|^p)^{1/p}`, or `max_i |f(x_i)|` for `p = inf`.
pub fn lp_norm(f: &GridFn, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(counting_norm(&f.values, p));
    }
    let mean: f64 = f.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() / f.len() as f64;
    Ok(mean.powf(1.0 / p))
}

/// `N^{-dim} sum_i f(x_i) conj(g(x_i))`.
pub fn inner(f: &GridFn, g: &GridFn) -> Result<Complex64> {
    f.check_shape(g)?;
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    Ok(s / f.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dim: usize, n: usize, seed: u64) -> GridFn {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = n.pow(dim as u32);
        let v = (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        GridFn::new(dim, n, v).unwrap()
    }

    // O(N^2) direct sum, independent of rustfft.
    fn direct_dft(f: &GridFn) -> Vec<Complex64> {
        let n = f.n();
        (0..n)
            .map(|k| {
                let xi = freq(k, n) as f64;
                f.values()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * Complex64::from_polar(1.0, -2.0 * PI * xi * i as f64 / n as f64))
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn constant_maps_to_zero_frequency() {
        let f = GridFn::constant(1, 64, Complex64::new(1.0, 0.0)).unwrap();
        let s = forward_transform(&f);
        assert!((s.get([0, 0]) - 1.0).norm() < 1e-14);
        assert!(s.coeffs().iter().skip(1).all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn pure_tone_maps_to_its_frequency() {
        for dim in [1, 2] {
            let f = GridFn::tone(dim, 32, [-5, 3]).unwrap();
            let s = forward_transform(&f);
            let k = if dim == 1 { [-5, 0] } else { [-5, 3] };
            for (idx, c) in s.coeffs().iter().enumerate() {
                let expect = if freq_vec(idx, 32, dim) == k { 1.0 } else { 0.0 };
                assert!((c - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_of_delta_and_tone() {
        let mut s = Spectrum::zeros(1, 64).unwrap();
        s.set([0, 0], Complex64::new(1.0, 0.0));
        let f = inverse_transform(&s);
        assert!(f.values().iter().all(|v| (v - 1.0).norm() < 1e-14));

        let mut s = Spectrum::zeros(1, 64).unwrap();
        s.set([3, 0], Complex64::new(1.0, 0.0));
        let f = inverse_transform(&s);
        let tone = GridFn::tone(1, 64, [3, 0]).unwrap();
        assert!(f.max_abs_diff(&tone).unwrap() < 1e-13);
    }

    #[test]
    fn matches_direct_summation_and_plancherel() {
        let f = random(1, 256, 7);
        let s = forward_transform(&f);
        let oracle = direct_dft(&f);
        for (a, b) in s.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
        let lhs: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / 256.0;
        let rhs: f64 = oracle.iter().map(|c| c.norm_sqr()).sum();
        assert!((lhs - rhs).abs() / lhs < 1e-12);
    }

    #[test]
    fn roundtrip_over_sizes() {
        for (dim, n) in [(1, 64), (1, 1024), (1, 4096), (2, 64), (2, 128)] {
            let f = random(dim, n, n as u64);
            let g = inverse_transform(&forward_transform(&f));
            let err = f.max_abs_diff(&g).unwrap() / lp_norm(&f, f64::INFINITY).unwrap();
            assert!(err < 1e-12, "dim {dim} n {n}: {err}");
        }
    }

    #[test]
    fn lp_norm_cases() {
        let c = Complex64::new(3.0, -4.0);
        let f = GridFn::constant(2, 16, c).unwrap();
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!((lp_norm(&f, p).unwrap() - 5.0).abs() < 1e-12);
        }
        let half = GridFn::from_fn(1, 64, |x| if x[0] < 0.5 { 1.0.into() } else { 0.0.into() }).unwrap();
        assert!((lp_norm(&half, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(lp_norm(&half, 0.5), Err(Error::Exponent(_))));
    }

    #[test]
    fn inner_products() {
        let f = random(2, 32, 1);
        let g = random(2, 32, 2);
        let ff = inner(&f, &f).unwrap();
        assert!((ff.re - lp_norm(&f, 2.0).unwrap().powi(2)).abs() < 1e-12);
        let parseval: Complex64 = forward_transform(&f)
            .coeffs()
            .iter()
            .zip(forward_transform(&g).coeffs())
            .map(|(a, b)| a * b.conj())
            .sum();
        assert!((inner(&f, &g).unwrap() - parseval).norm() < 1e-12);
        let t1 = GridFn::tone(1, 32, [2, 0]).unwrap();
        let t2 = GridFn::tone(1, 32, [5, 0]).unwrap();
        assert!(inner(&t1, &t2).unwrap().norm() < 1e-14);
        assert!(inner(&t1, &f).is_err());
    }

    #[test]
    fn rejects_malformed_grids() {
        assert_eq!(GridFn::zeros(1, 48).unwrap_err(), Error::GridSize(48));
        assert_eq!(GridFn::zeros(3, 16).unwrap_err(), Error::Dimension(3));
        assert!(matches!(GridFn::new(1, 16, vec![Complex64::default(); 15]), Err(Error::Length { .. })));
    }
}
