//! Dyadic cutoffs and Littlewood-Paley projections.
//!
//! The cutoff is built from the `exp(-1/t)` smooth step: `chi = 1` on
//! `|t| <= 1`, `chi = 0` on `|t| >= 2`, and `phi(t) = chi(t) - chi(2t)` lives on
//! `1/2 <= |t| <= 2`. Band `l >= 1` multiplies by `phi(2^{-l} |xi|)`; band 0 is
//! the low block `chi(|xi|)`, so that bands `0..=L` telescope to
//! `chi(2^{-L} |xi|)`.
//!
//! Two band ranges are in use. Projections of grid functions stop at
//! `log2(N/4)`, which is exact for functions supported in `|xi| <= N/4`.
//! Projections of a symbol in its frequency variable act on the conjugate
//! variable of the xi-lattice, whose reach is `sqrt(dim) N/2`, and run up to
//! the first band covering it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, check_exponent, counting_norm, fft_nd, freq_radius, GridFn};
use crate::symbols::Symbol;

/// Dyadic scale index `l` of a Littlewood-Paley band.
pub type BandIndex = usize;

/// `b(t) = exp(-1/t)` for `t > 0`, else 0.
fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = bump(t);
        a / (a + bump(1.0 - t))
    }
}

/// The canonical pair `(chi, phi)` generating every dyadic projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DyadicCutoff;

impl DyadicCutoff {
    #[inline]
    pub fn chi(&self, t: f64) -> f64 {
        chi(t)
    }

    #[inline]
    pub fn phi(&self, t: f64) -> f64 {
        phi(t)
    }
}

pub fn make_cutoff() -> DyadicCutoff {
    DyadicCutoff
}

#[inline]
pub fn chi(t: f64) -> f64 {
    1.0 - smooth_step(t.abs() - 1.0)
}

#[inline]
pub fn phi(t: f64) -> f64 {
    chi(t) - chi(2.0 * t)
}

/// Multiplier of band `l` at radius `r`: `chi(r)` for `l = 0`, else `phi(2^{-l} r)`.
#[inline]
pub fn band_multiplier(l: BandIndex, r: f64) -> f64 {
    if l == 0 {
        chi(r)
    } else {
        phi(r / (1u64 << l) as f64)
    }
}

/// Largest band for grid functions: `log2(N/4)`.
pub fn max_band(n: usize) -> Result<BandIndex> {
    Ok(grid::check_size(n)? as usize - 2)
}

/// Largest band for projections in the frequency variable of a symbol.
pub fn max_xi_band(n: usize, dim: usize) -> Result<BandIndex> {
    let log = grid::check_size(n)? as usize;
    Ok(if dim == 1 { log - 1 } else { log })
}

fn check_band(l: BandIndex, max: BandIndex) -> Result<()> {
    if l > max {
        Err(Error::Band { band: l, max })
    } else {
        Ok(())
    }
}

/// Normalized forward DFT of a sample block (a copy).
pub(crate) fn spectrum_of(samples: &[Complex64], n: usize, dim: usize) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    fft_nd(&mut buf, n, dim, false);
    let s = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Inverse of `spectrum_of` after multiplying by the band-`l` multiplier.
pub(crate) fn band_from_spectrum(spec: &[Complex64], n: usize, dim: usize, l: BandIndex) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> =
        spec.iter().enumerate().map(|(k, c)| c * band_multiplier(l, freq_radius(k, n, dim))).collect();
    fft_nd(&mut buf, n, dim, true);
    buf
}

/// All band pieces `0..=max` of a sample block, sharing one forward transform.
pub(crate) fn band_pieces(samples: &[Complex64], n: usize, dim: usize, max: BandIndex) -> Vec<Vec<Complex64>> {
    let spec = spectrum_of(samples, n, dim);
    (0..=max).map(|l| band_from_spectrum(&spec, n, dim, l)).collect()
}

/// `P_l f`, with `l = 0` the low block `P_{<=0}`.
pub fn project_band(f: &GridFn, l: BandIndex) -> Result<GridFn> {
    check_band(l, max_band(f.n())?)?;
    let spec = spectrum_of(f.values(), f.n(), f.dim());
    GridFn::new(f.dim(), f.n(), band_from_spectrum(&spec, f.n(), f.dim(), l))
}

/// Low block `P_{<=0}` with multiplier `chi(|xi|)`.
pub fn project_low(f: &GridFn) -> Result<GridFn> {
    project_band(f, 0)
}

/// `P_l^xi sigma`: band-pass of every row `sigma(x_i, .)` in the variable
/// conjugate to xi, with the xi-lattice identified with a torus of length N.
pub fn project_band_in_xi(sigma: &Symbol, l: BandIndex) -> Result<Symbol> {
    let (n, dim) = (sigma.n(), sigma.dim());
    check_band(l, max_xi_band(n, dim)?)?;
    let rows: Vec<Complex64> = sigma
        .values()
        .par_chunks(sigma.row_len())
        .flat_map_iter(|row| {
            let spec = spectrum_of(row, n, dim);
            band_from_spectrum(&spec, n, dim, l)
        })
        .collect();
    Symbol::from_table(dim, n, rows, None)
}

fn check_q(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        Err(Error::Exponent(format!("q = {q} must satisfy q >= 1")))
    } else {
        Ok(())
    }
}

/// Weighted `l^q` sum of the terms `2^{l s} ||P_l f||_p`.
pub(crate) fn lq_sum(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `(sum_{l=0}^{L} 2^{l s q} ||P_l f||_{L^p}^q)^{1/q}` with the low block at `l = 0`.
pub fn besov_quantity(f: &GridFn, s: f64, p: f64, q: f64) -> Result<f64> {
    check_exponent(p)?;
    check_q(q)?;
    let max = max_band(f.n())?;
    let pieces = band_pieces(f.values(), f.n(), f.dim(), max);
    let mut terms = Vec::with_capacity(pieces.len());
    for (l, piece) in pieces.into_iter().enumerate() {
        let g = GridFn::new(f.dim(), f.n(), piece)?;
        terms.push(2f64.powf(l as f64 * s) * grid::lp_norm(&g, p)?);
    }
    Ok(lq_sum(terms.into_iter(), q))
}

/// `||P_l f||_q / (2^{l n (1/p - 1/q)} ||P_l f||_p)`; 0 when `P_l f` vanishes.
pub fn bernstein_ratio(f: &GridFn, l: BandIndex, p: f64, q: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(q > p) {
        return Err(Error::Exponent(format!("need p < q, got p = {p}, q = {q}")));
    }
    let piece = project_band(f, l)?;
    let denom = grid::lp_norm(&piece, p)?;
    if denom <= 1e-300 || counting_norm(piece.values(), f64::INFINITY) < 1e-14 {
        return Ok(0.0);
    }
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let weight = 2f64.powf(l as f64 * f.dim() as f64 * (1.0 / p - inv_q));
    Ok(grid::lp_norm(&piece, q)? / (weight * denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inverse_transform, lp_norm, Spectrum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn band_limited(dim: usize, n: usize, radius: f64, seed: u64) -> GridFn {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Spectrum::zeros(dim, n).unwrap();
        for (k, c) in s.coeffs_mut().iter_mut().enumerate() {
            if freq_radius(k, n, dim) <= radius {
                *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        inverse_transform(&s)
    }

    #[test]
    fn cutoff_plateau_and_support() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(-1.0), 1.0);
        assert_eq!(chi(3.0), 0.0);
        assert_eq!(chi(2.0), 0.0);
        for t in [0.0, 0.3, 0.49, 2.01, 5.0, -3.0] {
            assert_eq!(phi(t), 0.0, "phi({t})");
        }
        assert_eq!(phi(1.0), 1.0);
        let c = make_cutoff();
        assert_eq!(c.phi(1.3), phi(1.3));
    }

    #[test]
    fn partition_of_unity_on_the_line() {
        for t in [1.37, 0.01, 17.0, 123.456, -2.5] {
            let s: f64 = (-20..=20).map(|k| phi(2f64.powi(-k) * t)).sum();
            assert!((s - 1.0).abs() < 1e-10, "t = {t}: {s}");
        }
    }

    #[test]
    fn partition_of_unity_on_the_lattice() {
        let n = 1024;
        let max = max_band(n).unwrap();
        for xi in 1..=(n / 4) {
            let r = xi as f64;
            let s: f64 = (0..=max).map(|l| band_multiplier(l, r)).sum();
            assert!((s - 1.0).abs() < 1e-10, "xi {xi}");
        }
    }

    #[test]
    fn tone_at_band_center_is_reproduced() {
        let f = GridFn::tone(1, 256, [16, 0]).unwrap();
        let p = project_band(&f, 4).unwrap();
        assert!(p.max_abs_diff(&f).unwrap() < 1e-12);
        let c = GridFn::constant(1, 256, 1.0.into()).unwrap();
        for l in 1..=max_band(256).unwrap() {
            assert!(lp_norm(&project_band(&c, l).unwrap(), f64::INFINITY).unwrap() < 1e-14);
        }
        assert!(matches!(project_band(&c, 7), Err(Error::Band { band: 7, max: 6 })));
    }

    #[test]
    fn reconstruction_1d_and_2d() {
        for (dim, n) in [(1, 512), (2, 64)] {
            let f = band_limited(dim, n, n as f64 / 4.0, 3);
            let mut acc = GridFn::zeros(dim, n).unwrap();
            for l in 0..=max_band(n).unwrap() {
                acc = acc.add(&project_band(&f, l).unwrap()).unwrap();
            }
            assert!(acc.max_abs_diff(&f).unwrap() < 1e-10);
        }
    }

    #[test]
    fn almost_orthogonality_is_exact() {
        let n = 256;
        let f = band_limited(1, n, 64.0, 9);
        for l in 0..=6usize {
            for m in (l + 2)..=6 {
                let pp = project_band(&project_band(&f, l).unwrap(), m).unwrap();
                assert!(lp_norm(&pp, f64::INFINITY).unwrap() < 1e-13, "{l} {m}");
            }
        }
    }

    #[test]
    fn besov_cases() {
        let one = GridFn::constant(1, 256, 1.0.into()).unwrap();
        for (s, p, q) in [(0.0, 2.0, 1.0), (1.5, 1.0, 2.0), (-1.0, 4.0, f64::INFINITY)] {
            assert!((besov_quantity(&one, s, p, q).unwrap() - 1.0).abs() < 1e-12);
        }
        let tone = GridFn::tone(1, 256, [32, 0]).unwrap();
        let b = besov_quantity(&tone, 0.75, 2.0, 1.0).unwrap();
        assert!((b - 2f64.powf(5.0 * 0.75)).abs() < 1e-9);
        assert!(besov_quantity(&tone, 0.0, 0.5, 1.0).is_err());
        assert!(besov_quantity(&tone, 0.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn square_function_equivalence() {
        // s = 0, p = q = 2 against the direct L2 norm
        for seed in 0..10 {
            let f = band_limited(1, 512, 128.0, seed);
            let b = besov_quantity(&f, 0.0, 2.0, 2.0).unwrap();
            let l2 = lp_norm(&f, 2.0).unwrap();
            assert!((b / l2 - 1.0).abs() < 0.15, "seed {seed}: {}", b / l2);
        }
    }

    #[test]
    fn bernstein_cases() {
        let zero = GridFn::zeros(1, 128).unwrap();
        assert_eq!(bernstein_ratio(&zero, 3, 1.0, 2.0).unwrap(), 0.0);
        for l in 1..=5 {
            let t = GridFn::tone(1, 128, [1 << l, 0]).unwrap();
            let r = bernstein_ratio(&t, l, 2.0, f64::INFINITY).unwrap();
            assert!((r - 2f64.powf(-(l as f64) / 2.0)).abs() < 1e-12);
        }
        assert!(bernstein_ratio(&zero, 1, 2.0, 2.0).is_err());
    }

    #[test]
    fn project_in_xi_examples() {
        let n = 64;
        let c = Symbol::from_function(|_, _| Complex64::new(2.0, 0.0), 1, n).unwrap();
        for l in 1..=max_xi_band(n, 1).unwrap() {
            let p = project_band_in_xi(&c, l).unwrap();
            assert!(p.values().iter().all(|v| v.norm() < 1e-13));
        }
        let a = 8i64;
        let tone = Symbol::from_function(
            |_, xi| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (xi[0] * a) as f64 / n as f64),
            1,
            n,
        )
        .unwrap();
        let p = project_band_in_xi(&tone, 3).unwrap();
        let diff = p.values().iter().zip(tone.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!(project_band_in_xi(&tone, 5).is_ok());
        assert!(project_band_in_xi(&tone, 6).is_err());
    }

    #[test]
    fn xi_reconstruction() {
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table: Vec<Complex64> = (0..n * n).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let s = Symbol::from_table(1, n, table, None).unwrap();
        let mut acc = vec![Complex64::default(); n * n];
        for l in 0..=max_xi_band(n, 1).unwrap() {
            let p = project_band_in_xi(&s, l).unwrap();
            acc.iter_mut().zip(p.values()).for_each(|(a, b)| *a += b);
        }
        let err = acc.iter().zip(s.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }
}
