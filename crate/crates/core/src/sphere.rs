//! Homogeneous symbols `q(x, xi/|xi|)` in the plane, sampled on the circle.
//!
//! Circular harmonics are the tones `e^{i k theta}` and the band of `|k|`
//! plays the role of the eigenvalue index. Band projections reuse the dyadic
//! cutoff of the grid transforms with `M` angular samples.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, check_exponent, freq_vec};
use crate::lp_decomp::{band_pieces, phi, BandIndex};
use crate::symbols::{psi, DirectionField, FieldKind, Symbol, SymbolTag};

#[derive(Debug, Clone, PartialEq)]
pub struct SphereSymbol {
    n: usize,
    m: usize,
    values: Vec<Complex64>,
}

impl SphereSymbol {
    /// Rows `q(x_i, theta_j)`, `theta_j = 2 pi j / M`, one per point of the `N x N` grid.
    pub fn new(n: usize, m: usize, values: Vec<Complex64>) -> Result<Self> {
        grid::check_size(n)?;
        grid::check_size(m)?;
        if values.len() != n * n * m {
            return Err(Error::Length { expected: n * n * m, actual: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter("non-finite sphere symbol".into()));
        }
        Ok(SphereSymbol { n, m, values })
    }

    pub fn from_fn(n: usize, m: usize, gen: impl Fn(usize, f64) -> Complex64 + Sync) -> Result<Self> {
        grid::check_size(n)?;
        grid::check_size(m)?;
        let mut values = vec![Complex64::default(); n * n * m];
        values.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = gen(i, 2.0 * PI * j as f64 / m as f64);
            }
        });
        SphereSymbol::new(n, m, values)
    }

    /// `psi(<u(x), theta> / delta)`, the angular part of the directional symbol.
    pub fn directional(delta: f64, u: &DirectionField, m: usize) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("delta = {delta} must be positive")));
        }
        if u.kind() != FieldKind::Angle {
            return Err(Error::Parameter("expected an angle field".into()));
        }
        SphereSymbol::from_fn(u.n(), m, |i, t| psi((t - u.values()[i]).cos() / delta).into())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    /// Last band, `log2(M/2)`; bands `0..=max_band` telescope to the identity.
    pub fn max_band(&self) -> BandIndex {
        self.m.trailing_zeros() as usize - 1
    }
}

/// Band pieces `0..=max` of one circle row.
pub fn circular_band_pieces(row: &[Complex64], max: BandIndex) -> Vec<Vec<Complex64>> {
    band_pieces(row, row.len(), 1, max)
}

/// `P_m^theta q` row by row.
pub fn circular_band_project(q: &SphereSymbol, band: BandIndex) -> Result<SphereSymbol> {
    if band > q.max_band() {
        return Err(Error::Band { band, max: q.max_band() });
    }
    let m = q.m;
    let values = q
        .values
        .par_chunks(m)
        .flat_map_iter(|row| {
            let mut spec = row.to_vec();
            crate::grid::fft_nd(&mut spec, m, 1, false);
            for (k, c) in spec.iter_mut().enumerate() {
                let r = grid::freq(k, m).unsigned_abs() as f64;
                *c *= crate::lp_decomp::band_multiplier(band, r) / m as f64;
            }
            crate::grid::fft_nd(&mut spec, m, 1, true);
            spec
        })
        .collect();
    SphereSymbol::new(q.n, m, values)
}

/// Trapezoid `L^p(S^1)` norm with `d theta`; `p = inf` gives the max.
pub fn sphere_lp_norm(row: &[Complex64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(row.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let h = 2.0 * PI / row.len() as f64;
    Ok((h * row.iter().map(|v| v.norm().powf(p)).sum::<f64>()).powf(1.0 / p))
}

/// Centered periodic difference in theta.
pub fn angular_derivative(row: &[Complex64]) -> Vec<Complex64> {
    let m = row.len();
    let h = 2.0 * PI / m as f64;
    (0..m).map(|j| (row[(j + 1) % m] - row[(j + m - 1) % m]) / (2.0 * h)).collect()
}

/// `||q||_{L^1} + ||q'||_{L^1}` with a centered difference for `q'`.
pub fn w11_norm(row: &[Complex64]) -> f64 {
    sphere_lp_norm(row, 1.0).expect("p = 1") + sphere_lp_norm(&angular_derivative(row), 1.0).expect("p = 1")
}

/// `||P_m q||_{q_exp} / (2^{m (1/p - 1/q_exp)} ||P_m q||_p)`; 0 when `P_m q` vanishes.
pub fn sphere_bernstein_ratio(row: &[Complex64], band: BandIndex, p: f64, q_exp: f64) -> Result<f64> {
    if !(p > 1.0 && q_exp > p && q_exp.is_finite()) {
        return Err(Error::Exponent(format!("need 1 < p < q < inf, got p = {p}, q = {q_exp}")));
    }
    let max = row.len().trailing_zeros() as usize - 1;
    if band > max {
        return Err(Error::Band { band, max });
    }
    let piece = circular_band_pieces(row, max).swap_remove(band);
    let den = sphere_lp_norm(&piece, p)?;
    if den < 1e-14 {
        return Ok(0.0);
    }
    Ok(sphere_lp_norm(&piece, q_exp)? / (2f64.powf(band as f64 * (1.0 / p - 1.0 / q_exp)) * den))
}

/// Linear interpolation of a periodic row at angle `t`.
fn interpolate(row: &[Complex64], t: f64) -> Complex64 {
    let m = row.len();
    let pos = t.rem_euclid(2.0 * PI) / (2.0 * PI) * m as f64;
    let j = pos.floor() as usize % m;
    let w = pos - pos.floor();
    row[j] * (1.0 - w) + row[(j + 1) % m] * w
}

/// `sigma(x, xi) = q(x, angle(xi)) phi(|xi| / 2^{k0})`, zero at the origin,
/// with `q` linearly interpolated between angular samples.
pub fn lift_to_symbol(q: &SphereSymbol, k0: u32) -> Result<Symbol> {
    let n = q.n;
    let c = 1usize << k0;
    if c * 8 > n {
        return Err(Error::Parameter(format!("2^k0 = {c} exceeds N/8 = {}", n / 8)));
    }
    if q.m < 8 * c {
        return Err(Error::Resolution(format!("M = {} below 8 * 2^k0 = {}", q.m, 8 * c)));
    }
    let row_len = n * n;
    let mut values = vec![Complex64::default(); row_len * row_len];
    values.par_chunks_mut(row_len).enumerate().for_each(|(i, out)| {
        let row = q.row(i);
        for (k, v) in out.iter_mut().enumerate() {
            let xi = freq_vec(k, n, 2);
            if xi == [0, 0] {
                continue;
            }
            let r = ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt();
            let a = phi(r / c as f64);
            if a != 0.0 {
                *v = interpolate(row, (xi[1] as f64).atan2(xi[0] as f64)) * a;
            }
        }
    });
    let tag = SymbolTag::new("lifted").with("k0", k0 as f64).with("m", q.m as f64);
    Symbol::from_table(2, n, values, Some(tag))
}
