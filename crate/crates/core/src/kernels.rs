//! Spherical-cap kernels, their decay and `L^1` certificates, and cone partitions.
//!
//! `K_{l,theta}` is the inverse transform of
//! `phi(2^l |xi/|xi| - theta|) phi(|xi| / 2^{k0})`, with the vector difference
//! evaluated literally. On the torus the kernel is periodized, so decay is
//! only measured up to half a period.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, freq_radius, freq_vec, lp_norm, GridFn, Spectrum};
use crate::lp_decomp::{chi, phi};
use crate::pdo::apply_multiplier;

#[derive(Debug, Clone, PartialEq)]
pub struct CapKernel {
    pub l: u32,
    pub theta: f64,
    pub k0: u32,
    pub samples: GridFn,
}

/// Cap scale must satisfy `2^l <= 2^{k0+1}`, so that the cap spans lattice points.
pub fn check_cap(l: u32, k0: u32, n: usize) -> Result<()> {
    grid::check_size(n)?;
    if (1usize << k0) * 16 > n {
        return Err(Error::Parameter(format!("2^k0 = {} exceeds N/16 = {}", 1usize << k0, n / 16)));
    }
    if l > k0 + 1 {
        return Err(Error::Resolution(format!("cap 2^-{l} unresolved on the annulus 2^{k0}")));
    }
    Ok(())
}

fn cap_multiplier(l: u32, theta: f64, k0: u32, n: usize) -> Vec<Complex64> {
    let w = (1u64 << l) as f64;
    let c = (1u64 << k0) as f64;
    let e = [theta.cos(), theta.sin()];
    (0..n * n)
        .map(|k| {
            let r = freq_radius(k, n, 2);
            if r == 0.0 {
                return Complex64::default();
            }
            let xi = freq_vec(k, n, 2);
            let d = ((xi[0] as f64 / r - e[0]).powi(2) + (xi[1] as f64 / r - e[1]).powi(2)).sqrt();
            (phi(w * d) * phi(r / c)).into()
        })
        .collect()
}

pub fn cap_kernel(l: u32, theta: f64, k0: u32, n: usize) -> Result<CapKernel> {
    check_cap(l, k0, n)?;
    let spec = Spectrum::new(2, n, cap_multiplier(l, theta, k0, n))?;
    Ok(CapKernel { l, theta, k0, samples: grid::inverse_transform(&spec) })
}

/// Minimal-image coordinates of the flat index `i` in cells.
fn centered(i: usize, n: usize) -> [f64; 2] {
    let c = |v: usize| grid::freq(v, n) as f64;
    [c(i / n), c(i % n)]
}

/// `|K|^2`-weighted RMS extent along `theta` and along `theta^perp`, in cells.
pub fn onset_widths(k: &CapKernel) -> [f64; 2] {
    let n = k.samples.n();
    let e = [k.theta.cos(), k.theta.sin()];
    let (mut wa, mut wt, mut tot) = (0.0, 0.0, 0.0);
    for (i, v) in k.samples.values().iter().enumerate() {
        let x = centered(i, n);
        let a = x[0] * e[0] + x[1] * e[1];
        let t = -x[0] * e[1] + x[1] * e[0];
        let w = v.norm_sqr();
        wa += w * a * a;
        wt += w * t * t;
        tot += w;
    }
    [(wa / tot).sqrt(), (wt / tot).sqrt()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub shell: u32,
    pub axis: char,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub along_exponent: f64,
    pub transverse_exponent: f64,
    /// Fitted envelope constant at unit distance, along `theta`.
    pub constant: f64,
    pub onset_along: f64,
    pub onset_transverse: f64,
    pub n_exp: f64,
    pub passed: bool,
    /// Set when `|K|` sits below the noise floor past the first shell.
    pub trivial: bool,
    /// Cleared when the onset leaves fewer than two shells inside half a period.
    pub resolved: bool,
    pub shells: Vec<ShellRow>,
}

impl DecayCertificate {
    /// CSV with columns `shell, axis, max_abs`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.shells {
            w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const NOISE_FLOOR: f64 = 1e-14;

/// Shell maxima of `|K|` on the ray through the origin along `dir`, for
/// distances in `[2^s, 2^{s+1})` cells up to half a period.
fn ray_shells(k: &GridFn, dir: [f64; 2]) -> Vec<(u32, f64, f64)> {
    let n = k.n();
    let half = n / 2;
    let mut out = Vec::new();
    let mut s = 0u32;
    while (1usize << s) < half {
        let lo = 1usize << s;
        let hi = (lo * 2).min(half);
        let mut best = 0.0f64;
        for t in lo..hi {
            let p = [(t as f64 * dir[0]).round() as i64, (t as f64 * dir[1]).round() as i64];
            let idx = grid::index_of(p[0], n) * n + grid::index_of(p[1], n);
            best = best.max(k.values()[idx].norm());
        }
        out.push((s, ((lo * hi) as f64).sqrt(), best));
        s += 1;
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
fn log_slope(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0.ln(), a.1 + p.1.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for p in pts {
        num += (p.0.ln() - mx) * (p.1.ln() - my);
        den += (p.0.ln() - mx).powi(2);
    }
    let slope = num / den;
    (slope, (my - slope * mx).exp())
}

/// Fitted decay exponents of shell maxima along `theta` and `theta^perp`,
/// each axis fitted from twice its onset width outwards.
pub fn decay_certificate(k: &CapKernel, n_exp: f64) -> DecayCertificate {
    let e = [k.theta.cos(), k.theta.sin()];
    let perp = [-e[1], e[0]];
    let [oa, ot] = onset_widths(k);
    let peak = k.samples.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let along = ray_shells(&k.samples, e);
    let trans = ray_shells(&k.samples, perp);
    let mut shells = Vec::new();
    for (s, _, v) in &along {
        shells.push(ShellRow { shell: *s, axis: 'a', max_abs: *v });
    }
    for (s, _, v) in &trans {
        shells.push(ShellRow { shell: *s, axis: 't', max_abs: *v });
    }
    let usable = |rows: &[(u32, f64, f64)], onset: f64| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|(_, r, v)| *r >= 2.0 * onset && *v > NOISE_FLOOR * peak)
            .map(|(_, r, v)| (*r, *v))
            .collect()
    };
    let pa = usable(&along, oa);
    let pt = usable(&trans, ot);
    let fit = |pts: &[(f64, f64)]| if pts.len() >= 2 { Some(log_slope(pts)) } else { None };
    let (fa, ft) = (fit(&pa), fit(&pt));
    let trivial = along.iter().chain(&trans).all(|(s, _, v)| *s == 0 || *v <= NOISE_FLOOR * peak);
    let resolved = fa.is_some() && ft.is_some();
    let along_exponent = fa.map(|f| -f.0).unwrap_or(f64::NAN);
    let transverse_exponent = ft.map(|f| -f.0).unwrap_or(f64::NAN);
    let constant = fa.map(|f| f.1).unwrap_or(peak);
    let passed = trivial || (resolved && along_exponent >= n_exp && transverse_exponent >= n_exp);
    DecayCertificate {
        along_exponent,
        transverse_exponent,
        constant,
        onset_along: oa,
        onset_transverse: ot,
        n_exp,
        passed,
        trivial,
        resolved,
        shells,
    }
}

/// `mean |K|`, the `L^1` norm on the unit torus.
pub fn kernel_l1(k: &CapKernel) -> f64 {
    lp_norm(&k.samples, 1.0).expect("p = 1")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Uniformity {
    /// `(l, theta, int |K|)`.
    pub table: Vec<(u32, f64, f64)>,
    pub max: f64,
    pub min: f64,
    pub ratio: f64,
}

pub fn l1_uniformity(ls: &[u32], thetas: &[f64], k0: u32, n: usize) -> Result<L1Uniformity> {
    let pairs: Vec<(u32, f64)> = ls.iter().flat_map(|&l| thetas.iter().map(move |&t| (l, t))).collect();
    if pairs.is_empty() {
        return Err(Error::Parameter("empty (l, theta) sample".into()));
    }
    let table: Vec<(u32, f64, f64)> = pairs
        .par_iter()
        .map(|&(l, t)| cap_kernel(l, t, k0, n).map(|k| (l, t, kernel_l1(&k))))
        .collect::<Result<_>>()?;
    let max = table.iter().map(|r| r.2).fold(0.0, f64::max);
    let min = table.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(L1Uniformity { table, max, min, ratio: max / min })
}

/// Smooth angular partition of unity at scale `2^{-l}` on the annulus `2^{k0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConePartition {
    pub l: u32,
    pub k0: u32,
    pub n: usize,
    pub thetas: Vec<f64>,
    /// `phi_{l,m}` normalized by the bump sum, one lattice table per direction.
    pub bumps: Vec<Vec<f64>>,
}

pub fn cone_count(l: u32) -> usize {
    if l == 0 {
        1
    } else {
        (2.0 * PI * (1u64 << l) as f64).ceil() as usize
    }
}

pub fn cone_partition(l: u32, k0: u32, n: usize) -> Result<ConePartition> {
    check_cap(l, k0, n)?;
    let count = cone_count(l);
    let spacing = 2.0 * PI / count as f64;
    let thetas: Vec<f64> = (0..count).map(|m| m as f64 * spacing).collect();
    let len = n * n;
    let mut raw = vec![vec![0.0; len]; count];
    for k in 0..len {
        let r = freq_radius(k, n, 2);
        if r == 0.0 {
            continue;
        }
        let xi = freq_vec(k, n, 2);
        let w = [xi[0] as f64 / r, xi[1] as f64 / r];
        for (m, t) in thetas.iter().enumerate() {
            let d = ((w[0] - t.cos()).powi(2) + (w[1] - t.sin()).powi(2)).sqrt();
            raw[m][k] = chi(d / (0.625 * spacing));
        }
    }
    for k in 0..len {
        let s: f64 = raw.iter().map(|b| b[k]).sum();
        if s > 0.0 {
            raw.iter_mut().for_each(|b| b[k] /= s);
        }
    }
    Ok(ConePartition { l, k0, n, thetas, bumps: raw })
}

impl ConePartition {
    /// `phi_{l,m}(xi) phi(|xi| / 2^{k0})`.
    pub fn multiplier(&self, m: usize) -> Vec<Complex64> {
        let c = (1u64 << self.k0) as f64;
        self.bumps[m]
            .iter()
            .enumerate()
            .map(|(k, b)| (b * phi(freq_radius(k, self.n, 2) / c)).into())
            .collect()
    }

    /// Largest number of bumps nonzero at one lattice point.
    pub fn max_overlap(&self) -> usize {
        (0..self.n * self.n).map(|k| self.bumps.iter().filter(|b| b[k] > 0.0).count()).max().unwrap_or(0)
    }

    /// Largest `|sum_m phi_{l,m} - 1|` over nonzero lattice points.
    pub fn partition_defect(&self) -> f64 {
        (0..self.n * self.n)
            .filter(|&k| freq_radius(k, self.n, 2) > 0.0)
            .map(|k| (self.bumps.iter().map(|b| b[k]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn project(&self, m: usize, g: &GridFn) -> Result<GridFn> {
        apply_multiplier(&self.multiplier(m), g)
    }
}

/// `||sum_m P_m g_m||_p / (sum_m ||g_m||_p^p)^{1/p}`, `1 <= p <= 2`.
pub fn cone_sum_ratio(part: &ConePartition, gs: &[GridFn], p: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::Exponent(format!("p = {p} must lie in [1, 2]")));
    }
    if gs.len() != part.thetas.len() {
        return Err(Error::Length { expected: part.thetas.len(), actual: gs.len() });
    }
    let mut acc = GridFn::zeros(2, part.n)?;
    let mut den = 0.0;
    for (m, g) in gs.iter().enumerate() {
        acc = acc.add(&part.project(m, g)?)?;
        den += lp_norm(g, p)?.powf(p);
    }
    Ok(lp_norm(&acc, p)? / den.powf(1.0 / p))
}

/// `(sum_m ||P_m g||_q^q)^{1/q} / ||g||_q`, `2 <= q <= inf`.
pub fn cone_square_ratio(part: &ConePartition, g: &GridFn, q: f64) -> Result<f64> {
    if !(q >= 2.0) {
        return Err(Error::Exponent(format!("q = {q} must satisfy q >= 2")));
    }
    let norms: Vec<f64> =
        (0..part.thetas.len()).into_par_iter().map(|m| lp_norm(&part.project(m, g)?, q)).collect::<Result<_>>()?;
    let num = if q.is_infinite() {
        norms.iter().copied().fold(0.0, f64::max)
    } else {
        norms.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    Ok(num / lp_norm(g, q)?)
}
