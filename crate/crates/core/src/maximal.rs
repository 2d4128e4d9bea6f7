//! Hardy-Littlewood maximal function and the thin-multiplier maximal operators.
//!
//! The maximal function takes the largest average of `|f|` over periodic
//! windows (squares in 2D) of dyadic side `2^j` cells that contain the point,
//! at every position. This is comparable to the uncentered maximal function
//! within a factor `2^dim`.

use std::collections::VecDeque;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, forward_transform, freq_radius, freq_vec, GridFn};
use crate::lp_decomp::{band_pieces, max_band, phi};
use crate::pdo::apply_multiplier;

/// Periodic sums over windows `[s, s + len)`.
fn window_sums(v: &[f64], len: usize) -> Vec<f64> {
    let n = v.len();
    let mut sums = vec![0.0; n];
    let mut acc: f64 = v[..len].iter().sum();
    for s in 0..n {
        sums[s] = acc;
        acc += v[(s + len) % n] - v[s];
    }
    sums
}

/// `out[x] = max_{s in [x - len + 1, x]} a[s]` on the cycle.
fn sliding_max_back(a: &[f64], len: usize) -> Vec<f64> {
    let n = a.len();
    if len >= n {
        let m = a.iter().copied().fold(f64::MIN, f64::max);
        return vec![m; n];
    }
    // ext[t] = a[t - (len - 1)], windows ext[x..x + len]
    let ext = |t: usize| a[(t + n - (len - 1)) % n];
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    for t in 0..(n + len - 1) {
        while dq.back().is_some_and(|&b| ext(b) <= ext(t)) {
            dq.pop_back();
        }
        dq.push_back(t);
        if dq.front().is_some_and(|&f| f + len <= t) {
            dq.pop_front();
        }
        if t + 1 >= len {
            out[t + 1 - len] = ext(dq[0]);
        }
    }
    out
}

fn for_axis(buf: &mut [f64], n: usize, axis: usize, op: impl Fn(&[f64]) -> Vec<f64> + Sync) {
    let lines: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let line: Vec<f64> = (0..n).map(|c| if axis == 1 { buf[r * n + c] } else { buf[c * n + r] }).collect();
            op(&line)
        })
        .collect();
    for (r, line) in lines.into_iter().enumerate() {
        for (c, v) in line.into_iter().enumerate() {
            if axis == 1 {
                buf[r * n + c] = v;
            } else {
                buf[c * n + r] = v;
            }
        }
    }
}

/// Dyadic-side maximal function of `|f|`.
pub fn hl_maximal(f: &GridFn) -> GridFn {
    let (n, dim) = (f.n(), f.dim());
    let abs: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let mut best = abs.clone();
    let mut len = 1;
    while len <= n {
        let area = (len as f64).powi(dim as i32);
        let m = if dim == 1 {
            let avg: Vec<f64> = window_sums(&abs, len).into_iter().map(|s| s / area).collect();
            sliding_max_back(&avg, len)
        } else {
            let mut buf = abs.clone();
            for_axis(&mut buf, n, 1, |l| window_sums(l, len));
            for_axis(&mut buf, n, 0, |l| window_sums(l, len));
            buf.iter_mut().for_each(|v| *v /= area);
            for_axis(&mut buf, n, 1, |l| sliding_max_back(l, len));
            for_axis(&mut buf, n, 0, |l| sliding_max_back(l, len));
            buf
        };
        best.iter_mut().zip(&m).for_each(|(b, v)| *b = b.max(*v));
        len *= 2;
    }
    GridFn::new(dim, n, best.into_iter().map(Complex64::from).collect()).expect("shape preserved")
}

/// `max_k |P_k f|` pointwise, low block included.
pub fn band_sup(f: &GridFn) -> Result<GridFn> {
    let max = max_band(f.n())?;
    let pieces = band_pieces(f.values(), f.n(), f.dim(), max);
    let mut out = vec![0.0f64; f.len()];
    for p in &pieces {
        out.iter_mut().zip(p).for_each(|(o, v)| *o = o.max(v.norm()));
    }
    GridFn::new(f.dim(), f.n(), out.into_iter().map(Complex64::from).collect())
}

/// Log-spaced dilations `lo, lo r, lo r^2, ...` up to `hi`, `r = 1 + 2^{-m-2}`.
pub fn log_spaced_u(lo: f64, hi: f64, m: u32) -> Vec<f64> {
    let r = 1.0 + 2f64.powi(-(m as i32) - 2);
    let mut u = vec![lo];
    while *u.last().unwrap() < hi {
        let next = u.last().unwrap() * r;
        u.push(next);
    }
    u
}

/// Evenly spaced directions in `[0, pi)` with step at most `2^{-m-2}`.
pub fn angle_grid(m: u32) -> Vec<f64> {
    let step = 2f64.powi(-(m as i32) - 2);
    let count = (std::f64::consts::PI / step).ceil() as usize;
    (0..count).map(|k| std::f64::consts::PI * k as f64 / count as f64).collect()
}

fn check_band_limited(f: &GridFn) -> Result<()> {
    let spec = forward_transform(f);
    let quarter = f.n() as f64 / 4.0;
    let total = spec.l2_norm().max(1e-300);
    let outside: f64 = spec
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(k, _)| freq_radius(*k, f.n(), f.dim()) > quarter)
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if outside > 1e-10 * total {
        return Err(Error::Parameter(format!("f is not band-limited to |xi| <= N/4 (outside energy {outside:e})")));
    }
    Ok(())
}

fn max_over<T: Sync>(params: &[T], len: usize, pass: impl Fn(&T) -> Result<Vec<f64>> + Sync) -> Result<Vec<f64>> {
    params
        .par_iter()
        .map(|p| pass(p))
        .try_reduce(|| vec![0.0; len], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect()))
}

/// `phi(2^m (1 - xi^2 / u^2))` in FFT order.
pub fn carleson_multiplier(m: u32, u: f64, n: usize) -> Vec<Complex64> {
    let w = (1u64 << m) as f64;
    (0..n)
        .map(|k| {
            let t = grid::freq(k, n) as f64;
            phi(w * (1.0 - t * t / (u * u))).into()
        })
        .collect()
}

/// `sup_u |F^{-1}(phi(2^m (1 - xi^2/u^2)) f^)|` over the sampled dilations.
pub fn carleson_thin_max(m: u32, f: &GridFn, u_samples: &[f64]) -> Result<GridFn> {
    if f.dim() != 1 {
        return Err(Error::Dimension(f.dim()));
    }
    if m > 40 || u_samples.is_empty() {
        return Err(Error::Parameter("need m <= 40 and at least one u".into()));
    }
    let ratio = 1.0 + 2f64.powi(-(m as i32) - 2);
    for w in u_samples.windows(2) {
        if !(w[0] > 0.0 && w[1] > w[0] && w[1] / w[0] <= ratio * (1.0 + 1e-12)) {
            return Err(Error::Resolution(format!(
                "u grid step {} exceeds the resolution 1 + 2^-{}",
                w[1] / w[0],
                m + 2
            )));
        }
    }
    check_band_limited(f)?;
    let n = f.n();
    let out = max_over(u_samples, f.len(), |&u| {
        let g = apply_multiplier(&carleson_multiplier(m, u, n), f)?;
        Ok(g.values().iter().map(|v| v.norm()).collect())
    })?;
    GridFn::new(1, n, out.into_iter().map(Complex64::from).collect())
}

/// `phi(2^m <u, xi/|xi|>) phi(|xi| / 2^{k0})` for the direction at `angle`, FFT order.
pub fn thin_circle_multiplier(m: u32, k0: u32, angle: f64, n: usize) -> Vec<Complex64> {
    let w = (1u64 << m) as f64;
    let c = (1u64 << k0) as f64;
    let e = [angle.cos(), angle.sin()];
    (0..n * n)
        .map(|k| {
            let xi = freq_vec(k, n, 2);
            let r = freq_radius(k, n, 2);
            if r == 0.0 {
                return Complex64::default();
            }
            let d = (e[0] * xi[0] as f64 + e[1] * xi[1] as f64) / r;
            (phi(w * d) * phi(r / c)).into()
        })
        .collect()
}

/// `sup_u |T_{m,u} f|` over sampled directions in `[0, pi)`.
pub fn thin_circle_max(m: u32, k0: u32, f: &GridFn, u_angles: &[f64]) -> Result<GridFn> {
    if f.dim() != 2 {
        return Err(Error::Dimension(f.dim()));
    }
    let n = f.n();
    if (1usize << k0) * 8 > n {
        return Err(Error::Resolution(format!("annulus 2^{k0} exceeds N/8 = {}", n / 8)));
    }
    validate_angles(m, u_angles)?;
    let out = max_over(u_angles, f.len(), |&a| {
        let g = apply_multiplier(&thin_circle_multiplier(m, k0, a, n), f)?;
        Ok(g.values().iter().map(|v| v.norm()).collect())
    })?;
    GridFn::new(2, n, out.into_iter().map(Complex64::from).collect())
}

/// Ascent lower bound for `||sup_u |T_u f|||_2 / ||f||_2` over the sampled
/// directions: fix the maximizing direction at each point, then take a power
/// step of that linearized operator. The ratio never decreases across steps.
pub fn thin_circle_ascent(m: u32, k0: u32, f: &GridFn, u_angles: &[f64], steps: usize) -> Result<(f64, GridFn)> {
    if f.dim() != 2 {
        return Err(Error::Dimension(f.dim()));
    }
    let n = f.n();
    if (1usize << k0) * 8 > n {
        return Err(Error::Resolution(format!("annulus 2^{k0} exceeds N/8 = {}", n / 8)));
    }
    validate_angles(m, u_angles)?;
    let mults: Vec<Vec<Complex64>> = u_angles.par_iter().map(|&a| thin_circle_multiplier(m, k0, a, n)).collect();
    let len = f.len();
    let mut cur = f.clone();
    let mut best = 0.0f64;
    for _ in 0..=steps {
        let norm = grid::lp_norm(&cur, 2.0)?;
        if norm == 0.0 {
            break;
        }
        let outs: Vec<GridFn> = mults.par_iter().map(|h| apply_multiplier(h, &cur)).collect::<Result<_>>()?;
        let mut arg = vec![0usize; len];
        let mut lin = vec![Complex64::default(); len];
        for (u, o) in outs.iter().enumerate() {
            for (x, v) in o.values().iter().enumerate() {
                if v.norm() > lin[x].norm() {
                    lin[x] = *v;
                    arg[x] = u;
                }
            }
        }
        let lin = GridFn::new(2, n, lin)?;
        best = best.max(grid::lp_norm(&lin, 2.0)? / norm);
        let parts: Vec<Option<GridFn>> = (0..mults.len())
            .into_par_iter()
            .map(|u| {
                if !arg.contains(&u) {
                    return Ok(None);
                }
                let masked: Vec<Complex64> = lin
                    .values()
                    .iter()
                    .zip(&arg)
                    .map(|(v, a)| if *a == u { *v } else { Complex64::default() })
                    .collect();
                let conj: Vec<Complex64> = mults[u].iter().map(|h| h.conj()).collect();
                apply_multiplier(&conj, &GridFn::new(2, n, masked)?).map(Some)
            })
            .collect::<Result<_>>()?;
        let mut next = GridFn::zeros(2, n)?;
        for p in parts.into_iter().flatten() {
            next = next.add(&p)?;
        }
        cur = next;
    }
    Ok((best, cur))
}

pub fn validate_angles(m: u32, u_angles: &[f64]) -> Result<()> {
    if m > 40 || u_angles.is_empty() {
        return Err(Error::Parameter("need m <= 40 and at least one direction".into()));
    }
    let step = 2f64.powi(-(m as i32) - 2) * (1.0 + 1e-12);
    let pi = std::f64::consts::PI;
    let mut gaps: Vec<f64> = u_angles.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(u_angles[0] + pi - u_angles[u_angles.len() - 1]);
    if u_angles.iter().any(|a| !(0.0..pi).contains(a)) || gaps.iter().any(|g| !(*g > 0.0 && *g <= step)) {
        return Err(Error::Resolution(format!("direction grid must be increasing in [0, pi) with step <= 2^-{}", m + 2)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    /// Smallest `C` with `lhs <= C rhs` where `rhs > tol`.
    pub constant: f64,
    /// Points where `rhs <= tol` but `lhs > tol`.
    pub flagged: usize,
}

pub const DOMINATION_TOL: f64 = 1e-12;

pub fn domination_check(lhs: &GridFn, rhs: &GridFn) -> Result<Domination> {
    lhs.check_shape(rhs)?;
    let mut constant = 0.0f64;
    let mut flagged = 0;
    for (a, b) in lhs.values().iter().zip(rhs.values()) {
        let (a, b) = (a.norm(), b.norm());
        if b > DOMINATION_TOL {
            constant = constant.max(a / b);
        } else if a > DOMINATION_TOL {
            flagged += 1;
        }
    }
    Ok(Domination { constant, flagged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub values: Vec<f64>,
    pub dominating: Vec<f64>,
    pub constant: f64,
    pub u_grid: Vec<f64>,
}

impl MaximalReport {
    /// `|T_m f|` against `M(band_sup f)` for the Carleson operator.
    pub fn carleson(m: u32, f: &GridFn, u_samples: &[f64]) -> Result<Self> {
        let lhs = carleson_thin_max(m, f, u_samples)?;
        let rhs = hl_maximal(&band_sup(f)?);
        let d = domination_check(&lhs, &rhs)?;
        if d.flagged > 0 {
            return Err(Error::Parameter(format!("{} points with vanishing dominating field", d.flagged)));
        }
        Ok(MaximalReport {
            values: lhs.values().iter().map(|v| v.re).collect(),
            dominating: rhs.values().iter().map(|v| v.re).collect(),
            constant: d.constant,
            u_grid: u_samples.to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRow {
    pub m: u32,
    pub measured_c: f64,
    pub u_grid_size: usize,
}

/// CSV with columns `m, measured_C, u_grid_size`.
pub fn write_constants_csv<W: Write>(rows: &[ConstantRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "measured_C", "u_grid_size"]).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record([r.m.to_string(), r.measured_c.to_string(), r.u_grid_size.to_string()])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
