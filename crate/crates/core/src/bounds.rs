//! Scale-invariant bound quantities of symbols.
//!
//! For a row `sigma(x_i, .)` the band `l` in the frequency variable is taken
//! with respect to the conjugate lattice index `a`, which sits at spatial
//! scale `|a|/N`. Weights are therefore `2^{(l - log2 N) s}`, so that every
//! quantity is unchanged under grid refinement and `sigma = 1` has `B2 = 1`.
//! Frequency-side norms use counting measure on the lattice.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, counting_norm, freq_vec};
use crate::lp_decomp::{band_from_spectrum, max_xi_band, spectrum_of, BandIndex};
use crate::sphere::{circular_band_pieces, sphere_lp_norm, SphereSymbol};
use crate::symbols::{exp_symbol, product_symbol, SeparableSymbol, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub l: BandIndex,
    pub weight: f64,
    pub sup_x_norm: f64,
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub quantity: String,
    pub rows: Vec<BandRow>,
}

impl BandTable {
    fn from_norms(quantity: &str, norms: &[f64], weight: impl Fn(usize) -> f64) -> Self {
        let rows = norms
            .iter()
            .enumerate()
            .map(|(l, &v)| {
                let w = weight(l);
                BandRow { l, weight: w, sup_x_norm: v, term: w * v }
            })
            .collect();
        BandTable { quantity: quantity.to_string(), rows }
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.term).sum()
    }

    /// CSV with columns `l, weight, sup_x_norm, term`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HormanderEntry {
    pub alpha: [usize; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "B2")]
    pub b2: f64,
    #[serde(rename = "B1")]
    pub b1: f64,
    #[serde(rename = "Bq")]
    pub bq: Vec<(f64, f64)>,
    pub hormander: Vec<HormanderEntry>,
    pub homogeneous_p: Option<(f64, f64)>,
    pub radial: Option<f64>,
    pub empirical_norm: Option<f64>,
    pub tables: Vec<BandTable>,
}

impl BoundReport {
    /// B2, B1, the listed `Bq` and the Hormander seminorms up to `alpha_max`.
    pub fn for_symbol(s: &Symbol, qs: &[f64], alpha_max: usize) -> Result<Self> {
        let mut ps = vec![2.0, 1.0];
        for &q in qs {
            check_q(q)?;
            ps.push(q);
        }
        let norms = xi_band_sup_norms(s, &ps);
        let tables: Vec<BandTable> = ps
            .iter()
            .zip(&norms)
            .enumerate()
            .map(|(k, (&p, v))| {
                let name = match k {
                    0 => "B2".to_string(),
                    1 => "B1".to_string(),
                    _ => format!("Bq(q={p})"),
                };
                BandTable::from_norms(&name, v, |l| xi_weight(s, l, s.dim() as f64 / p))
            })
            .collect();
        Ok(BoundReport {
            b2: tables[0].total(),
            b1: tables[1].total(),
            bq: qs.iter().zip(&tables[2..]).map(|(q, t)| (*q, t.total())).collect(),
            hormander: hormander_seminorm(s, alpha_max)?,
            homogeneous_p: None,
            radial: None,
            empirical_norm: None,
            tables,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0 && q <= 2.0) {
        return Err(Error::Exponent(format!("q = {q} must lie in [1, 2]")));
    }
    Ok(())
}

fn xi_weight(s: &Symbol, l: usize, exponent: f64) -> f64 {
    let log_n = s.n().trailing_zeros() as f64;
    2f64.powf((l as f64 - log_n) * exponent)
}

/// Per-row band pieces `P_l^xi` of one row, reduced to counting norms for each `p`.
fn row_band_norms(row: &[Complex64], n: usize, dim: usize, max: usize, ps: &[f64]) -> Vec<Vec<f64>> {
    let spec = spectrum_of(row, n, dim);
    let mut out = vec![vec![0.0; max + 1]; ps.len()];
    for l in 0..=max {
        let piece = band_from_spectrum(&spec, n, dim, l);
        for (k, &p) in ps.iter().enumerate() {
            out[k][l] = counting_norm(&piece, p);
        }
    }
    out
}

/// `[p][l] -> max_i ||P_l^xi sigma(x_i, .)||_{l^p}`.
pub fn xi_band_sup_norms(s: &Symbol, ps: &[f64]) -> Vec<Vec<f64>> {
    let (n, dim) = (s.n(), s.dim());
    let max = max_xi_band(n, dim).expect("symbol grid is validated");
    let empty = || vec![vec![0.0; max + 1]; ps.len()];
    let merge = |mut a: Vec<Vec<f64>>, b: Vec<Vec<f64>>| {
        for (x, y) in a.iter_mut().zip(&b) {
            x.iter_mut().zip(y).for_each(|(u, v)| *u = u.max(*v));
        }
        a
    };
    if let Some(row) = s.x_independent() {
        return row_band_norms(row, n, dim, max, ps);
    }
    s.values()
        .par_chunks(s.row_len())
        .map(|row| row_band_norms(row, n, dim, max, ps))
        .reduce(empty, merge)
}

/// `sum_l 2^{(l - log2 N) s} max_x ||P_l^xi sigma(x, .)||_{l^p}` with its band table.
pub fn xi_besov_table(s: &Symbol, smoothness: f64, p: f64, name: &str) -> Result<BandTable> {
    grid::check_exponent(p)?;
    let norms = xi_band_sup_norms(s, &[p]);
    Ok(BandTable::from_norms(name, &norms[0], |l| xi_weight(s, l, smoothness)))
}

/// B2, weights `2^{l n/2}` and `l^2` norms.
pub fn theorem1_quantity(s: &Symbol) -> Result<f64> {
    Ok(theorem1_table(s)?.total())
}

pub fn theorem1_table(s: &Symbol) -> Result<BandTable> {
    xi_besov_table(s, s.dim() as f64 / 2.0, 2.0, "B2")
}

/// B1, weights `2^{l n}` and `l^1` norms.
pub fn weak11_quantity(s: &Symbol) -> Result<f64> {
    Ok(weak11_table(s)?.total())
}

pub fn weak11_table(s: &Symbol) -> Result<BandTable> {
    xi_besov_table(s, s.dim() as f64, 1.0, "B1")
}

/// Bq, weights `2^{l n/q}` and `l^q` norms, `1 <= q <= 2`.
pub fn lq_quantity(s: &Symbol, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(xi_besov_table(s, s.dim() as f64 / q, q, "Bq")?.total())
}

/// Per band, `max_x ||P_l||_2 / (2^{(l - log2 N) n/2} ||P_l||_1)`.
pub fn xi_bernstein_ratios(s: &Symbol) -> Vec<f64> {
    let (n, dim) = (s.n(), s.dim());
    let max = max_xi_band(n, dim).expect("validated");
    let ratio = |row: &[Complex64]| {
        let r = row_band_norms(row, n, dim, max, &[2.0, 1.0]);
        (0..=max)
            .map(|l| {
                if r[1][l] <= 1e-300 {
                    0.0
                } else {
                    r[0][l] / (xi_weight(s, l, dim as f64 / 2.0) * r[1][l])
                }
            })
            .collect::<Vec<f64>>()
    };
    s.values()
        .par_chunks(s.row_len())
        .map(ratio)
        .reduce(|| vec![0.0; max + 1], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
}

pub const HORMANDER_MAX_ORDER: usize = 3;

/// Repeated centered difference of step 1 along `axis`, or `None` if the
/// stencil leaves the lattice.
fn centered_diff(row: &[Complex64], n: usize, dim: usize, xi: [i64; 2], alpha: [usize; 2]) -> Option<Complex64> {
    let half = (n / 2) as i64;
    let reach = [alpha[0] as i64, alpha[1] as i64];
    for (axis, r) in reach.iter().enumerate().take(dim) {
        if xi[axis] - r < -half || xi[axis] + r > half - 1 {
            return None;
        }
    }
    let coeffs = |k: usize| -> Vec<(i64, f64)> {
        // (E^{1/2} - E^{-1/2})^{2k}-style expansion of ((E - E^{-1})/2)^k
        let mut c = vec![(0i64, 1.0)];
        for _ in 0..k {
            let mut next: Vec<(i64, f64)> = Vec::new();
            for (o, v) in &c {
                next.push((o + 1, v / 2.0));
                next.push((o - 1, -v / 2.0));
            }
            next.sort_by_key(|e| e.0);
            let mut merged: Vec<(i64, f64)> = Vec::new();
            for (o, v) in next {
                match merged.last_mut() {
                    Some(last) if last.0 == o => last.1 += v,
                    _ => merged.push((o, v)),
                }
            }
            c = merged;
        }
        c
    };
    let c0 = coeffs(alpha[0]);
    let c1 = coeffs(alpha[1]);
    let mut acc = Complex64::default();
    for (o0, v0) in &c0 {
        for (o1, v1) in &c1 {
            let k = if dim == 1 {
                grid::index_of(xi[0] + o0, n)
            } else {
                grid::index_of(xi[0] + o0, n) * n + grid::index_of(xi[1] + o1, n)
            };
            acc += row[k] * (v0 * v1);
        }
    }
    Some(acc)
}

/// `sup_{x, |xi| >= 2} |xi|^{|alpha|} |D^alpha sigma(x, xi)|` for every `|alpha| <= alpha_max`.
pub fn hormander_seminorm(s: &Symbol, alpha_max: usize) -> Result<Vec<HormanderEntry>> {
    if alpha_max > HORMANDER_MAX_ORDER {
        return Err(Error::Parameter(format!("alpha_max = {alpha_max} exceeds {HORMANDER_MAX_ORDER}")));
    }
    let (n, dim) = (s.n(), s.dim());
    let mut alphas = Vec::new();
    for order in 0..=alpha_max {
        if dim == 1 {
            alphas.push([order, 0]);
        } else {
            for a0 in (0..=order).rev() {
                alphas.push([a0, order - a0]);
            }
        }
    }
    let rows: Vec<&[Complex64]> = match s.x_independent() {
        Some(r) => vec![r],
        None => s.rows().collect(),
    };
    let entries = alphas
        .into_iter()
        .map(|alpha| {
            let order = (alpha[0] + alpha[1]) as i32;
            let value = rows
                .par_iter()
                .map(|row| {
                    let mut best = 0.0f64;
                    for k in 0..row.len() {
                        let xi = freq_vec(k, n, dim);
                        let r = ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt();
                        if r < 2.0 {
                            continue;
                        }
                        if let Some(d) = centered_diff(row, n, dim, xi, alpha) {
                            best = best.max(r.powi(order) * d.norm());
                        }
                    }
                    best
                })
                .reduce(|| 0.0, f64::max);
            HormanderEntry { alpha, value }
        })
        .collect();
    Ok(entries)
}

/// Largest seminorm of each total order `0..=alpha_max`.
pub fn hormander_by_order(entries: &[HormanderEntry]) -> Vec<f64> {
    let top = entries.iter().map(|e| e.alpha[0] + e.alpha[1]).max().unwrap_or(0);
    (0..=top)
        .map(|o| entries.iter().filter(|e| e.alpha[0] + e.alpha[1] == o).map(|e| e.value).fold(0.0, f64::max))
        .collect()
}

/// `sum_l 2^{l/p'} max_x ||P_l^theta q(x, .)||_{L^{p'}(S^1)}`, `p >= 2`.
pub fn homogeneous_quantity(q: &SphereSymbol, p: f64) -> Result<f64> {
    Ok(homogeneous_table(q, p)?.total())
}

pub fn homogeneous_table(q: &SphereSymbol, p: f64) -> Result<BandTable> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::Exponent(format!("p = {p} must satisfy p >= 2")));
    }
    let pd = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    let max = q.max_band();
    let norms = q
        .values()
        .par_chunks(q.m())
        .map(|row| {
            circular_band_pieces(row, max)
                .iter()
                .map(|piece| sphere_lp_norm(piece, pd).expect("p' >= 1"))
                .collect::<Vec<f64>>()
        })
        .reduce(|| vec![0.0; max + 1], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect());
    Ok(BandTable::from_norms("homogeneous", &norms, |l| 2f64.powf(l as f64 / pd)))
}

/// `phi(2^m (1 - r^2 / c^2))` on the radii `r = 0..len`.
pub fn thin_annulus_profile(m: u32, center: f64, len: usize) -> Vec<f64> {
    let w = (1u64 << m) as f64;
    (0..len).map(|r| crate::lp_decomp::phi(w * (1.0 - (r * r) as f64 / (center * center)))).collect()
}

/// One-dimensional B2 sum of radial profiles `r -> rho(x, r)` sampled at
/// `r = 0..R`, `R` a power of two, after even extension to `[-R, R)`.
pub fn radial_quantity(profiles: &[Vec<f64>]) -> Result<f64> {
    Ok(radial_table(profiles)?.total())
}

pub fn radial_table(profiles: &[Vec<f64>]) -> Result<BandTable> {
    let r = profiles.first().map(|p| p.len()).ok_or_else(|| Error::Parameter("no profiles".into()))?;
    if profiles.iter().any(|p| p.len() != r) {
        return Err(Error::Parameter("profiles differ in length".into()));
    }
    let n = 2 * r;
    grid::check_size(n)?;
    let mut table = Vec::with_capacity(profiles.len() * n);
    for p in profiles {
        for k in 0..n {
            let t = grid::freq(k, n).unsigned_abs() as usize;
            table.push(Complex64::from(p[t.min(r - 1)]));
        }
    }
    let rows = profiles.len();
    // one row per profile; pad the row count to a square table
    if rows > n {
        return Err(Error::Parameter(format!("{rows} profiles exceed the {n} rows of the table")));
    }
    let last = table[(rows - 1) * n..].to_vec();
    for _ in rows..n {
        table.extend_from_slice(&last);
    }
    let s = Symbol::from_table(1, n, table, None)?;
    let mut t = theorem1_table(&s)?;
    t.quantity = "radial".into();
    Ok(t)
}

/// `max_x ||(sum_l 2^{2(l - log2 N)/p} |P_l^xi sigma(x, .)|^2)^{1/2}||_{l^p}`, the
/// sup taken over every `stride`-th grid point.
pub fn separable_homogeneous_quantity(s: &SeparableSymbol, p: f64, stride: usize) -> Result<f64> {
    grid::check_exponent(p)?;
    if stride == 0 {
        return Err(Error::Parameter("stride must be positive".into()));
    }
    if s.dim() != 1 {
        return Err(Error::Dimension(s.dim()));
    }
    let n = s.n();
    let max = max_xi_band(n, 1)?;
    let log_n = n.trailing_zeros() as f64;
    let xs: Vec<usize> = (0..n).step_by(stride).collect();
    let vals: Vec<f64> = xs
        .par_iter()
        .map(|&i| {
            let row = s.row(i);
            let spec = spectrum_of(&row, n, 1);
            let mut sq = vec![0.0; n];
            for l in 0..=max {
                let w = 2f64.powf(2.0 * (l as f64 - log_n) / p);
                for (acc, v) in sq.iter_mut().zip(band_from_spectrum(&spec, n, 1, l)) {
                    *acc += w * v.norm_sqr();
                }
            }
            let sf: Vec<Complex64> = sq.iter().map(|v| Complex64::from(v.sqrt())).collect();
            counting_norm(&sf, p)
        })
        .collect();
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `B2(s1 s2)` against `B2(s1) B2(s2)`.
pub fn algebra_check(s1: &Symbol, s2: &Symbol) -> Result<AlgebraRecord> {
    let lhs = theorem1_quantity(&product_symbol(s1, s2)?)?;
    let rhs = theorem1_quantity(s1)? * theorem1_quantity(s2)?;
    Ok(AlgebraRecord { lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { f64::INFINITY } })
}

/// `B2(e^s)` against `B2(s)`; `ratio` is the exponent `c` with `B2(e^s) = exp(c B2(s))`.
pub fn exp_check(s: &Symbol) -> Result<AlgebraRecord> {
    let lhs = theorem1_quantity(&exp_symbol(s))?;
    let rhs = theorem1_quantity(s)?;
    let ratio = if rhs > 0.0 { lhs.ln() / rhs } else { f64::INFINITY };
    Ok(AlgebraRecord { lhs, rhs, ratio })
}
