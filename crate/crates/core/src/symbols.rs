//! Tabulated symbols `sigma(x_i, xi)` and the explicit symbol gallery.
//!
//! A table stores `N^dim` rows, one per grid point `x_i`; each row lists the
//! values on the frequency lattice in FFT order, so row `i` is itself a grid
//! function of xi. Gallery constructors place their frequency content at a
//! dyadic center `2^{k0}` and check that nothing reaches past `|xi| = N/4`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, check_dim, fft_nd, freq_radius, freq_vec, point, GridFn};
use crate::lp_decomp::{chi, phi, smooth_step, spectrum_of};

/// Largest table a symbol may hold.
pub const MAX_ENTRIES: usize = 1 << 26;

/// First index of the counterexample sum.
pub const COUNTEREXAMPLE_START: u32 = 8;

/// Gallery family name and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTag {
    pub family: String,
    pub params: BTreeMap<String, f64>,
}

impl SymbolTag {
    pub fn new(family: &str) -> Self {
        SymbolTag { family: family.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    dim: usize,
    n: usize,
    values: Vec<Complex64>,
    tag: Option<SymbolTag>,
}

fn table_len(dim: usize, n: usize) -> Result<usize> {
    check_dim(dim)?;
    grid::check_size(n)?;
    let len = n.pow(2 * dim as u32);
    if len > MAX_ENTRIES {
        return Err(Error::SizeGuard(format!("symbol table of {len} entries exceeds {MAX_ENTRIES}")));
    }
    Ok(len)
}

impl Symbol {
    pub fn from_table(dim: usize, n: usize, values: Vec<Complex64>, tag: Option<SymbolTag>) -> Result<Self> {
        let len = table_len(dim, n)?;
        if values.len() != len {
            return Err(Error::Length { expected: len, actual: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter("symbol table holds non-finite values".into()));
        }
        Ok(Symbol { dim, n, values, tag })
    }

    /// Tabulates `gen(x_i, xi)` on grid times lattice.
    pub fn from_function<F>(gen: F, dim: usize, n: usize) -> Result<Self>
    where
        F: Fn([f64; 2], [i64; 2]) -> Complex64 + Sync,
    {
        let len = table_len(dim, n)?;
        let row_len = n.pow(dim as u32);
        let mut values = vec![Complex64::default(); len];
        values.par_chunks_mut(row_len).enumerate().for_each(|(i, row)| {
            let x = point(i, n, dim);
            for (k, v) in row.iter_mut().enumerate() {
                *v = gen(x, freq_vec(k, n, dim));
            }
        });
        Symbol::from_table(dim, n, values, None)
    }

    /// `g(x) h(xi)` with `h` listed in FFT order.
    pub fn rank_one(g: &GridFn, h: &[Complex64]) -> Result<Self> {
        if h.len() != g.len() {
            return Err(Error::Length { expected: g.len(), actual: h.len() });
        }
        let len = table_len(g.dim(), g.n())?;
        let mut values = Vec::with_capacity(len);
        for gx in g.values() {
            values.extend(h.iter().map(|v| gx * v));
        }
        Symbol::from_table(g.dim(), g.n(), values, Some(SymbolTag::new("rank-one")))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of lattice points per row, also the number of rows.
    pub fn row_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let r = self.row_len();
        &self.values[i * r..(i + 1) * r]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.values.chunks_exact(self.row_len())
    }

    pub fn get(&self, i: usize, xi: [i64; 2]) -> Complex64 {
        let k = if self.dim == 1 {
            grid::index_of(xi[0], self.n)
        } else {
            grid::index_of(xi[0], self.n) * self.n + grid::index_of(xi[1], self.n)
        };
        self.row(i)[k]
    }

    pub fn tag(&self) -> Option<&SymbolTag> {
        self.tag.as_ref()
    }

    pub fn with_tag(mut self, tag: SymbolTag) -> Self {
        self.tag = Some(tag);
        self
    }

    pub fn same_shape(&self, other: &Symbol) -> bool {
        self.dim == other.dim && self.n == other.n
    }

    /// The common row when every row is identical.
    pub fn x_independent(&self) -> Option<&[Complex64]> {
        let first = self.row(0);
        self.rows().all(|r| r == first).then_some(first)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|v|` over lattice points with `|xi| > radius`.
    pub fn max_beyond(&self, radius: f64) -> f64 {
        let (n, dim) = (self.n, self.dim);
        self.rows()
            .flat_map(|row| row.iter().enumerate())
            .filter(|(k, _)| freq_radius(*k, n, dim) > radius)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Symbol {
        let values = self.values.par_iter().map(|v| f(*v)).collect();
        Symbol { dim: self.dim, n: self.n, values, tag: None }
    }
}

/// Sum of rank-one terms `sum_r g_r(x) h_r(xi)`, for grids too large to tabulate.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSymbol {
    dim: usize,
    n: usize,
    terms: Vec<(GridFn, Vec<Complex64>)>,
}

impl SeparableSymbol {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        grid::check_size(n)?;
        Ok(SeparableSymbol { dim, n, terms: Vec::new() })
    }

    pub fn push(&mut self, g: GridFn, h: Vec<Complex64>) -> Result<()> {
        if g.dim() != self.dim || g.n() != self.n {
            return Err(Error::Shape(format!("term on ({}, {}) for symbol on ({}, {})", g.dim(), g.n(), self.dim, self.n)));
        }
        if h.len() != g.len() {
            return Err(Error::Length { expected: g.len(), actual: h.len() });
        }
        self.terms.push((g, h));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(GridFn, Vec<Complex64>)] {
        &self.terms
    }

    /// Row `sigma(x_i, .)` in FFT order.
    pub fn row(&self, i: usize) -> Vec<Complex64> {
        let mut row = vec![Complex64::default(); self.n.pow(self.dim as u32)];
        for (g, h) in &self.terms {
            let c = g.values()[i];
            row.iter_mut().zip(h).for_each(|(r, v)| *r += c * v);
        }
        row
    }

    pub fn to_symbol(&self) -> Result<Symbol> {
        let len = table_len(self.dim, self.n)?;
        let row_len = self.n.pow(self.dim as u32);
        let mut values = vec![Complex64::default(); len];
        values.par_chunks_mut(row_len).enumerate().for_each(|(i, row)| {
            row.copy_from_slice(&self.row(i));
        });
        Symbol::from_table(self.dim, self.n, values, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    /// 1D, `u(x) > 0`.
    Dilation,
    /// 2D, unit vector stored as an angle in `[0, 2 pi)`.
    Angle,
}

/// Arbitrary per-point parameter `u(x)`, deliberately unsmoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionField {
    kind: FieldKind,
    n: usize,
    values: Vec<f64>,
}

impl DirectionField {
    pub fn dilations(n: usize, values: Vec<f64>) -> Result<Self> {
        grid::check_size(n)?;
        if values.len() != n {
            return Err(Error::Length { expected: n, actual: values.len() });
        }
        if values.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
            return Err(Error::Parameter("dilation field must be positive".into()));
        }
        Ok(DirectionField { kind: FieldKind::Dilation, n, values })
    }

    pub fn angles(n: usize, values: Vec<f64>) -> Result<Self> {
        grid::check_size(n)?;
        if values.len() != n * n {
            return Err(Error::Length { expected: n * n, actual: values.len() });
        }
        if values.iter().any(|a| !(a.is_finite() && (0.0..2.0 * PI).contains(a))) {
            return Err(Error::Parameter("angles must lie in [0, 2 pi)".into()));
        }
        Ok(DirectionField { kind: FieldKind::Angle, n, values })
    }

    /// Uniform dilations in `[lo, hi)`.
    pub fn random_dilations(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        DirectionField::dilations(n, v)
    }

    pub fn random_angles(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        DirectionField::angles(n, v)
    }

    pub fn constant_angle(n: usize, angle: f64) -> Result<Self> {
        DirectionField::angles(n, vec![angle.rem_euclid(2.0 * PI); n * n])
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FieldKind::Dilation => 1,
            FieldKind::Angle => 2,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self, i: usize) -> [f64; 2] {
        let a = self.values[i];
        [a.cos(), a.sin()]
    }
}

/// Profile of the counterexample bands: 1 on `[3/4, 5/4]`, support inside
/// `(0.65, 1.3)`, so that neighbouring dyadic copies have disjoint supports.
pub fn counterexample_bump(eta: f64) -> f64 {
    let t = eta.abs();
    smooth_step((t - 0.65) / 0.1) * (1.0 - smooth_step((t - 1.25) / 0.05))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!("delta = {delta} must lie in (0, 1/2)")));
    }
    Ok(())
}

fn check_top_band(j: u32, n: usize, what: &str) -> Result<()> {
    let log = grid::check_size(n)?;
    if j < COUNTEREXAMPLE_START || j + 2 > log {
        return Err(Error::Parameter(format!(
            "{what} = {j} needs {COUNTEREXAMPLE_START} <= {what} and 2^{what} <= N/4 = {}",
            n / 4
        )));
    }
    Ok(())
}

/// `sum_{j=8}^{j_max} j^{-(1/2 - delta)} e^{-2 pi i 2^j x} bump(2^{-j} xi)` in separable form.
pub fn counterexample_separable(delta: f64, j_max: u32, n: usize) -> Result<SeparableSymbol> {
    check_delta(delta)?;
    check_top_band(j_max, n, "j_max")?;
    let mut s = SeparableSymbol::new(1, n)?;
    for j in COUNTEREXAMPLE_START..=j_max {
        let c = (j as f64).powf(-(0.5 - delta));
        let f = (1u64 << j) as f64;
        let g = GridFn::from_fn(1, n, |x| Complex64::from_polar(c, -2.0 * PI * f * x[0]))?;
        let h = (0..n).map(|k| counterexample_bump(grid::freq(k, n) as f64 / f).into()).collect();
        s.push(g, h)?;
    }
    Ok(s)
}

pub fn counterexample_symbol(delta: f64, j_max: u32, n: usize) -> Result<Symbol> {
    let tag = SymbolTag::new("counterexample").with("delta", delta).with("j_max", j_max as f64);
    Ok(counterexample_separable(delta, j_max, n)?.to_symbol()?.with_tag(tag))
}

/// Largest frequency `f0` may carry so that every modulated copy stays on the plateau.
pub fn counterexample_f0_radius() -> f64 {
    (1u64 << COUNTEREXAMPLE_START) as f64 / 10.0
}

/// `sum_{j=8}^{n_terms} j^{-(1/2 + delta)} e^{+2 pi i 2^j x} f0(x)`; the sign is
/// the one that pairs each modulation with its own band of the symbol.
pub fn counterexample_testfn(delta: f64, n_terms: u32, f0: &GridFn) -> Result<GridFn> {
    check_delta(delta)?;
    if f0.dim() != 1 {
        return Err(Error::Dimension(f0.dim()));
    }
    check_top_band(n_terms, f0.n(), "n_terms")?;
    let reach = grid::forward_transform(f0).max_active_radius(1e-12 * grid::lp_norm(f0, 2.0)?.max(1e-300));
    if reach > counterexample_f0_radius() {
        return Err(Error::Parameter(format!(
            "f0 has frequencies up to {reach}, limit {}",
            counterexample_f0_radius()
        )));
    }
    let n = f0.n();
    let vals = (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let m: Complex64 = (COUNTEREXAMPLE_START..=n_terms)
                .map(|j| Complex64::from_polar((j as f64).powf(-(0.5 + delta)), 2.0 * PI * (1u64 << j) as f64 * x))
                .sum();
            m * f0.values()[i]
        })
        .collect();
    GridFn::new(1, n, vals)
}

fn check_center(k0: u32, n: usize, divisor: usize) -> Result<()> {
    grid::check_size(n)?;
    if (1usize << k0) * divisor > n {
        return Err(Error::Parameter(format!("2^k0 = {} exceeds N/{divisor} = {}", 1usize << k0, n / divisor)));
    }
    Ok(())
}

/// `phi(2^m (1 - xi^2 / u(x)^2)) phi(xi / 2^{k0})`, with `u(x)` in `(1/4, 4) 2^{k0}`.
pub fn carleson_thin_symbol(m: u32, k0: u32, u: &DirectionField) -> Result<Symbol> {
    if u.kind() != FieldKind::Dilation {
        return Err(Error::Parameter("Carleson symbol needs a dilation field".into()));
    }
    let n = u.n();
    check_center(k0, n, 16)?;
    if m < 1 || m > 52 {
        return Err(Error::Parameter(format!("m = {m} out of range")));
    }
    let c = (1u64 << k0) as f64;
    if u.values().iter().any(|v| !(*v > c / 4.0 && *v < 4.0 * c)) {
        return Err(Error::Parameter("u(x) must lie in (1/4, 4) 2^k0".into()));
    }
    let w = (1u64 << m) as f64;
    let uv = u.values();
    let s = Symbol::from_function(
        |x, xi| {
            let i = (x[0] * n as f64).round() as usize % n;
            let t = xi[0] as f64;
            (phi(w * (1.0 - t * t / (uv[i] * uv[i]))) * phi(t / c)).into()
        },
        1,
        n,
    )?;
    Ok(s.with_tag(SymbolTag::new("carleson-thin").with("m", m as f64).with("k0", k0 as f64)))
}

fn angle_symbol(n: usize, k0: u32, u: &DirectionField, prof: impl Fn(f64) -> f64 + Sync) -> Result<Symbol> {
    if u.kind() != FieldKind::Angle {
        return Err(Error::Parameter("expected an angle field".into()));
    }
    let c = (1u64 << k0) as f64;
    Symbol::from_function(
        |x, xi| {
            if xi == [0, 0] {
                return Complex64::default();
            }
            let i = ((x[0] * n as f64).round() as usize % n) * n + (x[1] * n as f64).round() as usize % n;
            let r = ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt();
            let e = u.unit(i);
            let dot = (e[0] * xi[0] as f64 + e[1] * xi[1] as f64) / r;
            (prof(dot) * phi(r / c)).into()
        },
        2,
        n,
    )
}

/// `phi(2^m <u(x), xi/|xi|>) phi(|xi| / 2^{k0})`, zero at the origin.
pub fn thin_circle_symbol(m: u32, k0: u32, u: &DirectionField) -> Result<Symbol> {
    let n = u.n();
    check_center(k0, n, 16)?;
    if m > k0 {
        return Err(Error::Resolution(format!("cap 2^-{m} unresolved on the annulus 2^{k0}")));
    }
    let w = (1u64 << m) as f64;
    let s = angle_symbol(n, k0, u, |d| phi(w * d))?;
    Ok(s.with_tag(SymbolTag::new("thin-circle").with("m", m as f64).with("k0", k0 as f64)))
}

/// Odd plateau profile: -1 on `(-inf, -1]`, +1 on `[1, inf)`.
pub fn psi(z: f64) -> f64 {
    2.0 * smooth_step((z + 1.0) / 2.0) - 1.0
}

/// `psi(<u(x), xi/|xi|> / delta) phi(|xi| / 2^{k0})`.
pub fn directional_symbol(delta: f64, k0: u32, u: &DirectionField) -> Result<Symbol> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta = {delta} must be positive")));
    }
    let n = u.n();
    check_center(k0, n, 8)?;
    let s = angle_symbol(n, k0, u, |d| psi(d / delta))?;
    Ok(s.with_tag(SymbolTag::new("directional").with("delta", delta).with("k0", k0 as f64)))
}

/// x-independent `phi(|xi| / 2^j)`.
pub fn band_multiplier_symbol(dim: usize, n: usize, j: u32) -> Result<Symbol> {
    check_center(j + 1, n, 4)?;
    let c = (1u64 << j) as f64;
    let s = Symbol::from_function(
        |_, xi| phi(((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt() / c).into(),
        dim,
        n,
    )?;
    Ok(s.with_tag(SymbolTag::new("band-multiplier").with("j", j as f64)))
}

pub fn constant_symbol(dim: usize, n: usize, c: Complex64) -> Result<Symbol> {
    let len = table_len(dim, n)?;
    Ok(Symbol::from_table(dim, n, vec![c; len], Some(SymbolTag::new("constant").with("re", c.re).with("im", c.im)))?)
}

pub fn product_symbol(s1: &Symbol, s2: &Symbol) -> Result<Symbol> {
    if !s1.same_shape(s2) {
        return Err(Error::Shape(format!("({}, {}) vs ({}, {})", s1.dim, s1.n, s2.dim, s2.n)));
    }
    let values = s1.values.par_iter().zip(&s2.values).map(|(a, b)| a * b).collect();
    Ok(Symbol { dim: s1.dim, n: s1.n, values, tag: Some(SymbolTag::new("product")) })
}

pub fn exp_symbol(s: &Symbol) -> Symbol {
    s.map(|v| v.exp()).with_tag(SymbolTag::new("exp"))
}

/// `sum_r g_r(x) h_r(xi)` with rough `g_r` (independent samples, `|g| <= 1`)
/// and `h_r` a random combination of modulated dyadic bands kept inside `|xi| <= N/4`.
pub fn random_symbol(dim: usize, n: usize, rank: usize, seed: u64) -> Result<Symbol> {
    let len = table_len(dim, n)?;
    let top = grid::check_size(n)?.saturating_sub(3);
    let row_len = n.pow(dim as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![Complex64::default(); len];
    let reach = (n / 8) as i64;
    for _ in 0..rank {
        let g: Vec<Complex64> =
            (0..row_len).map(|_| Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI))).collect();
        let mut h = vec![Complex64::default(); row_len];
        for j in 0..=top {
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let shift = [rng.gen_range(-reach..=reach), rng.gen_range(-reach..=reach)];
            let c = (1u64 << j) as f64;
            for (k, v) in h.iter_mut().enumerate() {
                let xi = freq_vec(k, n, dim);
                let r = freq_radius(k, n, dim);
                let m = if j == 0 { chi(r) } else { phi(r / c) };
                if m != 0.0 {
                    let ph = 2.0 * PI * (xi[0] * shift[0] + if dim == 2 { xi[1] * shift[1] } else { 0 }) as f64 / n as f64;
                    *v += amp * m * Complex64::from_polar(1.0, ph);
                }
            }
        }
        for (row, gx) in values.chunks_exact_mut(row_len).zip(&g) {
            row.iter_mut().zip(&h).for_each(|(v, hv)| *v += gx * hv);
        }
    }
    let tag = SymbolTag::new("random").with("rank", rank as f64).with("seed", seed as f64);
    Symbol::from_table(dim, n, values, Some(tag))
}

/// Conjugate coefficients of one row, the inverse of `row_from_conjugate`.
fn conjugate(row: &[Complex64], n: usize, dim: usize) -> Vec<Complex64> {
    spectrum_of(row, n, dim)
}

fn row_from_conjugate(mut c: Vec<Complex64>, n: usize, dim: usize) -> Vec<Complex64> {
    fft_nd(&mut c, n, dim, true);
    c
}

/// Places conjugate coefficients of an `N`-lattice row onto the `2N` lattice,
/// splitting each Nyquist coefficient evenly between `-N/2` and `+N/2`.
fn upsample_conjugate(c: &[Complex64], n: usize, dim: usize) -> Vec<Complex64> {
    let big = 2 * n;
    let half = (n / 2) as i64;
    let targets = |a: i64| -> Vec<(i64, f64)> {
        if a == -half {
            vec![(-half, 0.5), (half, 0.5)]
        } else {
            vec![(a, 1.0)]
        }
    };
    let mut out = vec![Complex64::default(); big.pow(dim as u32)];
    for (k, v) in c.iter().enumerate() {
        let a = freq_vec(k, n, dim);
        if dim == 1 {
            for (t, w) in targets(a[0]) {
                out[grid::index_of(t, big)] += v * w;
            }
        } else {
            for (t0, w0) in targets(a[0]) {
                for (t1, w1) in targets(a[1]) {
                    out[grid::index_of(t0, big) * big + grid::index_of(t1, big)] += v * (w0 * w1);
                }
            }
        }
    }
    out
}

/// Row index on the `n` grid of the point `i` of the `2n` grid taken mod `n`.
fn fold_index(i: usize, n: usize, dim: usize) -> usize {
    let big = 2 * n;
    if dim == 1 {
        i % n
    } else {
        (i / big % n) * n + (i % big) % n
    }
}

fn tag_rescaled(tag: Option<&SymbolTag>, j: i32) -> Option<SymbolTag> {
    tag.map(|t| {
        let prior = t.params.get("rescale").copied().unwrap_or(0.0);
        t.clone().with("rescale", prior + j as f64)
    })
}

fn rescale_up(s: &Symbol) -> Result<Symbol> {
    let (n, dim) = (s.n, s.dim);
    let big = 2 * n;
    let len = table_len(dim, big)?;
    let rows: Vec<Vec<Complex64>> = s
        .values
        .par_chunks(s.row_len())
        .map(|row| row_from_conjugate(upsample_conjugate(&conjugate(row, n, dim), n, dim), big, dim))
        .collect();
    let row_len = big.pow(dim as u32);
    let mut values = Vec::with_capacity(len);
    for i in 0..row_len {
        values.extend_from_slice(&rows[fold_index(i, n, dim)]);
    }
    Ok(Symbol { dim, n: big, values, tag: tag_rescaled(s.tag(), 1) })
}

fn rescale_down(s: &Symbol) -> Result<Symbol> {
    let (big, dim) = (s.n, s.dim);
    if big < 8 {
        return Err(Error::GridSize(big / 2));
    }
    let n = big / 2;
    let tol = 1e-12 * s.max_abs().max(1e-300);
    let big_rows = big.pow(dim as u32);
    for i in 0..big_rows {
        let j = if dim == 1 {
            i % n
        } else {
            (i / big % n) * big + i % big % n
        };
        let d = s.row(i).iter().zip(s.row(j)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if d > tol {
            return Err(Error::Parameter("rows are not periodic with half the period; the symbol cannot be contracted".into()));
        }
    }
    let quarter = (big / 4) as f64;
    let mut values = Vec::with_capacity(n.pow(2 * dim as u32));
    for i in 0..n.pow(dim as u32) {
        let src = if dim == 1 { i } else { (i / n) * big + i % n };
        let row = s.row(src);
        let c = conjugate(row, big, dim);
        let reach = c
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > tol)
            .map(|(k, _)| {
                let a = freq_vec(k, big, dim);
                a[0].abs().max(a[1].abs()) as f64
            })
            .fold(0.0, f64::max);
        if reach > quarter {
            return Err(Error::Band { band: grid::check_size(big)? as usize, max: grid::check_size(big)? as usize - 1 });
        }
        for k in 0..n.pow(dim as u32) {
            let xi = freq_vec(k, n, dim);
            let kk = if dim == 1 {
                grid::index_of(2 * xi[0], big)
            } else {
                grid::index_of(2 * xi[0], big) * big + grid::index_of(2 * xi[1], big)
            };
            values.push(row[kk]);
        }
    }
    Ok(Symbol { dim, n, values, tag: tag_rescaled(s.tag(), -1) })
}

/// Largest Nyquist conjugate coefficient of any row, relative to that row's peak.
/// `rescale(s, 1)` preserves the band quantities exactly when this vanishes.
pub fn nyquist_content(s: &Symbol) -> f64 {
    let (n, dim) = (s.n, s.dim);
    let h = (n / 2) as i64;
    s.values
        .par_chunks(s.row_len())
        .map(|row| {
            let c = conjugate(row, n, dim);
            let peak = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if peak == 0.0 {
                return 0.0;
            }
            let nyq = c
                .iter()
                .enumerate()
                .filter(|(k, _)| freq_vec(*k, n, dim).iter().take(dim).any(|a| a.abs() == h))
                .map(|(_, v)| v.norm())
                .fold(0.0, f64::max);
            nyq / peak
        })
        .reduce(|| 0.0, f64::max)
}

/// `sigma(2^j x mod 1, 2^{-j} xi)` on the grid of size `2^j N`.
///
/// `j = +1` repeats the rows over the doubled grid and interpolates each row
/// at half-integer frequencies through its conjugate coefficients; `j = -1`
/// is its exact inverse and requires rows of half period with conjugate
/// content below a quarter of the lattice.
pub fn rescale(s: &Symbol, j: i32) -> Result<Symbol> {
    let mut out = s.clone();
    if j > 0 {
        for _ in 0..j {
            out = rescale_up(&out)?;
        }
    } else {
        for _ in 0..(-j) {
            out = rescale_down(&out)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_table(dim: usize, n: usize, seed: u64) -> Symbol {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = n.pow(2 * dim as u32);
        let v = (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Symbol::from_table(dim, n, v, None).unwrap()
    }

    #[test]
    fn from_function_examples() {
        let one = Symbol::from_function(|_, _| 1.0.into(), 1, 32).unwrap();
        assert!(one.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        assert!(one.x_independent().is_some());
        let m = Symbol::from_function(|_, xi| phi(xi[0] as f64 / 4.0).into(), 1, 32).unwrap();
        assert!(m.x_independent().is_some());
        assert_eq!(m.get(5, [4, 0]), Complex64::new(1.0, 0.0));
        let g = GridFn::from_fn(1, 16, |x| (1.0 + x[0]).into()).unwrap();
        let h: Vec<Complex64> = (0..16).map(|k| (k as f64).into()).collect();
        let r1 = Symbol::rank_one(&g, &h).unwrap();
        let r2 = Symbol::from_function(|x, xi| ((1.0 + x[0]) * grid::index_of(xi[0], 16) as f64).into(), 1, 16).unwrap();
        assert_eq!(r1.values(), r2.values());
        assert!(r1.x_independent().is_none());
    }

    #[test]
    fn size_guard() {
        assert!(matches!(Symbol::from_function(|_, _| 1.0.into(), 2, 128), Err(Error::SizeGuard(_))));
        assert!(Symbol::from_table(1, 8, vec![Complex64::default(); 63], None).is_err());
    }

    #[test]
    fn counterexample_plateau_values() {
        let n = 2048;
        let s = counterexample_symbol(0.1, 9, n).unwrap();
        for j in 8..=9u32 {
            let xi = 1i64 << j;
            for i in [0usize, 7, 1000] {
                let x = i as f64 / n as f64;
                let want = Complex64::from_polar((j as f64).powf(-0.4), -2.0 * PI * xi as f64 * x);
                assert!((s.get(i, [xi, 0]) - want).norm() < 1e-9);
            }
        }
        assert!(counterexample_symbol(0.1, 10, n).is_err());
        assert!(counterexample_symbol(0.6, 8, n).is_err());
        assert!(s.max_beyond(1.3 * 512.0) < 1e-15);
    }

    #[test]
    fn counterexample_bands_are_disjoint() {
        for k in 1..4000 {
            let t = k as f64 / 1000.0;
            assert!(counterexample_bump(t) * counterexample_bump(t / 2.0) == 0.0, "t = {t}");
        }
        assert_eq!(counterexample_bump(0.75), 1.0);
        assert_eq!(counterexample_bump(1.25), 1.0);
        assert_eq!(counterexample_bump(0.5), 0.0);
    }

    #[test]
    fn testfn_guards() {
        let f0 = GridFn::constant(1, 4096, 1.0.into()).unwrap();
        let f = counterexample_testfn(0.1, 8, &f0).unwrap();
        assert!((grid::lp_norm(&f, 2.0).unwrap() - 8f64.powf(-0.6)).abs() < 1e-12);
        assert!(counterexample_testfn(0.1, 11, &f0).is_err());
        let rough = GridFn::tone(1, 4096, [100, 0]).unwrap();
        assert!(counterexample_testfn(0.1, 9, &rough).is_err());
    }

    #[test]
    fn carleson_examples() {
        let n = 256;
        let u = DirectionField::dilations(n, vec![16.0; n]).unwrap();
        let s = carleson_thin_symbol(3, 4, &u).unwrap();
        assert!(s.x_independent().is_some());
        assert!(s.max_beyond(64.0) == 0.0);
        let r = DirectionField::random_dilations(n, 4.5, 60.0, 1).unwrap();
        assert!(carleson_thin_symbol(3, 4, &r).is_ok());
        let bad = DirectionField::dilations(n, vec![100.0; n]).unwrap();
        assert!(carleson_thin_symbol(3, 4, &bad).is_err());
        assert!(carleson_thin_symbol(3, 5, &u).is_err());
    }

    #[test]
    fn thin_circle_examples() {
        let n = 64;
        let e1 = DirectionField::constant_angle(n, 0.0).unwrap();
        let s = thin_circle_symbol(0, 2, &e1).unwrap();
        assert!(s.x_independent().is_some());
        assert_eq!(s.get(0, [0, 0]), Complex64::default());
        let u = DirectionField::random_angles(n, 4).unwrap();
        let s = thin_circle_symbol(2, 2, &u).unwrap();
        for i in [0usize, 100, 4095] {
            let e = u.unit(i);
            for (k, v) in s.row(i).iter().enumerate() {
                let xi = freq_vec(k, n, 2);
                if v.norm() > 0.0 {
                    let r = freq_radius(k, n, 2);
                    let d = (e[0] * xi[0] as f64 + e[1] * xi[1] as f64) / r;
                    assert!(d.abs() <= 0.5 + 1e-12);
                }
            }
        }
        assert!(thin_circle_symbol(3, 2, &u).is_err());
    }

    #[test]
    fn directional_bounded_by_one() {
        let u = DirectionField::random_angles(32, 2).unwrap();
        for delta in [0.5, 0.125, 1.0 / 64.0] {
            let s = directional_symbol(delta, 2, &u).unwrap();
            assert!(s.max_abs() <= 1.0);
        }
        assert!(directional_symbol(0.0, 2, &u).is_err());
        assert_eq!(psi(-3.0), -1.0);
        assert_eq!(psi(1.0), 1.0);
        assert_eq!(psi(0.0), 0.0);
        assert!((psi(0.3) + psi(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn combinators() {
        let a = random_table(1, 16, 1);
        let one = constant_symbol(1, 16, 1.0.into()).unwrap();
        assert_eq!(product_symbol(&a, &one).unwrap().values(), a.values());
        let z = constant_symbol(1, 16, 0.0.into()).unwrap();
        assert!(exp_symbol(&z).values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let b = random_table(1, 32, 1);
        assert!(product_symbol(&a, &b).is_err());
    }

    #[test]
    fn random_symbol_stays_inside_quarter() {
        let s = random_symbol(1, 128, 3, 9).unwrap();
        assert!(s.max_beyond(32.0) == 0.0);
        assert!(s.max_abs() > 0.0);
        assert_eq!(random_symbol(1, 128, 3, 9).unwrap(), s);
    }

    #[test]
    fn rescale_roundtrip() {
        for (dim, n) in [(1, 32), (2, 8)] {
            let s = random_table(dim, n, 5);
            assert_eq!(rescale(&s, 0).unwrap(), s);
            let up = rescale(&s, 1).unwrap();
            assert_eq!(up.n(), 2 * n);
            let back = rescale(&up, -1).unwrap();
            let err = back.values().iter().zip(s.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "dim {dim}: {err}");
        }
    }

    #[test]
    fn rescale_samples_half_frequencies() {
        let n = 64;
        let s = band_multiplier_symbol(1, n, 3).unwrap();
        let up = rescale(&s, 1).unwrap();
        for xi in (-32i64..32).step_by(2) {
            assert!((up.get(3, [xi, 0]) - s.get(3, [xi / 2, 0])).norm() < 1e-12);
        }
        assert!(rescale(&random_table(1, 32, 1), -1).is_err());
    }
}
