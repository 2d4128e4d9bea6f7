//! The named experiments. Each resolves its configuration into a plan (where
//! every guard is checked up front) and then runs it into a `RunReport`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rough_pdo::bounds::{
    algebra_check, exp_check, radial_table, separable_homogeneous_quantity, theorem1_quantity,
    thin_annulus_profile, weak11_table, BandTable, BoundReport,
};
use rough_pdo::grid::{self, forward_transform, freq_radius, inner, inverse_transform, lp_norm};
use rough_pdo::kernels::{cap_kernel, cone_partition, cone_square_ratio, cone_sum_ratio, decay_certificate, l1_uniformity};
use rough_pdo::lp_decomp::{bernstein_ratio, max_band, phi, project_band, project_low};
use rough_pdo::maximal::{angle_grid, log_spaced_u, thin_circle_ascent, thin_circle_multiplier, MaximalReport};
use rough_pdo::pdo::{apply, apply_adjoint, apply_separable, operator_norm};
use rough_pdo::sphere::w11_norm;
use rough_pdo::symbols::{
    band_multiplier_symbol, carleson_thin_symbol, constant_symbol, counterexample_separable, counterexample_testfn,
    exp_symbol, nyquist_content, product_symbol, random_symbol, rescale, COUNTEREXAMPLE_START,
};
use rough_pdo::{Complex64, DirectionField, GridFn, NormMethod, SphereSymbol, Spectrum, Symbol};

use crate::baselines;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{Assertion, RunReport};

pub const EXPERIMENTS: [&str; 11] = [
    "adjoint-identity",
    "counterexample-growth",
    "theorem1-bound-sweep",
    "scale-invariance",
    "carleson-domination",
    "thin-circle-norms",
    "directional-sharpness",
    "cap-kernel-certificates",
    "algebra-check",
    "infrastructure",
    "radial-quantity",
];

pub fn list_experiments() -> String {
    EXPERIMENTS.join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Adjoint { n: usize, count: usize },
    Counterexample { n: usize, delta: f64, j_max: Vec<u32>, p: f64 },
    Theorem1 { n: usize, count: usize, method: NormMethod, random: bool, gallery: bool },
    Scale { n: usize },
    Carleson { n: usize, m: Vec<u32>, count: usize, k0: u32, u_seed: Option<u64> },
    ThinCircle { n: usize, m: Vec<u32>, k0: u32, count: usize },
    Directional { n: usize, exps: Vec<u32>, sphere_m: usize, u_seed: Option<u64> },
    CapKernel { n: usize, l: Vec<u32>, k0: u32, angles: usize },
    Algebra { n: usize, count: usize },
    Infrastructure { n: usize },
    Radial { n: usize, m: Vec<u32> },
}

fn log2(n: usize) -> Result<u32, CliError> {
    grid::check_size(n).map_err(|e| CliError::Guard(e.to_string()))
}

fn guard(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Guard(msg()))
    }
}

fn only_dim(cfg: &ExperimentConfig, dim: usize) -> Result<(), CliError> {
    match cfg.dim {
        Some(d) if d != dim => Err(CliError::Config(format!("{} runs in dimension {dim}, got {d}", cfg.experiment))),
        _ => Ok(()),
    }
}

fn nonempty<T>(v: &[T], what: &str) -> Result<(), CliError> {
    guard(!v.is_empty(), || format!("{what} sweep is empty"))
}

/// Resolves defaults and checks every guard the run will hit.
pub fn plan(cfg: &ExperimentConfig) -> Result<Plan, CliError> {
    let count = |d: usize| -> Result<usize, CliError> {
        let c = cfg.count.unwrap_or(d);
        guard(c > 0, || "count must be positive".into())?;
        Ok(c)
    };
    let plan = match cfg.experiment.as_str() {
        "adjoint-identity" => {
            only_dim(cfg, 1)?;
            let n = cfg.n.unwrap_or(256);
            log2(n)?;
            guard(n * n <= 1 << 26, || format!("N = {n} symbol table too large"))?;
            Plan::Adjoint { n, count: count(100)? }
        }
        "counterexample-growth" => {
            only_dim(cfg, 1)?;
            let n = cfg.n.unwrap_or(1 << 14);
            let log = log2(n)?;
            let delta = cfg.delta.unwrap_or(0.1);
            guard(delta > 0.0 && delta < 0.5, || format!("delta = {delta} must lie in (0, 1/2)"))?;
            let j_max = cfg.j_max.clone().unwrap_or_else(|| vec![16, 32, 64, 100]);
            nonempty(&j_max, "j_max")?;
            for &j in &j_max {
                guard(j >= COUNTEREXAMPLE_START && j + 2 <= log, || {
                    format!("j_max = {j} needs 2^j_max <= N/4 = {} (j_max <= {})", n / 4, log - 2)
                })?;
            }
            // smallest p above 2 + 4 delta / (1 - 2 delta), rounded up to an integer
            let p = (2.0 + 4.0 * delta / (1.0 - 2.0 * delta)).floor() + 1.0;
            Plan::Counterexample { n, delta, j_max, p }
        }
        "theorem1-bound-sweep" => {
            only_dim(cfg, 1)?;
            let n = cfg.n.unwrap_or(128);
            let log = log2(n)?;
            guard(log >= 6, || format!("N = {n} leaves no room for the gallery (need N >= 64)"))?;
            let method = cfg.norm_method.unwrap_or(NormMethod::Dense);
            if method == NormMethod::Dense {
                guard(n <= 4096, || format!("dense norms need N <= 4096, got {n}"))?;
            }
            let fams = cfg.family.clone().unwrap_or_else(|| vec!["random".into(), "gallery".into()]);
            for f in &fams {
                guard(f == "random" || f == "gallery", || format!("unknown family {f:?}"))?;
            }
            Plan::Theorem1 {
                n,
                count: count(50)?,
                method,
                random: fams.iter().any(|f| f == "random"),
                gallery: fams.iter().any(|f| f == "gallery"),
            }
        }
        "scale-invariance" => {
            only_dim(cfg, 1)?;
            let n = cfg.n.unwrap_or(64);
            let log = log2(n)?;
            guard((6..=10).contains(&log), || format!("N = {n} must lie in [64, 1024]"))?;
            Plan::Scale { n }
        }
        "carleson-domination" => {
            only_dim(cfg, 1)?;
            let n = cfg.n.unwrap_or(4096);
            let log = log2(n)?;
            let m = cfg.m.clone().unwrap_or_else(|| (2..=7).collect());
            nonempty(&m, "m")?;
            let k0 = cfg.k0.unwrap_or(log.saturating_sub(4));
            guard((1usize << k0) * 16 <= n, || format!("2^k0 = {} exceeds N/16 = {}", 1usize << k0, n / 16))?;
            for &mm in &m {
                guard((1..=k0).contains(&mm), || format!("m = {mm} too large for N = {n}: need 1 <= m <= k0 = {k0}"))?;
            }
            guard(n * n <= 1 << 26, || format!("N = {n} symbol table too large"))?;
            Plan::Carleson { n, m, count: count(20)?, k0, u_seed: cfg.u_seed }
        }
        "thin-circle-norms" => {
            only_dim(cfg, 2)?;
            let n = cfg.n.unwrap_or(128);
            log2(n)?;
            let k0 = cfg.k0.unwrap_or(4);
            guard((1usize << k0) * 8 <= n, || format!("2^k0 = {} exceeds N/8 = {}", 1usize << k0, n / 8))?;
            let m = cfg.m.clone().unwrap_or_else(|| (1..=5).collect());
            nonempty(&m, "m")?;
            for &mm in &m {
                guard(mm <= k0 + 1, || format!("m = {mm} too large for N = {n}: the cap 2^-m is unresolved at k0 = {k0}"))?;
            }
            Plan::ThinCircle { n, m, k0, count: count(10)? }
        }
        "directional-sharpness" => {
            let n = cfg.n.unwrap_or(16);
            log2(n)?;
            let sphere_m = cfg.sphere_m.unwrap_or(4096);
            log2(sphere_m)?;
            let exps = cfg.delta_exponents.clone().unwrap_or_else(|| (1..=6).collect());
            nonempty(&exps, "delta")?;
            let top = *exps.iter().max().expect("nonempty");
            guard((sphere_m >> top) >= 16, || {
                format!("sphere resolution M = {sphere_m} too coarse for delta = 2^-{top} (need M >= 16 / delta)")
            })?;
            Plan::Directional { n, exps, sphere_m, u_seed: cfg.u_seed }
        }
        "cap-kernel-certificates" => {
            only_dim(cfg, 2)?;
            let n = cfg.n.unwrap_or(256);
            let log = log2(n)?;
            let k0 = cfg.k0.unwrap_or(log.saturating_sub(4));
            let l = cfg.l.clone().unwrap_or_else(|| (1..=5).collect());
            nonempty(&l, "l")?;
            for &ll in &l {
                rough_pdo::kernels::check_cap(ll, k0, n).map_err(|e| CliError::Guard(e.to_string()))?;
            }
            Plan::CapKernel { n, l, k0, angles: count(8)? }
        }
        "algebra-check" => {
            only_dim(cfg, 1)?;
            let n = cfg.n.unwrap_or(64);
            let log = log2(n)?;
            guard(log >= 4 && n <= 1024, || format!("N = {n} must lie in [16, 1024]"))?;
            Plan::Algebra { n, count: count(50)? }
        }
        "infrastructure" => {
            let n = cfg.n.unwrap_or(1024);
            let log = log2(n)?;
            guard(log >= 5, || format!("N = {n} must be at least 32"))?;
            Plan::Infrastructure { n }
        }
        "radial-quantity" => {
            let n = cfg.n.unwrap_or(512);
            let log = log2(n)?;
            let m = cfg.m.clone().unwrap_or_else(|| (2..=6).collect());
            nonempty(&m, "m")?;
            for &mm in &m {
                guard(mm + 3 <= log, || format!("m = {mm} too large for N = {n}: the annulus is unresolved"))?;
            }
            Plan::Radial { n, m }
        }
        other => return Err(CliError::UnknownExperiment(other.to_string())),
    };
    Ok(plan)
}

/// Human-readable problems with a config; empty when it is runnable.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    match plan(cfg) {
        Ok(_) => Vec::new(),
        Err(e) => vec![e.to_string()],
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let plan = plan(cfg)?;
    let start = Instant::now();
    let mut rep = RunReport::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match plan {
        Plan::Adjoint { n, count } => adjoint_identity(&mut rep, &mut rng, n, count)?,
        Plan::Counterexample { n, delta, j_max, p } => counterexample_growth(&mut rep, n, delta, &j_max, p)?,
        Plan::Theorem1 { n, count, method, random, gallery } => {
            theorem1_sweep(&mut rep, &mut rng, n, count, method, random, gallery)?
        }
        Plan::Scale { n } => scale_invariance(&mut rep, n)?,
        Plan::Carleson { n, m, count, k0, u_seed } => carleson_domination(&mut rep, &mut rng, n, &m, count, k0, u_seed)?,
        Plan::ThinCircle { n, m, k0, count } => thin_circle_norms(&mut rep, &mut rng, n, &m, k0, count)?,
        Plan::Directional { n, exps, sphere_m, u_seed } => directional(&mut rep, &mut rng, n, &exps, sphere_m, u_seed)?,
        Plan::CapKernel { n, l, k0, angles } => cap_kernels(&mut rep, &mut rng, n, &l, k0, angles)?,
        Plan::Algebra { n, count } => algebra(&mut rep, &mut rng, n, count)?,
        Plan::Infrastructure { n } => infrastructure(&mut rep, &mut rng, n)?,
        Plan::Radial { n, m } => radial(&mut rep, n, &m)?,
    }
    rep.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- helpers

fn random_fn(dim: usize, n: usize, rng: &mut ChaCha8Rng) -> GridFn {
    let len = n.pow(dim as u32);
    let v = (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    GridFn::new(dim, n, v).expect("validated grid")
}

/// Random spectrum on `lo <= |xi| <= hi`, normalized to unit `L^2` norm.
fn random_band_limited(dim: usize, n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> GridFn {
    let len = n.pow(dim as u32);
    let coeffs = (0..len)
        .map(|k| {
            let r = freq_radius(k, n, dim);
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if r >= lo && r <= hi {
                c
            } else {
                Complex64::default()
            }
        })
        .collect();
    let f = inverse_transform(&Spectrum::new(dim, n, coeffs).expect("validated grid"));
    let s = lp_norm(&f, 2.0).expect("p = 2");
    f.scale(Complex64::from(1.0 / s))
}

/// A few random tones with frequencies in `1..=hi` and random phases, unit `L^2` norm.
fn random_sparse(n: usize, tones: usize, hi: usize, rng: &mut ChaCha8Rng) -> GridFn {
    let mut coeffs = vec![Complex64::default(); n];
    for _ in 0..tones {
        let k = rng.gen_range(1..=hi);
        coeffs[k] += Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    }
    unit(inverse_transform(&Spectrum::new(1, n, coeffs).expect("validated grid")))
}

fn unit(f: GridFn) -> GridFn {
    let s = lp_norm(&f, 2.0).expect("p = 2");
    f.scale(Complex64::from(1.0 / s))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn spread(v: &[f64]) -> f64 {
    max_of(v) / min_of(v)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn band_csv(t: &BandTable) -> String {
    let mut buf = Vec::new();
    t.write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn symbol_norm(s: &Symbol) -> Result<f64, CliError> {
    let method = if s.x_independent().is_some() { NormMethod::Power } else { NormMethod::Dense };
    Ok(operator_norm(s, method)?.value)
}

// ------------------------------------------------------------ experiments

fn adjoint_identity(rep: &mut RunReport, rng: &mut ChaCha8Rng, n: usize, count: usize) -> Result<(), CliError> {
    let one = constant_symbol(1, n, Complex64::from(1.0))?;
    let f = random_fn(1, n, rng);
    let id = apply(&one, &f)?.max_abs_diff(&f)?;
    rep.measure("identity_defect_sup", id);
    rep.assert(Assertion::at_most("identity", id, 1e-10));
    let s = random_symbol(1, n, 3, rng.gen())?;
    let mut worst = 0.0f64;
    for _ in 0..count {
        let f = unit(random_fn(1, n, rng));
        let g = unit(random_fn(1, n, rng));
        let lhs = inner(&apply(&s, &f)?, &g)?;
        let rhs = inner(&f, &apply_adjoint(&s, &g)?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    rep.measure("adjoint_defect_max", worst);
    rep.assert(Assertion::at_most("adjoint", worst, 1e-10));
    Ok(())
}

fn counterexample_growth(rep: &mut RunReport, n: usize, delta: f64, j_max: &[u32], p: f64) -> Result<(), CliError> {
    let f0 = GridFn::constant(1, n, Complex64::from(1.0))?;
    let (mut ratios, mut oracle, mut w, mut rows) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut worst: f64 = 0.0;
    let mut norm_err: f64 = 0.0;
    for &j in j_max {
        let s = counterexample_separable(delta, j, n)?;
        let f = counterexample_testfn(delta, j, &f0)?;
        let tf = apply_separable(&s, &f)?;
        let r = lp_norm(&tf, 2.0)? / lp_norm(&f0, 2.0)?;
        let want: f64 = (COUNTEREXAMPLE_START..=j).map(|k| 1.0 / k as f64).sum();
        let fnorm: f64 = (COUNTEREXAMPLE_START..=j).map(|k| (k as f64).powf(-(1.0 + 2.0 * delta))).sum::<f64>().sqrt();
        norm_err = norm_err.max(rel(lp_norm(&f, 2.0)?, fnorm));
        let q = separable_homogeneous_quantity(&s, p, 64)?;
        worst = worst.max(rel(r, want));
        rows.push(vec![j as f64, r, want, q]);
        ratios.push(r);
        oracle.push(want);
        w.push(q);
    }
    rep.series("n_terms", j_max.iter().map(|&j| j as f64).collect());
    rep.series("norm_ratio", ratios.clone());
    rep.series("harmonic_oracle", oracle);
    rep.series("w_quantity", w.clone());
    rep.measure("p", p);
    rep.measure("max_relative_error", worst);
    rep.measure("testfn_norm_error", norm_err);
    rep.measure("w_spread", spread(&w));
    rep.csv.insert("growth".into(), csv_table(&["n_terms", "norm_ratio", "harmonic_oracle", "w_quantity"], &rows));
    rep.assert(Assertion::at_most("exactness", worst, 5e-3));
    rep.assert(Assertion::check("growth", ratios.windows(2).all(|v| v[1] > v[0]), "norm ratio increases with n_terms"));
    rep.assert(Assertion::at_most("w_bounded", spread(&w), 2.0));
    Ok(())
}

fn theorem1_gallery(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(String, Symbol)>, CliError> {
    let log = n.trailing_zeros();
    let mut out = vec![("constant".to_string(), constant_symbol(1, n, Complex64::from(1.0))?)];
    for j in 0..=log - 3 {
        out.push((format!("band-{j}"), band_multiplier_symbol(1, n, j)?));
    }
    let k0 = log - 4;
    let c = (1u64 << k0) as f64;
    for m in 1..=3 {
        let u = DirectionField::random_dilations(n, c / 2.0, 2.0 * c, rng.gen())?;
        out.push((format!("carleson-m{m}"), carleson_thin_symbol(m, k0, &u)?));
    }
    let a = random_symbol(1, n, 2, rng.gen())?;
    let b = random_symbol(1, n, 1, rng.gen())?;
    out.push(("product".into(), product_symbol(&a, &b)?));
    out.push(("exp".into(), exp_symbol(&a.map(|v| v * 0.25))));
    Ok(out)
}

fn theorem1_sweep(
    rep: &mut RunReport,
    rng: &mut ChaCha8Rng,
    n: usize,
    count: usize,
    method: NormMethod,
    random: bool,
    gallery: bool,
) -> Result<(), CliError> {
    let mut symbols: Vec<(String, Symbol)> = Vec::new();
    if random {
        for i in 0..count {
            symbols.push((format!("random-{i}"), random_symbol(1, n, 1 + i % 3, rng.gen())?));
        }
    }
    if gallery {
        symbols.extend(theorem1_gallery(n, rng)?);
    }
    let results: Vec<(f64, f64, usize)> = symbols
        .par_iter()
        .map(|(_, s)| -> Result<(f64, f64, usize), CliError> {
            let est = operator_norm(s, method)?;
            Ok((est.value, theorem1_quantity(s)?, est.iterations))
        })
        .collect::<Result<_, _>>()?;
    let ratios: Vec<f64> = results.iter().map(|r| r.0 / r.1).collect();
    let finite = results.iter().all(|r| r.0.is_finite() && r.1.is_finite() && r.1 > 0.0);
    let rows: Vec<Vec<f64>> = results.iter().zip(&ratios).enumerate().map(|(i, (r, q))| vec![i as f64, r.0, r.1, *q]).collect();
    rep.csv.insert("ratios".into(), csv_table(&["index", "norm", "B2", "ratio"], &rows));
    if gallery {
        for (name, s) in symbols.iter().filter(|(name, _)| !name.starts_with("random")) {
            let mut b = BoundReport::for_symbol(s, &[1.5], 2)?;
            b.empirical_norm = Some(symbol_norm(s)?);
            rep.bound_reports.insert(name.clone(), b);
        }
    }
    let c = max_of(&ratios);
    rep.measure("max_ratio", c);
    rep.measure("symbols", symbols.len() as f64);
    rep.series("ratios", ratios);
    rep.assert(Assertion::check("finite", finite, "every norm and B2 finite and converged"));
    rep.assert(Assertion::at_most("ratio_vs_baseline", c, 1.05 * baselines::THEOREM1_MAX_RATIO));
    Ok(())
}

fn scale_invariance(rep: &mut RunReport, n: usize) -> Result<(), CliError> {
    let log = n.trailing_zeros();
    let mut up: Vec<(String, Symbol)> = vec![("constant".into(), constant_symbol(1, n, Complex64::from(1.0))?)];
    for j in 0..=log - 3 {
        up.push((format!("band-{j}"), band_multiplier_symbol(1, n, j)?));
    }
    let k0 = log - 4;
    let c = (1u64 << k0) as f64;
    for m in 1..=2 {
        let u = DirectionField::dilations(n, (0..n).map(|i| c * (0.75 + 0.5 * (i % 5) as f64 / 4.0)).collect())?;
        up.push((format!("carleson-m{m}"), carleson_thin_symbol(m, k0, &u)?));
    }
    let mut pairs: Vec<(String, f64, Symbol, Symbol)> = Vec::new();
    for (name, s) in up {
        let nyq = nyquist_content(&s);
        if nyq > 1e-12 {
            rep.notes.push(format!("{name}: no band headroom (Nyquist conjugate content {nyq:.2e}), skipped"));
            continue;
        }
        let r = rescale(&s, 1)?;
        let back = rescale(&r, -1)?;
        pairs.push((format!("{name}@{}", 2 * n), -1.0, r.clone(), back));
        pairs.push((name, 1.0, s, r));
    }
    rep.measure("symbols_compared", (pairs.len() / 2) as f64);
    let mut rows = Vec::new();
    let (mut worst_b2, mut worst_norm) = (0.0f64, 0.0f64);
    for (name, dir, a, b) in &pairs {
        let (b2a, b2b) = (theorem1_quantity(a)?, theorem1_quantity(b)?);
        let (na, nb) = (symbol_norm(a)?, symbol_norm(b)?);
        worst_b2 = worst_b2.max(rel(b2a, b2b));
        worst_norm = worst_norm.max(rel(na, nb));
        rows.push(vec![*dir, rows.len() as f64, b2a, b2b, rel(b2a, b2b), na, nb, rel(na, nb)]);
        rep.notes.push(format!("{name} ({dir:+}): B2 {b2a:.9} -> {b2b:.9}, norm {na:.9} -> {nb:.9}"));
    }
    rep.csv.insert(
        "rescale".into(),
        csv_table(&["direction", "index", "b2", "b2_rescaled", "b2_rel", "norm", "norm_rescaled", "norm_rel"], &rows),
    );
    rep.measure("b2_max_relative_change", worst_b2);
    rep.measure("norm_max_relative_change", worst_norm);
    rep.assert(Assertion::check("headroom", !pairs.is_empty(), "at least one gallery symbol with band headroom"));
    rep.assert(Assertion::at_most("b2_invariance", worst_b2, 1e-6));
    rep.assert(Assertion::at_most("norm_invariance", worst_norm, 1e-6));
    Ok(())
}

const CARLESON_TONES: usize = 4;

fn carleson_domination(
    rep: &mut RunReport,
    rng: &mut ChaCha8Rng,
    n: usize,
    ms: &[u32],
    count: usize,
    k0: u32,
    u_seed: Option<u64>,
) -> Result<(), CliError> {
    let fs: Vec<GridFn> = (0..count).map(|_| random_sparse(n, CARLESON_TONES, n / 4, rng)).collect();
    let dense: Vec<GridFn> = (0..count).map(|_| random_band_limited(1, n, 0.0, n as f64 / 4.0, rng)).collect();
    let u_seed = u_seed.unwrap_or_else(|| rng.gen());
    let c = (1u64 << k0) as f64;
    let u = DirectionField::random_dilations(n, c / 4.0 * (1.0 + 1e-9), 4.0 * c * (1.0 - 1e-9), u_seed)?;
    let (mut consts, mut dense_consts, mut sums, mut rows) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &m in ms {
        let grid_u = log_spaced_u(2.0, n as f64 / 4.0, m);
        let per_f: Vec<f64> = fs
            .par_iter()
            .map(|f| MaximalReport::carleson(m, f, &grid_u).map(|r| r.constant))
            .collect::<Result<_, _>>()?;
        let cm = max_of(&per_f);
        let per_dense: Vec<f64> = dense
            .par_iter()
            .map(|f| MaximalReport::carleson(m, f, &grid_u).map(|r| r.constant))
            .collect::<Result<_, _>>()?;
        dense_consts.push(max_of(&per_dense));
        let table = weak11_table(&carleson_thin_symbol(m, k0, &u)?)?;
        rep.csv.insert(format!("band-sum-m{m}"), band_csv(&table));
        sums.push(table.total());
        consts.push(cm);
        rows.push(vec![m as f64, cm, *dense_consts.last().expect("pushed"), grid_u.len() as f64]);
    }
    rep.csv.insert("constants".into(), csv_table(&["m", "measured_c", "dense_spectrum_c", "u_grid_size"], &rows));
    rep.series("dense_spectrum_constant", dense_consts.clone());
    rep.measure("dense_spectrum_spread", spread(&dense_consts));
    rep.series("m", ms.iter().map(|&m| m as f64).collect());
    rep.series("domination_constant", consts.clone());
    rep.series("band_sum", sums.clone());
    rep.measure("u_seed", u_seed as f64);
    rep.measure("constant_max", max_of(&consts));
    rep.measure("constant_spread", spread(&consts));
    rep.measure("band_sum_spread", spread(&sums));
    rep.assert(Assertion::check("finite", consts.iter().all(|c| c.is_finite()), "every domination constant finite"));
    rep.assert(Assertion::at_most("constant_uniform", spread(&consts), 3.0));
    rep.assert(Assertion::at_most("band_sum_uniform", spread(&sums), 3.0));
    rep.assert(Assertion::at_most("constant_vs_baseline", max_of(&consts), 1.05 * baselines::CARLESON_MAX_CONSTANT));
    Ok(())
}

const ASCENT_STEPS: usize = 8;

fn thin_circle_norms(
    rep: &mut RunReport,
    rng: &mut ChaCha8Rng,
    n: usize,
    ms: &[u32],
    k0: u32,
    count: usize,
) -> Result<(), CliError> {
    let c = (1u64 << k0) as f64;
    let fs: Vec<GridFn> = (0..count).map(|_| random_band_limited(2, n, c / 2.0, 2.0 * c, rng)).collect();
    let (mut mult, mut rayleigh, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    for &m in ms {
        let angles = angle_grid(m);
        let mnorm = angles
            .par_iter()
            .map(|&a| thin_circle_multiplier(m, k0, a, n).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
        let mut best = 0.0f64;
        for f in &fs {
            let (r, _) = thin_circle_ascent(m, k0, f, &angles, ASCENT_STEPS)?;
            best = best.max(r);
        }
        mult.push(mnorm);
        rayleigh.push(best);
        rows.push(vec![m as f64, mnorm, best, angles.len() as f64]);
    }
    rep.csv.insert("norms".into(), csv_table(&["m", "multiplier_norm", "maximal_ratio", "angles"], &rows));
    rep.series("multiplier_norm", mult.clone());
    rep.series("maximal_ratio", rayleigh.clone());
    rep.measure("multiplier_spread", spread(&mult));
    rep.measure("maximal_spread", spread(&rayleigh));
    rep.assert(Assertion::at_most("multiplier_uniform", spread(&mult), 3.0));
    rep.assert(Assertion::at_most("maximal_uniform", spread(&rayleigh), 3.0));
    Ok(())
}

fn directional(
    rep: &mut RunReport,
    rng: &mut ChaCha8Rng,
    n: usize,
    exps: &[u32],
    sphere_m: usize,
    u_seed: Option<u64>,
) -> Result<(), CliError> {
    let u_seed = u_seed.unwrap_or_else(|| rng.gen());
    let u = DirectionField::random_angles(n, u_seed)?;
    let (mut q, mut w, mut sup, mut rows) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &k in exps {
        let delta = 2f64.powi(-(k as i32));
        let s = SphereSymbol::directional(delta, &u, sphere_m)?;
        let qv = rough_pdo::bounds::homogeneous_quantity(&s, 2.0)?;
        let wv = (0..n * n).into_par_iter().map(|i| w11_norm(s.row(i))).reduce(|| 0.0, f64::max);
        let sv = s.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        rows.push(vec![k as f64, qv, wv, sv]);
        q.push(qv);
        w.push(wv);
        sup.push(sv);
    }
    let inc: Vec<f64> = q.windows(2).map(|v| v[1] - v[0]).collect();
    let big = inc.iter().filter(|d| **d >= 0.3).count();
    let needed = inc.len().saturating_sub(1);
    rep.csv.insert("sharpness".into(), csv_table(&["log2_inv_delta", "homogeneous", "w11_sup", "sup_abs"], &rows));
    rep.series("homogeneous", q.clone());
    rep.series("increments", inc.clone());
    rep.series("w11_sup", w.clone());
    rep.measure("u_seed", u_seed as f64);
    rep.measure("w11_spread", spread(&w));
    rep.measure("sup_abs", max_of(&sup));
    rep.assert(Assertion::check("strictly_increasing", inc.iter().all(|d| *d > 0.0), format!("increments {inc:?}")));
    rep.assert(Assertion::check("growth_rate", big >= needed, format!("{big} of {} increments >= 0.3", inc.len())));
    rep.assert(Assertion::at_most("w11_uniform", spread(&w), 2.0));
    rep.assert(Assertion::at_most("sup_bound", max_of(&sup), 1.0));
    Ok(())
}

fn cap_kernels(
    rep: &mut RunReport,
    rng: &mut ChaCha8Rng,
    n: usize,
    ls: &[u32],
    k0: u32,
    angles: usize,
) -> Result<(), CliError> {
    let thetas: Vec<f64> = (0..angles).map(|k| (2 * k + 1) as f64 * PI / angles as f64).collect();
    let l1 = l1_uniformity(ls, &thetas, k0, n)?;
    rep.csv.insert(
        "l1".into(),
        csv_table(&["l", "theta", "l1"], &l1.table.iter().map(|r| vec![r.0 as f64, r.1, r.2]).collect::<Vec<_>>()),
    );
    let pairs: Vec<(u32, f64)> = ls.iter().flat_map(|&l| thetas.iter().map(move |&t| (l, t))).collect();
    let certs = pairs
        .par_iter()
        .map(|&(l, t)| cap_kernel(l, t, k0, n).map(|k| decay_certificate(&k, 2.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = certs.iter().filter(|c| c.passed).count();
    let trivial = certs.iter().filter(|c| c.trivial).count();
    let unresolved = certs.iter().filter(|c| !c.resolved).count();
    let mut onset = Vec::new();
    let mut cert_rows = Vec::new();
    for (&l, chunk) in ls.iter().zip(certs.chunks(angles)) {
        let mean = chunk.iter().map(|c| c.onset_transverse.log2()).sum::<f64>() / angles as f64;
        onset.push(mean);
        for c in chunk {
            cert_rows.push(vec![
                l as f64,
                c.along_exponent,
                c.transverse_exponent,
                c.onset_along,
                c.onset_transverse,
                f64::from(c.passed as u8),
            ]);
        }
    }
    rep.csv.insert(
        "certificates".into(),
        csv_table(&["l", "along_exponent", "transverse_exponent", "onset_along", "onset_transverse", "passed"], &cert_rows),
    );
    if let Some(first) = certs.first() {
        let mut buf = Vec::new();
        first.write_csv(&mut buf)?;
        rep.csv.insert("shells".into(), String::from_utf8(buf).expect("utf-8"));
    }
    let lx: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let onset_slope = if ls.len() >= 2 { slope(&lx, &onset) } else { f64::NAN };
    let mut cone_q2 = Vec::new();
    let mut cone_inf = Vec::new();
    for &l in ls {
        let part = cone_partition(l, k0, n)?;
        let c = (1u64 << k0) as f64;
        let g = random_band_limited(2, n, c / 2.0, 2.0 * c, rng);
        cone_q2.push(cone_square_ratio(&part, &g, 2.0)?);
        cone_inf.push(cone_square_ratio(&part, &g, f64::INFINITY)?);
        if part.thetas.len() <= 64 {
            let gs: Vec<GridFn> = (0..part.thetas.len()).map(|_| random_fn(2, n, rng)).collect();
            rep.measure(&format!("cone_sum_ratio_p2_l{l}"), cone_sum_ratio(&part, &gs, 2.0)?);
        }
        rep.measure(&format!("cone_overlap_l{l}"), part.max_overlap() as f64);
    }
    rep.series("l1_table", l1.table.iter().map(|r| r.2).collect());
    rep.series("log2_transverse_onset", onset);
    rep.series("cone_q2_ratio", cone_q2.clone());
    rep.series("cone_qinf_ratio", cone_inf);
    rep.measure("l1_max", l1.max);
    rep.measure("l1_spread", l1.ratio);
    rep.measure("onset_slope", onset_slope);
    rep.measure("certificates_passed", passed as f64);
    rep.measure("certificates_trivial", trivial as f64);
    rep.measure("certificates_unresolved", unresolved as f64);
    rep.assert(Assertion::at_most("l1_uniform", l1.ratio, 4.0));
    rep.assert(Assertion::at_most("l1_vs_baseline", l1.max, baselines::CAP_L1_MAX * (1.0 + 1e-9)));
    rep.assert(Assertion::check(
        "decay",
        passed == certs.len(),
        format!("{passed} of {} certificates pass ({unresolved} unresolved, {trivial} trivial)", certs.len()),
    ));
    rep.assert(Assertion::check(
        "onset_slope",
        (0.7..=1.3).contains(&onset_slope),
        format!("slope {onset_slope:.4} in [0.7, 1.3]"),
    ));
    rep.assert(Assertion::at_most("cone_q2", max_of(&cone_q2), 3.0));
    Ok(())
}

fn algebra(rep: &mut RunReport, rng: &mut ChaCha8Rng, n: usize, count: usize) -> Result<(), CliError> {
    let mut ratios = Vec::new();
    let mut exps = Vec::new();
    for i in 0..count {
        let a = random_symbol(1, n, 1 + i % 3, rng.gen())?;
        let b = random_symbol(1, n, 1 + (i + 1) % 3, rng.gen())?;
        ratios.push(algebra_check(&a, &b)?.ratio);
        exps.push(exp_check(&a)?.ratio);
    }
    let (c, e) = (max_of(&ratios), max_of(&exps));
    rep.series("product_ratio", ratios);
    rep.series("exp_exponent", exps);
    rep.measure("product_constant", c);
    rep.measure("exp_constant", e);
    rep.assert(Assertion::at_most(
        "product_stable",
        rel(c, baselines::ALGEBRA_PRODUCT_CONSTANT),
        0.05,
    ));
    rep.assert(Assertion::at_most("exp_stable", rel(e, baselines::ALGEBRA_EXP_CONSTANT), 0.05));
    Ok(())
}

fn infrastructure(rep: &mut RunReport, rng: &mut ChaCha8Rng, n: usize) -> Result<(), CliError> {
    let mut rt: f64 = 0.0;
    let mut pl: f64 = 0.0;
    let n2 = (n / 16).max(16);
    for (dim, size) in [(1, n), (2, n2)] {
        let f = random_fn(dim, size, rng);
        let spec = forward_transform(&f);
        let scale = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        rt = rt.max(inverse_transform(&spec).max_abs_diff(&f)? / scale);
        let e = lp_norm(&f, 2.0)?.powi(2);
        pl = pl.max(rel(e, spec.l2_norm().powi(2)));
    }
    rep.measure("roundtrip", rt);
    rep.measure("plancherel", pl);
    rep.assert(Assertion::at_most("roundtrip", rt, 1e-12));
    rep.assert(Assertion::at_most("plancherel", pl, 1e-12));

    let mut lp: f64 = 0.0;
    for (dim, size) in [(1, n), (2, n2)] {
        let top = max_band(size)?;
        let f = random_band_limited(dim, size, 0.0, (1u64 << top) as f64, rng);
        let mut acc = project_low(&f)?;
        for l in 1..=top {
            acc = acc.add(&project_band(&f, l)?)?;
        }
        lp = lp.max(acc.max_abs_diff(&f)?);
    }
    rep.measure("lp_reconstruction", lp);
    rep.assert(Assertion::at_most("lp_reconstruction", lp, 1e-10));

    let mut pu: f64 = 0.0;
    for k in 0..20_000 {
        let t = 10f64.powf(-4.0 + 8.0 * k as f64 / 20_000.0) * if k % 2 == 0 { 1.0 } else { -1.0 };
        let s: f64 = (-40..=40).map(|j| phi(2f64.powi(-j) * t)).sum();
        pu = pu.max((s - 1.0).abs());
    }
    rep.measure("partition_of_unity", pu);
    rep.assert(Assertion::at_most("partition_of_unity", pu, 1e-10));

    let top = max_band(n)?;
    for (k, (p, q)) in baselines::BERNSTEIN_PAIRS.iter().enumerate() {
        let mut worst = 0.0f64;
        for l in 1..=top {
            for _ in 0..4 {
                let lo = (1u64 << l) as f64 / 2.0;
                let f = random_band_limited(1, n, lo, 4.0 * lo, rng);
                worst = worst.max(bernstein_ratio(&f, l, *p, *q)?);
            }
        }
        let name = format!("bernstein_p{p}_q{q}");
        rep.measure(&name, worst);
        rep.assert(Assertion::at_most(&name, worst, 1.05 * baselines::BERNSTEIN_CONSTANTS[k]));
    }

    let mut probe = ExperimentConfig::new("adjoint-identity", rng.gen());
    probe.n = Some(64);
    probe.count = Some(5);
    let (a, b) = (run(&probe)?, run(&probe)?);
    rep.assert(Assertion::check("determinism", a.deterministic_json() == b.deterministic_json(), "identical reports"));
    Ok(())
}

fn radial(rep: &mut RunReport, n: usize, ms: &[u32]) -> Result<(), CliError> {
    let r = n / 2;
    let center = r as f64 / 2.0;
    let mut q = Vec::new();
    for &m in ms {
        let t = radial_table(&[thin_annulus_profile(m, center, r)])?;
        rep.csv.insert(format!("bands-m{m}"), band_csv(&t));
        q.push(t.total());
    }
    rep.series("m", ms.iter().map(|&m| m as f64).collect());
    rep.series("radial", q.clone());
    rep.measure("radial_spread", spread(&q));
    rep.assert(Assertion::check("finite", q.iter().all(|v| v.is_finite() && *v > 0.0), "positive and finite"));
    rep.assert(Assertion::at_most("bounded_in_m", spread(&q), 4.0));
    Ok(())
}
