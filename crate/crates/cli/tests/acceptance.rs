//! Acceptance suite: every criterion at its pinned thresholds, one line each.
//!
//! Criteria listed in `KNOWN_RED` cannot be met at this grid scale; the
//! reasons are recorded in the decisions ledger. The run fails if the set of
//! failing criteria differs from that list in either direction.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rough_pdo_cli::{run, ExperimentConfig, RunReport};

const KNOWN_RED: [u8; 3] = [2, 4, 8];

struct Criterion {
    id: u8,
    name: &'static str,
    config: &'static str,
    limit_s: f64,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "identity and adjointness", config: "adjoint-identity", limit_s: 10.0 },
    Criterion { id: 2, name: "counterexample exactness", config: "counterexample-growth", limit_s: 120.0 },
    Criterion { id: 3, name: "norm vs B2 at desk scale", config: "theorem1-bound-sweep", limit_s: 300.0 },
    Criterion { id: 4, name: "scale invariance", config: "scale-invariance", limit_s: 60.0 },
    Criterion { id: 5, name: "thin-interval domination", config: "carleson-domination", limit_s: 300.0 },
    Criterion { id: 6, name: "thin-circle maximal norms", config: "thin-circle-norms", limit_s: 600.0 },
    Criterion { id: 7, name: "directional sharpness", config: "directional-sharpness", limit_s: 180.0 },
    Criterion { id: 8, name: "cap kernel certificates", config: "cap-kernel-certificates", limit_s: 300.0 },
    Criterion { id: 9, name: "algebra constants", config: "algebra-check", limit_s: 180.0 },
    Criterion { id: 10, name: "infrastructure invariants", config: "infrastructure", limit_s: 60.0 },
];

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn summarize(rep: &RunReport) -> String {
    let failed: Vec<String> = rep.assertions.iter().filter(|a| !a.passed).map(|a| format!("{}: {}", a.name, a.detail)).collect();
    if failed.is_empty() {
        format!("{} assertions hold", rep.assertions.len())
    } else {
        failed.join("; ")
    }
}

fn evaluate(c: &Criterion) -> (bool, String) {
    let cfg = match ExperimentConfig::load(&config_path(c.config)) {
        Ok(cfg) => cfg,
        Err(e) => return (false, e.to_string()),
    };
    let start = Instant::now();
    let result = run(&cfg);
    let secs = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match &result {
        Ok(rep) => (rep.passed(), summarize(rep)),
        Err(e) => (false, e.to_string()),
    };
    if secs > c.limit_s {
        passed = false;
        detail.push_str(&format!("; runtime {secs:.1}s over {}s", c.limit_s));
    } else {
        detail.push_str(&format!(" [{secs:.1}s]"));
    }
    if c.id == 2 {
        // The feasible part of the sweep, reported alongside the full one.
        if let Ok(rep) = ExperimentConfig::load(&config_path("counterexample-feasible")).and_then(|cfg| run(&cfg)) {
            let word = if rep.passed() { "holds" } else { "fails" };
            detail.push_str(&format!("; feasible sweep {word}: {}", summarize(&rep)));
        }
    }
    (passed, detail)
}

fn main() -> ExitCode {
    let mut red = Vec::new();
    println!("acceptance suite");
    for c in &CRITERIA {
        let (passed, detail) = evaluate(c);
        println!("{:>2}. {:<28} {}  {}", c.id, c.name, if passed { "PASS" } else { "FAIL" }, detail);
        if !passed {
            red.push(c.id);
        }
    }
    let passed = CRITERIA.len() - red.len();
    println!("{passed} of {} criteria pass; failing: {red:?}; expected failing: {KNOWN_RED:?}", CRITERIA.len());
    if red == KNOWN_RED {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing set changed from the recorded one");
        ExitCode::FAILURE
    }
}
