//! One test per acceptance criterion at the default (full-size) grids. Each
//! prints one PASS/FAIL line per check and a summary line with its runtime.
//!
//! Lines go straight to stderr so they show up without `--nocapture`.
//!
//! The criteria share one lock so that their wall-clock budgets are measured
//! without competing for cores.

use std::io::Write;
use std::process::Command as Process;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use cubex::config::{Command, ExperimentConfig};
use cubex::experiments::{self, exact_identities, expander, lemma_envelopes, major_approx, theorem_envelopes, vanishing_and_bounds};
use cubex::report::Report;
use cubex::Result;

static SERIAL: Mutex<()> = Mutex::new(());

macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stderr(), $($t)*);
    }};
}

type Section = fn(&ExperimentConfig, &mut Report) -> Result<()>;

fn criterion(id: u32, title: &str, command: Command, overrides: &[(&str, &str)], section: Section, budget: Duration) -> Report {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = ExperimentConfig::resolve(command, overrides.iter().copied()).unwrap();
    let mut report = Report::new(&cfg);
    let start = Instant::now();
    section(&cfg, &mut report).unwrap();
    let elapsed = start.elapsed();
    for c in &report.checks {
        say!("criterion {id}: {}", c.line());
    }
    let ok = report.passed() && elapsed < budget;
    say!(
        "{} criterion {id} ({title}): {}/{} checks, {:.1} s (budget {} s)",
        if ok { "PASS" } else { "FAIL" },
        report.checks.iter().filter(|c| c.pass).count(),
        report.checks.len(),
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    let failed: Vec<String> = report.failures().map(|c| c.line()).collect();
    assert!(failed.is_empty(), "criterion {id} failed:\n{}", failed.join("\n"));
    assert!(elapsed < budget, "criterion {id} took {elapsed:?}, budget {budget:?}");
    report
}

const MIN: Duration = Duration::from_secs(60);

#[test]
fn criterion_1_exact_identities() {
    criterion(1, "exact identities", Command::VerifyIdentities, &[], exact_identities, 2 * MIN);
}

#[test]
fn criterion_2_vanishing_and_bounds() {
    let r = criterion(2, "exact vanishing and bounds", Command::VerifyIdentities, &[], vanishing_and_bounds, MIN);
    let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    assert!(names.iter().any(|n| n.contains("kappa")), "{names:?}");
}

#[test]
fn criterion_3_lemma_envelopes() {
    let r = criterion(3, "envelope stability", Command::VerifyEnvelopes, &[("suite", "lemmas")], lemma_envelopes, 10 * MIN);
    assert!(r.envelopes.len() >= 7);
    for e in &r.envelopes {
        assert!(e.max_ratio.is_finite(), "{}", e.name);
    }
}

#[test]
fn criterion_4_major_arc_approximation() {
    let r = criterion(4, "major-arc approximation", Command::MajorApprox, &[], major_approx, 15 * MIN);
    for w in ["1", "6", "primorial"] {
        let key = format!("fitted C at P = 1000, w = {w}");
        let c = r.results[&key].as_f64().unwrap();
        say!("criterion 4: fitted C (P = 10^3, w = {w}) = {c:.4}");
        assert!(c.is_finite() && c > 0.0);
    }
}

#[test]
fn criterion_5_theorem_envelopes() {
    let r = criterion(5, "theorem envelope reports", Command::VerifyEnvelopes, &[("suite", "theorems")], theorem_envelopes, 15 * MIN);
    for e in r.envelopes.iter().filter(|e| e.name.starts_with("F_")) {
        assert_eq!(e.samples, 6000, "{}", e.name);
    }
}

#[test]
fn criterion_6_expander() {
    let r = criterion(6, "expander experiment", Command::Expander, &[], expander, 5 * MIN);
    let m = &r.results["moments"];
    assert_eq!(m["n"].as_u64(), Some(1_000_000));
}

/// Small but complete configurations of every command.
fn determinism_configs() -> Vec<ExperimentConfig> {
    let small: Vec<(Command, Vec<(&str, &str)>)> = vec![
        (Command::SumEval, vec![("sum", "F_w"), ("alpha", "0.25"), ("P", "400"), ("w", "6")]),
        (Command::SumEval, vec![("sum", "K"), ("P", "1000"), ("beta1", "1e-7")]),
        (Command::ArcClassify, vec![("alpha", "0.5,0.3141592653589793,1/27"), ("P", "1000"), ("w", "primorial")]),
        (
            Command::VerifyIdentities,
            vec![
                ("t_samples", "500"),
                ("reduction_cases", "100"),
                ("mobius_p_grid", "400,900"),
                ("mobius_samples", "10"),
                ("rearrangement_samples", "10"),
                ("vanishing_q_max", "40"),
                ("w_table_r_max", "200"),
                ("w_bound_p_max", "60"),
                ("kappa_q_max", "10000"),
            ],
        ),
        (
            Command::VerifyEnvelopes,
            vec![
                ("suite", "all"),
                ("p_grid", "400,900"),
                ("minor_samples", "20"),
                ("near_samples", "20"),
                ("gauss_q_max", "30"),
                ("hua_q_max", "30"),
                ("quadweyl_x_exp", "10,11"),
                ("quadweyl_samples", "10"),
                ("lj_p_grid", "100,1000"),
                ("lj_samples", "10"),
                ("j310_samples", "10"),
                ("k_beta_samples", "5"),
                ("weyl_x_exp", "10,11"),
                ("weyl_samples", "10"),
                ("gcd_r_max", "50"),
                ("gcd_h_grid", "10,100"),
            ],
        ),
        (Command::MajorApprox, vec![("p_grid", "400,900"), ("rungs", "2"), ("w_list", "1,primorial")]),
        (
            Command::Expander,
            vec![("N", "20000"), ("trend_n_grid", "10000,20000"), ("oracle_runs", "2"), ("oracle_n_max", "5000")],
        ),
        (Command::BoundTable, vec![]),
    ];
    small
        .into_iter()
        .map(|(c, kv)| ExperimentConfig::resolve(c, kv).unwrap())
        .collect()
}

fn run_with_threads(cfg: &ExperimentConfig, threads: usize) -> String {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| experiments::run(cfg))
        .unwrap()
        .to_json()
}

#[test]
fn criterion_7_determinism() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut all = true;
    for cfg in determinism_configs() {
        let a = run_with_threads(&cfg, 1);
        let b = run_with_threads(&cfg, 1);
        let c = run_with_threads(&cfg, 3);
        let same = a == b && a == c;
        all &= same;
        say!(
            "criterion 7: [{}] {} reruns bit-identical (1, 1 and 3 threads, {} bytes)",
            if same { "PASS" } else { "FAIL" },
            cfg.command,
            a.len()
        );
    }

    // the binary, twice, with the same flags
    let bin = env!("CARGO_BIN_EXE_cubex");
    let args = ["expander", "N=20000", "trend_n_grid=10000,20000", "oracle_runs=2", "oracle_n_max=5000", "--seed", "7"];
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let o = Process::new(bin).args(args).output().unwrap();
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            o.stdout
        })
        .collect();
    let same = outs[0] == outs[1] && !outs[0].is_empty();
    all &= same;
    say!("criterion 7: [{}] cubex binary stdout bit-identical across runs", if same { "PASS" } else { "FAIL" });
    say!(
        "{} criterion 7 (determinism): {:.1} s",
        if all { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    assert!(all);
}
