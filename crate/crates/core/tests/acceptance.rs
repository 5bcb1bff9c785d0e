//! Acceptance criteria: one PASS/FAIL line each; exits nonzero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use mfdim::estimators::{
    legendre_transform, s_energy, tau_box, to_json_with_meta, DimensionEstimate, MomentMode,
    ScaleGrid, TauOptions,
};
use mfdim::experiments::{
    catalog_entry, run_suite, CheckReport, MeasureSpec, SuiteReport, SuiteSpec, Verdict, SHIPPED,
};
use mfdim::geometry::sample_grassmannian;
use mfdim::provenance::Provenance;
use mfdim::{DiscreteMeasure, Point, RandomSource};

/// Seed of the acceptance suite run.
const SUITE_SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn grid_for(spec: &MeasureSpec, mu: &DiscreteMeasure, q: &[f64]) -> ScaleGrid {
    spec.recommended_scales()
        .grid(mu.diameter(), mu.resolution(), q.to_vec())
        .expect("catalog ladders are valid")
}

fn estimates(name: &str, q: &[f64], mode: MomentMode) -> Vec<DimensionEstimate> {
    let spec = MeasureSpec::catalog(name);
    let mu = spec.build().expect("catalog measure builds");
    let grid = grid_for(&spec, &mu, q);
    let opts = TauOptions { mode, ..Default::default() };
    tau_box(&mu.view(), &grid, &opts).expect("estimates")
}

/// log_2 Σ_I μ(I)^q / j over the 2^j dyadic intervals of [0, 1).
fn dyadic_box_exponent(mu: &DiscreteMeasure, j: u32, q: f64) -> f64 {
    let cells = 1usize << j;
    let mut mass = vec![0.0; cells];
    for (x, w) in mu.atoms() {
        let k = ((x[0] * cells as f64).floor() as usize).min(cells - 1);
        mass[k] += w;
    }
    let s: f64 = mass.iter().filter(|m| **m > 0.0).map(|m| m.powf(q)).sum();
    s.log2() / j as f64
}

fn criterion_1() -> Outcome {
    let qs = [0.0, 0.5, 2.0, 3.0];
    let entry = catalog_entry("binomial").unwrap();
    let est = estimates("binomial", &qs, MomentMode::Packing);
    let mu = MeasureSpec::catalog("binomial").build().unwrap();
    let mut worst: f64 = 0.0;
    let mut oracle_gap: f64 = 0.0;
    let mut parts = Vec::new();
    for (e, &q) in est.iter().zip(&qs) {
        let exact = entry.tau.tau(q);
        for j in [3, 6] {
            oracle_gap = oracle_gap.max((dyadic_box_exponent(&mu, j, q) - exact).abs());
        }
        worst = worst.max((e.ols - exact).abs());
        parts.push(format!("q={q}: {:.4} vs {:.4}", e.ols, exact));
    }
    outcome(
        worst <= 0.05 && oracle_gap <= 1e-9,
        format!("{}; max |err| {worst:.4} (tol 0.05); box-sum oracle gap {oracle_gap:.1e}", parts.join(", ")),
    )
}

fn criterion_2_11() -> (Outcome, Outcome) {
    let qs: Vec<f64> = (-2..=6).map(|k| k as f64 * 0.5).collect();
    let one = qs.iter().position(|&q| q == 1.0).unwrap();
    let mut tau1 = Vec::new();
    let mut worst1: f64 = 0.0;
    let mut mono_ok = true;
    let mut convex_ok = true;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_bend = f64::INFINITY;
    for name in SHIPPED {
        let est = estimates(name, &qs, MomentMode::Packing);
        let t1 = est[one].ols;
        worst1 = worst1.max(t1.abs());
        tau1.push(format!("{name} {t1:+.4}"));
        for w in est.windows(2) {
            let rise = w[1].ols - w[0].ols;
            worst_rise = worst_rise.max(rise);
            if rise > 0.02 {
                mono_ok = false;
            }
        }
        for w in est.windows(3) {
            let bend = w[0].upper - 2.0 * w[1].upper + w[2].upper;
            worst_bend = worst_bend.min(bend);
            if bend < -0.05 {
                convex_ok = false;
            }
        }
    }
    (
        outcome(worst1 <= 0.02, format!("{}; max |tau(1)| {worst1:.4} (tol 0.02)", tau1.join(", "))),
        outcome(
            mono_ok && convex_ok,
            format!(
                "{} measures, q in [-1, 3]: largest rise {worst_rise:+.4} (slack 0.02), \
                 smallest upper second difference {worst_bend:+.4} (slack -0.05)",
                SHIPPED.len()
            ),
        ),
    )
}

fn criterion_3() -> Outcome {
    let e = &estimates("cantor", &[0.0], MomentMode::Packing)[0];
    let exact = 2f64.ln() / 3f64.ln();
    let err = (e.ols - exact).abs();
    outcome(err <= 0.03, format!("tau(0) = {:.4} vs {exact:.4}, |err| {err:.4} (tol 0.03)", e.ols))
}

fn criterion_4() -> Outcome {
    let qs = [1.5, 2.0, 3.0];
    let p = estimates("binomial", &qs, MomentMode::Packing);
    let i = estimates("binomial", &qs, MomentMode::Integral);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for ((a, b), q) in p.iter().zip(&i).zip(qs) {
        worst = worst.max((a.ols - b.ols).abs());
        parts.push(format!("q={q}: packing {:.4}, integral {:.4}", a.ols, b.ols));
    }
    outcome(worst <= 0.07, format!("{}; max gap {worst:.4} (tol 0.07)", parts.join(", ")))
}

fn suite_line(r: &CheckReport) -> String {
    let laws: Vec<String> = r
        .laws
        .iter()
        .map(|l| format!("{} {}/{} V-fraction {:.2}", l.law, l.passed, l.records, l.fraction))
        .collect();
    format!("{}: {}", r.verdict.as_str(), laws.join(", "))
}

fn criterion_5(r: &CheckReport) -> Outcome {
    let rel = |law: &str| {
        r.records
            .iter()
            .filter(|x| x.law == law)
            .map(|x| ((x.lhs - x.rhs) / x.rhs).abs())
            .fold(0.0, f64::max)
    };
    outcome(
        r.verdict == Verdict::Pass,
        format!(
            "max relative error vs potential {:.3} (tol 0.05); vs exact Haar average {:.3}; {}",
            rel("kernel-identity"),
            rel("kernel-haar"),
            suite_line(r)
        ),
    )
}

fn criterion_6(r: &CheckReport) -> Outcome {
    let worst = r
        .records
        .iter()
        .map(|x| x.lhs - x.rhs)
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        r.verdict == Verdict::Pass,
        format!("largest projected - source {worst:+.4} (slack 0.05); {}", suite_line(r)),
    )
}

fn criterion_7(r: &CheckReport) -> Outcome {
    let worst = r
        .records
        .iter()
        .filter(|x| x.law == "th2-2")
        .map(|x| (x.lhs - x.rhs).abs())
        .fold(0.0, f64::max);
    outcome(
        r.verdict == Verdict::Pass,
        format!("max |proxy - (1 - q)| {worst:.4} (tol 0.1); {}", suite_line(r)),
    )
}

fn criterion_8() -> Outcome {
    let vs = sample_grassmannian(2, 1, 10_000, &RandomSource::new(8, 0)).unwrap();
    let mean = vs.iter().map(|v| v.row(0)[0].powi(2)).sum::<f64>() / vs.len() as f64;
    let resid = vs.iter().map(|v| v.orthonormality_residual()).fold(0.0, f64::max);
    outcome(
        (mean - 0.5).abs() <= 0.02 && resid <= 1e-10,
        format!("mean |P_V e1|^2 = {mean:.4} (0.5 +- 0.02); max residual {resid:.1e} (tol 1e-10)"),
    )
}

fn criterion_9() -> Outcome {
    let affine: Vec<(f64, f64)> = (0..=16).map(|k| {
        let q = -2.0 + k as f64 * 0.25;
        (q, 2.0 * (1.0 - q))
    }).collect();
    let f2 = legendre_transform(&affine, &[2.0]).unwrap().points[0].f;

    let entry = catalog_entry("binomial").unwrap();
    let qs: Vec<f64> = (-4..=12).map(|k| k as f64 * 0.25).collect();
    let est = estimates("binomial", &qs, MomentMode::Packing);
    let tau: Vec<(f64, f64)> = est.iter().map(|e| (e.q, e.ols)).collect();
    let alpha = -entry.tau.derivative(1.0);
    let f = legendre_transform(&tau, &[alpha]).unwrap().points[0].f;
    outcome(
        f2 == 2.0 && (f - 0.8813).abs() <= 0.02,
        format!("affine f*(2) = {f2}; binomial f*({alpha:.4}) = {f:.4} (0.8813 +- 0.02)"),
    )
}

fn criterion_10() -> Outcome {
    let corners: Vec<(Point, f64)> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        .into_iter()
        .map(|c| (Point::new(c.to_vec()), 0.25))
        .collect();
    let four = DiscreteMeasure::from_atoms(2, corners).unwrap();
    let e = s_energy(&four, 1.0).unwrap();
    let exact = (8.0 + 2.0 * 2f64.sqrt()) / 16.0;
    let single = DiscreteMeasure::from_atoms(2, vec![(Point::new(vec![0.3, 0.4]), 1.0)]).unwrap();
    let e1 = s_energy(&single, 1.0).unwrap();
    outcome(
        (e - exact).abs() <= 1e-12 && e1 == 0.0,
        format!("I_1(corners) = {e:.15} vs {exact:.15}; single atom {e1}"),
    )
}

fn criterion_12(a: &SuiteReport, b: &SuiteReport) -> Outcome {
    let prov = Provenance::new(Some(SUITE_SEED), None);
    let ja = to_json_with_meta(&prov, a).unwrap();
    let jb = to_json_with_meta(&prov, b).unwrap();
    outcome(ja == jb, format!("{} bytes per report, identical: {}", ja.len(), ja == jb))
}

fn main() -> ExitCode {
    let suite_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/suites/acceptance.json");
    let suite = SuiteSpec::from_json(&std::fs::read_to_string(&suite_path).unwrap()).unwrap();
    let rng = RandomSource::new(SUITE_SEED, 0);
    let start = Instant::now();

    let mut lines: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |k: usize, name: &'static str, o: Outcome| {
        println!("criterion {k:2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        lines.push((k, name, o));
    };
    record(1, "multinomial tau oracle", criterion_1());
    let (c2, c11) = criterion_2_11();
    record(2, "tau(1) = 0 on shipped measures", c2);
    record(3, "Cantor box dimension", criterion_3());
    record(4, "packing vs integral moments", criterion_4());
    let first = run_suite(&suite.specs, &rng);
    let by_id = |id: &str| {
        first
            .reports
            .iter()
            .find(|r| r.spec.id.as_str() == id)
            .expect("acceptance suite has the check")
    };
    record(5, "kernel identity", criterion_5(by_id("KERNEL_IDENTITY")));
    record(6, "for-all projection law, q <= 1", criterion_6(by_id("TH1")));
    record(7, "max law of the upper proxy", criterion_7(by_id("TH2")));
    record(8, "Grassmannian sampler", criterion_8());
    record(9, "Legendre transform", criterion_9());
    record(10, "s-energy", criterion_10());
    record(11, "monotonicity and convexity", c11);
    let second = run_suite(&suite.specs, &rng);
    record(12, "determinism", criterion_12(&first, &second));

    let failed: Vec<usize> = lines.iter().filter(|(_, _, o)| !o.pass).map(|(k, _, _)| *k).collect();
    println!(
        "acceptance: {}/{} criteria pass ({:.0} s){}",
        lines.len() - failed.len(),
        lines.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
