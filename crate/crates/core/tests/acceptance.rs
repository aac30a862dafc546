//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;
use spider_core::cli;
use spider_core::montecarlo::{
    audit_battery, audit_inequality, estimate_payoff, verify_zsigma, DISCRETIZATION_CONSTANT,
};
use spider_core::numerics::{integrate, QuadratureConfig};
use spider_core::value::{best_constant, ValueEvaluator};
use spider_core::verify::{n2_residual, run_suite, Suite, VerifyConfig};
use spider_core::{Params, SimConfig, State, StoppingRule};

/// U(0,0,0) for three rays, pinned after Monte Carlo agreement.
const U000_THREE_RAYS: f64 = 0.789_944_226_613_663_15;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn constant_via_cli(n: u32) -> f64 {
    let mut out = Vec::new();
    let code = cli::run(["spider", "constant", "--n", &n.to_string()], &mut out);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&out).unwrap();
    v["result"]["c_n"].as_f64().unwrap()
}

fn closed_form_constants() -> Outcome {
    let e1 = (constant_via_cli(1) - 2f64.sqrt()).abs();
    let e2 = (constant_via_cli(2) - 3f64.sqrt()).abs();
    outcome(
        e1 <= 1e-9 && e2 <= 1e-9,
        format!("|C_1 − √2| = {e1:.1e}, |C_2 − √3| = {e2:.1e} (tol 1e-9)"),
    )
}

fn two_ray_reduction() -> Outcome {
    let ev = ValueEvaluator::new(Params::new(2).unwrap()).unwrap();
    let e0 = (ev.u000().unwrap() - 0.75).abs();
    let (worst, count) = n2_residual(&ev, 21).unwrap();
    outcome(
        e0 <= 1e-8 && worst <= 1e-8 && count >= 10_000,
        format!("|U(0,0,0) − ¾| = {e0:.1e}, max |U − closed form| = {worst:.1e} over {count} states (tol 1e-8)"),
    )
}

fn quadrature_oracle() -> Outcome {
    let r = integrate(
        |s| (0.625 - s / 2.0 + s * s / 2.0) / (1.0 - 2.0 * s).powi(2),
        -0.5,
        0.0,
        &QuadratureConfig::default(),
    )
    .unwrap();
    let e = (r.value - 0.1875).abs();
    outcome(
        e <= 1e-10,
        format!("|integral − 0.1875| = {e:.1e} (tol 1e-10)"),
    )
}

fn payoff_band(n: u32, target: f64, seed: u64) -> Outcome {
    let h = 1.0 / 64.0;
    let cfg = SimConfig::new(h, 1_000_000, seed);
    let est = estimate_payoff(Params::new(n).unwrap(), &cfg, &StoppingRule::Optimal).unwrap();
    let band = 3.0 * est.std_err + DISCRETIZATION_CONSTANT * h;
    let diff = est.mean_payoff - target;
    outcome(
        diff.abs() <= band && est.capped == 0,
        format!(
            "mean {:.6} ± {:.1e} vs {target:.6}: diff {diff:+.5}, band 3se + {DISCRETIZATION_CONSTANT}h = {band:.5}",
            est.mean_payoff, est.std_err
        ),
    )
}

fn three_ray_payoff() -> Outcome {
    let analytic = ValueEvaluator::new(Params::new(3).unwrap())
        .unwrap()
        .u000()
        .unwrap();
    let drift = (analytic - U000_THREE_RAYS).abs();
    let mut o = payoff_band(3, U000_THREE_RAYS, 33);
    o.passed &= drift <= 1e-10;
    o.detail = format!("{}; |U(0,0,0) − pinned| = {drift:.1e}", o.detail);
    o
}

fn zsigma_law() -> Outcome {
    let cfg = SimConfig::new(1.0 / 64.0, 100_000, 5);
    let mut passed = true;
    let mut parts = Vec::new();
    for n in [2u32, 3, 5] {
        let r = verify_zsigma(Params::new(n).unwrap(), &cfg, &State::origin()).unwrap();
        passed &= r.ks_distance < 0.01;
        parts.push(format!("n={n}: KS {:.4}", r.ks_distance));
    }
    outcome(
        passed,
        format!("{} (tol 0.01, 10⁵ paths each)", parts.join(", ")),
    )
}

fn property_suites() -> Outcome {
    let cfg = VerifyConfig::default();
    let mut failures = Vec::new();
    let mut checks = 0;
    for n in 2..=8u32 {
        for suite in Suite::ALL.into_iter().filter(|s| !s.is_statistical()) {
            if suite == Suite::N2Reduction && n != 2 {
                continue;
            }
            let report = run_suite(Params::new(n).unwrap(), suite, &cfg).unwrap();
            checks += report.checks.len();
            for c in report.checks.iter().filter(|c| !c.passed) {
                failures.push(format!("n={n} {suite}: {} = {:.2e}", c.name, c.measured));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checks} checks over n = 2..8 (majorization, seams, kink, Neumann, symmetry, n=2, ODE, U_y)")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn inequality_audit() -> Outcome {
    let cfg = SimConfig::new(1.0 / 64.0, 100_000, 11);
    let mut passed = true;
    let mut parts = Vec::new();
    for n in [2u32, 3, 5] {
        let params = Params::new(n).unwrap();
        let c_n = best_constant(params).unwrap();
        let rows = audit_inequality(params, &cfg, &audit_battery(), c_n).unwrap();
        let worst = rows
            .iter()
            .map(|r| r.gap - r.band)
            .fold(f64::NEG_INFINITY, f64::max);
        let optimal = rows.iter().find(|r| r.attains.is_some()).unwrap();
        passed &= rows.iter().all(|r| r.holds && r.capped == 0) && optimal.attains == Some(true);
        parts.push(format!(
            "n={n}: max(gap − band) {worst:+.4}, optimal gap {:+.4} (band {:.4})",
            optimal.gap, optimal.band
        ));
    }
    outcome(passed, parts.join("; "))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        (
            "closed-form constants C_1 = √2, C_2 = √3",
            closed_form_constants,
        ),
        (
            "general construction reproduces two rays",
            two_ray_reduction,
        ),
        (
            "quadrature oracle ∫(5/8 − s/2 + s²/2)/(1−2s)² = 3/16",
            quadrature_oracle,
        ),
        (
            "Monte Carlo payoff, two rays, 10⁶ paths, h = 1/64",
            || payoff_band(2, 0.75, 7),
        ),
        (
            "Monte Carlo payoff, three rays, 10⁶ paths, h = 1/64",
            three_ray_payoff,
        ),
        ("law of Z at the first time Y = ½", zsigma_law),
        ("grid property suites", property_suites),
        (
            "E[D_τ] ≤ C_n √(Eτ) over the rule battery, equality for the optimal rule",
            inequality_audit,
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "[{}] {}. {name}: {} ({:.1?})",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed()
        );
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
