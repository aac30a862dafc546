use std::sync::Arc;

use spider_core::montecarlo::{
    estimate_payoff, simulate_paths, verify_scaling, verify_zsigma, zsigma_cdf_analytic,
    ScalingSpec, DISCRETIZATION_CONSTANT,
};
use spider_core::value::u000;
use spider_core::{Params, SimConfig, State, StoppingRule};

fn p(n: u32) -> Params {
    Params::new(n).unwrap()
}

fn within_band(n: u32, step: f64, paths: u64, seed: u64) {
    let est = estimate_payoff(
        p(n),
        &SimConfig::new(step, paths, seed),
        &StoppingRule::Optimal,
    )
    .unwrap();
    let target = u000(p(n)).unwrap();
    let band = 3.0 * est.std_err + DISCRETIZATION_CONSTANT * step;
    assert!(
        (est.mean_payoff - target).abs() <= band,
        "n={n}: {} vs {target}, band {band}",
        est.mean_payoff
    );
}

#[test]
fn single_ray_optimal_payoff() {
    within_band(1, 1.0 / 32.0, 100_000, 1);
}

#[test]
fn optimal_payoff_three_and_five_rays() {
    within_band(3, 1.0 / 32.0, 100_000, 2);
    within_band(5, 1.0 / 32.0, 100_000, 3);
}

#[test]
fn wald_identity_for_fixed_times() {
    // E[X_T²] = T for the grid walk, with x measured from the origin
    let cfg = SimConfig::new(1.0 / 16.0, 50_000, 4);
    let paths =
        simulate_paths(p(3), &cfg, &StoppingRule::FixedTime(1.0), &State::origin()).unwrap();
    let m = paths.len() as f64;
    let mean_sq = paths.iter().map(|r| r.x_tau * r.x_tau).sum::<f64>() / m;
    let var = paths
        .iter()
        .map(|r| (r.x_tau * r.x_tau - mean_sq).powi(2))
        .sum::<f64>()
        / (m - 1.0);
    assert!(
        (mean_sq - 1.0).abs() < 4.0 * (var / m).sqrt(),
        "E X² = {mean_sq}"
    );
    assert!(paths.iter().all(|r| r.tau == 1.0));
}

#[test]
fn two_rays_is_brownian_range() {
    // for two rays D_T is the range of Brownian motion: E = 2√(2T/π)
    let cfg = SimConfig::new(1.0 / 32.0, 40_000, 5);
    let est = estimate_payoff(p(2), &cfg, &StoppingRule::FixedTime(1.0)).unwrap();
    let exact = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((est.mean_d - exact).abs() <= 4.0 * est.se_d + DISCRETIZATION_CONSTANT * cfg.step);
}

#[test]
fn first_hit_diameter_stops_at_the_level() {
    let cfg = SimConfig::new(1.0 / 16.0, 1_000, 6);
    for r in simulate_paths(
        p(4),
        &cfg,
        &StoppingRule::FirstHitDiameter(1.0),
        &State::origin(),
    )
    .unwrap()
    {
        assert!((r.d_tau - 1.0).abs() < 1e-12);
    }
}

#[test]
fn custom_rule_sees_elapsed_time() {
    let cfg = SimConfig::new(1.0 / 8.0, 200, 8);
    let rule = StoppingRule::Custom(Arc::new(|_: &State, t| t >= 0.5));
    for r in simulate_paths(p(3), &cfg, &rule, &State::origin()).unwrap() {
        assert_eq!(r.tau, 0.5);
    }
}

#[test]
fn zsigma_from_several_starts() {
    let cfg = SimConfig::new(1.0 / 64.0, 100_000, 9);
    for (n, start) in [
        (2, State::origin()),
        (3, State::new(-0.125, 0.25, -0.125).unwrap()),
        (5, State::new(0.25, 0.375, -0.0625).unwrap()),
    ] {
        let r = verify_zsigma(p(n), &cfg, &start).unwrap();
        assert!(r.ks_distance < 0.01, "n={n}: {r:?}");
        let se = (r.atom_lattice * (1.0 - r.atom_lattice) / r.num_samples as f64).sqrt();
        assert!(
            (r.atom_empirical - r.atom_lattice).abs() < 4.0 * se + 1e-12,
            "n={n}: {r:?}"
        );
        // the grid atom converges to the continuum atom
        assert!((r.atom_lattice - r.atom_analytic).abs() < 8.0 * cfg.step);
    }
    assert!(verify_zsigma(p(1), &cfg, &State::origin()).is_err());
    assert!(verify_zsigma(p(3), &cfg, &State::new(0.0, 0.5, 0.0).unwrap()).is_err());
}

#[test]
fn zsigma_cdf_example() {
    let v = zsigma_cdf_analytic(p(3), 0.0, 0.0, 0.0, -0.25).unwrap();
    assert!((v - 0.4).abs() < 1e-15);
}

#[test]
fn brownian_scaling() {
    let cfg = SimConfig::new(1.0 / 64.0, 40_000, 10);
    let start = State::new(0.125, 0.25, -0.125).unwrap();
    let report = verify_scaling(p(3), &cfg, &ScalingSpec::new(2.0, 1.0, start)).unwrap();
    assert!(report.max_standardized_discrepancy < 4.0, "{report:?}");
    assert_eq!(report.moments.len(), 6);

    let report = verify_scaling(p(3), &cfg, &ScalingSpec::new(1.0, 1.0, start)).unwrap();
    assert!(report.max_standardized_discrepancy < 4.0, "{report:?}");
}

#[test]
fn square_root_time_change_is_not_a_symmetry() {
    // observing the λ-scaled process at t·λ^(−1/2) instead of t·λ^(−2)
    // breaks the moment match
    let cfg = SimConfig::new(1.0 / 64.0, 40_000, 11);
    let start = State::new(0.125, 0.25, -0.125).unwrap();
    let spec = ScalingSpec {
        time_exponent: -0.5,
        ..ScalingSpec::new(2.0, 1.0, start)
    };
    let report = verify_scaling(p(3), &cfg, &spec).unwrap();
    assert!(report.max_standardized_discrepancy > 10.0, "{report:?}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut cfg = SimConfig::new(1.0 / 16.0, 2_000, 12);
    let a = simulate_paths(p(5), &cfg, &StoppingRule::Optimal, &State::origin()).unwrap();
    cfg.threads = Some(1);
    let b = simulate_paths(p(5), &cfg, &StoppingRule::Optimal, &State::origin()).unwrap();
    cfg.threads = Some(4);
    let c = simulate_paths(p(5), &cfg, &StoppingRule::Optimal, &State::origin()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
