//! Simulate the spider under the optimal rule and under a hand-written rule,
//! and compare the mean payoff `E[D_τ − τ]` with `U(0,0,0)`.
//!
//! ```text
//! cargo run --release --example simulate_optimal -- 3 200000
//! ```

use std::sync::Arc;

use spider_core::montecarlo::{estimate_payoff, DISCRETIZATION_CONSTANT};
use spider_core::value::u000;
use spider_core::{Params, SimConfig, State, StoppingRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let paths: u64 = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(200_000);
    let params = Params::new(n)?;
    let cfg = SimConfig::new(1.0 / 32.0, paths, 42);
    let target = u000(params)?;

    let est = estimate_payoff(params, &cfg, &StoppingRule::Optimal)?;
    let band = 3.0 * est.std_err + DISCRETIZATION_CONSTANT * cfg.step;
    println!("U(0,0,0)           {target:.6}");
    println!(
        "optimal rule       {:.6} ± {:.6}  (|diff| {:.4} ≤ band {:.4}: {})",
        est.mean_payoff,
        est.std_err,
        (est.mean_payoff - target).abs(),
        band,
        (est.mean_payoff - target).abs() <= band
    );
    println!("  E τ = {:.4}, E D = {:.4}", est.mean_tau, est.mean_d);

    // stop when the walker has drifted ½ below its longest rib
    let drawdown = StoppingRule::Custom(Arc::new(|s: &State, _| s.y - s.x >= 0.5));
    let est = estimate_payoff(params, &cfg, &drawdown)?;
    println!(
        "drawdown ½ rule    {:.6} ± {:.6}",
        est.mean_payoff, est.std_err
    );
    Ok(())
}
