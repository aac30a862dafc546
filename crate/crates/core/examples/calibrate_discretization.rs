//! Measure the grid bias of the simulated optimal payoff.
//!
//! For two rays `U(0,0,0) = ¾` exactly, so the difference between the
//! simulated mean and ¾ at several step sizes shows how the bias scales
//! with `h`.
//!
//! ```text
//! cargo run --release --example calibrate_discretization -- [n] [paths]
//! ```

use spider_core::montecarlo::{estimate_payoff, DISCRETIZATION_CONSTANT};
use spider_core::value::u000;
use spider_core::{Params, SimConfig, StoppingRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let paths: u64 = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(400_000);
    let params = Params::new(n)?;
    let exact = u000(params)?;
    println!("n = {n}, U(0,0,0) = {exact:.12}, allowance = {DISCRETIZATION_CONSTANT}·h");
    println!(
        "{:>8}  {:>14}  {:>10}  {:>10}  {:>10}",
        "h", "mean", "se", "bias", "bias/h"
    );
    for k in [8u32, 16, 32, 64] {
        let h = 1.0 / f64::from(k);
        let est = estimate_payoff(
            params,
            &SimConfig::new(h, paths, 2024),
            &StoppingRule::Optimal,
        )?;
        let bias = est.mean_payoff - exact;
        println!(
            "{:>8}  {:>14.8}  {:>10.2e}  {:>10.5}  {:>10.4}",
            format!("1/{k}"),
            est.mean_payoff,
            est.std_err,
            bias,
            bias / h
        );
    }
    Ok(())
}
