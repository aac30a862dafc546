//! Audit `E[D_τ] ≤ C_n √(E τ)` for fixed times, diameter hitting times and
//! the optimal rule, which should attain the bound.
//!
//! ```text
//! cargo run --release --example inequality_audit -- 3 50000
//! ```

use spider_core::montecarlo::{audit_battery, audit_inequality};
use spider_core::value::best_constant;
use spider_core::{Params, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let paths: u64 = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(50_000);
    let params = Params::new(n)?;
    let c_n = best_constant(params)?;
    let cfg = SimConfig::new(1.0 / 32.0, paths, 99);
    println!("n = {n}, C_n = {c_n:.9}");
    println!(
        "{:<22}  {:>8}  {:>8}  {:>10}  {:>9}  {:>8}  holds",
        "rule", "E D", "E τ", "C_n √Eτ", "gap", "band"
    );
    for row in audit_inequality(params, &cfg, &audit_battery(), c_n)? {
        println!(
            "{:<22}  {:>8.4}  {:>8.4}  {:>10.4}  {:>+9.4}  {:>8.4}  {}{}",
            row.rule,
            row.mean_d,
            row.mean_tau,
            row.bound,
            row.gap,
            row.band,
            row.holds,
            match row.attains {
                Some(true) => " (attains)",
                Some(false) => " (does not attain)",
                None => "",
            }
        );
    }
    Ok(())
}
