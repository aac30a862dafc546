//! Compare the simulated law of the second rib at the first time the longest
//! rib reaches ½ with its closed form.
//!
//! ```text
//! cargo run --release --example zsigma_law -- 3
//! ```

use spider_core::montecarlo::{simulate_paths, verify_zsigma, zsigma_cdf_analytic};
use spider_core::{Params, SimConfig, State, StoppingRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(3);
    let params = Params::new(n)?;
    let cfg = SimConfig::new(1.0 / 64.0, 100_000, 3);
    let start = State::origin();

    let paths = simulate_paths(params, &cfg, &StoppingRule::LongestRibAtLeast(0.5), &start)?;
    println!("{:>7}  {:>10}  {:>10}", "s", "empirical", "analytic");
    for k in 0..=8 {
        let s = -0.5 + 0.0625 * f64::from(k);
        let below =
            paths.iter().filter(|r| r.z_tau <= s + 1e-12).count() as f64 / paths.len() as f64;
        println!(
            "{s:>7.4}  {below:>10.5}  {:>10.5}",
            zsigma_cdf_analytic(params, 0.0, 0.0, 0.0, s)?
        );
    }

    let report = verify_zsigma(params, &cfg, &start)?;
    println!(
        "\nKS distance {:.5} over {} samples",
        report.ks_distance, report.num_samples
    );

    let start = State::new(0.125, 0.25, -0.125)?;
    let report = verify_zsigma(params, &cfg, &start)?;
    println!(
        "from (0.125, 0.25, −0.125): KS {:.5}, atom at z {:.4} (grid law {:.4}, continuum {:.4})",
        report.ks_distance, report.atom_empirical, report.atom_lattice, report.atom_analytic
    );
    Ok(())
}
