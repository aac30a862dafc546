//! Run the grid-based property suites for several spiders and print the
//! measured residuals.
//!
//! ```text
//! cargo run --release --example property_suites -- 2 8
//! ```

use std::time::Instant;

use spider_core::verify::{run_suite, Suite, VerifyConfig};
use spider_core::Params;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let lo: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let hi: u32 = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(lo.max(8));
    let cfg = VerifyConfig::default();
    for n in lo..=hi {
        let params = Params::new(n)?;
        for suite in Suite::ALL.into_iter().filter(|s| !s.is_statistical()) {
            if suite == Suite::N2Reduction && n != 2 {
                continue;
            }
            let t = Instant::now();
            let report = run_suite(params, suite, &cfg)?;
            for c in &report.checks {
                println!(
                    "n={n} {:<13} {} {:<50} {:>11.3e} (tol {:.0e}, {} samples)",
                    suite.name(),
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tolerance,
                    c.samples
                );
            }
            eprintln!("  {suite} took {:.2?}", t.elapsed());
        }
    }
    Ok(())
}
