//! Check Brownian scaling of the reduced process: `λ·(X, Y, Z)` observed at
//! `t·λ^e` from `(x, y, z)` against `(X, Y, Z)` at `t` from `λ·(x, y, z)`.
//! Only `e = −2` is a symmetry; `e = −½` is shown for contrast.
//!
//! ```text
//! cargo run --release --example brownian_scaling
//! ```

use spider_core::montecarlo::{verify_scaling, ScalingSpec};
use spider_core::{Params, SimConfig, State};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = Params::new(3)?;
    let cfg = SimConfig::new(1.0 / 64.0, 40_000, 17);
    let start = State::new(0.125, 0.25, -0.125)?;
    for exponent in [-2.0, -0.5] {
        let spec = ScalingSpec {
            time_exponent: exponent,
            ..ScalingSpec::new(2.0, 1.0, start)
        };
        let report = verify_scaling(params, &cfg, &spec)?;
        println!("time exponent {exponent}:");
        for m in &report.moments {
            println!(
                "  {:<6} scaled {:>9.5}  direct {:>9.5}  ({:>6.2} se)",
                m.name, m.scaled, m.direct, m.z_score
            );
        }
        println!(
            "  max discrepancy {:.2} se\n",
            report.max_standardized_discrepancy
        );
    }
    Ok(())
}
