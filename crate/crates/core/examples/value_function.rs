//! Evaluate `U(x, y, z)` at a few states and show which formula applies.
//!
//! ```text
//! cargo run --release --example value_function -- 3
//! ```

use spider_core::domain::{gain, in_stopping_region};
use spider_core::value::ValueEvaluator;
use spider_core::{Params, State};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(3);
    let params = Params::new(n)?;
    // builds the U(½, ½, ·) table once; evaluations after that are cheap
    let ev = ValueEvaluator::new(params)?;

    let states = [
        (0.0, 0.0, 0.0),
        (0.1, 0.3, -0.2),
        (-0.2, 0.3, -0.2),
        (0.5, 0.5, -0.1),
        (0.0, 1.0, -0.05),
        (0.3, 1.0, -0.8),
        (1.2, 1.5, -0.4),
        (-1.0, 1.0, -1.0),
    ];
    println!(
        "n = {n}, U(0,0,0) = {:.12}, C_n = {:.12}",
        ev.u000()?,
        ev.best_constant()?
    );
    println!(
        "{:>22}  {:>14}  {:>10}  {:>14}  stop",
        "(x, y, z)", "U", "gain", "region"
    );
    for (x, y, z) in states {
        let s = State::new(x, y, z)?;
        println!(
            "{:>22}  {:>14.10}  {:>10.5}  {:>14}  {}",
            format!("({x}, {y}, {z})"),
            ev.value(&s)?,
            gain(&s)?,
            ev.region(&s)?.label(),
            in_stopping_region(params, &s)?
        );
    }

    println!("\nU(½, ½, s):");
    for k in 0..=5 {
        let s = -0.5 + 0.1 * f64::from(k);
        println!("  s = {s:>5.2}  {:.12}", ev.half_half(s));
    }
    Ok(())
}
