//! Print `U(0,0,0)` and the sharp constant `C_n` for the first few spiders.
//!
//! ```text
//! cargo run --release --example best_constants -- 8
//! ```

use spider_core::value::{best_constant, u000};
use spider_core::Params;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(8);
    println!("{:>3}  {:>20}  {:>20}", "n", "U(0,0,0)", "C_n");
    for n in 1..=n_max {
        let params = Params::new(n)?;
        println!(
            "{:>3}  {:>20.15}  {:>20.15}",
            n,
            u000(params)?,
            best_constant(params)?
        );
    }
    Ok(())
}
