//! Tabulate the free boundary: the lower edge `f(z)` of the stopping band,
//! the upper edge `g(y) = y − ½`, and the height at which the first stage of
//! the optimal rule ends for a given second rib.
//!
//! ```text
//! cargo run --release --example free_boundary -- 5
//! ```

use spider_core::{BoundaryFn, Params};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(3);
    let b = BoundaryFn::new(Params::new(n)?)?;
    println!("n = {n}");
    println!("{:>7}  {:>12}  {:>14}", "z", "f(z)", "stage 1 ends");
    for k in 0..=10 {
        let z = -0.75 + 0.075 * f64::from(k);
        let f = b.f_lower(z)?;
        // stage 1 ends once g(y) reaches f(z), i.e. at y = f(z) + ½
        println!("{z:>7.3}  {f:>12.9}  {:>14.9}", f + 0.5);
    }
    println!("\n{:>7}  {:>12}  {:>14}", "y", "g(y)", "φ(y − ½)");
    for k in 0..=6 {
        let y = 0.5 + 0.25 * f64::from(k);
        println!(
            "{y:>7.3}  {:>12.9}  {:>14.9}",
            b.g_upper(y)?,
            b.phi(y - 0.5)?
        );
    }
    Ok(())
}
