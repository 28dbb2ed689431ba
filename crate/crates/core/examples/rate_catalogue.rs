//! Closed-form relaxation rates next to the matching elements of the full
//! numerical relaxation superoperator, for every built-in system.
//!
//! Run with `cargo run --release --example rate_catalogue [B0_tesla]`.

use dnpsim::fixtures::{self, FIXTURE_NAMES};
use dnpsim::rates::rate_catalogue;
use dnpsim::relaxation::brw_superoperator;

fn main() -> dnpsim::Result<()> {
    let b0: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("field in tesla"))
        .unwrap_or(14.1);
    for name in FIXTURE_NAMES {
        let sys = fixtures::by_name(name)?;
        let r = brw_superoperator(&sys, b0)?;
        println!("{name} at {b0} T");
        println!(
            "  {:<24} {:>14} {:>14} {:>9}",
            "process", "closed form", "numerical", "dev"
        );
        for row in rate_catalogue(&sys, &r)? {
            let flag = if row.process.is_truncated() {
                " (truncated)"
            } else {
                ""
            };
            println!(
                "  {:<24} {:>14.5e} {:>14.5e} {:>8.2}%{flag}",
                row.process.label(),
                row.analytical,
                row.numerical,
                100.0 * row.relative_deviation()
            );
        }
    }
    Ok(())
}
