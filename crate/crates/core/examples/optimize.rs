//! Seeded search for a biradical geometry that maximises the steady-state
//! proton polarisation, starting from Table 1 with tight bounds.
//!
//! Run with `cargo run --release --example optimize [budget] [seed]`.

use dnpsim::fixtures;
use dnpsim::search::{search, ObjectiveGrid, Parameter, SearchOptions, SearchSpace};

fn main() -> dnpsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let budget = args
        .next()
        .map(|s| s.parse().expect("budget"))
        .unwrap_or(24);
    let seed = args.next().map(|s| s.parse().expect("seed")).unwrap_or(7);

    let base = fixtures::table1();
    let space = SearchSpace::around(
        base,
        &[
            (
                Parameter::ElectronCoord {
                    electron: 0,
                    axis: 2,
                },
                0.3,
            ),
            (
                Parameter::ElectronCoord {
                    electron: 1,
                    axis: 2,
                },
                0.3,
            ),
            (Parameter::Exchange, 1.0),
        ],
    )?;
    // a coarse offset grid keeps the example quick
    let grid = ObjectiveGrid {
        b0: 14.1,
        offsets_hz: (0..33).map(|i| -8e6 + 0.5e6 * i as f64).collect(),
    };
    let options = SearchOptions {
        budget,
        seed,
        ..SearchOptions::default()
    };
    let result = search(&space, &grid, &options)?;

    let base_objective = result.log[0].objective.unwrap_or(f64::NAN);
    println!("base objective  {base_objective:.4e}");
    println!("best objective  {:.4e}", result.best_objective);
    for (name, value) in result.parameter_names.iter().zip(&result.best_x) {
        println!("  {name:<18} {value:.6}");
    }
    println!("{} evaluations", result.log.len());
    Ok(())
}
