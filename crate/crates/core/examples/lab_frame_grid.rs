//! Laboratory-frame (Fokker-Planck) steady state on increasingly fine phase
//! grids, compared with the rotating-frame result.
//!
//! Run with `cargo run --release --example lab_frame_grid`.

use std::time::Instant;

use dnpsim::fixtures;
use dnpsim::steady::{microwave_frequency, FieldContext, LabSolverOptions};

fn main() -> dnpsim::Result<()> {
    let sys = fixtures::table1();
    let (b0, offset) = (14.1, -0.62e6);
    let ctx = FieldContext::new(&sys, b0)?;
    let reference = ctx.rotating(offset)?.nuclear_polarization();
    let omega = microwave_frequency(&sys, b0, offset);
    let options = LabSolverOptions::default();

    println!("rotating frame Nz = {reference:.6e}");
    println!(
        "{:>6} {:>14} {:>12} {:>10} {:>6} {:>8}",
        "points", "Nz", "rel. diff", "residual", "iters", "time/s"
    );
    for n in [8, 16, 32, 64, 128] {
        let start = Instant::now();
        let state = ctx.laboratory_on_grid(omega, n, &options)?;
        let p = state.nuclear_polarization();
        println!(
            "{n:>6} {p:>14.6e} {:>12.2e} {:>10.1e} {:>6} {:>8.2}",
            (p - reference).abs() / reference.abs(),
            state.residual,
            state.iterations,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
