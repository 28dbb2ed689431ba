//! Steady state of the Table 1 biradical at its working point, solved in the
//! rotating frame and in the laboratory frame, with the amplitudes of the
//! operators that carry polarisation from the electrons to the proton.
//!
//! Run with `cargo run --release --example steady_state`.

use dnpsim::fixtures;
use dnpsim::spin::ProductOperator;
use dnpsim::steady::{FieldContext, LabSolverOptions};

fn main() -> dnpsim::Result<()> {
    let sys = fixtures::table1();
    let (b0, offset) = (14.1, -0.62e6);
    let ctx = FieldContext::new(&sys, b0)?;
    let rotating = ctx.rotating(offset)?;
    let laboratory = ctx.laboratory(offset, &LabSolverOptions::default())?;
    let thermal = ctx.thermal_nuclear_polarization();

    println!("B0 = {b0} T, offset = {} MHz", offset / 1e6);
    println!("thermal proton polarisation  {thermal:.4e}");
    for (label, state) in [("rotating", &rotating), ("laboratory", &laboratory)] {
        let p = state.nuclear_polarization();
        println!(
            "{label:<11} Nz = {p:.4e}  enhancement = {:.3}  residual = {:.1e}",
            p / thermal,
            state.residual
        );
    }

    println!("laboratory phase grid: {} points", laboratory.grid_points());

    println!("\n{:<14} {:>12}", "operator", "amplitude");
    for name in [
        "E+1+2E+1Ez2",
        "E+1-2E+1Ez2",
        "E+2+2Ez1E+2",
        "E+2-2Ez1E+2",
        "E+1",
        "2E+1Ez2",
        "2E+1Nz",
        "4E+1Ez2Nz",
        "2Ez1Nz",
        "2Ez2Nz",
        "4Ez1Ez2Nz",
        "Nz",
    ] {
        let op = ProductOperator::parse(name, sys.n_electrons())?;
        println!("{name:<14} {:>12.3e}", rotating.amplitude(&op)?);
    }
    Ok(())
}
