//! Steady-state operator amplitudes of the Table 1 biradical as a function of
//! the rotational correlation time, printed as CSV.
//!
//! Run with `cargo run --release --example tau_trace > trace.csv`.

use dnpsim::fixtures;
use dnpsim::sweeps::{operator_amplitude_trace, AxisRange, SweepAxis};

fn main() -> dnpsim::Result<()> {
    let tau = AxisRange::logarithmic(SweepAxis::TauC, 10e-12, 1e-9, 21).values();
    let ops = [
        "E+1",
        "2E+1Ez2",
        "2E+1Nz",
        "4E+1Ez2Nz",
        "2Ez1Nz",
        "2Ez2Nz",
        "4Ez1Ez2Nz",
        "Nz",
    ];
    let trace = operator_amplitude_trace(&fixtures::table1(), 14.1, -0.62e6, &tau, &ops)?;
    print!("{}", trace.to_csv());
    Ok(())
}
