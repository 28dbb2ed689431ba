//! Field/offset enhancement maps with and without individual interactions.
//! Each map is summarised above 10 T by the largest |enhancement - 1| and by
//! the largest enhancement above the thermal level.
//!
//! Run with `cargo run --release --example ablation_maps`.

use std::time::Instant;

use dnpsim::fixtures;
use dnpsim::sweeps::{run_sweep, Ablation, AblationSwitch, SweepSpec, DEFAULT_POINTS};

fn main() -> dnpsim::Result<()> {
    let spec = SweepSpec::field_offset(DEFAULT_POINTS);
    let cases = [
        ("table1", None),
        ("table1", Some(AblationSwitch::ZeroG1Anisotropy)),
        ("table1", Some(AblationSwitch::ZeroExchange)),
        ("table1", Some(AblationSwitch::ZeroCsa)),
        ("table1", Some(AblationSwitch::RemoveElectron2)),
        ("figure1", None),
        ("figure1", Some(AblationSwitch::ZeroIsotropicHf)),
        ("figure1", Some(AblationSwitch::ZeroCsa)),
        ("figure1", Some(AblationSwitch::ZeroG1Anisotropy)),
    ];
    println!(
        "{:<8} {:<18} {:>10} {:>10} {:>8}",
        "system", "ablation", "max|e-1|", "max(e-1)", "time/s"
    );
    for (name, switch) in cases {
        let ablation = switch.map(Ablation::single).unwrap_or_default();
        let start = Instant::now();
        let map = run_sweep(&fixtures::by_name(name)?, &spec, &ablation)?;
        let deviation = map.max_deviation("Nz", 1.0, |b0, _| b0 >= 10.0)?;
        let increase = map
            .points("Nz")?
            .into_iter()
            .filter(|&(b0, _, _)| b0 >= 10.0)
            .map(|(_, _, e)| e - 1.0)
            .fold(0.0, f64::max);
        println!(
            "{name:<8} {:<18} {deviation:>10.4} {increase:>10.4} {:>8.2}",
            ablation.label(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
