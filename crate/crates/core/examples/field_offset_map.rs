//! Enhancement map over magnetic field and microwave offset, written as CSV
//! and as an SVG heatmap.
//!
//! Run with `cargo run --release --example field_offset_map [fixture] [outdir]`.

use std::path::PathBuf;

use dnpsim::fixtures;
use dnpsim::sweeps::{run_sweep, Ablation, SweepSpec, DEFAULT_POINTS};

fn main() -> dnpsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "table1".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| ".".into()));
    let sys = fixtures::by_name(&name)?;

    let map = run_sweep(
        &sys,
        &SweepSpec::field_offset(DEFAULT_POINTS),
        &Ablation::none(),
    )?;
    std::fs::create_dir_all(&out)?;
    let csv = out.join(format!("{name}_field_offset.csv"));
    let svg = out.join(format!("{name}_field_offset.svg"));
    std::fs::write(&csv, map.to_csv())?;
    std::fs::write(&svg, map.to_svg("Nz", &format!("{name}: Nz / thermal"))?)?;

    let (mut best, mut at) = (f64::NEG_INFINITY, (0.0, 0.0));
    for (b0, offset, e) in map.points("Nz")? {
        if e.abs() > best {
            best = e.abs();
            at = (b0, offset);
        }
    }
    println!(
        "largest |enhancement| {best:.3} at {} T, {} MHz",
        at.0, at.1
    );
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}
