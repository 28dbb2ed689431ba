//! Loads a TOML configuration, resolves it into a spin system and a sweep,
//! and prints the configuration that reproduces a built-in system.
//!
//! Run with `cargo run --release --example config_roundtrip [config.toml]`.

use dnpsim::config::{parse_config, ConfigDocument};

const SAMPLE: &str = r#"
[system]
fixture = "table1"
exchange_J_MHz = 0.0

[conditions]
B0_tesla = 9.4
mw_offset_MHz = -0.62

[sweep]
preset = "field_offset"
points = 5
"#;

fn main() -> dnpsim::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let doc = parse_config(&text)?;
    let sys = doc.resolve_system()?;
    let sweep = doc.resolve_sweep()?;
    println!(
        "{} electron(s), tau_c = {} ps, J = {} MHz, B0 = {} T, offset = {} MHz",
        sys.n_electrons(),
        sys.tau_c * 1e12,
        sys.exchange_hz / 1e6,
        doc.b0(),
        doc.mw_offset_hz() / 1e6
    );
    println!(
        "sweep {} x {} points",
        sweep.axis1.points, sweep.axis2.points
    );

    println!("\nfigure1 fixture written out in full:\n");
    print!(
        "{}",
        ConfigDocument::from_system(&dnpsim::fixtures::figure1()).to_toml()?
    );
    Ok(())
}
