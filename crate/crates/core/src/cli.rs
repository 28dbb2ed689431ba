//! Command-line surface: `rates`, `steady`, `sweep`, `trace` and `optimize`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, ConfigDocument};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::rates::rate_catalogue;
use crate::relaxation::brw_superoperator;
use crate::search::search;
use crate::spin::ProductOperator;
use crate::steady::{FieldContext, LabSolverOptions};
use crate::sweeps::{observable_value, operator_amplitude_trace, run_sweep, sci};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for unusable arguments or configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a solver fails.
pub const EXIT_SOLVER: i32 = 3;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "DNPSIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "dnpsim",
    version,
    about = "Liquid-state DNP steady states and relaxation rates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Source {
    /// TOML configuration file, or the name of a built-in fixture
    /// (table1, tableS1A, tableS1B, figure1).
    config: String,
    /// Override the static field, tesla.
    #[arg(long = "b0-tesla")]
    b0_tesla: Option<f64>,
    /// Override the microwave offset from electron 1, MHz.
    #[arg(long = "offset-mhz", allow_hyphen_values = true)]
    offset_mhz: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form versus numerical relaxation rates as CSV.
    Rates(Source),
    /// Steady-state observables in both frames and their deviation.
    Steady {
        #[command(flatten)]
        source: Source,
        /// Product operators to report; defaults depend on the system.
        #[arg(long = "observable")]
        observables: Vec<String>,
    },
    /// Two-dimensional sweep as CSV, plus SVG heatmaps when `--out` is given.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Directory receiving sweep.csv and one SVG per observable.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Product-operator amplitudes against correlation time as CSV.
    Trace(Source),
    /// Parameter search; prints the evaluation log as CSV.
    Optimize {
        #[command(flatten)]
        source: Source,
        /// Random seed of the sampling stage; overrides the configuration
        #[arg(long)]
        seed: Option<u64>,
        /// Number of objective evaluations; overrides the configuration
        #[arg(long)]
        budget: Option<usize>,
    },
}

fn is_config_error(e: &Error) -> bool {
    !matches!(
        e,
        Error::Singular(_) | Error::NotConverged { .. } | Error::AllEvaluationsFailed(_)
    )
}

/// Runs the command line `args` (program name first) and returns the exit status.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if is_config_error(&e) {
                EXIT_CONFIG
            } else {
                EXIT_SOLVER
            }
        }
    }
}

fn load(source: &Source) -> Result<ConfigDocument> {
    let path = Path::new(&source.config);
    let mut doc = if path.exists() {
        let text = std::fs::read_to_string(path)?;
        parse_config(&text)?
    } else if fixtures::FIXTURE_NAMES.contains(&source.config.as_str()) {
        parse_config(&format!("[system]\nfixture = \"{}\"\n", source.config))?
    } else {
        return Err(Error::Config {
            line: None,
            message: format!("'{}' is neither a file nor a fixture name", source.config),
        });
    };
    if let Some(b0) = source.b0_tesla {
        if !(b0 > 0.0) {
            return Err(Error::Config {
                line: None,
                message: "--b0-tesla must be positive".into(),
            });
        }
        doc.conditions.b0_tesla = Some(b0);
    }
    if let Some(offset) = source.offset_mhz {
        doc.conditions.mw_offset_mhz = Some(offset);
    }
    Ok(doc)
}

fn default_observables(n_electrons: usize) -> Vec<String> {
    let names: &[&str] = if n_electrons == 1 {
        &["Nz", "Ez", "E+", "2EzNz", "2E+Nz"]
    } else {
        &[
            "Nz",
            "Ez1",
            "Ez2",
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
        ]
    };
    names.iter().map(|s| s.to_string()).collect()
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Rates(source) => {
            let doc = load(&source)?;
            let sys = doc.resolve_system()?;
            let r = brw_superoperator(&sys, doc.b0())?;
            writeln!(
                out,
                "process,analytical_per_s,numerical_per_s,relative_deviation"
            )?;
            for row in rate_catalogue(&sys, &r)? {
                writeln!(
                    out,
                    "{},{},{},{}",
                    row.process,
                    sci(row.analytical),
                    sci(row.numerical),
                    sci(row.relative_deviation())
                )?;
            }
        }
        Command::Steady {
            source,
            observables,
        } => {
            let doc = load(&source)?;
            let sys = doc.resolve_system()?;
            let (b0, offset) = (doc.b0(), doc.mw_offset_hz());
            let names = if observables.is_empty() {
                default_observables(sys.n_electrons())
            } else {
                observables
            };
            let ops = names
                .iter()
                .map(|n| ProductOperator::parse(n, sys.n_electrons()))
                .collect::<Result<Vec<_>>>()?;
            let ctx = FieldContext::new(&sys, b0)?;
            let rotating = ctx.rotating(offset)?;
            let laboratory = ctx.laboratory(offset, &LabSolverOptions::default())?;
            let thermal = ctx.thermal_nuclear_polarization();
            writeln!(
                out,
                "# B0_tesla {}, mw_offset_MHz {}",
                sci(b0),
                sci(offset * 1e-6)
            )?;
            writeln!(
                out,
                "# laboratory grid {} points, residual {}",
                laboratory.grid_points(),
                sci(laboratory.residual)
            )?;
            writeln!(out, "observable,rotating,laboratory,relative_deviation")?;
            for (name, op) in names.iter().zip(&ops) {
                let a = observable_value(&rotating, op, sys.n_electrons())?;
                let b = observable_value(&laboratory, op, sys.n_electrons())?;
                writeln!(out, "{name},{},{},{}", sci(a), sci(b), sci(relative(a, b)))?;
            }
            let (a, b) = (
                rotating.nuclear_polarization(),
                laboratory.nuclear_polarization(),
            );
            writeln!(
                out,
                "thermal_Nz,{},{},{}",
                sci(thermal),
                sci(thermal),
                sci(0.0)
            )?;
            writeln!(
                out,
                "enhancement,{},{},{}",
                sci(a / thermal),
                sci(b / thermal),
                sci(relative(a, b))
            )?;
            writeln!(out, "frame_deviation_Nz,{}", sci(relative(a, b)))?;
        }
        Command::Sweep { source, out: dir } => {
            let doc = load(&source)?;
            let spec = doc.resolve_sweep()?;
            let sys = doc.resolve_system()?;
            let ablation = doc.resolve_ablation()?;
            let result = run_sweep(&sys, &spec, &ablation)?;
            if result.failures() > 0 {
                writeln!(
                    err,
                    "warning: {} of {} grid points failed",
                    result.failures(),
                    result.grid.len()
                )?;
            }
            if result.failures() == result.grid.len() {
                let first = result
                    .grid
                    .iter()
                    .find_map(|p| p.as_ref().err())
                    .cloned()
                    .unwrap_or_default();
                return Err(Error::AllEvaluationsFailed(first));
            }
            let csv = result.to_csv();
            match dir {
                None => out.write_all(csv.as_bytes())?,
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("sweep.csv"), &csv)?;
                    let svg = doc.sweep.as_ref().is_none_or(|s| s.svg);
                    for name in result.observables.iter().filter(|_| svg) {
                        let title = format!("{name} ({})", ablation.label());
                        let file = dir.join(format!("sweep_{}.svg", file_stem(name)));
                        std::fs::write(&file, result.to_svg(name, &title)?)?;
                    }
                    writeln!(out, "wrote {}", dir.join("sweep.csv").display())?;
                }
            }
        }
        Command::Trace(source) => {
            let doc = load(&source)?;
            let sys =
                crate::sweeps::apply_ablation(&doc.resolve_system()?, &doc.resolve_ablation()?)?;
            let (taus, ops) = doc.resolve_trace()?;
            let names: Vec<&str> = ops.iter().map(String::as_str).collect();
            let trace =
                operator_amplitude_trace(&sys, doc.b0(), doc.mw_offset_hz(), &taus, &names)?;
            if trace.values.iter().all(|v| v.is_err()) {
                let first = trace
                    .values
                    .iter()
                    .find_map(|v| v.as_ref().err())
                    .cloned()
                    .unwrap_or_default();
                return Err(Error::AllEvaluationsFailed(first));
            }
            out.write_all(trace.to_csv().as_bytes())?;
        }
        Command::Optimize {
            source,
            seed,
            budget,
        } => {
            let doc = load(&source)?;
            let (space, grid, mut options) = doc.resolve_search()?;
            if let Some(s) = seed {
                options.seed = s;
            }
            if let Some(b) = budget {
                if b == 0 {
                    return Err(Error::Config {
                        line: None,
                        message: "--budget must be at least 1".into(),
                    });
                }
                options.budget = b;
            }
            let result = search(&space, &grid, &options)?;
            out.write_all(result.log_csv().as_bytes())?;
            writeln!(
                err,
                "best objective {} after {} evaluations",
                sci(result.best_objective),
                result.log.len()
            )?;
            for (name, value) in result.parameter_names.iter().zip(&result.best_x) {
                writeln!(err, "  {name} = {}", sci(*value))?;
            }
        }
    }
    Ok(())
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '+' => 'p',
            '-' => 'm',
            c if c.is_ascii_alphanumeric() => c,
            _ => '_',
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let args: Vec<String> = std::iter::once("dnpsim")
            .chain(args.iter().copied())
            .map(String::from)
            .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&args, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn unknown_command_prints_usage() {
        let (code, _, err) = call(&["frobnicate"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("Usage"), "{err}");
        let (code, _, _) = call(&[]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let (code, _, err) = call(&["steady", "/nonexistent/file.toml"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("neither a file nor a fixture"));
    }

    #[test]
    fn rates_for_figure1() {
        let (code, out, _) = call(&["rates", "figure1"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(
            lines[0],
            "process,analytical_per_s,numerical_per_s,relative_deviation"
        );
        assert!(lines.iter().any(|l| l.starts_with("Ez->2EzNz,")));
        assert!(lines.iter().any(|l| l.starts_with("2EzNz->Nz,")));
        assert!(lines.iter().any(|l| l.starts_with("E+->2E+Nz,")));
    }

    #[test]
    fn steady_reports_frame_deviation() {
        let (code, out, err) = call(&["steady", "table1", "--offset-mhz", "-0.62"]);
        assert_eq!(code, EXIT_OK, "{err}");
        let line = out
            .lines()
            .find(|l| l.starts_with("frame_deviation_Nz,"))
            .unwrap();
        let deviation: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(deviation <= 0.01, "{deviation}");
    }

    #[test]
    fn unknown_fixture_is_config_error() {
        let (code, _, _) = call(&["sweep", "table7"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn file_stems() {
        assert_eq!(file_stem("E+1-2E+1Ez2"), "Ep1m2Ep1Ez2");
    }
}
