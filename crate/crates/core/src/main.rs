use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use limitfrac::driver::{self, run::convergence_csv, run::convergence_table, Experiment, RunConfig};
use limitfrac::{Error, Result};

#[derive(Parser)]
#[command(name = "limitfrac", version, about = "Phase-field fracture with strain-limiting elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Named preset (see `limitfrac presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Config file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value` assignments applied last.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or config and write logs, samples and snapshots.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (default `out/<run name>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manufactured-solution convergence table.
    Converge {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of refinement cycles (default from the preset).
        #[arg(long)]
        cycles: Option<usize>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the invariant checks.
    Verify,
    /// List the presets.
    Presets,
    /// Print the full config of a preset with overrides applied.
    Show {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn load(args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &args.preset {
        Some(name) => driver::preset(name)?,
        None if args.config.is_some() => RunConfig::default(),
        None => return Err(Error::Config("give --preset or --config".into())),
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.update(&text)?;
    }
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn print_convergence(cfg: &RunConfig, cycles: usize, csv: Option<PathBuf>) -> Result<()> {
    let rows = driver::converge(cfg, cycles)?;
    print!("{}", convergence_table(cfg.model(), &rows));
    if let Some(path) = csv {
        std::fs::write(&path, convergence_csv(&rows)).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { cfg, out } => {
            let cfg = load(&cfg)?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            if cfg.experiment == Experiment::Ex1 {
                std::fs::create_dir_all(&out).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
                print_convergence(&cfg, cfg.mms_cycles, Some(out.join("convergence.csv")))?;
                return Ok(true);
            }
            let outcome = driver::run(&cfg, Some(&out))?;
            let last = outcome.energies.last().expect("initial record");
            println!("{}: {} steps written to {}", cfg.name, outcome.reports.len(), out.display());
            println!(
                "final energies: bulk {:.6e}, crack {:.6e}, total {:.6e}",
                last.bulk, last.crack, last.total
            );
            if cfg.model() == limitfrac::constitutive::Model::Nlsl {
                println!("max ellipticity monitor {:.6}", outcome.max_monitor);
            }
            if cfg.coupling.n_steps > driver::run::TAKE_OFF_BASELINE {
                match outcome.take_off {
                    Some(k) => println!("take-off step {k}"),
                    None => println!("no take-off detected"),
                }
            }
            Ok(true)
        }
        Command::Converge { cfg, cycles, csv } => {
            let cfg = load(&cfg)?;
            print_convergence(&cfg, cycles.unwrap_or(cfg.mms_cycles), csv)?;
            Ok(true)
        }
        Command::Verify => {
            let results = driver::verify::run_all();
            let mut ok = true;
            for r in &results {
                println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            Ok(ok)
        }
        Command::Presets => {
            for n in driver::preset_names() {
                println!("{n}");
            }
            Ok(true)
        }
        Command::Show { cfg } => {
            print!("{}", load(&cfg)?.render());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::NonConvergence { history, .. } = &e {
                for (k, s) in history.iter().enumerate().rev().take(12).rev() {
                    eprintln!("  iteration {:>3}: residual {:.6e}, increment {:.6e}", k + 1, s.residual, s.increment);
                }
            }
            ExitCode::from(2)
        }
    }
}
