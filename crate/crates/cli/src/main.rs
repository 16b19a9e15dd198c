use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tdsmat_cli::config::RunConfig;
use tdsmat_cli::error::CliError;
use tdsmat_cli::validate::{validate, Severity};
use tdsmat_cli::{output, pipeline, presets};

#[derive(Parser)]
#[command(name = "tdsmat", version, about = "Time-dependent S-matrix engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and write CSV/JSON artifacts
    Run { config: PathBuf },
    /// Check a config without propagating anything
    Validate { config: PathBuf },
    /// Built-in experiment presets
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names
    List,
    /// Print a preset as TOML
    Dump { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tdsmat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_env();
    Ok(cfg)
}

fn report(cfg: &RunConfig) -> Result<(), CliError> {
    let rep = validate(cfg);
    for i in &rep.issues {
        if i.severity == Severity::Warning {
            eprintln!("{i}");
        }
    }
    rep.into_result().map(|_| ())
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config } => {
            let cfg = load(&config)?;
            report(&cfg)?;
            let res = pipeline::run(&cfg)?;
            output::write_all(&cfg, &res)?;
            for p in &res.products {
                let kept = p.table.mask.iter().filter(|m| **m).count();
                println!(
                    "v'={} tau0={} tail={:.2e} energies on mask {}/{}",
                    p.v,
                    p.minus.tau0,
                    p.corr.tail_ratio(),
                    kept,
                    p.table.energies.len()
                );
            }
            println!("tau0(reactant)={} wrote {} in {:.1} s", res.plus.tau0, cfg.output_dir.display(), res.seconds);
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let rep = validate(&cfg);
            for i in &rep.issues {
                println!("{i}");
            }
            rep.into_result()?;
            println!("ok");
        }
        Command::Presets { action: PresetAction::List } => {
            for n in presets::NAMES {
                println!("{n:<14} {}", presets::describe(n));
            }
        }
        Command::Presets { action: PresetAction::Dump { name } } => {
            let cfg = presets::by_name(&name).ok_or_else(|| {
                CliError::config("preset", format!("unknown preset '{name}', try: {}", presets::NAMES.join(", ")))
            })?;
            print!("{}", cfg.to_toml());
        }
    }
    Ok(())
}
