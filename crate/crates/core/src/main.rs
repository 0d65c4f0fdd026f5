use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use metasyn::cli::{execute, Command};
use metasyn::config::{parse_config, seed_offset_from_env, RunConfig};

#[derive(Parser)]
#[command(
    name = "metasyn",
    version,
    about = "Metaplastic synapse network simulator"
)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Config file (`key = value` lines); defaults are used when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single model over all seeds.
    Run(Common),
    /// Binary vs multistate vs gradient descent.
    Compare(Common),
    /// Square network sizes.
    SweepSize(Common),
    /// Connectivity / activity grid.
    SweepCf(Common),
    /// Metastate plateaus of the configured device.
    CalibrateDevice(Common),
    /// Per-device programming log of one crossbar run.
    DumpTrace(Common),
    /// Print the fully defaulted config document.
    PrintConfig(Common),
}

fn load(common: &Common) -> Result<RunConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (cmd, common) = match &args.command {
        Cmd::Run(c) => (Command::Run, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::SweepSize(c) => (Command::SweepSize, c),
        Cmd::SweepCf(c) => (Command::SweepCf, c),
        Cmd::CalibrateDevice(c) => (Command::CalibrateDevice, c),
        Cmd::DumpTrace(c) => (Command::DumpTrace, c),
        Cmd::PrintConfig(c) => {
            return match load(c) {
                Ok(cfg) => {
                    print!("{}", cfg.serialize());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
    };
    let cfg = match load(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let offset = match seed_offset_from_env() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(cmd, &cfg, offset) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
