//! Subcommand dispatch shared by the binary and the tests.

use std::path::PathBuf;

use crate::config::RunConfig;
use crate::crossbar::build_hardware_learner;
use crate::device::calibrate_metastate_table;
use crate::error::Result;
use crate::experiment::{self, LabeledTrace, Realization, Variant};
use crate::network::{pattern_set, run_protocol};
use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// The configured model only (crossbar only when `hardware = true`).
    Run,
    Compare,
    SweepSize,
    SweepCf,
    CalibrateDevice,
    DumpTrace,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Compare => "compare",
            Command::SweepSize => "sweep-size",
            Command::SweepCf => "sweep-cf",
            Command::CalibrateDevice => "calibrate-device",
            Command::DumpTrace => "dump-trace",
        }
    }
}

/// Runs `cmd` and returns the files written. `seed_offset` comes from
/// `METASYN_SEED_OFFSET` in the binary.
pub fn execute(cmd: Command, cfg: &RunConfig, seed_offset: u64) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    match cmd {
        Command::Run | Command::Compare | Command::SweepSize | Command::SweepCf => {
            let variant = match cmd {
                Command::SweepSize => Variant::SweepSize,
                Command::SweepCf => Variant::SweepCf,
                _ => Variant::CompareModels,
            };
            let mut spec = cfg.experiment_spec(variant, seed_offset);
            if cmd == Command::Run {
                spec.models = vec![cfg.network.model];
                spec.software = !cfg.hardware;
            }
            eprintln!(
                "{}: {} seed(s), {} patterns{}",
                cmd.name(),
                spec.seeds.len(),
                spec.n_patterns,
                if spec.hardware { ", crossbar" } else { "" }
            );
            let result = experiment::run(&spec)?;
            for s in &result.summary {
                eprintln!(
                    "  {:<16} crossing {:.2} ± {:.2}{}",
                    s.realization.label(),
                    s.crossing_mean,
                    s.crossing_std,
                    s.ratio_vs_binary
                        .map(|r| format!("  ratio vs binary {r:.3}"))
                        .unwrap_or_default()
                );
            }
            output::write_outputs(&result, dir, cfg.svg)
        }
        Command::CalibrateDevice => {
            let levels = cfg.network.effective_levels();
            let table = calibrate_metastate_table(&cfg.device, levels)?;
            eprintln!(
                "calibrate-device: {} plateaus, plastic ratio {:.4}",
                table.plateaus().len(),
                table.plastic_ratio(&cfg.device)
            );
            std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
            Ok(vec![output::write_metastate_table(
                &table,
                &cfg.device,
                &dir.join(output::METASTATE_CSV),
            )?])
        }
        Command::DumpTrace => {
            let net = cfg.network.with_seed(cfg.seed_list(seed_offset)[0]);
            let table = calibrate_metastate_table(&cfg.device, net.effective_levels())?;
            let mut learner = build_hardware_learner(
                &net,
                &cfg.device,
                &table,
                &cfg.comparator_setup(),
                &cfg.noise_model(seed_offset),
            )?
            .with_event_log();
            let patterns = pattern_set(&net, cfg.n_patterns)?;
            let trace = run_protocol(&mut learner, &patterns)?;
            eprintln!(
                "dump-trace: {}x{} crossbar, {} programming events",
                net.n_in,
                net.n_out,
                learner.events().len()
            );
            std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
            let labeled = LabeledTrace {
                realization: Realization {
                    model: net.model,
                    hardware: true,
                },
                seed: net.seed,
                n: net.n_in,
                connectivity: net.connectivity,
                activity: net.activity,
                trace,
            };
            Ok(vec![
                output::write_events(learner.events(), &dir.join(output::EVENTS_CSV))?,
                output::write_crossbar_state(&learner.xb, &dir.join(output::CROSSBAR_CSV))?,
                output::write_traces(&[labeled], &dir.join(output::TRACES_CSV))?,
                output::write_metastate_table(
                    &table,
                    &cfg.device,
                    &dir.join(output::METASTATE_CSV),
                )?,
            ])
        }
    }
}
