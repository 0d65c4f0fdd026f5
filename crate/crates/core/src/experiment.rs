//! Multi-seed experiments: model comparison, size sweep and C/f sweep.
//!
//! Every (cell, model, seed) job is independent and runs on the rayon pool;
//! results are collected in job order, so output does not depend on
//! scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::crossbar::{run_lifetime_hw, ComparatorSetup};
use crate::device::{calibrate_metastate_table, DeviceParams, MetastateTable, NoiseModel};
use crate::error::{Error, Result};
use crate::network::{run_lifetime, AccuracyTrace, NetworkConfig, SynapseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    CompareModels,
    SweepSize,
    SweepCf,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::CompareModels => "compare",
            Variant::SweepSize => "sweep-size",
            Variant::SweepCf => "sweep-cf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: NetworkConfig,
    pub variant: Variant,
    pub seeds: Vec<u64>,
    pub n_patterns: usize,
    pub mean_threshold: f64,
    /// Run the ideal network in comparisons.
    pub software: bool,
    /// Also (or, for sweeps, only) run the crossbar path.
    pub hardware: bool,
    /// Models of a comparison; sweeps use `base.model`.
    pub models: Vec<SynapseModel>,
    pub size_grid: Vec<usize>,
    pub c_grid: Vec<f64>,
    pub f_grid: Vec<f64>,
    pub device: DeviceParams,
    pub noise: NoiseModel,
    pub comparator: ComparatorSetup,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            base: NetworkConfig::default(),
            variant: Variant::CompareModels,
            seeds: (0..10).collect(),
            n_patterns: 100,
            mean_threshold: 0.75,
            software: true,
            hardware: false,
            models: vec![
                SynapseModel::Binary,
                SynapseModel::Multistate,
                SynapseModel::GradientDescent,
            ],
            size_grid: vec![32, 64, 128, 256],
            c_grid: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            f_grid: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            device: DeviceParams::default(),
            noise: NoiseModel::gaussian(NoiseModel::DEFAULT_SIGMA, 0).expect("valid sigma"),
            comparator: ComparatorSetup::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.n_patterns == 0 {
            return Err(Error::config("n_patterns", "must be positive"));
        }
        match self.variant {
            Variant::CompareModels if self.models.is_empty() => {
                Err(Error::config("models", "nothing to compare"))
            }
            Variant::SweepSize if self.size_grid.is_empty() => {
                Err(Error::config("size_grid", "must not be empty"))
            }
            Variant::SweepCf if self.c_grid.is_empty() || self.f_grid.is_empty() => {
                Err(Error::config("c_grid", "C and f grids must not be empty"))
            }
            _ => Ok(()),
        }
    }
}

/// Which network realization produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Realization {
    pub model: SynapseModel,
    pub hardware: bool,
}

impl Realization {
    pub fn label(&self) -> String {
        if self.hardware {
            format!("hw-{}", self.model.label())
        } else {
            self.model.label().to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub realization: Realization,
    pub seed: u64,
    pub n: usize,
    pub connectivity: f64,
    pub activity: f64,
    pub trace: AccuracyTrace,
}

/// Per-realization crossing statistics, computed per seed then averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingSummary {
    pub realization: Realization,
    /// Per seed; `None` if the mean accuracy never fell below threshold.
    pub crossings: Vec<Option<usize>>,
    pub crossing_mean: f64,
    pub crossing_std: f64,
    pub ratio_vs_binary: Option<f64>,
    pub learning_at_end: f64,
    pub mean_at_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeRow {
    pub n: usize,
    pub realization: Realization,
    pub learning_at_end: f64,
    pub mean_at_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfCell {
    pub connectivity: f64,
    pub activity: f64,
    /// Seed-averaged final mean accuracy; `None` for invalid cells.
    pub mean_at_end: Option<f64>,
}

impl CfCell {
    pub fn is_valid(&self) -> bool {
        self.mean_at_end.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variant: Variant,
    pub mean_threshold: f64,
    pub n_patterns: usize,
    pub traces: Vec<LabeledTrace>,
    pub summary: Vec<CrossingSummary>,
    pub sizes: Vec<SizeRow>,
    pub cells: Vec<CfCell>,
}

impl SweepResult {
    pub fn summary_for(&self, model: SynapseModel, hardware: bool) -> Option<&CrossingSummary> {
        self.summary
            .iter()
            .find(|s| s.realization == Realization { model, hardware })
    }

    pub fn traces_for(
        &self,
        model: SynapseModel,
        hardware: bool,
    ) -> impl Iterator<Item = &LabeledTrace> {
        self.traces
            .iter()
            .filter(move |t| t.realization == Realization { model, hardware })
    }

    pub fn cell(&self, connectivity: f64, activity: f64) -> Option<&CfCell> {
        self.cells.iter().find(|c| {
            (c.connectivity - connectivity).abs() < 1e-12 && (c.activity - activity).abs() < 1e-12
        })
    }
}

/// First pattern index with mean accuracy below `threshold`.
pub fn threshold_crossing(trace: &AccuracyTrace, threshold: f64) -> Option<usize> {
    trace.threshold_crossing(threshold)
}

/// Calibrated tables keyed by level count.
struct Tables(BTreeMap<u16, MetastateTable>);

impl Tables {
    fn for_levels(params: &DeviceParams, levels: impl IntoIterator<Item = u16>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for n in levels {
            if let std::collections::btree_map::Entry::Vacant(e) = map.entry(n) {
                e.insert(calibrate_metastate_table(params, n)?);
            }
        }
        Ok(Self(map))
    }

    fn get(&self, n: u16) -> &MetastateTable {
        &self.0[&n]
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    cfg: NetworkConfig,
    hardware: bool,
}

fn run_jobs(spec: &ExperimentSpec, jobs: &[Job]) -> Result<Vec<LabeledTrace>> {
    let tables = if jobs.iter().any(|j| j.hardware) {
        Tables::for_levels(
            &spec.device,
            jobs.iter()
                .filter(|j| j.hardware)
                .map(|j| j.cfg.effective_levels()),
        )?
    } else {
        Tables(BTreeMap::new())
    };
    jobs.par_iter()
        .map(|job| {
            let trace = if job.hardware {
                run_lifetime_hw(
                    &job.cfg,
                    spec.n_patterns,
                    &spec.device,
                    tables.get(job.cfg.effective_levels()),
                    &spec.comparator,
                    &spec.noise,
                )?
            } else {
                run_lifetime(&job.cfg, spec.n_patterns)?
            };
            Ok(LabeledTrace {
                realization: Realization {
                    model: job.cfg.model,
                    hardware: job.hardware,
                },
                seed: job.cfg.seed,
                n: job.cfg.n_in,
                connectivity: job.cfg.connectivity,
                activity: job.cfg.activity,
                trace,
            })
        })
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarize(spec: &ExperimentSpec, traces: &[LabeledTrace]) -> Vec<CrossingSummary> {
    let mut order: Vec<Realization> = Vec::new();
    for t in traces {
        if !order.contains(&t.realization) {
            order.push(t.realization);
        }
    }
    let censored = (spec.n_patterns + 1) as f64;
    let mut out: Vec<CrossingSummary> = order
        .into_iter()
        .map(|r| {
            let group: Vec<&LabeledTrace> = traces.iter().filter(|t| t.realization == r).collect();
            let crossings: Vec<Option<usize>> = group
                .iter()
                .map(|t| t.trace.threshold_crossing(spec.mean_threshold))
                .collect();
            let values: Vec<f64> = crossings
                .iter()
                .map(|c| c.map_or(censored, |v| v as f64))
                .collect();
            let (crossing_mean, crossing_std) = mean_std(&values);
            let learning: Vec<f64> = group
                .iter()
                .filter_map(|t| t.trace.final_learning())
                .collect();
            let mean: Vec<f64> = group.iter().filter_map(|t| t.trace.final_mean()).collect();
            CrossingSummary {
                realization: r,
                crossings,
                crossing_mean,
                crossing_std,
                ratio_vs_binary: None,
                learning_at_end: mean_std(&learning).0,
                mean_at_end: mean_std(&mean).0,
            }
        })
        .collect();
    let binary: Vec<(bool, f64)> = out
        .iter()
        .filter(|s| s.realization.model == SynapseModel::Binary)
        .map(|s| (s.realization.hardware, s.crossing_mean))
        .collect();
    for s in &mut out {
        if let Some(&(_, b)) = binary.iter().find(|(hw, _)| *hw == s.realization.hardware) {
            s.ratio_vs_binary = Some(s.crossing_mean / b);
        }
    }
    out
}

pub fn run_comparison(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    if !spec.software && !spec.hardware {
        return Err(Error::config("hardware", "neither path selected"));
    }
    let mut jobs = Vec::new();
    for &model in spec.models.iter().filter(|_| spec.software) {
        for &seed in &spec.seeds {
            jobs.push(Job {
                cfg: spec.base.with_model(model).with_seed(seed),
                hardware: false,
            });
        }
    }
    if spec.hardware {
        for &model in spec
            .models
            .iter()
            .filter(|m| **m != SynapseModel::GradientDescent)
        {
            for &seed in &spec.seeds {
                jobs.push(Job {
                    cfg: spec.base.with_model(model).with_seed(seed),
                    hardware: true,
                });
            }
        }
    }
    let traces = run_jobs(spec, &jobs)?;
    let summary = summarize(spec, &traces);
    Ok(SweepResult {
        variant: Variant::CompareModels,
        mean_threshold: spec.mean_threshold,
        n_patterns: spec.n_patterns,
        traces,
        summary,
        sizes: Vec::new(),
        cells: Vec::new(),
    })
}

pub fn sweep_size(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let jobs: Vec<Job> = spec
        .size_grid
        .iter()
        .flat_map(|&n| {
            spec.seeds.iter().map(move |&seed| Job {
                cfg: spec.base.with_size(n, n).with_seed(seed),
                hardware: spec.hardware,
            })
        })
        .collect();
    let traces = run_jobs(spec, &jobs)?;
    let sizes = spec
        .size_grid
        .iter()
        .map(|&n| {
            let group: Vec<&LabeledTrace> = traces.iter().filter(|t| t.n == n).collect();
            let learning: Vec<f64> = group
                .iter()
                .filter_map(|t| t.trace.final_learning())
                .collect();
            let mean: Vec<f64> = group.iter().filter_map(|t| t.trace.final_mean()).collect();
            SizeRow {
                n,
                realization: Realization {
                    model: spec.base.model,
                    hardware: spec.hardware,
                },
                learning_at_end: mean_std(&learning).0,
                mean_at_end: mean_std(&mean).0,
            }
        })
        .collect();
    Ok(SweepResult {
        variant: Variant::SweepSize,
        mean_threshold: spec.mean_threshold,
        n_patterns: spec.n_patterns,
        traces,
        summary: Vec::new(),
        sizes,
        cells: Vec::new(),
    })
}

pub fn sweep_cf(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut cells: Vec<(f64, f64, bool)> = Vec::new();
    let mut jobs = Vec::new();
    for &c in &spec.c_grid {
        for &f in &spec.f_grid {
            let cfg = spec.base.with_cf(c, f);
            let valid = cfg.validate().is_ok();
            cells.push((c, f, valid));
            if valid {
                jobs.extend(spec.seeds.iter().map(|&seed| Job {
                    cfg: cfg.with_seed(seed),
                    hardware: spec.hardware,
                }));
            }
        }
    }
    let traces = run_jobs(spec, &jobs)?;
    let cells = cells
        .into_iter()
        .map(|(c, f, valid)| {
            let mean_at_end = valid.then(|| {
                let finals: Vec<f64> = traces
                    .iter()
                    .filter(|t| t.connectivity == c && t.activity == f)
                    .filter_map(|t| t.trace.final_mean())
                    .collect();
                mean_std(&finals).0
            });
            CfCell {
                connectivity: c,
                activity: f,
                mean_at_end,
            }
        })
        .collect();
    Ok(SweepResult {
        variant: Variant::SweepCf,
        mean_threshold: spec.mean_threshold,
        n_patterns: spec.n_patterns,
        traces,
        summary: Vec::new(),
        sizes: Vec::new(),
        cells,
    })
}

pub fn run(spec: &ExperimentSpec) -> Result<SweepResult> {
    match spec.variant {
        Variant::CompareModels => run_comparison(spec),
        Variant::SweepSize => sweep_size(spec),
        Variant::SweepCf => sweep_cf(spec),
    }
}
