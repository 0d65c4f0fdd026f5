//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! n_in = 128
//! model = multistate   # trailing comments are allowed
//! c_grid = 0.1, 0.25, 0.5
//! ```
//!
//! Every key has a default; unknown keys, duplicates and bad values are
//! errors that name the key and the line.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::crossbar::{ComparatorConfig, ComparatorMode, ComparatorSetup};
use crate::device::{DeviceParams, NoiseModel};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, Variant};
use crate::network::{NetworkConfig, SynapseModel};

/// Env var that shifts every seed.
pub const SEED_OFFSET_VAR: &str = "METASYN_SEED_OFFSET";

/// How the crossbar comparator reference is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Tracking,
    Fixed,
    Ideal,
}

impl ReferenceKind {
    pub fn label(self) -> &'static str {
        match self {
            ReferenceKind::Tracking => "tracking",
            ReferenceKind::Fixed => "fixed",
            ReferenceKind::Ideal => "ideal",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "tracking" => Some(ReferenceKind::Tracking),
            "fixed" => Some(ReferenceKind::Fixed),
            "ideal" => Some(ReferenceKind::Ideal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    /// Number of seeds; seeds are `seed_base .. seed_base + seeds`.
    pub seeds: usize,
    pub seed_base: u64,
    pub n_patterns: usize,
    pub mean_threshold: f64,
    pub hardware: bool,
    pub size_grid: Vec<usize>,
    pub c_grid: Vec<f64>,
    pub f_grid: Vec<f64>,
    pub device: DeviceParams,
    pub noise: bool,
    pub noise_sigma: f64,
    pub noise_seed: u64,
    pub comparator: ReferenceKind,
    pub kappa: f64,
    pub margin: f64,
    pub output_dir: PathBuf,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ExperimentSpec::default();
        Self {
            network: spec.base,
            seeds: spec.seeds.len(),
            seed_base: 0,
            n_patterns: spec.n_patterns,
            mean_threshold: spec.mean_threshold,
            hardware: false,
            size_grid: spec.size_grid,
            c_grid: spec.c_grid,
            f_grid: spec.f_grid,
            device: DeviceParams::default(),
            noise: true,
            noise_sigma: NoiseModel::DEFAULT_SIGMA,
            noise_seed: 0,
            comparator: ReferenceKind::Tracking,
            kappa: ComparatorConfig::DEFAULT_KAPPA,
            margin: ComparatorConfig::DEFAULT_MARGIN,
            output_dir: PathBuf::from("out"),
            svg: true,
        }
    }
}

/// All recognized keys, in serialization order.
pub const KEYS: &[&str] = &[
    "n_in",
    "n_out",
    "connectivity",
    "activity",
    "n_levels",
    "model",
    "updates_per_pattern",
    "transition_probability",
    "seeds",
    "seed_base",
    "n_patterns",
    "mean_threshold",
    "hardware",
    "size_grid",
    "c_grid",
    "f_grid",
    "g_on",
    "g_off",
    "v_on",
    "v_off",
    "k_on",
    "k_off",
    "alpha_on",
    "alpha_off",
    "window_tau",
    "window_delta",
    "window_p",
    "noise",
    "noise_sigma",
    "noise_seed",
    "comparator",
    "kappa",
    "margin",
    "output_dir",
    "svg",
];

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("malformed value `{v}`"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true/false, got `{v}`")),
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    let items: Vec<T> = v
        .split(',')
        .map(|s| parse_num(s.trim()))
        .collect::<std::result::Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn check(ok: bool, msg: &str) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn fraction(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_num(v)?;
    check(x > 0.0 && x <= 1.0, &format!("{x} out of range (0, 1]"))?;
    Ok(x)
}

fn finite(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_num(v)?;
    check(x.is_finite(), "must be finite")?;
    Ok(x)
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let d = &mut self.device;
        match key {
            "n_in" => {
                self.network.n_in = parse_num(v)?;
                check(self.network.n_in > 0, "must be positive")?;
            }
            "n_out" => {
                self.network.n_out = parse_num(v)?;
                check(self.network.n_out > 0, "must be positive")?;
            }
            "connectivity" => self.network.connectivity = fraction(v)?,
            "activity" => self.network.activity = fraction(v)?,
            "n_levels" => {
                self.network.n_levels = parse_num(v)?;
                check(self.network.n_levels >= 1, "must be at least 1")?;
            }
            "model" => {
                self.network.model = SynapseModel::parse(v)
                    .ok_or_else(|| format!("unknown model `{v}` (binary, multistate, gradient)"))?
            }
            "updates_per_pattern" => {
                self.network.updates_per_pattern = parse_num(v)?;
                check(self.network.updates_per_pattern >= 1, "must be at least 1")?;
            }
            "transition_probability" => self.network.transition_probability = fraction(v)?,
            "seeds" => {
                self.seeds = parse_num(v)?;
                check(self.seeds >= 1, "at least one seed is required")?;
            }
            "seed_base" => self.seed_base = parse_num(v)?,
            "n_patterns" => {
                self.n_patterns = parse_num(v)?;
                check(self.n_patterns >= 1, "must be positive")?;
            }
            "mean_threshold" => {
                self.mean_threshold = parse_num(v)?;
                check(
                    (0.0..=1.0).contains(&self.mean_threshold),
                    "out of range [0, 1]",
                )?;
            }
            "hardware" => self.hardware = parse_bool(v)?,
            "size_grid" => {
                self.size_grid = parse_list(v)?;
                check(
                    self.size_grid.iter().all(|&n| n > 0),
                    "sizes must be positive",
                )?;
            }
            "c_grid" => {
                self.c_grid = parse_list(v)?;
                check(
                    self.c_grid.iter().all(|&c| c > 0.0 && c <= 1.0),
                    "values out of range (0, 1]",
                )?;
            }
            "f_grid" => {
                self.f_grid = parse_list(v)?;
                check(
                    self.f_grid.iter().all(|&f| f > 0.0 && f <= 1.0),
                    "values out of range (0, 1]",
                )?;
            }
            "g_on" => {
                d.g_on = finite(v)?;
                check(d.g_on > 0.0, "must be positive")?;
            }
            "g_off" => {
                d.g_off = finite(v)?;
                check(d.g_off >= 0.0, "must be >= 0")?;
            }
            "v_on" => {
                d.v_on = finite(v)?;
                check(d.v_on < 0.0, "must be negative")?;
            }
            "v_off" => {
                d.v_off = finite(v)?;
                check(d.v_off > 0.0, "must be positive")?;
            }
            "k_on" => {
                d.k_on = finite(v)?;
                check(d.k_on < 0.0, "must be negative")?;
            }
            "k_off" => {
                d.k_off = finite(v)?;
                check(d.k_off > 0.0, "must be positive")?;
            }
            "alpha_on" => {
                d.alpha_on = finite(v)?;
                check(d.alpha_on > 0.0, "must be positive")?;
            }
            "alpha_off" => {
                d.alpha_off = finite(v)?;
                check(d.alpha_off > 0.0, "must be positive")?;
            }
            "window_tau" => {
                d.tau = finite(v)?;
                check(d.tau >= 0.0, "must be >= 0")?;
            }
            "window_delta" => {
                d.delta = finite(v)?;
                check(d.delta > 0.0 && d.delta < 1.0, "out of range (0, 1)")?;
            }
            "window_p" => {
                d.p = parse_num(v)?;
                check(d.p > 0 && d.p % 2 == 0, "must be a positive even integer")?;
            }
            "noise" => self.noise = parse_bool(v)?,
            "noise_sigma" => {
                self.noise_sigma = finite(v)?;
                check(self.noise_sigma >= 0.0, "must be >= 0")?;
            }
            "noise_seed" => self.noise_seed = parse_num(v)?,
            "comparator" => {
                self.comparator = ReferenceKind::parse(v)
                    .ok_or_else(|| format!("unknown comparator `{v}` (tracking, fixed, ideal)"))?
            }
            "kappa" => {
                self.kappa = finite(v)?;
                check(self.kappa > 0.0 && self.kappa < 1.0, "out of range (0, 1)")?;
            }
            "margin" => self.margin = finite(v)?,
            "output_dir" => {
                check(!v.is_empty(), "must not be empty")?;
                self.output_dir = PathBuf::from(v);
            }
            "svg" => self.svg = parse_bool(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Seeds after applying `offset`.
    pub fn seed_list(&self, offset: u64) -> Vec<u64> {
        (0..self.seeds as u64)
            .map(|i| self.seed_base.wrapping_add(offset).wrapping_add(i))
            .collect()
    }

    pub fn noise_model(&self, offset: u64) -> NoiseModel {
        NoiseModel {
            sigma: self.noise_sigma,
            enabled: self.noise,
            rng_seed: self.noise_seed.wrapping_add(offset),
        }
    }

    pub fn comparator_setup(&self) -> ComparatorSetup {
        match self.comparator {
            ReferenceKind::Tracking => ComparatorSetup::Calibrated {
                mode: ComparatorMode::ColumnTracking,
                kappa: self.kappa,
                margin: self.margin,
            },
            ReferenceKind::Fixed => ComparatorSetup::Calibrated {
                mode: ComparatorMode::FixedReference,
                kappa: 0.0,
                margin: self.margin,
            },
            ReferenceKind::Ideal => ComparatorSetup::Ideal,
        }
    }

    pub fn experiment_spec(&self, variant: Variant, offset: u64) -> ExperimentSpec {
        let seeds = self.seed_list(offset);
        ExperimentSpec {
            base: self.network.with_seed(seeds[0]),
            variant,
            seeds,
            n_patterns: self.n_patterns,
            mean_threshold: self.mean_threshold,
            software: true,
            hardware: self.hardware,
            size_grid: self.size_grid.clone(),
            c_grid: self.c_grid.clone(),
            f_grid: self.f_grid.clone(),
            device: self.device,
            noise: self.noise_model(offset),
            comparator: self.comparator_setup(),
            ..ExperimentSpec::default()
        }
    }

    fn value_of(&self, key: &str) -> String {
        fn list<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let n = &self.network;
        let d = &self.device;
        match key {
            "n_in" => n.n_in.to_string(),
            "n_out" => n.n_out.to_string(),
            "connectivity" => n.connectivity.to_string(),
            "activity" => n.activity.to_string(),
            "n_levels" => n.n_levels.to_string(),
            "model" => n.model.label().to_string(),
            "updates_per_pattern" => n.updates_per_pattern.to_string(),
            "transition_probability" => n.transition_probability.to_string(),
            "seeds" => self.seeds.to_string(),
            "seed_base" => self.seed_base.to_string(),
            "n_patterns" => self.n_patterns.to_string(),
            "mean_threshold" => self.mean_threshold.to_string(),
            "hardware" => self.hardware.to_string(),
            "size_grid" => list(&self.size_grid),
            "c_grid" => list(&self.c_grid),
            "f_grid" => list(&self.f_grid),
            "g_on" => d.g_on.to_string(),
            "g_off" => d.g_off.to_string(),
            "v_on" => d.v_on.to_string(),
            "v_off" => d.v_off.to_string(),
            "k_on" => d.k_on.to_string(),
            "k_off" => d.k_off.to_string(),
            "alpha_on" => d.alpha_on.to_string(),
            "alpha_off" => d.alpha_off.to_string(),
            "window_tau" => d.tau.to_string(),
            "window_delta" => d.delta.to_string(),
            "window_p" => d.p.to_string(),
            "noise" => self.noise.to_string(),
            "noise_sigma" => self.noise_sigma.to_string(),
            "noise_seed" => self.noise_seed.to_string(),
            "comparator" => self.comparator.label().to_string(),
            "kappa" => self.kappa.to_string(),
            "margin" => self.margin.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "svg" => self.svg.to_string(),
            _ => unreachable!("unlisted key {key}"),
        }
    }

    /// Document listing every key; `parse_config` reads it back unchanged.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_of(key));
        }
        out
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |key: &str, message: String| Error::Parse {
            line,
            key: key.to_string(),
            message,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(content, "expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err(key, "missing key".into()));
        }
        if seen.contains(&key) {
            return Err(err(key, "duplicate key".into()));
        }
        cfg.set(key, value).map_err(|m| err(key, m))?;
        seen.push(key);
    }
    cfg.device.validate().map_err(|e| Error::Parse {
        line: 0,
        key: "device".into(),
        message: e.to_string(),
    })?;
    Ok(cfg)
}

/// Offset from `METASYN_SEED_OFFSET`; unset means 0.
pub fn seed_offset_from_env() -> Result<u64> {
    match std::env::var(SEED_OFFSET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::config(SEED_OFFSET_VAR, format!("not an integer: `{v}`"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Error::config(SEED_OFFSET_VAR, e.to_string())),
    }
}
