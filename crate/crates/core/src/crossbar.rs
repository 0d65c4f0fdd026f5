//! Crossbar realization of the network.
//!
//! Every crosspoint holds a memristor. Crosspoints outside the connectivity
//! mask are pruned: parked at `x = 0` and never programmed, but still read,
//! so they leak `v_read · G_off` into their column whenever their row is
//! active. Rows reach the array through ideal diodes, so an inactive row
//! carries no current at all. Outputs are current comparators.
//!
//! Training is two-phase. During potentiation, active rows are driven to
//! `v_program`, columns needing potentiation are grounded and everything else
//! sits at `v_half`; depression mirrors this. With `v_half = V_DD / 2` every
//! unselected device sees at most `v_program / 2`, which is below the device
//! threshold and therefore leaves its state untouched.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::device::{
    conductance, program_pulse_with, DeviceParams, DeviceState, MetastateTable, NoiseModel,
};
use crate::error::{Error, Result};
use crate::network::{
    initial_layout, pattern_set, run_protocol, AccuracyTrace, NetworkConfig, Pattern,
    PatternLearner,
};
use crate::rng::{stream_rng, Stream};
use crate::synapse::{Efficacy, MetaState, UpdateDirection};

pub const DEFAULT_V_READ: f64 = 0.3;
pub const DEFAULT_V_DD: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComparatorMode {
    FixedReference,
    ColumnTracking,
}

impl ComparatorMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" | "fixed_reference" => Some(ComparatorMode::FixedReference),
            "tracking" | "column_tracking" => Some(ComparatorMode::ColumnTracking),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ComparatorMode::FixedReference => "fixed",
            ComparatorMode::ColumnTracking => "tracking",
        }
    }
}

/// Output neuron reference.
///
/// `FixedReference` fires when `I_j > i_ref`. `ColumnTracking` shifts that
/// reference with the column: `I_j > i_ref + kappa · v_read · (ΣG_j − ΣG₀)`,
/// where `ΣG_j` is the column's connected conductance now and `ΣG₀` the mean
/// connected column conductance at initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparatorConfig {
    pub mode: ComparatorMode,
    pub kappa: f64,
    pub i_ref: f64,
}

impl ComparatorConfig {
    pub const DEFAULT_KAPPA: f64 = 0.05;
    /// Extra High synapses, beyond θ, at which the reference is placed.
    pub const DEFAULT_MARGIN: f64 = 3.0;

    pub fn fixed(i_ref: f64) -> Self {
        Self {
            mode: ComparatorMode::FixedReference,
            kappa: 0.0,
            i_ref,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_ref > 0.0) {
            return Err(Error::config("i_ref", "reference current must be positive"));
        }
        if self.mode == ComparatorMode::ColumnTracking && !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::config(
                "kappa",
                format!("{} not in (0, 1)", self.kappa),
            ));
        }
        Ok(())
    }

    /// Reference placed at the current of a column whose expected active
    /// inputs hold `θ + margin` plastic High synapses, plastic Low synapses
    /// on the remaining connected rows, and pruned leakage on the rest.
    pub fn calibrated(mode: ComparatorMode, xb: &Crossbar, kappa: f64, margin: f64) -> Self {
        let cfg = xb.config();
        let params = xb.params();
        let n = cfg.effective_levels();
        let g_high = conductance(
            xb.table()
                .x_of(MetaState::plastic(Efficacy::High, n).unwrap()),
            params,
        );
        let g_low = conductance(
            xb.table()
                .x_of(MetaState::plastic(Efficacy::Low, n).unwrap()),
            params,
        );
        let active = cfg.n_in as f64 * cfg.activity;
        let baseline =
            active * (cfg.connectivity * g_low + (1.0 - cfg.connectivity) * params.g_off);
        let i_ref = xb.v_read * ((cfg.threshold() + margin) * (g_high - g_low) + baseline);
        Self { mode, kappa, i_ref }
    }

    /// `v_read · G(High, 0) · θ`: the reference under which a leak-free
    /// crossbar with one conductance per efficacy reproduces the ideal
    /// threshold.
    pub fn ideal_reference(xb: &Crossbar) -> Self {
        let n = xb.config().effective_levels();
        let x = xb
            .table()
            .x_of(MetaState::plastic(Efficacy::High, n).unwrap());
        Self::fixed(xb.v_read * conductance(x, xb.params()) * xb.config().threshold())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Potentiation,
    Depression,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Potentiation => "potentiate",
            Phase::Depression => "depress",
        }
    }

    pub fn direction(self) -> UpdateDirection {
        match self {
            Phase::Potentiation => UpdateDirection::Potentiate,
            Phase::Depression => UpdateDirection::Depress,
        }
    }
}

/// One programmed device.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramEvent {
    pub step: usize,
    pub phase: Phase,
    pub row: usize,
    pub col: usize,
    pub x_before: f64,
    pub x_after: f64,
    pub meta_before: MetaState,
    pub meta_after: MetaState,
}

#[derive(Debug, Clone)]
pub struct Crossbar {
    cfg: NetworkConfig,
    devices: Vec<DeviceState>,
    mask: Vec<bool>,
    params: DeviceParams,
    table: MetastateTable,
    pub v_read: f64,
    pub v_program: f64,
    pub v_half: f64,
    column_conductance: Vec<f64>,
    baseline_conductance: f64,
}

impl Crossbar {
    /// Connected devices start at a random-efficacy plastic plateau, pruned
    /// ones at `x = 0`.
    pub fn new(cfg: &NetworkConfig, params: &DeviceParams, table: &MetastateTable) -> Result<Self> {
        if table.n_levels() != cfg.effective_levels() {
            return Err(Error::Contract(format!(
                "table has {} levels, network needs {}",
                table.n_levels(),
                cfg.effective_levels()
            )));
        }
        params.validate()?;
        let layout = initial_layout(cfg)?;
        let mut devices = vec![DeviceState { x: 0.0 }; cfg.n_in * cfg.n_out];
        for (&k, &e) in layout.connected.iter().zip(&layout.efficacy) {
            devices[k] = table.state_of(MetaState::plastic(e, table.n_levels())?);
        }
        let mut xb = Self {
            cfg: *cfg,
            devices,
            mask: layout.mask,
            params: *params,
            table: table.clone(),
            v_read: DEFAULT_V_READ,
            v_program: DEFAULT_V_DD,
            v_half: DEFAULT_V_DD / 2.0,
            column_conductance: vec![0.0; cfg.n_out],
            baseline_conductance: 0.0,
        };
        xb.refresh_column_conductance();
        xb.baseline_conductance = xb.column_conductance.iter().sum::<f64>() / cfg.n_out as f64;
        Ok(xb)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn table(&self) -> &MetastateTable {
        &self.table
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn devices(&self) -> &[DeviceState] {
        &self.devices
    }

    pub fn n_in(&self) -> usize {
        self.cfg.n_in
    }

    pub fn n_out(&self) -> usize {
        self.cfg.n_out
    }

    pub fn device(&self, row: usize, col: usize) -> DeviceState {
        self.devices[row * self.cfg.n_out + col]
    }

    pub fn is_connected(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.cfg.n_out + col]
    }

    /// Overwrites one connected device.
    pub fn set_device(&mut self, row: usize, col: usize, state: DeviceState) -> Result<()> {
        let k = row * self.cfg.n_out + col;
        if !self.mask[k] {
            return Err(Error::Contract(format!("device ({row}, {col}) is pruned")));
        }
        DeviceState::new(state.x)?;
        self.devices[k] = state;
        self.refresh_column_conductance();
        Ok(())
    }

    /// Decoded metastate of a connected device.
    pub fn metastate(&self, row: usize, col: usize) -> MetaState {
        self.table.decode(self.device(row, col))
    }

    /// Mean connected column conductance at initialization.
    pub fn baseline_conductance(&self) -> f64 {
        self.baseline_conductance
    }

    pub fn column_conductance(&self) -> &[f64] {
        &self.column_conductance
    }

    fn refresh_column_conductance(&mut self) {
        let n_out = self.cfg.n_out;
        self.column_conductance.iter_mut().for_each(|g| *g = 0.0);
        for (k, d) in self.devices.iter().enumerate() {
            if self.mask[k] {
                self.column_conductance[k % n_out] += conductance(d.x, &self.params);
            }
        }
    }

    fn check_input(&self, input: &[bool]) -> Result<()> {
        if input.len() != self.cfg.n_in {
            return Err(Error::Contract(format!(
                "input length {} != n_in {}",
                input.len(),
                self.cfg.n_in
            )));
        }
        Ok(())
    }

    /// Read current of every column. Inactive rows are blocked by their
    /// diode; pruned devices on active rows leak.
    pub fn column_currents(&self, input: &[bool]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let n_out = self.cfg.n_out;
        let mut currents = vec![0.0; n_out];
        for (i, _) in input.iter().enumerate().filter(|(_, &b)| b) {
            let row = &self.devices[i * n_out..(i + 1) * n_out];
            for (current, d) in currents.iter_mut().zip(row) {
                *current += self.v_read * conductance(d.x, &self.params);
            }
        }
        Ok(currents)
    }

    /// Total current through pruned devices for `input`.
    pub fn pruned_leakage(&self, input: &[bool]) -> Result<f64> {
        self.check_input(input)?;
        let n_out = self.cfg.n_out;
        let mut total = 0.0;
        for (i, _) in input.iter().enumerate().filter(|(_, &b)| b) {
            for j in 0..n_out {
                let k = i * n_out + j;
                if !self.mask[k] {
                    total += self.v_read * conductance(self.devices[k].x, &self.params);
                }
            }
        }
        Ok(total)
    }

    pub fn reference_currents(&self, cmp: &ComparatorConfig) -> Vec<f64> {
        match cmp.mode {
            ComparatorMode::FixedReference => vec![cmp.i_ref; self.cfg.n_out],
            ComparatorMode::ColumnTracking => self
                .column_conductance
                .iter()
                .map(|g| cmp.i_ref + cmp.kappa * self.v_read * (g - self.baseline_conductance))
                .collect(),
        }
    }

    pub fn infer(&self, input: &[bool], cmp: &ComparatorConfig) -> Result<Vec<bool>> {
        let currents = self.column_currents(input)?;
        Ok(currents
            .iter()
            .zip(self.reference_currents(cmp))
            .map(|(i, r)| *i > r)
            .collect())
    }

    /// Voltage across a device during a programming phase.
    pub fn programming_bias(&self, phase: Phase, row_active: bool, col_selected: bool) -> f64 {
        let (row_v, col_v) = match phase {
            Phase::Potentiation => (
                if row_active {
                    self.v_program
                } else {
                    self.v_half
                },
                if col_selected { 0.0 } else { self.v_half },
            ),
            Phase::Depression => (
                if row_active { 0.0 } else { self.v_half },
                if col_selected {
                    self.v_program
                } else {
                    self.v_half
                },
            ),
        };
        row_v - col_v
    }

    /// Runs both programming phases for one pattern. Returns the number of
    /// programmed devices.
    #[allow(clippy::too_many_arguments)]
    pub fn train_two_phase<R: Rng + ?Sized>(
        &mut self,
        pattern: &Pattern,
        cmp: &ComparatorConfig,
        sigma: Option<f64>,
        rng: &mut R,
        step: usize,
        mut log: Option<&mut Vec<ProgramEvent>>,
    ) -> Result<usize> {
        if pattern.target.len() != self.cfg.n_out {
            return Err(Error::Contract("target length != n_out".into()));
        }
        let out = self.infer(&pattern.input, cmp)?;
        let errors: Vec<i8> = pattern
            .target
            .iter()
            .zip(&out)
            .map(|(&t, &y)| t as i8 - y as i8)
            .collect();
        let n_out = self.cfg.n_out;
        let mut programmed = 0;
        for phase in [Phase::Potentiation, Phase::Depression] {
            let wanted = match phase {
                Phase::Potentiation => 1,
                Phase::Depression => -1,
            };
            if !errors.contains(&wanted) {
                continue;
            }
            for (i, &row_active) in pattern.input.iter().enumerate() {
                for (j, &err) in errors.iter().enumerate() {
                    let k = i * n_out + j;
                    if !self.mask[k] {
                        continue;
                    }
                    let bias = self.programming_bias(phase, row_active, err == wanted);
                    if bias <= self.params.v_off && bias >= self.params.v_on {
                        // Half-selected or idle: the device cannot move.
                        continue;
                    }
                    let before = self.devices[k];
                    let after =
                        program_pulse_with(before, bias, &self.params, &self.table, sigma, rng);
                    self.devices[k] = after;
                    programmed += 1;
                    if let Some(log) = log.as_deref_mut() {
                        log.push(ProgramEvent {
                            step,
                            phase,
                            row: i,
                            col: j,
                            x_before: before.x,
                            x_after: after.x,
                            meta_before: self.table.decode(before),
                            meta_after: self.table.decode(after),
                        });
                    }
                }
            }
        }
        if programmed > 0 {
            self.refresh_column_conductance();
        }
        Ok(programmed)
    }
}

/// Crossbar with a comparator and a programming-noise stream.
pub struct HardwareLearner {
    pub xb: Crossbar,
    pub comparator: ComparatorConfig,
    sigma: Option<f64>,
    rng: ChaCha8Rng,
    step: usize,
    log: Option<Vec<ProgramEvent>>,
}

impl HardwareLearner {
    pub fn new(xb: Crossbar, comparator: ComparatorConfig, noise: &NoiseModel) -> Result<Self> {
        comparator.validate()?;
        let seed = xb.config().seed ^ noise.rng_seed;
        Ok(Self {
            xb,
            comparator,
            sigma: noise.is_active().then_some(noise.sigma),
            rng: stream_rng(seed, Stream::ProgrammingNoise),
            step: 0,
            log: None,
        })
    }

    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn events(&self) -> &[ProgramEvent] {
        self.log.as_deref().unwrap_or(&[])
    }
}

impl PatternLearner for HardwareLearner {
    fn n_out(&self) -> usize {
        self.xb.n_out()
    }

    fn infer(&self, input: &[bool]) -> Result<Vec<bool>> {
        self.xb.infer(input, &self.comparator)
    }

    fn learn(&mut self, pattern: &Pattern) -> Result<()> {
        self.step += 1;
        let rounds = self.xb.config().updates_per_pattern;
        for _ in 0..rounds {
            let moved = self.xb.train_two_phase(
                pattern,
                &self.comparator,
                self.sigma,
                &mut self.rng,
                self.step,
                self.log.as_mut(),
            )?;
            if moved == 0 {
                break;
            }
        }
        Ok(())
    }
}

/// How the comparator of a hardware run is set up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparatorSetup {
    /// Calibrated from the freshly initialized crossbar.
    Calibrated {
        mode: ComparatorMode,
        kappa: f64,
        margin: f64,
    },
    /// `v_read · G(High, 0) · θ`, fixed.
    Ideal,
    Explicit(ComparatorConfig),
}

impl Default for ComparatorSetup {
    fn default() -> Self {
        ComparatorSetup::Calibrated {
            mode: ComparatorMode::ColumnTracking,
            kappa: ComparatorConfig::DEFAULT_KAPPA,
            margin: ComparatorConfig::DEFAULT_MARGIN,
        }
    }
}

impl ComparatorSetup {
    pub fn resolve(&self, xb: &Crossbar) -> ComparatorConfig {
        match *self {
            ComparatorSetup::Calibrated {
                mode,
                kappa,
                margin,
            } => ComparatorConfig::calibrated(mode, xb, kappa, margin),
            ComparatorSetup::Ideal => ComparatorConfig::ideal_reference(xb),
            ComparatorSetup::Explicit(c) => c,
        }
    }
}

pub fn build_hardware_learner(
    cfg: &NetworkConfig,
    params: &DeviceParams,
    table: &MetastateTable,
    setup: &ComparatorSetup,
    noise: &NoiseModel,
) -> Result<HardwareLearner> {
    let xb = Crossbar::new(cfg, params, table)?;
    let cmp = setup.resolve(&xb);
    HardwareLearner::new(xb, cmp, noise)
}

/// Lifetime run on the crossbar with the same patterns and initial layout as
/// the ideal network of the same seed.
pub fn run_lifetime_hw(
    cfg: &NetworkConfig,
    n_patterns: usize,
    params: &DeviceParams,
    table: &MetastateTable,
    setup: &ComparatorSetup,
    noise: &NoiseModel,
) -> Result<AccuracyTrace> {
    let patterns = pattern_set(cfg, n_patterns)?;
    let mut learner = build_hardware_learner(cfg, params, table, setup, noise)?;
    run_protocol(&mut learner, &patterns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::calibrate_metastate_table;
    use crate::network::SynapseModel;
    use approx::assert_relative_eq;

    fn tiny() -> (NetworkConfig, DeviceParams, MetastateTable) {
        let cfg = NetworkConfig {
            n_in: 5,
            n_out: 3,
            connectivity: 0.5,
            activity: 0.4,
            ..NetworkConfig::default()
        };
        let params = DeviceParams::default();
        let table = calibrate_metastate_table(&params, 3).unwrap();
        (cfg, params, table)
    }

    #[test]
    fn init_counts() {
        let (cfg, params, table) = tiny();
        let xb = Crossbar::new(&cfg, &params, &table).unwrap();
        assert_eq!(xb.mask().iter().filter(|&&m| m).count(), 8);
        let pruned: Vec<_> = (0..15).filter(|&k| !xb.mask()[k]).collect();
        assert_eq!(pruned.len(), 7);
        assert!(pruned.iter().all(|&k| xb.devices()[k].x == 0.0));
        for i in 0..5 {
            for j in 0..3 {
                if xb.is_connected(i, j) {
                    assert_eq!(xb.metastate(i, j).metalevel(), 0);
                }
            }
        }
        let big = NetworkConfig::default();
        let t = calibrate_metastate_table(&params, 3).unwrap();
        let xb = Crossbar::new(&big, &params, &t).unwrap();
        assert_eq!(xb.mask().iter().filter(|&&m| m).count(), 4096);
    }

    #[test]
    fn table_levels_must_match() {
        let (cfg, params, table) = tiny();
        let binary = cfg.with_model(SynapseModel::Binary);
        assert!(Crossbar::new(&binary, &params, &table).is_err());
    }

    #[test]
    fn diode_gating_and_leakage() {
        let (cfg, params, table) = tiny();
        let xb = Crossbar::new(&cfg, &params, &table).unwrap();
        assert!(xb
            .column_currents(&[false; 5])
            .unwrap()
            .iter()
            .all(|&c| c == 0.0));
        let k = (0..15).find(|&k| !xb.mask()[k]).unwrap();
        let (i, j) = (k / 3, k % 3);
        let mut input = [false; 5];
        input[i] = true;
        let currents = xb.column_currents(&input).unwrap();
        assert_relative_eq!(currents[j], 30e-9, max_relative = 1e-12);
    }

    #[test]
    fn plastic_high_reads_four_and_a_half_times_low() {
        let (cfg, params, table) = tiny();
        let mut xb = Crossbar::new(&cfg, &params, &table).unwrap();
        let k = (0..15).find(|&k| xb.mask()[k]).unwrap();
        let (i, j) = (k / 3, k % 3);
        let mut input = [false; 5];
        input[i] = true;
        let mut read = |e| {
            xb.set_device(i, j, table.state_of(MetaState::plastic(e, 3).unwrap()))
                .unwrap();
            xb.column_currents(&input).unwrap()[j]
        };
        let ratio = read(Efficacy::High) / read(Efficacy::Low);
        assert!((4.0..=5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn unselected_bias_is_half_select() {
        let (cfg, params, table) = tiny();
        let xb = Crossbar::new(&cfg, &params, &table).unwrap();
        for phase in [Phase::Potentiation, Phase::Depression] {
            for (row, col) in [(true, false), (false, true), (false, false)] {
                let v = xb.programming_bias(phase, row, col);
                assert!(v.abs() <= xb.v_half + 1e-12 && v < params.v_off && v > params.v_on);
            }
            assert_eq!(xb.programming_bias(phase, true, true).abs(), xb.v_program);
        }
    }
}
