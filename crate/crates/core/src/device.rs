//! Threshold-type (VTEAM) memristor with a modified Z-window.
//!
//! The state is kept normalized, `x = w / D ∈ [0, 1]`. Conductance is linear
//! in `x` between `G_off` and `G_on`; the state only moves when the applied
//! voltage is outside `(v_on, v_off)`, at a rate shaped by the window.
//!
//! A multistate synapse is realized by programming the device with fixed
//! pulses: every pulse moves the state to the next plateau along the
//! metastate chain. [`calibrate_metastate_table`] finds those plateaus.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::synapse::{MetaState, UpdateDirection};

/// Model constants. Rates act on the normalized state after division by
/// `thickness`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Fully-ON conductance (S).
    pub g_on: f64,
    /// Fully-OFF conductance (S).
    pub g_off: f64,
    pub thickness: f64,
    /// Negative threshold (V).
    pub v_on: f64,
    /// Positive threshold (V).
    pub v_off: f64,
    /// Rate constant below `v_on` (thickness/s, negative).
    pub k_on: f64,
    /// Rate constant above `v_off` (thickness/s, positive).
    pub k_off: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    /// Z-window decay.
    pub tau: f64,
    /// Z-window centre.
    pub delta: f64,
    /// Z-window exponent (even).
    pub p: i32,
}

impl DeviceParams {
    /// Conductance ratio between the High and Low plateaus at metalevel 0.
    pub const TARGET_RATIO: f64 = 4.5;
    /// Calibration rejects tables outside this ratio band.
    pub const RATIO_BAND: (f64, f64) = (3.5, 5.5);

    pub fn validate(&self) -> Result<()> {
        if !(self.g_on > self.g_off && self.g_off >= 0.0) {
            return Err(Error::config("g_on", "require g_on > g_off >= 0"));
        }
        if !(self.v_on < 0.0 && self.v_off > 0.0) {
            return Err(Error::config("v_on", "require v_on < 0 < v_off"));
        }
        if !(self.k_on < 0.0 && self.k_off > 0.0) {
            return Err(Error::config("k_on", "require k_on < 0 < k_off"));
        }
        if !(self.thickness > 0.0) {
            return Err(Error::config("thickness", "must be positive"));
        }
        if !(self.alpha_on > 0.0 && self.alpha_off > 0.0) {
            return Err(Error::config("alpha_on", "exponents must be positive"));
        }
        if self.p <= 0 || self.p % 2 != 0 {
            return Err(Error::config("window_p", "must be a positive even integer"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("window_delta", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Same device with the OFF conductance removed.
    pub fn without_leakage(self) -> Self {
        Self { g_off: 0.0, ..self }
    }
}

impl Default for DeviceParams {
    /// 100 kΩ / 10 MΩ limits, ±1 V thresholds, cubic rate exponents and a
    /// rate constant tuned so a 1.2 V, 15 µs pulse gives the 4.5 ratio.
    fn default() -> Self {
        Self {
            g_on: 1.0 / 100e3,
            g_off: 1.0 / 10e6,
            thickness: 1.0,
            v_on: -1.0,
            v_off: 1.0,
            k_on: -DEFAULT_RATE,
            k_off: DEFAULT_RATE,
            alpha_on: 3.0,
            alpha_off: 3.0,
            tau: 5.0,
            delta: 0.5,
            p: 2,
        }
    }
}

/// Output of [`tune_rate_constant`] for the default device and pulse.
const DEFAULT_RATE: f64 = 7.998_634_5e6;

/// Normalized device state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DeviceState {
    pub x: f64,
}

impl DeviceState {
    pub fn new(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Contract(format!("state {x} outside [0, 1]")));
        }
        Ok(Self { x })
    }

    pub fn conductance(&self, params: &DeviceParams) -> f64 {
        conductance(self.x, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Signed amplitude (V).
    pub amplitude: f64,
    /// Pulse width (s).
    pub duration: f64,
    /// Integration step (s).
    pub dt: f64,
}

impl PulseSpec {
    pub const PROGRAM_VOLTAGE: f64 = 1.2;
    pub const PROGRAM_DURATION: f64 = 15e-6;
    pub const DEFAULT_DT: f64 = 1e-8;

    pub fn new(amplitude: f64, duration: f64, dt: f64) -> Result<Self> {
        let pulse = Self {
            amplitude,
            duration,
            dt,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    /// The programming pulse in the given direction.
    pub fn programming(dir: UpdateDirection) -> Self {
        let sign = match dir {
            UpdateDirection::Potentiate => 1.0,
            UpdateDirection::Depress => -1.0,
        };
        Self {
            amplitude: sign * Self::PROGRAM_VOLTAGE,
            duration: Self::PROGRAM_DURATION,
            dt: Self::DEFAULT_DT,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::Contract(format!(
                "pulse duration {} must be positive",
                self.duration
            )));
        }
        if !(self.dt > 0.0 && self.dt <= self.duration) {
            return Err(Error::Contract(format!(
                "pulse dt {} must lie in (0, duration={}]",
                self.dt, self.duration
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.duration / self.dt).round() as usize).max(1)
    }
}

/// Multiplicative Gaussian variability on every integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub enabled: bool,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub const DEFAULT_SIGMA: f64 = 0.25;

    pub fn off() -> Self {
        Self {
            sigma: Self::DEFAULT_SIGMA,
            enabled: false,
            rng_seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, rng_seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::config(
                "noise_sigma",
                format!("{sigma} must be >= 0"),
            ));
        }
        Ok(Self {
            sigma,
            enabled: true,
            rng_seed,
        })
    }

    pub fn is_active(&self) -> bool {
        self.enabled && self.sigma > 0.0
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.rng_seed, Stream::ProgrammingNoise)
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::off()
    }
}

/// Modified Z-window `(1 - 4(x-δ)²) / exp(τ (x-δ)^p)`.
#[inline]
pub fn window(x: f64, params: &DeviceParams) -> f64 {
    let u = x - params.delta;
    (1.0 - 4.0 * u * u) / (params.tau * u.powi(params.p)).exp()
}

/// `dx/dt` of the normalized state under bias `v`.
#[inline]
pub fn state_derivative(x: f64, v: f64, params: &DeviceParams) -> f64 {
    if v > params.v_off {
        params.k_off * (v / params.v_off - 1.0).powf(params.alpha_off) * window(x, params)
            / params.thickness
    } else if v < params.v_on {
        params.k_on * (v / params.v_on - 1.0).powf(params.alpha_on) * window(x, params)
            / params.thickness
    } else {
        0.0
    }
}

#[inline]
pub fn conductance(x: f64, params: &DeviceParams) -> f64 {
    x * params.g_on + (1.0 - x) * params.g_off
}

fn is_subthreshold(v: f64, params: &DeviceParams) -> bool {
    v <= params.v_off && v >= params.v_on
}

/// Explicit Euler integration of one pulse, clamping to `[lo, hi]` after
/// every step. `noise` carries the relative step variability and its
/// generator.
fn integrate<R: Rng + ?Sized>(
    x0: f64,
    pulse: &PulseSpec,
    params: &DeviceParams,
    bounds: (f64, f64),
    mut noise: Option<(&Normal<f64>, &mut R)>,
) -> f64 {
    if is_subthreshold(pulse.amplitude, params) {
        return x0;
    }
    let (lo, hi) = bounds;
    let mut x = x0;
    for _ in 0..pulse.steps() {
        let mut dx = state_derivative(x, pulse.amplitude, params) * pulse.dt;
        if let Some((normal, rng)) = noise.as_mut() {
            dx *= 1.0 + normal.sample(&mut **rng);
        }
        x = (x + dx).clamp(lo, hi);
    }
    x
}

/// Pulse with an externally owned noise generator; used where many pulses
/// share one variability stream.
pub fn apply_pulse_with<R: Rng + ?Sized>(
    state: DeviceState,
    pulse: &PulseSpec,
    params: &DeviceParams,
    sigma: Option<f64>,
    rng: &mut R,
) -> Result<DeviceState> {
    pulse.validate()?;
    let x = match sigma.filter(|s| *s > 0.0) {
        Some(s) => {
            let normal =
                Normal::new(0.0, s).map_err(|e| Error::config("noise_sigma", e.to_string()))?;
            integrate(state.x, pulse, params, (0.0, 1.0), Some((&normal, rng)))
        }
        None => integrate::<R>(state.x, pulse, params, (0.0, 1.0), None),
    };
    Ok(DeviceState { x })
}

/// Integrates one pulse; state stays within `[0, 1]`.
pub fn apply_pulse(
    state: DeviceState,
    pulse: &PulseSpec,
    params: &DeviceParams,
    noise: &NoiseModel,
) -> Result<DeviceState> {
    let mut rng = noise.rng();
    let sigma = noise.is_active().then_some(noise.sigma);
    apply_pulse_with(state, pulse, params, sigma, &mut rng)
}

/// Device-state plateaus for each metastate, in chain order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetastateTable {
    n_levels: u16,
    plateaus: Vec<(MetaState, f64)>,
    pulse_dt: f64,
}

impl MetastateTable {
    /// Builds a table from explicit plateau values in chain order.
    pub fn from_plateaus(n_levels: u16, xs: &[f64], pulse_dt: f64) -> Result<Self> {
        let chain = MetaState::chain(n_levels)?;
        if xs.len() != chain.len() {
            return Err(Error::Calibration(format!(
                "expected {} plateaus, got {}",
                chain.len(),
                xs.len()
            )));
        }
        if xs
            .iter()
            .any(|x| !x.is_finite() || !(0.0..=1.0).contains(x))
        {
            return Err(Error::Calibration("plateau outside [0, 1]".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Calibration(format!(
                "plateaus are not strictly increasing: {xs:?}"
            )));
        }
        Ok(Self {
            n_levels,
            plateaus: chain.into_iter().zip(xs.iter().copied()).collect(),
            pulse_dt,
        })
    }

    pub fn n_levels(&self) -> u16 {
        self.n_levels
    }

    pub fn plateaus(&self) -> &[(MetaState, f64)] {
        &self.plateaus
    }

    /// Integration step the table was calibrated with.
    pub fn pulse_dt(&self) -> f64 {
        self.pulse_dt
    }

    pub fn x_of(&self, state: MetaState) -> f64 {
        self.plateaus[state.chain_index()].1
    }

    pub fn state_of(&self, state: MetaState) -> DeviceState {
        DeviceState {
            x: self.x_of(state),
        }
    }

    /// Lowest and highest programmed plateau.
    pub fn range(&self) -> (f64, f64) {
        (self.plateaus[0].1, self.plateaus[self.plateaus.len() - 1].1)
    }

    /// `G(High, 0) / G(Low, 0)`.
    pub fn plastic_ratio(&self, params: &DeviceParams) -> f64 {
        let n = self.n_levels as usize;
        conductance(self.plateaus[n].1, params) / conductance(self.plateaus[n - 1].1, params)
    }

    /// Nearest plateau; ties resolve to the lower one.
    pub fn decode(&self, state: DeviceState) -> MetaState {
        let mut best = self.plateaus[0];
        let mut best_dist = (state.x - best.1).abs();
        for &(m, x) in &self.plateaus[1..] {
            let d = (state.x - x).abs();
            if d < best_dist {
                best = (m, x);
                best_dist = d;
            }
        }
        best.0
    }
}

pub fn decode_metastate(state: DeviceState, table: &MetastateTable) -> MetaState {
    table.decode(state)
}

fn noiseless(x: f64, pulse: &PulseSpec, params: &DeviceParams) -> f64 {
    integrate::<ChaCha8Rng>(x, pulse, params, (0.0, 1.0), None)
}

/// Lower plastic plateau `x` such that one programming pulse lands on its
/// mirror image about the window centre.
fn central_low_plateau(params: &DeviceParams, pulse: &PulseSpec) -> Result<f64> {
    let centre = params.delta;
    let gap = |x: f64| noiseless(x, pulse, params) + x - 2.0 * centre;
    let (mut lo, mut hi) = (f64::EPSILON, centre);
    if gap(lo) >= 0.0 || gap(hi) <= 0.0 {
        return Err(Error::Calibration(
            "programming pulse cannot bracket the plastic plateaus".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pulse-train calibration with the default programming pulse.
pub fn calibrate_metastate_table(params: &DeviceParams, n_levels: u16) -> Result<MetastateTable> {
    calibrate_with_pulse(
        params,
        n_levels,
        &PulseSpec::programming(UpdateDirection::Potentiate),
    )
}

/// Finds the `2n` plateaus visited by a noise-free train of programming
/// pulses.
///
/// The two plastic plateaus sit symmetrically about the window centre `δ`,
/// one potentiating pulse apart. Deeper Low levels follow from repeated
/// depressing pulses, deeper High levels from repeated potentiating ones.
pub fn calibrate_with_pulse(
    params: &DeviceParams,
    n_levels: u16,
    potentiate: &PulseSpec,
) -> Result<MetastateTable> {
    params.validate()?;
    potentiate.validate()?;
    if n_levels == 0 {
        return Err(Error::config("n_levels", "must be at least 1"));
    }
    let up = potentiate.with_amplitude(potentiate.amplitude.abs());
    let down = potentiate.with_amplitude(-potentiate.amplitude.abs());
    let low_plastic = central_low_plateau(params, &up)?;
    let high_plastic = noiseless(low_plastic, &up, params);
    let mut lows = vec![low_plastic];
    let mut highs = vec![high_plastic];
    for _ in 1..n_levels {
        lows.push(noiseless(*lows.last().unwrap(), &down, params));
        highs.push(noiseless(*highs.last().unwrap(), &up, params));
    }
    let xs: Vec<f64> = lows.into_iter().rev().chain(highs).collect();
    let table = MetastateTable::from_plateaus(n_levels, &xs, potentiate.dt)?;
    let ratio = table.plastic_ratio(params);
    let (lo, hi) = DeviceParams::RATIO_BAND;
    if !(lo..=hi).contains(&ratio) {
        return Err(Error::Calibration(format!(
            "plastic conductance ratio {ratio:.3} outside [{lo}, {hi}]; retune k_on/k_off"
        )));
    }
    Ok(table)
}

/// Retunes `k_off = -k_on` so the calibrated plastic ratio hits `target`.
pub fn tune_rate_constant(
    params: &DeviceParams,
    target: f64,
    pulse: &PulseSpec,
) -> Result<DeviceParams> {
    let ratio_for = |k: f64| -> Result<f64> {
        let p = DeviceParams {
            k_off: k,
            k_on: -k,
            ..*params
        };
        // A pulse that cannot reach the centre is too weak; one that jumps
        // past it from the bottom is too strong.
        if noiseless(p.delta, pulse, &p) <= p.delta {
            return Ok(0.0);
        }
        if noiseless(f64::EPSILON, pulse, &p) + f64::EPSILON >= 2.0 * p.delta {
            return Ok(f64::INFINITY);
        }
        let x = central_low_plateau(&p, pulse)?;
        let y = noiseless(x, pulse, &p);
        Ok(conductance(y, &p) / conductance(x, &p))
    };
    let (mut lo, mut hi) = (1e3f64, 1e10f64);
    if ratio_for(hi)? < target {
        return Err(Error::Calibration(format!("ratio {target} unreachable")));
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if ratio_for(mid)? > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    let k = (lo * hi).sqrt();
    Ok(DeviceParams {
        k_off: k,
        k_on: -k,
        ..*params
    })
}

/// One programming pulse of the given signed amplitude, bounded to the
/// programmed range of `table`.
pub fn program_pulse_with<R: Rng + ?Sized>(
    state: DeviceState,
    amplitude: f64,
    params: &DeviceParams,
    table: &MetastateTable,
    sigma: Option<f64>,
    rng: &mut R,
) -> DeviceState {
    let pulse = PulseSpec::programming(UpdateDirection::Potentiate)
        .with_amplitude(amplitude)
        .with_dt(table.pulse_dt());
    let bounds = table.range();
    let x = match sigma
        .filter(|s| *s > 0.0)
        .and_then(|s| Normal::new(0.0, s).ok())
    {
        Some(normal) => integrate(state.x, &pulse, params, bounds, Some((&normal, rng))),
        None => integrate::<R>(state.x, &pulse, params, bounds, None),
    };
    DeviceState { x }
}

/// Applies one programming pulse in `dir`.
pub fn program_transition_with<R: Rng + ?Sized>(
    state: DeviceState,
    dir: UpdateDirection,
    params: &DeviceParams,
    table: &MetastateTable,
    sigma: Option<f64>,
    rng: &mut R,
) -> DeviceState {
    let amplitude = PulseSpec::programming(dir).amplitude;
    program_pulse_with(state, amplitude, params, table, sigma, rng)
}

pub fn program_transition(
    state: DeviceState,
    dir: UpdateDirection,
    params: &DeviceParams,
    table: &MetastateTable,
    noise: &NoiseModel,
) -> DeviceState {
    let mut rng = noise.rng();
    let sigma = noise.is_active().then_some(noise.sigma);
    program_transition_with(state, dir, params, table, sigma, &mut rng)
}
