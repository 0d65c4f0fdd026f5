//! Ideal two-layer network: sparse binary (or GD) synapses between an input
//! and an output layer, McCulloch-Pitts outputs and an error-driven update.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::synapse::{Efficacy, GdSynapse, MetaState, TransitionPolicy, UpdateDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SynapseModel {
    Binary,
    Multistate,
    GradientDescent,
}

impl SynapseModel {
    pub fn label(self) -> &'static str {
        match self {
            SynapseModel::Binary => "binary",
            SynapseModel::Multistate => "multistate",
            SynapseModel::GradientDescent => "gradient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" => Some(SynapseModel::Binary),
            "multistate" => Some(SynapseModel::Multistate),
            "gradient" | "gd" | "gradient_descent" => Some(SynapseModel::GradientDescent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub n_in: usize,
    pub n_out: usize,
    pub connectivity: f64,
    pub activity: f64,
    pub n_levels: u16,
    pub model: SynapseModel,
    pub seed: u64,
    pub updates_per_pattern: u32,
    pub transition_probability: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_in: 128,
            n_out: 128,
            connectivity: 0.25,
            activity: 0.25,
            n_levels: 3,
            model: SynapseModel::Multistate,
            seed: 0,
            updates_per_pattern: 1,
            transition_probability: 1.0,
        }
    }
}

impl NetworkConfig {
    pub fn with_model(self, model: SynapseModel) -> Self {
        Self { model, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_size(self, n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            ..self
        }
    }

    pub fn with_levels(self, n_levels: u16) -> Self {
        Self { n_levels, ..self }
    }

    pub fn with_cf(self, connectivity: f64, activity: f64) -> Self {
        Self {
            connectivity,
            activity,
            ..self
        }
    }

    /// Metalevels actually used; the binary model is the one-level chain.
    pub fn effective_levels(&self) -> u16 {
        match self.model {
            SynapseModel::Binary => 1,
            _ => self.n_levels,
        }
    }

    pub fn active_inputs(&self) -> usize {
        (self.activity * self.n_in as f64).round() as usize
    }

    pub fn active_outputs(&self) -> usize {
        (self.activity * self.n_out as f64).round() as usize
    }

    pub fn connected_count(&self) -> usize {
        (self.connectivity * (self.n_in * self.n_out) as f64).round() as usize
    }

    /// `N_in · C · f / 2`, the mean input of a freshly initialized neuron.
    pub fn threshold(&self) -> f64 {
        self.n_in as f64 * self.connectivity * self.activity / 2.0
    }

    pub fn policy(&self) -> TransitionPolicy {
        TransitionPolicy {
            transition_probability: self.transition_probability,
            rng_seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 || self.n_out == 0 {
            return Err(Error::config("n_in", "layer sizes must be positive"));
        }
        if !(self.connectivity > 0.0 && self.connectivity <= 1.0) {
            return Err(Error::config(
                "connectivity",
                format!("{} not in (0, 1]", self.connectivity),
            ));
        }
        if !(self.activity > 0.0 && self.activity <= 1.0) {
            return Err(Error::config(
                "activity",
                format!("{} not in (0, 1]", self.activity),
            ));
        }
        if self.active_inputs() < 1 || self.active_outputs() < 1 {
            return Err(Error::config("activity", "round(f * N) must be at least 1"));
        }
        if self.connected_count() < 1 {
            return Err(Error::config("connectivity", "no connected synapses"));
        }
        if self.n_levels == 0 {
            return Err(Error::config("n_levels", "must be at least 1"));
        }
        if self.updates_per_pattern == 0 {
            return Err(Error::config("updates_per_pattern", "must be at least 1"));
        }
        self.policy().validate()
    }
}

/// An input/target pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub input: Vec<bool>,
    pub target: Vec<bool>,
}

impl Pattern {
    pub fn active_inputs(&self) -> impl Iterator<Item = usize> + '_ {
        self.input
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }
}

/// Random bit vectors with exactly `round(f · n_bits)` ones each.
pub fn generate_patterns_with<R: Rng + ?Sized>(
    n_bits: usize,
    activity: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<bool>>> {
    let ones = (activity * n_bits as f64).round();
    if !(activity > 0.0 && activity <= 1.0) || ones < 1.0 || ones > n_bits as f64 {
        return Err(Error::config(
            "activity",
            format!("activity {activity} gives {ones} ones out of {n_bits}"),
        ));
    }
    let ones = ones as usize;
    Ok((0..count)
        .map(|_| {
            let mut bits = vec![false; n_bits];
            for i in index::sample(rng, n_bits, ones) {
                bits[i] = true;
            }
            bits
        })
        .collect())
}

pub fn generate_patterns(
    n_bits: usize,
    activity: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    generate_patterns_with(
        n_bits,
        activity,
        count,
        &mut stream_rng(seed, Stream::InputPatterns),
    )
}

/// The input/target pairs presented during a lifetime run.
pub fn pattern_set(cfg: &NetworkConfig, count: usize) -> Result<Vec<Pattern>> {
    let inputs = generate_patterns_with(
        cfg.n_in,
        cfg.activity,
        count,
        &mut stream_rng(cfg.seed, Stream::InputPatterns),
    )?;
    let targets = generate_patterns_with(
        cfg.n_out,
        cfg.activity,
        count,
        &mut stream_rng(cfg.seed, Stream::TargetPatterns),
    )?;
    Ok(inputs
        .into_iter()
        .zip(targets)
        .map(|(input, target)| Pattern { input, target })
        .collect())
}

/// Connectivity mask (row-major, `n_in × n_out`) and the initial efficacy of
/// each connected entry, shared by the ideal and the crossbar networks.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLayout {
    pub mask: Vec<bool>,
    pub connected: Vec<usize>,
    pub efficacy: Vec<Efficacy>,
}

pub fn initial_layout(cfg: &NetworkConfig) -> Result<InitialLayout> {
    cfg.validate()?;
    let total = cfg.n_in * cfg.n_out;
    let mut rng = stream_rng(cfg.seed, Stream::Connectivity);
    let mut connected: Vec<usize> =
        index::sample(&mut rng, total, cfg.connected_count()).into_vec();
    connected.sort_unstable();
    let mut mask = vec![false; total];
    for &k in &connected {
        mask[k] = true;
    }
    let mut rng = stream_rng(cfg.seed, Stream::InitialStates);
    let efficacy = connected
        .iter()
        .map(|_| Efficacy::from_bit(rng.random::<bool>()))
        .collect();
    Ok(InitialLayout {
        mask,
        connected,
        efficacy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynapseMatrix {
    Meta(Vec<MetaState>),
    Gd(Vec<GdSynapse>),
}

/// Common surface of the ideal and the hardware networks.
pub trait PatternLearner {
    fn n_out(&self) -> usize;

    fn infer(&self, input: &[bool]) -> Result<Vec<bool>>;

    fn learn(&mut self, pattern: &Pattern) -> Result<()>;

    /// Fraction of output bits matching the target.
    fn bitwise_accuracy(&self, pattern: &Pattern) -> Result<f64> {
        let out = self.infer(&pattern.input)?;
        let hits = out
            .iter()
            .zip(&pattern.target)
            .filter(|(a, b)| a == b)
            .count();
        Ok(hits as f64 / self.n_out() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct BehavioralNetwork {
    cfg: NetworkConfig,
    mask: Vec<bool>,
    synapses: SynapseMatrix,
    threshold: f64,
}

impl BehavioralNetwork {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        let layout = initial_layout(cfg)?;
        let total = cfg.n_in * cfg.n_out;
        let synapses = match cfg.model {
            SynapseModel::GradientDescent => {
                let mut rng = stream_rng(cfg.seed, Stream::InitialStates);
                let mut w = vec![GdSynapse::new(0.0); total];
                for &k in &layout.connected {
                    w[k] = GdSynapse::new(rng.random::<f64>());
                }
                SynapseMatrix::Gd(w)
            }
            _ => {
                let n = cfg.effective_levels();
                let mut s = vec![MetaState::plastic(Efficacy::Low, n)?; total];
                for (&k, &e) in layout.connected.iter().zip(&layout.efficacy) {
                    s[k] = MetaState::plastic(e, n)?;
                }
                SynapseMatrix::Meta(s)
            }
        };
        Ok(Self {
            cfg: *cfg,
            mask: layout.mask,
            synapses,
            threshold: cfg.threshold(),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn synapses(&self) -> &SynapseMatrix {
        &self.synapses
    }

    pub fn meta_states(&self) -> Option<&[MetaState]> {
        match &self.synapses {
            SynapseMatrix::Meta(s) => Some(s),
            SynapseMatrix::Gd(_) => None,
        }
    }

    /// Replaces one connected synapse's state (test fixtures).
    pub fn set_state(&mut self, row: usize, col: usize, state: MetaState) -> Result<()> {
        let k = row * self.cfg.n_out + col;
        if !self.mask[k] {
            return Err(Error::Contract(format!(
                "synapse ({row}, {col}) is not connected"
            )));
        }
        match &mut self.synapses {
            SynapseMatrix::Meta(s) => s[k] = state,
            SynapseMatrix::Gd(_) => {
                return Err(Error::Contract("GD network has no metastates".into()))
            }
        }
        Ok(())
    }

    pub fn connected_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn efficacy_at(&self, k: usize) -> u32 {
        match &self.synapses {
            SynapseMatrix::Meta(s) => s[k].efficacy_value() as u32,
            SynapseMatrix::Gd(w) => w[k].efficacy().value() as u32,
        }
    }

    /// Integer input sum of every output neuron.
    pub fn input_sums(&self, input: &[bool]) -> Result<Vec<u32>> {
        if input.len() != self.cfg.n_in {
            return Err(Error::Contract(format!(
                "input length {} != n_in {}",
                input.len(),
                self.cfg.n_in
            )));
        }
        let n_out = self.cfg.n_out;
        let mut sums = vec![0u32; n_out];
        for (i, _) in input.iter().enumerate().filter(|(_, &b)| b) {
            let row = i * n_out;
            for (j, sum) in sums.iter_mut().enumerate() {
                if self.mask[row + j] {
                    *sum += self.efficacy_at(row + j);
                }
            }
        }
        Ok(sums)
    }

    pub fn forward(&self, input: &[bool]) -> Result<Vec<bool>> {
        Ok(self
            .input_sums(input)?
            .into_iter()
            .map(|s| s as f64 > self.threshold)
            .collect())
    }

    /// Error-driven update; returns the number of update rounds applied.
    pub fn train_on_pattern<R: Rng + ?Sized>(
        &mut self,
        pattern: &Pattern,
        policy: &TransitionPolicy,
        rng: &mut R,
    ) -> Result<u32> {
        if pattern.target.len() != self.cfg.n_out {
            return Err(Error::Contract("target length != n_out".into()));
        }
        let n_out = self.cfg.n_out;
        let active: Vec<usize> = pattern.active_inputs().collect();
        let mut rounds = 0;
        for _ in 0..self.cfg.updates_per_pattern {
            let out = self.forward(&pattern.input)?;
            let errors: Vec<i8> = pattern
                .target
                .iter()
                .zip(&out)
                .map(|(&t, &y)| t as i8 - y as i8)
                .collect();
            if errors.iter().all(|&e| e == 0) {
                break;
            }
            rounds += 1;
            for &i in &active {
                let row = i * n_out;
                for (j, &err) in errors.iter().enumerate() {
                    let k = row + j;
                    if err == 0 || !self.mask[k] {
                        continue;
                    }
                    match &mut self.synapses {
                        SynapseMatrix::Meta(s) => {
                            let dir = UpdateDirection::from_error(err).expect("nonzero error");
                            s[k] = policy.apply(s[k], dir, rng);
                        }
                        SynapseMatrix::Gd(w) => w[k] = w[k].step(true, err),
                    }
                }
            }
        }
        Ok(rounds)
    }
}

/// [`BehavioralNetwork`] bundled with its transition policy and generator.
pub struct BehavioralLearner {
    pub net: BehavioralNetwork,
    policy: TransitionPolicy,
    rng: rand_chacha::ChaCha8Rng,
}

impl BehavioralLearner {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        let policy = cfg.policy();
        Ok(Self {
            net: BehavioralNetwork::new(cfg)?,
            rng: policy.rng(),
            policy,
        })
    }
}

impl PatternLearner for BehavioralLearner {
    fn n_out(&self) -> usize {
        self.net.cfg.n_out
    }

    fn infer(&self, input: &[bool]) -> Result<Vec<bool>> {
        self.net.forward(input)
    }

    fn learn(&mut self, pattern: &Pattern) -> Result<()> {
        self.net
            .train_on_pattern(pattern, &self.policy, &mut self.rng)
            .map(|_| ())
    }
}

/// Learning and mean accuracy after each presented pattern.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyTrace {
    pub learning: Vec<f64>,
    pub mean: Vec<f64>,
}

impl AccuracyTrace {
    pub fn len(&self) -> usize {
        self.learning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learning.is_empty()
    }

    pub fn final_learning(&self) -> Option<f64> {
        self.learning.last().copied()
    }

    pub fn final_mean(&self) -> Option<f64> {
        self.mean.last().copied()
    }

    /// First 1-based pattern index whose mean accuracy is below `threshold`.
    pub fn threshold_crossing(&self, threshold: f64) -> Option<usize> {
        self.mean.iter().position(|&m| m < threshold).map(|i| i + 1)
    }
}

/// Presents the patterns in order, scoring after every update.
pub fn run_protocol<L: PatternLearner>(
    learner: &mut L,
    patterns: &[Pattern],
) -> Result<AccuracyTrace> {
    let mut trace = AccuracyTrace {
        learning: Vec::with_capacity(patterns.len()),
        mean: Vec::with_capacity(patterns.len()),
    };
    for (t, pattern) in patterns.iter().enumerate() {
        learner.learn(pattern)?;
        trace.learning.push(learner.bitwise_accuracy(pattern)?);
        let mut total = 0.0;
        for seen in &patterns[..=t] {
            total += learner.bitwise_accuracy(seen)?;
        }
        trace.mean.push(total / (t + 1) as f64);
    }
    Ok(trace)
}

pub fn run_lifetime(cfg: &NetworkConfig, n_patterns: usize) -> Result<AccuracyTrace> {
    let patterns = pattern_set(cfg, n_patterns)?;
    let mut learner = BehavioralLearner::new(cfg)?;
    run_protocol(&mut learner, &patterns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(model: SynapseModel) -> NetworkConfig {
        NetworkConfig {
            n_in: 32,
            n_out: 16,
            model,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn patterns_have_exact_population() {
        let pats = generate_patterns(128, 0.25, 20, 3).unwrap();
        assert!(pats.iter().all(|p| p.iter().filter(|&&b| b).count() == 32));
        assert_eq!(pats, generate_patterns(128, 0.25, 20, 3).unwrap());
        assert_ne!(pats, generate_patterns(128, 0.25, 20, 4).unwrap());
        let full = generate_patterns(10, 0.97, 2, 0).unwrap();
        assert!(full.iter().all(|p| p.iter().all(|&b| b)));
    }

    #[test]
    fn patterns_reject_bad_activity() {
        assert!(matches!(
            generate_patterns(10, 0.01, 1, 0),
            Err(Error::Config { .. })
        ));
        assert!(generate_patterns(10, 1.5, 1, 0).is_err());
        assert!(generate_patterns(10, 0.0, 1, 0).is_err());
    }

    #[test]
    fn init_counts_and_plasticity() {
        let cfg = NetworkConfig::default();
        let net = BehavioralNetwork::new(&cfg).unwrap();
        assert_eq!(net.connected_count(), 4096);
        assert_eq!(net.threshold(), 4.0);
        let states = net.meta_states().unwrap();
        let connected: Vec<_> = (0..states.len()).filter(|&k| net.mask()[k]).collect();
        assert!(connected.iter().all(|&k| states[k].metalevel() == 0));
    }

    #[test]
    fn initial_high_fraction_is_binomial() {
        // 4096 fair coins: 3σ = 96.
        for seed in 0..10 {
            let net = BehavioralNetwork::new(&NetworkConfig::default().with_seed(seed)).unwrap();
            let states = net.meta_states().unwrap();
            let highs = (0..states.len())
                .filter(|&k| net.mask()[k] && states[k].efficacy() == Efficacy::High)
                .count() as f64;
            assert!((highs - 2048.0).abs() <= 96.0, "seed {seed}: {highs}");
        }
    }

    #[test]
    fn forward_threshold_is_strict() {
        let cfg = NetworkConfig::default();
        let mut net = BehavioralNetwork::new(&cfg).unwrap();
        let col = 7;
        let rows: Vec<usize> = (0..cfg.n_in)
            .filter(|&i| net.mask()[i * cfg.n_out + col])
            .collect();
        let mut input = vec![false; cfg.n_in];
        for &i in rows.iter().take(5) {
            net.set_state(i, col, MetaState::plastic(Efficacy::High, 3).unwrap())
                .unwrap();
            input[i] = true;
        }
        assert_eq!(net.input_sums(&input).unwrap()[col], 5);
        assert!(net.forward(&input).unwrap()[col]);
        net.set_state(rows[4], col, MetaState::plastic(Efficacy::Low, 3).unwrap())
            .unwrap();
        assert!(
            !net.forward(&input).unwrap()[col],
            "sum equal to θ must not fire"
        );
        assert!(net
            .forward(&vec![false; cfg.n_in])
            .unwrap()
            .iter()
            .all(|&b| !b));
        assert!(net.forward(&[true; 3]).is_err());
    }

    #[test]
    fn train_examples() {
        let cfg = small(SynapseModel::Multistate);
        let mut net = BehavioralNetwork::new(&cfg).unwrap();
        let policy = TransitionPolicy::default();
        let mut rng = policy.rng();
        // Matching target: nothing moves.
        let input = generate_patterns(cfg.n_in, cfg.activity, 1, 9)
            .unwrap()
            .remove(0);
        let target = net.forward(&input).unwrap();
        let before = net.clone();
        net.train_on_pattern(
            &Pattern {
                input: input.clone(),
                target,
            },
            &policy,
            &mut rng,
        )
        .unwrap();
        assert_eq!(net.synapses(), before.synapses());

        // Positive error on a silent column potentiates (Low, 0) to (High, 0).
        let mut target = net.forward(&input).unwrap();
        let col = (0..cfg.n_out).find(|&j| !target[j]).unwrap();
        target[col] = true;
        let row = (0..cfg.n_in)
            .find(|&i| input[i] && net.mask()[i * cfg.n_out + col])
            .expect("an active connected row");
        let idle = (0..cfg.n_in)
            .find(|&i| !input[i] && net.mask()[i * cfg.n_out + col])
            .expect("an inactive connected row");
        net.set_state(row, col, MetaState::plastic(Efficacy::Low, 3).unwrap())
            .unwrap();
        let idle_before = net.meta_states().unwrap()[idle * cfg.n_out + col];
        net.train_on_pattern(&Pattern { input, target }, &policy, &mut rng)
            .unwrap();
        let s = net.meta_states().unwrap();
        assert_eq!(
            s[row * cfg.n_out + col],
            MetaState::plastic(Efficacy::High, 3).unwrap()
        );
        assert_eq!(s[idle * cfg.n_out + col], idle_before);
    }

    #[test]
    fn single_pattern_mean_equals_learning() {
        let t = run_lifetime(&small(SynapseModel::Multistate), 1).unwrap();
        assert_eq!(t.mean, t.learning);
    }

    #[test]
    fn one_level_multistate_is_binary() {
        for seed in 0..3 {
            let base = small(SynapseModel::Multistate).with_seed(seed);
            let multi = NetworkConfig {
                n_levels: 1,
                ..base
            };
            let binary = base.with_model(SynapseModel::Binary);
            assert_eq!(
                run_lifetime(&multi, 30).unwrap(),
                run_lifetime(&binary, 30).unwrap()
            );
        }
    }

    #[test]
    fn gradient_model_runs() {
        let t = run_lifetime(&small(SynapseModel::GradientDescent), 20).unwrap();
        assert_eq!(t.len(), 20);
        assert!(t
            .learning
            .iter()
            .chain(&t.mean)
            .all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn efficacy_flips_only_from_plastic_states() {
        let cfg = NetworkConfig {
            n_in: 64,
            n_out: 64,
            ..NetworkConfig::default()
        };
        let patterns = pattern_set(&cfg, 40).unwrap();
        let mut learner = BehavioralLearner::new(&cfg).unwrap();
        let mask = learner.net.mask().to_vec();
        for p in &patterns {
            let before = learner.net.meta_states().unwrap().to_vec();
            learner.learn(p).unwrap();
            let after = learner.net.meta_states().unwrap();
            assert_eq!(learner.net.mask(), &mask[..]);
            for (k, (b, a)) in before.iter().zip(after).enumerate() {
                if !mask[k] {
                    assert_eq!(b, a);
                }
                if a.efficacy() != b.efficacy() {
                    assert_eq!(b.metalevel(), 0);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn lifetime_is_deterministic(seed in 0u64..1000, multi in any::<bool>()) {
            let model = if multi { SynapseModel::Multistate } else { SynapseModel::Binary };
            let cfg = small(model).with_seed(seed);
            prop_assert_eq!(run_lifetime(&cfg, 10).unwrap(), run_lifetime(&cfg, 10).unwrap());
        }
    }
}
