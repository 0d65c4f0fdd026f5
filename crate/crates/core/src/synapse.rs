//! Discrete metaplastic synapse state machine.
//!
//! A multistate synapse is a serial chain of metastates. Reading the chain
//! from the deepest depressed state to the deepest potentiated one:
//!
//! ```text
//! Low/η=n-1 … Low/η=1  Low/η=0 | High/η=0  High/η=1 … High/η=n-1
//! ```
//!
//! Potentiation moves one step to the right, depression one step to the left,
//! and both saturate at the ends. Efficacy only flips across the middle edge,
//! i.e. from metalevel 0. With `n_levels == 1` the chain is the plain binary
//! synapse.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Binary synaptic efficacy seen by the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Efficacy {
    Low = 0,
    High = 1,
}

impl Efficacy {
    #[inline]
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Efficacy::High
        } else {
            Efficacy::Low
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Efficacy::Low => "low",
            Efficacy::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateDirection {
    Potentiate,
    Depress,
}

impl UpdateDirection {
    /// Direction implied by a nonzero output error.
    pub fn from_error(error: i8) -> Option<Self> {
        match error.signum() {
            1 => Some(UpdateDirection::Potentiate),
            -1 => Some(UpdateDirection::Depress),
            _ => None,
        }
    }
}

/// One state of the serial metastate chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetaState {
    efficacy: Efficacy,
    metalevel: u16,
    n_levels: u16,
}

impl MetaState {
    pub fn new(efficacy: Efficacy, metalevel: u16, n_levels: u16) -> Result<Self> {
        if n_levels == 0 {
            return Err(Error::Contract("n_levels must be at least 1".into()));
        }
        if metalevel >= n_levels {
            return Err(Error::Contract(format!(
                "metalevel {metalevel} out of range for {n_levels} levels"
            )));
        }
        Ok(Self {
            efficacy,
            metalevel,
            n_levels,
        })
    }

    /// Most plastic state (metalevel 0) with the given efficacy.
    pub fn plastic(efficacy: Efficacy, n_levels: u16) -> Result<Self> {
        Self::new(efficacy, 0, n_levels)
    }

    pub fn efficacy(&self) -> Efficacy {
        self.efficacy
    }

    pub fn metalevel(&self) -> u16 {
        self.metalevel
    }

    pub fn n_levels(&self) -> u16 {
        self.n_levels
    }

    /// Contribution to an ideal forward sum: 1 for High, 0 for Low.
    #[inline]
    pub fn efficacy_value(&self) -> u8 {
        self.efficacy.value()
    }

    /// Number of distinct forgetting timescales of the chain, `2n - 1`.
    pub fn forgetting_timescales(&self) -> u32 {
        2 * self.n_levels as u32 - 1
    }

    /// Position along the chain, 0 = Low/η=n-1, 2n-1 = High/η=n-1.
    pub fn chain_index(&self) -> usize {
        let n = self.n_levels as usize;
        match self.efficacy {
            Efficacy::Low => n - 1 - self.metalevel as usize,
            Efficacy::High => n + self.metalevel as usize,
        }
    }

    /// Inverse of [`MetaState::chain_index`].
    pub fn from_chain_index(index: usize, n_levels: u16) -> Result<Self> {
        let n = n_levels as usize;
        if n == 0 || index >= 2 * n {
            return Err(Error::Contract(format!(
                "chain index {index} out of range for {n_levels} levels"
            )));
        }
        if index < n {
            Self::new(Efficacy::Low, (n - 1 - index) as u16, n_levels)
        } else {
            Self::new(Efficacy::High, (index - n) as u16, n_levels)
        }
    }

    /// All `2n` states in chain order.
    pub fn chain(n_levels: u16) -> Result<Vec<MetaState>> {
        (0..2 * n_levels as usize)
            .map(|i| Self::from_chain_index(i, n_levels))
            .collect()
    }

    /// Deterministic transition, i.e. the state reached when the update fires.
    pub fn transition(self, dir: UpdateDirection) -> MetaState {
        let deepest = self.n_levels - 1;
        let (efficacy, metalevel) = match (dir, self.efficacy, self.metalevel) {
            (UpdateDirection::Potentiate, Efficacy::Low, 0) => (Efficacy::High, 0),
            (UpdateDirection::Potentiate, Efficacy::Low, eta) => (Efficacy::Low, eta - 1),
            (UpdateDirection::Potentiate, Efficacy::High, eta) => {
                (Efficacy::High, (eta + 1).min(deepest))
            }
            (UpdateDirection::Depress, Efficacy::High, 0) => (Efficacy::Low, 0),
            (UpdateDirection::Depress, Efficacy::High, eta) => (Efficacy::High, eta - 1),
            (UpdateDirection::Depress, Efficacy::Low, eta) => {
                (Efficacy::Low, (eta + 1).min(deepest))
            }
        };
        MetaState {
            efficacy,
            metalevel,
            n_levels: self.n_levels,
        }
    }

    /// Checked variant for states built outside [`MetaState::new`].
    pub fn try_transition(self, dir: UpdateDirection) -> Result<MetaState> {
        MetaState::new(self.efficacy, self.metalevel, self.n_levels)?;
        Ok(self.transition(dir))
    }
}

/// Returns 1 for High and 0 for Low, independent of the metalevel.
pub fn efficacy_of(state: &MetaState) -> u8 {
    state.efficacy_value()
}

/// Probability gate applied to every transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionPolicy {
    pub transition_probability: f64,
    pub rng_seed: u64,
}

impl Default for TransitionPolicy {
    fn default() -> Self {
        Self {
            transition_probability: 1.0,
            rng_seed: 0,
        }
    }
}

impl TransitionPolicy {
    pub fn new(transition_probability: f64, rng_seed: u64) -> Result<Self> {
        let policy = Self {
            transition_probability,
            rng_seed,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.transition_probability;
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Config {
                key: "transition_probability".into(),
                message: format!("{q} not in (0, 1]"),
            });
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.transition_probability >= 1.0
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.rng_seed, Stream::Transitions)
    }

    /// Bernoulli(q) draw. No randomness is consumed when q = 1.
    pub fn fires<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.is_deterministic() || rng.random::<f64>() < self.transition_probability
    }

    pub fn apply<R: Rng + ?Sized>(
        &self,
        state: MetaState,
        dir: UpdateDirection,
        rng: &mut R,
    ) -> MetaState {
        if self.fires(rng) {
            state.transition(dir)
        } else {
            state
        }
    }
}

/// Stochastic transition with the policy's own seeded generator.
pub fn transition(
    state: MetaState,
    dir: UpdateDirection,
    policy: &TransitionPolicy,
) -> Result<MetaState> {
    policy.validate()?;
    state.try_transition(dir)?;
    let mut rng = policy.rng();
    Ok(policy.apply(state, dir, &mut rng))
}

/// Gradient-descent baseline synapse with a real weight thresholded for use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdSynapse {
    pub weight: f64,
    pub binarize_threshold: f64,
    pub learning_rate: f64,
}

impl GdSynapse {
    pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
    pub const DEFAULT_THRESHOLD: f64 = 0.5;

    pub fn new(weight: f64) -> Self {
        Self {
            weight: weight.clamp(0.0, 1.0),
            binarize_threshold: Self::DEFAULT_THRESHOLD,
            learning_rate: Self::DEFAULT_LEARNING_RATE,
        }
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    /// Additive update, only for active presynaptic input.
    pub fn step(self, presyn_active: bool, error: i8) -> Self {
        let delta = if presyn_active {
            self.learning_rate * f64::from(error.signum())
        } else {
            0.0
        };
        Self {
            weight: (self.weight + delta).clamp(0.0, 1.0),
            ..self
        }
    }

    pub fn efficacy(&self) -> Efficacy {
        Efficacy::from_bit(self.weight > self.binarize_threshold)
    }
}

pub fn gd_step(s: GdSynapse, presyn_active: bool, error: i8) -> GdSynapse {
    s.step(presyn_active, error)
}
