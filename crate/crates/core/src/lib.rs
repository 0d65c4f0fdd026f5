//! Simulator for networks of multistate metaplastic synapses, from the ideal
//! state machine down to a memristor crossbar with programming noise, leaky
//! pruned crosspoints and comparator neurons.

pub mod cli;
pub mod config;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod experiment;
pub mod network;
pub mod output;
pub mod rng;
pub mod synapse;

pub use crossbar::{ComparatorConfig, ComparatorMode, ComparatorSetup, Crossbar};
pub use device::{DeviceParams, DeviceState, MetastateTable, NoiseModel, PulseSpec};
pub use error::{Error, Result};
pub use network::{AccuracyTrace, BehavioralNetwork, NetworkConfig, Pattern, SynapseModel};
pub use synapse::{Efficacy, GdSynapse, MetaState, TransitionPolicy, UpdateDirection};
