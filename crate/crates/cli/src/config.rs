//! Command definitions. Every command is both a clap subcommand and a
//! serializable value, so a run can be replayed from its echoed config.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use noisy_qst::gates::Interaction;
use noisy_qst::noise::Channel;

/// Everything that determines the output of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate Q and Q_N of a quorum.
    Quality(QualityArgs),
    /// Maximize Q_N for a noise model.
    Optimize(OptimizeArgs),
    /// Reconstruction infidelity over a grid of noise strengths.
    Sweep(SweepArgs),
    /// Average fidelity of a noisy CNOT.
    GateFidelity(GateFidelityArgs),
    /// Monte-Carlo estimate of the log-probability coefficient.
    Coeff(CoeffArgs),
    /// Closed-form optimum of the single-qubit scheme.
    SingleQubit(SingleQubitArgs),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityArgs {
    /// Quorum JSON file.
    #[arg(long, conflicts_with = "mub", required_unless_present = "mub")]
    pub quorum: Option<PathBuf>,
    /// Use the built-in MUB quorum for this interaction.
    #[arg(long)]
    pub mub: Option<Interaction>,
    #[arg(long, default_value = "depolarizing")]
    pub channel: Channel,
    /// Noise strength (ζ or r).
    #[arg(long = "zeta", short = 'r', default_value_t = 0.0)]
    pub strength: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    MubSeeded,
    Multistart,
    Annealing,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseArgs {
    #[arg(long, default_value = "depolarizing")]
    pub channel: Channel,
    #[arg(long, default_value = "heisenberg")]
    pub interaction: Interaction,
    /// Noise strength (ζ or r).
    #[arg(long = "zeta", short = 'r', default_value_t = 0.0)]
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_enum, default_value = "mub-seeded")]
    pub strategy: StrategyKind,
    /// Starts (multistart) or runs (annealing).
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    /// Powell iteration cap per start.
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Mub,
    Pauli,
    Optimized,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, default_value = "depolarizing")]
    pub channel: Channel,
    #[arg(long, default_value = "heisenberg")]
    pub interaction: Interaction,
    /// Comma-separated noise strengths.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1")]
    pub grid: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mub,pauli,optimized")]
    pub schemes: Vec<SchemeKind>,
    /// Total shots per state, split evenly over the measurements.
    #[arg(long, default_value_t = 23040)]
    pub shots: u64,
    #[arg(long, default_value_t = 1000)]
    pub states: usize,
    /// Reconstruct with the ideal instead of the noisy effects.
    #[arg(long)]
    pub noise_ignorant: bool,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateFidelityArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffArgs {
    /// Hilbert-space dimension (2 or 4).
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleQubitArgs {
    /// Rotation-noise strength.
    #[arg(short = 'r', long = "r", default_value_t = 0.0)]
    pub r: f64,
}
