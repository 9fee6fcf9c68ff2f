//! Monte Carlo simulator for the explore-exploit rollout loop.

mod env;
mod episode;
mod experiment;
mod metrics;

pub use env::{sample_rollout, LengthLaw, PopulationSpec, SimPrompt};
pub use episode::{run_episode, EpisodeOutcome, LoggedRollout};
pub use experiment::{run_experiment, run_experiment_with, ExperimentOutput};
pub use metrics::{
    mean_std, EpisodeMetrics, ExperimentSummary, MeanStd, ReplicationMetrics, RoundSnapshot,
    ThresholdSummary,
};
