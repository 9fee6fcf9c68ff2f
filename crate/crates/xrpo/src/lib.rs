//! Explore-exploit machinery for reinforcement-learning rollout budgets.
//!
//! The crate plans per-prompt rollout allocations from confidence
//! statistics (a hand-rolled Student-t kernel), standardizes rewards into
//! group advantages with novelty-gated sharpening, seeds hard prompts
//! with retrieved exemplars from a verified corpus, and ships a Monte
//! Carlo simulator that exercises the full loop on synthetic Bernoulli
//! prompts, no model required.
//!
//! Modules:
//! - [`stats`]: t-quantile, confidence half-width, uncertainty reduction.
//! - [`allocator`]: priorities and integer budget apportionment.
//! - [`advantage`]: group advantages, sequence scores, sharpening.
//! - [`icl`]: embeddings, exemplar corpus, seeded prompt rendering.
//! - [`sim`]: synthetic environment, episodes, replicated experiments.
//! - [`config`]: the run configuration consumed by the simulator and CLI.

pub mod advantage;
pub mod allocator;
pub mod config;
pub mod error;
pub mod icl;
pub mod rng;
pub mod sim;
pub mod stats;

pub use advantage::{
    group_advantage, novelty, seq_score, sharpen, sharpen_group, AdvantageRecord, Rollout,
    SharpenParams,
};
pub use allocator::{
    allocate_round, exploration_bonus, plan_phases, priority, uniform_plan, AllocationPlan,
    AllocationStrategy, AllocatorParams, PromptId, PromptState, PromptSummary,
};
pub use config::{Policy, RunConfig};
pub use error::{Result, XrpoError};
pub use icl::{
    build_icl_prompt, cosine, parse_icl_prompt, update_corpus, Corpus, CorpusEntry, EmbedBackend,
    Embedder, IclConfig, LocalHashEmbedder, ParsedIclPrompt, RemoteEmbedder, RolloutWithText,
    ENV_EMBED_TOKEN, ENV_EMBED_URL, TRUNCATION_MARKER,
};
pub use sim::{
    mean_std, run_episode, run_experiment, run_experiment_with, sample_rollout, EpisodeMetrics,
    EpisodeOutcome, ExperimentOutput, ExperimentSummary, LengthLaw, LoggedRollout, MeanStd,
    PopulationSpec, ReplicationMetrics, RoundSnapshot, SimPrompt, ThresholdSummary,
};
pub use stats::{half_width, t_quantile, uncertainty_reduction, RewardSample};
