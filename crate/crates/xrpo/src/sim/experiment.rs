//! Replicated experiments with cross-replication aggregation.

use crate::config::RunConfig;
use crate::error::Result;
use crate::icl::{Corpus, EmbedBackend, Embedder, LocalHashEmbedder, RemoteEmbedder};
use crate::sim::env::SimPrompt;
use crate::sim::episode::{run_episode, LoggedRollout};
use crate::sim::metrics::{EpisodeMetrics, ExperimentSummary, ReplicationMetrics};

/// Aggregated output of `run_experiment`.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub replications: Vec<ReplicationMetrics>,
    /// Every rollout of every replication, in generation order.
    pub rollouts: Vec<LoggedRollout>,
    pub phase_budgets: Vec<u32>,
}

/// Run the configured experiment: materialize the population, then run
/// `replications` independent repetitions of `episodes` episodes each.
///
/// Each replication starts from the same population and an empty corpus;
/// the corpus and (under a positive toy learning rate) the success
/// probabilities evolve across the episodes of a replication.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let population = cfg.population.materialize(cfg.seed)?;
    match cfg.icl.backend {
        EmbedBackend::Local => {
            let embedder = LocalHashEmbedder::new(cfg.icl.embedding_dim)?;
            run_experiment_with(cfg, &population, &embedder)
        }
        EmbedBackend::Remote => {
            let embedder = RemoteEmbedder::from_env(cfg.icl.embedding_dim, ".xrpo_embed_cache")?;
            run_experiment_with(cfg, &population, &embedder)
        }
    }
}

/// As [`run_experiment`], but with an explicit population and embedder.
pub fn run_experiment_with(
    cfg: &RunConfig,
    population: &[SimPrompt],
    embedder: &dyn Embedder,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let phase_budgets = cfg.phase_budgets()?;
    let mut all_rollouts: Vec<LoggedRollout> = Vec::new();
    let mut reps: Vec<ReplicationMetrics> = Vec::new();

    for rep in 0..cfg.replications {
        let mut prompts: Vec<SimPrompt> = population.to_vec();
        let mut corpus = Corpus::new();
        let mut episodes: Vec<EpisodeMetrics> = Vec::new();
        let mut cumulative: u64 = 0;
        let mut to_error: Option<u64> = None;
        let mut to_success: Option<u64> = None;

        for episode in 0..cfg.episodes {
            let out = run_episode(&mut prompts, cfg, &mut corpus, embedder, rep, episode)?;
            cumulative += out.metrics.total_rollouts as u64;
            if let (Some(eps), None) = (cfg.error_target, to_error) {
                if out
                    .metrics
                    .rounds
                    .last()
                    .is_some_and(|s| s.mean_abs_error < eps)
                {
                    to_error = Some(cumulative);
                }
            }
            if let (Some(target), None) = (cfg.success_target, to_success) {
                if out.metrics.mean_p_success >= target {
                    to_success = Some(cumulative);
                }
            }
            episodes.push(out.metrics.clone());
            all_rollouts.extend(out.rollouts);
        }

        reps.push(ReplicationMetrics {
            replication: rep,
            episodes,
            total_rollouts: cumulative,
            rollouts_to_error_target: to_error,
            rollouts_to_success_target: to_success,
        });
    }

    let summary = ExperimentSummary::from_replications(
        cfg.policy.name().to_string(),
        cfg.episodes,
        &reps,
    );
    Ok(ExperimentOutput {
        summary,
        replications: reps,
        rollouts: all_rollouts,
        phase_budgets,
    })
}
