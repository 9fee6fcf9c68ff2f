//! One simulated training episode.
//!
//! The loop mirrors the planner's contract: a uniform base phase, then
//! planned reallocation rounds in which prompts without a prior success
//! are seeded with retrieved exemplars, and finally advantage sharpening
//! and a corpus update from the episode's verified solutions.

use serde::{Deserialize, Serialize};

use crate::advantage::{sharpen_group, AdvantageRecord, Rollout, SharpenParams};
use crate::allocator::{allocate_round, uniform_plan, AllocationPlan, PromptState, PromptSummary};
use crate::config::RunConfig;
use crate::error::Result;
use crate::icl::{build_icl_prompt, update_corpus, Corpus, Embedder, RolloutWithText};
use crate::rng;
use crate::sim::env::{sample_rollout, SimPrompt};
use crate::sim::metrics::{EpisodeMetrics, RoundSnapshot};
use crate::stats::half_width;

const ROLLOUT_STREAM_TAG: u64 = 0x726f_6c6c;

/// One rollout as it appears in the run log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoggedRollout {
    pub replication: u32,
    pub episode: u32,
    #[serde(flatten)]
    pub rollout: Rollout,
    /// Planner priority of the prompt when this rollout was allocated;
    /// absent for the base phase and for uniform allocation.
    pub priority: Option<f64>,
}

/// Everything produced by one episode.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub rollouts: Vec<LoggedRollout>,
    pub records: Vec<AdvantageRecord>,
    pub plans: Vec<AllocationPlan>,
    pub metrics: EpisodeMetrics,
    /// Ids of corpus entries added by this episode.
    pub corpus_added: Vec<String>,
}

/// Run one episode over `prompts`, mutating them in place when the toy
/// learning rate is positive. The corpus persists across episodes.
pub fn run_episode(
    prompts: &mut [SimPrompt],
    cfg: &RunConfig,
    corpus: &mut Corpus,
    embedder: &dyn Embedder,
    replication: u32,
    episode: u32,
) -> Result<EpisodeOutcome> {
    let phases = cfg.phase_budgets()?;
    let n = prompts.len();
    let mut states: Vec<PromptState> =
        prompts.iter().map(|p| PromptState::new(p.prompt_id.clone())).collect();
    let mut per_prompt: Vec<Vec<Rollout>> = vec![Vec::new(); n];
    let mut log: Vec<LoggedRollout> = Vec::new();
    let mut plans: Vec<AllocationPlan> = Vec::new();
    let mut snapshots: Vec<RoundSnapshot> = Vec::new();
    let mut generated: u32 = 0;

    let record =
        |qi: usize,
         rollout: Rollout,
         priority: Option<f64>,
         states: &mut Vec<PromptState>,
         per_prompt: &mut Vec<Vec<Rollout>>,
         log: &mut Vec<LoggedRollout>,
         generated: &mut u32| {
            states[qi].record(
                rollout.reward,
                rollout.reward >= cfg.sharpen.full_reward,
                rollout.complete,
            );
            per_prompt[qi].push(rollout.clone());
            log.push(LoggedRollout {
                replication,
                episode,
                rollout,
                priority,
            });
            *generated += 1;
        };

    // Base phase: every prompt gets n_base plain rollouts.
    for (qi, prompt) in prompts.iter().enumerate() {
        for slot in 0..cfg.allocator.n_base {
            let mut r = rng::stream(
                cfg.seed,
                &[
                    ROLLOUT_STREAM_TAG,
                    replication as u64,
                    episode as u64,
                    qi as u64,
                    0,
                    slot as u64,
                ],
            );
            let rollout = sample_rollout(prompt, false, 0, &mut r);
            record(qi, rollout, None, &mut states, &mut per_prompt, &mut log, &mut generated);
        }
    }
    snapshots.push(snapshot(0, generated, prompts, &states, cfg)?);
    let zero_after_base: Vec<bool> = states.iter().map(|s| !s.has_success).collect();

    // Planned reallocation rounds.
    for round in 1..=cfg.allocator.n_rounds {
        let budget = phases[round as usize];
        let summaries: Vec<PromptSummary> = states.iter().map(|s| s.summary()).collect();
        let plan = if cfg.policy.uses_priority_allocation() {
            allocate_round(&summaries, budget, generated as u64, &cfg.allocator, round)?
        } else {
            uniform_plan(&summaries, budget, round)?
        };
        for (qi, prompt) in prompts.iter().enumerate() {
            let count = plan.counts[&prompt.prompt_id];
            if count == 0 {
                continue;
            }
            let seeded = cfg.policy.uses_icl() && !states[qi].has_success;
            if seeded {
                // Build the seeded prompt exactly as a driver would; the
                // boost in sample_rollout models its effect.
                let hits = corpus.retrieve(
                    &prompt.problem(),
                    Some(&prompt.prompt_id),
                    cfg.icl.k,
                    embedder,
                )?;
                let _rendered = build_icl_prompt(&prompt.problem(), &hits, &cfg.icl);
            }
            let priority = cfg
                .policy
                .uses_priority_allocation()
                .then(|| plan.priorities[&prompt.prompt_id]);
            for slot in 0..count {
                let mut r = rng::stream(
                    cfg.seed,
                    &[
                        ROLLOUT_STREAM_TAG,
                        replication as u64,
                        episode as u64,
                        qi as u64,
                        round as u64,
                        slot as u64,
                    ],
                );
                let rollout = sample_rollout(prompt, seeded, round, &mut r);
                record(qi, rollout, priority, &mut states, &mut per_prompt, &mut log, &mut generated);
            }
        }
        plans.push(plan);
        snapshots.push(snapshot(round, generated, prompts, &states, cfg)?);
    }

    // Score groups. Ablation arms without sharpening zero the bonus by
    // running the same path with lambda_novelty = 0.
    let sharpen_params = if cfg.policy.uses_sharpening() {
        cfg.sharpen.clone()
    } else {
        SharpenParams {
            lambda_novelty: 0.0,
            ..cfg.sharpen.clone()
        }
    };
    let mut records: Vec<AdvantageRecord> = Vec::new();
    for group in &per_prompt {
        records.extend(sharpen_group(group, &sharpen_params)?);
    }

    // Fold this episode's verified solutions into the corpus.
    let batch: Vec<RolloutWithText> = per_prompt
        .iter()
        .enumerate()
        .flat_map(|(qi, group)| {
            let prompt = &prompts[qi];
            group.iter().map(move |r| RolloutWithText {
                rollout: r.clone(),
                problem_text: prompt.problem(),
                solution_text: format!(
                    "verified solution for {} (episode {episode}, phase {}, length {})",
                    prompt.prompt_id, r.phase, r.length
                ),
            })
        })
        .collect();
    let corpus_added = update_corpus(
        corpus,
        &batch,
        episode as u64,
        &cfg.icl,
        cfg.sharpen.full_reward,
        embedder,
    )?;

    // Toy learning: move p_success by the mean positive sharpened
    // advantage of the prompt's rollouts.
    if cfg.learning_rate_toy > 0.0 {
        let mut offset = 0usize;
        for (qi, group) in per_prompt.iter().enumerate() {
            let recs = &records[offset..offset + group.len()];
            offset += group.len();
            let mean_pos = recs.iter().map(|r| r.sharpened.max(0.0)).sum::<f64>()
                / group.len().max(1) as f64;
            let p = &mut prompts[qi].p_success;
            *p = (*p + cfg.learning_rate_toy * mean_pos).clamp(0.0, 1.0);
        }
    }

    let flipped = states
        .iter()
        .zip(&zero_after_base)
        .filter(|(s, z)| **z && s.has_success)
        .count() as u32;
    let metrics = EpisodeMetrics {
        episode,
        rounds: snapshots,
        total_rollouts: generated,
        zero_after_base: zero_after_base.iter().filter(|z| **z).count() as u32,
        flipped,
        seeded_rollouts: log.iter().filter(|l| l.rollout.is_icl).count() as u32,
        bonus_mass: records.iter().map(|r| r.bonus).sum(),
        mean_p_success: prompts.iter().map(|p| p.p_success).sum::<f64>() / n as f64,
    };

    Ok(EpisodeOutcome {
        rollouts: log,
        records,
        plans,
        metrics,
        corpus_added,
    })
}

/// Batch-level state after a phase. The half-width mean covers prompts
/// with at least two rollouts (always all of them once the base phase
/// has n_base >= 2).
fn snapshot(
    round: u32,
    cumulative: u32,
    prompts: &[SimPrompt],
    states: &[PromptState],
    cfg: &RunConfig,
) -> Result<RoundSnapshot> {
    let n = states.len() as f64;
    let mut hw_sum = 0.0;
    let mut hw_n = 0u32;
    let mut err_sum = 0.0;
    let mut all_zero = 0u32;
    let mut all_one = 0u32;
    for (state, prompt) in states.iter().zip(prompts) {
        let s = &state.rewards;
        if s.n() >= 2 {
            hw_sum += half_width(s.std(), s.n(), cfg.allocator.alpha)?;
            hw_n += 1;
        }
        err_sum += (s.mean() - prompt.p_success).abs();
        let full = cfg.sharpen.full_reward;
        if s.values().iter().all(|r| *r < full) {
            all_zero += 1;
        }
        if s.values().iter().all(|r| *r >= full) {
            all_one += 1;
        }
    }
    Ok(RoundSnapshot {
        round,
        cumulative_rollouts: cumulative,
        mean_half_width: if hw_n > 0 { hw_sum / hw_n as f64 } else { 0.0 },
        mean_abs_error: err_sum / n,
        frac_groups_all_zero: all_zero as f64 / n,
        frac_groups_all_one: all_one as f64 / n,
    })
}
