//! Run metrics and cross-replication aggregation.

use serde::{Deserialize, Serialize};

/// Mean and sample standard deviation over `n` observations.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: u32,
}

pub fn mean_std(xs: &[f64]) -> MeanStd {
    let n = xs.len();
    if n == 0 {
        return MeanStd::default();
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    };
    MeanStd {
        mean,
        std,
        n: n as u32,
    }
}

/// State of the batch after one phase of an episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundSnapshot {
    /// 0 for the base phase, then 1..=n_rounds.
    pub round: u32,
    pub cumulative_rollouts: u32,
    /// Mean confidence half-width of the per-prompt reward estimates.
    pub mean_half_width: f64,
    /// Mean absolute error of the reward estimate vs the true p_success.
    pub mean_abs_error: f64,
    /// Fraction of prompts whose rewards so far are all zero.
    pub frac_groups_all_zero: f64,
    /// Fraction of prompts whose rewards so far are all at full reward.
    pub frac_groups_all_one: f64,
}

/// Everything measured in one episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: u32,
    pub rounds: Vec<RoundSnapshot>,
    pub total_rollouts: u32,
    /// Prompts with no success after the base phase.
    pub zero_after_base: u32,
    /// Of those, prompts that ended the episode with a success.
    pub flipped: u32,
    /// Rollouts generated from seeded prompts.
    pub seeded_rollouts: u32,
    /// Sum of sharpening bonuses across all records.
    pub bonus_mass: f64,
    /// Population mean success probability after the learning update.
    pub mean_p_success: f64,
}

impl EpisodeMetrics {
    /// Fraction of base-phase-zero prompts that flipped to a success.
    pub fn flip_rate(&self) -> Option<f64> {
        if self.zero_after_base == 0 {
            None
        } else {
            Some(self.flipped as f64 / self.zero_after_base as f64)
        }
    }
}

/// Per-replication results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub replication: u32,
    pub episodes: Vec<EpisodeMetrics>,
    pub total_rollouts: u64,
    /// Cumulative rollouts when mean absolute estimation error first fell
    /// below the configured error target.
    pub rollouts_to_error_target: Option<u64>,
    /// Cumulative rollouts when mean p_success first reached the
    /// configured success target under the toy learning rule.
    pub rollouts_to_success_target: Option<u64>,
}

impl ReplicationMetrics {
    /// Pooled flip rate across episodes (flips / zero-after-base counts).
    pub fn pooled_flip_rate(&self) -> Option<f64> {
        let zeros: u32 = self.episodes.iter().map(|e| e.zero_after_base).sum();
        let flips: u32 = self.episodes.iter().map(|e| e.flipped).sum();
        if zeros == 0 {
            None
        } else {
            Some(flips as f64 / zeros as f64)
        }
    }

    pub fn total_bonus_mass(&self) -> f64 {
        self.episodes.iter().map(|e| e.bonus_mass).sum()
    }

    pub fn final_round(&self) -> Option<&RoundSnapshot> {
        self.episodes.last().and_then(|e| e.rounds.last())
    }
}

/// Threshold statistics across replications. Replications that never
/// reach the target count at their full rollout spend (the cap).
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub reached: u32,
    pub total: u32,
    pub mean_rollouts_capped: f64,
}

pub(crate) fn threshold_summary(values: &[Option<u64>], caps: &[u64]) -> ThresholdSummary {
    let total = values.len() as u32;
    let reached = values.iter().filter(|v| v.is_some()).count() as u32;
    let capped: Vec<f64> = values
        .iter()
        .zip(caps)
        .map(|(v, cap)| v.unwrap_or(*cap) as f64)
        .collect();
    ThresholdSummary {
        reached,
        total,
        mean_rollouts_capped: mean_std(&capped).mean,
    }
}

/// Cross-replication aggregate for one policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub policy: String,
    pub replications: u32,
    pub episodes_per_replication: u32,
    /// Mean confidence half-width at the final round of the final episode.
    pub final_mean_half_width: MeanStd,
    /// Mean absolute estimation error at the final round.
    pub final_mean_abs_error: MeanStd,
    pub final_frac_groups_all_zero: MeanStd,
    pub final_frac_groups_all_one: MeanStd,
    /// Pooled zero-reward flip rate, over replications that had zeros.
    pub flip_rate: MeanStd,
    /// Total sharpening bonus mass per replication.
    pub bonus_mass: MeanStd,
    pub rollouts_to_error_target: ThresholdSummary,
    pub rollouts_to_success_target: ThresholdSummary,
}

impl ExperimentSummary {
    pub fn from_replications(
        policy: String,
        episodes_per_replication: u32,
        reps: &[ReplicationMetrics],
    ) -> Self {
        let finals: Vec<&RoundSnapshot> = reps.iter().filter_map(|r| r.final_round()).collect();
        let collect = |f: &dyn Fn(&RoundSnapshot) -> f64| -> Vec<f64> {
            finals.iter().map(|s| f(s)).collect()
        };
        let flip_rates: Vec<f64> = reps.iter().filter_map(|r| r.pooled_flip_rate()).collect();
        let bonus: Vec<f64> = reps.iter().map(|r| r.total_bonus_mass()).collect();
        let caps: Vec<u64> = reps.iter().map(|r| r.total_rollouts).collect();
        let err_t: Vec<Option<u64>> = reps.iter().map(|r| r.rollouts_to_error_target).collect();
        let suc_t: Vec<Option<u64>> = reps.iter().map(|r| r.rollouts_to_success_target).collect();
        ExperimentSummary {
            policy,
            replications: reps.len() as u32,
            episodes_per_replication,
            final_mean_half_width: mean_std(&collect(&|s| s.mean_half_width)),
            final_mean_abs_error: mean_std(&collect(&|s| s.mean_abs_error)),
            final_frac_groups_all_zero: mean_std(&collect(&|s| s.frac_groups_all_zero)),
            final_frac_groups_all_one: mean_std(&collect(&|s| s.frac_groups_all_one)),
            flip_rate: mean_std(&flip_rates),
            bonus_mass: mean_std(&bonus),
            rollouts_to_error_target: threshold_summary(&err_t, &caps),
            rollouts_to_success_target: threshold_summary(&suc_t, &caps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basics() {
        let m = mean_std(&[1.0, 2.0, 3.0]);
        assert!((m.mean - 2.0).abs() < 1e-15);
        assert!((m.std - 1.0).abs() < 1e-12);
        assert_eq!(m.n, 3);
        assert_eq!(mean_std(&[]).n, 0);
        assert_eq!(mean_std(&[5.0]).std, 0.0);
    }

    #[test]
    fn threshold_summary_caps_unreached() {
        let s = threshold_summary(&[Some(10), None], &[128, 128]);
        assert_eq!(s.reached, 1);
        assert_eq!(s.total, 2);
        assert!((s.mean_rollouts_capped - 69.0).abs() < 1e-12);
    }
}
