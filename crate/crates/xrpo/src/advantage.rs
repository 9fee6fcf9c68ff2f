//! Group-relative advantages with novelty-gated sharpening.
//!
//! Advantages standardize rewards within a prompt group (population
//! standard deviation). Each rollout also gets a length-normalized
//! sequence score and a novelty weight relative to its group; fully
//! rewarded, novel rollouts earn a clipped positive advantage bonus.

use serde::{Deserialize, Serialize};

use crate::allocator::PromptId;
use crate::error::{Result, XrpoError};

/// One generated rollout, as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub prompt_id: PromptId,
    /// Token count; must be >= 1.
    pub length: u32,
    /// Total log-probability of the sequence; must be <= 0.
    pub logprob_sum: f64,
    pub reward: f64,
    /// Whether the rollout was generated from an exemplar-seeded prompt.
    pub is_icl: bool,
    /// Round index: 0 for the base phase, then 1..=n_rounds.
    pub phase: u32,
    /// False when generation was truncated before finishing.
    pub complete: bool,
}

impl Rollout {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(XrpoError::Domain("rollout length must be >= 1".into()));
        }
        if !self.logprob_sum.is_finite() || self.logprob_sum > 0.0 {
            return Err(XrpoError::Domain(format!(
                "rollout logprob_sum must be finite and <= 0, got {}",
                self.logprob_sum
            )));
        }
        if !self.reward.is_finite() {
            return Err(XrpoError::Domain("rollout reward must be finite".into()));
        }
        Ok(())
    }
}

/// Sharpening parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SharpenParams {
    /// Weight of the novelty bonus.
    pub lambda_novelty: f64,
    /// Bonus cap as a fraction of the positive base advantage, in [0, 1].
    pub kappa_clip: f64,
    /// Reward value that counts as fully solved.
    pub full_reward: f64,
}

impl Default for SharpenParams {
    fn default() -> Self {
        Self {
            lambda_novelty: 2.5,
            kappa_clip: 0.5,
            full_reward: 1.0,
        }
    }
}

impl SharpenParams {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda_novelty.is_finite() || self.lambda_novelty < 0.0 {
            return Err(XrpoError::Config(format!(
                "sharpen.lambda_novelty must be >= 0, got {}",
                self.lambda_novelty
            )));
        }
        if !self.kappa_clip.is_finite() || !(0.0..=1.0).contains(&self.kappa_clip) {
            return Err(XrpoError::Config(format!(
                "sharpen.kappa_clip must lie in [0, 1], got {}",
                self.kappa_clip
            )));
        }
        if !self.full_reward.is_finite() {
            return Err(XrpoError::Config("sharpen.full_reward must be finite".into()));
        }
        Ok(())
    }
}

/// Per-rollout scoring output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdvantageRecord {
    pub prompt_id: PromptId,
    /// Position of the rollout within its group.
    pub index: usize,
    pub base_advantage: f64,
    /// Length-normalized sequence score s.
    pub score: f64,
    /// Novelty weight eta (group geometric mean is 1).
    pub novelty: f64,
    pub bonus: f64,
    /// Sharpened advantage: base plus bonus.
    pub sharpened: f64,
}

/// Group-standardized advantages `(r_i - mean) / popstd`.
///
/// Uses the population standard deviation (divide by G). Degenerate
/// groups (zero variance) map to all-zero advantages.
pub fn group_advantage(rewards: &[f64]) -> Vec<f64> {
    let g = rewards.len();
    if g == 0 {
        return Vec::new();
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / g as f64;
    let std = var.sqrt();
    // Treat rounding-level variance as degenerate so identical rewards
    // never produce noise-driven advantages.
    if std <= 1e-12 * (1.0 + mean.abs()) {
        return vec![0.0; g];
    }
    rewards.iter().map(|r| (r - mean) / std).collect()
}

/// Length-normalized sequence score `logprob_sum / length`.
pub fn seq_score(rollout: &Rollout) -> Result<f64> {
    if rollout.length == 0 {
        return Err(XrpoError::Domain("seq_score: rollout length is 0".into()));
    }
    Ok(rollout.logprob_sum / rollout.length as f64)
}

/// Novelty weights `eta_i = exp(s_i - mean(s))`.
///
/// Shift-invariant in the scores; the product over a group is 1.
pub fn novelty(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    scores.iter().map(|s| (s - mean).exp()).collect()
}

/// Apply the novelty bonus to one advantage. Returns `(sharpened, bonus)`.
///
/// Rollouts below the full reward keep their base advantage. Otherwise
/// the bonus is `min(max(lambda * (1 - eta), 0), kappa * A)` with the cap
/// floored at zero for non-positive advantages, so the bonus never flips
/// a sign and never exceeds `kappa` times the positive base advantage.
pub fn sharpen(advantage: f64, novelty: f64, reward: f64, params: &SharpenParams) -> (f64, f64) {
    if reward < params.full_reward {
        return (advantage, 0.0);
    }
    let raw = (params.lambda_novelty * (1.0 - novelty)).max(0.0);
    let cap = (params.kappa_clip * advantage).max(0.0);
    let bonus = raw.min(cap);
    (advantage + bonus, bonus)
}

/// Score a full prompt group: advantages, sequence scores, novelty
/// weights, and sharpened advantages, one record per rollout in order.
///
/// All rollouts must share one prompt id.
pub fn sharpen_group(rollouts: &[Rollout], params: &SharpenParams) -> Result<Vec<AdvantageRecord>> {
    if rollouts.is_empty() {
        return Ok(Vec::new());
    }
    params.validate()?;
    let pid = &rollouts[0].prompt_id;
    if rollouts.iter().any(|r| &r.prompt_id != pid) {
        return Err(XrpoError::Domain(
            "sharpen_group: rollouts span multiple prompt ids".into(),
        ));
    }
    let rewards: Vec<f64> = rollouts.iter().map(|r| r.reward).collect();
    let advantages = group_advantage(&rewards);
    let scores = rollouts.iter().map(seq_score).collect::<Result<Vec<_>>>()?;
    let etas = novelty(&scores);
    Ok(rollouts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (sharpened, bonus) = sharpen(advantages[i], etas[i], r.reward, params);
            AdvantageRecord {
                prompt_id: r.prompt_id.clone(),
                index: i,
                base_advantage: advantages[i],
                score: scores[i],
                novelty: etas[i],
                bonus,
                sharpened,
            }
        })
        .collect())
}
