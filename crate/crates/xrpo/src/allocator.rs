//! Explore-exploit rollout planning.
//!
//! Each prompt gets a priority that adds the expected confidence-interval
//! shrink from one more rollout (exploitation) to a visit-count bonus
//! (exploration). Integer rollout budgets are then apportioned to priorities
//! with the largest-remainder method, or greedily one rollout at a time.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, XrpoError};
use crate::stats::{uncertainty_reduction, RewardSample};

/// Opaque prompt identifier. Ordering (lexicographic) is the documented
/// tie-breaking order everywhere counts or ranks are assigned.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptId(pub String);

impl PromptId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PromptId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Full per-prompt accounting kept by the orchestrator.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PromptState {
    pub prompt_id: PromptId,
    pub rewards: RewardSample,
    /// Whether any rollout so far earned the full reward.
    pub has_success: bool,
    /// Number of rollouts that finished (were not truncated).
    pub n_complete: u32,
}

impl PromptState {
    pub fn new(prompt_id: PromptId) -> Self {
        Self {
            prompt_id,
            rewards: RewardSample::new(),
            has_success: false,
            n_complete: 0,
        }
    }

    /// Record one observed rollout outcome.
    pub fn record(&mut self, reward: f64, success: bool, complete: bool) {
        self.rewards.push(reward);
        self.has_success |= success;
        if complete {
            self.n_complete += 1;
        }
    }

    /// True when every observed rollout was truncated.
    pub fn all_incomplete(&self) -> bool {
        self.rewards.n() > 0 && self.n_complete == 0
    }

    pub fn summary(&self) -> PromptSummary {
        PromptSummary {
            prompt_id: self.prompt_id.clone(),
            n: self.rewards.n(),
            mean: self.rewards.mean(),
            std: self.rewards.std(),
        }
    }
}

/// The statistics the allocator actually consumes: visit count and the
/// sample moments of the observed rewards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptSummary {
    pub prompt_id: PromptId,
    /// Number of rollouts observed so far (n_q).
    pub n: u32,
    pub mean: f64,
    pub std: f64,
}

/// How an integer round budget is split across prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationStrategy {
    /// Largest-remainder apportionment proportional to priorities.
    Proportional,
    /// One rollout at a time to the current highest-priority prompt,
    /// re-evaluating n_q and T after every assignment.
    Greedy,
}

impl Default for AllocationStrategy {
    fn default() -> Self {
        AllocationStrategy::Proportional
    }
}

/// Planner parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocatorParams {
    /// Two-sided confidence level is 1 - alpha.
    pub alpha: f64,
    /// Weight of the exploration bonus.
    pub lambda_explore: f64,
    /// Rollouts given to every prompt in the base phase.
    pub n_base: u32,
    /// Number of planned reallocation rounds after the base phase.
    pub n_rounds: u32,
    /// Total rollout budget across the base phase and all rounds.
    pub total_budget: u32,
    pub strategy: AllocationStrategy,
}

impl Default for AllocatorParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            lambda_explore: 0.1,
            n_base: 4,
            n_rounds: 2,
            total_budget: 128,
            strategy: AllocationStrategy::Proportional,
        }
    }
}

impl AllocatorParams {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(XrpoError::Config(format!(
                "allocator.alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !self.lambda_explore.is_finite() || self.lambda_explore < 0.0 {
            return Err(XrpoError::Config(format!(
                "allocator.lambda_explore must be >= 0, got {}",
                self.lambda_explore
            )));
        }
        if self.n_base == 0 {
            return Err(XrpoError::Config("allocator.n_base must be >= 1".into()));
        }
        if self.n_rounds == 0 {
            return Err(XrpoError::Config("allocator.n_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

/// One planned round: how many rollouts each prompt receives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub round: u32,
    pub round_budget: u32,
    /// Count per prompt (zero counts included). Keyed in prompt order.
    pub counts: BTreeMap<PromptId, u32>,
    /// Priority snapshot used to build the plan.
    pub priorities: BTreeMap<PromptId, f64>,
}

impl AllocationPlan {
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }
}

/// Visit-count exploration bonus `lambda * sqrt(ln(1 + t_total) / n_q)`.
///
/// `t_total` is the cumulative number of rollouts generated before the
/// current round. Errors when `n_q` is 0.
pub fn exploration_bonus(t_total: u64, n_q: u32, lambda: f64) -> Result<f64> {
    if n_q == 0 {
        return Err(XrpoError::Domain(
            "exploration_bonus: n_q must be >= 1".into(),
        ));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(XrpoError::Domain(format!(
            "exploration_bonus: lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(lambda * ((t_total as f64).ln_1p() / n_q as f64).sqrt())
}

/// Priority of one prompt: expected half-width reduction plus the
/// exploration bonus. Errors when the prompt has fewer than 2 rollouts.
pub fn priority(summary: &PromptSummary, t_total: u64, params: &AllocatorParams) -> Result<f64> {
    let delta = uncertainty_reduction(summary.std, summary.n, params.alpha)?;
    let phi = exploration_bonus(t_total, summary.n, params.lambda_explore)?;
    Ok(delta + phi)
}

/// Split `round_budget` rollouts across prompts proportionally to their
/// priorities (or greedily, per `params.strategy`).
///
/// The returned counts always sum to exactly `round_budget`. When every
/// priority is zero the split falls back to uniform. Fractional-seat ties
/// are broken toward ascending prompt id.
pub fn allocate_round(
    summaries: &[PromptSummary],
    round_budget: u32,
    t_total: u64,
    params: &AllocatorParams,
    round: u32,
) -> Result<AllocationPlan> {
    if summaries.is_empty() {
        return Err(XrpoError::Domain(
            "allocate_round: need at least one prompt".into(),
        ));
    }
    {
        let mut seen = std::collections::BTreeSet::new();
        for s in summaries {
            if !seen.insert(&s.prompt_id) {
                return Err(XrpoError::Domain(format!(
                    "allocate_round: duplicate prompt id {}",
                    s.prompt_id
                )));
            }
        }
    }
    let priorities: Vec<f64> = summaries
        .iter()
        .map(|s| priority(s, t_total, params))
        .collect::<Result<_>>()?;

    let counts = match params.strategy {
        AllocationStrategy::Proportional => {
            apportion_largest_remainder(summaries, &priorities, round_budget)
        }
        AllocationStrategy::Greedy => greedy_counts(summaries, round_budget, t_total, params)?,
    };

    let mut count_map = BTreeMap::new();
    let mut priority_map = BTreeMap::new();
    for (i, s) in summaries.iter().enumerate() {
        count_map.insert(s.prompt_id.clone(), counts[i]);
        priority_map.insert(s.prompt_id.clone(), priorities[i]);
    }
    Ok(AllocationPlan {
        round,
        round_budget,
        counts: count_map,
        priorities: priority_map,
    })
}

/// Largest-remainder apportionment of `budget` to non-negative weights.
/// Zero total weight falls back to uniform. Ties on equal fractional
/// remainders go to the smaller prompt id.
fn apportion_largest_remainder(
    summaries: &[PromptSummary],
    weights: &[f64],
    budget: u32,
) -> Vec<u32> {
    let n = summaries.len();
    let total: f64 = weights.iter().sum();
    let uniform = total <= 0.0 || !total.is_finite();
    let quotas: Vec<f64> = (0..n)
        .map(|i| {
            let w = if uniform { 1.0 / n as f64 } else { weights[i] / total };
            budget as f64 * w
        })
        .collect();
    let mut counts: Vec<u32> = quotas.iter().map(|q| q.floor() as u32).collect();
    let assigned: u32 = counts.iter().sum();
    let mut leftover = budget.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| summaries[a].prompt_id.cmp(&summaries[b].prompt_id))
    });
    while leftover > 0 {
        for &i in &order {
            if leftover == 0 {
                break;
            }
            counts[i] += 1;
            leftover -= 1;
        }
    }
    counts
}

/// Uniform apportionment of a round budget, with the same remainder
/// tie rule as the proportional strategy (smaller ids first).
pub fn uniform_plan(
    summaries: &[PromptSummary],
    round_budget: u32,
    round: u32,
) -> Result<AllocationPlan> {
    if summaries.is_empty() {
        return Err(XrpoError::Domain(
            "uniform_plan: need at least one prompt".into(),
        ));
    }
    let weights = vec![0.0; summaries.len()];
    let counts = apportion_largest_remainder(summaries, &weights, round_budget);
    let mut count_map = BTreeMap::new();
    let mut priority_map = BTreeMap::new();
    for (i, s) in summaries.iter().enumerate() {
        count_map.insert(s.prompt_id.clone(), counts[i]);
        priority_map.insert(s.prompt_id.clone(), 0.0);
    }
    Ok(AllocationPlan {
        round,
        round_budget,
        counts: count_map,
        priorities: priority_map,
    })
}

fn greedy_counts(
    summaries: &[PromptSummary],
    round_budget: u32,
    t_total: u64,
    params: &AllocatorParams,
) -> Result<Vec<u32>> {
    let mut counts = vec![0_u32; summaries.len()];
    for step in 0..round_budget {
        let t_now = t_total + step as u64;
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in summaries.iter().enumerate() {
            let mut current = s.clone();
            current.n += counts[i];
            let p = priority(&current, t_now, params)?;
            let better = match best {
                None => true,
                Some((bi, bp)) => {
                    p > bp || (p == bp && summaries[i].prompt_id < summaries[bi].prompt_id)
                }
            };
            if better {
                best = Some((i, p));
            }
        }
        counts[best.expect("non-empty summaries").0] += 1;
    }
    Ok(counts)
}

/// Split the total budget into a base phase plus `n_rounds` planned rounds.
///
/// Returns `[n_base * batch_size, r_1, .., r_n_rounds]`. The surplus after
/// the base phase is divided evenly across rounds, with the remainder
/// attached to the final round. The parts always sum to `total_budget`.
pub fn plan_phases(batch_size: u32, params: &AllocatorParams) -> Result<Vec<u32>> {
    params.validate()?;
    if batch_size == 0 {
        return Err(XrpoError::Domain("plan_phases: batch_size must be >= 1".into()));
    }
    let base = params
        .n_base
        .checked_mul(batch_size)
        .ok_or_else(|| XrpoError::Domain("plan_phases: base phase overflows".into()))?;
    if params.total_budget < base {
        return Err(XrpoError::Config(format!(
            "total_budget {} is below the base phase {} ({} prompts x {} rollouts)",
            params.total_budget, base, batch_size, params.n_base
        )));
    }
    let surplus = params.total_budget - base;
    let per = surplus / params.n_rounds;
    let rem = surplus % params.n_rounds;
    let mut phases = Vec::with_capacity(params.n_rounds as usize + 1);
    phases.push(base);
    for r in 0..params.n_rounds {
        let extra = if r + 1 == params.n_rounds { rem } else { 0 };
        phases.push(per + extra);
    }
    Ok(phases)
}
