//! Synthetic prompt environment: stationary Bernoulli rewards with
//! Gaussian per-token scores and optional truncation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::advantage::Rollout;
use crate::allocator::PromptId;
use crate::error::{Result, XrpoError};
use crate::rng;

/// Uniform integer law for rollout lengths, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LengthLaw {
    pub min: u32,
    pub max: u32,
}

impl Default for LengthLaw {
    fn default() -> Self {
        Self { min: 8, max: 64 }
    }
}

impl LengthLaw {
    pub fn validate(&self) -> Result<()> {
        if self.min == 0 || self.min > self.max {
            return Err(XrpoError::Config(format!(
                "length_law requires 1 <= min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// One synthetic prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimPrompt {
    pub prompt_id: PromptId,
    /// Problem statement used for embeddings and seeded prompts; a
    /// synthetic text derived from the id when omitted.
    #[serde(default)]
    pub problem_text: Option<String>,
    /// Base success probability of a plain rollout.
    pub p_success: f64,
    /// Mean per-token log-probability of generated rollouts.
    #[serde(default = "default_mu")]
    pub mu_score: f64,
    /// Standard deviation of the per-token log-probability.
    #[serde(default = "default_sigma")]
    pub sigma_score: f64,
    /// Additive success-probability boost when the prompt is seeded.
    #[serde(default)]
    pub icl_boost: f64,
    #[serde(default)]
    pub length_law: LengthLaw,
    /// Probability that a plain rollout is truncated (reward 0).
    #[serde(default)]
    pub p_truncate: f64,
    /// Truncation probability when seeded; defaults to `p_truncate`.
    #[serde(default)]
    pub p_truncate_icl: Option<f64>,
}

fn default_mu() -> f64 {
    -0.7
}

fn default_sigma() -> f64 {
    0.25
}

impl SimPrompt {
    pub fn new(prompt_id: impl Into<String>, p_success: f64) -> Self {
        Self {
            prompt_id: PromptId::new(prompt_id),
            problem_text: None,
            p_success,
            mu_score: default_mu(),
            sigma_score: default_sigma(),
            icl_boost: 0.0,
            length_law: LengthLaw::default(),
            p_truncate: 0.0,
            p_truncate_icl: None,
        }
    }

    pub fn problem(&self) -> String {
        match &self.problem_text {
            Some(t) => t.clone(),
            None => format!(
                "synthetic problem {id}: find the certified answer for task {id}",
                id = self.prompt_id
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_success", self.p_success),
            ("icl_boost", self.icl_boost),
            ("p_truncate", self.p_truncate),
            ("p_truncate_icl", self.p_truncate_icl.unwrap_or(0.0)),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(XrpoError::Config(format!(
                    "prompt {}: {name} must lie in [0, 1], got {p}",
                    self.prompt_id
                )));
            }
        }
        if !self.mu_score.is_finite() || self.mu_score > 0.0 {
            return Err(XrpoError::Config(format!(
                "prompt {}: mu_score must be finite and <= 0",
                self.prompt_id
            )));
        }
        if !self.sigma_score.is_finite() || self.sigma_score < 0.0 {
            return Err(XrpoError::Config(format!(
                "prompt {}: sigma_score must be finite and >= 0",
                self.prompt_id
            )));
        }
        if let Some(text) = &self.problem_text {
            if text.is_empty() {
                return Err(XrpoError::Config(format!(
                    "prompt {}: problem_text must not be empty",
                    self.prompt_id
                )));
            }
        }
        self.length_law.validate()
    }
}

/// Draw one rollout. The draw order (truncation, reward, length, score)
/// is fixed so a given stream always yields the same rollout.
pub fn sample_rollout(prompt: &SimPrompt, seeded: bool, phase: u32, rng: &mut impl Rng) -> Rollout {
    let u_trunc: f64 = rng.gen();
    let u_reward: f64 = rng.gen();
    let length = rng.gen_range(prompt.length_law.min..=prompt.length_law.max);
    let normal = Normal::new(prompt.mu_score, prompt.sigma_score)
        .expect("validated sigma_score is finite and non-negative");
    let score: f64 = normal.sample(rng).min(0.0);

    let p_trunc = if seeded {
        prompt.p_truncate_icl.unwrap_or(prompt.p_truncate)
    } else {
        prompt.p_truncate
    };
    let truncated = u_trunc < p_trunc;
    let p_eff = (prompt.p_success + if seeded { prompt.icl_boost } else { 0.0 }).min(1.0);
    let reward = if !truncated && u_reward < p_eff { 1.0 } else { 0.0 };

    Rollout {
        prompt_id: prompt.prompt_id.clone(),
        length,
        logprob_sum: score * length as f64,
        reward,
        is_icl: seeded,
        phase,
        complete: !truncated,
    }
}

/// How the prompt population of a run is specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PopulationSpec {
    /// Prompts listed verbatim.
    Explicit { prompts: Vec<SimPrompt> },
    /// A generated mix of near-deterministic, mid-difficulty, and
    /// never-solved prompts.
    Mixed {
        size: u32,
        /// Fraction of prompts with success probability near 0 or 1.
        #[serde(default = "default_frac_det")]
        frac_near_deterministic: f64,
        /// Fraction of prompts that never succeed without seeding.
        #[serde(default)]
        frac_zero: f64,
        /// Boost given to the zero-success prompts when seeded.
        #[serde(default)]
        icl_boost_zero: f64,
        /// Success-probability range of the remaining prompts.
        #[serde(default = "default_p_mid")]
        p_mid: [f64; 2],
    },
}

fn default_frac_det() -> f64 {
    0.5
}

fn default_p_mid() -> [f64; 2] {
    [0.3, 0.7]
}

impl PopulationSpec {
    pub fn size(&self) -> u32 {
        match self {
            PopulationSpec::Explicit { prompts } => prompts.len() as u32,
            PopulationSpec::Mixed { size, .. } => *size,
        }
    }

    /// Produce the concrete prompt list; `seed` fixes the generated draws.
    pub fn materialize(&self, seed: u64) -> Result<Vec<SimPrompt>> {
        let prompts = match self {
            PopulationSpec::Explicit { prompts } => prompts.clone(),
            PopulationSpec::Mixed {
                size,
                frac_near_deterministic,
                frac_zero,
                icl_boost_zero,
                p_mid,
            } => {
                if *size == 0 {
                    return Err(XrpoError::Config("population size must be >= 1".into()));
                }
                for (name, f) in [
                    ("frac_near_deterministic", *frac_near_deterministic),
                    ("frac_zero", *frac_zero),
                ] {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(XrpoError::Config(format!(
                            "population {name} must lie in [0, 1], got {f}"
                        )));
                    }
                }
                if frac_near_deterministic + frac_zero > 1.0 {
                    return Err(XrpoError::Config(
                        "population fractions sum to more than 1".into(),
                    ));
                }
                if !(0.0..=1.0).contains(&p_mid[0])
                    || !(0.0..=1.0).contains(&p_mid[1])
                    || p_mid[0] > p_mid[1]
                {
                    return Err(XrpoError::Config(format!(
                        "population p_mid must be an ordered range inside [0, 1], got {p_mid:?}"
                    )));
                }
                let n = *size as usize;
                let n_zero = (n as f64 * frac_zero).round() as usize;
                let n_det = ((n as f64 * frac_near_deterministic).round() as usize)
                    .min(n - n_zero);
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let mut p = SimPrompt::new(format!("p{i:04}"), 0.0);
                    if i < n_zero {
                        p.p_success = 0.0;
                        p.icl_boost = *icl_boost_zero;
                    } else if i < n_zero + n_det {
                        // Alternate between nearly-impossible and
                        // nearly-certain prompts.
                        p.p_success = if i % 2 == 0 { 0.02 } else { 0.98 };
                    } else {
                        let mut r = rng::stream(seed, &[0x706f70, i as u64]);
                        p.p_success = p_mid[0] + (p_mid[1] - p_mid[0]) * r.gen::<f64>();
                    }
                    out.push(p);
                }
                out
            }
        };
        let mut seen = std::collections::BTreeSet::new();
        for p in &prompts {
            p.validate()?;
            if !seen.insert(p.prompt_id.clone()) {
                return Err(XrpoError::Config(format!(
                    "duplicate prompt id {} in population",
                    p.prompt_id
                )));
            }
        }
        Ok(prompts)
    }
}
