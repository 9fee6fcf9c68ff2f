//! Run configuration for the simulator and CLI.

use serde::{Deserialize, Serialize};

use crate::advantage::SharpenParams;
use crate::allocator::{plan_phases, AllocatorParams};
use crate::error::{Result, XrpoError};
use crate::icl::IclConfig;
use crate::sim::PopulationSpec;

/// Which parts of the machinery a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Uniform allocation, no seeding, no sharpening (the baseline).
    Uniform,
    /// Priority allocation, exemplar seeding, and sharpening.
    Xrpo,
    XrpoNoIcl,
    XrpoNoSharpen,
    XrpoNoIclNoSharpen,
}

impl Policy {
    pub fn uses_priority_allocation(self) -> bool {
        !matches!(self, Policy::Uniform)
    }

    pub fn uses_icl(self) -> bool {
        matches!(self, Policy::Xrpo | Policy::XrpoNoSharpen)
    }

    pub fn uses_sharpening(self) -> bool {
        matches!(self, Policy::Xrpo | Policy::XrpoNoIcl)
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Uniform => "uniform",
            Policy::Xrpo => "xrpo",
            Policy::XrpoNoIcl => "xrpo_no_icl",
            Policy::XrpoNoSharpen => "xrpo_no_sharpen",
            Policy::XrpoNoIclNoSharpen => "xrpo_no_icl_no_sharpen",
        }
    }
}

impl Default for Policy {
    fn default() -> Self {
        Policy::Xrpo
    }
}

/// Full configuration of a simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Number of prompts per batch; must match the population size.
    pub batch_size: u32,
    #[serde(default = "default_replications")]
    pub replications: u32,
    /// Episodes per replication; the corpus and (with a positive learning
    /// rate) the success probabilities carry across episodes.
    #[serde(default = "default_episodes")]
    pub episodes: u32,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default)]
    pub allocator: AllocatorParams,
    #[serde(default)]
    pub sharpen: SharpenParams,
    #[serde(default)]
    pub icl: IclConfig,
    /// Toy learning rate: after each episode every prompt's p_success
    /// moves by this factor times its mean positive sharpened advantage.
    #[serde(default)]
    pub learning_rate_toy: f64,
    /// Stop-watch target on mean absolute estimation error.
    #[serde(default)]
    pub error_target: Option<f64>,
    /// Stop-watch target on mean p_success under toy learning.
    #[serde(default)]
    pub success_target: Option<f64>,
    pub population: PopulationSpec,
}

fn default_replications() -> u32 {
    1
}

fn default_episodes() -> u32 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            batch_size: 16,
            replications: 1,
            episodes: 1,
            policy: Policy::default(),
            allocator: AllocatorParams::default(),
            sharpen: SharpenParams::default(),
            icl: IclConfig::default(),
            learning_rate_toy: 0.0,
            error_target: None,
            success_target: None,
            population: PopulationSpec::Mixed {
                size: 16,
                frac_near_deterministic: 0.5,
                frac_zero: 0.0,
                icl_boost_zero: 0.0,
                p_mid: [0.3, 0.7],
            },
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.allocator.validate()?;
        self.sharpen.validate()?;
        self.icl.validate()?;
        if self.batch_size == 0 {
            return Err(XrpoError::Config("batch_size must be >= 1".into()));
        }
        if self.population.size() != self.batch_size {
            return Err(XrpoError::Config(format!(
                "batch_size {} does not match the population size {}",
                self.batch_size,
                self.population.size()
            )));
        }
        if self.replications == 0 {
            return Err(XrpoError::Config("replications must be >= 1".into()));
        }
        if self.episodes == 0 {
            return Err(XrpoError::Config("episodes must be >= 1".into()));
        }
        if !self.learning_rate_toy.is_finite() || self.learning_rate_toy < 0.0 {
            return Err(XrpoError::Config(format!(
                "learning_rate_toy must be >= 0, got {}",
                self.learning_rate_toy
            )));
        }
        for (name, t) in [
            ("error_target", self.error_target),
            ("success_target", self.success_target),
        ] {
            if let Some(t) = t {
                if !t.is_finite() || t <= 0.0 {
                    return Err(XrpoError::Config(format!(
                        "{name} must be a positive number, got {t}"
                    )));
                }
            }
        }
        let phases = plan_phases(self.batch_size, &self.allocator)?;
        // Planned rounds need enough base samples for a t interval.
        if phases[1..].iter().any(|b| *b > 0) && self.allocator.n_base < 2 {
            return Err(XrpoError::Config(
                "allocator.n_base must be >= 2 when reallocation rounds have budget".into(),
            ));
        }
        Ok(())
    }

    /// The phase budgets implied by this configuration.
    pub fn phase_budgets(&self) -> Result<Vec<u32>> {
        plan_phases(self.batch_size, &self.allocator)
    }
}
