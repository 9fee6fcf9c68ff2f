//! `allocate`: plan one reallocation round from summary statistics.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use xrpo::{
    allocate_round, AllocationStrategy, AllocatorParams, PromptId, PromptSummary, Result,
    XrpoError,
};

use crate::util;

/// One input row of the stats file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsRow {
    prompt_id: String,
    /// Rollouts observed so far for this prompt.
    n_q: u32,
    mean: f64,
    std: f64,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Line-delimited JSON stats: {"prompt_id","n_q","mean","std"}.
    #[arg(long)]
    pub stats: PathBuf,
    /// Rollout budget for this round.
    #[arg(long)]
    pub budget: u32,
    /// Cumulative rollouts generated before this round; defaults to the
    /// sum of the n_q column.
    #[arg(long)]
    pub t_total: Option<u64>,
    /// Two-sided confidence level is 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Exploration bonus weight.
    #[arg(long = "lambda", default_value_t = 0.1)]
    pub lambda_explore: f64,
    /// Round index recorded in the plan.
    #[arg(long, default_value_t = 1)]
    pub round: u32,
    /// Apportionment strategy: proportional or greedy.
    #[arg(long, default_value = "proportional")]
    pub strategy: String,
}

fn parse_strategy(name: &str) -> Result<AllocationStrategy> {
    match name {
        "proportional" => Ok(AllocationStrategy::Proportional),
        "greedy" => Ok(AllocationStrategy::Greedy),
        other => Err(XrpoError::Config(format!(
            "unknown strategy '{other}' (expected proportional or greedy)"
        ))),
    }
}

pub fn run(args: AllocateArgs) -> Result<()> {
    let rows: Vec<StatsRow> = util::read_jsonl(&args.stats)?;
    if rows.is_empty() {
        return Err(XrpoError::Schema {
            row: 0,
            msg: "stats file has no rows".into(),
        });
    }
    let summaries: Vec<PromptSummary> = rows
        .into_iter()
        .map(|r| PromptSummary {
            prompt_id: PromptId::new(r.prompt_id),
            n: r.n_q,
            mean: r.mean,
            std: r.std,
        })
        .collect();
    let t_total = args
        .t_total
        .unwrap_or_else(|| summaries.iter().map(|s| s.n as u64).sum());
    let params = AllocatorParams {
        alpha: args.alpha,
        lambda_explore: args.lambda_explore,
        strategy: parse_strategy(&args.strategy)?,
        ..AllocatorParams::default()
    };
    params.validate()?;
    let plan = allocate_round(&summaries, args.budget, t_total, &params, args.round)?;

    let mut doc = serde_json::to_value(&plan)?;
    let obj = doc.as_object_mut().expect("plan serializes to an object");
    obj.insert("t_total".into(), serde_json::json!(t_total));
    obj.insert("alpha".into(), serde_json::json!(args.alpha));
    obj.insert(
        "lambda_explore".into(),
        serde_json::json!(args.lambda_explore),
    );
    obj.insert("strategy".into(), serde_json::json!(args.strategy));
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}
