//! `advantage`: score a rollout log into sharpened advantage records.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use xrpo::{sharpen_group, Result, Rollout, SharpenParams, XrpoError};

use crate::util;

/// One log line. Replication and episode are optional context columns;
/// extra fields (such as a logged priority) are ignored.
#[derive(Debug, Deserialize)]
struct LogRow {
    #[serde(default)]
    replication: u32,
    #[serde(default)]
    episode: u32,
    #[serde(flatten)]
    rollout: Rollout,
}

#[derive(Debug, Args)]
pub struct AdvantageArgs {
    /// Line-delimited JSON rollout log (as written by simulate).
    #[arg(long)]
    pub log: PathBuf,
    /// Novelty bonus weight.
    #[arg(long, default_value_t = 2.5)]
    pub lambda_novelty: f64,
    /// Bonus cap as a fraction of the positive base advantage.
    #[arg(long, default_value_t = 0.5)]
    pub kappa_clip: f64,
    /// Reward value that counts as fully solved.
    #[arg(long, default_value_t = 1.0)]
    pub full_reward: f64,
}

pub fn run(args: AdvantageArgs) -> Result<()> {
    let rows: Vec<LogRow> = util::read_jsonl(&args.log)?;
    for (i, row) in rows.iter().enumerate() {
        row.rollout.validate().map_err(|e| XrpoError::Schema {
            row: i + 1,
            msg: e.to_string(),
        })?;
    }
    let params = SharpenParams {
        lambda_novelty: args.lambda_novelty,
        kappa_clip: args.kappa_clip,
        full_reward: args.full_reward,
    };
    params.validate()?;

    // Group by (replication, episode, prompt), preserving log order
    // within each group so record indexes match line order.
    let mut groups: BTreeMap<(u32, u32, String), Vec<Rollout>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((
                row.replication,
                row.episode,
                row.rollout.prompt_id.as_str().to_string(),
            ))
            .or_default()
            .push(row.rollout);
    }

    let mut stdout = String::new();
    for ((replication, episode, _), rollouts) in &groups {
        let records = sharpen_group(rollouts, &params)?;
        for record in records {
            let mut doc = serde_json::to_value(&record)?;
            let obj = doc.as_object_mut().expect("record serializes to an object");
            obj.insert("replication".into(), serde_json::json!(replication));
            obj.insert("episode".into(), serde_json::json!(episode));
            stdout.push_str(&serde_json::to_string(&doc)?);
            stdout.push('\n');
        }
    }
    print!("{stdout}");
    Ok(())
}
