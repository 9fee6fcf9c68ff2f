//! `simulate`: run a configured experiment and write run artifacts.
//!
//! Artifacts written to the output directory:
//! - `manifest.json`: artifact version, config hash, seed, phase budgets.
//! - `config.json`: the resolved configuration after overrides.
//! - `rollouts.jsonl`: one rollout per line, in generation order.
//! - `metrics.json`: cross-replication summary plus per-replication detail.
//! - `metrics.csv`: one row per round snapshot, flat for plotting.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use xrpo::{
    run_experiment_with, EmbedBackend, Embedder, ExperimentOutput, LocalHashEmbedder,
    RemoteEmbedder, Result, RunConfig, XrpoError,
};

use crate::util;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for run artifacts (created if missing).
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Override a config field by dotted path, e.g.
    /// --set allocator.total_budget=64 --set policy=uniform.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
}

/// One flattened metrics row: replication and episode context plus the
/// round snapshot and the episode-level tallies (repeated on each row).
#[derive(Debug, Serialize)]
struct CsvRow {
    replication: u32,
    episode: u32,
    round: u32,
    cumulative_rollouts: u32,
    mean_half_width: f64,
    mean_abs_error: f64,
    frac_groups_all_zero: f64,
    frac_groups_all_one: f64,
    zero_after_base: u32,
    flipped: u32,
    seeded_rollouts: u32,
    bonus_mass: f64,
    mean_p_success: f64,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let cfg: RunConfig = util::load_config(&args.config, &args.set)?;
    cfg.validate()?;
    fs::create_dir_all(&args.output_dir)?;

    let population = cfg.population.materialize(cfg.seed)?;
    let embedder: Box<dyn Embedder> = match cfg.icl.backend {
        EmbedBackend::Local => Box::new(LocalHashEmbedder::new(cfg.icl.embedding_dim)?),
        EmbedBackend::Remote => Box::new(RemoteEmbedder::from_env(
            cfg.icl.embedding_dim,
            args.output_dir.join("embed_cache"),
        )?),
    };
    let out = run_experiment_with(&cfg, &population, embedder.as_ref())?;

    write_manifest(&args, &cfg, &out)?;
    write_rollout_log(&args, &out)?;
    write_metrics(&args, &out)?;

    println!(
        "wrote {}: {} rollouts, {} replications x {} episodes, policy {}",
        args.output_dir.display(),
        out.rollouts.len(),
        cfg.replications,
        cfg.episodes,
        cfg.policy.name()
    );
    Ok(())
}

fn write_manifest(args: &SimulateArgs, cfg: &RunConfig, out: &ExperimentOutput) -> Result<()> {
    // Hash the compact canonical serialization of the resolved config, so
    // the hash is stable under reformatting of the input file.
    let canonical = serde_json::to_vec(cfg)?;
    let manifest = serde_json::json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config_sha256": util::sha256_hex(&canonical),
        "seed": cfg.seed,
        "policy": cfg.policy.name(),
        "batch_size": cfg.batch_size,
        "replications": cfg.replications,
        "episodes": cfg.episodes,
        "phase_budgets": out.phase_budgets,
        "total_rollouts": out.rollouts.len(),
    });
    fs::write(
        args.output_dir.join("manifest.json"),
        pretty_line(&manifest)?,
    )?;
    fs::write(
        args.output_dir.join("config.json"),
        pretty_line(&serde_json::to_value(cfg)?)?,
    )?;
    Ok(())
}

fn write_rollout_log(args: &SimulateArgs, out: &ExperimentOutput) -> Result<()> {
    let mut log = String::new();
    for rollout in &out.rollouts {
        log.push_str(&serde_json::to_string(rollout)?);
        log.push('\n');
    }
    fs::write(args.output_dir.join("rollouts.jsonl"), log)?;
    Ok(())
}

fn write_metrics(args: &SimulateArgs, out: &ExperimentOutput) -> Result<()> {
    let metrics = serde_json::json!({
        "summary": out.summary,
        "replications": out.replications,
    });
    fs::write(args.output_dir.join("metrics.json"), pretty_line(&metrics)?)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    for rep in &out.replications {
        for ep in &rep.episodes {
            for snap in &ep.rounds {
                writer
                    .serialize(CsvRow {
                        replication: rep.replication,
                        episode: ep.episode,
                        round: snap.round,
                        cumulative_rollouts: snap.cumulative_rollouts,
                        mean_half_width: snap.mean_half_width,
                        mean_abs_error: snap.mean_abs_error,
                        frac_groups_all_zero: snap.frac_groups_all_zero,
                        frac_groups_all_one: snap.frac_groups_all_one,
                        zero_after_base: ep.zero_after_base,
                        flipped: ep.flipped,
                        seeded_rollouts: ep.seeded_rollouts,
                        bonus_mass: ep.bonus_mass,
                        mean_p_success: ep.mean_p_success,
                    })
                    .map_err(csv_err)?;
            }
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| XrpoError::Io(std::io::Error::other(e)))?;
    fs::write(args.output_dir.join("metrics.csv"), bytes)?;
    Ok(())
}

fn pretty_line(value: &serde_json::Value) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn csv_err(e: csv::Error) -> XrpoError {
    XrpoError::Io(std::io::Error::other(e))
}
