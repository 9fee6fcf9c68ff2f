//! `report`: tabulate metrics across completed run directories.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use xrpo::{ExperimentSummary, Result, XrpoError};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A run directory, or a directory whose subdirectories are runs.
    #[arg(long)]
    pub runs_dir: PathBuf,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Tabulate even when runs disagree on the artifact version.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    artifact_version: String,
    config_sha256: String,
    seed: u64,
}

#[derive(Debug, Deserialize)]
struct MetricsDoc {
    summary: ExperimentSummary,
}

/// One output row per run: identity plus mean and std of the headline
/// metrics across that run's replications.
#[derive(Debug, Serialize)]
struct ReportRow {
    run: String,
    policy: String,
    artifact_version: String,
    seed: u64,
    config_sha256: String,
    replications: u32,
    episodes: u32,
    half_width_mean: f64,
    half_width_std: f64,
    abs_error_mean: f64,
    abs_error_std: f64,
    flip_rate_mean: f64,
    flip_rate_std: f64,
    bonus_mass_mean: f64,
    bonus_mass_std: f64,
    success_target_reached: u32,
    success_rollouts_capped: f64,
}

fn is_run_dir(path: &Path) -> bool {
    path.join("manifest.json").is_file() && path.join("metrics.json").is_file()
}

fn collect_run_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if is_run_dir(root) {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root)? {
        let path = entry?.path();
        if path.is_dir() && is_run_dir(&path) {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(XrpoError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no completed runs under {}", root.display()),
        )));
    }
    Ok(dirs)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let raw = fs::read_to_string(path)?;
    serde_json::from_str(&raw)
        .map_err(|e| XrpoError::Schema {
            row: 0,
            msg: format!("{}: {e}", path.display()),
        })
}

fn row_for(dir: &Path) -> Result<ReportRow> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    let metrics: MetricsDoc = read_json(&dir.join("metrics.json"))?;
    let s = metrics.summary;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(ReportRow {
        run: name,
        policy: s.policy.clone(),
        artifact_version: manifest.artifact_version,
        seed: manifest.seed,
        config_sha256: manifest.config_sha256,
        replications: s.replications,
        episodes: s.episodes_per_replication,
        half_width_mean: s.final_mean_half_width.mean,
        half_width_std: s.final_mean_half_width.std,
        abs_error_mean: s.final_mean_abs_error.mean,
        abs_error_std: s.final_mean_abs_error.std,
        flip_rate_mean: s.flip_rate.mean,
        flip_rate_std: s.flip_rate.std,
        bonus_mass_mean: s.bonus_mass.mean,
        bonus_mass_std: s.bonus_mass.std,
        success_target_reached: s.rollouts_to_success_target.reached,
        success_rollouts_capped: s.rollouts_to_success_target.mean_rollouts_capped,
    })
}

pub fn run(args: ReportArgs) -> Result<()> {
    let dirs = collect_run_dirs(&args.runs_dir)?;
    let mut rows: Vec<ReportRow> = dirs.iter().map(|d| row_for(d)).collect::<Result<_>>()?;

    let mut versions: Vec<&str> = rows.iter().map(|r| r.artifact_version.as_str()).collect();
    versions.sort_unstable();
    versions.dedup();
    if versions.len() > 1 && !args.force {
        return Err(XrpoError::Config(format!(
            "runs mix artifact versions {versions:?}; pass --force to tabulate anyway"
        )));
    }

    rows.sort_by(|a, b| a.policy.cmp(&b.policy).then_with(|| a.run.cmp(&b.run)));

    match args.format.as_str() {
        "csv" => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                writer
                    .serialize(row)
                    .map_err(|e| XrpoError::Io(std::io::Error::other(e)))?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| XrpoError::Io(std::io::Error::other(e)))?;
            print!("{}", String::from_utf8_lossy(&bytes));
        }
        "json" => println!("{}", serde_json::to_string_pretty(&rows)?),
        other => {
            return Err(XrpoError::Config(format!(
                "unknown format '{other}' (expected csv or json)"
            )))
        }
    }
    Ok(())
}
