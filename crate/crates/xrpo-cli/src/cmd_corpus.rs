//! `corpus`: add, audit, and query the exemplar corpus file.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use xrpo::{Corpus, Embedder, LocalHashEmbedder, PromptId, RemoteEmbedder, Result};

/// Default on-disk cache for the remote embedding backend.
const DEFAULT_CACHE_DIR: &str = ".xrpo_embed_cache";

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Add one verified problem-solution pair.
    Add(AddArgs),
    /// Check every corpus invariant; exit 4 on the first violation.
    Audit(AuditArgs),
    /// Print the top-k entries most similar to a problem text.
    Query(QueryArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Corpus JSONL file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Embedding dimension (must match existing entries).
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    /// Use the remote embedding backend (XRPO_EMBED_URL / XRPO_EMBED_TOKEN).
    #[arg(long)]
    pub remote: bool,
    /// Cache directory for remote embeddings.
    #[arg(long, default_value = DEFAULT_CACHE_DIR)]
    pub cache_dir: PathBuf,
}

impl CommonArgs {
    fn embedder(&self) -> Result<Box<dyn Embedder>> {
        if self.remote {
            Ok(Box::new(RemoteEmbedder::from_env(
                self.dim,
                self.cache_dir.clone(),
            )?))
        } else {
            Ok(Box::new(LocalHashEmbedder::new(self.dim)?))
        }
    }
}

#[derive(Debug, Args)]
pub struct AddArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Problem text of the new entry.
    #[arg(long)]
    pub problem: String,
    /// Verified solution text.
    #[arg(long)]
    pub solution: String,
    /// Prompt the solution was generated for.
    #[arg(long)]
    pub source_prompt: String,
    /// Reward earned by the source rollout.
    #[arg(long, default_value_t = 1.0)]
    pub reward: f64,
    /// Reward value that counts as fully solved.
    #[arg(long, default_value_t = 1.0)]
    pub full_reward: f64,
    /// Step (episode) to record on the entry.
    #[arg(long, default_value_t = 0)]
    pub step: u64,
    /// Mark the source rollout as exemplar-seeded (always rejected).
    #[arg(long)]
    pub is_icl: bool,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Corpus JSONL file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Expected embedding dimension; inferred from the file when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Reward value that counts as fully solved.
    #[arg(long, default_value_t = 1.0)]
    pub full_reward: f64,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Problem text to search for.
    #[arg(long)]
    pub problem: String,
    /// Number of entries to return.
    #[arg(short, default_value_t = 2)]
    pub k: usize,
    /// Never return entries sourced from this prompt.
    #[arg(long)]
    pub exclude_prompt: Option<String>,
}

pub fn run(cmd: CorpusCommand) -> Result<()> {
    match cmd {
        CorpusCommand::Add(args) => add(args),
        CorpusCommand::Audit(args) => audit(args),
        CorpusCommand::Query(args) => query(args),
    }
}

fn add(args: AddArgs) -> Result<()> {
    let mut corpus = Corpus::open(&args.common.corpus)?;
    let embedder = args.common.embedder()?;
    let id = corpus.add_pair(
        &args.problem,
        &args.solution,
        PromptId::new(args.source_prompt),
        args.step,
        args.reward,
        args.is_icl,
        args.full_reward,
        embedder.as_ref(),
    )?;
    println!("added {id} ({} entries)", corpus.len());
    Ok(())
}

fn audit(args: AuditArgs) -> Result<()> {
    let corpus = Corpus::open(&args.corpus)?;
    corpus.audit(args.dim, args.full_reward)?;
    println!("ok: {} entries pass every invariant", corpus.len());
    Ok(())
}

fn query(args: QueryArgs) -> Result<()> {
    let corpus = Corpus::open(&args.common.corpus)?;
    // Follow the stored dimension so queries work on corpora built with
    // a non-default embedding size.
    let mut args = args;
    if let Some(entry) = corpus.entries().first() {
        args.common.dim = entry.embedding.len();
    }
    let embedder = args.common.embedder()?;
    let exclude = args.exclude_prompt.map(PromptId::new);
    let hits = corpus.retrieve_scored(&args.problem, exclude.as_ref(), args.k, embedder.as_ref())?;
    let rows: Vec<serde_json::Value> = hits
        .into_iter()
        .map(|(entry, similarity)| {
            serde_json::json!({
                "entry_id": entry.entry_id,
                "source_prompt_id": entry.source_prompt_id,
                "similarity": similarity,
                "problem_text": entry.problem_text,
                "solution_text": entry.solution_text,
            })
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(())
}
