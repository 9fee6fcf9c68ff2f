//! Evolving corpus of verified problem-solution exemplars.
//!
//! Entries only ever come from complete rollouts that earned the full
//! reward without exemplar seeding. Storage is JSON Lines, append-only.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advantage::seq_score;
use crate::allocator::PromptId;
use crate::error::{Result, XrpoError};
use crate::icl::embed::{cosine, Embedder};

/// Which embedding backend retrieval uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedBackend {
    Local,
    Remote,
}

impl Default for EmbedBackend {
    fn default() -> Self {
        EmbedBackend::Local
    }
}

/// Retrieval and corpus parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IclConfig {
    /// Number of exemplars injected into a seeded prompt.
    pub k: usize,
    pub embedding_dim: usize,
    /// Solutions longer than this are truncated in the rendered prompt.
    pub max_solution_chars: usize,
    /// Corpus entries allowed per source prompt.
    pub max_entries_per_prompt: usize,
    pub backend: EmbedBackend,
}

impl Default for IclConfig {
    fn default() -> Self {
        Self {
            k: 2,
            embedding_dim: 256,
            max_solution_chars: 4000,
            max_entries_per_prompt: 1,
            backend: EmbedBackend::Local,
        }
    }
}

impl IclConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(XrpoError::Config("icl.k must be >= 1".into()));
        }
        if self.embedding_dim < 8 {
            return Err(XrpoError::Config(format!(
                "icl.embedding_dim must be >= 8, got {}",
                self.embedding_dim
            )));
        }
        if self.max_solution_chars == 0 {
            return Err(XrpoError::Config("icl.max_solution_chars must be >= 1".into()));
        }
        if self.max_entries_per_prompt == 0 {
            return Err(XrpoError::Config(
                "icl.max_entries_per_prompt must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One verified problem-solution pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub entry_id: String,
    pub problem_text: String,
    pub solution_text: String,
    /// Unit-normalized embedding of the problem text.
    pub embedding: Vec<f32>,
    pub source_prompt_id: PromptId,
    /// Step (episode) at which the entry was added.
    pub added_at_step: u64,
    /// Provenance: whether the source rollout was exemplar-seeded.
    #[serde(default)]
    pub source_is_icl: bool,
    /// Provenance: reward earned by the source rollout.
    #[serde(default = "default_full")]
    pub source_reward: f64,
}

fn default_full() -> f64 {
    1.0
}

/// A rollout paired with the texts needed to build a corpus entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RolloutWithText {
    pub rollout: crate::advantage::Rollout,
    pub problem_text: String,
    pub solution_text: String,
}

/// In-memory corpus, optionally bound to an append-only JSONL file.
#[derive(Debug, Default)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
    path: Option<PathBuf>,
    next_id: u64,
}

impl Corpus {
    /// A fresh in-memory corpus with no backing file.
    pub fn new() -> Self {
        Self::default()
    }

    /// Bind to `path`, loading existing entries when the file exists.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut corpus = if path.exists() {
            Self::load_file(&path)?
        } else {
            Self::new()
        };
        corpus.path = Some(path);
        Ok(corpus)
    }

    fn load_file(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut corpus = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CorpusEntry =
                serde_json::from_str(&line).map_err(|e| XrpoError::Schema {
                    row: i + 1,
                    msg: format!("corpus entry: {e}"),
                })?;
            corpus.track_id(&entry.entry_id);
            corpus.entries.push(entry);
        }
        Ok(corpus)
    }

    fn track_id(&mut self, id: &str) {
        if let Some(num) = id.strip_prefix('e').and_then(|s| s.parse::<u64>().ok()) {
            self.next_id = self.next_id.max(num + 1);
        } else {
            self.next_id = self.next_id.max(self.entries.len() as u64 + 1);
        }
    }

    fn fresh_id(&mut self) -> String {
        let id = format!("e{:06}", self.next_id);
        self.next_id += 1;
        id
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries_for_prompt(&self, prompt_id: &PromptId) -> usize {
        self.entries
            .iter()
            .filter(|e| &e.source_prompt_id == prompt_id)
            .count()
    }

    /// Validate and append one entry (and persist it when file-bound).
    pub fn insert(&mut self, entry: CorpusEntry, full_reward: f64) -> Result<()> {
        validate_entry(&entry, full_reward)?;
        if self.entries.iter().any(|e| e.entry_id == entry.entry_id) {
            return Err(XrpoError::Audit(format!(
                "duplicate corpus entry id {}",
                entry.entry_id
            )));
        }
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut line = serde_json::to_string(&entry)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
        }
        self.track_id(&entry.entry_id);
        self.entries.push(entry);
        Ok(())
    }

    /// Build an entry from raw parts, embedding the problem text.
    #[allow(clippy::too_many_arguments)]
    pub fn add_pair(
        &mut self,
        problem_text: &str,
        solution_text: &str,
        source_prompt_id: PromptId,
        added_at_step: u64,
        source_reward: f64,
        source_is_icl: bool,
        full_reward: f64,
        embedder: &dyn Embedder,
    ) -> Result<String> {
        let entry = CorpusEntry {
            entry_id: self.fresh_id(),
            problem_text: problem_text.to_string(),
            solution_text: solution_text.to_string(),
            embedding: embedder.embed(problem_text)?,
            source_prompt_id,
            added_at_step,
            source_is_icl,
            source_reward,
        };
        let id = entry.entry_id.clone();
        self.insert(entry, full_reward)?;
        Ok(id)
    }

    /// Top-k entries by cosine similarity to the query text.
    ///
    /// Entries sourced from `exclude_prompt` are never returned, so a
    /// prompt cannot retrieve its own solution. Ties break toward the
    /// ascending entry id.
    pub fn retrieve(
        &self,
        query_text: &str,
        exclude_prompt: Option<&PromptId>,
        k: usize,
        embedder: &dyn Embedder,
    ) -> Result<Vec<&CorpusEntry>> {
        let query = embedder.embed(query_text)?;
        let mut scored: Vec<(&CorpusEntry, f64)> = Vec::new();
        for entry in &self.entries {
            if let Some(excl) = exclude_prompt {
                if &entry.source_prompt_id == excl {
                    continue;
                }
            }
            if entry.embedding.len() != query.len() {
                return Err(XrpoError::Audit(format!(
                    "entry {} has embedding dimension {}, expected {}",
                    entry.entry_id,
                    entry.embedding.len(),
                    query.len()
                )));
            }
            scored.push((entry, cosine(&query, &entry.embedding)));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.entry_id.cmp(&b.0.entry_id))
        });
        Ok(scored.into_iter().take(k).map(|(e, _)| e).collect())
    }

    /// Same as [`Corpus::retrieve`] but returning similarities as well.
    pub fn retrieve_scored(
        &self,
        query_text: &str,
        exclude_prompt: Option<&PromptId>,
        k: usize,
        embedder: &dyn Embedder,
    ) -> Result<Vec<(&CorpusEntry, f64)>> {
        let query = embedder.embed(query_text)?;
        let hits = self.retrieve(query_text, exclude_prompt, k, embedder)?;
        Ok(hits
            .into_iter()
            .map(|e| {
                let sim = cosine(&query, &e.embedding);
                (e, sim)
            })
            .collect())
    }

    /// Check every stored invariant: unique ids, non-empty texts, unit
    /// embedding norms, clean provenance, and a consistent dimension.
    pub fn audit(&self, expected_dim: Option<usize>, full_reward: f64) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        let dim = expected_dim.or_else(|| self.entries.first().map(|e| e.embedding.len()));
        for entry in &self.entries {
            validate_entry(entry, full_reward)?;
            if !seen.insert(entry.entry_id.clone()) {
                return Err(XrpoError::Audit(format!(
                    "duplicate corpus entry id {}",
                    entry.entry_id
                )));
            }
            if let Some(d) = dim {
                if entry.embedding.len() != d {
                    return Err(XrpoError::Audit(format!(
                        "entry {} has embedding dimension {}, expected {d}",
                        entry.entry_id,
                        entry.embedding.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn validate_entry(entry: &CorpusEntry, full_reward: f64) -> Result<()> {
    if entry.entry_id.is_empty() {
        return Err(XrpoError::Audit("corpus entry with empty id".into()));
    }
    if entry.problem_text.is_empty() || entry.solution_text.is_empty() {
        return Err(XrpoError::Audit(format!(
            "entry {} has empty problem or solution text",
            entry.entry_id
        )));
    }
    if entry.source_is_icl {
        return Err(XrpoError::Audit(format!(
            "entry {} originates from an exemplar-seeded rollout",
            entry.entry_id
        )));
    }
    if entry.source_reward < full_reward {
        return Err(XrpoError::Audit(format!(
            "entry {} has source reward {} below the full reward {full_reward}",
            entry.entry_id, entry.source_reward
        )));
    }
    if entry.embedding.is_empty() {
        return Err(XrpoError::Audit(format!(
            "entry {} has an empty embedding",
            entry.entry_id
        )));
    }
    let norm: f64 = entry
        .embedding
        .iter()
        .map(|v| (*v as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(XrpoError::Audit(format!(
            "entry {} embedding norm {norm} is not 1 within 1e-6",
            entry.entry_id
        )));
    }
    Ok(())
}

/// Fold a batch of scored rollouts into the corpus.
///
/// Only complete, non-seeded rollouts at the full reward qualify. For
/// each source prompt the highest sequence-score qualifier in the batch
/// is kept, and prompts already at `max_entries_per_prompt` are skipped.
/// Returns the ids of the added entries.
pub fn update_corpus(
    corpus: &mut Corpus,
    batch: &[RolloutWithText],
    step: u64,
    cfg: &IclConfig,
    full_reward: f64,
    embedder: &dyn Embedder,
) -> Result<Vec<String>> {
    let mut best: BTreeMap<PromptId, &RolloutWithText> = BTreeMap::new();
    for item in batch {
        let r = &item.rollout;
        if r.is_icl || !r.complete || r.reward < full_reward {
            continue;
        }
        let score = seq_score(r)?;
        match best.get(&r.prompt_id) {
            Some(current) if seq_score(&current.rollout)? >= score => {}
            _ => {
                best.insert(r.prompt_id.clone(), item);
            }
        }
    }
    let mut added = Vec::new();
    for (pid, item) in best {
        if corpus.entries_for_prompt(&pid) >= cfg.max_entries_per_prompt {
            continue;
        }
        let id = corpus.add_pair(
            &item.problem_text,
            &item.solution_text,
            pid,
            step,
            item.rollout.reward,
            item.rollout.is_icl,
            full_reward,
            embedder,
        )?;
        added.push(id);
    }
    Ok(added)
}
