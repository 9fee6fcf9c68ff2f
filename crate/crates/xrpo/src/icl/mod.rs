//! Exemplar corpus, embeddings, and prompt seeding.

mod corpus;
mod embed;
mod prompt;

pub use corpus::{update_corpus, Corpus, CorpusEntry, EmbedBackend, IclConfig, RolloutWithText};
pub use embed::{
    cosine, Embedder, LocalHashEmbedder, RemoteEmbedder, ENV_EMBED_TOKEN, ENV_EMBED_URL,
};
pub use prompt::{build_icl_prompt, parse_icl_prompt, ParsedIclPrompt, TRUNCATION_MARKER};
