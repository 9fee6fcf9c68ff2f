//! Embedding backends.
//!
//! The default backend is fully local and deterministic: a signed bag of
//! character trigrams, feature-hashed into a fixed-dimension vector and
//! L2-normalized. A remote HTTP backend with retry and an on-disk cache
//! is available for real embedding services.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, XrpoError};

/// Environment variable naming the remote embedding endpoint.
pub const ENV_EMBED_URL: &str = "XRPO_EMBED_URL";
/// Environment variable holding the bearer token for the endpoint.
pub const ENV_EMBED_TOKEN: &str = "XRPO_EMBED_TOKEN";

/// Maps text to a unit-normalized fixed-dimension vector.
pub trait Embedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>>;
    fn dim(&self) -> usize;
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn normalize(acc: &mut [f64]) -> f64 {
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in acc.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

/// Local deterministic embedder: signed character-trigram hashing.
#[derive(Debug, Clone)]
pub struct LocalHashEmbedder {
    dim: usize,
}

impl LocalHashEmbedder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 8 {
            return Err(XrpoError::Config(format!(
                "embedding dimension must be >= 8, got {dim}"
            )));
        }
        Ok(Self { dim })
    }
}

impl Embedder for LocalHashEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        if text.is_empty() {
            return Err(XrpoError::Domain("cannot embed empty text".into()));
        }
        let chars: Vec<char> = text.chars().collect();
        let mut acc = vec![0.0_f64; self.dim];
        let mut gram = String::with_capacity(12);
        let absorb = |gram: &str, acc: &mut [f64]| {
            let h = fnv1a64(gram.as_bytes());
            let idx = ((h >> 1) % self.dim as u64) as usize;
            let sign = if h & 1 == 1 { 1.0 } else { -1.0 };
            acc[idx] += sign;
        };
        if chars.len() < 3 {
            absorb(text, &mut acc);
        } else {
            for w in chars.windows(3) {
                gram.clear();
                gram.extend(w);
                absorb(&gram, &mut acc);
            }
        }
        if normalize(&mut acc) == 0.0 {
            // Signed counts can cancel exactly; fall back to a one-hot
            // bucket derived from the whole text.
            let idx = (fnv1a64(text.as_bytes()) % self.dim as u64) as usize;
            acc[idx] = 1.0;
        }
        Ok(acc.into_iter().map(|v| v as f32).collect())
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Cosine similarity; accumulates in f64 for stable ordering.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f32>>,
}

/// Remote embedding client: `POST {"texts": [...]}` returning
/// `{"embeddings": [[...]]}`. Failures retry with exponential backoff;
/// responses are cached on disk keyed by the sha256 of the text.
pub struct RemoteEmbedder {
    url: String,
    token: Option<String>,
    dim: usize,
    cache_dir: PathBuf,
    client: reqwest::blocking::Client,
    max_retries: u32,
    backoff: Duration,
}

impl RemoteEmbedder {
    pub fn new(
        url: impl Into<String>,
        token: Option<String>,
        dim: usize,
        cache_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| XrpoError::Transport(format!("building http client: {e}")))?;
        Ok(Self {
            url: url.into(),
            token,
            dim,
            cache_dir: cache_dir.into(),
            client,
            max_retries: 3,
            backoff: Duration::from_millis(250),
        })
    }

    /// Read endpoint and token from `XRPO_EMBED_URL` / `XRPO_EMBED_TOKEN`.
    pub fn from_env(dim: usize, cache_dir: impl Into<PathBuf>) -> Result<Self> {
        let url = std::env::var(ENV_EMBED_URL).map_err(|_| {
            XrpoError::Config(format!(
                "remote embedding backend selected but {ENV_EMBED_URL} is not set"
            ))
        })?;
        let token = std::env::var(ENV_EMBED_TOKEN).ok();
        Self::new(url, token, dim, cache_dir)
    }

    /// Override retry behavior (primarily for tests).
    pub fn with_retry(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    fn cache_path(&self, text: &str) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let key = format!("{:x}", hasher.finalize());
        self.cache_dir.join(format!("{key}.json"))
    }

    fn fetch(&self, text: &str) -> Result<Vec<f32>> {
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2_u32.pow(attempt - 1));
            }
            let mut req = self
                .client
                .post(&self.url)
                .json(&EmbedRequest { texts: vec![text] });
            if let Some(token) = &self.token {
                req = req.bearer_auth(token);
            }
            match req.send().and_then(|r| r.error_for_status()) {
                Ok(resp) => match resp.json::<EmbedResponse>() {
                    Ok(body) => {
                        let mut v = body.embeddings.into_iter().next().ok_or_else(|| {
                            XrpoError::Transport("embedding response was empty".into())
                        })?;
                        if v.len() != self.dim {
                            return Err(XrpoError::Transport(format!(
                                "embedding dimension mismatch: expected {}, got {}",
                                self.dim,
                                v.len()
                            )));
                        }
                        let mut acc: Vec<f64> = v.iter().map(|x| *x as f64).collect();
                        if normalize(&mut acc) == 0.0 {
                            return Err(XrpoError::Transport(
                                "embedding response was a zero vector".into(),
                            ));
                        }
                        for (dst, src) in v.iter_mut().zip(&acc) {
                            *dst = *src as f32;
                        }
                        return Ok(v);
                    }
                    Err(e) => last_err = format!("decoding response: {e}"),
                },
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(XrpoError::Transport(format!(
            "embedding request to {} failed after {} attempts: {last_err}",
            self.url,
            self.max_retries + 1
        )))
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        if text.is_empty() {
            return Err(XrpoError::Domain("cannot embed empty text".into()));
        }
        let path = self.cache_path(text);
        if path.exists() {
            let cached: Vec<f32> = serde_json::from_str(&fs::read_to_string(&path)?)?;
            if cached.len() == self.dim {
                return Ok(cached);
            }
        }
        let v = self.fetch(text)?;
        write_cache(&self.cache_dir, &path, &v)?;
        Ok(v)
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

fn write_cache(dir: &Path, path: &Path, v: &[f32]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(path, serde_json::to_string(v)?)?;
    Ok(())
}
