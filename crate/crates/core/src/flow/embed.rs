use ndarray::Array1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::codec::{pool_frames, LatentSeq};
use crate::dataset::{split_sentences, PromptBank};

pub const FALLBACK_ROWS: usize = 256;
pub const TIME_EMBED_DIM: usize = 32;

/// Maps instruction sentences to rows of the learned prompt table.
///
/// Row 0 is shared by the generic phrases, rows `1..=templates.len()` belong to the bank's
/// templates and the last [`FALLBACK_ROWS`] rows take hashed unknown sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptIndex {
    pub generic: Vec<String>,
    pub templates: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptSource {
    Empty,
    Generic,
    Templates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptEmbedding {
    pub rows: Vec<usize>,
    pub source: PromptSource,
}

impl PromptEmbedding {
    pub fn empty() -> Self {
        Self {
            rows: Vec::new(),
            source: PromptSource::Empty,
        }
    }
}

impl PromptIndex {
    pub fn from_bank(bank: &PromptBank) -> Self {
        let generic = bank.generic.clone();
        let templates = bank
            .vocabulary()
            .into_iter()
            .filter(|s| !generic.contains(s))
            .collect();
        Self { generic, templates }
    }

    pub fn num_rows(&self) -> usize {
        1 + self.templates.len() + FALLBACK_ROWS
    }

    fn fallback_row(&self, sentence: &str) -> usize {
        let digest = Sha256::digest(sentence.as_bytes());
        let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        1 + self.templates.len() + (h % FALLBACK_ROWS as u64) as usize
    }

    pub fn row_of(&self, sentence: &str) -> usize {
        if self.generic.iter().any(|g| g == sentence) {
            0
        } else if let Some(i) = self.templates.iter().position(|t| t == sentence) {
            1 + i
        } else {
            self.fallback_row(sentence)
        }
    }
}

/// Splits `text` into sentences and looks each one up; the model averages the selected rows.
pub fn embed_prompt(text: &str, index: &PromptIndex) -> PromptEmbedding {
    if text.trim().is_empty() {
        return PromptEmbedding::empty();
    }
    let vocab: Vec<String> = index.generic.iter().chain(&index.templates).cloned().collect();
    let rows: Vec<usize> = split_sentences(text, &vocab)
        .into_iter()
        .map(|s| index.row_of(s))
        .collect();
    let source = if rows.iter().all(|&r| r == 0) {
        PromptSource::Generic
    } else {
        PromptSource::Templates
    };
    PromptEmbedding { rows, source }
}

/// Pooled clean-audio reference: the temporal mean of a clean latent excerpt.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioCue {
    pub vector: Array1<f64>,
    pub seconds: f64,
    pub present: bool,
}

impl AudioCue {
    pub fn absent(dims: usize) -> Self {
        Self {
            vector: Array1::zeros(dims),
            seconds: 0.0,
            present: false,
        }
    }

    /// Mean of the first `seconds` of `latent` (the whole latent if shorter).
    pub fn from_latent(latent: &LatentSeq, seconds: f64) -> Self {
        let frames = (seconds * latent.frame_rate()).round() as usize;
        Self {
            vector: pool_frames(latent.data.view(), frames),
            seconds,
            present: true,
        }
    }
}

/// Sinusoidal embedding of t in [0, 1] (scaled by 1000, geometric frequencies).
pub fn time_embedding(t: f64) -> Array1<f64> {
    let half = TIME_EMBED_DIM / 2;
    let mut out = Array1::zeros(TIME_EMBED_DIM);
    for i in 0..half {
        let freq = (-(10_000f64.ln()) * i as f64 / half as f64).exp();
        let arg = 1000.0 * t * freq;
        out[i] = arg.sin();
        out[half + i] = arg.cos();
    }
    out
}
