use std::path::Path;

use ndarray::{s, Array2};
use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::codec::{encode_latent_with, pool_frames, LatentSeq, DEFAULT_FRAME_LEN};
use super::embed::{embed_prompt, AudioCue, PromptEmbedding, PromptIndex};
use super::model::{ModelConfig, Params, VelocityModel};
use super::timestep::{make_training_example, FlowBatch};
use crate::audio::read_wav;
use crate::dataset::read_manifest;
use crate::error::{Error, Result};
use crate::rng::{child_rng, Rng};

/// Conditioning dropout used while training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dropout {
    pub empty_prompt: f64,
    pub generic_prompt: f64,
    pub cue: f64,
    pub cue_min_seconds: f64,
    pub cue_max_seconds: f64,
}

impl Default for Dropout {
    fn default() -> Self {
        Self {
            empty_prompt: 0.10,
            generic_prompt: 0.10,
            cue: 0.25,
            cue_min_seconds: 5.0,
            cue_max_seconds: 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PromptChoice {
    Empty,
    Generic(usize),
    Original,
}

/// Decides the prompt replacement and, when the cue is active, its length in seconds.
pub fn sample_conditioning(dropout: &Dropout, generic_count: usize, rng: &mut Rng) -> (PromptChoice, Option<f64>) {
    let r: f64 = rng.random();
    let prompt = if r < dropout.empty_prompt {
        PromptChoice::Empty
    } else if r < dropout.empty_prompt + dropout.generic_prompt && generic_count > 0 {
        PromptChoice::Generic(rng.random_range(0..generic_count))
    } else {
        PromptChoice::Original
    };
    let cue = rng
        .random_bool(dropout.cue.clamp(0.0, 1.0))
        .then(|| rng.random_range(dropout.cue_min_seconds..=dropout.cue_max_seconds));
    (prompt, cue)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Params,
    v: Params,
}

impl Adam {
    pub fn new(params: &Params, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn update(&mut self, params: &mut Params, grads: &Params) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, p), (_, g)), (_, m)), (_, v)) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Optimizer state plus the conditioning regime.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub adam: Adam,
    pub dropout: Dropout,
}

impl TrainState {
    pub fn new(model: &VelocityModel, lr: f64) -> Self {
        Self {
            adam: Adam::new(&model.params, lr),
            dropout: Dropout::default(),
        }
    }
}

/// One (clean, degraded) latent pair with its instruction and cue material.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSample<'a> {
    pub x0: ndarray::ArrayView2<'a, f64>,
    pub x1: ndarray::ArrayView2<'a, f64>,
    pub prompt: &'a str,
    /// Clean latent the pooled cue is taken from (its leading seconds).
    pub cue_source: ndarray::ArrayView2<'a, f64>,
    pub frame_rate: f64,
}

/// Applies conditioning dropout, computes the mean-squared velocity loss and takes one Adam step.
pub fn train_step(model: &mut VelocityModel, samples: &[TrainingSample], rng: &mut Rng, state: &mut TrainState) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("empty training batch".into()));
    }
    let mut examples: Vec<(FlowBatch, PromptEmbedding, AudioCue)> = Vec::with_capacity(samples.len());
    for s in samples {
        let (choice, cue_seconds) = sample_conditioning(&state.dropout, model.prompt_index.generic.len(), rng);
        let prompt = match choice {
            PromptChoice::Empty => PromptEmbedding::empty(),
            PromptChoice::Generic(i) => embed_prompt(&model.prompt_index.generic[i], &model.prompt_index),
            PromptChoice::Original => embed_prompt(s.prompt, &model.prompt_index),
        };
        let cue = match cue_seconds {
            Some(sec) => AudioCue {
                vector: pool_frames(s.cue_source, (sec * s.frame_rate).round() as usize),
                seconds: sec,
                present: true,
            },
            None => AudioCue::absent(model.config.latent_dims),
        };
        let batch = make_training_example(&s.x0.to_owned(), &s.x1.to_owned(), rng)?;
        examples.push((batch, prompt, cue));
    }
    let (loss, grads) = model.loss_and_gradients(&examples)?;
    if !loss.is_finite() || !grads.is_finite() {
        let ts: Vec<f64> = examples.iter().map(|(b, _, _)| b.t).collect();
        return Err(Error::NonFiniteValue(format!(
            "loss {loss} at optimizer step {} (timesteps {ts:?})",
            state.adam.step + 1
        )));
    }
    state.adam.update(&mut model.params, &grads);
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub steps: usize,
    pub seed: u64,
    pub hidden: usize,
    pub blocks: usize,
    pub prompt_dim: usize,
    pub frame_len: usize,
    /// Random window length in frames per example; `None` trains on whole clips.
    pub crop_frames: Option<usize>,
    pub dropout: Dropout,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch: 16,
            steps: 1000,
            seed: 0,
            hidden: 256,
            blocks: 4,
            prompt_dim: 64,
            frame_len: DEFAULT_FRAME_LEN,
            crop_frames: Some(128),
            dropout: Dropout::default(),
            log_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            latent_dims: 2 * self.frame_len,
            hidden: self.hidden,
            blocks: self.blocks,
            prompt_dim: self.prompt_dim,
            seed: self.seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.frame_len == 0 || self.crop_frames == Some(0) {
            return Err(Error::Config("batch, frame_len and crop_frames must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Encoded training pair from a dataset directory.
#[derive(Debug, Clone)]
pub struct LatentPair {
    pub clean: LatentSeq,
    pub degraded: LatentSeq,
    pub prompts: Vec<String>,
}

/// Encodes every manifest row of `data_dir` (clean and degraded paths relative to it).
pub fn load_pairs(data_dir: impl AsRef<Path>, frame_len: usize) -> Result<Vec<LatentPair>> {
    let dir = data_dir.as_ref();
    let rows = read_manifest(dir.join("manifest.jsonl"))?;
    rows.iter()
        .map(|r| {
            let clean = read_wav(dir.join(&r.clean_path))?;
            let degraded = read_wav(dir.join(&r.degraded_path))?;
            if clean.len() != degraded.len() {
                return Err(Error::LengthMismatch(clean.len(), degraded.len()));
            }
            Ok(LatentPair {
                clean: encode_latent_with(&clean, frame_len)?,
                degraded: encode_latent_with(&degraded, frame_len)?,
                prompts: r.prompts.clone(),
            })
        })
        .collect()
}

/// Trains a fresh model on `pairs` and returns it with the per-step losses.
pub fn train_model(cfg: &TrainConfig, pairs: &[LatentPair], index: PromptIndex) -> Result<(VelocityModel, Vec<f64>)> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Config("no training pairs".into()));
    }
    let mut model = VelocityModel::new(cfg.model_config(), index)?;
    let mut state = TrainState {
        adam: Adam::new(&model.params, cfg.lr),
        dropout: cfg.dropout,
    };
    let mut rng = child_rng(cfg.seed, "train");
    let mut losses = Vec::with_capacity(cfg.steps);
    let empty = String::new();
    for step in 0..cfg.steps {
        let mut windows: Vec<(&LatentPair, usize, usize, &str)> = Vec::with_capacity(cfg.batch);
        for _ in 0..cfg.batch {
            let pair = pairs.choose(&mut rng).expect("nonempty");
            let frames = pair.clean.frames();
            let len = cfg.crop_frames.map_or(frames, |c| c.min(frames));
            let start = rng.random_range(0..=frames - len);
            let prompt = pair.prompts.choose(&mut rng).unwrap_or(&empty);
            windows.push((pair, start, len, prompt.as_str()));
        }
        let samples: Vec<TrainingSample> = windows
            .iter()
            .map(|&(p, start, len, prompt)| TrainingSample {
                x0: p.clean.data.slice(s![start..start + len, ..]),
                x1: p.degraded.data.slice(s![start..start + len, ..]),
                prompt,
                cue_source: p.clean.data.view(),
                frame_rate: p.clean.frame_rate(),
            })
            .collect();
        let loss = train_step(&mut model, &samples, &mut rng, &mut state)?;
        if cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps) {
            log::info!("step {step}: loss {loss:.6}");
        }
        losses.push(loss);
    }
    Ok((model, losses))
}

/// Convenience for tests and examples: a latent-only pair without audio.
pub fn latent_pair(clean: Array2<f64>, degraded: Array2<f64>, frame_len: usize, prompts: Vec<String>) -> Result<LatentPair> {
    let samples = clean.nrows() * frame_len;
    Ok(LatentPair {
        clean: LatentSeq::new(clean, frame_len, 44_100, samples)?,
        degraded: LatentSeq::new(degraded, frame_len, 44_100, samples)?,
        prompts,
    })
}
