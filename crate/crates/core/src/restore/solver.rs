use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{embed_prompt, AudioCue, LatentSeq, PromptEmbedding, VelocityModel};

/// Anything that predicts a latent velocity; the trained model is the main implementor.
pub trait VelocityField: Sync {
    fn latent_dims(&self) -> usize;

    fn velocity(&self, x: ArrayView2<f64>, t: f64, prompt: &PromptEmbedding, cue: &AudioCue) -> Result<Array2<f64>>;

    /// Maps instruction text to an embedding; fields without a prompt table ignore text.
    fn embed(&self, _text: &str) -> PromptEmbedding {
        PromptEmbedding::empty()
    }
}

impl VelocityField for VelocityModel {
    fn latent_dims(&self) -> usize {
        self.config.latent_dims
    }

    fn velocity(&self, x: ArrayView2<f64>, t: f64, prompt: &PromptEmbedding, cue: &AudioCue) -> Result<Array2<f64>> {
        VelocityModel::velocity(self, x, t, prompt, cue)
    }

    fn embed(&self, text: &str) -> PromptEmbedding {
        embed_prompt(text, &self.prompt_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Euler,
    Rk4,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Self::Euler),
            "rk4" => Ok(Self::Rk4),
            other => Err(Error::Config(format!("unknown solver `{other}` (expected euler or rk4)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub steps: usize,
    pub guidance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Euler,
            steps: 10,
            guidance: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn new(kind: SolverKind, steps: usize) -> Self {
        Self {
            kind,
            steps,
            guidance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("solver needs at least one step".into()));
        }
        if !(self.guidance >= 0.0 && self.guidance.is_finite()) {
            return Err(Error::Config(format!("invalid guidance scale {}", self.guidance)));
        }
        Ok(())
    }
}

/// Conditional velocity, extrapolated away from the empty-prompt prediction when `w != 1`.
pub fn guided_velocity<F: VelocityField + ?Sized>(
    field: &F,
    x: ArrayView2<f64>,
    t: f64,
    prompt: &PromptEmbedding,
    cue: &AudioCue,
    w: f64,
) -> Result<Array2<f64>> {
    let cond = field.velocity(x, t, prompt, cue)?;
    if w == 1.0 {
        return Ok(cond);
    }
    let uncond = field.velocity(x, t, &PromptEmbedding::empty(), cue)?;
    Ok(&uncond + &((cond - &uncond) * w))
}

/// Integrates from the degraded latent (progress s = 0, model time t = 1) to s = 1.
///
/// Uniform steps h = 1/steps; the model is queried at t = 1 - s and the state moves by +h v.
pub fn integrate<F: VelocityField + ?Sized>(
    field: &F,
    x1: &LatentSeq,
    prompt: &PromptEmbedding,
    cue: &AudioCue,
    cfg: &SolverConfig,
) -> Result<LatentSeq> {
    cfg.validate()?;
    let h = 1.0 / cfg.steps as f64;
    let v = |x: &Array2<f64>, s: f64| guided_velocity(field, x.view(), 1.0 - s, prompt, cue, cfg.guidance);
    let mut x = x1.data.clone();
    for i in 0..cfg.steps {
        let s = i as f64 * h;
        match cfg.kind {
            SolverKind::Euler => {
                let k1 = v(&x, s)?;
                x.scaled_add(h, &k1);
            }
            SolverKind::Rk4 => {
                let k1 = v(&x, s)?;
                let k2 = v(&(&x + &(&k1 * (h / 2.0))), s + h / 2.0)?;
                let k3 = v(&(&x + &(&k2 * (h / 2.0))), s + h / 2.0)?;
                let k4 = v(&(&x + &(&k3 * h)), s + h)?;
                x.scaled_add(h / 6.0, &(k1 + &k2 * 2.0 + &k3 * 2.0 + k4));
            }
        }
        if x.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFiniteValue(format!("latent state after step {}", i + 1)));
        }
    }
    x1.with_data(x)
}
