use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::embed::{time_embedding, AudioCue, PromptEmbedding, PromptIndex, TIME_EMBED_DIM};
use super::timestep::FlowBatch;
use crate::error::{Error, Result};
use crate::rng::{child_rng, Rng};

const LN_EPS: f64 = 1e-5;
/// Temporal mixing reaches two frames to each side.
pub const MIX_TAPS: usize = 5;
const MIX_HALF: isize = (MIX_TAPS / 2) as isize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub latent_dims: usize,
    pub hidden: usize,
    pub blocks: usize,
    pub prompt_dim: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(latent_dims: usize) -> Self {
        Self {
            latent_dims,
            hidden: 256,
            blocks: 4,
            prompt_dim: 64,
            seed: 0,
        }
    }

    /// Length of the conditioning vector `[t-embedding | prompt | cue | cue flag]`.
    pub fn cond_dim(&self) -> usize {
        TIME_EMBED_DIM + self.prompt_dim + self.latent_dims + 1
    }

    fn validate(&self) -> Result<()> {
        if self.latent_dims == 0 || self.hidden == 0 || self.prompt_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub scale_w: Array2<f64>,
    pub scale_b: Array1<f64>,
    pub shift_w: Array2<f64>,
    pub shift_b: Array1<f64>,
    /// Per-channel weights of the ±2-frame temporal mix, one row per tap.
    pub mix: Array2<f64>,
    pub proj_w: Array2<f64>,
    pub proj_b: Array1<f64>,
}

/// All trainable tensors; gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub in_w: Array2<f64>,
    pub in_b: Array1<f64>,
    pub blocks: Vec<BlockParams>,
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
    pub prompt_table: Array2<f64>,
}

impl Params {
    fn zeros(cfg: &ModelConfig, prompt_rows: usize) -> Self {
        let (d, h, c) = (cfg.latent_dims, cfg.hidden, cfg.cond_dim());
        Self {
            in_w: Array2::zeros((d, h)),
            in_b: Array1::zeros(h),
            blocks: (0..cfg.blocks)
                .map(|_| BlockParams {
                    scale_w: Array2::zeros((c, h)),
                    scale_b: Array1::zeros(h),
                    shift_w: Array2::zeros((c, h)),
                    shift_b: Array1::zeros(h),
                    mix: Array2::zeros((MIX_TAPS, h)),
                    proj_w: Array2::zeros((h, h)),
                    proj_b: Array1::zeros(h),
                })
                .collect(),
            out_w: Array2::zeros((h, d)),
            out_b: Array1::zeros(d),
            prompt_table: Array2::zeros((prompt_rows, cfg.prompt_dim)),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Named flat views in a fixed order (checkpoints rely on it).
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        fn sl<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        let mut out = vec![("in_w".to_string(), sl(&self.in_w)), ("in_b".to_string(), sl(&self.in_b))];
        for (k, b) in self.blocks.iter().enumerate() {
            out.extend([
                (format!("block{k}.scale_w"), sl(&b.scale_w)),
                (format!("block{k}.scale_b"), sl(&b.scale_b)),
                (format!("block{k}.shift_w"), sl(&b.shift_w)),
                (format!("block{k}.shift_b"), sl(&b.shift_b)),
                (format!("block{k}.mix"), sl(&b.mix)),
                (format!("block{k}.proj_w"), sl(&b.proj_w)),
                (format!("block{k}.proj_b"), sl(&b.proj_b)),
            ]);
        }
        out.extend([
            ("out_w".to_string(), sl(&self.out_w)),
            ("out_b".to_string(), sl(&self.out_b)),
            ("prompt_table".to_string(), sl(&self.prompt_table)),
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        fn sl<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        let mut out = vec![
            ("in_w".to_string(), sl(&mut self.in_w)),
            ("in_b".to_string(), sl(&mut self.in_b)),
        ];
        for (k, b) in self.blocks.iter_mut().enumerate() {
            out.push((format!("block{k}.scale_w"), sl(&mut b.scale_w)));
            out.push((format!("block{k}.scale_b"), sl(&mut b.scale_b)));
            out.push((format!("block{k}.shift_w"), sl(&mut b.shift_w)));
            out.push((format!("block{k}.shift_b"), sl(&mut b.shift_b)));
            out.push((format!("block{k}.mix"), sl(&mut b.mix)));
            out.push((format!("block{k}.proj_w"), sl(&mut b.proj_w)));
            out.push((format!("block{k}.proj_b"), sl(&mut b.proj_b)));
        }
        out.push(("out_w".to_string(), sl(&mut self.out_w)));
        out.push(("out_b".to_string(), sl(&mut self.out_b)));
        out.push(("prompt_table".to_string(), sl(&mut self.prompt_table)));
        out
    }

    pub fn add_assign(&mut self, other: &Params) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// Conditioned velocity network over latent frame sequences.
///
/// Each frame is projected to `hidden` channels, passed through residual blocks
/// (layer norm, scale/shift from the conditioning vector, ±2-frame depthwise mix, pointwise
/// projection, SiLU) and projected back. The output projection starts at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    pub config: ModelConfig,
    pub prompt_index: PromptIndex,
    pub params: Params,
}

struct BlockCache {
    norm: Array2<f64>,
    inv_std: Array1<f64>,
    scale: Array1<f64>,
    modulated: Array2<f64>,
    mixed: Array2<f64>,
    pre_act: Array2<f64>,
}

struct Cache {
    cond: Array1<f64>,
    hidden: Vec<Array2<f64>>,
    blocks: Vec<BlockCache>,
}

fn gaussian(rng: &mut Rng, shape: (usize, usize), std: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || {
        let z: f64 = StandardNormal.sample(rng);
        z * std
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    a.insert_axis(Axis(1)).dot(&b.insert_axis(Axis(0)))
}

fn temporal_mix(m: &Array2<f64>, taps: &Array2<f64>) -> Array2<f64> {
    let frames = m.nrows() as isize;
    let mut out = Array2::zeros(m.dim());
    for j in 0..MIX_TAPS {
        let off = j as isize - MIX_HALF;
        let (lo, hi) = ((-off).max(0), (frames - off).min(frames));
        if lo >= hi {
            continue;
        }
        let src = m.slice(s![lo + off..hi + off, ..]);
        let mut dst = out.slice_mut(s![lo..hi, ..]);
        dst += &(&src * &taps.row(j));
    }
    out
}

impl VelocityModel {
    pub fn new(config: ModelConfig, prompt_index: PromptIndex) -> Result<Self> {
        config.validate()?;
        let mut params = Params::zeros(&config, prompt_index.num_rows());
        let mut rng = child_rng(config.seed, "model-init");
        let (d, h, c) = (config.latent_dims, config.hidden, config.cond_dim());
        params.in_w = gaussian(&mut rng, (d, h), (1.0 / d as f64).sqrt());
        for b in &mut params.blocks {
            b.scale_w = gaussian(&mut rng, (c, h), 0.1 / (c as f64).sqrt());
            b.shift_w = gaussian(&mut rng, (c, h), 0.1 / (c as f64).sqrt());
            b.mix = gaussian(&mut rng, (MIX_TAPS, h), 0.1);
            b.mix.row_mut(MIX_TAPS / 2).mapv_inplace(|v| v + 1.0);
            b.proj_w = gaussian(&mut rng, (h, h), (1.0 / h as f64).sqrt());
        }
        params.prompt_table = gaussian(&mut rng, (prompt_index.num_rows(), config.prompt_dim), 0.1);
        Ok(Self {
            config,
            prompt_index,
            params,
        })
    }

    pub fn prompt_vector(&self, prompt: &PromptEmbedding) -> Array1<f64> {
        let mut v = Array1::zeros(self.config.prompt_dim);
        if prompt.rows.is_empty() {
            return v;
        }
        for &r in &prompt.rows {
            v += &self.params.prompt_table.row(r);
        }
        v / prompt.rows.len() as f64
    }

    fn condition(&self, t: f64, prompt: &PromptEmbedding, cue: &AudioCue) -> Result<Array1<f64>> {
        let cfg = &self.config;
        if cue.vector.len() != cfg.latent_dims {
            return Err(Error::ShapeMismatch(format!(
                "cue has {} dims, model expects {}",
                cue.vector.len(),
                cfg.latent_dims
            )));
        }
        if let Some(&r) = prompt.rows.iter().find(|&&r| r >= self.params.prompt_table.nrows()) {
            return Err(Error::ShapeMismatch(format!("prompt row {r} out of range")));
        }
        let mut c = Array1::zeros(cfg.cond_dim());
        c.slice_mut(s![..TIME_EMBED_DIM]).assign(&time_embedding(t));
        let p0 = TIME_EMBED_DIM;
        c.slice_mut(s![p0..p0 + cfg.prompt_dim]).assign(&self.prompt_vector(prompt));
        let c0 = p0 + cfg.prompt_dim;
        c.slice_mut(s![c0..c0 + cfg.latent_dims]).assign(&cue.vector);
        c[c0 + cfg.latent_dims] = if cue.present { 1.0 } else { 0.0 };
        Ok(c)
    }

    fn forward_cached(&self, x: ArrayView2<f64>, t: f64, prompt: &PromptEmbedding, cue: &AudioCue) -> Result<(Array2<f64>, Cache)> {
        if x.ncols() != self.config.latent_dims {
            return Err(Error::ShapeMismatch(format!(
                "input has {} dims, model expects {}",
                x.ncols(),
                self.config.latent_dims
            )));
        }
        let p = &self.params;
        let cond = self.condition(t, prompt, cue)?;
        let mut h = x.dot(&p.in_w) + &p.in_b;
        let mut hidden = vec![h.clone()];
        let mut blocks = Vec::with_capacity(p.blocks.len());
        for b in &p.blocks {
            let mean = h.mean_axis(Axis(1)).expect("nonempty hidden");
            let centered = &h - &mean.view().insert_axis(Axis(1));
            let var = centered.mapv(|v| v * v).mean_axis(Axis(1)).expect("nonempty hidden");
            let inv_std = var.mapv(|v| 1.0 / (v + LN_EPS).sqrt());
            let norm = &centered * &inv_std.view().insert_axis(Axis(1));
            let scale = cond.dot(&b.scale_w) + &b.scale_b;
            let shift = cond.dot(&b.shift_w) + &b.shift_b;
            let modulated = &norm * &scale.mapv(|v| 1.0 + v) + &shift;
            let mixed = temporal_mix(&modulated, &b.mix);
            let pre_act = mixed.dot(&b.proj_w) + &b.proj_b;
            h = &h + &pre_act.mapv(|y| y * sigmoid(y));
            hidden.push(h.clone());
            blocks.push(BlockCache {
                norm,
                inv_std,
                scale,
                modulated,
                mixed,
                pre_act,
            });
        }
        let out = h.dot(&p.out_w) + &p.out_b;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("velocity output (non-finite parameters?)".into()));
        }
        Ok((out, Cache { cond, hidden, blocks }))
    }

    /// Predicted velocity for `x` at time `t`; same shape as `x`.
    pub fn velocity(&self, x: ArrayView2<f64>, t: f64, prompt: &PromptEmbedding, cue: &AudioCue) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x, t, prompt, cue)?.0)
    }

    /// Back-propagates `d_out` (gradient of the loss w.r.t. the output) into `grads`.
    fn backward(&self, x: ArrayView2<f64>, prompt: &PromptEmbedding, cache: &Cache, d_out: &Array2<f64>, grads: &mut Params) {
        let p = &self.params;
        let cfg = &self.config;
        let last = cache.hidden.last().expect("input hidden state");
        grads.out_w += &last.t().dot(d_out);
        grads.out_b += &d_out.sum_axis(Axis(0));
        let mut dh = d_out.dot(&p.out_w.t());
        let mut d_cond = Array1::<f64>::zeros(cache.cond.len());

        for (k, (b, bc)) in p.blocks.iter().zip(&cache.blocks).enumerate().rev() {
            let g = &mut grads.blocks[k];
            let sig = bc.pre_act.mapv(sigmoid);
            let d_pre = &dh * &(&sig * &(&bc.pre_act * &sig.mapv(|s| 1.0 - s) + 1.0));
            g.proj_w += &bc.mixed.t().dot(&d_pre);
            g.proj_b += &d_pre.sum_axis(Axis(0));
            let d_mixed = d_pre.dot(&b.proj_w.t());

            // transpose of the temporal mix
            let frames = d_mixed.nrows() as isize;
            let mut d_mod = Array2::<f64>::zeros(d_mixed.dim());
            for j in 0..MIX_TAPS {
                let off = j as isize - MIX_HALF;
                let (lo, hi) = ((-off).max(0), (frames - off).min(frames));
                if lo >= hi {
                    continue;
                }
                let dm = d_mixed.slice(s![lo..hi, ..]);
                let src = bc.modulated.slice(s![lo + off..hi + off, ..]);
                let mut tap = g.mix.row_mut(j);
                tap += &(&dm * &src).sum_axis(Axis(0));
                let mut dst = d_mod.slice_mut(s![lo + off..hi + off, ..]);
                dst += &(&dm * &b.mix.row(j));
            }

            let d_scale = (&d_mod * &bc.norm).sum_axis(Axis(0));
            let d_shift = d_mod.sum_axis(Axis(0));
            g.scale_w += &outer(cache.cond.view(), d_scale.view());
            g.scale_b += &d_scale;
            g.shift_w += &outer(cache.cond.view(), d_shift.view());
            g.shift_b += &d_shift;
            d_cond += &b.scale_w.dot(&d_scale);
            d_cond += &b.shift_w.dot(&d_shift);

            let d_norm = &d_mod * &bc.scale.mapv(|v| 1.0 + v);
            let mean_dn = d_norm.mean_axis(Axis(1)).expect("nonempty");
            let mean_dnn = (&d_norm * &bc.norm).mean_axis(Axis(1)).expect("nonempty");
            let d_ln = (&d_norm - &mean_dn.insert_axis(Axis(1)) - &bc.norm * &mean_dnn.insert_axis(Axis(1)))
                * &bc.inv_std.view().insert_axis(Axis(1));
            dh += &d_ln;
        }
        grads.in_w += &x.t().dot(&dh);
        grads.in_b += &dh.sum_axis(Axis(0));

        if !prompt.rows.is_empty() {
            let p0 = TIME_EMBED_DIM;
            let d_prompt = d_cond.slice(s![p0..p0 + cfg.prompt_dim]).to_owned() / prompt.rows.len() as f64;
            for &r in &prompt.rows {
                let mut row = grads.prompt_table.row_mut(r);
                row += &d_prompt;
            }
        }
    }

    /// Sum of squared errors of one example and its gradient, scaled by `1 / normalizer`.
    ///
    /// With `normalizer` = total entry count of a batch, summing over the batch gives the
    /// mean-squared-error loss and its exact gradient.
    pub fn example_loss_grad(
        &self,
        batch: &FlowBatch,
        prompt: &PromptEmbedding,
        cue: &AudioCue,
        normalizer: f64,
    ) -> Result<(f64, Params)> {
        let (out, cache) = self.forward_cached(batch.x_t.view(), batch.t, prompt, cue)?;
        let diff = &out - &batch.v_t;
        let loss = diff.iter().map(|v| v * v).sum::<f64>() / normalizer;
        let d_out = diff * (2.0 / normalizer);
        let mut grads = self.params.zeros_like();
        self.backward(batch.x_t.view(), prompt, &cache, &d_out, &mut grads);
        Ok((loss, grads))
    }

    /// Mean squared velocity error over the examples and its gradient.
    pub fn loss_and_gradients(&self, examples: &[(FlowBatch, PromptEmbedding, AudioCue)]) -> Result<(f64, Params)> {
        use rayon::prelude::*;
        let total: usize = examples.iter().map(|(b, _, _)| b.v_t.len()).sum();
        if total == 0 {
            return Err(Error::Config("empty batch".into()));
        }
        let parts: Vec<Result<(f64, Params)>> = examples
            .par_iter()
            .map(|(b, p, c)| self.example_loss_grad(b, p, c, total as f64))
            .collect();
        let mut loss = 0.0;
        let mut grads = self.params.zeros_like();
        // summed in input order so results do not depend on scheduling
        for part in parts {
            let (l, g) = part?;
            loss += l;
            grads.add_assign(&g);
        }
        Ok((loss, grads))
    }
}
