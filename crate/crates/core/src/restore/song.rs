use serde::{Deserialize, Serialize};

use super::solver::{integrate, SolverConfig, VelocityField};
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::flow::{decode_latent, encode_latent_with, AudioCue, LatentSeq};

/// Output samples are kept inside this range.
pub const SAMPLE_BOUND: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub chunk_seconds: f64,
    pub overlap_seconds: f64,
    pub cue_seconds: f64,
}

impl Default for ChunkPlan {
    fn default() -> Self {
        Self {
            chunk_seconds: 30.0,
            overlap_seconds: 10.0,
            cue_seconds: 10.0,
        }
    }
}

impl ChunkPlan {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.overlap_seconds && self.overlap_seconds < self.chunk_seconds) {
            return Err(Error::Config("overlap must lie strictly between 0 and the chunk length".into()));
        }
        if !(0.0 < self.cue_seconds && self.cue_seconds <= self.overlap_seconds) {
            return Err(Error::Config("cue length must be positive and at most the overlap".into()));
        }
        Ok(())
    }

    fn samples(&self, sample_rate: u32) -> (usize, usize, usize) {
        let n = |s: f64| (s * sample_rate as f64).round() as usize;
        (n(self.chunk_seconds), n(self.overlap_seconds), n(self.cue_seconds))
    }

    /// Segment start samples: multiples of the hop until a segment reaches the end.
    pub fn segment_starts(&self, len: usize, sample_rate: u32) -> Vec<usize> {
        let (chunk, overlap, _) = self.samples(sample_rate);
        let hop = chunk - overlap;
        let mut starts = vec![0];
        while starts[starts.len() - 1] + chunk < len {
            let next = starts[starts.len() - 1] + hop;
            starts.push(next);
        }
        starts
    }
}

/// Per-sample (earlier, later) weights of a linear crossfade over `len` samples.
pub fn crossfade_weights(len: usize) -> Vec<(f64, f64)> {
    (0..len)
        .map(|i| {
            let later = (i as f64 + 0.5) / len as f64;
            (1.0 - later, later)
        })
        .collect()
}

fn frame_len<F: VelocityField + ?Sized>(field: &F) -> Result<usize> {
    let dims = field.latent_dims();
    if dims == 0 || dims % 2 != 0 {
        return Err(Error::Config(format!("latent dims {dims} are not two channels of frames")));
    }
    Ok(dims / 2)
}

/// Restores one segment: encode, embed the prompt (empty means automatic correction), pool the
/// optional cue, integrate and decode. The output has the input's length.
pub fn restore_segment<F: VelocityField + ?Sized>(
    wf: &Waveform,
    prompt_text: &str,
    cue: Option<&Waveform>,
    field: &F,
    cfg: &SolverConfig,
) -> Result<Waveform> {
    let frame_len = frame_len(field)?;
    let x1: LatentSeq = encode_latent_with(wf, frame_len)?;
    let prompt = field.embed(prompt_text);
    let cue = match cue {
        Some(c) => {
            let latent = encode_latent_with(c, frame_len)?;
            AudioCue::from_latent(&latent, c.duration_seconds())
        }
        None => AudioCue::absent(field.latent_dims()),
    };
    let x0 = integrate(field, &x1, &prompt, &cue, cfg)?;
    decode_latent(&x0)
}

/// Restores a whole song in overlapping chunks.
///
/// Segment k > 0 is conditioned on the last `cue_seconds` of segment k-1's output, and
/// consecutive segments are blended with a linear crossfade over their overlap.
pub fn restore_song<F: VelocityField + ?Sized>(
    wf: &Waveform,
    prompt_text: &str,
    field: &F,
    cfg: &SolverConfig,
    plan: &ChunkPlan,
) -> Result<Waveform> {
    plan.validate()?;
    cfg.validate()?;
    let sr = wf.sample_rate();
    let len = wf.len();
    let (chunk, overlap, cue_len) = plan.samples(sr);
    let starts = plan.segment_starts(len, sr);
    let fade = crossfade_weights(overlap);
    let mut out = vec![vec![0.0; len]; 2];
    let mut previous: Option<Waveform> = None;
    for (k, &start) in starts.iter().enumerate() {
        let seg_len = chunk.min(len - start);
        let input = wf.segment(start, seg_len);
        let cue = previous
            .as_ref()
            .map(|p| p.segment(p.len().saturating_sub(cue_len), cue_len.min(p.len())));
        let restored = restore_segment(&input, prompt_text, cue.as_ref(), field, cfg)?.to_stereo();
        let has_next = k + 1 < starts.len();
        for (c, dst) in out.iter_mut().enumerate() {
            for (i, &v) in restored.channel(c).iter().enumerate() {
                let w = if k > 0 && i < overlap {
                    fade[i].1
                } else if has_next && i >= seg_len - overlap {
                    fade[i - (seg_len - overlap)].0
                } else {
                    1.0
                };
                dst[start + i] += w * v;
            }
        }
        previous = Some(restored);
    }
    let mut clamped = 0usize;
    for v in out.iter_mut().flatten() {
        if v.abs() > SAMPLE_BOUND {
            *v = v.clamp(-SAMPLE_BOUND, SAMPLE_BOUND);
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} samples clamped to +-{SAMPLE_BOUND}");
    }
    let [l, r]: [Vec<f64>; 2] = out.try_into().expect("two channels");
    Waveform::stereo(l, r, sr)
}
