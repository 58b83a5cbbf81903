use ndarray::{Array1, Array2, ArrayView2, Axis};
use rustdct::DctPlanner;

use crate::audio::Waveform;
use crate::error::{Error, Result};

pub const DEFAULT_FRAME_LEN: usize = 512;
const CHANNELS: usize = 2;

/// Frame-wise orthonormal DCT-II representation of a stereo waveform.
///
/// Row `i` holds frame `i` of the left channel followed by the same frame of the right channel,
/// so `dims = 2 * frame_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSeq {
    pub data: Array2<f64>,
    pub frame_len: usize,
    pub sample_rate: u32,
    /// Waveform length before padding to whole frames.
    pub samples: usize,
}

impl LatentSeq {
    pub fn new(data: Array2<f64>, frame_len: usize, sample_rate: u32, samples: usize) -> Result<Self> {
        if data.ncols() != CHANNELS * frame_len {
            return Err(Error::ShapeMismatch(format!(
                "latent has {} dims, expected {}",
                data.ncols(),
                CHANNELS * frame_len
            )));
        }
        Ok(Self {
            data,
            frame_len,
            sample_rate,
            samples,
        })
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> usize {
        self.data.ncols()
    }

    /// Frames per second.
    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.frame_len as f64
    }

    pub fn with_data(&self, data: Array2<f64>) -> Result<Self> {
        if data.dim() != self.data.dim() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", data.dim(), self.data.dim())));
        }
        Ok(Self { data, ..self.clone() })
    }
}

fn scale(n: usize) -> (f64, f64) {
    ((1.0 / n as f64).sqrt(), (2.0 / n as f64).sqrt())
}

/// Encodes a waveform (mono is duplicated to stereo), zero-padding to whole frames.
pub fn encode_latent_with(wf: &Waveform, frame_len: usize) -> Result<LatentSeq> {
    if frame_len == 0 {
        return Err(Error::Config("frame length must be positive".into()));
    }
    let stereo = wf.to_stereo();
    let frames = wf.len().div_ceil(frame_len).max(1);
    let dct = DctPlanner::new().plan_dct2(frame_len);
    let (s0, sk) = scale(frame_len);
    let mut data = Array2::zeros((frames, CHANNELS * frame_len));
    let mut buf = vec![0.0; frame_len];
    for (c, ch) in stereo.channels().iter().enumerate() {
        for f in 0..frames {
            buf.fill(0.0);
            let start = f * frame_len;
            let end = (start + frame_len).min(ch.len());
            if start < end {
                buf[..end - start].copy_from_slice(&ch[start..end]);
            }
            dct.process_dct2(&mut buf);
            let mut row = data.row_mut(f);
            for (k, v) in buf.iter().enumerate() {
                row[c * frame_len + k] = v * if k == 0 { s0 } else { sk };
            }
        }
    }
    LatentSeq::new(data, frame_len, wf.sample_rate(), wf.len())
}

pub fn encode_latent(wf: &Waveform) -> Result<LatentSeq> {
    encode_latent_with(wf, DEFAULT_FRAME_LEN)
}

/// Inverse of [`encode_latent_with`]; trims the frame padding.
pub fn decode_latent(l: &LatentSeq) -> Result<Waveform> {
    let n = l.frame_len;
    let dct = DctPlanner::new().plan_dct3(n);
    let (s0, sk) = scale(n);
    let mut channels = vec![Vec::with_capacity(l.frames() * n); CHANNELS];
    let mut buf = vec![0.0; n];
    for row in l.data.rows() {
        for (c, out) in channels.iter_mut().enumerate() {
            for k in 0..n {
                // the unnormalized DCT-III halves the DC term
                buf[k] = row[c * n + k] * if k == 0 { 2.0 * s0 } else { sk };
            }
            dct.process_dct3(&mut buf);
            out.extend_from_slice(&buf);
        }
    }
    for c in &mut channels {
        c.truncate(l.samples);
    }
    Waveform::new(channels, l.sample_rate)
}

/// Temporal mean of the first `frames` rows (at least one).
pub fn pool_frames(data: ArrayView2<f64>, frames: usize) -> Array1<f64> {
    let n = frames.clamp(1, data.nrows().max(1));
    data.slice(ndarray::s![..n, ..])
        .mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(data.ncols()))
}
