//! Waveform container, WAV I/O, normalization and spectral analysis.

mod resample;
pub mod spectral;
mod wav;

pub use resample::resample;
pub use spectral::{mel_spectrogram, mel_spectrogram_signal, stft, stft_signal, MelFilterbank, SpectralConfig, Spectrogram, Window};
pub use wav::{load_audio, read_wav, write_wav};

use crate::error::{Error, Result};

/// Sample rate used for all internal processing.
pub const SAMPLE_RATE: u32 = 44_100;

/// Planar multi-channel audio with `f64` samples at nominal full scale ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if channels.is_empty() || channels.len() > 2 {
            return Err(Error::InvalidWaveform(format!(
                "expected 1 or 2 channels, got {}",
                channels.len()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidWaveform("sample rate must be > 0".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidWaveform("channel lengths differ".into()));
        }
        if len == 0 {
            return Err(Error::EmptyAudio);
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn stereo(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![left, right], sample_rate)
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    /// Stereo silence of `len` samples.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::stereo(vec![0.0; len], vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn is_stereo(&self) -> bool {
        self.channels.len() == 2
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Largest absolute sample over all channels.
    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    /// Root-mean-square over every sample of every channel.
    pub fn rms(&self) -> f64 {
        let n = (self.len() * self.num_channels()) as f64;
        let sum: f64 = self
            .channels
            .iter()
            .flat_map(|c| c.iter())
            .map(|x| x * x)
            .sum();
        (sum / n).sqrt()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (ch, samples) in self.channels.iter().enumerate() {
            if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { channel: ch, index });
            }
        }
        Ok(())
    }

    /// Applies `f` to every sample, keeping layout and sample rate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|&x| f(x)).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.map(|x| x * gain)
    }

    /// Replaces each channel by `f(channel)`; lengths must be preserved.
    pub fn map_channels(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let channels: Vec<Vec<f64>> = self.channels.iter().map(|c| f(c)).collect();
        debug_assert!(channels.iter().all(|c| c.len() == self.len()));
        Self {
            channels,
            sample_rate: self.sample_rate,
        }
    }

    /// Duplicates a mono waveform into two identical channels.
    pub fn to_stereo(&self) -> Self {
        match self.channels.len() {
            2 => self.clone(),
            _ => Self {
                channels: vec![self.channels[0].clone(), self.channels[0].clone()],
                sample_rate: self.sample_rate,
            },
        }
    }

    /// Average of all channels.
    pub fn mid_channel(&self) -> Vec<f64> {
        if self.channels.len() == 1 {
            return self.channels[0].clone();
        }
        self.channels[0]
            .iter()
            .zip(&self.channels[1])
            .map(|(l, r)| (l + r) / 2.0)
            .collect()
    }

    /// Copies `len` samples starting at `start`, zero-padding past the end.
    pub fn segment(&self, start: usize, len: usize) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|c| {
                let mut out = vec![0.0; len];
                if start < c.len() {
                    let end = (start + len).min(c.len());
                    out[..end - start].copy_from_slice(&c[start..end]);
                }
                out
            })
            .collect();
        Self {
            channels,
            sample_rate: self.sample_rate,
        }
    }

    /// Rounds every sample to the nearest `f32`, the precision of the WAV payload.
    pub fn quantize_f32(&self) -> Self {
        self.map(|x| x as f32 as f64)
    }
}

/// Scales by a single global gain so that the peak over both channels equals `target`.
pub fn peak_normalize(wf: &Waveform, target: f64) -> Result<Waveform> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidWaveform(format!(
            "normalization target {target} outside (0, 1]"
        )));
    }
    let peak = wf.peak();
    if peak <= 0.0 {
        return Err(Error::Silent("cannot normalize an all-zero waveform"));
    }
    Ok(wf.scaled(target / peak))
}

/// Splits a stereo waveform into mid = (L+R)/2 and side = (L-R)/2, each mono.
pub fn mid_side(wf: &Waveform) -> Result<(Waveform, Waveform)> {
    if !wf.is_stereo() {
        return Err(Error::NotStereo);
    }
    let (l, r) = (wf.channel(0), wf.channel(1));
    let mid = l.iter().zip(r).map(|(a, b)| (a + b) / 2.0).collect();
    let side = l.iter().zip(r).map(|(a, b)| (a - b) / 2.0).collect();
    Ok((
        Waveform::mono(mid, wf.sample_rate())?,
        Waveform::mono(side, wf.sample_rate())?,
    ))
}

/// Inverse of [`mid_side`]: L = mid + side, R = mid - side.
pub fn from_mid_side(mid: &Waveform, side: &Waveform) -> Result<Waveform> {
    if mid.len() != side.len() {
        return Err(Error::LengthMismatch(mid.len(), side.len()));
    }
    let (m, s) = (mid.channel(0), side.channel(0));
    let left = m.iter().zip(s).map(|(a, b)| a + b).collect();
    let right = m.iter().zip(s).map(|(a, b)| a - b).collect();
    Waveform::stereo(left, right, mid.sample_rate())
}
