//! Short-time Fourier analysis and mel filterbanks.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window: Window,
    pub mel_bins: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            fft_size: 2048,
            hop: 512,
            window: Window::Hann,
            mel_bins: 128,
            fmin: 20.0,
            fmax: 16_000.0,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if self.fft_size < 2 || self.hop == 0 || self.hop > self.fft_size {
            return Err(Error::Config(format!(
                "need 0 < hop <= fft_size, got hop {} fft {}",
                self.hop, self.fft_size
            )));
        }
        if self.mel_bins == 0 {
            return Err(Error::Config("mel_bins must be >= 1".into()));
        }
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist) {
            return Err(Error::Config(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got {}..{}",
                self.fmin, self.fmax
            )));
        }
        Ok(())
    }

    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.fft_size {
            0
        } else {
            1 + (len - self.fft_size) / self.hop
        }
    }

    pub fn bin_hz(&self, sample_rate: u32) -> f64 {
        sample_rate as f64 / self.fft_size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumScale {
    /// |X| of each one-sided DFT bin.
    Magnitude,
    /// Mel-weighted |X|^2.
    MelPower,
}

/// Frames x bins matrix of non-negative values.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub data: Vec<Vec<f64>>,
    pub phase: Option<Vec<Vec<f64>>>,
    pub scale: SpectrumScale,
    pub config: SpectralConfig,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.data.len()
    }

    pub fn num_bins(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    /// Total energy of a magnitude spectrogram, summed over frames.
    ///
    /// By Parseval this equals the summed energy of the windowed frames.
    pub fn energy(&self) -> f64 {
        assert_eq!(self.scale, SpectrumScale::Magnitude);
        let n = self.config.fft_size;
        let last = n / 2;
        self.data
            .iter()
            .map(|frame| {
                frame
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let w = if k == 0 || (n % 2 == 0 && k == last) {
                            1.0
                        } else {
                            2.0
                        };
                        w * m * m
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .sum()
    }

    /// Converts to decibels: `10*log10(max(v, floor))` for power, `20*log10` for magnitude.
    pub fn to_db(&self, floor: f64) -> Vec<Vec<f64>> {
        let mult = match self.scale {
            SpectrumScale::Magnitude => 20.0,
            SpectrumScale::MelPower => 10.0,
        };
        self.data
            .iter()
            .map(|f| f.iter().map(|&v| mult * v.max(floor).log10()).collect())
            .collect()
    }
}

/// Reusable real-input STFT engine.
pub(crate) struct StftEngine {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl StftEngine {
    pub(crate) fn new(fft_size: usize, window: Window) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Self {
            fft,
            window: window.coefficients(fft_size),
            buf: vec![Complex::default(); fft_size],
            scratch,
        }
    }

    /// One-sided spectrum (N/2+1 bins) of the windowed frame.
    pub(crate) fn frame(&mut self, frame: &[f64]) -> &[Complex<f64>] {
        for ((b, &x), &w) in self.buf.iter_mut().zip(frame).zip(&self.window) {
            *b = Complex::new(x * w, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        &self.buf[..self.window.len() / 2 + 1]
    }
}

pub(crate) fn magnitude_frames(
    signal: &[f64],
    cfg: &SpectralConfig,
    keep_phase: bool,
) -> (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) {
    let mut engine = StftEngine::new(cfg.fft_size, cfg.window);
    let frames = cfg.num_frames(signal.len());
    let mut mags = Vec::with_capacity(frames);
    let mut phases = keep_phase.then(|| Vec::with_capacity(frames));
    for f in 0..frames {
        let start = f * cfg.hop;
        let spec = engine.frame(&signal[start..start + cfg.fft_size]);
        mags.push(spec.iter().map(|c| c.norm()).collect());
        if let Some(p) = phases.as_mut() {
            p.push(spec.iter().map(|c| c.arg()).collect());
        }
    }
    (mags, phases)
}

/// STFT of a mono signal; frames are taken without padding.
pub fn stft_signal(signal: &[f64], sample_rate: u32, cfg: &SpectralConfig) -> Result<Spectrogram> {
    cfg.validate(sample_rate)?;
    if signal.len() < cfg.fft_size {
        return Err(Error::TooShort {
            needed: cfg.fft_size,
            got: signal.len(),
        });
    }
    let (data, phase) = magnitude_frames(signal, cfg, true);
    Ok(Spectrogram {
        data,
        phase,
        scale: SpectrumScale::Magnitude,
        config: *cfg,
        sample_rate,
    })
}

/// STFT of the waveform's mid (channel-average) signal.
pub fn stft(wf: &Waveform, cfg: &SpectralConfig) -> Result<Spectrogram> {
    stft_signal(&wf.mid_channel(), wf.sample_rate(), cfg)
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank with rows normalized to sum to one.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Per mel band: (first bin, weights).
    rows: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    pub fn new(cfg: &SpectralConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate(sample_rate)?;
        let n_bins = cfg.fft_size / 2 + 1;
        let bin_hz = cfg.bin_hz(sample_rate);
        let (mlo, mhi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
        let points: Vec<f64> = (0..cfg.mel_bins + 2)
            .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (cfg.mel_bins + 1) as f64))
            .collect();
        let rows = (0..cfg.mel_bins)
            .map(|m| {
                let (lo, center, hi) = (points[m], points[m + 1], points[m + 2]);
                let mut weights: Vec<(usize, f64)> = (0..n_bins)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if lo == 0.0 && f <= center {
                            1.0
                        } else if f > lo && f <= center {
                            (f - lo) / (center - lo)
                        } else if f > center && f < hi {
                            (hi - f) / (hi - center)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                // bands narrower than one bin fall back to the nearest bin
                if weights.is_empty() {
                    let k = ((center / bin_hz).round() as usize).min(n_bins - 1);
                    weights.push((k, 1.0));
                }
                let total: f64 = weights.iter().map(|(_, w)| w).sum();
                let first = weights[0].0;
                let last = weights[weights.len() - 1].0;
                let mut dense = vec![0.0; last - first + 1];
                for (k, w) in weights {
                    dense[k - first] = w / total;
                }
                (first, dense)
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn num_bands(&self) -> usize {
        self.rows.len()
    }

    /// Dense row `m` over all `n_bins` bins.
    pub fn row(&self, m: usize, n_bins: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_bins];
        let (first, w) = &self.rows[m];
        out[*first..first + w.len()].copy_from_slice(w);
        out
    }

    /// Applies the filterbank to a power spectrum.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(first, w)| {
                w.iter()
                    .zip(&power[*first..first + w.len()])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Mel-weighted power spectrogram of a mono signal.
pub fn mel_spectrogram_signal(
    signal: &[f64],
    sample_rate: u32,
    cfg: &SpectralConfig,
) -> Result<Spectrogram> {
    let bank = MelFilterbank::new(cfg, sample_rate)?;
    if signal.len() < cfg.fft_size {
        return Err(Error::TooShort {
            needed: cfg.fft_size,
            got: signal.len(),
        });
    }
    let mut engine = StftEngine::new(cfg.fft_size, cfg.window);
    let frames = cfg.num_frames(signal.len());
    let mut power = vec![0.0; cfg.fft_size / 2 + 1];
    let data = (0..frames)
        .map(|f| {
            let start = f * cfg.hop;
            let spec = engine.frame(&signal[start..start + cfg.fft_size]);
            for (p, c) in power.iter_mut().zip(spec) {
                *p = c.norm_sqr();
            }
            bank.apply(&power)
        })
        .collect();
    Ok(Spectrogram {
        data,
        phase: None,
        scale: SpectrumScale::MelPower,
        config: *cfg,
        sample_rate,
    })
}

/// Mel-weighted power spectrogram of the waveform's mid signal.
pub fn mel_spectrogram(wf: &Waveform, cfg: &SpectralConfig) -> Result<Spectrogram> {
    mel_spectrogram_signal(&wf.mid_channel(), wf.sample_rate(), cfg)
}
