use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::spectral::StftEngine;
use crate::audio::{mel_spectrogram_signal, SpectralConfig, Waveform, Window};
use crate::error::{Error, Result};

/// Floor applied before every logarithm or ratio.
pub const EPS: f64 = 1e-10;
/// Dynamic range kept in dB spectrograms, relative to their maximum.
pub const TOP_DB: f64 = 80.0;

const WELCH_SEGMENT: usize = 2048;
const WELCH_HOP: usize = 1024;
const RMS_FRAME: usize = 2048;
const RMS_HOP: usize = 1024;
const MOD_LOW_HZ: f64 = 0.5;
const MOD_HIGH_HZ: f64 = 20.0;

/// Ascending band edges in Hz; `n + 1` edges define `n` bands.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    edges: Vec<f64>,
}

impl BandSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Config("band spec needs at least two edges".into()));
        }
        if edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!("band edges must increase: {edges:?}")));
        }
        Ok(Self { edges })
    }

    /// Eight log-spaced bands between 50 Hz and 16 kHz.
    pub fn eight_log_bands() -> Self {
        let (lo, hi) = (50f64.ln(), 16_000f64.ln());
        Self {
            edges: (0..9).map(|i| (lo + (hi - lo) * i as f64 / 8.0).exp()).collect(),
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn num_bands(&self) -> usize {
        self.edges.len() - 1
    }
}

impl Default for BandSpec {
    fn default() -> Self {
        Self::eight_log_bands()
    }
}

/// Welch power spectral density estimate: Hann segments of 2048, hop 1024.
///
/// Returns `(bin spacing in Hz, averaged |X|^2 per one-sided bin)`.
pub fn welch_psd(signal: &[f64], sample_rate: u32) -> Result<(f64, Vec<f64>)> {
    if signal.len() < WELCH_SEGMENT {
        return Err(Error::TooShort {
            needed: WELCH_SEGMENT,
            got: signal.len(),
        });
    }
    let mut engine = StftEngine::new(WELCH_SEGMENT, Window::Hann);
    let segments = (signal.len() - WELCH_SEGMENT) / WELCH_HOP + 1;
    let mut psd = vec![0.0; WELCH_SEGMENT / 2 + 1];
    for s in 0..segments {
        let start = s * WELCH_HOP;
        for (p, c) in psd.iter_mut().zip(engine.frame(&signal[start..start + WELCH_SEGMENT])) {
            *p += c.norm_sqr();
        }
    }
    psd.iter_mut().for_each(|p| *p /= segments as f64);
    Ok((sample_rate as f64 / WELCH_SEGMENT as f64, psd))
}

fn band_energies(signal: &[f64], sample_rate: u32, bands: &BandSpec) -> Result<Vec<f64>> {
    let (df, psd) = welch_psd(signal, sample_rate)?;
    let mut out = vec![0.0; bands.num_bands()];
    for (k, p) in psd.iter().enumerate() {
        let f = k as f64 * df;
        if let Some(b) = bands.edges.windows(2).position(|w| f >= w[0] && f < w[1]) {
            out[b] += p;
        }
    }
    Ok(out)
}

fn require_same_len(a: &Waveform, b: &Waveform) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Cosine distance between L2-normalized band-energy vectors of the two mid signals.
pub fn spectral_balance_distance(a: &Waveform, b: &Waveform, bands: &BandSpec) -> Result<f64> {
    require_same_len(a, b)?;
    let ea = band_energies(&a.mid_channel(), a.sample_rate(), bands)?;
    let eb = band_energies(&b.mid_channel(), b.sample_rate(), bands)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(&ea), norm(&eb));
    if na <= EPS * EPS || nb <= EPS * EPS {
        return Err(Error::Silent("spectral balance"));
    }
    let cos: f64 = ea.iter().zip(&eb).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

/// Fraction of mid-channel power between `lo` and `hi` Hz (inclusive).
pub fn band_energy_ratio(wf: &Waveform, lo: f64, hi: f64) -> Result<f64> {
    let (df, psd) = welch_psd(&wf.mid_channel(), wf.sample_rate())?;
    let total: f64 = psd.iter().sum();
    if total <= EPS * EPS {
        return Err(Error::Silent("band energy ratio"));
    }
    let band: f64 = psd
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * df;
            f >= lo && f <= hi
        })
        .map(|(_, p)| p)
        .sum();
    Ok(band / total)
}

/// Population standard deviation of mid-channel RMS over 2048-sample frames, hop 1024.
pub fn frame_rms_std(wf: &Waveform) -> Result<f64> {
    let mid = wf.mid_channel();
    if mid.len() < RMS_FRAME {
        return Err(Error::TooShort {
            needed: RMS_FRAME,
            got: mid.len(),
        });
    }
    let frames = (mid.len() - RMS_FRAME) / RMS_HOP + 1;
    let rms: Vec<f64> = (0..frames)
        .map(|f| {
            let s = &mid[f * RMS_HOP..f * RMS_HOP + RMS_FRAME];
            (s.iter().map(|v| v * v).sum::<f64>() / RMS_FRAME as f64).sqrt()
        })
        .collect();
    Ok(population_std(&rms))
}

pub(crate) fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// 128-band mel power spectrogram of the mid channel in dB, clamped to `TOP_DB` below its peak.
pub fn log_mel(wf: &Waveform) -> Result<Vec<Vec<f64>>> {
    let cfg = SpectralConfig::default();
    let spec = mel_spectrogram_signal(&wf.mid_channel(), wf.sample_rate(), &cfg)?;
    let mut db = spec.to_db(EPS);
    let max = db
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    for v in db.iter_mut().flatten() {
        *v = v.max(max - TOP_DB);
    }
    Ok(db)
}

/// Mean over frames of the positive spectral flux summed across mel bands.
pub fn onset_strength_mean(wf: &Waveform) -> Result<f64> {
    let db = log_mel(wf)?;
    if db.len() < 2 {
        return Ok(0.0);
    }
    let flux: f64 = db
        .windows(2)
        .map(|w| {
            w[1].iter()
                .zip(&w[0])
                .map(|(cur, prev)| (cur - prev).max(0.0))
                .sum::<f64>()
        })
        .sum();
    Ok(flux / (db.len() - 1) as f64)
}

/// Band-averaged, L2-normalized modulation spectrum restricted to 0.5-20 Hz.
pub fn modulation_spectrum(wf: &Waveform) -> Result<Vec<f64>> {
    let db = log_mel(wf)?;
    let frames = db.len();
    let bands = db[0].len();
    let frame_rate = wf.sample_rate() as f64 / SpectralConfig::default().hop as f64;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(frames);
    let lo = (MOD_LOW_HZ * frames as f64 / frame_rate).ceil() as usize;
    let hi = ((MOD_HIGH_HZ * frames as f64 / frame_rate).floor() as usize).min(frames / 2);
    if hi < lo.max(1) {
        return Err(Error::TooShort {
            needed: (2.0 * frame_rate / MOD_LOW_HZ) as usize,
            got: wf.len(),
        });
    }
    let lo = lo.max(1);
    let mut acc = vec![0.0; hi - lo + 1];
    let mut buf = vec![Complex::default(); frames];
    for b in 0..bands {
        let mean = db.iter().map(|f| f[b]).sum::<f64>() / frames as f64;
        for (c, f) in buf.iter_mut().zip(&db) {
            *c = Complex::new(f[b] - mean, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf[lo..=hi]) {
            *a += c.norm() / bands as f64;
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= EPS {
        return Err(Error::Silent("modulation spectrum"));
    }
    Ok(acc.into_iter().map(|v| v / norm).collect())
}

/// Euclidean distance between normalized modulation spectra.
pub fn modulation_spectrum_distance(a: &Waveform, b: &Waveform) -> Result<f64> {
    require_same_len(a, b)?;
    let (ma, mb) = (modulation_spectrum(a)?, modulation_spectrum(b)?);
    Ok(ma
        .iter()
        .zip(&mb)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Mean over STFT frames of geometric / arithmetic mean of the power spectrum.
pub fn spectral_flatness_mean(wf: &Waveform) -> Result<f64> {
    let mid = wf.mid_channel();
    if mid.iter().all(|&v| v == 0.0) {
        return Err(Error::Silent("spectral flatness"));
    }
    let cfg = SpectralConfig::default();
    if mid.len() < cfg.fft_size {
        return Err(Error::TooShort {
            needed: cfg.fft_size,
            got: mid.len(),
        });
    }
    let mut engine = StftEngine::new(cfg.fft_size, cfg.window);
    let frames = cfg.num_frames(mid.len());
    let mut total = 0.0;
    for f in 0..frames {
        let spec = engine.frame(&mid[f * cfg.hop..f * cfg.hop + cfg.fft_size]);
        let n = spec.len() as f64;
        let (mut log_sum, mut sum) = (0.0, 0.0);
        for c in spec {
            let p = c.norm_sqr().max(EPS);
            log_sum += p.ln();
            sum += p;
        }
        total += (log_sum / n).exp() / (sum / n);
    }
    Ok((total / frames as f64).clamp(0.0, 1.0))
}

/// RMS over every sample of every channel.
pub fn global_rms(wf: &Waveform) -> f64 {
    wf.rms()
}

/// RMS of the side signal over RMS of the mid signal.
pub fn stereo_width(wf: &Waveform) -> Result<f64> {
    if !wf.is_stereo() {
        return Err(Error::NotStereo);
    }
    let (l, r) = (wf.channel(0), wf.channel(1));
    let n = wf.len() as f64;
    let mid = (l.iter().zip(r).map(|(a, b)| ((a + b) / 2.0).powi(2)).sum::<f64>() / n).sqrt();
    let side = (l.iter().zip(r).map(|(a, b)| ((a - b) / 2.0).powi(2)).sum::<f64>() / n).sqrt();
    if mid <= EPS {
        return Err(Error::Silent("stereo width (mid)"));
    }
    Ok(side / mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use std::f64::consts::PI;

    const SR: u32 = 44_100;

    fn sine(freq: f64, secs: f64, amp: f64) -> Waveform {
        let x: Vec<f64> = (0..(secs * SR as f64) as usize)
            .map(|n| amp * (2.0 * PI * freq * n as f64 / SR as f64).sin())
            .collect();
        Waveform::stereo(x.clone(), x, SR).unwrap()
    }

    #[test]
    fn default_bands_are_log_spaced() {
        let b = BandSpec::default();
        assert_eq!(b.num_bands(), 8);
        assert!((b.edges()[0] - 50.0).abs() < 1e-9);
        assert!((b.edges()[8] - 16_000.0).abs() < 1e-6);
        let r = b.edges()[1] / b.edges()[0];
        for w in b.edges().windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-9);
        }
        assert!(BandSpec::new(vec![100.0, 50.0]).is_err());
    }

    #[test]
    fn balance_distance_is_zero_for_self_and_gain() {
        let a = synth::white_noise(SR as usize * 2, 0.5, 1);
        assert!(spectral_balance_distance(&a, &a, &BandSpec::default()).unwrap().abs() < 1e-12);
        let d = spectral_balance_distance(&a, &a.scaled(0.5), &BandSpec::default()).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn band_ratio_of_white_noise_follows_bandwidth() {
        let a = synth::white_noise(SR as usize * 10, 0.5, 2);
        let full = band_energy_ratio(&a, 0.0, SR as f64 / 2.0).unwrap();
        assert!((full - 1.0).abs() < 1e-12);
        let low = band_energy_ratio(&a, 0.0, 120.0).unwrap();
        let expected = 120.0 / 22_050.0;
        assert!((low - expected).abs() < 0.2 * expected, "{low} vs {expected}");
    }

    #[test]
    fn frame_rms_std_cases() {
        assert!(frame_rms_std(&sine(440.0, 3.0, 0.5)).unwrap() < 1e-3);
        assert_eq!(frame_rms_std(&Waveform::silence(10_000, SR).unwrap()).unwrap(), 0.0);
        assert!(frame_rms_std(&Waveform::silence(100, SR).unwrap()).is_err());
    }

    #[test]
    fn onset_strength_sine_vs_clicks() {
        let steady = onset_strength_mean(&sine(1000.0, 5.0, 0.5)).unwrap();
        let clicks = onset_strength_mean(&synth::pink_noise_with_clicks(5.0, 3)).unwrap();
        assert!(clicks > 0.0);
        assert!(steady < 0.01 * clicks, "steady {steady} clicks {clicks}");
        let again = onset_strength_mean(&synth::pink_noise_with_clicks(5.0, 3)).unwrap();
        assert_eq!(clicks, again);
    }

    #[test]
    fn modulation_distance_properties() {
        let a = synth::pink_noise_with_clicks(6.0, 4);
        let b = synth::pink_noise_with_clicks(6.0, 5);
        assert_eq!(modulation_spectrum_distance(&a, &a).unwrap(), 0.0);
        let ab = modulation_spectrum_distance(&a, &b).unwrap();
        let ba = modulation_spectrum_distance(&b, &a).unwrap();
        assert!(ab >= 0.0 && (ab - ba).abs() < 1e-12);
    }

    #[test]
    fn flatness_noise_vs_sine() {
        let noise = synth::white_noise(SR as usize * 2, 0.5, 6);
        assert!(spectral_flatness_mean(&noise).unwrap() > 0.4);
        assert!(spectral_flatness_mean(&sine(1000.0, 2.0, 0.5)).unwrap() < 0.01);
        assert!(spectral_flatness_mean(&Waveform::silence(5000, SR).unwrap()).is_err());
    }

    #[test]
    fn rms_and_width() {
        let a = synth::white_noise(SR as usize, 0.9, 7);
        assert!((global_rms(&a.scaled(0.01)) - 0.01 * global_rms(&a)).abs() < 1e-15);
        let mono = Waveform::stereo(a.channel(0).to_vec(), a.channel(0).to_vec(), SR).unwrap();
        assert_eq!(stereo_width(&mono).unwrap(), 0.0);
        let neg: Vec<f64> = a.channel(0).iter().map(|v| -v).collect();
        let anti = Waveform::stereo(a.channel(0).to_vec(), neg, SR).unwrap();
        assert!(matches!(stereo_width(&anti), Err(Error::Silent(_))));
    }
}
