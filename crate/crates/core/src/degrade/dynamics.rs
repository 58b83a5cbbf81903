use rand::Rng as _;

use super::{DegradationKind, DegradationRecord};
use crate::audio::Waveform;
use crate::error::Result;
use crate::rng::Rng;

const DB_FLOOR: f64 = 1e-10;

const SHAPER_ATTACK_MS: f64 = 3.0;
const SHAPER_RELEASE_MS: f64 = 150.0;
const GATE_ATTACK_MS: f64 = 0.5;
const GATE_RELEASE_MS: f64 = 3.0;
const SIDECHAIN_HP_HZ: f64 = 300.0;
const TRANSIENT_RATIO: f64 = 1.5;
const SHAPER_PERCENTILE: f64 = 0.95;

fn coef(ms: f64, sample_rate: u32) -> f64 {
    (-1.0 / (ms * 1e-3 * sample_rate as f64)).exp()
}

fn to_db(x: f64) -> f64 {
    20.0 * x.max(DB_FLOOR).log10()
}

fn linked_abs(wf: &Waveform, n: usize) -> f64 {
    wf.channels().iter().map(|c| c[n].abs()).fold(0.0, f64::max)
}

/// One-pole smoothing of a gain-reduction trace in dB; rising values use `attack`.
fn smooth_reduction(target: &[f64], attack: f64, release: f64, initial: f64) -> Vec<f64> {
    let mut state = initial;
    target
        .iter()
        .map(|&t| {
            let a = if t > state { attack } else { release };
            state = a * state + (1.0 - a) * t;
            state
        })
        .collect()
}

fn apply_gain_db(wf: &Waveform, gain_db: &[f64]) -> Result<Waveform> {
    let channels = wf
        .channels()
        .iter()
        .map(|c| {
            c.iter()
                .zip(gain_db)
                .map(|(x, g)| x * 10f64.powf(g / 20.0))
                .collect()
        })
        .collect();
    Waveform::new(channels, wf.sample_rate())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressorParams {
    pub attack_ms: f64,
    pub release_ms: f64,
    pub threshold_db: f64,
    pub ratio: f64,
    pub makeup_db: f64,
}

impl CompressorParams {
    pub fn sample(rng: &mut Rng) -> Self {
        Self {
            attack_ms: rng.random_range(3.0..=80.0),
            release_ms: rng.random_range(80.0..=250.0),
            threshold_db: rng.random_range(-45.0..=-38.0),
            ratio: rng.random_range(6.0..=45.0),
            makeup_db: rng.random_range(16.0..=25.0),
        }
    }

    /// Static hard-knee curve: dB of reduction for a detector level in dB.
    pub fn static_reduction_db(&self, level_db: f64) -> f64 {
        ((level_db - self.threshold_db) * (1.0 - 1.0 / self.ratio)).max(0.0)
    }
}

/// Feed-forward compressor on the stereo-linked peak, returning output and the
/// per-sample gain reduction in dB (before makeup).
pub fn compress_with(wf: &Waveform, p: &CompressorParams) -> Result<(Waveform, Vec<f64>)> {
    let sr = wf.sample_rate();
    let peak_release = coef(p.release_ms, sr);
    // settle the detector on the opening peak so the clip does not start with a makeup-only burst
    let warmup = ((p.release_ms * 1e-3 * sr as f64) as usize).min(wf.len());
    let mut env = (0..warmup).map(|n| linked_abs(wf, n)).fold(0.0, f64::max);
    let initial = p.static_reduction_db(to_db(env));
    let target: Vec<f64> = (0..wf.len())
        .map(|n| {
            let x = linked_abs(wf, n);
            env = x.max(peak_release * env);
            p.static_reduction_db(to_db(env))
        })
        .collect();
    let reduction = smooth_reduction(&target, coef(p.attack_ms, sr), coef(p.release_ms, sr), initial);
    let gains: Vec<f64> = reduction.iter().map(|r| p.makeup_db - r).collect();
    Ok((apply_gain_db(wf, &gains)?, reduction))
}

pub fn apply_compressor(wf: &Waveform, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    let p = CompressorParams::sample(rng);
    let (out, _) = compress_with(wf, &p)?;
    let record = DegradationRecord::new(DegradationKind::Comp)
        .with("attack_ms", p.attack_ms)
        .with("release_ms", p.release_ms)
        .with("threshold_db", p.threshold_db)
        .with("ratio", p.ratio)
        .with("makeup_db", p.makeup_db);
    Ok((out, record))
}

/// Transient shaper: attenuates detected attacks by `reduction_db`.
///
/// The detector runs on a 300 Hz high-passed, stereo-linked sidechain. Two mean-absolute
/// followers (3 ms fast, 150 ms slow) form `fast - slow`; a sample is a transient when that
/// exceeds its 95th percentile and the fast envelope is 1.5 times the slow one. The gate is
/// smoothed (0.5 ms attack, 3 ms release) and advanced by the fast time constant so the
/// reduction lines up with the onset. Returns the output and the realized threshold.
pub fn shape_transients_with(wf: &Waveform, reduction_db: f64) -> Result<(Waveform, f64)> {
    let sr = wf.sample_rate();
    let sidechain = highpassed_linked_abs(wf, SIDECHAIN_HP_HZ);
    let (fast_c, slow_c) = (coef(SHAPER_ATTACK_MS, sr), coef(SHAPER_RELEASE_MS, sr));
    // start both followers at the opening level so the first samples are not read as an attack
    let warmup = ((SHAPER_RELEASE_MS * 1e-3 * sr as f64) as usize).clamp(1, sidechain.len().max(1));
    let init = sidechain.iter().take(warmup).sum::<f64>() / warmup as f64;
    let (mut fast, mut slow) = (init, init);
    let mut fast_env = Vec::with_capacity(wf.len());
    let mut slow_env = Vec::with_capacity(wf.len());
    for &x in &sidechain {
        fast = fast_c * fast + (1.0 - fast_c) * x;
        slow = slow_c * slow + (1.0 - slow_c) * x;
        fast_env.push(fast);
        slow_env.push(slow);
    }
    let detector: Vec<f64> = fast_env.iter().zip(&slow_env).map(|(f, s)| f - s).collect();
    let mut sorted = detector.clone();
    sorted.sort_by(f64::total_cmp);
    let rank = ((sorted.len() - 1) as f64 * SHAPER_PERCENTILE).round() as usize;
    let threshold = sorted[rank];
    let target: Vec<f64> = (0..wf.len())
        .map(|n| {
            if detector[n] > threshold && fast_env[n] > TRANSIENT_RATIO * slow_env[n] {
                reduction_db
            } else {
                0.0
            }
        })
        .collect();
    let reduction = smooth_reduction(&target, coef(GATE_ATTACK_MS, sr), coef(GATE_RELEASE_MS, sr), 0.0);
    let lookahead = (SHAPER_ATTACK_MS * 1e-3 * sr as f64).round() as usize;
    let gains: Vec<f64> = (0..reduction.len())
        .map(|n| -reduction[(n + lookahead).min(reduction.len() - 1)])
        .collect();
    Ok((apply_gain_db(wf, &gains)?, threshold))
}

fn highpassed_linked_abs(wf: &Waveform, cutoff_hz: f64) -> Vec<f64> {
    let a = (-2.0 * std::f64::consts::PI * cutoff_hz / wf.sample_rate() as f64).exp();
    let mut out = vec![0.0f64; wf.len()];
    for ch in wf.channels() {
        let (mut prev, mut y) = (0.0, 0.0);
        for (o, &x) in out.iter_mut().zip(ch) {
            y = a * (y + x - prev);
            prev = x;
            *o = o.max(y.abs());
        }
    }
    out
}

pub fn apply_transient_shaper(wf: &Waveform, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    let reduction_db = rng.random_range(8.0..=15.0);
    let (out, threshold) = shape_transients_with(wf, reduction_db)?;
    let record = DegradationRecord::new(DegradationKind::Punch)
        .with("attack_ms", SHAPER_ATTACK_MS)
        .with("release_ms", SHAPER_RELEASE_MS)
        .with("reduction_db", reduction_db)
        .with("threshold", threshold);
    Ok((out, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{frame_rms_std, onset_strength_mean};
    use crate::rng::rng_from_seed;
    use crate::synth;
    use std::f64::consts::PI;

    const SR: u32 = 44_100;

    fn sine(amp: f64, secs: f64) -> Waveform {
        let x: Vec<f64> = (0..(secs * SR as f64) as usize)
            .map(|n| amp * (2.0 * PI * 1000.0 * n as f64 / SR as f64).sin())
            .collect();
        Waveform::stereo(x.clone(), x, SR).unwrap()
    }

    fn rms(c: &[f64]) -> f64 {
        (c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64).sqrt()
    }

    fn params(threshold_db: f64, ratio: f64, makeup_db: f64) -> CompressorParams {
        CompressorParams {
            attack_ms: 10.0,
            release_ms: 100.0,
            threshold_db,
            ratio,
            makeup_db,
        }
    }

    #[test]
    fn below_threshold_only_makeup() {
        let wf = sine(10f64.powf(-60.0 / 20.0), 1.0);
        let (out, gr) = compress_with(&wf, &params(-40.0, 10.0, 18.0)).unwrap();
        assert!(gr.iter().all(|&g| g == 0.0));
        let makeup = 10f64.powf(18.0 / 20.0);
        for (a, b) in out.channel(0).iter().zip(wf.channel(0)) {
            assert!((a - b * makeup).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_state_reduction_follows_static_curve() {
        // (-20 - (-40)) * (1 - 1/10) = 18 dB
        let wf = sine(0.1, 2.0);
        let (out, _) = compress_with(&wf, &params(-40.0, 10.0, 0.0)).unwrap();
        let tail = wf.len() / 2..;
        let gr = -20.0 * (rms(&out.channel(0)[tail.clone()]) / rms(&wf.channel(0)[tail])).log10();
        assert!((gr - 18.0).abs() < 0.5, "{gr}");
    }

    #[test]
    fn compressor_flattens_modulated_noise() {
        let noise = synth::white_noise(SR as usize * 8, 1.0, 3);
        let modulated = Waveform::new(
            noise
                .channels()
                .iter()
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .map(|(n, v)| v * (0.55 + 0.45 * (2.0 * PI * 0.25 * n as f64 / SR as f64).sin()))
                        .collect()
                })
                .collect(),
            SR,
        )
        .unwrap();
        let (out, rec) = apply_compressor(&modulated, &mut rng_from_seed(4)).unwrap();
        // compare at equal loudness so the makeup gain does not dominate
        let out = out.scaled(modulated.rms() / out.rms());
        let (a, b) = (frame_rms_std(&out).unwrap(), frame_rms_std(&modulated).unwrap());
        assert!(a < b, "{a} {b} {rec:?}");
        for (k, lo, hi) in [
            ("attack_ms", 3.0, 80.0),
            ("release_ms", 80.0, 250.0),
            ("threshold_db", -45.0, -38.0),
            ("ratio", 6.0, 45.0),
            ("makeup_db", 16.0, 25.0),
        ] {
            assert!((lo..=hi).contains(&rec.param(k).unwrap()), "{k}");
        }
    }

    #[test]
    fn shaper_ignores_steady_sine() {
        let wf = sine(0.5, 2.0);
        let (out, _) = shape_transients_with(&wf, 15.0).unwrap();
        let g = 20.0 * (rms(out.channel(0)) / rms(wf.channel(0))).log10();
        assert!(g.abs() < 0.5, "{g}");
    }

    #[test]
    fn shaper_reduces_onsets() {
        let wf = synth::pink_noise_with_clicks(5.0, 5);
        let (out, rec) = apply_transient_shaper(&wf, &mut rng_from_seed(6)).unwrap();
        assert!(onset_strength_mean(&out).unwrap() < onset_strength_mean(&wf).unwrap());
        let r = rec.param("reduction_db").unwrap();
        assert!((8.0..=15.0).contains(&r));
        assert!(rec.param("threshold").unwrap() > 0.0);
    }
}
