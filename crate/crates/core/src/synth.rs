//! Synthetic test material: noise, click trains and a small multi-instrument music generator.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::{Waveform, SAMPLE_RATE};
use crate::rng::{rng_from_seed, Rng as SeededRng};

const SR: f64 = SAMPLE_RATE as f64;

fn gaussian(len: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn scale_to_peak(channels: Vec<Vec<f64>>, peak: f64) -> Waveform {
    let wf = Waveform::new(channels, SAMPLE_RATE).expect("synthetic channels are valid");
    let p = wf.peak();
    if p == 0.0 {
        wf
    } else {
        wf.scaled(peak / p)
    }
}

/// Pink (1/f) noise via Paul Kellet's refined filter.
pub fn pink(len: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    gaussian(len, rng)
        .into_iter()
        .map(|w| {
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let out = b.iter().sum::<f64>() + w * 0.5362;
            b[6] = w * 0.115926;
            out
        })
        .collect()
}

/// Decorrelated stereo Gaussian white noise scaled to `peak`.
pub fn white_noise(len: usize, peak: f64, seed: u64) -> Waveform {
    let mut rng = rng_from_seed(seed);
    let l = gaussian(len, &mut rng);
    let r = gaussian(len, &mut rng);
    scale_to_peak(vec![l, r], peak)
}

/// Standard test signal: partly decorrelated stereo pink noise plus a 1 Hz click train.
///
/// Clicks are 10 ms decaying noise bursts panned to the center; the result peaks at 0.95.
pub fn pink_noise_with_clicks(seconds: f64, seed: u64) -> Waveform {
    let len = (seconds * SR) as usize;
    let mut rng = rng_from_seed(seed);
    let common = pink(len, &mut rng);
    let left = pink(len, &mut rng);
    let right = pink(len, &mut rng);
    let norm = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let (nc, nl, nr) = (norm(&common), norm(&left), norm(&right));
    let mut l: Vec<f64> = (0..len)
        .map(|i| 0.15 * (0.8 * common[i] / nc + 0.6 * left[i] / nl))
        .collect();
    let mut r: Vec<f64> = (0..len)
        .map(|i| 0.15 * (0.8 * common[i] / nc + 0.6 * right[i] / nr))
        .collect();
    let click_len = (0.010 * SR) as usize;
    let mut start = (0.25 * SR) as usize;
    while start < len {
        for k in 0..click_len.min(len - start) {
            let env = (-(k as f64) / (0.003 * SR)).exp();
            let v = 0.8 * env * rng.random_range(-1.0..1.0);
            l[start + k] += v;
            r[start + k] += v;
        }
        start += SAMPLE_RATE as usize;
    }
    scale_to_peak(vec![l, r], 0.95)
}

fn one_pole_lowpass(x: &mut [f64], cutoff: f64) {
    let a = (-2.0 * PI * cutoff / SR).exp();
    let mut y = 0.0;
    for v in x.iter_mut() {
        y = (1.0 - a) * *v + a * y;
        *v = y;
    }
}

fn add_panned(l: &mut [f64], r: &mut [f64], start: usize, src: &[f64], pan: f64) {
    let (gl, gr) = ((1.0 - pan) * PI / 4.0, (1.0 + pan) * PI / 4.0);
    let (gl, gr) = (gl.cos(), gr.cos());
    for (k, v) in src.iter().enumerate() {
        if start + k >= l.len() {
            break;
        }
        l[start + k] += gl * v;
        r[start + k] += gr * v;
    }
}

/// A short synthetic arrangement: bass, pad chords, lead, kick, snare and hats.
///
/// Tempo, key, panning and timbre are drawn from `seed`; the mix peaks at 0.9.
pub fn music(seconds: f64, seed: u64) -> Waveform {
    let len = (seconds * SR) as usize;
    let mut rng = rng_from_seed(seed);
    let (mut l, mut r) = (vec![0.0; len], vec![0.0; len]);
    let bpm = rng.random_range(80.0..140.0);
    let beat = (60.0 / bpm * SR) as usize;
    let root = 40.0 + rng.random_range(0..12) as f64;
    let midi = |m: f64| 440.0 * 2f64.powf((m - 69.0) / 12.0);
    let progression = [0.0, 5.0, 7.0, 3.0];
    let bar = 4 * beat;
    let bright = rng.random_range(3000.0..7000.0);
    let spread = rng.random_range(0.3..0.9);
    let ambience = rng.random_range(0.05..0.35);

    let mut t0 = 0;
    let mut chord = 0;
    while t0 < len {
        let deg = progression[chord % progression.len()];
        // bass: two notes per bar, saturated sine
        for half in 0..2 {
            let f = midi(root + deg);
            let n = bar / 2;
            let note: Vec<f64> = (0..n)
                .map(|k| {
                    let t = k as f64 / SR;
                    let env = (-(t) * 3.0).exp() * 0.8 + 0.2;
                    0.35 * env * ((2.0 * PI * f * t).sin() + 0.3 * (4.0 * PI * f * t).sin()).tanh()
                })
                .collect();
            add_panned(&mut l, &mut r, t0 + half * n, &note, 0.0);
        }
        // pad: sawtooth triad with one detuned voice per side, one-pole smoothed
        let (mut pad_l, mut pad_r) = (vec![0.0; bar], vec![0.0; bar]);
        for interval in [12.0, 16.0, 19.0] {
            let f = midi(root + deg + interval + if deg == 3.0 { -1.0 } else { 0.0 });
            for k in 0..bar {
                let t = k as f64 / SR;
                let saw = |detune: f64, phase: f64| 2.0 * (f * detune * t + phase).fract() - 1.0;
                pad_l[k] += 0.05 * (saw(1.0, 0.0) + saw(1.004, 0.3));
                pad_r[k] += 0.05 * (saw(1.0, 0.5) + saw(0.996, 0.8));
            }
        }
        one_pole_lowpass(&mut pad_l, bright);
        one_pole_lowpass(&mut pad_r, bright);
        add_panned(&mut l, &mut r, t0, &pad_l, -spread);
        add_panned(&mut l, &mut r, t0, &pad_r, spread);
        // lead: eighth-note arpeggio
        let lead_pan = spread * if chord % 2 == 0 { 1.0 } else { -1.0 };
        for step in 0..8 {
            let interval = [24.0, 28.0, 31.0, 36.0][rng.random_range(0..4)];
            let f = midi(root + deg + interval);
            let n = beat / 2;
            let note: Vec<f64> = (0..n)
                .map(|k| {
                    let t = k as f64 / SR;
                    0.08 * (-(t) * 8.0).exp() * ((2.0 * PI * f * t).sin() + 0.4 * (6.0 * PI * f * t).sin())
                })
                .collect();
            add_panned(&mut l, &mut r, t0 + step * n, &note, lead_pan);
        }
        // drums
        for b in 0..4 {
            let at = t0 + b * beat;
            if b % 2 == 0 {
                let kick: Vec<f64> = (0..(0.25 * SR) as usize)
                    .map(|k| {
                        let t = k as f64 / SR;
                        let f = 50.0 + 100.0 * (-t * 30.0).exp();
                        0.7 * (-t * 12.0).exp() * (2.0 * PI * f * t).sin()
                    })
                    .collect();
                add_panned(&mut l, &mut r, at, &kick, 0.0);
            } else {
                let mut snare: Vec<f64> = (0..(0.18 * SR) as usize)
                    .map(|k| {
                        let t = k as f64 / SR;
                        (-t * 25.0).exp()
                            * (0.35 * rng.random_range(-1.0..1.0) + 0.2 * (2.0 * PI * 190.0 * t).sin())
                    })
                    .collect();
                one_pole_lowpass(&mut snare, 8000.0);
                add_panned(&mut l, &mut r, at, &snare, 0.1);
            }
            for h in 0..2 {
                let mut prev = 0.0;
                let hat: Vec<f64> = (0..(0.04 * SR) as usize)
                    .map(|k| {
                        let t = k as f64 / SR;
                        let w: f64 = rng.random_range(-1.0..1.0);
                        let hp = w - prev;
                        prev = w;
                        0.08 * (-t * 90.0).exp() * hp
                    })
                    .collect();
                add_panned(&mut l, &mut r, at + h * beat / 2, &hat, if h == 0 { 0.5 } else { -0.5 });
            }
        }
        t0 += bar;
        chord += 1;
    }
    // quiet room tone keeps every band populated
    let floor_l = pink(len, &mut rng);
    let floor_r = pink(len, &mut rng);
    for i in 0..len {
        l[i] += 0.002 * floor_l[i];
        r[i] += 0.002 * floor_r[i];
    }
    add_ambience(&mut l, &mut r, ambience);
    master(vec![l, r], rng.random_range(2.0..4.0))
}

/// Sparse multi-tap echoes of the mid signal with different taps per side.
fn add_ambience(l: &mut [f64], r: &mut [f64], gain: f64) {
    let mid: Vec<f64> = l.iter().zip(r.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
    let taps = |ms: [f64; 4]| ms.map(|m| (m * 1e-3 * SR) as usize);
    let (tl, tr) = (taps([13.0, 29.0, 47.0, 71.0]), taps([17.0, 37.0, 53.0, 83.0]));
    for (k, (&dl, &dr)) in tl.iter().zip(&tr).enumerate() {
        let g = gain * 0.75f64.powi(k as i32);
        for i in dl.max(dr)..mid.len() {
            l[i] += g * mid[i - dl];
            r[i] += g * mid[i - dr];
        }
    }
}

/// Bus saturation that trades crest factor for loudness, then a 0.9 peak.
fn master(channels: Vec<Vec<f64>>, drive: f64) -> Waveform {
    let peak = channels.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let shaped = channels
        .into_iter()
        .map(|c| c.into_iter().map(|v| (drive * v / peak).tanh()).collect())
        .collect();
    scale_to_peak(shaped, 0.9)
}
