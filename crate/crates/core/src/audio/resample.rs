use std::f64::consts::PI;

use super::Waveform;
use crate::error::Result;

const HALF_TAPS: usize = 32;
const ROLLOFF: f64 = 0.95;

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    0.42 + 0.5 * (PI * x).cos() + 0.08 * (2.0 * PI * x).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited resampling with a Blackman-windowed sinc kernel.
pub fn resample(wf: &Waveform, target_rate: u32) -> Result<Waveform> {
    let src_rate = wf.sample_rate();
    if src_rate == target_rate {
        return Ok(wf.clone());
    }
    let ratio = target_rate as f64 / src_rate as f64;
    let cutoff = ratio.min(1.0) * ROLLOFF;
    let half_width = HALF_TAPS as f64 / cutoff;
    let out_len = ((wf.len() as f64) * ratio).round().max(1.0) as usize;

    let channels = wf
        .channels()
        .iter()
        .map(|x| {
            (0..out_len)
                .map(|m| {
                    let center = m as f64 / ratio;
                    let lo = (center - half_width).ceil().max(0.0) as usize;
                    let hi = ((center + half_width).floor() as usize).min(x.len() - 1);
                    let mut acc = 0.0;
                    for (n, &s) in x.iter().enumerate().take(hi + 1).skip(lo) {
                        let d = n as f64 - center;
                        acc += s * cutoff * sinc(cutoff * d) * blackman(d / half_width);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Waveform::new(channels, target_rate)
}
