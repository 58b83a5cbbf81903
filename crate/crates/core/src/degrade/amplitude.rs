use rand::seq::IndexedRandom;

use super::{DegradationKind, DegradationRecord};
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const CLIP_LEVELS: [f64; 3] = [2.0, 3.0, 5.0];
pub const VOLUME_LEVELS: [f64; 4] = [0.001, 0.003, 0.01, 0.05];

fn nonsilent_peak(wf: &Waveform, what: &'static str) -> Result<f64> {
    let p = wf.peak();
    if p == 0.0 {
        return Err(Error::Silent(what));
    }
    Ok(p)
}

/// Raises the peak to `level`, then hard-clips to [-1, 1].
pub fn clip_with(wf: &Waveform, level: f64) -> Result<(Waveform, DegradationRecord)> {
    let gain = level / nonsilent_peak(wf, "clipping")?;
    let total = wf.len() * wf.num_channels();
    let clipped = wf
        .channels()
        .iter()
        .flatten()
        .filter(|v| (*v * gain).abs() > 1.0)
        .count();
    let out = wf.map(|v| (v * gain).clamp(-1.0, 1.0));
    let record = DegradationRecord::new(DegradationKind::Clip)
        .with("level", level)
        .with("clipped_fraction", clipped as f64 / total as f64);
    Ok((out, record))
}

pub fn apply_clipping(wf: &Waveform, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    clip_with(wf, *CLIP_LEVELS.choose(rng).expect("nonempty"))
}

/// Scales so the peak equals `level`.
pub fn volume_with(wf: &Waveform, level: f64) -> Result<(Waveform, DegradationRecord)> {
    let gain = level / nonsilent_peak(wf, "volume")?;
    let record = DegradationRecord::new(DegradationKind::Volume).with("level", level);
    Ok((wf.scaled(gain), record))
}

pub fn apply_volume(wf: &Waveform, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    volume_with(wf, *VOLUME_LEVELS.choose(rng).expect("nonempty"))
}
