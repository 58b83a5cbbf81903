use rand::Rng as _;

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const EXCERPT_SECONDS: f64 = 30.0;
const SPAN_START: f64 = 0.15;
const SPAN_END: f64 = 0.85;

/// Shortest track that fits an excerpt of `seconds` inside the 15-85 % span.
pub fn min_track_seconds(seconds: f64) -> f64 {
    seconds / (SPAN_END - SPAN_START)
}

/// Cuts a `seconds`-long window starting uniformly in `[0.15 D, 0.85 D - seconds]`.
///
/// Returns the excerpt and its start offset in seconds.
pub fn extract_excerpt_len(wf: &Waveform, seconds: f64, rng: &mut Rng) -> Result<(Waveform, f64)> {
    let sr = wf.sample_rate() as f64;
    let duration = wf.duration_seconds();
    let needed = min_track_seconds(seconds);
    let len = (seconds * sr).round() as usize;
    // tolerate the rounding of `needed` to whole samples
    if duration + 0.5 / sr < needed {
        return Err(Error::TrackTooShort { duration, needed });
    }
    let lo = SPAN_START * duration;
    let hi = (SPAN_END * duration - seconds).max(lo);
    let start_s = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let start = ((start_s * sr).round() as usize).min(wf.len().saturating_sub(len));
    Ok((wf.segment(start, len), start as f64 / sr))
}

/// 30-second excerpt; see [`extract_excerpt_len`].
pub fn extract_excerpt(wf: &Waveform, rng: &mut Rng) -> Result<(Waveform, f64)> {
    extract_excerpt_len(wf, EXCERPT_SECONDS, rng)
}
