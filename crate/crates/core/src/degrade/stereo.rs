use super::{DegradationKind, DegradationRecord};
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::metrics::features::population_std;

/// A track is folded only when std(L - R) is strictly above this.
pub const STEREO_THRESHOLD: f64 = 0.08;

/// Replaces both channels by their average when the image is wide enough.
///
/// Returns `Ok(None)` when the input is not eligible.
pub fn fold_stereo(wf: &Waveform) -> Result<Option<(Waveform, DegradationRecord)>> {
    if !wf.is_stereo() {
        return Err(Error::NotStereo);
    }
    let (l, r) = (wf.channel(0), wf.channel(1));
    let diff: Vec<f64> = l.iter().zip(r).map(|(a, b)| a - b).collect();
    let spread = population_std(&diff);
    if spread <= STEREO_THRESHOLD {
        return Ok(None);
    }
    let mid: Vec<f64> = l.iter().zip(r).map(|(a, b)| (a + b) / 2.0).collect();
    let out = Waveform::stereo(mid.clone(), mid, wf.sample_rate())?;
    let record = DegradationRecord::new(DegradationKind::Stereo).with("side_std", spread);
    Ok(Some((out, record)))
}
