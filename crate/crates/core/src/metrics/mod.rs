//! Degradation-specific quality metrics, mel-SSIM and the dataset evaluation harness.

mod eval;
pub mod features;
mod ssim;

pub use eval::{evaluate_dataset, evaluate_rows, KindStats, MetricReport};
pub use features::{
    band_energy_ratio, frame_rms_std, global_rms, log_mel, modulation_spectrum, modulation_spectrum_distance,
    onset_strength_mean, spectral_balance_distance, spectral_flatness_mean, stereo_width, welch_psd, BandSpec,
};
pub use ssim::{mel_ssim, ssim_2d};

use crate::audio::Waveform;
use crate::degrade::DegradationKind;
use crate::error::Result;

/// Band (in Hz) whose energy share scores each single-band EQ effect.
pub fn affected_band(kind: DegradationKind) -> Option<(f64, f64)> {
    use DegradationKind::*;
    let nyquist = f64::INFINITY;
    match kind {
        Bright | Dark => Some((6_000.0, nyquist)),
        Airy => Some((10_000.0, nyquist)),
        Boom => Some((0.0, 120.0)),
        Warm => Some((0.0, 400.0)),
        Mud => Some((200.0, 500.0)),
        Vocal => Some((350.0, 3_500.0)),
        Clarity => Some((2_000.0, nyquist)),
        _ => None,
    }
}

/// The metric used to score `kind`, expressed as an error between `processed` and `clean`.
///
/// Distance metrics compare the two signals directly; scalar metrics return |m(processed) - m(clean)|.
pub fn metric_error(kind: DegradationKind, processed: &Waveform, clean: &Waveform) -> Result<f64> {
    use DegradationKind::*;
    let scalar = |f: &dyn Fn(&Waveform) -> Result<f64>| -> Result<f64> { Ok((f(processed)? - f(clean)?).abs()) };
    match kind {
        Xband | Mic => spectral_balance_distance(processed, clean, &BandSpec::default()),
        Bright | Dark | Airy | Boom | Warm | Mud | Vocal | Clarity => {
            let (lo, hi) = affected_band(kind).expect("band effect");
            scalar(&|w| band_energy_ratio(w, lo, hi))
        }
        Comp => scalar(&frame_rms_std),
        Punch => scalar(&onset_strength_mean),
        Small | Big | Mix | Real => modulation_spectrum_distance(processed, clean),
        Clip => scalar(&spectral_flatness_mean),
        Volume => scalar(&|w| Ok(global_rms(w))),
        Stereo => scalar(&stereo_width),
    }
}
