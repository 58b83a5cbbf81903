use rand::Rng as _;

use super::{DegradationKind, DegradationRecord, MicTfBank};
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::filters::{
    apply_iir, apply_iir_zero_phase, convolve_repeak, design_filter, FilterSpec, IirChain,
    CHEBYSHEV_STOPBAND_DB,
};
use crate::rng::Rng;

/// Bandwidth of every x-band peaking section.
pub const XBAND_Q: f64 = std::f64::consts::SQRT_2;
const XBAND_LOW_HZ: f64 = 60.0;
const XBAND_HIGH_HZ: f64 = 14_000.0;
const CLARITY_CUTOFF_HZ: f64 = 2_000.0;

struct ShelfRow {
    high: bool,
    freq: f64,
    range: (f64, f64),
    boost: bool,
}

fn shelf_row(kind: DegradationKind) -> Result<ShelfRow> {
    use DegradationKind::*;
    let row = |high, freq, lo, hi, boost| ShelfRow {
        high,
        freq,
        range: (lo, hi),
        boost,
    };
    Ok(match kind {
        Bright => row(true, 6_000.0, 6.0, 15.0, false),
        Dark => row(true, 6_000.0, 6.0, 15.0, true),
        Airy => row(true, 10_000.0, 10.0, 20.0, false),
        Boom => row(false, 120.0, 10.0, 20.0, false),
        Warm => row(false, 400.0, 6.0, 20.0, false),
        other => return Err(Error::Config(format!("{other} is not a shelf effect"))),
    })
}

fn band_row(kind: DegradationKind) -> Result<(f64, f64, f64, f64)> {
    match kind {
        DegradationKind::Mud => Ok((200.0, 500.0, 6.0, 15.0)),
        DegradationKind::Vocal => Ok((350.0, 3_500.0, 6.0, 20.0)),
        other => Err(Error::Config(format!("{other} is not a band effect"))),
    }
}

fn filtered(wf: &Waveform, chain: &IirChain) -> Result<Waveform> {
    apply_iir(wf, chain)
}

/// Shelf effect with an explicit gain magnitude in dB.
pub fn shelf_with(wf: &Waveform, kind: DegradationKind, gain_db: f64) -> Result<(Waveform, DegradationRecord)> {
    let row = shelf_row(kind)?;
    let signed = if row.boost { gain_db } else { -gain_db };
    let spec = if row.high {
        FilterSpec::HighShelf { freq: row.freq, gain_db: signed }
    } else {
        FilterSpec::LowShelf { freq: row.freq, gain_db: signed }
    };
    let chain = design_filter(&spec, wf.sample_rate() as f64)?;
    let record = DegradationRecord::new(kind)
        .with("gain_db", gain_db)
        .with("freq_hz", row.freq);
    Ok((filtered(wf, &chain)?, record))
}

/// Brightness, darkness, airiness, boominess or warmth via a shelf.
pub fn apply_shelf_eq(wf: &Waveform, kind: DegradationKind, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    let (lo, hi) = shelf_row(kind)?.range;
    shelf_with(wf, kind, rng.random_range(lo..=hi))
}

/// Parallel band boost (mud) or cut (vocal) around a zero-phase Chebyshev II band-pass.
pub fn bandpass_with(wf: &Waveform, kind: DegradationKind, gain_db: f64) -> Result<(Waveform, DegradationRecord)> {
    let (low, high, _, _) = band_row(kind)?;
    let chain = design_filter(
        &FilterSpec::Chebyshev2Bandpass {
            low,
            high,
            stopband_atten_db: CHEBYSHEV_STOPBAND_DB,
        },
        wf.sample_rate() as f64,
    )?;
    let band = apply_iir_zero_phase(wf, &chain)?;
    let mix = if kind == DegradationKind::Mud {
        10f64.powf(gain_db / 20.0) - 1.0
    } else {
        -(1.0 - 10f64.powf(-gain_db / 20.0))
    };
    let channels = wf
        .channels()
        .iter()
        .zip(band.channels())
        .map(|(x, b)| x.iter().zip(b).map(|(x, b)| x + mix * b).collect())
        .collect();
    let record = DegradationRecord::new(kind)
        .with("gain_db", gain_db)
        .with("low_hz", low)
        .with("high_hz", high);
    Ok((Waveform::new(channels, wf.sample_rate())?, record))
}

pub fn apply_bandpass_eq(wf: &Waveform, kind: DegradationKind, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    let (_, _, lo, hi) = band_row(kind)?;
    bandpass_with(wf, kind, rng.random_range(lo..=hi))
}

/// Butterworth low-pass at 2 kHz of the given order.
pub fn clarity_with(wf: &Waveform, order: usize) -> Result<(Waveform, DegradationRecord)> {
    let chain = design_filter(
        &FilterSpec::ButterworthLowpass {
            cutoff: CLARITY_CUTOFF_HZ,
            order,
        },
        wf.sample_rate() as f64,
    )?;
    let record = DegradationRecord::new(DegradationKind::Clarity)
        .with("order", order as f64)
        .with("cutoff_hz", CLARITY_CUTOFF_HZ);
    Ok((filtered(wf, &chain)?, record))
}

pub fn apply_clarity(wf: &Waveform, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    clarity_with(wf, rng.random_range(3..=5))
}

/// Cascade of peaking sections given as `(center Hz, gain dB)`.
pub fn xband_with(wf: &Waveform, bands: &[(f64, f64)]) -> Result<(Waveform, DegradationRecord)> {
    let sr = wf.sample_rate() as f64;
    let mut chain = IirChain::identity();
    let mut record = DegradationRecord::new(DegradationKind::Xband).with("bands", bands.len() as f64);
    for (i, &(freq, gain_db)) in bands.iter().enumerate() {
        chain = chain.then(design_filter(&FilterSpec::Peaking { freq, gain_db, q: XBAND_Q }, sr)?);
        record = record
            .with(&format!("freq_hz_{i}"), freq)
            .with(&format!("gain_db_{i}"), gain_db);
    }
    Ok((filtered(wf, &chain)?, record))
}

/// Log-spaced centers between 60 Hz and 14 kHz.
pub fn xband_centers(n: usize) -> Vec<f64> {
    let ratio = XBAND_HIGH_HZ / XBAND_LOW_HZ;
    (0..n)
        .map(|i| XBAND_LOW_HZ * ratio.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// 8 to 12 peaking bands with gains uniform in [-6, 6] dB.
pub fn apply_xband(wf: &Waveform, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    let n = rng.random_range(8..=12);
    let bands: Vec<(f64, f64)> = xband_centers(n)
        .into_iter()
        .map(|f| (f, rng.random_range(-6.0..=6.0)))
        .collect();
    xband_with(wf, &bands)
}

/// Convolution with one microphone response drawn uniformly from the bank.
pub fn apply_mic_tf(wf: &Waveform, bank: &MicTfBank, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    let index = bank.choose(rng)?;
    let (name, ir) = bank.get(index);
    let out = convolve_repeak(wf, ir)?;
    let record = DegradationRecord {
        ir_name: Some(name.to_string()),
        ..DegradationRecord::new(DegradationKind::Mic).with("ir_index", index as f64)
    };
    Ok((out, record))
}
