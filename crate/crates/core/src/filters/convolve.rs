use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::IirChain;
use crate::audio::Waveform;
use crate::error::{Error, Result};

/// Direct-form-II-transposed filtering of one channel.
pub fn filter_signal(chain: &IirChain, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in &chain.sections {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let input = *v;
            let out = s.b0 * input + z1;
            z1 = s.b1 * input - s.a1 * out + z2;
            z2 = s.b2 * input - s.a2 * out;
            *v = out;
        }
    }
    y
}

/// Filters each channel independently.
pub fn apply_iir(wf: &Waveform, chain: &IirChain) -> Result<Waveform> {
    wf.check_finite()?;
    Ok(wf.map_channels(|c| filter_signal(chain, c)))
}

/// Forward-backward filtering: magnitude response squared, zero phase.
pub fn apply_iir_zero_phase(wf: &Waveform, chain: &IirChain) -> Result<Waveform> {
    wf.check_finite()?;
    Ok(wf.map_channels(|c| {
        let mut y = filter_signal(chain, c);
        y.reverse();
        let mut y = filter_signal(chain, &y);
        y.reverse();
        y
    }))
}

/// Overlap-add linear convolution of `x` with `h`, truncated to `x.len()`.
pub fn convolve_signal(x: &[f64], h: &[f64]) -> Vec<f64> {
    let m = h.len();
    let fft_len = (4 * m).next_power_of_two().max(256);
    let block = fft_len - m + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(fft_len);
    let inv = planner.plan_fft_inverse(fft_len);
    let mut scratch = vec![Complex::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];

    let mut hf: Vec<Complex<f64>> = h.iter().map(|&v| Complex::new(v, 0.0)).collect();
    hf.resize(fft_len, Complex::default());
    fwd.process_with_scratch(&mut hf, &mut scratch);

    let mut out = vec![0.0; x.len()];
    let mut buf = vec![Complex::default(); fft_len];
    let scale = 1.0 / fft_len as f64;
    for start in (0..x.len()).step_by(block) {
        let end = (start + block).min(x.len());
        for (b, v) in buf.iter_mut().zip(x[start..end].iter().copied().chain(std::iter::repeat(0.0))) {
            *b = Complex::new(v, 0.0);
        }
        fwd.process_with_scratch(&mut buf, &mut scratch);
        for (b, hv) in buf.iter_mut().zip(&hf) {
            *b *= hv;
        }
        inv.process_with_scratch(&mut buf, &mut scratch);
        let valid = (x.len() - start).min(fft_len);
        for (o, b) in out[start..start + valid].iter_mut().zip(&buf) {
            *o += b.re * scale;
        }
    }
    out
}

/// Convolves every channel with the impulse response, keeping the input length.
///
/// A mono IR is applied to both channels; a stereo IR is applied channel-wise.
pub fn fft_convolve(wf: &Waveform, ir: &Waveform) -> Result<Waveform> {
    if ir.is_empty() {
        return Err(Error::EmptyImpulseResponse);
    }
    if ir.num_channels() != 1 && ir.num_channels() != wf.num_channels() {
        return Err(Error::ShapeMismatch(format!(
            "{}-channel IR for {}-channel signal",
            ir.num_channels(),
            wf.num_channels()
        )));
    }
    wf.check_finite()?;
    let mut ch = 0;
    Ok(wf.map_channels(|x| {
        let h = ir.channel(ch.min(ir.num_channels() - 1));
        ch += 1;
        convolve_signal(x, h)
    }))
}

/// Convolution followed by rescaling so that the output peak equals the input peak.
pub fn convolve_repeak(wf: &Waveform, ir: &Waveform) -> Result<Waveform> {
    let out = fft_convolve(wf, ir)?;
    let (src, dst) = (wf.peak(), out.peak());
    if src == 0.0 || dst == 0.0 {
        return Ok(out);
    }
    Ok(out.scaled(src / dst))
}
