//! IIR filter design, application and FFT convolution.

mod convolve;
mod design;

pub use convolve::{
    apply_iir, apply_iir_zero_phase, convolve_repeak, convolve_signal, fft_convolve, filter_signal,
};
pub use design::{design_filter, Biquad, FilterSpec, IirChain, CHEBYSHEV_STOPBAND_DB};
