use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Default stopband attenuation of the Chebyshev type II band-pass.
pub const CHEBYSHEV_STOPBAND_DB: f64 = 40.0;

/// Shelf slope used by the cookbook shelves.
const SHELF_SLOPE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FilterSpec {
    LowShelf { freq: f64, gain_db: f64 },
    HighShelf { freq: f64, gain_db: f64 },
    Peaking { freq: f64, gain_db: f64, q: f64 },
    ButterworthLowpass { cutoff: f64, order: usize },
    /// Order-2 prototype band-pass whose -3 dB edges sit at `low` and `high`.
    Chebyshev2Bandpass {
        low: f64,
        high: f64,
        stopband_atten_db: f64,
    },
}

/// One normalized second-order section: `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub const IDENTITY: Biquad = Biquad {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    fn from_unnormalized(b: [f64; 3], a: [f64; 3]) -> Self {
        Self {
            b0: b[0] / a[0],
            b1: b[1] / a[0],
            b2: b[2] / a[0],
            a1: a[1] / a[0],
            a2: a[2] / a[0],
        }
    }

    /// Stability triangle: both poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    pub fn response(&self, freq: f64, sample_rate: f64) -> C64 {
        let w = 2.0 * PI * freq / sample_rate;
        let z1 = C64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b0 + z1 * self.b1 + z2 * self.b2) / (1.0 + z1 * self.a1 + z2 * self.a2)
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct IirChain {
    pub sections: Vec<Biquad>,
}

impl IirChain {
    pub fn identity() -> Self {
        Self {
            sections: vec![Biquad::IDENTITY],
        }
    }

    pub fn then(mut self, other: IirChain) -> Self {
        self.sections.extend(other.sections);
        self
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    pub fn response(&self, freq: f64, sample_rate: f64) -> C64 {
        self.sections
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, s| acc * s.response(freq, sample_rate))
    }

    pub fn magnitude_db(&self, freq: f64, sample_rate: f64) -> f64 {
        20.0 * self.response(freq, sample_rate).norm().log10()
    }
}

fn check_freq(f: f64, sample_rate: f64, what: &str) -> Result<()> {
    if f > 0.0 && f < sample_rate / 2.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidFilter(format!(
            "{what} {f} Hz outside (0, {})",
            sample_rate / 2.0
        )))
    }
}

fn shelf(freq: f64, gain_db: f64, sample_rate: f64, high: bool) -> Biquad {
    let a = 10f64.powf(gain_db / 40.0);
    let w0 = 2.0 * PI * freq / sample_rate;
    let (sn, cs) = w0.sin_cos();
    let alpha = sn / 2.0 * ((a + 1.0 / a) * (1.0 / SHELF_SLOPE - 1.0) + 2.0).sqrt();
    let k = 2.0 * a.sqrt() * alpha;
    if high {
        Biquad::from_unnormalized(
            [
                a * ((a + 1.0) + (a - 1.0) * cs + k),
                -2.0 * a * ((a - 1.0) + (a + 1.0) * cs),
                a * ((a + 1.0) + (a - 1.0) * cs - k),
            ],
            [
                (a + 1.0) - (a - 1.0) * cs + k,
                2.0 * ((a - 1.0) - (a + 1.0) * cs),
                (a + 1.0) - (a - 1.0) * cs - k,
            ],
        )
    } else {
        Biquad::from_unnormalized(
            [
                a * ((a + 1.0) - (a - 1.0) * cs + k),
                2.0 * a * ((a - 1.0) - (a + 1.0) * cs),
                a * ((a + 1.0) - (a - 1.0) * cs - k),
            ],
            [
                (a + 1.0) + (a - 1.0) * cs + k,
                -2.0 * ((a - 1.0) + (a + 1.0) * cs),
                (a + 1.0) + (a - 1.0) * cs - k,
            ],
        )
    }
}

fn peaking(freq: f64, gain_db: f64, q: f64, sample_rate: f64) -> Biquad {
    let a = 10f64.powf(gain_db / 40.0);
    let w0 = 2.0 * PI * freq / sample_rate;
    let (sn, cs) = w0.sin_cos();
    let alpha = sn / (2.0 * q);
    Biquad::from_unnormalized(
        [1.0 + alpha * a, -2.0 * cs, 1.0 - alpha * a],
        [1.0 + alpha / a, -2.0 * cs, 1.0 - alpha / a],
    )
}

fn butterworth_lowpass(cutoff: f64, order: usize, sample_rate: f64) -> Vec<Biquad> {
    let k = (PI * cutoff / sample_rate).tan();
    let mut sections: Vec<Biquad> = (0..order / 2)
        .map(|i| {
            let q = 1.0 / (2.0 * ((2 * i + 1) as f64 * PI / (2 * order) as f64).sin());
            let norm = 1.0 / (1.0 + k / q + k * k);
            let b0 = k * k * norm;
            Biquad {
                b0,
                b1: 2.0 * b0,
                b2: b0,
                a1: 2.0 * (k * k - 1.0) * norm,
                a2: (1.0 - k / q + k * k) * norm,
            }
        })
        .collect();
    if order % 2 == 1 {
        let norm = 1.0 / (1.0 + k);
        sections.push(Biquad {
            b0: k * norm,
            b1: k * norm,
            b2: 0.0,
            a1: (k - 1.0) * norm,
            a2: 0.0,
        });
    }
    sections
}

/// Analog Chebyshev II low-pass prototype with its -3 dB point at 1 rad/s.
fn cheby2_prototype(order: usize, atten_db: f64) -> (Vec<C64>, Vec<C64>) {
    let n = order as f64;
    let de = 1.0 / (10f64.powf(0.1 * atten_db) - 1.0).sqrt();
    let mu = (1.0 / de).asinh() / n;
    let zeros: Vec<C64> = (0..order)
        .map(|i| -(order as i64) + 1 + 2 * i as i64)
        .filter(|&m| !(order % 2 == 1 && m == 0))
        .map(|m| {
            let s = (m as f64 * PI / (2.0 * n)).sin();
            -(C64::new(0.0, 1.0) / s).conj()
        })
        .collect();
    let poles: Vec<C64> = (0..order)
        .map(|i| {
            let m = -(order as f64) + 1.0 + 2.0 * i as f64;
            let e = -C64::from_polar(1.0, PI * m / (2.0 * n));
            1.0 / C64::new(mu.sinh() * e.re, mu.cosh() * e.im)
        })
        .collect();
    // stopband edge sits at 1 rad/s; move the half-power point there instead
    let w3 = 1.0 / ((1.0 / de).acosh() / n).cosh();
    let scale = 1.0 / w3;
    (
        zeros.into_iter().map(|z| z * scale).collect(),
        poles.into_iter().map(|p| p * scale).collect(),
    )
}

fn lowpass_to_bandpass(roots: &[C64], w0: f64, bw: f64) -> Vec<C64> {
    roots
        .iter()
        .flat_map(|&r| {
            let half = r * bw / 2.0;
            let disc = (half * half - w0 * w0).sqrt();
            [half + disc, half - disc]
        })
        .collect()
}

fn bilinear(root: C64, fs2: f64) -> C64 {
    (fs2 + root) / (fs2 - root)
}

/// Groups conjugate roots into pairs, returning one representative per pair (im >= 0).
fn conjugate_pairs(roots: &[C64]) -> Vec<C64> {
    let mut upper: Vec<C64> = roots.iter().copied().filter(|r| r.im >= 0.0).collect();
    upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    upper
}

fn chebyshev2_bandpass(low: f64, high: f64, atten_db: f64, sample_rate: f64) -> Result<Vec<Biquad>> {
    let fs2 = 2.0 * sample_rate;
    let warp = |f: f64| fs2 * (PI * f / sample_rate).tan();
    let (wl, wh) = (warp(low), warp(high));
    let w0 = (wl * wh).sqrt();
    let bw = wh - wl;
    let (z, p) = cheby2_prototype(2, atten_db);
    let zd: Vec<C64> = lowpass_to_bandpass(&z, w0, bw)
        .into_iter()
        .map(|r| bilinear(r, fs2))
        .collect();
    let pd: Vec<C64> = lowpass_to_bandpass(&p, w0, bw)
        .into_iter()
        .map(|r| bilinear(r, fs2))
        .collect();
    let zp = conjugate_pairs(&zd);
    let pp = conjugate_pairs(&pd);
    if zp.len() != 2 || pp.len() != 2 {
        return Err(Error::UnstableFilter(
            "band-pass roots are not conjugate pairs".into(),
        ));
    }
    let section = |z: C64, p: C64| Biquad {
        b0: 1.0,
        b1: -2.0 * z.re,
        b2: z.norm_sqr(),
        a1: -2.0 * p.re,
        a2: p.norm_sqr(),
    };
    // pair poles with zeros by angle
    let mut sections = vec![section(zp[0], pp[0]), section(zp[1], pp[1])];
    let center = (w0 / fs2).atan() * sample_rate / PI;
    let gain = IirChain {
        sections: sections.clone(),
    }
    .response(center, sample_rate)
    .norm();
    sections[0].b0 /= gain;
    sections[0].b1 /= gain;
    sections[0].b2 /= gain;
    Ok(sections)
}

/// Designs a stable cascade of biquads for `spec` at `sample_rate`.
pub fn design_filter(spec: &FilterSpec, sample_rate: f64) -> Result<IirChain> {
    let sections = match *spec {
        FilterSpec::LowShelf { freq, gain_db } => {
            check_freq(freq, sample_rate, "shelf corner")?;
            vec![shelf(freq, gain_db, sample_rate, false)]
        }
        FilterSpec::HighShelf { freq, gain_db } => {
            check_freq(freq, sample_rate, "shelf corner")?;
            vec![shelf(freq, gain_db, sample_rate, true)]
        }
        FilterSpec::Peaking { freq, gain_db, q } => {
            check_freq(freq, sample_rate, "peaking center")?;
            if !(q > 0.0) {
                return Err(Error::InvalidFilter(format!("q must be > 0, got {q}")));
            }
            vec![peaking(freq, gain_db, q, sample_rate)]
        }
        FilterSpec::ButterworthLowpass { cutoff, order } => {
            check_freq(cutoff, sample_rate, "cutoff")?;
            if order == 0 {
                return Err(Error::InvalidFilter("order must be >= 1".into()));
            }
            butterworth_lowpass(cutoff, order, sample_rate)
        }
        FilterSpec::Chebyshev2Bandpass {
            low,
            high,
            stopband_atten_db,
        } => {
            check_freq(low, sample_rate, "band edge")?;
            check_freq(high, sample_rate, "band edge")?;
            if low >= high {
                return Err(Error::InvalidFilter(format!(
                    "band edges must increase, got {low}..{high}"
                )));
            }
            if !(stopband_atten_db > 0.0) {
                return Err(Error::InvalidFilter("stopband attenuation must be > 0".into()));
            }
            chebyshev2_bandpass(low, high, stopband_atten_db, sample_rate)?
        }
    };
    let chain = IirChain { sections };
    if !chain.is_stable() {
        return Err(Error::UnstableFilter(format!("{spec:?}")));
    }
    Ok(chain)
}
