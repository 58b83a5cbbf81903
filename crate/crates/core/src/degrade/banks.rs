use std::f64::consts::PI;
use std::path::Path;

use rand::Rng as _;

use crate::audio::{read_wav, write_wav, Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::rng::{child_rng, Rng};

/// Shortest accepted microphone response.
pub const MIN_MIC_IR_LEN: usize = 16;

/// Named impulse responses loaded from a directory of WAV files.
#[derive(Debug, Clone)]
pub struct IrBank {
    entries: Vec<(String, Waveform)>,
}

pub type MicTfBank = IrBank;
pub type RirBank = IrBank;

impl IrBank {
    pub fn new(entries: Vec<(String, Waveform)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyBank("impulse responses"));
        }
        Ok(Self { entries })
    }

    /// Loads every `.wav` in `dir`, sorted by file name; IRs shorter than `min_len` are rejected.
    pub fn load_dir(dir: impl AsRef<Path>, min_len: usize) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        paths.sort();
        let mut entries = Vec::with_capacity(paths.len());
        for path in paths {
            let ir = read_wav(&path)?;
            if ir.len() < min_len {
                return Err(Error::TooShort {
                    needed: min_len,
                    got: ir.len(),
                });
            }
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            entries.push((name, ir));
        }
        Self::new(entries)
    }

    /// Writes each IR as `{name}.wav` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, ir) in &self.entries {
            write_wav(ir, dir.join(format!("{name}.wav")))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> (&str, &Waveform) {
        let (n, w) = &self.entries[index];
        (n, w)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    /// Uniform index into the bank.
    pub fn choose(&self, rng: &mut Rng) -> Result<usize> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBank("impulse responses"));
        }
        Ok(rng.random_range(0..self.entries.len()))
    }
}

/// Blackman-windowed sinc band-pass FIR with unit passband gain.
pub(crate) fn phone_ir(low: f64, high: f64, taps: usize, sample_rate: u32) -> Vec<f64> {
    let sr = sample_rate as f64;
    let mid = (taps - 1) as f64 / 2.0;
    let sinc_lp = |fc: f64, n: f64| {
        let w = 2.0 * fc / sr;
        if n == 0.0 {
            w
        } else {
            (PI * w * n).sin() / (PI * n)
        }
    };
    (0..taps)
        .map(|i| {
            let n = i as f64 - mid;
            let win = 0.42 - 0.5 * (2.0 * PI * i as f64 / (taps - 1) as f64).cos()
                + 0.08 * (4.0 * PI * i as f64 / (taps - 1) as f64).cos();
            (sinc_lp(high, n) - sinc_lp(low, n)) * win
        })
        .collect()
}

/// Twenty phone-like responses: band-limited FIRs with a random resonance and mild ringing.
pub fn synthetic_mic_bank(seed: u64) -> MicTfBank {
    let mut rng = child_rng(seed, "mic-bank");
    let entries = (0..20)
        .map(|i| {
            let low = rng.random_range(150.0..500.0);
            let high = rng.random_range(3_000.0..8_000.0);
            let taps = 2 * rng.random_range(128..256) + 1;
            let mut ir = phone_ir(low, high, taps, SAMPLE_RATE);
            // resonance: a decaying sinusoid inside the passband
            let f = rng.random_range(800.0..(high * 0.8));
            let amount = rng.random_range(0.02..0.08);
            let decay = rng.random_range(0.002..0.006);
            let start = taps / 2;
            for (k, v) in ir[start..].iter_mut().enumerate() {
                let t = k as f64 / SAMPLE_RATE as f64;
                *v += amount * (-t / decay).exp() * (2.0 * PI * f * t).sin();
            }
            let wf = Waveform::mono(ir, SAMPLE_RATE).expect("non-empty FIR");
            (format!("phone_{i:02}"), wf)
        })
        .collect();
    IrBank::new(entries).expect("twenty entries")
}

/// Twelve stereo measured-style room responses: early reflections plus an exponentially
/// decaying, high-frequency-damped noise tail with RT60 between 0.4 and 2.5 s.
pub fn synthetic_rir_bank(seed: u64) -> RirBank {
    let mut rng = child_rng(seed, "rir-bank");
    let sr = SAMPLE_RATE as f64;
    let entries = (0..12)
        .map(|i| {
            let rt60: f64 = rng.random_range(0.4..2.5);
            let len = ((rt60 * 0.8).min(2.0) * sr) as usize;
            let damp = (-2.0 * PI * rng.random_range(2_000.0..8_000.0) / sr).exp();
            let mut channels = Vec::with_capacity(2);
            for _ in 0..2 {
                let mut h = vec![0.0; len];
                h[0] = 1.0;
                for _ in 0..rng.random_range(6..16) {
                    let at = rng.random_range((0.002 * sr) as usize..(0.06 * sr) as usize);
                    h[at] += rng.random_range(-0.6..0.6);
                }
                let onset = (0.01 * sr) as usize;
                let mut lp = 0.0;
                for (n, v) in h.iter_mut().enumerate().skip(onset) {
                    let t = n as f64 / sr;
                    let env = 0.4 * 10f64.powf(-3.0 * t / rt60);
                    let w: f64 = rng.random_range(-1.0..1.0);
                    lp = (1.0 - damp) * w + damp * lp;
                    *v += env * lp * 3.0;
                }
                channels.push(h);
            }
            let wf = Waveform::new(channels, SAMPLE_RATE).expect("two equal channels");
            (format!("room_{i:02}"), wf)
        })
        .collect();
    IrBank::new(entries).expect("twelve entries")
}
