//! The nineteen parameterized degradations and their records.

mod amplitude;
mod banks;
mod dynamics;
mod eq;
mod room;
mod stereo;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use amplitude::{apply_clipping, apply_volume, clip_with, volume_with, CLIP_LEVELS, VOLUME_LEVELS};
pub use banks::{synthetic_mic_bank, synthetic_rir_bank, IrBank, MicTfBank, RirBank, MIN_MIC_IR_LEN};
pub use dynamics::{
    apply_compressor, apply_transient_shaper, compress_with, shape_transients_with, CompressorParams,
};
pub use eq::{
    apply_bandpass_eq, apply_clarity, apply_mic_tf, apply_shelf_eq, apply_xband, bandpass_with, clarity_with,
    shelf_with, xband_with, XBAND_Q,
};
pub use room::{apply_real_rir, apply_reverb, room_ir_with, sample_room, simulate_shoebox_ir, RoomParams};
pub use stereo::{fold_stereo, STEREO_THRESHOLD};

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Eq,
    Dynamics,
    Reverb,
    Amplitude,
    Stereo,
}

impl Category {
    /// Application order used when several effects are combined.
    pub const ALL: [Category; 5] = [
        Category::Eq,
        Category::Dynamics,
        Category::Reverb,
        Category::Amplitude,
        Category::Stereo,
    ];

    pub fn kinds(self) -> &'static [DegradationKind] {
        use DegradationKind::*;
        match self {
            Category::Eq => &[Xband, Mic, Bright, Dark, Airy, Boom, Clarity, Mud, Warm, Vocal],
            Category::Dynamics => &[Comp, Punch],
            Category::Reverb => &[Small, Big, Mix, Real],
            Category::Amplitude => &[Clip, Volume],
            Category::Stereo => &[Stereo],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegradationKind {
    Xband,
    Mic,
    Bright,
    Dark,
    Airy,
    Boom,
    Clarity,
    Mud,
    Warm,
    Vocal,
    Comp,
    Punch,
    Small,
    Big,
    Mix,
    Real,
    Clip,
    Volume,
    Stereo,
}

impl DegradationKind {
    pub const ALL: [DegradationKind; 19] = {
        use DegradationKind::*;
        [
            Xband, Mic, Bright, Dark, Airy, Boom, Clarity, Mud, Warm, Vocal, Comp, Punch, Small, Big, Mix, Real,
            Clip, Volume, Stereo,
        ]
    };

    pub fn category(self) -> Category {
        use DegradationKind::*;
        match self {
            Xband | Mic | Bright | Dark | Airy | Boom | Clarity | Mud | Warm | Vocal => Category::Eq,
            Comp | Punch => Category::Dynamics,
            Small | Big | Mix | Real => Category::Reverb,
            Clip | Volume => Category::Amplitude,
            Stereo => Category::Stereo,
        }
    }

    pub fn name(self) -> &'static str {
        use DegradationKind::*;
        match self {
            Xband => "xband",
            Mic => "mic",
            Bright => "bright",
            Dark => "dark",
            Airy => "airy",
            Boom => "boom",
            Clarity => "clarity",
            Mud => "mud",
            Warm => "warm",
            Vocal => "vocal",
            Comp => "comp",
            Punch => "punch",
            Small => "small",
            Big => "big",
            Mix => "mix",
            Real => "real",
            Clip => "clip",
            Volume => "volume",
            Stereo => "stereo",
        }
    }
}

impl fmt::Display for DegradationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for DegradationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DegradationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown degradation kind '{s}'")))
    }
}

/// One applied effect with its sampled parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationRecord {
    pub kind: DegradationKind,
    #[serde(default)]
    pub hidden: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir_name: Option<String>,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl DegradationRecord {
    pub fn new(kind: DegradationKind) -> Self {
        Self {
            kind,
            hidden: false,
            ir_name: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// Impulse-response banks needed by the convolution effects.
#[derive(Debug, Clone)]
pub struct Banks {
    pub mic: MicTfBank,
    pub rir: RirBank,
}

impl Banks {
    /// Synthetic banks: 20 phone-like microphone responses and 12 measured-style room responses.
    pub fn synthetic(seed: u64) -> Self {
        Self {
            mic: synthetic_mic_bank(seed),
            rir: synthetic_rir_bank(seed),
        }
    }

    /// Loads banks from directories, falling back to the synthetic banks of `seed`.
    pub fn load(mic_dir: Option<&std::path::Path>, rir_dir: Option<&std::path::Path>, seed: u64) -> Result<Self> {
        let mic = match mic_dir {
            Some(d) => IrBank::load_dir(d, MIN_MIC_IR_LEN)?,
            None => synthetic_mic_bank(seed),
        };
        let rir = match rir_dir {
            Some(d) => IrBank::load_dir(d, 1)?,
            None => synthetic_rir_bank(seed),
        };
        Ok(Self { mic, rir })
    }
}

/// Applies one degradation with freshly sampled parameters.
///
/// Returns `Ok(None)` only for `Stereo` when the input is not wide enough to fold.
pub fn apply(
    kind: DegradationKind,
    wf: &Waveform,
    banks: &Banks,
    rng: &mut Rng,
) -> Result<Option<(Waveform, DegradationRecord)>> {
    use DegradationKind::*;
    let out = match kind {
        Bright | Dark | Airy | Boom | Warm => apply_shelf_eq(wf, kind, rng)?,
        Mud | Vocal => apply_bandpass_eq(wf, kind, rng)?,
        Clarity => apply_clarity(wf, rng)?,
        Xband => apply_xband(wf, rng)?,
        Mic => apply_mic_tf(wf, &banks.mic, rng)?,
        Comp => apply_compressor(wf, rng)?,
        Punch => apply_transient_shaper(wf, rng)?,
        Small | Big | Mix => {
            let (ir, params) = simulate_shoebox_ir(kind, rng, wf.sample_rate())?;
            apply_reverb(wf, &ir, params.record(kind))?
        }
        Real => apply_real_rir(wf, &banks.rir, rng)?,
        Clip => apply_clipping(wf, rng)?,
        Volume => apply_volume(wf, rng)?,
        Stereo => return fold_stereo(wf),
    };
    Ok(Some(out))
}
