use rand::Rng as _;

use super::{DegradationKind, DegradationRecord, RirBank};
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::filters::convolve_repeak;
use crate::rng::Rng;

const SPEED_OF_SOUND: f64 = 343.0;
const MAX_ORDER: i32 = 12;
const MIN_RELATIVE_AMPLITUDE: f64 = 1e-3;
const MAX_IR_SECONDS: f64 = 2.0;
const WALL_MARGIN: f64 = 0.5;
const MIN_SOURCE_DISTANCE: f64 = 1.0;

/// Shoebox geometry and per-wall energy absorption (order: x0, x1, y0, y1, z0, z1).
#[derive(Debug, Clone, PartialEq)]
pub struct RoomParams {
    pub dims: [f64; 3],
    pub source: [f64; 3],
    pub receiver: [f64; 3],
    pub absorption: [f64; 6],
    pub absorptive_walls: usize,
}

impl RoomParams {
    pub fn source_distance(&self) -> f64 {
        dist(&self.source, &self.receiver)
    }

    pub fn record(&self, kind: DegradationKind) -> DegradationRecord {
        let mut r = DegradationRecord::new(kind)
            .with("room_x", self.dims[0])
            .with("room_y", self.dims[1])
            .with("room_z", self.dims[2])
            .with("absorption", self.absorption.iter().sum::<f64>() / 6.0)
            .with("source_distance_m", self.source_distance());
        for (i, a) in self.absorption.iter().enumerate() {
            r = r.with(&format!("absorption_{i}"), *a);
        }
        if kind == DegradationKind::Big {
            r = r.with("absorptive_walls", self.absorptive_walls as f64);
        }
        r
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Image coordinates along one axis with their reflection counts on the low and high wall.
fn axis_images(source: f64, length: f64) -> Vec<(f64, i32, i32)> {
    let mut out = Vec::new();
    for l in -MAX_ORDER..=MAX_ORDER {
        for u in 0..=1 {
            let coord = (1 - 2 * u) as f64 * source + 2.0 * l as f64 * length;
            let low = (l - u).abs();
            let high = l.abs();
            if low + high <= MAX_ORDER {
                out.push((coord, low, high));
            }
        }
    }
    out
}

/// Image-source impulse response, trimmed so the direct path is sample 0 with amplitude 1.
pub fn room_ir_with(p: &RoomParams, sample_rate: u32) -> Result<Waveform> {
    if p.dims.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Config(format!("degenerate room {:?}", p.dims)));
    }
    let sr = sample_rate as f64;
    let beta: Vec<f64> = p.absorption.iter().map(|a| (1.0 - a).max(0.0).sqrt()).collect();
    let d0 = p.source_distance().max(1e-3);
    let max_len = (MAX_IR_SECONDS * sr) as usize;
    let axes: Vec<Vec<(f64, i32, i32)>> = (0..3).map(|a| axis_images(p.source[a], p.dims[a])).collect();
    let mut taps: Vec<(usize, f64)> = Vec::new();
    for &(x, xl, xh) in &axes[0] {
        let ox = xl + xh;
        let gx = beta[0].powi(xl) * beta[1].powi(xh);
        let dx = (x - p.receiver[0]).powi(2);
        for &(y, yl, yh) in &axes[1] {
            let oy = ox + yl + yh;
            if oy > MAX_ORDER {
                continue;
            }
            let gy = gx * beta[2].powi(yl) * beta[3].powi(yh);
            let dy = dx + (y - p.receiver[1]).powi(2);
            for &(z, zl, zh) in &axes[2] {
                if oy + zl + zh > MAX_ORDER {
                    continue;
                }
                let g = gy * beta[4].powi(zl) * beta[5].powi(zh);
                let d = (dy + (z - p.receiver[2]).powi(2)).sqrt();
                let amp = g * d0 / d;
                if amp < MIN_RELATIVE_AMPLITUDE {
                    continue;
                }
                let delay = ((d - d0) / SPEED_OF_SOUND * sr).round() as usize;
                if delay < max_len {
                    taps.push((delay, amp));
                }
            }
        }
    }
    let len = taps.iter().map(|t| t.0 + 1).max().unwrap_or(1);
    let mut h = vec![0.0; len];
    for (i, a) in taps {
        h[i] += a;
    }
    Waveform::mono(h, sample_rate)
}

fn place(rng: &mut Rng, dims: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|a| rng.random_range(WALL_MARGIN..=dims[a] - WALL_MARGIN))
}

/// Draws geometry and absorption for `kind` (small, big or mix).
pub fn sample_room(kind: DegradationKind, rng: &mut Rng) -> Result<RoomParams> {
    let ranges: [(f64, f64); 3] = match kind {
        DegradationKind::Small => [(4.0, 8.0), (4.0, 7.0), (2.5, 3.5)],
        DegradationKind::Big => [(7.0, 15.0), (8.0, 18.0), (4.0, 14.0)],
        DegradationKind::Mix => [(3.0, 7.0), (3.0, 9.0), (2.5, 4.0)],
        other => return Err(Error::Config(format!("{other} is not a simulated room"))),
    };
    let dims = ranges.map(|(lo, hi)| rng.random_range(lo..=hi));
    let mut absorption = [0.0; 6];
    let mut absorptive_walls = 0;
    match kind {
        DegradationKind::Mix => {
            for a in absorption.iter_mut() {
                *a = rng.random_range(0.05..=0.30);
            }
        }
        _ => {
            absorption = [rng.random_range(0.05..=0.30); 6];
            if kind == DegradationKind::Big {
                absorptive_walls = rng.random_range(1..=2);
                let mut walls: Vec<usize> = (0..6).collect();
                for _ in 0..absorptive_walls {
                    let w = walls.swap_remove(rng.random_range(0..walls.len()));
                    absorption[w] = rng.random_range(0.5..=0.9);
                }
            }
        }
    }
    let mut source = place(rng, &dims);
    let mut receiver = place(rng, &dims);
    for _ in 0..64 {
        if dist(&source, &receiver) >= MIN_SOURCE_DISTANCE {
            break;
        }
        source = place(rng, &dims);
        receiver = place(rng, &dims);
    }
    Ok(RoomParams {
        dims,
        source,
        receiver,
        absorption,
        absorptive_walls,
    })
}

/// Samples a room for `kind` (small, big or mix) and returns its IR and geometry.
pub fn simulate_shoebox_ir(kind: DegradationKind, rng: &mut Rng, sample_rate: u32) -> Result<(Waveform, RoomParams)> {
    let params = sample_room(kind, rng)?;
    Ok((room_ir_with(&params, sample_rate)?, params))
}

/// Convolves with `ir` and restores the input's peak level.
pub fn apply_reverb(wf: &Waveform, ir: &Waveform, record: DegradationRecord) -> Result<(Waveform, DegradationRecord)> {
    Ok((convolve_repeak(wf, ir)?, record))
}

/// Convolution with a response drawn uniformly from the bank.
pub fn apply_real_rir(wf: &Waveform, bank: &RirBank, rng: &mut Rng) -> Result<(Waveform, DegradationRecord)> {
    let index = bank.choose(rng)?;
    let (name, ir) = bank.get(index);
    let record = DegradationRecord {
        ir_name: Some(name.to_string()),
        ..DegradationRecord::new(DegradationKind::Real).with("ir_index", index as f64)
    };
    apply_reverb(wf, ir, record)
}
