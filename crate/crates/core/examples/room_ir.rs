//! Simulates shoebox rooms and reports how long each impulse response rings.
//!
//! cargo run --example room_ir [OUT_DIR]   (writes the IRs as WAV when a directory is given)

use remaster::audio::write_wav;
use remaster::degrade::{simulate_shoebox_ir, DegradationKind};
use remaster::rng::child_rng;

fn main() -> remaster::Result<()> {
    let out_dir = std::env::args().nth(1);
    for kind in [DegradationKind::Mix, DegradationKind::Small, DegradationKind::Big] {
        for seed in 0..3 {
            let mut rng = child_rng(seed, kind.name());
            let (ir, room) = simulate_shoebox_ir(kind, &mut rng, 44_100)?;
            let h = ir.channel(0);
            let last = h.iter().rposition(|v| v.abs() >= 1e-3).unwrap_or(0);
            let mean_abs = room.absorption.iter().sum::<f64>() / 6.0;
            println!(
                "{kind:<6} {:>5.1} x {:>5.1} x {:>5.1} m  absorption {mean_abs:.2}  -60 dB after {:>6.3} s",
                room.dims[0],
                room.dims[1],
                room.dims[2],
                last as f64 / 44_100.0
            );
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).expect("output directory");
                write_wav(&ir, format!("{dir}/{kind}_{seed}.wav"))?;
            }
        }
    }
    Ok(())
}
