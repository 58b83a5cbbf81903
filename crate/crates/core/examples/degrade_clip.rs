//! Applies every degradation to a synthetic test signal and prints the sampled parameters
//! next to the metric that scores each one.
//!
//! cargo run --example degrade_clip [OUT_DIR]

use remaster::audio::write_wav;
use remaster::degrade::{self, Banks, DegradationKind};
use remaster::metrics::metric_error;
use remaster::rng::child_rng;
use remaster::synth;

fn main() -> remaster::Result<()> {
    let out_dir = std::env::args().nth(1);
    let clean = synth::pink_noise_with_clicks(10.0, 1);
    let banks = Banks::synthetic(0);
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir).expect("output directory");
        write_wav(&clean, format!("{dir}/clean.wav"))?;
    }
    for kind in DegradationKind::ALL {
        let mut rng = child_rng(42, kind.name());
        let Some((degraded, record)) = degrade::apply(kind, &clean, &banks, &mut rng)? else {
            println!("{kind:<8} not eligible");
            continue;
        };
        let err = metric_error(kind, &degraded, &clean)?;
        let params: Vec<String> = record.params.iter().take(4).map(|(k, v)| format!("{k}={v:.3}")).collect();
        println!("{kind:<8} error {err:>9.5}  {}", params.join(" "));
        if let Some(dir) = &out_dir {
            write_wav(&degraded, format!("{dir}/{kind}.wav"))?;
        }
    }
    Ok(())
}
