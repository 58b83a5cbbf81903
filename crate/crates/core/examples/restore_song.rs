//! Trains a small model to undo volume drops, saves it, then restores a 45 s clip in
//! overlapping chunks with the audio cue carried between chunks.
//!
//! cargo run --example restore_song [OUT_DIR]

use remaster::audio::write_wav;
use remaster::dataset::PromptBank;
use remaster::degrade::{apply_volume, DegradationKind};
use remaster::flow::{encode_latent_with, load_checkpoint, save_checkpoint, train_model, LatentPair, PromptIndex, TrainConfig};
use remaster::metrics::metric_error;
use remaster::restore::{restore_song, ChunkPlan, SolverConfig, SolverKind};
use remaster::rng::rng_from_seed;
use remaster::synth;

fn main() -> remaster::Result<()> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let out_dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| tmp.path().to_path_buf());
    std::fs::create_dir_all(&out_dir).expect("output directory");
    let bank = PromptBank::default();
    let prompt = bank.templates(DegradationKind::Volume)?[0].clone();
    let cfg = TrainConfig {
        steps: 300,
        batch: 8,
        lr: 2e-3,
        hidden: 64,
        blocks: 2,
        prompt_dim: 16,
        frame_len: 64,
        crop_frames: Some(32),
        log_every: 100,
        ..TrainConfig::default()
    };
    let mut rng = rng_from_seed(5);
    let pairs: Vec<LatentPair> = (0..16)
        .map(|i| {
            let clean = synth::music(3.0, 100 + i);
            let (quiet, _) = apply_volume(&clean, &mut rng)?;
            Ok(LatentPair {
                clean: encode_latent_with(&clean, cfg.frame_len)?,
                degraded: encode_latent_with(&quiet, cfg.frame_len)?,
                prompts: vec![prompt.clone()],
            })
        })
        .collect::<remaster::Result<_>>()?;
    let (model, _) = train_model(&cfg, &pairs, PromptIndex::from_bank(&bank))?;
    let ckpt = out_dir.join("volume.ckpt");
    save_checkpoint(&model, cfg.frame_len, &ckpt)?;
    let (model, _) = load_checkpoint(&ckpt)?;

    let song = synth::music(45.0, 9);
    let (quiet, _) = apply_volume(&song, &mut rng)?;
    let solver = SolverConfig::new(SolverKind::Euler, 10);
    let restored = restore_song(&quiet, &prompt, &model, &solver, &ChunkPlan::default())?;
    write_wav(&quiet, out_dir.join("quiet.wav"))?;
    write_wav(&restored, out_dir.join("restored.wav"))?;
    println!(
        "volume error: degraded {:.4}, restored {:.4} (files in {})",
        metric_error(DegradationKind::Volume, &quiet, &song)?,
        metric_error(DegradationKind::Volume, &restored, &song)?,
        out_dir.display()
    );
    Ok(())
}
