//! Trains the velocity model on a toy latent task (clean frames mixed by a fixed matrix) and
//! restores held-out pairs with Euler and RK4.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use remaster::dataset::PromptBank;
use remaster::flow::{latent_pair, train_model, AudioCue, LatentSeq, PromptEmbedding, PromptIndex, TrainConfig};
use remaster::restore::{integrate, SolverConfig, SolverKind};
use remaster::rng::{rng_from_seed, Rng};

fn gaussian(rng: &mut Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || StandardNormal.sample(rng))
}

fn main() -> remaster::Result<()> {
    let (dims, frames) = (8, 8);
    let mut rng = rng_from_seed(1);
    let mix = Array2::<f64>::eye(dims) * 0.6 + gaussian(&mut rng, (dims, dims)) * 0.09;
    let pair = |rng: &mut Rng| {
        let clean = gaussian(rng, (frames, dims));
        let degraded = clean.dot(&mix);
        (clean, degraded)
    };
    let train: Vec<_> = (0..256)
        .map(|_| {
            let (c, d) = pair(&mut rng);
            latent_pair(c, d, dims / 2, Vec::new())
        })
        .collect::<remaster::Result<_>>()?;
    let cfg = TrainConfig {
        lr: 2e-3,
        batch: 32,
        steps: 800,
        hidden: 64,
        blocks: 2,
        prompt_dim: 8,
        frame_len: dims / 2,
        crop_frames: None,
        log_every: 100,
        ..TrainConfig::default()
    };
    let (model, losses) = train_model(&cfg, &train, PromptIndex::from_bank(&PromptBank::default()))?;
    for step in (0..losses.len()).step_by(100) {
        println!("step {step:>4}  loss {:.5}", losses[step]);
    }
    for solver in [SolverConfig::new(SolverKind::Euler, 10), SolverConfig::new(SolverKind::Rk4, 10)] {
        let (mut restored, mut degraded) = (0.0, 0.0);
        for _ in 0..32 {
            let (clean, deg) = pair(&mut rng);
            let x1 = LatentSeq::new(deg.clone(), dims / 2, 44_100, frames * dims / 2)?;
            let out = integrate(&model, &x1, &PromptEmbedding::empty(), &AudioCue::absent(dims), &solver)?;
            restored += (&out.data - &clean).mapv(|v| v * v).mean().unwrap_or(0.0);
            degraded += (&deg - &clean).mapv(|v| v * v).mean().unwrap_or(0.0);
        }
        println!("{:?} x{}: restored mse {:.5} vs degraded {:.5}", solver.kind, solver.steps, restored / 32.0, degraded / 32.0);
    }
    Ok(())
}
