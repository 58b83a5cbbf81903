//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits nonzero if
//! any failed. Pass a substring argument to run a subset.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use remaster::audio::{write_wav, Waveform};
use remaster::dataset::{
    build_dataset, compose_prompt, min_track_seconds, read_manifest, write_manifest, write_synthetic_corpus, BuildConfig,
    ManifestRow, PromptBank,
};
use remaster::degrade::{
    self, apply_volume, clip_with, compress_with, sample_room, Banks, Category, CompressorParams, DegradationKind, IrBank,
};
use remaster::flow::{
    decode_latent, encode_latent, latent_pair, make_training_example_at, sample_timestep, train_model, AudioCue, LatentSeq,
    ModelConfig, PromptEmbedding, PromptIndex, TrainConfig, VelocityModel,
};
use remaster::metrics::{evaluate_dataset, metric_error, stereo_width};
use remaster::restore::{crossfade_weights, integrate, restore_song, ChunkPlan, SolverConfig, SolverKind, VelocityField};
use remaster::rng::{child_rng, rng_from_seed, Rng};
use remaster::synth;

const SR: u32 = 44_100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, budget_s: u64) -> bool {
    elapsed <= Duration::from_secs(budget_s)
}

fn gaussian(rng: &mut Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || StandardNormal.sample(rng))
}

fn mse(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    (&a - &b).mapv(|d| d * d).mean().unwrap()
}

fn add_noise(wf: &Waveform, peak: f64, seed: u64) -> Waveform {
    let n = synth::white_noise(wf.len(), peak, seed);
    let channels = wf
        .channels()
        .iter()
        .zip(n.channels())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    Waveform::new(channels, wf.sample_rate()).unwrap()
}

fn directionality() -> Outcome {
    let start = Instant::now();
    let banks = Banks::synthetic(0);
    let seeds: Vec<u64> = (0..10).collect();
    let failures: Vec<String> = seeds
        .par_iter()
        .flat_map_iter(|&seed| {
            let clean = synth::pink_noise_with_clicks(30.0, seed);
            let jittered = add_noise(&clean, 1e-4, 1_000 + seed);
            let banks = &banks;
            DegradationKind::ALL.into_iter().filter_map(move |kind| {
                let mut rng = child_rng(seed, kind.name());
                let (degraded, _) = degrade::apply(kind, &clean, banks, &mut rng).unwrap()?;
                let floor = metric_error(kind, &jittered, &clean).unwrap();
                let err = metric_error(kind, &degraded, &clean).unwrap();
                (err <= floor).then(|| format!("{kind}/seed{seed}: {err:.3e} <= floor {floor:.3e}"))
            })
        })
        .collect();
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && within(elapsed, 120);
    let detail = if failures.is_empty() {
        format!("19 kinds x 10 seeds above the jitter floor in {:.1} s", elapsed.as_secs_f64())
    } else {
        format!("{} failures: {}", failures.len(), failures.join("; "))
    };
    outcome(pass, detail)
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

/// Returns a description of the first out-of-range parameter, if any.
fn check_record(r: &degrade::DegradationRecord) -> Option<String> {
    use DegradationKind::*;
    let p = |k: &str| r.param(k).unwrap_or(f64::NAN);
    let bad = |what: &str| Some(format!("{}: {what} in {:?}", r.kind, r.params));
    let shelf = |lo, hi, freq| {
        if !in_range(p("gain_db"), lo, hi) || p("freq_hz") != freq {
            bad("shelf gain/frequency")
        } else {
            None
        }
    };
    match r.kind {
        Bright | Dark => shelf(6.0, 15.0, 6_000.0),
        Airy => shelf(10.0, 20.0, 10_000.0),
        Boom => shelf(10.0, 20.0, 120.0),
        Warm => shelf(6.0, 20.0, 400.0),
        Mud | Vocal => {
            let (lo, hi, gmax) = if r.kind == Mud { (200.0, 500.0, 15.0) } else { (350.0, 3_500.0, 20.0) };
            (!in_range(p("gain_db"), 6.0, gmax) || p("low_hz") != lo || p("high_hz") != hi).then(|| bad("band gain/edges"))?
        }
        Clarity => (![3.0, 4.0, 5.0].contains(&p("order")) || p("cutoff_hz") != 2_000.0).then(|| bad("order"))?,
        Xband => {
            let n = p("bands");
            if !(n.fract() == 0.0 && in_range(n, 8.0, 12.0)) {
                return bad("band count");
            }
            let ok = (0..n as usize).all(|i| {
                in_range(p(&format!("gain_db_{i}")), -6.0, 6.0) && in_range(p(&format!("freq_hz_{i}")), 60.0 - 1e-9, 14_000.0 + 1e-9)
            });
            (!ok).then(|| bad("band gain/center"))?
        }
        Mic => (!(p("ir_index").fract() == 0.0 && in_range(p("ir_index"), 0.0, 19.0)) || r.ir_name.is_none())
            .then(|| bad("mic index"))?,
        Real => (!(p("ir_index").fract() == 0.0 && in_range(p("ir_index"), 0.0, 11.0)) || r.ir_name.is_none())
            .then(|| bad("rir index"))?,
        Comp => {
            let ok = in_range(p("attack_ms"), 3.0, 80.0)
                && in_range(p("release_ms"), 80.0, 250.0)
                && in_range(p("threshold_db"), -45.0, -38.0)
                && in_range(p("ratio"), 6.0, 45.0)
                && in_range(p("makeup_db"), 16.0, 25.0);
            (!ok).then(|| bad("compressor"))?
        }
        Punch => {
            let ok = p("attack_ms") == 3.0 && p("release_ms") == 150.0 && in_range(p("reduction_db"), 8.0, 15.0) && p("threshold").is_finite();
            (!ok).then(|| bad("shaper"))?
        }
        Clip => (![2.0, 3.0, 5.0].contains(&p("level")) || !in_range(p("clipped_fraction"), 0.0, 1.0)).then(|| bad("clip level"))?,
        Volume => (![0.001, 0.003, 0.01, 0.05].contains(&p("level"))).then(|| bad("volume level"))?,
        Stereo => (!(p("side_std") > 0.08)).then(|| bad("side std"))?,
        Small | Big | Mix => unreachable!("rooms are checked from their geometry"),
    }
}

fn check_room(kind: DegradationKind, rng: &mut Rng) -> Option<String> {
    let p = sample_room(kind, rng).unwrap();
    let ranges = match kind {
        DegradationKind::Small => [(4.0, 8.0), (4.0, 7.0), (2.5, 3.5)],
        DegradationKind::Big => [(7.0, 15.0), (8.0, 18.0), (4.0, 14.0)],
        _ => [(3.0, 7.0), (3.0, 9.0), (2.5, 4.0)],
    };
    let dims_ok = p.dims.iter().zip(ranges).all(|(d, (lo, hi))| in_range(*d, lo, hi));
    let placed_ok = (0..3).all(|a| {
        [p.source[a], p.receiver[a]]
            .iter()
            .all(|c| *c >= 0.5 - 1e-12 && *c <= p.dims[a] - 0.5 + 1e-12)
    });
    let outside: Vec<f64> = p.absorption.iter().copied().filter(|a| !in_range(*a, 0.05, 0.30)).collect();
    let absorption_ok = match kind {
        DegradationKind::Big => {
            in_range(p.absorptive_walls as f64, 1.0, 2.0)
                && outside.len() <= p.absorptive_walls
                && outside.iter().all(|a| in_range(*a, 0.5, 0.9))
        }
        _ => outside.is_empty(),
    };
    (!(dims_ok && placed_ok && absorption_ok)).then(|| format!("{kind}: {p:?}"))
}

fn parameter_ranges() -> Outcome {
    let start = Instant::now();
    let draws = 10_000u64;
    let signal = synth::white_noise(SR as usize / 20, 0.9, 5);
    let short_rirs: Vec<(String, Waveform)> = (0..12)
        .map(|i| {
            let ir = synth::white_noise(64, 1.0, 100 + i);
            (format!("rir{i:02}"), Waveform::mono(ir.channel(0).to_vec(), SR).unwrap())
        })
        .collect();
    let banks = Banks {
        mic: Banks::synthetic(0).mic,
        rir: IrBank::new(short_rirs).unwrap(),
    };
    let failures: Vec<String> = DegradationKind::ALL
        .par_iter()
        .flat_map_iter(|&kind| {
            let banks = &banks;
            let signal = &signal;
            (0..draws).filter_map(move |seed| {
                let mut rng = child_rng(seed, kind.name());
                match kind {
                    DegradationKind::Small | DegradationKind::Big | DegradationKind::Mix => check_room(kind, &mut rng),
                    _ => {
                        let (_, record) = degrade::apply(kind, signal, banks, &mut rng).unwrap()?;
                        check_record(&record)
                    }
                }
            })
        })
        .collect();
    let elapsed = start.elapsed();
    let detail = match failures.first() {
        None => format!("{draws} draws x 19 kinds in range in {:.1} s", elapsed.as_secs_f64()),
        Some(f) => format!("{} out-of-range draws, first: {f}", failures.len()),
    };
    outcome(failures.is_empty() && within(elapsed, 60), detail)
}

fn degraded_input_pattern() -> Outcome {
    let banks = Banks::synthetic(0);
    let kinds = [
        DegradationKind::Warm,
        DegradationKind::Mud,
        DegradationKind::Airy,
        DegradationKind::Clip,
        DegradationKind::Stereo,
    ];
    // narrow mixes are not eligible for folding, exactly as in dataset generation
    let per_pair: Vec<(Vec<Option<f64>>, f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let clean = synth::music(8.0, seed);
            let errors = kinds
                .iter()
                .map(|&kind| {
                    let mut rng = child_rng(seed, kind.name());
                    let (degraded, _) = degrade::apply(kind, &clean, &banks, &mut rng).unwrap()?;
                    if kind == DegradationKind::Stereo {
                        assert_eq!(stereo_width(&degraded).unwrap(), 0.0);
                    }
                    Some(metric_error(kind, &degraded, &clean).unwrap())
                })
                .collect();
            let clip_floor = metric_error(DegradationKind::Clip, &add_noise(&clean, 1e-4, 7_000 + seed), &clean).unwrap();
            (errors, clip_floor, stereo_width(&clean).unwrap())
        })
        .collect();
    let n = per_pair.len() as f64;
    let mean = |i: usize| per_pair.iter().map(|p| p.0[i].unwrap()).sum::<f64>() / n;
    let (warm, mud, airy, clip) = (mean(0), mean(1), mean(2), mean(3));
    let clip_floor = per_pair.iter().map(|p| p.1).sum::<f64>() / n;
    let folded: Vec<(f64, f64)> = per_pair.iter().filter_map(|p| p.0[4].map(|e| (e, p.2))).collect();
    let stereo_ok = !folded.is_empty() && folded.iter().all(|(e, w)| (e - w).abs() <= 1e-9 * w.max(1.0));
    let pass = warm >= 5.0 * airy && mud >= 5.0 * airy && clip >= 100.0 * clip_floor && stereo_ok;
    outcome(
        pass,
        format!(
            "warm {warm:.4} mud {mud:.4} airy {airy:.4} (ratios {:.1}x, {:.1}x); clip flatness {clip:.4} vs floor {clip_floor:.2e}; stereo error equals clean width on {} foldable clips: {stereo_ok}",
            warm / airy,
            mud / airy,
            folded.len()
        ),
    )
}

fn hash_tree(root: &Path) -> BTreeMap<PathBuf, [u8; 32]> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(std::fs::read(&path).unwrap());
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), digest.into());
            }
        }
    }
    out
}

fn dataset_constraints() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    // 2 s excerpts keep 200 clips within the time and disk budget; none of the checks below
    // depend on excerpt length
    let excerpt = 2.0;
    write_synthetic_corpus(&corpus, 200, min_track_seconds(excerpt).ceil(), 11).unwrap();
    let cfg = |out: &str| BuildConfig {
        excerpt_seconds: excerpt,
        ..BuildConfig::new(&corpus, tmp.path().join(out), 2024, 4)
    };
    let rows = build_dataset(&cfg("a")).unwrap();
    let first = hash_tree(&tmp.path().join("a"));
    std::fs::remove_dir_all(tmp.path().join("a")).unwrap();
    let rebuilt = build_dataset(&cfg("b")).unwrap();
    let second = hash_tree(&tmp.path().join("b"));
    let elapsed = start.elapsed();

    let mut problems = Vec::new();
    let mut by_clip: BTreeMap<&str, Vec<&ManifestRow>> = BTreeMap::new();
    for r in &rows {
        by_clip.entry(r.clip_id.as_str()).or_default().push(r);
    }
    if by_clip.len() != 200 {
        problems.push(format!("{} clips", by_clip.len()));
    }
    for (clip, variants) in &by_clip {
        let mut arity: Vec<usize> = variants.iter().map(|r| r.visible_kinds().len()).collect();
        arity.sort_unstable();
        if arity != [1, 1, 1, 1, 2, 2, 3] {
            problems.push(format!("{clip}: arity {arity:?}"));
        }
        let indices: BTreeSet<usize> = variants.iter().map(|r| r.variant_index).collect();
        if indices != (0..7).collect() {
            problems.push(format!("{clip}: variant indices {indices:?}"));
        }
    }
    for r in &rows {
        let cats: Vec<Category> = r.visible_kinds().iter().map(|k| k.category()).collect();
        let distinct: BTreeSet<String> = cats.iter().map(|c| format!("{c:?}")).collect();
        if distinct.len() != cats.len() {
            problems.push(format!("{} v{}: repeated category {cats:?}", r.clip_id, r.variant_index));
        }
    }
    let eligible: Vec<&ManifestRow> = rows.iter().filter(|r| r.hidden_clip_eligible()).collect();
    let n = eligible.len() as f64;
    let rate = eligible.iter().filter(|r| r.hidden_clipping).count() as f64 / n;
    let half_width = 1.96 * (0.15 * 0.85 / n).sqrt();
    if (rate - 0.15).abs() > half_width {
        problems.push(format!("hidden rate {rate:.4} outside 0.15 +- {half_width:.4}"));
    }
    if rows != rebuilt || first != second {
        problems.push("rebuild differs".into());
    }
    if !within(elapsed, 600) {
        problems.push(format!("took {:.0} s", elapsed.as_secs_f64()));
    }
    outcome(
        problems.is_empty(),
        format!(
            "{} rows, hidden clipping {:.3} of {} eligible (band +-{half_width:.3}), {} files identical on rebuild, {:.0} s{}",
            rows.len(),
            rate,
            eligible.len(),
            first.len(),
            elapsed.as_secs_f64(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn compressor_static_curve() -> Outcome {
    // peak 0.1 is -20 dBFS
    let n = 2 * SR as usize;
    let tone: Vec<f64> = (0..n)
        .map(|i| 0.1 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / SR as f64).sin())
        .collect();
    let wf = Waveform::stereo(tone.clone(), tone, SR).unwrap();
    let params = CompressorParams {
        attack_ms: 10.0,
        release_ms: 100.0,
        threshold_db: -40.0,
        ratio: 10.0,
        makeup_db: 0.0,
    };
    let (out, _) = compress_with(&wf, &params).unwrap();
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let tail = n / 2..;
    let gr = 20.0 * (rms(&wf.channel(0)[tail.clone()]) / rms(&out.channel(0)[tail])).log10();
    outcome((gr - 18.0).abs() <= 0.5, format!("steady-state reduction {gr:.3} dB (expected 18 +- 0.5)"))
}

fn clipping_fraction() -> Outcome {
    let n = SR as usize;
    let tone: Vec<f64> = (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * 997.0 * i as f64 / SR as f64).sin())
        .collect();
    let wf = Waveform::stereo(tone.clone(), tone, SR).unwrap();
    let (out, record) = clip_with(&wf, 2.0).unwrap();
    let clipped = out.channels().iter().flatten().filter(|v| v.abs() >= 1.0).count() as f64 / (2 * n) as f64;
    let recorded = record.param("clipped_fraction").unwrap();
    let pass = (clipped - 2.0 / 3.0).abs() <= 0.01 && (recorded - clipped).abs() < 1e-12;
    outcome(pass, format!("clipped fraction {clipped:.4} (recorded {recorded:.4}, expected 0.6667 +- 0.01)"))
}

fn flow_algebra_and_gradients() -> Outcome {
    let mut rng = rng_from_seed(21);
    let x0 = gaussian(&mut rng, (5, 8));
    let x1 = gaussian(&mut rng, (5, 8));
    let b0 = make_training_example_at(&x0, &x1, 0.0).unwrap();
    let b1 = make_training_example_at(&x0, &x1, 1.0).unwrap();
    let t = 0.37;
    let bt = make_training_example_at(&x0, &x1, t).unwrap();
    let interp = ndarray::Zip::from(&x0).and(&x1).map_collect(|a, b| t * b + (1.0 - t) * a);
    let diff = &x0 - &x1;
    let algebra = b0.x_t == x0 && b1.x_t == x1 && bt.x_t == interp && b0.v_t == diff && bt.v_t == diff && b1.v_t == diff;

    let cfg = ModelConfig {
        latent_dims: 4,
        hidden: 6,
        blocks: 2,
        prompt_dim: 3,
        seed: 4,
    };
    let mut model = VelocityModel::new(cfg, PromptIndex::from_bank(&PromptBank::default())).unwrap();
    for (_, tensor) in model.params.tensors_mut() {
        for v in tensor.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += 0.3 * z;
        }
    }
    let bank = PromptBank::default();
    let text = bank.templates(DegradationKind::Warm).unwrap()[0].clone();
    let example = (
        make_training_example_at(&gaussian(&mut rng, (2, 4)), &gaussian(&mut rng, (2, 4)), 0.6).unwrap(),
        remaster::flow::embed_prompt(&text, &model.prompt_index),
        AudioCue {
            vector: gaussian(&mut rng, (1, 4)).row(0).to_owned(),
            seconds: 7.0,
            present: true,
        },
    );
    let examples = vec![example];
    let (_, grads) = model.loss_and_gradients(&examples).unwrap();
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|(_, t)| t.to_vec()).collect();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for (ti, g) in analytic.iter().enumerate() {
        for (i, &a) in g.iter().enumerate() {
            let orig = model.params.tensors()[ti].1[i];
            let h = 1e-5;
            model.params.tensors_mut()[ti].1[i] = orig + h;
            let up = model.loss_and_gradients(&examples).unwrap().0;
            model.params.tensors_mut()[ti].1[i] = orig - h;
            let down = model.loss_and_gradients(&examples).unwrap().0;
            model.params.tensors_mut()[ti].1[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((numeric - a).abs() / numeric.abs().max(a.abs()).max(1e-6));
            checked += 1;
        }
    }

    let draws = 1_000_000;
    let mut trng = rng_from_seed(77);
    let mean = (0..draws).map(|_| sample_timestep(&mut trng)).sum::<f64>() / draws as f64;
    let pass = algebra && worst < 1e-4 && (mean - 7.0 / 12.0).abs() <= 0.002;
    outcome(
        pass,
        format!("identities exact: {algebra}; worst relative gradient error {worst:.2e} over {checked} parameters; timestep mean {mean:.5} (7/12 = 0.58333)"),
    )
}

/// Returns a fixed velocity regardless of state and time.
struct ConstantField(Array2<f64>);

impl VelocityField for ConstantField {
    fn latent_dims(&self) -> usize {
        self.0.ncols()
    }
    fn velocity(&self, _: ArrayView2<f64>, _: f64, _: &PromptEmbedding, _: &AudioCue) -> remaster::Result<Array2<f64>> {
        Ok(self.0.clone())
    }
}

/// v(x) = x B, applied to every frame.
struct LinearField(Array2<f64>);

impl VelocityField for LinearField {
    fn latent_dims(&self) -> usize {
        self.0.nrows()
    }
    fn velocity(&self, x: ArrayView2<f64>, _: f64, _: &PromptEmbedding, _: &AudioCue) -> remaster::Result<Array2<f64>> {
        Ok(x.dot(&self.0))
    }
}

/// exp(B) by scaling and squaring of a truncated Taylor series.
fn expm(b: &Array2<f64>) -> Array2<f64> {
    let n = b.nrows();
    let scaled = b / 1024.0;
    let mut term = Array2::<f64>::eye(n);
    let mut sum = Array2::<f64>::eye(n);
    for k in 1..30 {
        term = term.dot(&scaled) / k as f64;
        sum = sum + &term;
    }
    for _ in 0..10 {
        sum = sum.dot(&sum);
    }
    sum
}

fn solver_oracle() -> Outcome {
    let mut rng = rng_from_seed(3);
    let x0 = gaussian(&mut rng, (6, 8));
    let x1 = gaussian(&mut rng, (6, 8));
    let latent = LatentSeq::new(x1.clone(), 4, SR, 24).unwrap();
    let field = ConstantField(&x0 - &x1);
    let empty = PromptEmbedding::empty();
    let absent = AudioCue::absent(8);
    let configs = [
        SolverConfig::new(SolverKind::Euler, 1),
        SolverConfig::new(SolverKind::Euler, 10),
        SolverConfig::new(SolverKind::Euler, 100),
        SolverConfig::new(SolverKind::Rk4, 10),
    ];
    let errors: Vec<f64> = configs
        .iter()
        .map(|cfg| {
            let out = integrate(&field, &latent, &empty, &absent, cfg).unwrap();
            (&out.data - &x0).iter().fold(0.0, |m: f64, d| m.max(d.abs()))
        })
        .collect();

    let b = gaussian(&mut rng, (8, 8)) * 0.4;
    let linear = LinearField(b.clone());
    let exact = x1.dot(&expm(&b));
    let terminal = |kind| {
        let out = integrate(&linear, &latent, &empty, &absent, &SolverConfig::new(kind, 10)).unwrap();
        (&out.data - &exact).iter().fold(0.0, |m: f64, d| m.max(d.abs()))
    };
    let (euler, rk4) = (terminal(SolverKind::Euler), terminal(SolverKind::Rk4));
    let pass = errors.iter().all(|e| *e <= 1e-9) && rk4 < euler;
    outcome(
        pass,
        format!(
            "constant field max errors (euler1, euler10, euler100, rk4-10) {:.1e} {:.1e} {:.1e} {:.1e}; linear field euler10 {euler:.2e} vs rk4-10 {rk4:.2e}",
            errors[0], errors[1], errors[2], errors[3]
        ),
    )
}

fn toy_convergence() -> Outcome {
    let start = Instant::now();
    let (dims, frames) = (8, 8);
    let mut rng = rng_from_seed(99);
    // fixed degradation with eigenvalues away from zero, applied per frame: x1 = x0 A
    let a = Array2::<f64>::eye(dims) * 0.6 + gaussian(&mut rng, (dims, dims)) * (0.25 / (dims as f64).sqrt());
    let make = |rng: &mut Rng, n: usize| -> Vec<(Array2<f64>, Array2<f64>)> {
        (0..n)
            .map(|_| {
                let x0 = gaussian(rng, (frames, dims));
                let x1 = x0.dot(&a);
                (x0, x1)
            })
            .collect()
    };
    let train = make(&mut rng, 512);
    let held_out = make(&mut rng, 64);
    let pairs: Vec<_> = train
        .iter()
        .map(|(x0, x1)| latent_pair(x0.clone(), x1.clone(), dims / 2, Vec::new()).unwrap())
        .collect();
    let cfg = TrainConfig {
        lr: 2e-3,
        batch: 32,
        steps: 2000,
        seed: 5,
        hidden: 64,
        blocks: 2,
        prompt_dim: 8,
        frame_len: dims / 2,
        crop_frames: None,
        log_every: 0,
        ..TrainConfig::default()
    };
    let index = PromptIndex::from_bank(&PromptBank::default());
    let eval_loss = |model: &VelocityModel| -> f64 {
        let examples: Vec<_> = train
            .iter()
            .flat_map(|(x0, x1)| {
                [0.1, 0.3, 0.5, 0.7, 0.9]
                    .map(|t| (make_training_example_at(x0, x1, t).unwrap(), PromptEmbedding::empty(), AudioCue::absent(dims)))
            })
            .collect();
        model.loss_and_gradients(&examples).unwrap().0
    };
    let initial = VelocityModel::new(cfg.model_config(), index.clone()).unwrap();
    let loss0 = eval_loss(&initial);
    let (model, losses) = train_model(&cfg, &pairs, index).unwrap();
    let loss_end = eval_loss(&model);

    let solver = SolverConfig::new(SolverKind::Euler, 100);
    let (mut restored_mse, mut degraded_mse) = (0.0, 0.0);
    for (x0, x1) in &held_out {
        let latent = LatentSeq::new(x1.clone(), dims / 2, SR, frames * dims / 2).unwrap();
        let out = integrate(&model, &latent, &PromptEmbedding::empty(), &AudioCue::absent(dims), &solver).unwrap();
        restored_mse += mse(out.data.view(), x0.view());
        degraded_mse += mse(x1.view(), x0.view());
    }
    let elapsed = start.elapsed();
    let loss_ratio = loss_end / loss0;
    let mse_ratio = restored_mse / degraded_mse;
    let tail = &losses[losses.len() - 100..];
    let pass = loss_ratio < 0.1 && mse_ratio < 0.1 && within(elapsed, 600);
    outcome(
        pass,
        format!(
            "loss {loss0:.4} -> {loss_end:.3e} ({:.2}%; minibatch step0 {:.4}, last-100 mean {:.3e}); held-out restoration mse {:.2}% of degraded; {:.0} s",
            100.0 * loss_ratio,
            losses[0],
            tail.iter().sum::<f64>() / tail.len() as f64,
            100.0 * mse_ratio,
            elapsed.as_secs_f64()
        ),
    )
}

fn write_pair(root: &Path, id: &str, clean: &Waveform, degraded: &Waveform, record: degrade::DegradationRecord, rng: &mut Rng) -> ManifestRow {
    let (a, b) = compose_prompt(std::slice::from_ref(&record), &PromptBank::default(), rng).unwrap();
    let row = ManifestRow {
        clip_id: id.to_string(),
        variant_index: 0,
        offset_seconds: 0.0,
        effects: vec![record],
        prompts: vec![a, b],
        hidden_clipping: false,
        normalization_peak: None,
        degraded_path: format!("degraded/{id}_v0.wav"),
        clean_path: format!("clean/{id}.wav"),
        genre_group: None,
    };
    write_wav(clean, root.join(&row.clean_path)).unwrap();
    write_wav(degraded, root.join(&row.degraded_path)).unwrap();
    row
}

fn run_cli(args: &[String]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_remaster"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

fn end_to_end_smoke() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let (train_dir, held_dir, processed) = (tmp.path().join("train"), tmp.path().join("held"), tmp.path().join("processed"));
    for d in [&train_dir, &held_dir] {
        std::fs::create_dir_all(d.join("clean")).unwrap();
        std::fs::create_dir_all(d.join("degraded")).unwrap();
    }
    std::fs::create_dir_all(&processed).unwrap();
    let mut rng = rng_from_seed(31);
    let mut rows = Vec::new();
    for i in 0..21u64 {
        let clean = synth::music(3.0, 500 + i);
        let (degraded, record) = apply_volume(&clean, &mut rng).unwrap();
        if i < 20 {
            rows.push(write_pair(&train_dir, &format!("clip{i:02}"), &clean, &degraded, record, &mut rng));
        } else {
            let row = write_pair(&held_dir, "held", &clean, &degraded, record, &mut rng);
            write_manifest(std::slice::from_ref(&row), held_dir.join("manifest.jsonl")).unwrap();
        }
    }
    write_manifest(&rows, train_dir.join("manifest.jsonl")).unwrap();
    let config = tmp.path().join("train.json");
    std::fs::write(
        &config,
        r#"{"steps": 500, "batch": 8, "lr": 0.002, "hidden": 64, "blocks": 2, "prompt_dim": 16,
            "frame_len": 64, "crop_frames": 32, "seed": 1, "log_every": 100}"#,
    )
    .unwrap();
    let ckpt = tmp.path().join("model.ckpt");
    let held = read_manifest(held_dir.join("manifest.jsonl")).unwrap().remove(0);
    let path = |p: PathBuf| p.to_string_lossy().into_owned();
    let steps: [Vec<String>; 2] = [
        vec!["train".into(), "--config".into(), path(config), "--data".into(), path(train_dir), "--checkpoint".into(), path(ckpt.clone())],
        vec![
            "restore".into(),
            "--in".into(),
            path(held_dir.join(&held.degraded_path)),
            "--out".into(),
            path(processed.join("held_v0.wav")),
            "--checkpoint".into(),
            path(ckpt),
            "--prompt".into(),
            held.prompts[0].clone(),
        ],
    ];
    for args in &steps {
        if let Err(e) = run_cli(args) {
            return outcome(false, e);
        }
    }
    let restored = evaluate_dataset(held_dir.join("manifest.jsonl"), &processed).unwrap();
    let degraded = evaluate_dataset(held_dir.join("manifest.jsonl"), held_dir.join("degraded")).unwrap();
    let (r, d) = (
        restored.error(DegradationKind::Volume).unwrap_or(f64::NAN),
        degraded.error(DegradationKind::Volume).unwrap_or(f64::NAN),
    );
    let elapsed = start.elapsed();
    outcome(
        r < d && within(elapsed, 1200),
        format!("volume error restored {r:.4} vs degraded {d:.4}; {:.0} s", elapsed.as_secs_f64()),
    )
}

/// Zero velocity: restoration reduces to the codec round trip.
struct Identity;

impl VelocityField for Identity {
    fn latent_dims(&self) -> usize {
        1024
    }
    fn velocity(&self, x: ArrayView2<f64>, _: f64, _: &PromptEmbedding, _: &AudioCue) -> remaster::Result<Array2<f64>> {
        Ok(Array2::zeros(x.dim()))
    }
}

fn stitching_identity() -> Outcome {
    let wf = synth::pink_noise_with_clicks(70.0, 8);
    let plan = ChunkPlan::default();
    let out = restore_song(&wf, "", &Identity, &SolverConfig::default(), &plan).unwrap();
    let starts = plan.segment_starts(wf.len(), SR);
    let overlap = (plan.overlap_seconds * SR as f64) as usize;
    let mut worst: f64 = 0.0;
    let mut worst_fade: f64 = 0.0;
    for c in 0..2 {
        for (i, (a, b)) in out.channel(c).iter().zip(wf.channel(c)).enumerate() {
            let d = (a - b).abs();
            worst = worst.max(d);
            if starts[1..].iter().any(|&s| (s..s + overlap).contains(&i)) {
                worst_fade = worst_fade.max(d);
            }
        }
    }
    let weights_exact = crossfade_weights(overlap).iter().all(|(a, b)| a + b == 1.0);
    let pass = out.len() == wf.len() && starts.len() == 3 && worst < 1e-6 && weights_exact;
    outcome(
        pass,
        format!(
            "{} segments, max deviation {worst:.2e} (crossfades {worst_fade:.2e}); weights sum to 1 exactly: {weights_exact}",
            starts.len()
        ),
    )
}

fn codec_exactness() -> Outcome {
    let mut rng = rng_from_seed(12);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let len = rng.random_range(1..40_000);
        let channels: Vec<Vec<f64>> = (0..2).map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let wf = Waveform::new(channels, SR).unwrap();
        let back = decode_latent(&encode_latent(&wf).unwrap()).unwrap();
        assert_eq!(back.len(), wf.len());
        for c in 0..2 {
            for (a, b) in back.channel(c).iter().zip(wf.channel(c)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(worst < 1e-6, format!("max round-trip error {worst:.2e} over 100 waveforms"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("degradation directionality", directionality),
        ("parameter ranges", parameter_ranges),
        ("degraded-input metric pattern", degraded_input_pattern),
        ("dataset constraints", dataset_constraints),
        ("compressor static curve", compressor_static_curve),
        ("clipping fraction", clipping_fraction),
        ("flow algebra and gradients", flow_algebra_and_gradients),
        ("solver oracle", solver_oracle),
        ("toy convergence", toy_convergence),
        ("end-to-end smoke", end_to_end_smoke),
        ("stitching identity", stitching_identity),
        ("codec exactness", codec_exactness),
    ];
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (name, _) in &criteria {
            println!("{name}: test");
        }
        return;
    }
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2} {name} ({:.1} s): {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
