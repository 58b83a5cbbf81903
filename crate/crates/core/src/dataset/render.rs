use rand::Rng as _;

use super::plan::{category_prob, sample_kind, VariantPlan};
use super::prompts::{compose_prompt, PromptBank};
use crate::audio::{peak_normalize, Waveform};
use crate::degrade::{self, apply_clipping, fold_stereo, Banks, Category, DegradationKind, DegradationRecord};
use crate::error::Result;
use crate::rng::Rng;

/// Chance of adding unprompted clipping to plans with compression or reverb.
pub const HIDDEN_CLIP_PROB: f64 = 0.15;
pub const NORMALIZATION_RANGE: (f64, f64) = (0.8, 1.0);

#[derive(Debug, Clone)]
pub struct RenderedVariant {
    pub audio: Waveform,
    pub effects: Vec<DegradationRecord>,
    pub prompts: (String, String),
    pub hidden_clipping: bool,
    pub normalization_peak: Option<f64>,
}

/// Swaps a stereo effect for a kind from another category not already in the plan.
fn replace_stereo(plan: &VariantPlan, rng: &mut Rng) -> VariantPlan {
    let used: Vec<Category> = plan.categories();
    let options: Vec<Category> = Category::ALL
        .into_iter()
        .filter(|c| !used.contains(c) && *c != Category::Stereo)
        .collect();
    let total: f64 = options.iter().map(|c| category_prob(*c)).sum();
    let mut pick = rng.random_range(0.0..total);
    let mut cat = options[options.len() - 1];
    for c in &options {
        pick -= category_prob(*c);
        if pick < 0.0 {
            cat = *c;
            break;
        }
    }
    let mut effects: Vec<DegradationKind> =
        plan.effects.iter().copied().filter(|k| *k != DegradationKind::Stereo).collect();
    effects.push(sample_kind(rng, cat));
    VariantPlan::new(effects)
}

/// Fold regardless of width, used once eligibility was established on the clean excerpt.
fn fold(wf: &Waveform) -> Result<(Waveform, DegradationRecord)> {
    let (l, r) = (wf.channel(0), wf.channel(1));
    let mid: Vec<f64> = l.iter().zip(r).map(|(a, b)| (a + b) / 2.0).collect();
    let diff: Vec<f64> = l.iter().zip(r).map(|(a, b)| a - b).collect();
    let spread = crate::metrics::features::population_std(&diff);
    Ok((
        Waveform::stereo(mid.clone(), mid, wf.sample_rate())?,
        DegradationRecord::new(DegradationKind::Stereo).with("side_std", spread),
    ))
}

/// Applies a plan to a clean excerpt, adds hidden clipping and normalization, and samples prompts.
///
/// Stereo folding requires the clean excerpt to be eligible; otherwise the stereo effect is
/// replaced by a kind from a category the plan does not use yet.
pub fn render_variant(
    clean: &Waveform,
    plan: &VariantPlan,
    banks: &Banks,
    prompts: &PromptBank,
    rng: &mut Rng,
) -> Result<RenderedVariant> {
    let mut plan = plan.clone();
    if plan.contains(DegradationKind::Stereo) && fold_stereo(clean)?.is_none() {
        let replaced = replace_stereo(&plan, rng);
        log::info!("stereo not eligible; plan {:?} -> {:?}", plan.effects, replaced.effects);
        plan = replaced;
    }
    let mut audio = clean.clone();
    let mut effects = Vec::with_capacity(plan.effects.len() + 1);
    for &kind in &plan.effects {
        let (out, record) = if kind == DegradationKind::Stereo {
            fold(&audio)?
        } else {
            degrade::apply(kind, &audio, banks, rng)?.expect("only stereo can be ineligible")
        };
        audio = out;
        effects.push(record);
    }
    let eligible = plan
        .effects
        .iter()
        .any(|k| *k == DegradationKind::Comp || k.category() == Category::Reverb);
    let mut hidden_clipping = false;
    if eligible && rng.random_bool(HIDDEN_CLIP_PROB) {
        let (out, mut record) = apply_clipping(&audio, rng)?;
        record.hidden = true;
        audio = out;
        effects.push(record);
        hidden_clipping = true;
    }
    let amplitude = plan.effects.iter().any(|k| k.category() == Category::Amplitude);
    let normalization_peak = if !amplitude && !hidden_clipping {
        let peak = rng.random_range(NORMALIZATION_RANGE.0..=NORMALIZATION_RANGE.1);
        audio = peak_normalize(&audio, peak)?;
        Some(peak)
    } else {
        None
    };
    let prompts = compose_prompt(&effects, prompts, rng)?;
    Ok(RenderedVariant {
        audio,
        effects,
        prompts,
        hidden_clipping,
        normalization_peak,
    })
}
