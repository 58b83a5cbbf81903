//! Paired dataset construction: excerpts, variant plans, prompts, rendering and manifests.

mod build;
mod excerpt;
mod manifest;
mod plan;
mod prompts;
mod render;

pub use build::{
    build_dataset, default_track_seconds, scan_corpus, write_synthetic_corpus, BuildConfig, CorpusEntry,
    DEFAULT_BANK_SEED,
};
pub use excerpt::{extract_excerpt, extract_excerpt_len, min_track_seconds, EXCERPT_SECONDS};
pub use manifest::{read_manifest, write_manifest, ManifestRow};
pub use plan::{
    category_prob, kind_weight, sample_variant_plans, Arity, VariantPlan, CATEGORY_PROBS, MAX_SINGLE_RETRIES,
};
pub use prompts::{compose_prompt, split_sentences, PromptBank};
pub use render::{render_variant, RenderedVariant, HIDDEN_CLIP_PROB, NORMALIZATION_RANGE};
