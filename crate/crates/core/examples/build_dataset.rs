//! Builds a small paired dataset from a synthetic corpus and summarizes the manifest.
//!
//! cargo run --example build_dataset [OUT_DIR]

use std::collections::BTreeMap;

use remaster::dataset::{build_dataset, min_track_seconds, write_synthetic_corpus, BuildConfig};

fn main() -> remaster::Result<()> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| tmp.path().join("data"));
    let corpus = tmp.path().join("corpus");
    let excerpt = 5.0;
    write_synthetic_corpus(&corpus, 6, min_track_seconds(excerpt).ceil(), 1)?;
    let cfg = BuildConfig {
        excerpt_seconds: excerpt,
        ..BuildConfig::new(&corpus, &out, 7, 2)
    };
    let rows = build_dataset(&cfg)?;
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rows {
        for e in r.visible_effects() {
            *kinds.entry(e.kind.to_string()).or_default() += 1;
        }
    }
    println!("{} rows in {}", rows.len(), out.display());
    println!("hidden clipping on {} rows", rows.iter().filter(|r| r.hidden_clipping).count());
    println!("effect counts: {kinds:?}");
    for r in rows.iter().take(3) {
        println!("{} v{}: {:?}\n    {:?}", r.clip_id, r.variant_index, r.visible_kinds(), r.prompts);
    }
    Ok(())
}
