//! Scores degraded dataset files against their clean references, then scores the clean
//! references themselves as a perfect restoration.

use remaster::dataset::{build_dataset, min_track_seconds, read_manifest, write_synthetic_corpus, BuildConfig};
use remaster::metrics::evaluate_dataset;

fn main() -> remaster::Result<()> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let (corpus, data) = (tmp.path().join("corpus"), tmp.path().join("data"));
    write_synthetic_corpus(&corpus, 4, min_track_seconds(4.0).ceil(), 2)?;
    build_dataset(&BuildConfig {
        excerpt_seconds: 4.0,
        ..BuildConfig::new(&corpus, &data, 3, 2)
    })?;
    let manifest = data.join("manifest.jsonl");

    let degraded = evaluate_dataset(&manifest, data.join("degraded"))?;
    println!("degraded inputs:\n{}", degraded.to_json()?);

    // copy each clean reference under its degraded name to model an ideal restorer
    let ideal = tmp.path().join("ideal");
    std::fs::create_dir_all(&ideal).expect("dir");
    for row in read_manifest(&manifest)? {
        let name = std::path::Path::new(&row.degraded_path).file_name().expect("file name");
        std::fs::copy(data.join(&row.clean_path), ideal.join(name)).expect("copy");
    }
    let perfect = evaluate_dataset(&manifest, &ideal)?;
    for (kind, stats) in &perfect.kinds {
        println!("ideal {kind:<8} {:.2e}", stats.mean_abs_error);
    }
    Ok(())
}
