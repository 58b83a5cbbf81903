use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mel_ssim, metric_error};
use crate::audio::{read_wav, resample, Waveform};
use crate::dataset::{read_manifest, ManifestRow};
use crate::degrade::DegradationKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub count: usize,
    pub mean_abs_error: f64,
}

/// Per-kind mean metric error of processed files against their clean references.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub kinds: BTreeMap<DegradationKind, KindStats>,
    pub rows_evaluated: usize,
    /// Rows whose processed file was missing or unreadable.
    pub rows_skipped: usize,
    /// Individual (row, effect) scores that could not be computed, e.g. width of a silent mix.
    pub metric_failures: usize,
    pub mel_ssim_mean: Option<f64>,
}

impl MetricReport {
    pub fn error(&self, kind: DegradationKind) -> Option<f64> {
        self.kinds.get(&kind).map(|s| s.mean_abs_error)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

struct RowScore {
    errors: Vec<(DegradationKind, Option<f64>)>,
    ssim: Option<f64>,
}

fn processed_path(row: &ManifestRow, processed_dir: &Path) -> PathBuf {
    let name = Path::new(&row.degraded_path).file_name().unwrap_or_default();
    processed_dir.join(name)
}

/// Brings `processed` to the clean sample rate and both to a common length.
fn align(processed: Waveform, clean: Waveform) -> Result<(Waveform, Waveform)> {
    let processed = if processed.sample_rate() != clean.sample_rate() {
        resample(&processed, clean.sample_rate())?
    } else {
        processed
    };
    let n = processed.len().min(clean.len());
    Ok((processed.segment(0, n), clean.segment(0, n)))
}

fn score_row(row: &ManifestRow, data_root: &Path, processed_dir: &Path) -> Option<RowScore> {
    let load = |p: &Path| match read_wav(p) {
        Ok(w) => Some(w),
        Err(e) => {
            log::warn!("{}: {e}", p.display());
            None
        }
    };
    let processed = load(&processed_path(row, processed_dir))?;
    let clean = load(&data_root.join(&row.clean_path))?;
    let (processed, clean) = align(processed, clean).ok()?;
    let errors = row
        .visible_kinds()
        .into_iter()
        .map(|k| (k, metric_error(k, &processed, &clean).ok()))
        .collect();
    Some(RowScore {
        errors,
        ssim: mel_ssim(&processed, &clean).ok(),
    })
}

/// Scores manifest rows whose clean paths are relative to `data_root`.
///
/// Each row's processed file is `processed_dir/<degraded file name>`; passing the dataset's
/// `degraded` directory scores the unprocessed inputs. Only prompted effects are scored.
pub fn evaluate_rows(rows: &[ManifestRow], data_root: &Path, processed_dir: &Path) -> MetricReport {
    let scores: Vec<Option<RowScore>> = rows.par_iter().map(|r| score_row(r, data_root, processed_dir)).collect();
    let mut report = MetricReport::default();
    let mut sums: BTreeMap<DegradationKind, (usize, f64)> = BTreeMap::new();
    let (mut ssim_sum, mut ssim_n) = (0.0, 0usize);
    for score in scores {
        let Some(score) = score else {
            report.rows_skipped += 1;
            continue;
        };
        report.rows_evaluated += 1;
        for (kind, err) in score.errors {
            match err {
                Some(e) if e.is_finite() => {
                    let s = sums.entry(kind).or_default();
                    s.0 += 1;
                    s.1 += e;
                }
                _ => report.metric_failures += 1,
            }
        }
        if let Some(s) = score.ssim {
            ssim_sum += s;
            ssim_n += 1;
        }
    }
    report.kinds = sums
        .into_iter()
        .map(|(k, (n, sum))| {
            (
                k,
                KindStats {
                    count: n,
                    mean_abs_error: sum / n as f64,
                },
            )
        })
        .collect();
    report.mel_ssim_mean = (ssim_n > 0).then(|| ssim_sum / ssim_n as f64);
    report
}

/// Evaluates every row of `manifest`; clean paths resolve against the manifest's directory.
pub fn evaluate_dataset(manifest: impl AsRef<Path>, processed_dir: impl AsRef<Path>) -> Result<MetricReport> {
    let manifest = manifest.as_ref();
    let rows = read_manifest(manifest)?;
    let root = manifest.parent().unwrap_or(Path::new("."));
    Ok(evaluate_rows(&rows, root, processed_dir.as_ref()))
}
