use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::excerpt::{extract_excerpt_len, min_track_seconds, EXCERPT_SECONDS};
use super::manifest::{write_manifest, ManifestRow};
use super::plan::sample_variant_plans;
use super::prompts::PromptBank;
use super::render::render_variant;
use crate::audio::{load_audio, write_wav, Waveform};
use crate::degrade::{fold_stereo, Banks};
use crate::error::{Error, Result};
use crate::rng::{child_rng, derive_seed, rng_from_seed};
use crate::synth;

const CACHE_DIR: &str = ".cache";
const MANIFEST_NAME: &str = "manifest.jsonl";
const GENRE_FILE: &str = "genres.json";
/// Seed of the synthetic banks used when no bank directory is given.
pub const DEFAULT_BANK_SEED: u64 = 0;

/// One source track of the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub path: PathBuf,
    pub genre_group: Option<String>,
    pub duration: f64,
}

/// Lists the `.wav` files of `dir` sorted by name; `genres.json` (id -> group) is optional.
pub fn scan_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let dir = dir.as_ref();
    let genres: BTreeMap<String, String> = match std::fs::read_to_string(dir.join(GENRE_FILE)) {
        Ok(text) => serde_json::from_str(&text)?,
        Err(_) => BTreeMap::new(),
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    let mut entries = Vec::with_capacity(paths.len());
    for path in paths {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let duration = match hound::WavReader::open(&path) {
            Ok(r) => r.duration() as f64 / r.spec().sample_rate as f64,
            Err(e) => {
                log::warn!("skipping unreadable {}: {e}", path.display());
                continue;
            }
        };
        entries.push(CorpusEntry {
            genre_group: genres.get(&id).cloned(),
            id,
            path,
            duration,
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub corpus_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub excerpt_seconds: f64,
    pub mic_bank_dir: Option<PathBuf>,
    pub rir_bank_dir: Option<PathBuf>,
    pub prompt_bank: Option<PathBuf>,
}

impl BuildConfig {
    pub fn new(corpus_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>, seed: u64, workers: usize) -> Self {
        Self {
            corpus_dir: corpus_dir.into(),
            out_dir: out_dir.into(),
            seed,
            workers,
            excerpt_seconds: EXCERPT_SECONDS,
            mic_bank_dir: None,
            rir_bank_dir: None,
            prompt_bank: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    key: String,
    files: BTreeMap<String, String>,
    rows: Vec<ManifestRow>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

struct Context<'a> {
    cfg: &'a BuildConfig,
    banks: Banks,
    prompts: PromptBank,
    settings_key: String,
}

impl Context<'_> {
    fn clip_key(&self, entry: &CorpusEntry) -> Result<String> {
        let source = file_hash(&entry.path)?;
        Ok(sha256_hex(format!("{}|{}|{}", self.settings_key, entry.id, source).as_bytes()))
    }

    fn sidecar_path(&self, id: &str) -> PathBuf {
        self.cfg.out_dir.join(CACHE_DIR).join(format!("{id}.json"))
    }

    fn cached(&self, entry: &CorpusEntry, key: &str) -> Option<Vec<ManifestRow>> {
        let text = std::fs::read_to_string(self.sidecar_path(&entry.id)).ok()?;
        let sidecar: Sidecar = serde_json::from_str(&text).ok()?;
        if sidecar.key != key {
            return None;
        }
        for (rel, hash) in &sidecar.files {
            if file_hash(&self.cfg.out_dir.join(rel)).ok()? != *hash {
                return None;
            }
        }
        Some(sidecar.rows)
    }

    fn process(&self, entry: &CorpusEntry) -> Result<Vec<ManifestRow>> {
        let key = self.clip_key(entry)?;
        if let Some(rows) = self.cached(entry, &key) {
            log::debug!("{}: outputs up to date", entry.id);
            return Ok(rows);
        }
        let clip_seed = derive_seed(self.cfg.seed, &entry.id);
        let track = load_audio(&entry.path)?;
        let (clean, offset) = extract_excerpt_len(&track, self.cfg.excerpt_seconds, &mut child_rng(clip_seed, "excerpt"))?;
        let eligible = fold_stereo(&clean)?.is_some();
        let plans = sample_variant_plans(&mut child_rng(clip_seed, "plans"), eligible);

        let clean_rel = format!("clean/{}.wav", entry.id);
        let clean = clean.quantize_f32();
        write_wav(&clean, self.cfg.out_dir.join(&clean_rel))?;
        let mut files = BTreeMap::new();
        files.insert(clean_rel.clone(), file_hash(&self.cfg.out_dir.join(&clean_rel))?);

        let mut rows = Vec::with_capacity(plans.len());
        for (k, plan) in plans.iter().enumerate() {
            let mut rng = child_rng(clip_seed, &format!("variant{k}"));
            let v = render_variant(&clean, plan, &self.banks, &self.prompts, &mut rng)?;
            let rel = format!("degraded/{}_v{k}.wav", entry.id);
            let path = self.cfg.out_dir.join(&rel);
            write_wav(&v.audio, &path)?;
            files.insert(rel.clone(), file_hash(&path)?);
            rows.push(ManifestRow {
                clip_id: entry.id.clone(),
                variant_index: k,
                offset_seconds: offset,
                effects: v.effects,
                prompts: vec![v.prompts.0, v.prompts.1],
                hidden_clipping: v.hidden_clipping,
                normalization_peak: v.normalization_peak,
                degraded_path: rel,
                clean_path: clean_rel.clone(),
                genre_group: entry.genre_group.clone(),
            });
        }
        let sidecar = Sidecar { key, files, rows };
        let path = self.sidecar_path(&entry.id);
        std::fs::write(&path, serde_json::to_string(&sidecar)?).map_err(|e| Error::io(&path, e))?;
        Ok(sidecar.rows)
    }
}

/// Builds the paired dataset: per track one clean excerpt and seven degraded variants.
///
/// Output layout is `clean/{id}.wav`, `degraded/{id}_v{k}.wav` and `manifest.jsonl` (rows sorted
/// by clip id, then variant). Tracks that fail are logged and skipped; clips whose outputs are
/// already present with matching content hashes are not recomputed.
pub fn build_dataset(cfg: &BuildConfig) -> Result<Vec<ManifestRow>> {
    let out = &cfg.out_dir;
    for sub in ["clean", "degraded", CACHE_DIR] {
        let d = out.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let prompts = match &cfg.prompt_bank {
        Some(p) => PromptBank::load(p)?,
        None => PromptBank::default(),
    };
    let banks = Banks::load(cfg.mic_bank_dir.as_deref(), cfg.rir_bank_dir.as_deref(), DEFAULT_BANK_SEED)?;
    let bank_names: Vec<&str> = banks.mic.names().chain(banks.rir.names()).collect();
    let settings_key = sha256_hex(
        format!(
            "{}|{}|{}|{}",
            cfg.seed,
            cfg.excerpt_seconds,
            bank_names.join(","),
            serde_json::to_string(&prompts)?
        )
        .as_bytes(),
    );
    let ctx = Context {
        cfg,
        banks,
        prompts,
        settings_key,
    };
    let entries = scan_corpus(&cfg.corpus_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<(String, Result<Vec<ManifestRow>>)> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| (e.id.clone(), ctx.process(e)))
            .collect()
    });
    let mut rows = Vec::new();
    for (id, result) in results {
        match result {
            Ok(r) => rows.extend(r),
            Err(e) => log::warn!("skipping {id}: {e}"),
        }
    }
    rows.sort_by(|a, b| (&a.clip_id, a.variant_index).cmp(&(&b.clip_id, b.variant_index)));
    write_manifest(&rows, out.join(MANIFEST_NAME))?;
    Ok(rows)
}

/// Writes `count` synthetic music tracks named `track_0000.wav`, ... into `dir`.
pub fn write_synthetic_corpus(dir: impl AsRef<Path>, count: usize, seconds: f64, seed: u64) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|i| {
            let track_seed: u64 = rand::Rng::random(&mut rng);
            let wf: Waveform = synth::music(seconds, track_seed);
            let path = dir.join(format!("track_{i:04}.wav"));
            write_wav(&wf, &path)?;
            Ok(path)
        })
        .collect()
}

/// Track length needed for the default excerpt, rounded up to whole seconds.
pub fn default_track_seconds() -> f64 {
    min_track_seconds(EXCERPT_SECONDS).ceil()
}
