use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::degrade::{Category, DegradationKind, DegradationRecord};
use crate::error::{Error, Result};

/// One degraded/clean training pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub clip_id: String,
    pub variant_index: usize,
    pub offset_seconds: f64,
    pub effects: Vec<DegradationRecord>,
    pub prompts: Vec<String>,
    pub hidden_clipping: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization_peak: Option<f64>,
    pub degraded_path: String,
    pub clean_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genre_group: Option<String>,
}

impl ManifestRow {
    pub fn visible_effects(&self) -> impl Iterator<Item = &DegradationRecord> {
        self.effects.iter().filter(|r| !r.hidden)
    }

    pub fn visible_kinds(&self) -> Vec<DegradationKind> {
        self.visible_effects().map(|r| r.kind).collect()
    }

    /// True when the plan carries compression or any reverb.
    pub fn hidden_clip_eligible(&self) -> bool {
        self.visible_effects()
            .any(|r| r.kind == DegradationKind::Comp || r.kind.category() == Category::Reverb)
    }

    /// Checks the row-level invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(format!("{} v{}: {msg}", self.clip_id, self.variant_index)));
        if self.variant_index > 6 {
            return fail("variant index out of range");
        }
        if self.prompts.len() != 2 || self.prompts.iter().any(|p| p.is_empty()) {
            return fail("expected two nonempty prompts");
        }
        let visible = self.visible_kinds();
        if visible.is_empty() || visible.len() > 3 {
            return fail("expected one to three visible effects");
        }
        let cats: Vec<Category> = visible.iter().map(|k| k.category()).collect();
        if cats.iter().enumerate().any(|(i, c)| cats[..i].contains(c)) {
            return fail("category repeated within a plan");
        }
        let hidden: Vec<&DegradationRecord> = self.effects.iter().filter(|r| r.hidden).collect();
        if hidden.iter().any(|r| r.kind != DegradationKind::Clip) {
            return fail("only clipping may be hidden");
        }
        if self.hidden_clipping != !hidden.is_empty() || hidden.len() > 1 {
            return fail("hidden clipping flag disagrees with records");
        }
        if self.hidden_clipping && !self.hidden_clip_eligible() {
            return fail("hidden clipping without compression or reverb");
        }
        let amplitude = visible.iter().any(|k| k.category() == Category::Amplitude);
        let wants_norm = !amplitude && !self.hidden_clipping;
        match self.normalization_peak {
            Some(p) if !wants_norm || !(0.8..=1.0).contains(&p) => fail("unexpected normalization peak"),
            None if wants_norm => fail("missing normalization peak"),
            _ => Ok(()),
        }
    }
}

pub fn write_manifest(rows: &[ManifestRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}
