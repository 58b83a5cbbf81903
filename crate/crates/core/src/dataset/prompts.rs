use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::degrade::{DegradationKind, DegradationRecord};
use crate::error::{Error, Result};
use crate::rng::Rng;

const DEFAULT_BANK: &str = include_str!("../../assets/prompt_bank.json");

/// Instruction templates per degradation kind plus the generic auto-mode phrases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBank {
    pub generic: Vec<String>,
    pub kinds: BTreeMap<DegradationKind, Vec<String>>,
}

impl Default for PromptBank {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_BANK).expect("bundled prompt bank parses")
    }
}

impl PromptBank {
    pub fn from_json(text: &str) -> Result<Self> {
        let bank: Self = serde_json::from_str(text)?;
        bank.validate()?;
        Ok(bank)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Every kind needs at least one template; generic phrases must be present.
    pub fn validate(&self) -> Result<()> {
        for kind in DegradationKind::ALL {
            if self.kinds.get(&kind).is_none_or(|t| t.is_empty()) {
                return Err(Error::MissingPromptKind(kind.to_string()));
            }
        }
        if self.generic.is_empty() {
            return Err(Error::EmptyBank("generic prompts"));
        }
        Ok(())
    }

    pub fn templates(&self, kind: DegradationKind) -> Result<&[String]> {
        self.kinds
            .get(&kind)
            .filter(|t| !t.is_empty())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingPromptKind(kind.to_string()))
    }

    /// Sentences of the bank in a stable order: generic phrases first, then per kind.
    /// Identical sentences shared by several kinds appear once.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in self.generic.iter().chain(self.kinds.values().flatten()) {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }

    fn sample_one(&self, effects: &[&DegradationRecord], rng: &mut Rng) -> Result<String> {
        let sentences = effects
            .iter()
            .map(|r| {
                self.templates(r.kind)
                    .map(|t| t.choose(rng).expect("nonempty").clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(sentences.join(" "))
    }
}

/// Two independently sampled instructions covering every visible effect, in effect order.
pub fn compose_prompt(effects: &[DegradationRecord], bank: &PromptBank, rng: &mut Rng) -> Result<(String, String)> {
    let visible: Vec<&DegradationRecord> = effects.iter().filter(|r| !r.hidden).collect();
    let first = bank.sample_one(&visible, rng)?;
    let second = bank.sample_one(&visible, rng)?;
    Ok((first, second))
}

/// Splits a composed prompt back into bank sentences (sentences never contain ". " internally
/// except at their end, so greedy matching against the vocabulary is unambiguous).
pub fn split_sentences<'a>(text: &'a str, vocabulary: &[String]) -> Vec<&'a str> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let best = vocabulary
            .iter()
            .filter(|s| rest.starts_with(s.as_str()) && (rest.len() == s.len() || rest[s.len()..].starts_with(' ')))
            .map(String::len)
            .max();
        let cut = best.unwrap_or_else(|| {
            rest.char_indices()
                .find(|&(i, c)| matches!(c, '.' | '!' | '?') && rest[i + 1..].starts_with(' '))
                .map_or(rest.len(), |(i, _)| i + 1)
        });
        out.push(&rest[..cut]);
        rest = rest[cut..].trim_start();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn default_bank_is_complete() {
        let bank = PromptBank::default();
        bank.validate().unwrap();
        assert_eq!(bank.generic.len(), 4);
        assert_eq!(bank.generic[0], "Make it sound better!");
        assert!(bank
            .templates(DegradationKind::Clip)
            .unwrap()
            .contains(&"Reduce the clipping and reconstruct lost audio.".to_string()));
        assert_eq!(bank.templates(DegradationKind::Small).unwrap(), bank.templates(DegradationKind::Real).unwrap());
    }

    #[test]
    fn missing_kind_is_reported() {
        let mut bank = PromptBank::default();
        bank.kinds.remove(&DegradationKind::Mud);
        assert!(matches!(bank.validate(), Err(Error::MissingPromptKind(k)) if k == "mud"));
        let rec = DegradationRecord::new(DegradationKind::Mud);
        assert!(compose_prompt(&[rec], &bank, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn composition_arity_and_verbatim() {
        let bank = PromptBank::default();
        let vocab = bank.vocabulary();
        let effects = vec![
            DegradationRecord::new(DegradationKind::Mud),
            DegradationRecord::new(DegradationKind::Small),
            DegradationRecord {
                hidden: true,
                ..DegradationRecord::new(DegradationKind::Clip)
            },
        ];
        for seed in 0..50 {
            let (a, b) = compose_prompt(&effects, &bank, &mut rng_from_seed(seed)).unwrap();
            for p in [&a, &b] {
                let parts = split_sentences(p, &vocab);
                assert_eq!(parts.len(), 2, "{p}");
                assert!(bank.templates(DegradationKind::Mud).unwrap().iter().any(|t| t == parts[0]));
                assert!(bank.templates(DegradationKind::Small).unwrap().iter().any(|t| t == parts[1]));
            }
        }
    }

    #[test]
    fn only_hidden_effects_give_empty_prompts() {
        let bank = PromptBank::default();
        let hidden = DegradationRecord {
            hidden: true,
            ..DegradationRecord::new(DegradationKind::Clip)
        };
        let (a, b) = compose_prompt(&[hidden], &bank, &mut rng_from_seed(2)).unwrap();
        assert!(a.is_empty() && b.is_empty());
        let (a, _) = compose_prompt(&[], &bank, &mut rng_from_seed(2)).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.json");
        let bank = PromptBank::default();
        bank.save(&path).unwrap();
        assert_eq!(PromptBank::load(&path).unwrap(), bank);
    }
}
