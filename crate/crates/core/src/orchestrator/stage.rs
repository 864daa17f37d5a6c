//! Pipeline stages, named the way they appear in the run ledger.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Where a model call, check or attempt happened. Lemma stages carry the
/// lemma id (`L1`, `L2`, ... and `L1.1` for sub-lemmas).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    DirectInit,
    DirectRefine,
    /// Informal lemma generation for the problem (`None`) or for a lemma
    /// being decomposed further.
    LemmaGeneration(Option<String>),
    LemmaStatement(String),
    LemmaInit(String),
    LemmaRefine(String),
    /// Synthesis of a lemma from its own proven sub-lemmas.
    LemmaSynthInit(String),
    LemmaSynthRefine(String),
    SynthInit,
    SynthRefine,
}

impl Stage {
    pub fn lemma(&self) -> Option<&str> {
        match self {
            Stage::DirectInit | Stage::DirectRefine | Stage::SynthInit | Stage::SynthRefine => None,
            Stage::LemmaGeneration(l) => l.as_deref(),
            Stage::LemmaStatement(l)
            | Stage::LemmaInit(l)
            | Stage::LemmaRefine(l)
            | Stage::LemmaSynthInit(l)
            | Stage::LemmaSynthRefine(l) => Some(l),
        }
    }

    pub fn is_refine(&self) -> bool {
        matches!(
            self,
            Stage::DirectRefine | Stage::LemmaRefine(_) | Stage::LemmaSynthRefine(_) | Stage::SynthRefine
        )
    }

    /// Stages of the problem's own direct proof.
    pub fn is_direct(&self) -> bool {
        matches!(self, Stage::DirectInit | Stage::DirectRefine)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::DirectInit => f.write_str("direct_init"),
            Stage::DirectRefine => f.write_str("direct_refine"),
            Stage::LemmaGeneration(None) => f.write_str("lemma_generation"),
            Stage::LemmaGeneration(Some(l)) => write!(f, "lemma_generation:{l}"),
            Stage::LemmaStatement(l) => write!(f, "lemma_statement:{l}"),
            Stage::LemmaInit(l) => write!(f, "lemma_init:{l}"),
            Stage::LemmaRefine(l) => write!(f, "lemma_refine:{l}"),
            Stage::LemmaSynthInit(l) => write!(f, "lemma_synth_init:{l}"),
            Stage::LemmaSynthRefine(l) => write!(f, "lemma_synth_refine:{l}"),
            Stage::SynthInit => f.write_str("synth_init"),
            Stage::SynthRefine => f.write_str("synth_refine"),
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, lemma) = match s.split_once(':') {
            Some((k, l)) if !l.is_empty() => (k, Some(l.to_string())),
            Some(_) => return Err(format!("malformed stage `{s}`")),
            None => (s, None),
        };
        let stage = match (kind, lemma) {
            ("direct_init", None) => Stage::DirectInit,
            ("direct_refine", None) => Stage::DirectRefine,
            ("synth_init", None) => Stage::SynthInit,
            ("synth_refine", None) => Stage::SynthRefine,
            ("lemma_generation", l) => Stage::LemmaGeneration(l),
            ("lemma_statement", Some(l)) => Stage::LemmaStatement(l),
            ("lemma_init", Some(l)) => Stage::LemmaInit(l),
            ("lemma_refine", Some(l)) => Stage::LemmaRefine(l),
            ("lemma_synth_init", Some(l)) => Stage::LemmaSynthInit(l),
            ("lemma_synth_refine", Some(l)) => Stage::LemmaSynthRefine(l),
            _ => return Err(format!("unknown stage `{s}`")),
        };
        Ok(stage)
    }
}

impl Serialize for Stage {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Stage {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
