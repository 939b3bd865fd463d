//! Lexical substitution and WSI corpora, normalized into [`TargetedExample`]s.
//!
//! Every corpus-specific parser ends in the same JSONL form; nothing
//! downstream reads the original XML.

mod coinco;
mod semeval2007;
mod tokenize;
mod wsi;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use coinco::{parse_coinco, parse_coinco_str};
pub use semeval2007::{parse_semeval2007, parse_semeval2007_str, parse_gold_line};
pub use tokenize::{detokenize, tokenize};
pub use wsi::{parse_wsi_dataset, parse_wsi_str, WsiFlavor};

use crate::error::{Error, Result};
use crate::interchange::{read_jsonl, write_jsonl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    #[serde(rename = "n")]
    Noun,
    #[serde(rename = "v")]
    Verb,
    #[serde(rename = "a")]
    Adjective,
    #[serde(rename = "r")]
    Adverb,
}

impl Pos {
    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb];

    pub fn tag(self) -> &'static str {
        match self {
            Pos::Noun => "n",
            Pos::Verb => "v",
            Pos::Adjective => "a",
            Pos::Adverb => "r",
        }
    }

    /// Maps Penn Treebank style tags (`NN`, `VBD`, `JJ`, `RB`, ...).
    pub fn from_penn(tag: &str) -> Option<Pos> {
        match tag.chars().next()? {
            'N' => Some(Pos::Noun),
            'V' => Some(Pos::Verb),
            'J' => Some(Pos::Adjective),
            'R' if tag.starts_with("RB") => Some(Pos::Adverb),
            _ => None,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Pos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" | "N" => Ok(Pos::Noun),
            "v" | "V" => Ok(Pos::Verb),
            "a" | "A" | "j" | "J" | "s" => Ok(Pos::Adjective),
            "r" | "R" => Ok(Pos::Adverb),
            other => Err(Error::InvalidArgument(format!("unknown part of speech `{other}`"))),
        }
    }
}

/// A sentence with one marked target word and its gold substitutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetedExample {
    pub id: String,
    pub tokens: Vec<String>,
    pub target_index: usize,
    pub target_surface: String,
    pub target_lemma: String,
    pub pos: Pos,
    /// Substitute -> number of annotators who proposed it.
    #[serde(default)]
    pub gold: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep_neighbors: Option<Vec<usize>>,
}

impl TargetedExample {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Format(format!("example {}: {msg}", self.id)));
        if self.target_index >= self.tokens.len() {
            return fail(format!(
                "target index {} out of range for {} tokens",
                self.target_index,
                self.tokens.len()
            ));
        }
        if self.tokens[self.target_index] != self.target_surface {
            return fail(format!(
                "token `{}` at the target index differs from the target `{}`",
                self.tokens[self.target_index], self.target_surface
            ));
        }
        if let Some((w, _)) = self.gold.iter().find(|(_, n)| **n == 0) {
            return fail(format!("gold substitute `{w}` has zero weight"));
        }
        if let Some(neighbors) = &self.dep_neighbors {
            if let Some(bad) = neighbors.iter().find(|&&i| i >= self.tokens.len()) {
                return fail(format!("dependency neighbor {bad} out of range"));
            }
        }
        Ok(())
    }

    pub fn left_context(&self) -> &[String] {
        &self.tokens[..self.target_index]
    }

    pub fn right_context(&self) -> &[String] {
        &self.tokens[self.target_index + 1..]
    }

    pub fn lemma_key(&self) -> LemmaKey {
        LemmaKey::new(&self.target_lemma, self.pos)
    }

    pub fn gold_total(&self) -> u32 {
        self.gold.values().sum()
    }
}

/// `(lemma, pos)`; displayed as `lemma.pos`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LemmaKey {
    pub lemma: String,
    pub pos: Pos,
}

impl LemmaKey {
    pub fn new(lemma: &str, pos: Pos) -> Self {
        Self {
            lemma: lemma.to_lowercase(),
            pos,
        }
    }
}

impl fmt::Display for LemmaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.lemma, self.pos)
    }
}

/// True for gold entries that span more than one word. Hyphenated single
/// tokens such as `well-known` are not multi-word.
pub fn is_multiword(substitute: &str) -> bool {
    substitute.trim().contains(char::is_whitespace)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub examples: Vec<TargetedExample>,
    pub per_lemma_candidates: BTreeMap<LemmaKey, Vec<String>>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, examples: Vec<TargetedExample>) -> Self {
        let mut m = Self {
            name: name.into(),
            examples,
            per_lemma_candidates: BTreeMap::new(),
        };
        m.per_lemma_candidates = build_candidates(&m);
        m
    }

    /// Drops multi-word gold substitutes, then every example left without
    /// gold. Returns the number of examples removed. Candidate lists are
    /// rebuilt from the surviving gold.
    pub fn filter_gold(&mut self) -> usize {
        let before = self.examples.len();
        for ex in &mut self.examples {
            ex.gold.retain(|w, _| !is_multiword(w));
        }
        self.examples.retain(|ex| !ex.gold.is_empty());
        self.per_lemma_candidates = build_candidates(self);
        before - self.examples.len()
    }

    /// Copies the per-lemma candidate list onto every example.
    pub fn attach_candidates(&mut self) {
        for ex in &mut self.examples {
            ex.candidates = self.per_lemma_candidates.get(&ex.lemma_key()).cloned();
        }
    }

    pub fn candidates_for<'a>(&'a self, ex: &'a TargetedExample) -> Option<&'a [String]> {
        ex.candidates
            .as_deref()
            .or_else(|| self.per_lemma_candidates.get(&ex.lemma_key()).map(Vec::as_slice))
    }

    pub fn target_lemmas(&self) -> BTreeSet<LemmaKey> {
        self.examples.iter().map(TargetedExample::lemma_key).collect()
    }

    pub fn with_id_prefix(mut self, prefix: &str) -> Self {
        for ex in &mut self.examples {
            ex.id = format!("{prefix}{}", ex.id);
        }
        self
    }

    /// Concatenates manifests; example ids must stay unique.
    pub fn merge(name: impl Into<String>, parts: Vec<DatasetManifest>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut examples = Vec::new();
        for part in parts {
            for ex in part.examples {
                if !seen.insert(ex.id.clone()) {
                    return Err(Error::Consistency(format!("duplicate example id `{}`", ex.id)));
                }
                examples.push(ex);
            }
        }
        Ok(Self::new(name, examples))
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let examples: Vec<TargetedExample> = read_jsonl(path)?;
        for ex in &examples {
            ex.validate()?;
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut m = Self::new(name, examples);
        // Candidate lists stored on the examples take precedence.
        for ex in &m.examples {
            if let Some(c) = &ex.candidates {
                m.per_lemma_candidates.insert(ex.lemma_key(), c.clone());
            }
        }
        Ok(m)
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        write_jsonl(path, &self.examples)
    }
}

/// Union of gold substitutes per `(lemma, pos)`: lowercased, deduplicated,
/// multi-word entries removed, sorted.
pub fn build_candidates(manifest: &DatasetManifest) -> BTreeMap<LemmaKey, Vec<String>> {
    let mut sets: BTreeMap<LemmaKey, BTreeSet<String>> = BTreeMap::new();
    for ex in &manifest.examples {
        let set = sets.entry(ex.lemma_key()).or_default();
        for w in ex.gold.keys() {
            if !is_multiword(w) {
                set.insert(w.trim().to_lowercase());
            }
        }
    }
    sets.into_iter()
        .map(|(k, set)| (k, set.into_iter().collect()))
        .collect()
}

#[cfg(test)]
pub(crate) fn example(id: &str, sentence: &str, target_index: usize, lemma: &str, pos: Pos, gold: &[(&str, u32)]) -> TargetedExample {
    let tokens: Vec<String> = sentence.split_whitespace().map(String::from).collect();
    TargetedExample {
        id: id.into(),
        target_surface: tokens[target_index].clone(),
        tokens,
        target_index,
        target_lemma: lemma.into(),
        pos,
        gold: gold.iter().map(|(w, n)| (w.to_string(), *n)).collect(),
        candidates: None,
        dep_neighbors: None,
    }
}
