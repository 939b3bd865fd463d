use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Floor used when a prior has no entries to take a minimum from.
pub const DEFAULT_PRIOR_FLOOR: f64 = 1e-8;

/// Unigram probabilities `P(s)` with a floor for unknown words.
#[derive(Debug, Clone, PartialEq)]
pub struct WordPrior {
    table: HashMap<String, f64>,
    floor: f64,
}

impl WordPrior {
    /// Builds a prior whose floor is the smallest stored probability
    /// (or [`DEFAULT_PRIOR_FLOOR`] for an empty table).
    pub fn new(table: HashMap<String, f64>) -> Result<Self> {
        for (word, p) in &table {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::Format(format!(
                    "prior probability {p} for `{word}` is outside (0, 1]"
                )));
            }
        }
        let floor = table
            .values()
            .copied()
            .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.min(p))))
            .unwrap_or(DEFAULT_PRIOR_FLOOR);
        Ok(Self { table, floor })
    }

    /// A prior that assigns the same probability to every word, so it has no
    /// effect on any fusion.
    pub fn flat() -> Self {
        Self {
            table: HashMap::new(),
            floor: DEFAULT_PRIOR_FLOOR,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor <= 1.0) {
            return Err(Error::InvalidArgument(format!("prior floor {floor} is outside (0, 1]")));
        }
        if let Some(min) = self.table.values().copied().reduce(f64::min) {
            if floor > min {
                return Err(Error::InvalidArgument(format!(
                    "prior floor {floor} exceeds the smallest stored probability {min}"
                )));
            }
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn prob(&self, word: &str) -> f64 {
        self.table.get(word).copied().unwrap_or(self.floor)
    }

    /// `ln P(s)` for every vocabulary entry, in position order.
    pub fn log_probs(&self, vocab: &Vocabulary) -> Vec<f64> {
        vocab.iter().map(|w| self.prob(w).ln()).collect()
    }

    /// Reads `word<TAB>probability` lines. Blank lines and `#` comments are skipped.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = || format!("{source}:{}", n + 1);
            let (word, p) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(loc(), "expected word<TAB>probability"))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::parse(loc(), format!("non-numeric probability `{p}`")))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::parse(loc(), format!("probability {p} is outside (0, 1]")));
            }
            table.insert(word.to_string(), p);
        }
        Self::new(table)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut entries: Vec<_> = self.table.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let text: String = entries.iter().map(|(w, p)| format!("{w}\t{p:e}\n")).collect();
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_floors_unknowns() {
        let prior = WordPrior::parse("the\t0.05\ncar\t0.001\n", "t").unwrap();
        assert_eq!(prior.prob("the"), 0.05);
        assert_eq!(prior.floor(), 0.001);
        assert_eq!(prior.prob("zzzq"), prior.floor());
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(WordPrior::parse("the\tabc\n", "t").is_err());
        assert!(WordPrior::parse("the\t0\n", "t").is_err());
        assert!(WordPrior::parse("the\t1.5\n", "t").is_err());
        assert!(WordPrior::parse("the 0.5\n", "t").is_err());
    }

    #[test]
    fn floor_override_must_not_exceed_table() {
        let prior = WordPrior::parse("the\t0.05\n", "t").unwrap();
        assert!(prior.clone().with_floor(0.1).is_err());
        assert_eq!(prior.with_floor(1e-8).unwrap().prob("zzzq"), 1e-8);
        assert_eq!(WordPrior::flat().prob("x"), DEFAULT_PRIOR_FLOOR);
    }

    #[test]
    fn tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("prior.tsv");
        let prior = WordPrior::parse("the\t0.05\ncar\t0.000123456789\n", "t").unwrap();
        prior.write(&p).unwrap();
        assert_eq!(WordPrior::read(&p).unwrap(), prior);
    }
}
