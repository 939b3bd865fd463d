use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Total order used for every ranking in the crate: score descending, then
/// word ascending. `-inf` scores sort last.
pub fn rank_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Substitutes ordered by descending score with a deterministic tie-break.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedSubstitutes {
    items: Vec<(String, f64)>,
}

impl RankedSubstitutes {
    /// Sorts the given pairs. NaN scores are treated as `-inf`.
    pub fn from_unsorted(mut items: Vec<(String, f64)>) -> Self {
        for item in &mut items {
            if item.1.is_nan() {
                item.1 = f64::NEG_INFINITY;
            }
        }
        items.sort_by(rank_order);
        Self { items }
    }

    pub fn items(&self) -> &[(String, f64)] {
        &self.items
    }

    pub fn into_items(self) -> Vec<(String, f64)> {
        self.items
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(w, _)| w.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.items.truncate(k);
        self
    }

    pub fn to_record(&self, id: &str) -> TopKRecord {
        TopKRecord {
            id: id.to_string(),
            substitutes: self
                .items
                .iter()
                .map(|(w, s)| ScoredWord {
                    word: w.clone(),
                    score: s.is_finite().then_some(*s),
                })
                .collect(),
        }
    }
}

/// One line of the top-k JSONL form: used for ranking output and for
/// inspection. It carries only the head of a distribution, so it can never
/// feed a fusion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKRecord {
    pub id: String,
    pub substitutes: Vec<ScoredWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord {
    pub word: String,
    /// `null` encodes a score of `-inf`.
    pub score: Option<f64>,
}

impl TopKRecord {
    pub fn ranked(&self) -> RankedSubstitutes {
        RankedSubstitutes::from_unsorted(
            self.substitutes
                .iter()
                .map(|s| (s.word.clone(), s.score.unwrap_or(f64::NEG_INFINITY)))
                .collect(),
        )
    }
}
