use std::sync::Arc;

use super::ranked::{rank_order, RankedSubstitutes};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// `ln Σ exp(x_i)`, shifted by the maximum so large logits do not overflow.
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Unnormalized natural-log scores over a shared vocabulary, for one example.
#[derive(Debug, Clone)]
pub struct SubstituteDistribution {
    vocab: Arc<Vocabulary>,
    scores: Vec<f64>,
    example_id: String,
}

impl SubstituteDistribution {
    pub fn new(vocab: Arc<Vocabulary>, scores: Vec<f64>, example_id: impl Into<String>) -> Result<Self> {
        let example_id = example_id.into();
        if scores.len() != vocab.len() {
            return Err(Error::Alignment(format!(
                "distribution `{example_id}` has {} scores for a vocabulary of {}",
                scores.len(),
                vocab.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Corrupt(format!(
                "distribution `{example_id}` has a non-finite score for `{}`",
                vocab.word(i)
            )));
        }
        Ok(Self {
            vocab,
            scores,
            example_id,
        })
    }

    pub fn uniform(vocab: Arc<Vocabulary>, example_id: impl Into<String>) -> Self {
        let scores = vec![0.0; vocab.len()];
        Self {
            vocab,
            scores,
            example_id: example_id.into(),
        }
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn example_id(&self) -> &str {
        &self.example_id
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn with_example_id(mut self, id: impl Into<String>) -> Self {
        self.example_id = id.into();
        self
    }

    pub fn score_of(&self, word: &str) -> Option<f64> {
        self.vocab.get(word).map(|i| self.scores[i])
    }

    /// Shift the scores so that `exp(scores)` sums to one.
    pub fn normalize(&self) -> Self {
        let lse = log_sum_exp(&self.scores);
        Self {
            vocab: Arc::clone(&self.vocab),
            scores: self.scores.iter().map(|s| s - lse).collect(),
            example_id: self.example_id.clone(),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let lse = log_sum_exp(&self.scores);
        self.scores.iter().map(|s| (s - lse).exp()).collect()
    }

    /// Position of the highest score; the lowest position wins ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.scores.iter().enumerate() {
            if best.map_or(true, |b| *s > self.scores[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn shares_vocab(&self, other: &SubstituteDistribution) -> bool {
        Arc::ptr_eq(&self.vocab, &other.vocab) || *self.vocab == *other.vocab
    }

    pub(crate) fn ensure_same_vocab(&self, other: &SubstituteDistribution) -> Result<()> {
        if self.shares_vocab(other) {
            Ok(())
        } else {
            Err(Error::Alignment(format!(
                "distributions `{}` and `{}` use different vocabularies",
                self.example_id, other.example_id
            )))
        }
    }

    /// The whole vocabulary, ranked.
    pub fn ranked(&self) -> RankedSubstitutes {
        RankedSubstitutes::from_unsorted(
            self.vocab
                .iter()
                .zip(&self.scores)
                .map(|(w, s)| (w.to_string(), *s))
                .collect(),
        )
    }

    /// The `k` best entries, ranked. Avoids sorting the whole vocabulary.
    pub fn top_k(&self, k: usize) -> RankedSubstitutes {
        if k >= self.scores.len() {
            return self.ranked();
        }
        let mut positions: Vec<usize> = (0..self.scores.len()).collect();
        let cmp = |a: &usize, b: &usize| {
            self.scores[*b]
                .total_cmp(&self.scores[*a])
                .then_with(|| self.vocab.word(*a).cmp(self.vocab.word(*b)))
        };
        if k > 0 {
            positions.select_nth_unstable_by(k - 1, cmp);
        }
        positions.truncate(k);
        let mut items: Vec<(String, f64)> = positions
            .into_iter()
            .map(|i| (self.vocab.word(i).to_string(), self.scores[i]))
            .collect();
        items.sort_by(rank_order);
        RankedSubstitutes::from_unsorted(items)
    }
}
