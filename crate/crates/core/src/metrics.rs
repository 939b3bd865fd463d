//! Lexical substitution scores: GAP for candidate ranking, P@k and R@k for
//! all-vocabulary ranking.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interchange::{RankedSubstitutes, SubstituteDistribution};

fn weight(gold: &BTreeMap<String, u32>, word: &str) -> f64 {
    gold.get(word).copied().unwrap_or(0) as f64
}

/// Generalized average precision of a ranking against weighted gold.
///
/// Repeated words in the ranking are counted once, at their first position.
pub fn gap<S: AsRef<str>>(ranking: &[S], gold: &BTreeMap<String, u32>) -> Result<f64> {
    let mut ideal: Vec<f64> = gold.values().filter(|&&w| w > 0).map(|&w| w as f64).collect();
    if ideal.is_empty() {
        return Err(Error::InvalidArgument("GAP needs non-empty gold".into()));
    }
    ideal.sort_by(|a, b| b.total_cmp(a));
    let mut denominator = 0.0;
    let mut cumulative = 0.0;
    for (j, w) in ideal.iter().enumerate() {
        cumulative += w;
        denominator += cumulative / (j + 1) as f64;
    }
    let mut seen = HashSet::new();
    let mut numerator = 0.0;
    cumulative = 0.0;
    let mut i = 0;
    for word in ranking {
        let word = word.as_ref();
        if !seen.insert(word) {
            continue;
        }
        i += 1;
        let w = weight(gold, word);
        cumulative += w;
        if w > 0.0 {
            numerator += cumulative / i as f64;
        }
    }
    Ok(numerator / denominator)
}

fn hits<S: AsRef<str>>(ranked: &[S], gold: &BTreeMap<String, u32>, k: usize) -> Result<usize> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument("P@k and R@k need non-empty gold".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut seen = HashSet::new();
    Ok(ranked
        .iter()
        .map(AsRef::as_ref)
        .filter(|w| seen.insert(*w))
        .take(k)
        .filter(|w| gold.contains_key(*w))
        .count())
}

/// `|top-k ∩ gold| / k`.
pub fn precision_at<S: AsRef<str>>(ranked: &[S], gold: &BTreeMap<String, u32>, k: usize) -> Result<f64> {
    Ok(hits(ranked, gold, k)? as f64 / k as f64)
}

/// `|top-k ∩ gold| / |gold|`.
pub fn recall_at<S: AsRef<str>>(ranked: &[S], gold: &BTreeMap<String, u32>, k: usize) -> Result<f64> {
    Ok(hits(ranked, gold, k)? as f64 / gold.len() as f64)
}

/// Scores of one instance; fields not produced by the evaluation mode stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r10: Option<f64>,
}

/// Candidate-ranking score.
pub fn score_candidates(id: &str, ranking: &RankedSubstitutes, gold: &BTreeMap<String, u32>) -> Result<InstanceScore> {
    let words: Vec<&str> = ranking.words().collect();
    Ok(InstanceScore {
        id: id.to_string(),
        gap: Some(gap(&words, gold)?),
        ..InstanceScore::default()
    })
}

/// All-vocabulary score of a post-processed ranking.
pub fn score_all_vocab(id: &str, ranking: &RankedSubstitutes, gold: &BTreeMap<String, u32>) -> Result<InstanceScore> {
    let words: Vec<&str> = ranking.words().take(10).collect();
    Ok(InstanceScore {
        id: id.to_string(),
        p1: Some(precision_at(&words, gold, 1)?),
        p3: Some(precision_at(&words, gold, 3)?),
        r10: Some(recall_at(&words, gold, 10)?),
        ..InstanceScore::default()
    })
}

/// Orders a candidate list by the scores a distribution assigns to it.
/// Candidates the vocabulary lacks get `-inf` and sort last alphabetically;
/// `exclude` (the target lemma) is dropped.
pub fn rank_candidates(dist: &SubstituteDistribution, candidates: &[String], exclude: Option<&str>) -> RankedSubstitutes {
    let mut seen = HashSet::new();
    RankedSubstitutes::from_unsorted(
        candidates
            .iter()
            .filter(|c| Some(c.as_str()) != exclude && seen.insert(c.as_str()))
            .map(|c| (c.clone(), dist.score_of(c).unwrap_or(f64::NEG_INFINITY)))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Candidates,
    AllVocab,
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "candidates" => Ok(EvalMode::Candidates),
            "all-vocab" | "all_vocab" => Ok(EvalMode::AllVocab),
            other => Err(Error::InvalidArgument(format!("unknown evaluation mode `{other}`"))),
        }
    }
}

/// Instance-averaged scores for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub mode: EvalMode,
    pub instances: usize,
    pub skipped: usize,
    pub gap: Option<f64>,
    pub p1: Option<f64>,
    pub p3: Option<f64>,
    pub r10: Option<f64>,
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs.flatten() {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

impl EvalReport {
    pub fn aggregate(model: &str, mode: EvalMode, scores: &[InstanceScore], skipped: usize) -> Self {
        Self {
            model: model.to_string(),
            mode,
            instances: scores.len(),
            skipped,
            gap: mean(scores.iter().map(|s| s.gap)),
            p1: mean(scores.iter().map(|s| s.p1)),
            p3: mean(scores.iter().map(|s| s.p3)),
            r10: mean(scores.iter().map(|s| s.r10)),
        }
    }

    /// Header plus one row per report; missing values print as `-`.
    pub fn to_tsv(reports: &[EvalReport]) -> String {
        let mut out = String::from("model\tmode\tinstances\tskipped\tGAP\tP@1\tP@3\tR@10\n");
        let cell = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v));
        for r in reports {
            let mode = match r.mode {
                EvalMode::Candidates => "candidates",
                EvalMode::AllVocab => "all-vocab",
            };
            let _ = writeln!(
                out,
                "{}\t{mode}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.model,
                r.instances,
                r.skipped,
                cell(r.gap),
                cell(r.p1),
                cell(r.p3),
                cell(r.r10)
            );
        }
        out
    }

    /// Writes `<stem>.tsv` and `<stem>.json`.
    pub fn write(reports: &[EvalReport], stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let tsv = stem.with_extension("tsv");
        std::fs::write(&tsv, Self::to_tsv(reports)).map_err(|e| Error::io(&tsv, e))?;
        let json = stem.with_extension("json");
        let text = serde_json::to_string_pretty(reports)?;
        std::fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))
    }
}
