//! Target word injection.
//!
//! Input-side methods rewrite the example before an external model scores it
//! (dynamic `T and ___` patterns, duplicated input, masking). Distribution-side
//! methods combine score vectors in the log domain:
//!
//! * `+embs`: `P(s|C,T) ∝ P(s|C) · P(s|T) / P(s)^β` with
//!   `P(s|T) ∝ exp(sim(emb_s, emb_T) / temperature)`;
//! * left/right LM combination: `P(s|L,R) ∝ P(s|L) · P(s|R) / P(s)^γ`;
//! * a Zipf-Mandelbrot prior derived from frequency-ordered vocabularies.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datasets::TargetedExample;
use crate::error::{Error, Result};
use crate::interchange::{EmbeddingTable, SubstituteDistribution, Vocabulary, WordPrior};

/// Placeholder for the position the external model must predict.
pub const SLOT: &str = "___";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// The untouched example; the model sees the target.
    None,
    /// The target replaced by the slot.
    Masked,
    /// `T and ___` in place of the target.
    And,
    /// `L T R [sep] L ___ R`.
    Duplicate,
}

impl Pattern {
    /// Key suffix used for the distributions produced from this input.
    pub fn variant(self) -> &'static str {
        match self {
            Pattern::None => "original",
            Pattern::Masked => "masked",
            Pattern::And => "and",
            Pattern::Duplicate => "duplicate",
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "original" => Ok(Pattern::None),
            "masked" | "mask" => Ok(Pattern::Masked),
            "and" | "and_pattern" | "pattern-and" => Ok(Pattern::And),
            "duplicate" => Ok(Pattern::Duplicate),
            other => Err(Error::InvalidArgument(format!("unknown pattern `{other}`"))),
        }
    }
}

/// Token sequence handed to an external model, with the position to score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformedInput {
    pub id: String,
    pub variant: String,
    pub tokens: Vec<String>,
    pub position: usize,
}

pub fn apply_pattern(ex: &TargetedExample, pattern: Pattern, separator: Option<&str>) -> TransformedInput {
    let left = ex.left_context();
    let right = ex.right_context();
    let target = ex.target_surface.clone();
    let (tokens, position) = match pattern {
        Pattern::None => (ex.tokens.clone(), ex.target_index),
        Pattern::Masked => {
            let mut t = ex.tokens.clone();
            t[ex.target_index] = SLOT.to_string();
            (t, ex.target_index)
        }
        Pattern::And => {
            let mut t = left.to_vec();
            t.extend([target, "and".to_string(), SLOT.to_string()]);
            let pos = t.len() - 1;
            t.extend_from_slice(right);
            (t, pos)
        }
        Pattern::Duplicate => {
            let mut t = ex.tokens.clone();
            if let Some(sep) = separator {
                t.push(sep.to_string());
            }
            t.extend_from_slice(left);
            let pos = t.len();
            t.push(SLOT.to_string());
            t.extend_from_slice(right);
            (t, pos)
        }
    };
    TransformedInput {
        id: ex.id.clone(),
        variant: pattern.variant().to_string(),
        tokens,
        position,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Dot,
    Cosine,
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(Similarity::Dot),
            "cosine" | "cos" => Ok(Similarity::Cosine),
            other => Err(Error::InvalidArgument(format!("unknown similarity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Original,
    Masked,
}

impl Visibility {
    pub fn variant(self) -> &'static str {
        match self {
            Visibility::Original => "original",
            Visibility::Masked => "masked",
        }
    }
}

impl FromStr for Visibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Visibility::Original),
            "masked" => Ok(Visibility::Masked),
            other => Err(Error::InvalidArgument(format!("unknown target visibility `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub temperature: f64,
    pub beta: f64,
    pub similarity: Similarity,
    pub target_visibility: Visibility,
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be >= 0, got {}", self.beta)));
        }
        Ok(())
    }
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            beta: 0.0,
            similarity: Similarity::Dot,
            target_visibility: Visibility::Original,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BCombConfig {
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfPriorConfig {
    pub exponent: f64,
    pub offset: f64,
}

impl Default for ZipfPriorConfig {
    fn default() -> Self {
        Self {
            exponent: 1.0,
            offset: 2.7,
        }
    }
}

fn similarities(emb: &EmbeddingTable, target: &[f32], similarity: Similarity) -> Vec<f64> {
    match similarity {
        Similarity::Dot => emb.dots(target),
        Similarity::Cosine => emb.cosines(target),
    }
}

fn normalized(vocab: Arc<Vocabulary>, mut logits: Vec<f64>, id: &str) -> Result<SubstituteDistribution> {
    let lse = crate::interchange::log_sum_exp(&logits);
    for l in &mut logits {
        *l -= lse;
    }
    SubstituteDistribution::new(vocab, logits, id)
}

/// `log P(s|T) = sim(emb_s, emb_T) / temperature - log Z`.
pub fn target_similarity(emb: &EmbeddingTable, target_word: &str, cfg: &FusionConfig) -> Result<SubstituteDistribution> {
    let row = emb.row_of(target_word).ok_or_else(|| Error::OutOfVocabulary {
        word: target_word.to_string(),
    })?;
    similarity_distribution(emb, row, cfg, target_word)
}

fn similarity_distribution(emb: &EmbeddingTable, row: &[f32], cfg: &FusionConfig, id: &str) -> Result<SubstituteDistribution> {
    cfg.validate()?;
    let logits = similarities(emb, row, cfg.similarity)
        .into_iter()
        .map(|s| s / cfg.temperature)
        .collect();
    normalized(Arc::clone(emb.vocab()), logits, id)
}

/// Surface forms tried, in order, when looking up the target of an example.
pub fn target_forms(ex: &TargetedExample) -> [String; 3] {
    [
        ex.target_surface.clone(),
        ex.target_surface.to_lowercase(),
        ex.target_lemma.clone(),
    ]
}

/// [`target_similarity`] for an example's target: the surface form, then its
/// lowercase form, then the lemma.
pub fn target_similarity_for(emb: &EmbeddingTable, ex: &TargetedExample, cfg: &FusionConfig) -> Result<SubstituteDistribution> {
    let forms = target_forms(ex);
    let row = emb
        .lookup_any(forms.iter().map(String::as_str))
        .ok_or_else(|| Error::OutOfVocabulary {
            word: ex.target_surface.clone(),
        })?;
    similarity_distribution(emb, row, cfg, &ex.id)
}

fn combine(a: &SubstituteDistribution, b: &SubstituteDistribution, prior: &WordPrior, exponent: f64) -> Result<SubstituteDistribution> {
    a.ensure_same_vocab(b)?;
    if !exponent.is_finite() {
        return Err(Error::InvalidArgument(format!("prior exponent must be finite, got {exponent}")));
    }
    let log_prior = prior.log_probs(a.vocab());
    let logits = a
        .scores()
        .iter()
        .zip(b.scores())
        .zip(&log_prior)
        .map(|((x, y), p)| x + y - exponent * p)
        .collect();
    normalized(Arc::clone(a.vocab()), logits, a.example_id())
}

/// `log fused = log P(s|C) + log P(s|T) - β log P(s)`, normalized.
pub fn fuse_embs(
    p_context: &SubstituteDistribution,
    p_target: &SubstituteDistribution,
    prior: &WordPrior,
    beta: f64,
) -> Result<SubstituteDistribution> {
    if beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    combine(p_context, p_target, prior, beta)
}

/// `log P(s|L,R) = log P(s|L) + log P(s|R) - γ log P(s)`, normalized.
pub fn bcomb(
    p_left: &SubstituteDistribution,
    p_right: &SubstituteDistribution,
    prior: &WordPrior,
    cfg: &BCombConfig,
) -> Result<SubstituteDistribution> {
    combine(p_left, p_right, prior, cfg.gamma)
}

/// `P(rank r) ∝ 1 / (r + offset)^exponent` over a frequency-ordered vocabulary
/// (ranks are 1-based).
pub fn zipf_rank_prior(vocab: &Vocabulary, cfg: &ZipfPriorConfig) -> Result<WordPrior> {
    if !(cfg.exponent > 0.0) || !(cfg.offset >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Zipf prior needs exponent > 0 and offset >= 0, got {cfg:?}"
        )));
    }
    let logits: Vec<f64> = (1..=vocab.len())
        .map(|r| -cfg.exponent * (r as f64 + cfg.offset).ln())
        .collect();
    let lse = crate::interchange::log_sum_exp(&logits);
    let table: HashMap<String, f64> = vocab
        .iter()
        .zip(&logits)
        .map(|(w, l)| (w.to_string(), (l - lse).exp()))
        .collect();
    WordPrior::new(table)
}

/// Named hyperparameter sets for the supported backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Bert,
    Roberta,
    Xlnet,
    Elmo,
    C2v,
    Stub,
    Ooc,
    Npic,
}

impl Profile {
    pub const ALL: [Profile; 8] = [
        Profile::Bert,
        Profile::Roberta,
        Profile::Xlnet,
        Profile::Elmo,
        Profile::C2v,
        Profile::Stub,
        Profile::Ooc,
        Profile::Npic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Bert => "bert",
            Profile::Roberta => "roberta",
            Profile::Xlnet => "xlnet",
            Profile::Elmo => "elmo",
            Profile::C2v => "c2v",
            Profile::Stub => "stub",
            Profile::Ooc => "ooc",
            Profile::Npic => "npic",
        }
    }

    /// Whether the context distributions come from an external model.
    pub fn is_neural(self) -> bool {
        matches!(
            self,
            Profile::Bert | Profile::Roberta | Profile::Xlnet | Profile::Elmo | Profile::C2v
        )
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown profile `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Lexsub,
    Wsi,
}

/// Default hyperparameters of a profile for a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileDefaults {
    pub fusion: FusionConfig,
    /// Left/right combination exponent, for profiles that combine two LMs.
    pub bcomb: Option<BCombConfig>,
}

pub fn profile_defaults(profile: Profile, task: Task) -> ProfileDefaults {
    use Profile::*;
    let temperature = match (task, profile) {
        (Task::Lexsub, Bert | Xlnet | Elmo) => 0.1,
        (Task::Lexsub, Roberta) => 0.25,
        (Task::Wsi, Bert) => 2.5,
        (Task::Wsi, Roberta) => 10.0,
        (Task::Wsi, Elmo) => 0.385,
        _ => 1.0,
    };
    let beta = match (task, profile) {
        (Task::Lexsub, Elmo) => 1.5,
        (Task::Wsi, Bert | Xlnet | Roberta | Elmo) => 2.0,
        _ => 0.0,
    };
    let (similarity, target_visibility) = match profile {
        Roberta => (Similarity::Cosine, Visibility::Masked),
        Elmo | C2v => (Similarity::Dot, Visibility::Masked),
        _ => (Similarity::Dot, Visibility::Original),
    };
    ProfileDefaults {
        fusion: FusionConfig {
            temperature,
            beta,
            similarity,
            target_visibility,
        },
        bcomb: (profile == Elmo).then_some(BCombConfig { gamma: 0.5 }),
    }
}

/// Optional overrides read from a `key=value` or JSON config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSettings {
    pub profile: Option<Profile>,
    pub task: Option<Task>,
    pub temperature: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub similarity: Option<Similarity>,
    pub visibility: Option<Visibility>,
    pub prior: Option<String>,
    pub prior_floor: Option<f64>,
}

impl InjectionSettings {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            return Ok(serde_json::from_str(trimmed)?);
        }
        let mut s = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = || format!("config line {}", n + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(loc(), "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::parse(loc(), format!("`{value}` is not a number")))
            };
            match key {
                "profile" => s.profile = Some(value.parse()?),
                "task" => {
                    s.task = Some(match value {
                        "lexsub" => Task::Lexsub,
                        "wsi" => Task::Wsi,
                        _ => return Err(Error::parse(loc(), format!("unknown task `{value}`"))),
                    })
                }
                "temperature" | "T" => s.temperature = Some(num()?),
                "beta" => s.beta = Some(num()?),
                "gamma" => s.gamma = Some(num()?),
                "similarity" => s.similarity = Some(value.parse()?),
                "visibility" | "target_visibility" => s.visibility = Some(value.parse()?),
                "prior" => s.prior = Some(value.to_string()),
                "prior_floor" => s.prior_floor = Some(num()?),
                other => return Err(Error::parse(loc(), format!("unknown key `{other}`"))),
            }
        }
        Ok(s)
    }

    /// Profile defaults with this file's values applied on top.
    pub fn resolve(&self, fallback_profile: Profile, fallback_task: Task) -> ProfileDefaults {
        let mut d = profile_defaults(
            self.profile.unwrap_or(fallback_profile),
            self.task.unwrap_or(fallback_task),
        );
        if let Some(t) = self.temperature {
            d.fusion.temperature = t;
        }
        if let Some(b) = self.beta {
            d.fusion.beta = b;
        }
        if let Some(s) = self.similarity {
            d.fusion.similarity = s;
        }
        if let Some(v) = self.visibility {
            d.fusion.target_visibility = v;
        }
        if let Some(g) = self.gamma {
            d.bcomb = Some(BCombConfig { gamma: g });
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{detokenize, tokenize, Pos};
    use proptest::prelude::*;

    fn fly() -> TargetedExample {
        let tokens = tokenize("Let me fly away!");
        TargetedExample {
            id: "fly1".into(),
            target_index: 2,
            target_surface: "fly".into(),
            target_lemma: "fly".into(),
            pos: Pos::Verb,
            tokens,
            gold: Default::default(),
            candidates: None,
            dep_neighbors: None,
        }
    }

    fn vocab(words: &[&str]) -> Arc<Vocabulary> {
        Arc::new(Vocabulary::from_words(words.iter().copied()).unwrap())
    }

    fn dist(v: &Arc<Vocabulary>, logp: &[f64]) -> SubstituteDistribution {
        SubstituteDistribution::new(Arc::clone(v), logp.to_vec(), "x").unwrap()
    }

    #[test]
    fn and_pattern_on_fly() {
        let t = apply_pattern(&fly(), Pattern::And, None);
        assert_eq!(detokenize(&t.tokens), "Let me fly and ___ away!");
        assert_eq!(t.tokens[t.position], SLOT);
        assert_eq!(t.variant, "and");
    }

    #[test]
    fn duplicate_on_fly() {
        let t = apply_pattern(&fly(), Pattern::Duplicate, None);
        assert_eq!(detokenize(&t.tokens), "Let me fly away! Let me ___ away!");
        assert_eq!(t.tokens[t.position], SLOT);
        let sep = apply_pattern(&fly(), Pattern::Duplicate, Some("[SEP]"));
        assert_eq!(sep.tokens.len(), 2 * fly().tokens.len() + 1);
        assert_eq!(sep.tokens[sep.position], SLOT);
    }

    #[test]
    fn and_pattern_with_empty_right_context() {
        let mut ex = fly();
        ex.tokens.truncate(3);
        let t = apply_pattern(&ex, Pattern::And, None);
        assert_eq!(t.position, t.tokens.len() - 1);
        assert_eq!(t.tokens.last().unwrap(), SLOT);
    }

    #[test]
    fn none_and_masked_keep_position() {
        let ex = fly();
        let none = apply_pattern(&ex, Pattern::None, None);
        assert_eq!((none.tokens.clone(), none.position), (ex.tokens.clone(), 2));
        let masked = apply_pattern(&ex, Pattern::Masked, None);
        assert_eq!(masked.tokens[2], SLOT);
        assert_eq!(masked.variant, "masked");
    }

    fn table(words: &[&str], rows: &[Vec<f32>]) -> EmbeddingTable {
        EmbeddingTable::from_rows(vocab(words), rows).unwrap()
    }

    #[test]
    fn equal_similarities_are_uniform() {
        let emb = table(&["t", "a", "b"], &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        let p = target_similarity(&emb, "t", &FusionConfig::default()).unwrap().probabilities();
        // sims (1, 0, 0)
        assert!((p[1] - p[2]).abs() < 1e-15);
        let emb = table(&["t", "a"], &[vec![0.0], vec![0.0]]);
        let p = target_similarity(&emb, "t", &FusionConfig::default()).unwrap().probabilities();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn two_word_softmax() {
        // sims (1, 0) at temperature 1: (e/(e+1), 1/(e+1))
        let emb = table(&["a", "b"], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = target_similarity(&emb, "a", &FusionConfig::default()).unwrap().probabilities();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((p[0] - 0.731).abs() < 5e-4);
    }

    #[test]
    fn low_temperature_concentrates_mass() {
        let emb = table(&["t", "a", "b"], &[vec![1.0, 0.2], vec![0.9, 0.1], vec![0.1, 0.9]]);
        let cfg = FusionConfig {
            temperature: 1e-6,
            ..FusionConfig::default()
        };
        let p = target_similarity(&emb, "t", &cfg).unwrap().probabilities();
        assert!(p[0] >= 1.0 - 1e-6, "{p:?}");
        assert!(matches!(
            target_similarity(&emb, "zz", &cfg),
            Err(Error::OutOfVocabulary { .. })
        ));
        let bad = FusionConfig {
            temperature: 0.0,
            ..FusionConfig::default()
        };
        assert!(target_similarity(&emb, "t", &bad).is_err());
    }

    #[test]
    fn cosine_similarity_ignores_norms() {
        let emb = table(&["t", "a", "b"], &[vec![1.0, 0.0], vec![10.0, 1.0], vec![0.5, 0.0]]);
        let cfg = FusionConfig {
            similarity: Similarity::Cosine,
            ..FusionConfig::default()
        };
        let d = target_similarity(&emb, "t", &cfg).unwrap();
        assert_eq!(d.ranked().words().next(), Some("b"));
        let dot = target_similarity(&emb, "t", &FusionConfig::default()).unwrap();
        assert_eq!(dot.ranked().words().next(), Some("a"));
    }

    #[test]
    fn fusion_neutral_factors() {
        let v = vocab(&["a", "b", "c"]);
        let ctx = dist(&v, &[0.2f64.ln(), 0.5f64.ln(), 0.3f64.ln()]);
        let uni = SubstituteDistribution::uniform(Arc::clone(&v), "u");
        let prior = WordPrior::flat();
        let f = fuse_embs(&ctx, &uni, &prior, 0.0).unwrap();
        let g = fuse_embs(&uni, &ctx, &prior, 0.0).unwrap();
        for i in 0..3 {
            assert!((f.scores()[i] - ctx.scores()[i]).abs() < 1e-12);
            assert!((g.scores()[i] - ctx.scores()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_direct_evaluation() {
        let v = vocab(&["a", "b"]);
        let e = std::f64::consts::E;
        let ctx = dist(&v, &[0.5f64.ln(), 0.5f64.ln()]);
        let tgt = dist(&v, &[(e / (e + 1.0)).ln(), (1.0 / (e + 1.0)).ln()]);
        let p = fuse_embs(&ctx, &tgt, &WordPrior::flat(), 0.0).unwrap().probabilities();
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn prior_penalty_demotes_frequent_words() {
        let v = vocab(&["the", "auto"]);
        let ctx = dist(&v, &[0.0, 0.0]);
        let tgt = dist(&v, &[0.0, 0.0]);
        let prior = WordPrior::new(HashMap::from([("the".into(), 0.05), ("auto".into(), 1e-5)])).unwrap();
        let p = fuse_embs(&ctx, &tgt, &prior, 1.0).unwrap().probabilities();
        // 1/0.05 : 1/1e-5
        assert!((p[0] - 20.0 / (20.0 + 1e5)).abs() < 1e-12);
        assert!(fuse_embs(&ctx, &tgt, &prior, -1.0).is_err());
    }

    #[test]
    fn vocabulary_mismatch_rejected() {
        let a = SubstituteDistribution::uniform(vocab(&["a", "b"]), "x");
        let b = SubstituteDistribution::uniform(vocab(&["a", "c"]), "x");
        assert!(matches!(fuse_embs(&a, &b, &WordPrior::flat(), 0.0), Err(Error::Alignment(_))));
        assert!(matches!(
            bcomb(&a, &b, &WordPrior::flat(), &BCombConfig { gamma: 0.5 }),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn bcomb_three_words() {
        let v = vocab(&["a", "b", "c"]);
        let left = [0.6, 0.3, 0.1];
        let right = [0.2, 0.5, 0.3];
        let prior_p = [0.5, 0.3, 0.2];
        let prior = WordPrior::new(
            ["a", "b", "c"].iter().zip(prior_p).map(|(w, p)| (w.to_string(), p)).collect(),
        )
        .unwrap();
        let l = dist(&v, &left.map(f64::ln));
        let r = dist(&v, &right.map(f64::ln));
        let cfg = BCombConfig { gamma: 0.5 };
        let got = bcomb(&l, &r, &prior, &cfg).unwrap().probabilities();
        // direct: left*right/prior^0.5, normalized
        let raw: Vec<f64> = (0..3).map(|i| left[i] * right[i] / prior_p[i].powf(0.5)).collect();
        let z: f64 = raw.iter().sum();
        for i in 0..3 {
            assert!((got[i] - raw[i] / z).abs() < 1e-12);
        }
        let swapped = bcomb(&r, &l, &prior, &cfg).unwrap().probabilities();
        for i in 0..3 {
            assert!((got[i] - swapped[i]).abs() < 1e-15);
        }
        let uni = SubstituteDistribution::uniform(Arc::clone(&v), "u");
        let id = bcomb(&l, &uni, &prior, &BCombConfig { gamma: 0.0 }).unwrap().probabilities();
        for i in 0..3 {
            assert!((id[i] - left[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zipf_prior_two_words() {
        let v = Vocabulary::from_words(["the", "of"]).unwrap();
        let p = zipf_rank_prior(&v, &ZipfPriorConfig { exponent: 1.0, offset: 0.0 }).unwrap();
        assert!((p.prob("the") - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.prob("of") - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zipf_prior_decreasing_and_flattening() {
        let v = Vocabulary::from_words((0..50).map(|i| format!("w{i}"))).unwrap();
        let p = zipf_rank_prior(&v, &ZipfPriorConfig::default()).unwrap();
        let probs: Vec<f64> = v.iter().map(|w| p.prob(w)).collect();
        assert!(probs.windows(2).all(|w| w[0] > w[1]));
        let flat = zipf_rank_prior(&v, &ZipfPriorConfig { exponent: 1.0, offset: 1e9 }).unwrap();
        for w in v.iter() {
            assert!((flat.prob(w) - 1.0 / 50.0).abs() < 1e-8);
        }
        assert!(zipf_rank_prior(&v, &ZipfPriorConfig { exponent: 0.0, offset: 0.0 }).is_err());
    }

    #[test]
    fn profile_table() {
        let d = profile_defaults(Profile::Xlnet, Task::Lexsub);
        assert_eq!((d.fusion.temperature, d.fusion.beta), (0.1, 0.0));
        let d = profile_defaults(Profile::Roberta, Task::Lexsub);
        assert_eq!(d.fusion.temperature, 0.25);
        assert_eq!(d.fusion.similarity, Similarity::Cosine);
        assert_eq!(d.fusion.target_visibility, Visibility::Masked);
        let d = profile_defaults(Profile::Elmo, Task::Lexsub);
        assert_eq!((d.fusion.temperature, d.fusion.beta), (0.1, 1.5));
        assert_eq!(d.bcomb, Some(BCombConfig { gamma: 0.5 }));
        assert_eq!(profile_defaults(Profile::C2v, Task::Lexsub).fusion.temperature, 1.0);
        let wsi: Vec<(f64, f64)> = [Profile::Bert, Profile::Xlnet, Profile::Roberta, Profile::Elmo, Profile::C2v]
            .iter()
            .map(|p| {
                let f = profile_defaults(*p, Task::Wsi).fusion;
                (f.temperature, f.beta)
            })
            .collect();
        assert_eq!(wsi, vec![(2.5, 2.0), (1.0, 2.0), (10.0, 2.0), (0.385, 2.0), (1.0, 0.0)]);
    }

    #[test]
    fn settings_from_both_syntaxes() {
        let kv = InjectionSettings::parse("profile = roberta\n# c\ntemperature=0.5\nbeta=1\nvisibility=original\n").unwrap();
        let json = InjectionSettings::parse(r#"{"profile":"roberta","temperature":0.5,"beta":1.0,"visibility":"original"}"#).unwrap();
        assert_eq!(kv, json);
        let d = kv.resolve(Profile::Bert, Task::Lexsub);
        assert_eq!(d.fusion.temperature, 0.5);
        assert_eq!(d.fusion.similarity, Similarity::Cosine);
        assert_eq!(d.fusion.target_visibility, Visibility::Original);
        assert!(InjectionSettings::parse("bogus=1").is_err());
        assert!(InjectionSettings::parse("beta=x").is_err());
    }

    proptest! {
        #[test]
        fn fused_output_is_normalized(
            ctx in prop::collection::vec(-30.0f64..5.0, 5),
            tgt in prop::collection::vec(-30.0f64..5.0, 5),
            prior in prop::collection::vec(1e-6f64..1.0, 5),
            beta in 0.0f64..3.0,
        ) {
            let words = ["a", "b", "c", "d", "e"];
            let v = vocab(&words);
            let prior = WordPrior::new(words.iter().zip(&prior).map(|(w, p)| (w.to_string(), *p)).collect()).unwrap();
            let f = fuse_embs(&dist(&v, &ctx), &dist(&v, &tgt), &prior, beta).unwrap();
            let total: f64 = f.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(f.scores().iter().all(|s| s.is_finite()));
        }

        #[test]
        fn similarity_argmax_survives_any_temperature(
            rows in prop::collection::vec(prop::collection::vec(-2.0f32..2.0, 3), 2..8),
            temperature in 1e-3f64..100.0,
        ) {
            let words: Vec<String> = (0..rows.len()).map(|i| format!("w{i}")).collect();
            let emb = EmbeddingTable::from_rows(
                Arc::new(Vocabulary::new(words.clone()).unwrap()), &rows).unwrap();
            let cfg = FusionConfig { temperature, ..FusionConfig::default() };
            let d = target_similarity(&emb, &words[0], &cfg).unwrap();
            let raw = emb.dots(emb.row(0));
            let raw_best = raw.iter().enumerate()
                .fold(0, |b, (i, s)| if *s > raw[b] { i } else { b });
            // distinct maxima only; exact ties can resolve either way after scaling
            let ties = raw.iter().filter(|s| (**s - raw[raw_best]).abs() < 1e-9).count();
            prop_assume!(ties == 1);
            prop_assert_eq!(d.argmax(), Some(raw_best));
        }
    }
}
