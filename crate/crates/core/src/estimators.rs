//! Context-based substitute estimators `P(s|C)`.
//!
//! Neural models are external: their outputs arrive as LSD1 files and are
//! served by [`file_estimate`]. The remaining estimators work from embedding
//! tables only: a deterministic stub for testing, and the OOC and nPIC
//! baselines.

use std::str::FromStr;
use std::sync::Arc;

use crate::datasets::TargetedExample;
use crate::error::{Error, Result};
use crate::injection::target_forms;
use crate::interchange::{DistributionIndex, EmbeddingTable, RankedSubstitutes, SubstituteDistribution, Vocabulary};

/// Context window used when an example has no dependency neighbors.
pub const DEFAULT_WINDOW: usize = 3;

/// Looks up `{id}#{variant}`, falling back to the bare id.
pub fn file_estimate(ex: &TargetedExample, index: &DistributionIndex, variant: Option<&str>) -> Result<SubstituteDistribution> {
    let keyed = variant.map(|v| format!("{}#{v}", ex.id));
    let found = match &keyed {
        Some(k) if index.contains(k) => index.get(k)?,
        _ if index.contains(&ex.id) => index.get(&ex.id)?,
        _ => return Err(Error::Lookup(keyed.unwrap_or_else(|| ex.id.clone()))),
    };
    Ok(found.with_example_id(ex.id.clone()))
}

fn window_positions(ex: &TargetedExample, window: usize) -> impl Iterator<Item = usize> + '_ {
    let lo = ex.target_index.saturating_sub(window);
    let hi = (ex.target_index + window).min(ex.tokens.len().saturating_sub(1));
    (lo..=hi).filter(move |&i| i != ex.target_index)
}

fn context_row<'a>(emb: &'a EmbeddingTable, token: &str) -> Option<&'a [f32]> {
    emb.row_of(token).or_else(|| emb.row_of(&token.to_lowercase()))
}

/// `score(s) = mean_c ⟨emb_s, emb_c⟩` over in-vocabulary tokens within
/// `±window` of the target; uniform when none is in vocabulary.
pub fn stub_estimate(ex: &TargetedExample, emb: &EmbeddingTable, window: usize) -> Result<SubstituteDistribution> {
    if window == 0 {
        return Err(Error::InvalidArgument("stub window must be at least 1".into()));
    }
    let rows: Vec<&[f32]> = window_positions(ex, window)
        .filter_map(|i| context_row(emb, &ex.tokens[i]))
        .collect();
    if rows.is_empty() {
        return Ok(SubstituteDistribution::uniform(Arc::clone(emb.vocab()), ex.id.clone()));
    }
    let mut scores = vec![0.0; emb.vocab().len()];
    for r in &rows {
        for (s, d) in scores.iter_mut().zip(emb.dots(r)) {
            *s += d;
        }
    }
    let n = rows.len() as f64;
    scores.iter_mut().for_each(|s| *s /= n);
    SubstituteDistribution::new(Arc::clone(emb.vocab()), scores, ex.id.clone())
}

fn target_row<'a>(ex: &TargetedExample, emb: &'a EmbeddingTable) -> Result<&'a [f32]> {
    let forms = target_forms(ex);
    emb.lookup_any(forms.iter().map(String::as_str))
        .ok_or_else(|| Error::OutOfVocabulary {
            word: ex.target_surface.clone(),
        })
}

/// Cosine similarity to the target, as scores.
pub fn ooc_scores(ex: &TargetedExample, emb: &EmbeddingTable) -> Result<SubstituteDistribution> {
    let t = target_row(ex, emb)?;
    SubstituteDistribution::new(Arc::clone(emb.vocab()), emb.cosines(t), ex.id.clone())
}

/// Every vocabulary entry ranked by cosine similarity to the target; the
/// context is ignored.
pub fn ooc_rank(ex: &TargetedExample, emb: &EmbeddingTable) -> Result<RankedSubstitutes> {
    Ok(ooc_scores(ex, emb)?.ranked())
}

/// Context positions for nPIC: dependency neighbors when present, else a
/// `±window` span around the target.
pub fn npic_context(ex: &TargetedExample, window: usize) -> Vec<usize> {
    match &ex.dep_neighbors {
        Some(n) => n.iter().copied().filter(|&i| i != ex.target_index).collect(),
        None => window_positions(ex, window).collect(),
    }
}

/// `log score(s) = ⟨emb_s, emb_T⟩ + Σ_c ⟨emb_s, emb'_c⟩`, the unnormalized
/// log of the nPIC product. Context words missing from `emb_ctx` are skipped.
pub fn npic_score(
    ex: &TargetedExample,
    emb_word: &EmbeddingTable,
    emb_ctx: &EmbeddingTable,
    window: usize,
) -> Result<SubstituteDistribution> {
    if emb_word.dim() != emb_ctx.dim() {
        return Err(Error::Alignment(format!(
            "word embeddings have dimension {}, context embeddings {}",
            emb_word.dim(),
            emb_ctx.dim()
        )));
    }
    let mut scores = emb_word.dots(target_row(ex, emb_word)?);
    for i in npic_context(ex, window) {
        if let Some(c) = context_row(emb_ctx, &ex.tokens[i]) {
            for (s, d) in scores.iter_mut().zip(emb_word.dots(c)) {
                *s += d;
            }
        }
    }
    SubstituteDistribution::new(Arc::clone(emb_word.vocab()), scores, ex.id.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    File,
    Stub,
    Ooc,
    Npic,
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "file" => Ok(EstimatorKind::File),
            "stub" => Ok(EstimatorKind::Stub),
            "ooc" => Ok(EstimatorKind::Ooc),
            "npic" => Ok(EstimatorKind::Npic),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

/// A loaded estimator.
pub enum Estimator {
    File(DistributionIndex),
    Stub { emb: Arc<EmbeddingTable>, window: usize },
    Ooc { emb: Arc<EmbeddingTable> },
    Npic {
        words: Arc<EmbeddingTable>,
        contexts: Arc<EmbeddingTable>,
        window: usize,
    },
}

impl Estimator {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::File(_) => EstimatorKind::File,
            Estimator::Stub { .. } => EstimatorKind::Stub,
            Estimator::Ooc { .. } => EstimatorKind::Ooc,
            Estimator::Npic { .. } => EstimatorKind::Npic,
        }
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        match self {
            Estimator::File(index) => index.vocab(),
            Estimator::Stub { emb, .. } | Estimator::Ooc { emb } => emb.vocab(),
            Estimator::Npic { words, .. } => words.vocab(),
        }
    }

    /// Scores for one example. `variant` selects among stored input variants
    /// and is ignored by the embedding-based estimators.
    pub fn estimate(&self, ex: &TargetedExample, variant: Option<&str>) -> Result<SubstituteDistribution> {
        match self {
            Estimator::File(index) => file_estimate(ex, index, variant),
            Estimator::Stub { emb, window } => stub_estimate(ex, emb, *window),
            Estimator::Ooc { emb } => ooc_scores(ex, emb),
            Estimator::Npic {
                words,
                contexts,
                window,
            } => npic_score(ex, words, contexts, *window),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Pos;
    use proptest::prelude::*;

    fn table(words: &[&str], rows: &[Vec<f32>]) -> EmbeddingTable {
        EmbeddingTable::from_rows(Arc::new(Vocabulary::from_words(words.iter().copied()).unwrap()), rows).unwrap()
    }

    fn ex(sentence: &str, target: usize) -> TargetedExample {
        let tokens: Vec<&str> = sentence.split_whitespace().collect();
        crate::datasets::example("e", sentence, target, tokens[target], Pos::Noun, &[])
    }

    #[test]
    fn file_lookup_by_variant() {
        let v = Arc::new(Vocabulary::from_words(["a", "b"]).unwrap());
        let d = |id: &str, s: f64| SubstituteDistribution::new(Arc::clone(&v), vec![s, 0.0], id).unwrap();
        let index = DistributionIndex::from_distributions(
            Arc::clone(&v),
            vec![d("e#masked", 1.0), d("e#original", 2.0), d("f", 3.0)],
        )
        .unwrap();
        let e = ex("the bank", 1);
        assert_eq!(file_estimate(&e, &index, Some("masked")).unwrap().scores()[0], 1.0);
        assert_eq!(file_estimate(&e, &index, Some("original")).unwrap().scores()[0], 2.0);
        assert_eq!(file_estimate(&e, &index, Some("original")).unwrap().example_id(), "e");
        assert!(matches!(file_estimate(&e, &index, Some("and")), Err(Error::Lookup(_))));
        let mut f = e.clone();
        f.id = "f".into();
        assert_eq!(file_estimate(&f, &index, Some("and")).unwrap().scores()[0], 3.0);
        f.id = "g".into();
        assert!(file_estimate(&f, &index, None).is_err());
    }

    #[test]
    fn stub_zero_context_is_uniform() {
        let emb = table(&["x", "y", "river"], &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]);
        let d = stub_estimate(&ex("river bank", 1), &emb, 2).unwrap();
        let p = d.probabilities();
        assert!((p[0] - p[1]).abs() < 1e-15 && (p[1] - p[2]).abs() < 1e-15);
        let none = stub_estimate(&ex("unknown bank", 1), &emb, 2).unwrap();
        assert_eq!(none.scores(), &[0.0, 0.0, 0.0]);
        assert!(stub_estimate(&ex("river bank", 1), &emb, 0).is_err());
    }

    #[test]
    fn stub_one_hot_context_wins() {
        let emb = table(&["a", "b", "c"], &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let d = stub_estimate(&ex("B target", 1), &emb, 1).unwrap();
        assert_eq!(d.argmax(), Some(1));
        assert_eq!(d.scores(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn ooc_ranks_identical_embedding_first() {
        let emb = table(&["car", "auto", "the"], &[vec![1.0, 0.0], vec![2.0, 0.0], vec![1.0, -1.0]]);
        let r = ooc_rank(&ex("a car", 1), &emb).unwrap();
        let words: Vec<&str> = r.words().collect();
        // auto ties car at cosine 1 and sorts first alphabetically
        assert_eq!(&words[..2], ["auto", "car"]);
        assert!(ooc_rank(&ex("a zzqv", 1), &emb).is_err());
    }

    #[test]
    fn ooc_orthogonal_falls_back_to_alphabetical() {
        let emb = table(&["t", "c", "b", "a"], &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]]);
        let r = ooc_rank(&ex("x t", 1), &emb).unwrap();
        assert_eq!(r.words().collect::<Vec<_>>(), ["t", "a", "b", "c"]);
    }

    #[test]
    fn npic_empty_context_and_doubling() {
        let words = table(&["t", "a", "b"], &[vec![1.0, 0.5], vec![0.2, 1.0], vec![0.9, -0.3]]);
        let mut e = ex("t", 0);
        let alone = npic_score(&e, &words, &words, 3).unwrap();
        assert_eq!(alone.scores(), &words.dots(words.row(0))[..]);
        let ctx = table(&["c"], &[words.row(0).to_vec()]);
        e = ex("c t", 1);
        let doubled = npic_score(&e, &words, &ctx, 3).unwrap();
        for (d, a) in doubled.scores().iter().zip(alone.scores()) {
            assert!((d - 2.0 * a).abs() < 1e-12);
        }
        let ooc_dot = words.dots(words.row(0));
        let best = (0..3).max_by(|&i, &j| ooc_dot[i].total_cmp(&ooc_dot[j])).unwrap();
        assert_eq!(doubled.argmax(), Some(best));
    }

    #[test]
    fn npic_prefers_dependency_neighbors() {
        let words = table(&["t", "a"], &[vec![0.0, 0.0], vec![1.0, 0.0]]);
        let ctx = table(&["near", "far"], &[vec![1.0, 0.0], vec![0.0, 5.0]]);
        let mut e = ex("far x x x x t near", 5);
        assert_eq!(npic_context(&e, 3), vec![2, 3, 4, 6]);
        e.dep_neighbors = Some(vec![0]);
        assert_eq!(npic_context(&e, 3), vec![0]);
        assert_eq!(npic_score(&e, &words, &ctx, 3).unwrap().scores(), &[0.0, 0.0]);
        let mismatched = table(&["c"], &[vec![1.0]]);
        assert!(matches!(npic_score(&e, &words, &mismatched, 3), Err(Error::Alignment(_))));
    }

    proptest! {
        #[test]
        fn ooc_invariant_to_row_rescaling(
            rows in prop::collection::vec(prop::collection::vec(-3.0f32..3.0, 4), 3..7),
            scale in 0.1f32..10.0,
            which in 0usize..7,
        ) {
            let names: Vec<String> = (0..rows.len()).map(|i| format!("w{i}")).collect();
            let v = Arc::new(Vocabulary::new(names.clone()).unwrap());
            let a = EmbeddingTable::from_rows(Arc::clone(&v), &rows).unwrap();
            let mut scaled = rows.clone();
            let w = which % rows.len();
            scaled[w].iter_mut().for_each(|x| *x *= scale);
            let b = EmbeddingTable::from_rows(v, &scaled).unwrap();
            let e = crate::datasets::example("e", "w0", 0, "w0", Pos::Noun, &[]);
            let sa = ooc_scores(&e, &a).unwrap();
            let sb = ooc_scores(&e, &b).unwrap();
            for (x, y) in sa.scores().iter().zip(sb.scores()) {
                prop_assert!((x - y).abs() < 1e-5);
            }
        }

        #[test]
        fn stub_ignores_positions_outside_window(
            far in prop::sample::select(vec!["a", "b", "zz"]),
        ) {
            let emb = table(&["a", "b"], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
            let base = stub_estimate(&ex("x x x a t b", 4), &emb, 1).unwrap();
            let s = format!("{far} x x a t b");
            let other = stub_estimate(&ex(&s, 4), &emb, 1).unwrap();
            prop_assert_eq!(base.scores(), other.scores());
        }
    }
}
