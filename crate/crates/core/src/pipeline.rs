//! Estimator -> injection -> post-processing, and the evaluation loops on top.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datasets::{DatasetManifest, TargetedExample};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorKind};
use crate::injection::{
    bcomb, fuse_embs, target_similarity_for, BCombConfig, FusionConfig, Pattern,
};
use crate::interchange::{EmbeddingTable, RankedSubstitutes, SubstituteDistribution, WordPrior};
use crate::metrics::{rank_candidates, score_all_vocab, score_candidates, EvalMode, EvalReport, InstanceScore};
use crate::par::{self, Execution};
use crate::postproc::{postprocess, Lemmatizer, PostprocessOptions};
use crate::wsi::{build_document, SubstituteDocument, WsiInstance, DOCUMENT_SIZE};

/// How target information reaches the substitute distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    /// The model output as stored for the profile's visibility.
    None,
    /// Fusion with the target-similarity distribution.
    Embs,
    /// Model output for the `T and ___` input.
    PatternAnd,
    /// Model output for the duplicated input.
    Duplicate,
}

impl FromStr for Injection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Injection::None),
            "embs" | "+embs" => Ok(Injection::Embs),
            "pattern-and" | "and" => Ok(Injection::PatternAnd),
            "duplicate" => Ok(Injection::Duplicate),
            other => Err(Error::InvalidArgument(format!("unknown injection `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub injection: Injection,
    pub fusion: FusionConfig,
    /// Set when left and right distributions are combined first.
    pub bcomb: Option<BCombConfig>,
    pub postproc: PostprocessOptions,
}

/// A ready-to-run substitute generator.
pub struct Pipeline {
    pub estimator: Estimator,
    /// Right-context distributions for left/right combination.
    pub right: Option<Estimator>,
    /// Embeddings for the target-similarity distribution.
    pub target_embeddings: Option<Arc<EmbeddingTable>>,
    pub prior: WordPrior,
    pub lemmatizer: Arc<Lemmatizer>,
    pub config: PipelineConfig,
}

impl Pipeline {
    /// Key suffix of the stored distribution this configuration reads.
    pub fn variant(&self) -> &'static str {
        match self.config.injection {
            Injection::None | Injection::Embs => self.config.fusion.target_visibility.variant(),
            Injection::PatternAnd => Pattern::And.variant(),
            Injection::Duplicate => Pattern::Duplicate.variant(),
        }
    }

    fn is_baseline(&self) -> bool {
        matches!(self.estimator.kind(), EstimatorKind::Ooc | EstimatorKind::Npic)
    }

    /// Checks that every table is over the estimator's vocabulary.
    pub fn validate(&self) -> Result<()> {
        let vocab = self.estimator.vocab();
        if let Some(r) = &self.right {
            if r.vocab() != vocab {
                return Err(Error::Alignment("left and right distributions use different vocabularies".into()));
            }
        }
        if self.config.injection == Injection::Embs && !self.is_baseline() {
            let emb = self
                .target_embeddings
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("+embs injection needs an embedding table".into()))?;
            if emb.vocab() != vocab {
                return Err(Error::Alignment(
                    "embedding table and distributions use different vocabularies".into(),
                ));
            }
        }
        self.config.fusion.validate()
    }

    /// The (possibly fused) substitute distribution of one example.
    pub fn distribution(&self, ex: &TargetedExample) -> Result<SubstituteDistribution> {
        let run = || -> Result<SubstituteDistribution> {
            let variant = self.variant();
            let mut context = self.estimator.estimate(ex, Some(variant))?;
            if let Some(right) = &self.right {
                let r = right.estimate(ex, Some(variant))?;
                let cfg = self.config.bcomb.unwrap_or(BCombConfig { gamma: 0.0 });
                context = bcomb(&context, &r, &self.prior, &cfg)?;
            }
            if self.config.injection != Injection::Embs || self.is_baseline() {
                return Ok(context);
            }
            let emb = self
                .target_embeddings
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("+embs injection needs an embedding table".into()))?;
            let target = target_similarity_for(emb, ex, &self.config.fusion)?;
            fuse_embs(&context.normalize(), &target, &self.prior, self.config.fusion.beta)
        };
        run().map(|d| d.with_example_id(ex.id.clone())).map_err(|e| e.for_instance(&ex.id))
    }

    /// The first `n` post-processed substitutes.
    ///
    /// Post-processing only merges and removes words, so it is applied to a
    /// growing prefix of the raw ranking until the `n`-th result is known to
    /// be final.
    pub fn rank(&self, ex: &TargetedExample, n: usize) -> Result<RankedSubstitutes> {
        let dist = self.distribution(ex)?;
        Ok(self.rank_distribution(&dist, ex, n))
    }

    pub fn rank_distribution(&self, dist: &SubstituteDistribution, ex: &TargetedExample, n: usize) -> RankedSubstitutes {
        let v = dist.len();
        let mut m = (n + 64).min(v);
        loop {
            let prefix = dist.top_k(m);
            let boundary = prefix.items().last().map_or(f64::NEG_INFINITY, |(_, s)| *s);
            let out = postprocess(&prefix, &ex.target_lemma, ex.pos, &self.lemmatizer, self.config.postproc);
            let settled = out.len() >= n && out.items()[n.saturating_sub(1)].1 > boundary;
            if m >= v || settled || n == 0 {
                return out.truncated(n);
            }
            m = (m * 2).min(v);
        }
    }

    pub fn rank_all(&self, examples: &[TargetedExample], n: usize, exec: Execution) -> Vec<Result<RankedSubstitutes>> {
        par::map(exec, examples, |ex| self.rank(ex, n))
    }

    /// Scores one example in the given mode.
    pub fn score(&self, manifest: &DatasetManifest, ex: &TargetedExample, mode: EvalMode) -> Result<InstanceScore> {
        let run = || -> Result<InstanceScore> {
            match mode {
                EvalMode::Candidates => {
                    let candidates = manifest
                        .candidates_for(ex)
                        .ok_or_else(|| Error::Lookup(format!("candidates for {}", ex.lemma_key())))?;
                    let dist = self.distribution(ex)?;
                    let exclude = self.config.postproc.exclude_target.then_some(ex.target_lemma.as_str());
                    score_candidates(&ex.id, &rank_candidates(&dist, candidates, exclude), &ex.gold)
                }
                EvalMode::AllVocab => score_all_vocab(&ex.id, &self.rank(ex, 10)?, &ex.gold),
            }
        };
        run().map_err(|e| e.for_instance(&ex.id))
    }

    /// Instance-averaged evaluation. With `skip_errors`, failing instances
    /// are counted and left out; otherwise the first failure is returned.
    pub fn evaluate(
        &self,
        manifest: &DatasetManifest,
        model: &str,
        mode: EvalMode,
        skip_errors: bool,
        exec: Execution,
    ) -> Result<(EvalReport, Vec<InstanceScore>)> {
        let results = par::map(exec, &manifest.examples, |ex| self.score(manifest, ex, mode));
        let mut scores = Vec::with_capacity(results.len());
        let mut skipped = 0;
        for r in results {
            match r {
                Ok(s) => scores.push(s),
                Err(e) if skip_errors => {
                    log::warn!("skipping: {e}");
                    skipped += 1;
                }
                Err(e) => return Err(e),
            }
        }
        Ok((EvalReport::aggregate(model, mode, &scores, skipped), scores))
    }

    /// Top-200 lemma documents for WSI.
    pub fn wsi_documents(&self, instances: &[WsiInstance], exec: Execution) -> Result<Vec<SubstituteDocument>> {
        par::try_map(exec, instances, |inst| {
            let ranked = self.rank(&inst.example, DOCUMENT_SIZE)?;
            Ok(build_document(&inst.id, &ranked, &inst.example.target_lemma, DOCUMENT_SIZE))
        })
    }
}
