//! Word sense induction from substitutes.
//!
//! Each occurrence becomes a bag of its top substitute lemmas; bags are
//! TF-IDF weighted and clustered per target lemma with average-linkage
//! agglomerative clustering under cosine distance, the number of clusters
//! being chosen by silhouette.

mod cluster;
mod metrics;
mod tfidf;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cluster::{
    agglomerative_cluster, cosine_distances, default_k_range, select_k, silhouette, Dendrogram, DistanceMatrix,
    Merge, Selection,
};
pub use metrics::{bcubed_f, nmi, paired_f, v_measure, wsi_metrics, ClusterScores};
pub use tfidf::{tfidf, SparseVector, TfIdf};

use crate::datasets::{Pos, TargetedExample, WsiFlavor};
use crate::error::{Error, Result};
use crate::interchange::RankedSubstitutes;
use crate::par::{self, Execution};

/// Number of substitutes kept per occurrence.
pub const DOCUMENT_SIZE: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsiInstance {
    pub id: String,
    pub lemma: String,
    pub pos: Pos,
    pub example: TargetedExample,
    /// Hard label; the highest-weight sense for graded gold.
    pub gold_sense: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_graded: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstituteDocument {
    pub instance_id: String,
    pub lemmas: Vec<String>,
}

/// Top `size` distinct lemmas of an already post-processed ranking, in rank
/// order, with the target lemma removed.
pub fn build_document(instance_id: &str, ranked: &RankedSubstitutes, target_lemma: &str, size: usize) -> SubstituteDocument {
    let mut seen = HashSet::new();
    let lemmas = ranked
        .words()
        .filter(|w| *w != target_lemma && seen.insert(*w))
        .take(size)
        .map(str::to_string)
        .collect();
    SubstituteDocument {
        instance_id: instance_id.to_string(),
        lemmas,
    }
}

/// Cluster assignment for the occurrences of one lemma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub lemma: String,
    pub instance_ids: Vec<String>,
    /// Dense ids `0..k`, numbered by first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
    pub silhouette: Option<f64>,
    /// Set when the silhouette was undefined (fewer than three occurrences
    /// or all documents identical) and everything went to one cluster.
    pub degenerate: bool,
}

/// Clusters the documents of a single lemma.
pub fn cluster_lemma(lemma: &str, documents: &[SubstituteDocument], k_range: Option<(usize, usize)>) -> Result<Clustering> {
    let model = tfidf(documents)?;
    let dist = cosine_distances(&model.vectors);
    let sel = select_k(&dist, k_range)?;
    Ok(Clustering {
        lemma: lemma.to_string(),
        instance_ids: documents.iter().map(|d| d.instance_id.clone()).collect(),
        labels: sel.labels,
        k: sel.k,
        silhouette: sel.silhouette,
        degenerate: sel.degenerate,
    })
}

/// Groups instances by lemma (sorted) and clusters each group.
pub fn cluster_all(
    instances: &[WsiInstance],
    documents: &[SubstituteDocument],
    k_range: Option<(usize, usize)>,
    exec: Execution,
) -> Result<Vec<Clustering>> {
    if instances.len() != documents.len() {
        return Err(Error::Alignment(format!(
            "{} instances but {} substitute documents",
            instances.len(),
            documents.len()
        )));
    }
    let mut groups: BTreeMap<&str, Vec<SubstituteDocument>> = BTreeMap::new();
    for (inst, doc) in instances.iter().zip(documents) {
        if inst.id != doc.instance_id {
            return Err(Error::Alignment(format!(
                "document `{}` out of order, expected `{}`",
                doc.instance_id, inst.id
            )));
        }
        groups.entry(&inst.lemma).or_default().push(doc.clone());
    }
    let groups: Vec<(&str, Vec<SubstituteDocument>)> = groups.into_iter().collect();
    par::try_map(exec, &groups, |(lemma, docs)| cluster_lemma(lemma, docs, k_range))
}

/// `instance_id<TAB>cluster` lines, cluster ids prefixed by the lemma so
/// they stay unique across lemmas.
pub fn assignments_tsv(clusterings: &[Clustering]) -> String {
    let mut out = String::new();
    for c in clusterings {
        for (id, label) in c.instance_ids.iter().zip(&c.labels) {
            let _ = writeln!(out, "{id}\t{}.{label}", c.lemma);
        }
    }
    out
}

pub fn write_assignments(path: impl AsRef<Path>, clusterings: &[Clustering]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, assignments_tsv(clusterings)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub instances: usize,
    pub k: usize,
    pub gold_senses: usize,
    pub scores: ClusterScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsiReport {
    pub flavor: WsiFlavor,
    pub lemmas: Vec<LemmaReport>,
    /// Unweighted mean over lemmas.
    pub mean: ClusterScores,
    /// Geometric mean of the flavor's two headline metrics, from `mean`.
    pub avg: f64,
}

/// The two metrics whose geometric mean is reported as AVG.
pub fn headline_pair(flavor: WsiFlavor, s: &ClusterScores) -> (f64, f64) {
    match flavor {
        WsiFlavor::SemEval2010 => (s.v_measure, s.paired_f),
        WsiFlavor::SemEval2013 => (s.nmi, s.bcubed_f),
    }
}

pub fn evaluate(instances: &[WsiInstance], clusterings: &[Clustering], flavor: WsiFlavor) -> Result<WsiReport> {
    let gold: std::collections::HashMap<&str, &str> =
        instances.iter().map(|i| (i.id.as_str(), i.gold_sense.as_str())).collect();
    let mut lemmas = Vec::with_capacity(clusterings.len());
    for c in clusterings {
        let labels: Vec<&str> = c
            .instance_ids
            .iter()
            .map(|id| {
                gold.get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Consistency(format!("instance {id} has no gold sense")))
            })
            .collect::<Result<_>>()?;
        let scores = wsi_metrics(&c.labels, &labels, flavor)?;
        lemmas.push(LemmaReport {
            lemma: c.lemma.clone(),
            instances: c.labels.len(),
            k: c.k,
            gold_senses: labels.iter().collect::<HashSet<_>>().len(),
            scores,
        });
    }
    if lemmas.is_empty() {
        return Err(Error::InvalidArgument("no lemmas to evaluate".into()));
    }
    let n = lemmas.len() as f64;
    let mut mean = ClusterScores::default();
    for l in &lemmas {
        mean.v_measure += l.scores.v_measure / n;
        mean.paired_f += l.scores.paired_f / n;
        mean.bcubed_f += l.scores.bcubed_f / n;
        mean.nmi += l.scores.nmi / n;
    }
    let (a, b) = headline_pair(flavor, &mean);
    mean.avg = (a * b).sqrt();
    Ok(WsiReport {
        flavor,
        avg: mean.avg,
        lemmas,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, words: &[&str]) -> SubstituteDocument {
        SubstituteDocument {
            instance_id: id.into(),
            lemmas: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    #[test]
    fn documents_cap_and_exclude_target() {
        let ranked = RankedSubstitutes::from_unsorted(
            (0..250).map(|i| (format!("w{i:03}"), -(i as f64))).chain([("bank".to_string(), 10.0)]).collect(),
        );
        let d = build_document("1", &ranked, "bank", DOCUMENT_SIZE);
        assert_eq!(d.lemmas.len(), 200);
        assert!(!d.lemmas.iter().any(|w| w == "bank"));
        assert_eq!(d.lemmas[0], "w000");
        let short = RankedSubstitutes::from_unsorted((0..150).map(|i| (format!("w{i}"), 0.0)).collect());
        assert_eq!(build_document("2", &short, "bank", DOCUMENT_SIZE).lemmas.len(), 150);
        assert_eq!(build_document("3", &short, "x", 200), build_document("3", &short, "x", 200));
    }

    #[test]
    fn two_sense_corpus_is_recovered() {
        let docs = vec![
            doc("a1", &["shore", "riverside", "edge"]),
            doc("a2", &["shore", "riverside", "slope"]),
            doc("b1", &["institution", "lender", "firm"]),
            doc("a3", &["shore", "edge", "slope"]),
            doc("b2", &["institution", "lender", "company"]),
            doc("b3", &["lender", "firm", "company"]),
        ];
        let c = cluster_lemma("bank", &docs, None).unwrap();
        assert_eq!(c.k, 2);
        assert_eq!(c.labels, vec![0, 0, 1, 0, 1, 1]);
        let instances: Vec<WsiInstance> = docs
            .iter()
            .map(|d| {
                let ex = crate::datasets::example(&d.instance_id, "the bank", 1, "bank", Pos::Noun, &[]);
                WsiInstance {
                    id: d.instance_id.clone(),
                    lemma: "bank".into(),
                    pos: Pos::Noun,
                    example: ex,
                    gold_sense: d.instance_id[..1].to_string(),
                    gold_graded: None,
                }
            })
            .collect();
        for flavor in [WsiFlavor::SemEval2010, WsiFlavor::SemEval2013] {
            let r = evaluate(&instances, &[c.clone()], flavor).unwrap();
            assert_eq!(r.avg, 1.0);
            assert_eq!(r.mean.paired_f, 1.0);
        }
        let tsv = assignments_tsv(&[c]);
        assert!(tsv.starts_with("a1\tbank.0\na2\tbank.0\nb1\tbank.1\n"));
    }

    #[test]
    fn misaligned_documents_rejected() {
        let ex = crate::datasets::example("x", "a bank", 1, "bank", Pos::Noun, &[]);
        let inst = WsiInstance {
            id: "x".into(),
            lemma: "bank".into(),
            pos: Pos::Noun,
            example: ex,
            gold_sense: "s".into(),
            gold_graded: None,
        };
        let r = cluster_all(&[inst], &[doc("y", &["a"])], None, Execution::Sequential);
        assert!(matches!(r, Err(Error::Alignment(_))));
    }
}
