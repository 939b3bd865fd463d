use std::collections::{BTreeMap, BTreeSet};

use super::SubstituteDocument;
use crate::error::{Error, Result};

/// Sorted `(term index, weight)` pairs.
pub type SparseVector = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdf {
    /// Terms in lexicographic order; vector indices point here.
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    /// One L2-normalized vector per document (empty for empty documents).
    pub vectors: Vec<SparseVector>,
}

/// `tf` is the raw count, `idf = ln((1 + N) / (1 + df)) + 1`, rows are L2-normalized.
pub fn tfidf(documents: &[SubstituteDocument]) -> Result<TfIdf> {
    if documents.iter().all(|d| d.lemmas.is_empty()) {
        return Err(Error::InvalidArgument("all substitute documents are empty".into()));
    }
    let terms: Vec<String> = documents
        .iter()
        .flat_map(|d| d.lemmas.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let counts: Vec<BTreeMap<usize, f64>> = documents
        .iter()
        .map(|d| {
            let mut c = BTreeMap::new();
            for l in &d.lemmas {
                *c.entry(index[l.as_str()]).or_insert(0.0) += 1.0;
            }
            c
        })
        .collect();
    let mut df = vec![0usize; terms.len()];
    for c in &counts {
        for t in c.keys() {
            df[*t] += 1;
        }
    }
    let n = documents.len() as f64;
    let idf: Vec<f64> = df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
    let vectors = counts
        .into_iter()
        .map(|c| {
            let mut v: SparseVector = c.into_iter().map(|(t, tf)| (t, tf * idf[t])).collect();
            let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, w) in &mut v {
                    *w /= norm;
                }
            }
            v
        })
        .collect();
    Ok(TfIdf { terms, idf, vectors })
}

pub(crate) fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(words: &[&[&str]]) -> Vec<SubstituteDocument> {
        words
            .iter()
            .enumerate()
            .map(|(i, w)| SubstituteDocument {
                instance_id: i.to_string(),
                lemmas: w.iter().map(|s| s.to_string()).collect(),
            })
            .collect()
    }

    #[test]
    fn shared_term_has_unit_idf() {
        let m = tfidf(&docs(&[&["a", "b"], &["a"], &["a", "c"]])).unwrap();
        assert_eq!(m.terms, ["a", "b", "c"]);
        assert_eq!(m.idf[0], 1.0);
    }

    #[test]
    fn disjoint_documents_are_orthogonal() {
        let m = tfidf(&docs(&[&["a", "b"], &["c", "d"]])).unwrap();
        assert_eq!(sparse_dot(&m.vectors[0], &m.vectors[1]), 0.0);
    }

    #[test]
    fn hand_computed_table() {
        // N = 3; df(a)=2, df(b)=1, df(c)=1
        let m = tfidf(&docs(&[&["a", "b", "b"], &["a", "c"], &["c"]])).unwrap();
        let idf_a = (4.0f64 / 3.0).ln() + 1.0;
        let idf_1 = 2.0f64.ln() + 1.0;
        let idf_c = (4.0f64 / 3.0).ln() + 1.0;
        assert!((m.idf[0] - idf_a).abs() < 1e-15);
        assert!((m.idf[1] - idf_1).abs() < 1e-15);
        assert!((m.idf[2] - idf_c).abs() < 1e-15);
        let raw0 = [idf_a, 2.0 * idf_1];
        let n0 = (raw0[0] * raw0[0] + raw0[1] * raw0[1]).sqrt();
        assert!((m.vectors[0][0].1 - raw0[0] / n0).abs() < 1e-12);
        assert!((m.vectors[0][1].1 - raw0[1] / n0).abs() < 1e-12);
        assert_eq!(m.vectors[2], vec![(2, 1.0)]);
    }

    #[test]
    fn all_empty_is_an_error() {
        assert!(tfidf(&docs(&[&[], &[]])).is_err());
    }
}
