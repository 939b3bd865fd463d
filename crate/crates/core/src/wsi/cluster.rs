use serde::{Deserialize, Serialize};

use super::tfidf::{sparse_dot, SparseVector};
use crate::error::{Error, Result};

/// Dense symmetric distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// `1 - cos(u, v)` for L2-normalized vectors; a zero vector is at distance 1
/// from everything else.
pub fn cosine_distances(vectors: &[SparseVector]) -> DistanceMatrix {
    DistanceMatrix::from_fn(vectors.len(), |i, j| {
        let (a, b) = (&vectors[i], &vectors[j]);
        if a.is_empty() || b.is_empty() {
            return 1.0;
        }
        (1.0 - sparse_dot(a, b)).clamp(0.0, 2.0)
    })
}

/// One agglomeration step. Clusters are named by their smallest member, so
/// `a < b` and the merged cluster keeps the name `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// Full average-linkage merge history, computed once and cut at any `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Lance-Williams update for average linkage. At each step the closest
    /// pair of active clusters is merged; ties go to the smallest `(a, b)`.
    pub fn build(dist: &DistanceMatrix) -> Self {
        let n = dist.len();
        let mut d = dist.data.clone();
        let mut size = vec![1usize; n];
        let mut active: Vec<usize> = (0..n).collect();
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        while active.len() > 1 {
            let mut best: Option<(f64, usize, usize)> = None;
            for (x, &a) in active.iter().enumerate() {
                for &b in &active[x + 1..] {
                    let v = d[a * n + b];
                    if best.map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v, a, b));
                    }
                }
            }
            let (distance, a, b) = best.expect("at least two active clusters");
            let (sa, sb) = (size[a] as f64, size[b] as f64);
            for &c in &active {
                if c == a || c == b {
                    continue;
                }
                let v = (sa * d[a * n + c] + sb * d[b * n + c]) / (sa + sb);
                d[a * n + c] = v;
                d[c * n + a] = v;
            }
            size[a] += size[b];
            active.retain(|&c| c != b);
            merges.push(Merge { a, b, distance });
        }
        Self { n, merges }
    }

    /// Labels after applying the first `n - k` merges, numbered `0..k` in
    /// order of first appearance.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidArgument(format!(
                "cannot cut {} points into {k} clusters",
                self.n
            )));
        }
        let mut owner: Vec<usize> = (0..self.n).collect();
        for m in &self.merges[..self.n - k] {
            for o in owner.iter_mut() {
                if *o == m.b {
                    *o = m.a;
                }
            }
        }
        Ok(relabel(&owner))
    }
}

pub(crate) fn relabel(raw: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len();
            *map.entry(*r).or_insert(next)
        })
        .collect()
}

pub fn agglomerative_cluster(dist: &DistanceMatrix, k: usize) -> Result<Vec<usize>> {
    Dendrogram::build(dist).cut(k)
}

/// Mean per-sample silhouette. Samples in singleton clusters score 0.
pub fn silhouette(dist: &DistanceMatrix, labels: &[usize]) -> f64 {
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        if sizes[labels[i]] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist.get(i, j);
            }
        }
        let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i] && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub k: usize,
    pub labels: Vec<usize>,
    pub silhouette: Option<f64>,
    pub degenerate: bool,
}

/// `2..=min(8, n - 1)`.
pub fn default_k_range(n: usize) -> (usize, usize) {
    (2, 8.min(n.saturating_sub(1)))
}

/// Picks the `k` with the highest silhouette (smallest `k` on ties).
pub fn select_k(dist: &DistanceMatrix, k_range: Option<(usize, usize)>) -> Result<Selection> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::InvalidArgument("nothing to cluster".into()));
    }
    let all_zero = (0..n).all(|i| (i + 1..n).all(|j| dist.get(i, j) == 0.0));
    if n < 3 || all_zero {
        return Ok(Selection {
            k: 1,
            labels: vec![0; n],
            silhouette: None,
            degenerate: true,
        });
    }
    let (lo, hi) = k_range.unwrap_or_else(|| default_k_range(n));
    let (lo, hi) = (lo.max(2), hi.min(n - 1));
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "empty k range {lo}..={hi} for {n} points"
        )));
    }
    let dendrogram = Dendrogram::build(dist);
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for k in lo..=hi {
        let labels = dendrogram.cut(k)?;
        let s = silhouette(dist, &labels);
        if best.as_ref().map_or(true, |(bs, _, _)| s > *bs) {
            best = Some((s, k, labels));
        }
    }
    let (s, k, labels) = best.expect("non-empty range");
    Ok(Selection {
        k,
        labels,
        silhouette: Some(s),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn points(xs: &[(f64, f64)]) -> DistanceMatrix {
        DistanceMatrix::from_fn(xs.len(), |i, j| {
            let (a, b) = (xs[i], xs[j]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
    }

    #[test]
    fn k_equal_n_gives_singletons() {
        let d = points(&[(0.0, 0.0), (1.0, 0.0), (5.0, 5.0)]);
        assert_eq!(agglomerative_cluster(&d, 3).unwrap(), vec![0, 1, 2]);
        assert!(agglomerative_cluster(&d, 4).is_err());
    }

    #[test]
    fn duplicates_merge_first() {
        let d = points(&[(0.0, 0.0), (3.0, 0.0), (3.0, 0.0), (9.0, 1.0)]);
        assert_eq!(agglomerative_cluster(&d, 3).unwrap(), vec![0, 1, 1, 2]);
    }

    #[test]
    fn two_tight_groups() {
        let d = points(&[(0.0, 0.0), (10.0, 0.0), (0.1, 0.0), (10.1, 0.1), (0.0, 0.2), (10.0, 0.2)]);
        assert_eq!(agglomerative_cluster(&d, 2).unwrap(), vec![0, 1, 0, 1, 0, 1]);
        let s = select_k(&d, None).unwrap();
        assert_eq!(s.k, 2);
        assert!(s.silhouette.unwrap() > 0.95);
    }

    #[test]
    fn equal_distances_break_ties_by_index() {
        let d = DistanceMatrix::from_fn(4, |_, _| 1.0);
        let dend = Dendrogram::build(&d);
        assert_eq!((dend.merges[0].a, dend.merges[0].b), (0, 1));
        assert_eq!((dend.merges[1].a, dend.merges[1].b), (0, 2));
    }

    #[test]
    fn degenerate_inputs() {
        let same = DistanceMatrix::from_fn(5, |_, _| 0.0);
        let s = select_k(&same, None).unwrap();
        assert!(s.degenerate);
        assert_eq!((s.k, s.labels), (1, vec![0; 5]));
        let two = points(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(select_k(&two, None).unwrap().degenerate);
    }

    #[test]
    fn silhouette_known_value() {
        // points 0, 1 on a line and 5: clusters {0,1} {5}
        let d = points(&[(0.0, 0.0), (1.0, 0.0), (5.0, 0.0)]);
        let s = silhouette(&d, &[0, 0, 1]);
        // sample 0: a=1, b=5 -> 0.8; sample 1: a=1, b=4 -> 0.75; singleton -> 0
        assert!((s - (0.8 + 0.75) / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cut_labels_are_dense(xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..15), k in 1usize..15) {
            let d = points(&xs);
            prop_assume!(k <= xs.len());
            let labels = agglomerative_cluster(&d, k).unwrap();
            let distinct: std::collections::BTreeSet<_> = labels.iter().copied().collect();
            prop_assert_eq!(distinct.into_iter().collect::<Vec<_>>(), (0..k).collect::<Vec<_>>());
            prop_assert_eq!(labels[0], 0);
        }
    }
}
