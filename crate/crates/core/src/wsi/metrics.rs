//! Clustering scores against hard gold senses.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::datasets::WsiFlavor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterScores {
    pub v_measure: f64,
    pub paired_f: f64,
    pub bcubed_f: f64,
    pub nmi: f64,
    pub avg: f64,
}

struct Contingency {
    n: f64,
    /// (cluster, class) -> count
    cells: Vec<f64>,
    clusters: Vec<f64>,
    classes: Vec<f64>,
    cluster_of: Vec<usize>,
    class_of: Vec<usize>,
}

fn dense<T: Eq + Hash + Clone>(xs: &[T]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let ids = xs
        .iter()
        .map(|x| {
            let next = map.len();
            *map.entry(x.clone()).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

impl Contingency {
    fn new<C: Eq + Hash + Clone, G: Eq + Hash + Clone>(pred: &[C], gold: &[G]) -> Result<Self> {
        if pred.len() != gold.len() {
            return Err(Error::Alignment(format!(
                "{} cluster labels but {} gold labels",
                pred.len(),
                gold.len()
            )));
        }
        if pred.is_empty() {
            return Err(Error::InvalidArgument("no instances to score".into()));
        }
        let (cluster_of, k) = dense(pred);
        let (class_of, c) = dense(gold);
        let mut cells = vec![0.0; k * c];
        let mut clusters = vec![0.0; k];
        let mut classes = vec![0.0; c];
        for (&p, &g) in cluster_of.iter().zip(&class_of) {
            cells[p * c + g] += 1.0;
            clusters[p] += 1.0;
            classes[g] += 1.0;
        }
        Ok(Self {
            n: pred.len() as f64,
            cells,
            clusters,
            classes,
            cluster_of,
            class_of,
        })
    }

    fn cell(&self, k: usize, c: usize) -> f64 {
        self.cells[k * self.classes.len() + c]
    }

    fn entropy(&self, marginal: &[f64]) -> f64 {
        -marginal
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|m| (m / self.n) * (m / self.n).ln())
            .sum::<f64>()
    }

    /// (H(class|cluster), H(cluster|class))
    fn conditional_entropies(&self) -> (f64, f64) {
        let (mut h_c_k, mut h_k_c) = (0.0, 0.0);
        for k in 0..self.clusters.len() {
            for c in 0..self.classes.len() {
                let a = self.cell(k, c);
                if a > 0.0 {
                    h_c_k -= a / self.n * (a / self.clusters[k]).ln();
                    h_k_c -= a / self.n * (a / self.classes[c]).ln();
                }
            }
        }
        (h_c_k, h_k_c)
    }

    fn mutual_information(&self) -> f64 {
        let mut mi = 0.0;
        for k in 0..self.clusters.len() {
            for c in 0..self.classes.len() {
                let a = self.cell(k, c);
                if a > 0.0 {
                    mi += a / self.n * (a * self.n / (self.clusters[k] * self.classes[c])).ln();
                }
            }
        }
        mi.max(0.0)
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Harmonic mean of homogeneity and completeness.
pub fn v_measure<C: Eq + Hash + Clone, G: Eq + Hash + Clone>(pred: &[C], gold: &[G]) -> Result<f64> {
    let t = Contingency::new(pred, gold)?;
    let (h_c_k, h_k_c) = t.conditional_entropies();
    let (h_c, h_k) = (t.entropy(&t.classes), t.entropy(&t.clusters));
    let homogeneity = if h_c == 0.0 { 1.0 } else { 1.0 - h_c_k / h_c };
    let completeness = if h_k == 0.0 { 1.0 } else { 1.0 - h_k_c / h_k };
    Ok(harmonic(homogeneity, completeness))
}

fn pairs(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// F1 over unordered instance pairs placed together. An empty pair set on
/// either side counts as precision (or recall) 1.
pub fn paired_f<C: Eq + Hash + Clone, G: Eq + Hash + Clone>(pred: &[C], gold: &[G]) -> Result<f64> {
    let t = Contingency::new(pred, gold)?;
    let both: f64 = t.cells.iter().map(|&a| pairs(a)).sum();
    let predicted: f64 = t.clusters.iter().map(|&a| pairs(a)).sum();
    let actual: f64 = t.classes.iter().map(|&a| pairs(a)).sum();
    let p = if predicted == 0.0 { 1.0 } else { both / predicted };
    let r = if actual == 0.0 { 1.0 } else { both / actual };
    Ok(harmonic(p, r))
}

/// F1 of the item-averaged B-cubed precision and recall.
pub fn bcubed_f<C: Eq + Hash + Clone, G: Eq + Hash + Clone>(pred: &[C], gold: &[G]) -> Result<f64> {
    let t = Contingency::new(pred, gold)?;
    let (mut p, mut r) = (0.0, 0.0);
    for (&k, &c) in t.cluster_of.iter().zip(&t.class_of) {
        let shared = t.cell(k, c);
        p += shared / t.clusters[k];
        r += shared / t.classes[c];
    }
    Ok(harmonic(p / t.n, r / t.n))
}

/// Mutual information over the arithmetic mean of the two entropies.
pub fn nmi<C: Eq + Hash + Clone, G: Eq + Hash + Clone>(pred: &[C], gold: &[G]) -> Result<f64> {
    let t = Contingency::new(pred, gold)?;
    let (h_c, h_k) = (t.entropy(&t.classes), t.entropy(&t.clusters));
    if h_c == 0.0 && h_k == 0.0 {
        return Ok(1.0);
    }
    Ok((t.mutual_information() / ((h_c + h_k) / 2.0)).min(1.0))
}

pub fn wsi_metrics<C: Eq + Hash + Clone, G: Eq + Hash + Clone>(pred: &[C], gold: &[G], flavor: WsiFlavor) -> Result<ClusterScores> {
    let mut s = ClusterScores {
        v_measure: v_measure(pred, gold)?,
        paired_f: paired_f(pred, gold)?,
        bcubed_f: bcubed_f(pred, gold)?,
        nmi: nmi(pred, gold)?,
        avg: 0.0,
    };
    let (a, b) = super::headline_pair(flavor, &s);
    s.avg = (a * b).sqrt();
    Ok(s)
}
