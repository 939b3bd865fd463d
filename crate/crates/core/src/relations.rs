//! Semantic relation between a target and its substitutes, read off the
//! WordNet hypernym hierarchy.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::{DatasetManifest, Pos};
use crate::error::{Error, Result};
use crate::wnfiles;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationLabel {
    Target,
    Synonym,
    DirectHypernym,
    DirectHyponym,
    CoHyponym,
    TransitiveHypernym,
    TransitiveHyponym,
    #[serde(rename = "co-hyponym-3")]
    CoHyponym3,
    UnknownRelation,
    NoPath,
    UnknownWord,
    /// A multi-word substitute WordNet does not list.
    Multiword,
}

impl RelationLabel {
    pub const ALL: [RelationLabel; 12] = [
        RelationLabel::Target,
        RelationLabel::Synonym,
        RelationLabel::DirectHypernym,
        RelationLabel::DirectHyponym,
        RelationLabel::CoHyponym,
        RelationLabel::TransitiveHypernym,
        RelationLabel::TransitiveHyponym,
        RelationLabel::CoHyponym3,
        RelationLabel::UnknownRelation,
        RelationLabel::NoPath,
        RelationLabel::UnknownWord,
        RelationLabel::Multiword,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationLabel::Target => "target",
            RelationLabel::Synonym => "synonym",
            RelationLabel::DirectHypernym => "direct-hypernym",
            RelationLabel::DirectHyponym => "direct-hyponym",
            RelationLabel::CoHyponym => "co-hyponym",
            RelationLabel::TransitiveHypernym => "transitive-hypernym",
            RelationLabel::TransitiveHyponym => "transitive-hyponym",
            RelationLabel::CoHyponym3 => "co-hyponym-3",
            RelationLabel::UnknownRelation => "unknown-relation",
            RelationLabel::NoPath => "no-path",
            RelationLabel::UnknownWord => "unknown-word",
            RelationLabel::Multiword => "multiword",
        }
    }

    /// The label for the same pair seen from the other side.
    pub fn inverse(self) -> Self {
        match self {
            RelationLabel::DirectHypernym => RelationLabel::DirectHyponym,
            RelationLabel::DirectHyponym => RelationLabel::DirectHypernym,
            RelationLabel::TransitiveHypernym => RelationLabel::TransitiveHyponym,
            RelationLabel::TransitiveHyponym => RelationLabel::TransitiveHypernym,
            other => other,
        }
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelationLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown relation label `{s}`")))
    }
}

#[derive(Debug, Clone)]
struct Synset {
    offset: u64,
    pos: Pos,
    lemmas: Vec<String>,
    hypernyms: Vec<usize>,
    hyponyms: Vec<usize>,
}

/// Synsets, hypernym edges and the `(lemma, pos) -> synsets` index of a
/// WordNet database. Synset ids are dense indices into this graph.
#[derive(Debug, Clone, Default)]
pub struct WordnetGraph {
    synsets: Vec<Synset>,
    by_offset: HashMap<(Pos, u64), usize>,
    index: HashMap<(String, Pos), Vec<usize>>,
}

fn file_pos(c: &str) -> Option<Pos> {
    match c {
        "n" => Some(Pos::Noun),
        "v" => Some(Pos::Verb),
        "a" | "s" => Some(Pos::Adjective),
        "r" => Some(Pos::Adverb),
        _ => None,
    }
}

/// `lemma(a)` -> `lemma`
fn strip_marker(word: &str) -> &str {
    match word.find('(') {
        Some(i) if word.ends_with(')') => &word[..i],
        _ => word,
    }
}

fn key(word: &str) -> String {
    word.trim().to_lowercase().replace(' ', "_")
}

impl WordnetGraph {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut g = Self::default();
        let mut pending: Vec<(usize, Vec<(Pos, u64)>)> = Vec::new();
        for pos in Pos::ALL {
            let name = format!("data.{}", wnfiles::suffix(pos));
            let text = wnfiles::read(dir, &name)?;
            for (n, line) in wnfiles::content_lines(&text) {
                let loc = || format!("{name}:{}", n + 1);
                let body = line.split(" | ").next().unwrap_or(line);
                let f: Vec<&str> = body.split_whitespace().collect();
                let bad = |what: &str| Error::parse(loc(), what.to_string());
                if f.len() < 4 {
                    return Err(bad("short synset line"));
                }
                let offset: u64 = f[0].parse().map_err(|_| bad("bad synset offset"))?;
                let w_cnt = usize::from_str_radix(f[3], 16).map_err(|_| bad("bad word count"))?;
                let words_end = 4 + 2 * w_cnt;
                let p_cnt: usize = f
                    .get(words_end)
                    .ok_or_else(|| bad("missing pointer count"))?
                    .parse()
                    .map_err(|_| bad("bad pointer count"))?;
                let lemmas = (0..w_cnt).map(|i| strip_marker(f[4 + 2 * i]).to_lowercase()).collect();
                let mut hyper = Vec::new();
                for p in 0..p_cnt {
                    let at = words_end + 1 + 4 * p;
                    let ptr = f.get(at..at + 4).ok_or_else(|| bad("truncated pointer list"))?;
                    if ptr[0] == "@" || ptr[0] == "@i" {
                        let target_pos = file_pos(ptr[2]).ok_or_else(|| bad("bad pointer pos"))?;
                        let target: u64 = ptr[1].parse().map_err(|_| bad("bad pointer offset"))?;
                        hyper.push((target_pos, target));
                    }
                }
                let id = g.synsets.len();
                g.synsets.push(Synset {
                    offset,
                    pos,
                    lemmas,
                    hypernyms: Vec::new(),
                    hyponyms: Vec::new(),
                });
                g.by_offset.insert((pos, offset), id);
                if !hyper.is_empty() {
                    pending.push((id, hyper));
                }
            }
        }
        for (id, hyper) in pending {
            for target in hyper {
                let t = *g.by_offset.get(&target).ok_or_else(|| {
                    Error::Consistency(format!("hypernym pointer to missing synset {:08}", target.1))
                })?;
                g.synsets[id].hypernyms.push(t);
                g.synsets[t].hyponyms.push(id);
            }
        }
        for pos in Pos::ALL {
            for (lemma, offsets) in wnfiles::read_index(dir, pos)? {
                let ids = offsets
                    .iter()
                    .map(|o| {
                        g.by_offset.get(&(pos, *o)).copied().ok_or_else(|| {
                            Error::Consistency(format!("index entry `{lemma}` points to missing synset {o:08}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                g.index.insert((lemma, pos), ids);
            }
        }
        Ok(g)
    }

    /// Builds a graph from `(name, pos, lemmas, hypernym names)` rows; used
    /// for synthetic hierarchies. Lemma senses follow row order.
    pub fn from_synsets(rows: &[(&str, Pos, &[&str], &[&str])]) -> Result<Self> {
        let mut g = Self::default();
        let mut names = HashMap::new();
        for (i, (name, pos, lemmas, _)) in rows.iter().enumerate() {
            names.insert(*name, i);
            g.synsets.push(Synset {
                offset: i as u64,
                pos: *pos,
                lemmas: lemmas.iter().map(|l| key(l)).collect(),
                hypernyms: Vec::new(),
                hyponyms: Vec::new(),
            });
            g.by_offset.insert((*pos, i as u64), i);
            for l in *lemmas {
                g.index.entry((key(l), *pos)).or_default().push(i);
            }
        }
        for (i, (_, _, _, hyper)) in rows.iter().enumerate() {
            for h in *hyper {
                let t = *names
                    .get(h)
                    .ok_or_else(|| Error::Consistency(format!("unknown hypernym `{h}`")))?;
                g.synsets[i].hypernyms.push(t);
                g.synsets[t].hyponyms.push(i);
            }
        }
        Ok(g)
    }

    pub fn synset_count(&self) -> usize {
        self.synsets.len()
    }

    /// Synsets of a lemma in sense order.
    pub fn synsets_of(&self, lemma: &str, pos: Pos) -> &[usize] {
        self.index.get(&(key(lemma), pos)).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, lemma: &str, pos: Pos) -> bool {
        !self.synsets_of(lemma, pos).is_empty()
    }

    pub fn lemmas(&self, synset: usize) -> &[String] {
        &self.synsets[synset].lemmas
    }

    pub fn offset(&self, synset: usize) -> u64 {
        self.synsets[synset].offset
    }

    pub fn synset_pos(&self, synset: usize) -> Pos {
        self.synsets[synset].pos
    }

    pub fn hypernyms(&self, synset: usize) -> &[usize] {
        &self.synsets[synset].hypernyms
    }

    /// Every lemma indexed under `pos`, sorted.
    pub fn lemma_list(&self, pos: Pos) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .index
            .keys()
            .filter(|(_, p)| *p == pos)
            .map(|(l, _)| l.as_str())
            .collect();
        out.sort_unstable();
        out
    }

    /// Shortest undirected distances from `start` to each of `goals`, stopping
    /// once all are found or the search passes `limit`.
    fn distances(&self, start: usize, goals: &[usize], limit: usize) -> HashMap<usize, usize> {
        let mut found = HashMap::new();
        let wanted = goals.iter().collect::<HashSet<_>>().len();
        let mut seen = vec![false; self.synsets.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((s, d)) = queue.pop_front() {
            if d > limit {
                break;
            }
            if goals.contains(&s) {
                found.insert(s, d);
                if found.len() == wanted {
                    break;
                }
            }
            let syn = &self.synsets[s];
            for &n in syn.hypernyms.iter().chain(&syn.hyponyms) {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back((n, d + 1));
                }
            }
        }
        found
    }

    /// Ancestors with their minimal number of hypernym hops (the synset
    /// itself at 0).
    pub fn ancestors(&self, synset: usize) -> HashMap<usize, usize> {
        let mut out = HashMap::from([(synset, 0)]);
        let mut queue = VecDeque::from([synset]);
        while let Some(s) = queue.pop_front() {
            let d = out[&s];
            for &h in &self.synsets[s].hypernyms {
                if !out.contains_key(&h) {
                    out.insert(h, d + 1);
                    queue.push_back(h);
                }
            }
        }
        out
    }

    /// The synset pair with the shortest undirected hypernym-graph path.
    /// Ties go to the smallest sum of sense numbers, then the smaller pair
    /// of synset offsets, which keeps the choice symmetric.
    pub fn closest_pair(&self, a: &[usize], b: &[usize]) -> Option<(usize, usize, usize)> {
        let mut best: Option<((usize, usize, (u64, u64)), (usize, usize))> = None;
        for (i, &sa) in a.iter().enumerate() {
            let limit = best.as_ref().map_or(usize::MAX, |(k, _)| k.0);
            let dist = self.distances(sa, b, limit);
            for (j, &sb) in b.iter().enumerate() {
                if let Some(&d) = dist.get(&sb) {
                    let (oa, ob) = (self.offset_key(sa), self.offset_key(sb));
                    let k = (d, i + j, (oa.min(ob), oa.max(ob)));
                    if best.as_ref().map_or(true, |(bk, _)| k < *bk) {
                        best = Some((k, (sa, sb)));
                    }
                }
            }
        }
        best.map(|(k, (sa, sb))| (sa, sb, k.0))
    }

    fn offset_key(&self, s: usize) -> u64 {
        (self.synsets[s].pos as u64) << 40 | self.synsets[s].offset
    }

    /// Relation of `substitute` to `target`: `direct-hypernym` means the
    /// substitute is a hypernym of the target.
    pub fn classify(&self, target: &str, substitute: &str, pos: Pos) -> RelationLabel {
        let (t, s) = (key(target), key(substitute));
        if t == s {
            return RelationLabel::Target;
        }
        let (ts, ss) = (self.synsets_of(&t, pos), self.synsets_of(&s, pos));
        if ss.is_empty() && s.contains('_') {
            return RelationLabel::Multiword;
        }
        if ts.is_empty() || ss.is_empty() {
            return RelationLabel::UnknownWord;
        }
        let Some((a, b, _)) = self.closest_pair(ts, ss) else {
            return RelationLabel::NoPath;
        };
        self.label_pair(a, b)
    }

    fn label_pair(&self, a: usize, b: usize) -> RelationLabel {
        if a == b {
            return RelationLabel::Synonym;
        }
        let (ha, hb) = (self.hypernyms(a), self.hypernyms(b));
        if ha.contains(&b) {
            return RelationLabel::DirectHypernym;
        }
        if hb.contains(&a) {
            return RelationLabel::DirectHyponym;
        }
        if ha.iter().any(|h| hb.contains(h)) {
            return RelationLabel::CoHyponym;
        }
        let (anc_a, anc_b) = (self.ancestors(a), self.ancestors(b));
        if anc_a.contains_key(&b) {
            return RelationLabel::TransitiveHypernym;
        }
        if anc_b.contains_key(&a) {
            return RelationLabel::TransitiveHyponym;
        }
        let mut common = anc_a
            .iter()
            .filter_map(|(s, da)| anc_b.get(s).map(|db| (*da).max(*db)))
            .peekable();
        if common.peek().is_none() {
            return RelationLabel::NoPath;
        }
        if common.any(|m| m <= 3) {
            RelationLabel::CoHyponym3
        } else {
            RelationLabel::UnknownRelation
        }
    }
}

/// Label counts per part of speech for one source of substitutes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationProfile {
    pub source: String,
    pub counts: BTreeMap<Pos, BTreeMap<RelationLabel, usize>>,
}

impl RelationProfile {
    pub fn add(&mut self, pos: Pos, label: RelationLabel) {
        *self.counts.entry(pos).or_default().entry(label).or_insert(0) += 1;
    }

    /// Label shares per part of speech; each row sums to 1.
    pub fn proportions(&self) -> BTreeMap<Pos, BTreeMap<RelationLabel, f64>> {
        self.counts
            .iter()
            .map(|(pos, labels)| {
                let total: usize = labels.values().sum();
                let row = labels
                    .iter()
                    .map(|(l, c)| (*l, *c as f64 / total as f64))
                    .collect();
                (*pos, row)
            })
            .collect()
    }

    /// One row per (source, pos) with a column per label.
    pub fn to_tsv(profiles: &[RelationProfile]) -> String {
        let mut out = String::from("source\tpos\ttotal");
        for l in RelationLabel::ALL {
            let _ = write!(out, "\t{l}");
        }
        out.push('\n');
        for p in profiles {
            let props = p.proportions();
            for (pos, labels) in &p.counts {
                let total: usize = labels.values().sum();
                let _ = write!(out, "{}\t{pos}\t{total}", p.source);
                for l in RelationLabel::ALL {
                    let v = props[pos].get(&l).copied().unwrap_or(0.0);
                    let _ = write!(out, "\t{v:.4}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Profiles the gold substitutes, each distinct substitute of an example
/// counted once.
pub fn profile_gold(graph: &WordnetGraph, manifest: &DatasetManifest) -> RelationProfile {
    let mut p = RelationProfile {
        source: "gold".into(),
        ..RelationProfile::default()
    };
    for ex in &manifest.examples {
        for sub in ex.gold.keys() {
            p.add(ex.pos, graph.classify(&ex.target_lemma, sub, ex.pos));
        }
    }
    p
}

/// Profiles model predictions: the first `k` substitutes per example.
/// `predictions` maps example id to its post-processed ranking.
pub fn profile_predictions<S: AsRef<str>>(
    graph: &WordnetGraph,
    manifest: &DatasetManifest,
    source: &str,
    predictions: &HashMap<String, Vec<S>>,
    k: usize,
) -> Result<RelationProfile> {
    let mut p = RelationProfile {
        source: source.into(),
        ..RelationProfile::default()
    };
    for ex in &manifest.examples {
        let subs = predictions
            .get(&ex.id)
            .ok_or_else(|| Error::Lookup(format!("predictions for example {}", ex.id)))?;
        for sub in subs.iter().take(k) {
            p.add(ex.pos, graph.classify(&ex.target_lemma, sub.as_ref(), ex.pos));
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use RelationLabel::*;

    fn toy() -> WordnetGraph {
        let n = Pos::Noun;
        WordnetGraph::from_synsets(&[
            ("entity", n, &["entity"], &[]),
            ("animal", n, &["animal"], &["entity"]),
            ("carnivore", n, &["carnivore"], &["animal"]),
            ("canine", n, &["canine"], &["carnivore"]),
            ("feline", n, &["feline"], &["carnivore"]),
            ("dog", n, &["dog", "domestic dog"], &["canine"]),
            ("wolf", n, &["wolf"], &["canine"]),
            ("cat", n, &["cat"], &["feline"]),
            ("puppy", n, &["puppy"], &["dog"]),
            ("artifact", n, &["artifact"], &["entity"]),
            ("a1", n, &["a1"], &["artifact"]),
            ("a2", n, &["a2"], &["a1"]),
            ("a3", n, &["a3"], &["a2"]),
            ("island", n, &["island"], &[]),
        ])
        .unwrap()
    }

    #[test]
    fn toy_labels() {
        let g = toy();
        let n = Pos::Noun;
        assert_eq!(g.classify("dog", "dog", n), Target);
        assert_eq!(g.classify("dog", "domestic dog", n), Synonym);
        assert_eq!(g.classify("dog", "canine", n), DirectHypernym);
        assert_eq!(g.classify("canine", "dog", n), DirectHyponym);
        assert_eq!(g.classify("dog", "wolf", n), CoHyponym);
        assert_eq!(g.classify("puppy", "carnivore", n), TransitiveHypernym);
        assert_eq!(g.classify("animal", "puppy", n), TransitiveHyponym);
        assert_eq!(g.classify("dog", "cat", n), CoHyponym3);
        assert_eq!(g.classify("puppy", "a3", n), UnknownRelation);
        assert_eq!(g.classify("dog", "island", n), NoPath);
        assert_eq!(g.classify("dog", "zzqv", n), UnknownWord);
        assert_eq!(g.classify("dog", "hot dog stand", n), Multiword);
        assert_eq!(g.classify("dog", "dog", Pos::Verb), Target);
        assert_eq!(g.classify("dog", "wolf", Pos::Verb), UnknownWord);
    }

    #[test]
    fn inverse_labels_on_toy() {
        let g = toy();
        let words = ["dog", "cat", "wolf", "canine", "puppy", "animal", "a3", "island", "entity"];
        for a in words {
            for b in words {
                let ab = g.classify(a, b, Pos::Noun);
                assert_eq!(g.classify(b, a, Pos::Noun), ab.inverse(), "{a} {b}");
            }
        }
    }

    #[test]
    fn proportions_sum_to_one() {
        let mut p = RelationProfile::default();
        for l in [Target, Target, Synonym, NoPath] {
            p.add(Pos::Noun, l);
        }
        p.add(Pos::Verb, Target);
        let props = p.proportions();
        assert_eq!(props[&Pos::Verb][&Target], 1.0);
        let s: f64 = props[&Pos::Noun].values().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let tsv = RelationProfile::to_tsv(&[p]);
        assert_eq!(tsv.lines().count(), 3);
    }

    #[test]
    fn label_names_round_trip() {
        for l in RelationLabel::ALL {
            assert_eq!(l.name().parse::<RelationLabel>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{}\"", l.name()));
        }
    }
}
