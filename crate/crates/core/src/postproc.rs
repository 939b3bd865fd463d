//! Substitute lemmatization and target exclusion.
//!
//! The lemmatizer follows WordNet's morphy: exception lists first, then the
//! word itself if it is a dictionary lemma, then suffix detachment rules
//! whose output must be a dictionary lemma.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::datasets::Pos;
use crate::error::{Error, Result};
use crate::interchange::RankedSubstitutes;
use crate::wnfiles;

const NOUN_RULES: &[(&str, &str)] = &[
    ("s", ""),
    ("ses", "s"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ies", "y"),
];
const VERB_RULES: &[(&str, &str)] = &[
    ("s", ""),
    ("ies", "y"),
    ("es", "e"),
    ("es", ""),
    ("ed", "e"),
    ("ed", ""),
    ("ing", "e"),
    ("ing", ""),
];
const ADJ_RULES: &[(&str, &str)] = &[("er", ""), ("est", ""), ("er", "e"), ("est", "e")];

fn rules(pos: Pos) -> &'static [(&'static str, &'static str)] {
    match pos {
        Pos::Noun => NOUN_RULES,
        Pos::Verb => VERB_RULES,
        Pos::Adjective => ADJ_RULES,
        Pos::Adverb => &[],
    }
}

fn slot(pos: Pos) -> usize {
    pos as usize
}

#[derive(Debug, Clone, Default)]
struct PosTables {
    lemmas: HashSet<String>,
    exceptions: HashMap<String, Vec<String>>,
}

/// Dictionary lemmatizer over WordNet morphology data. An empty lemmatizer
/// ([`Lemmatizer::identity`]) only lowercases.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    tables: [PosTables; 4],
}

impl Lemmatizer {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Reads `index.*` and `*.exc` from a WordNet database directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut lem = Self::default();
        for pos in Pos::ALL {
            let t = &mut lem.tables[slot(pos)];
            t.lemmas = wnfiles::read_index(dir, pos)?.into_iter().map(|(l, _)| l).collect();
            let name = format!("{}.exc", wnfiles::suffix(pos));
            let text = wnfiles::read(dir, &name)?;
            for (n, line) in wnfiles::content_lines(&text) {
                let mut f = line.split_whitespace();
                let (Some(word), Some(first)) = (f.next(), f.next()) else {
                    return Err(Error::parse(format!("{name}:{}", n + 1), "exception without a lemma"));
                };
                let mut lemmas = vec![first.to_string()];
                lemmas.extend(f.map(str::to_string));
                t.exceptions.entry(word.to_string()).or_insert(lemmas);
            }
        }
        Ok(lem)
    }

    /// Builds a lemmatizer from explicit tables; words use `_` for spaces.
    pub fn from_tables<'a>(
        lemmas: impl IntoIterator<Item = (Pos, &'a str)>,
        exceptions: impl IntoIterator<Item = (Pos, &'a str, &'a str)>,
    ) -> Self {
        let mut lem = Self::default();
        for (pos, l) in lemmas {
            lem.tables[slot(pos)].lemmas.insert(l.to_string());
        }
        for (pos, word, lemma) in exceptions {
            lem.tables[slot(pos)]
                .exceptions
                .entry(word.to_string())
                .or_default()
                .push(lemma.to_string());
        }
        lem
    }

    pub fn is_lemma(&self, word: &str, pos: Pos) -> bool {
        self.tables[slot(pos)].lemmas.contains(&key(word))
    }

    pub fn lemmatize(&self, word: &str, pos: Pos) -> String {
        let k = key(word);
        let t = &self.tables[slot(pos)];
        if let Some(l) = t.exceptions.get(&k).and_then(|ls| ls.first()) {
            return unkey(l);
        }
        if t.lemmas.contains(&k) {
            return unkey(&k);
        }
        for (suffix, replacement) in rules(pos) {
            if let Some(stem) = k.strip_suffix(suffix) {
                let candidate = format!("{stem}{replacement}");
                if !stem.is_empty() && t.lemmas.contains(&candidate) {
                    return unkey(&candidate);
                }
            }
        }
        unkey(&k)
    }
}

fn key(word: &str) -> String {
    word.trim().to_lowercase().replace(' ', "_")
}

fn unkey(word: &str) -> String {
    word.replace('_', " ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostprocessOptions {
    pub lemmatize: bool,
    pub exclude_target: bool,
}

impl Default for PostprocessOptions {
    fn default() -> Self {
        Self {
            lemmatize: true,
            exclude_target: true,
        }
    }
}

/// Maps substitutes to lemmas, keeps the best score per lemma and drops
/// the target lemma. Target matching always uses the lemmatized form, even
/// when the output keeps surface forms.
pub fn postprocess(
    ranked: &RankedSubstitutes,
    target_lemma: &str,
    pos: Pos,
    lemmatizer: &Lemmatizer,
    opts: PostprocessOptions,
) -> RankedSubstitutes {
    let target = key(target_lemma);
    let target = unkey(&target);
    let mut best: HashMap<String, f64> = HashMap::with_capacity(ranked.len());
    for (word, score) in ranked.items() {
        let lemma = lemmatizer.lemmatize(word, pos);
        if opts.exclude_target && (lemma == target || word.to_lowercase() == target) {
            continue;
        }
        let out = if opts.lemmatize { lemma } else { word.to_lowercase() };
        best.entry(out)
            .and_modify(|s| *s = s.max(*score))
            .or_insert(*score);
    }
    RankedSubstitutes::from_unsorted(best.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Lemmatizer {
        Lemmatizer::from_tables(
            [
                (Pos::Noun, "car"),
                (Pos::Noun, "telephone"),
                (Pos::Noun, "box"),
                (Pos::Noun, "fly"),
                (Pos::Verb, "fly"),
                (Pos::Verb, "soar"),
                (Pos::Verb, "run"),
                (Pos::Verb, "hop"),
                (Pos::Verb, "hope"),
                (Pos::Noun, "motor_vehicle"),
            ],
            [(Pos::Verb, "ran", "run"), (Pos::Noun, "mice", "mouse")],
        )
    }

    fn ranked(items: &[(&str, f64)]) -> RankedSubstitutes {
        RankedSubstitutes::from_unsorted(items.iter().map(|(w, s)| (w.to_string(), *s)).collect())
    }

    #[test]
    fn morphy_order() {
        let l = toy();
        assert_eq!(l.lemmatize("cars", Pos::Noun), "car");
        assert_eq!(l.lemmatize("Cars", Pos::Noun), "car");
        assert_eq!(l.lemmatize("boxes", Pos::Noun), "box");
        assert_eq!(l.lemmatize("flies", Pos::Verb), "fly");
        assert_eq!(l.lemmatize("ran", Pos::Verb), "run");
        assert_eq!(l.lemmatize("mice", Pos::Noun), "mouse");
        assert_eq!(l.lemmatize("telephone", Pos::Noun), "telephone");
        assert_eq!(l.lemmatize("hoped", Pos::Verb), "hope");
        assert_eq!(l.lemmatize("motor vehicles", Pos::Noun), "motor vehicle");
        assert_eq!(l.lemmatize("zzqv", Pos::Noun), "zzqv");
        assert_eq!(Lemmatizer::identity().lemmatize("Cars", Pos::Noun), "cars");
    }

    #[test]
    fn excludes_target_forms() {
        let out = postprocess(
            &ranked(&[("flies", 0.9), ("soar", 0.5), ("fly", 0.7)]),
            "fly",
            Pos::Verb,
            &toy(),
            PostprocessOptions::default(),
        );
        assert_eq!(out.items(), &[("soar".to_string(), 0.5)]);
    }

    #[test]
    fn collapses_to_max() {
        let out = postprocess(
            &ranked(&[("car", 0.4), ("cars", 0.6)]),
            "automobile",
            Pos::Noun,
            &toy(),
            PostprocessOptions::default(),
        );
        assert_eq!(out.items(), &[("car".to_string(), 0.6)]);
    }

    #[test]
    fn exclusion_can_be_disabled() {
        let r = ranked(&[("flies", 0.9), ("soar", 0.5)]);
        let keep = PostprocessOptions {
            exclude_target: false,
            ..PostprocessOptions::default()
        };
        let out = postprocess(&r, "fly", Pos::Verb, &toy(), keep);
        assert_eq!(out.words().next(), Some("fly"));
        let surface = PostprocessOptions {
            lemmatize: false,
            exclude_target: true,
        };
        let out = postprocess(&r, "fly", Pos::Verb, &toy(), surface);
        assert_eq!(out.words().collect::<Vec<_>>(), ["soar"]);
    }

    proptest! {
        #[test]
        fn output_unique_without_target_and_idempotent(
            words in prop::collection::vec(
                prop::sample::select(vec!["car", "cars", "fly", "flies", "flying", "ran", "run", "hoped", "box", "boxes", "soar"]),
                0..12),
            scores in prop::collection::vec(-10.0f64..0.0, 12),
            target in prop::sample::select(vec!["fly", "car", "run"]),
        ) {
            let l = toy();
            let r = RankedSubstitutes::from_unsorted(
                words.iter().zip(&scores).map(|(w, s)| (w.to_string(), *s)).collect());
            let once = postprocess(&r, target, Pos::Verb, &l, PostprocessOptions::default());
            let lemmas: Vec<String> = once.words().map(|w| l.lemmatize(w, Pos::Verb)).collect();
            let distinct: HashSet<&String> = lemmas.iter().collect();
            prop_assert_eq!(distinct.len(), lemmas.len());
            prop_assert!(!lemmas.iter().any(|w| w == target));
            let twice = postprocess(&once, target, Pos::Verb, &l, PostprocessOptions::default());
            prop_assert_eq!(once, twice);
        }
    }
}
