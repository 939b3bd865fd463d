//! Locating and reading the WordNet 3.0 database files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::datasets::Pos;
use crate::error::{Error, Result};

/// Environment variable that overrides [`default_wordnet_dir`].
pub const WORDNET_DIR_ENV: &str = "LEXSUB_WORDNET_DIR";

/// `$LEXSUB_WORDNET_DIR`, else the copy shipped in the repository.
pub fn default_wordnet_dir() -> PathBuf {
    std::env::var_os(WORDNET_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wordnet-3.0"))
}

pub(crate) fn suffix(pos: Pos) -> &'static str {
    match pos {
        Pos::Noun => "noun",
        Pos::Verb => "verb",
        Pos::Adjective => "adj",
        Pos::Adverb => "adv",
    }
}

pub(crate) fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Non-license lines (the license header lines start with two spaces).
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with("  ") && !l.trim().is_empty())
}

/// Index entries: lemma and its synset offsets in sense order.
pub(crate) fn read_index(dir: &Path, pos: Pos) -> Result<Vec<(String, Vec<u64>)>> {
    let name = format!("index.{}", suffix(pos));
    let text = read(dir, &name)?;
    let mut out = Vec::new();
    for (n, line) in content_lines(&text) {
        let loc = || format!("{name}:{}", n + 1);
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 6 {
            return Err(Error::parse(loc(), "short index line"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(loc(), format!("bad number `{s}`")));
        let synset_cnt = num(f[2])?;
        let p_cnt = num(f[3])?;
        // lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt offsets...
        let start = 4 + p_cnt + 2;
        if f.len() < start + synset_cnt {
            return Err(Error::parse(loc(), "index line has fewer offsets than declared"));
        }
        let offsets = f[start..start + synset_cnt]
            .iter()
            .map(|o| o.parse::<u64>().map_err(|_| Error::parse(loc(), format!("bad offset `{o}`"))))
            .collect::<Result<Vec<_>>>()?;
        out.push((f[0].to_string(), offsets));
    }
    Ok(out)
}
