//! SemEval-2007 Task 10 lexical sample files.
//!
//! The official XML is not always well-formed (bare `&`, stray markup in
//! contexts), so the scanner below is deliberately lenient: it looks only
//! for `lexelt`, `instance`, `context` and `head` elements.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use super::tokenize::tokenize;
use super::{DatasetManifest, Pos, TargetedExample};
use crate::error::{Error, Result};

pub(crate) struct SampleInstance {
    pub item: String,
    pub id: String,
    pub left: String,
    pub head: String,
    pub right: String,
}

fn regexes() -> &'static (Regex, Regex, Regex, Regex) {
    static RE: OnceLock<(Regex, Regex, Regex, Regex)> = OnceLock::new();
    RE.get_or_init(|| {
        (
            Regex::new(r#"(?s)<lexelt\s+item="([^"]+)"[^>]*>(.*?)</lexelt>"#).unwrap(),
            Regex::new(r#"(?s)<instance\s+id="([^"]+)"[^>]*>(.*?)</instance>"#).unwrap(),
            Regex::new(r"(?s)<context>(.*?)</context>").unwrap(),
            Regex::new(r"(?s)^(.*?)<head>(.*?)</head>(.*)$").unwrap(),
        )
    })
}

pub(crate) fn decode_entities(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

fn strip_tags(s: &str) -> String {
    static TAG: OnceLock<Regex> = OnceLock::new();
    TAG.get_or_init(|| Regex::new(r"<[^>]*>").unwrap())
        .replace_all(s, " ")
        .into_owned()
}

pub(crate) fn scan_lexical_sample(text: &str, source: &str) -> Result<Vec<SampleInstance>> {
    let (lexelt_re, instance_re, context_re, head_re) = regexes();
    let opened = text.matches("<lexelt").count();
    let mut out = Vec::new();
    let mut closed = 0;
    for lex in lexelt_re.captures_iter(text) {
        closed += 1;
        let item = lex[1].trim().to_string();
        let body = &lex[2];
        let instance_opened = body.matches("<instance").count();
        let mut seen = 0;
        for inst in instance_re.captures_iter(body) {
            seen += 1;
            let id = inst[1].trim().to_string();
            let loc = || format!("{source}: instance {id}");
            let context = context_re
                .captures(&inst[2])
                .ok_or_else(|| Error::parse(loc(), "malformed markup: missing <context>"))?;
            let parts = head_re
                .captures(&context[1])
                .ok_or_else(|| Error::parse(loc(), "malformed markup: missing <head>"))?;
            out.push(SampleInstance {
                item: item.clone(),
                id,
                left: decode_entities(&strip_tags(&parts[1])),
                head: decode_entities(parts[2].trim()),
                right: decode_entities(&strip_tags(&parts[3])),
            });
        }
        if seen != instance_opened {
            return Err(Error::parse(
                format!("{source}: lexelt {item}"),
                "malformed markup: unterminated <instance>",
            ));
        }
    }
    if closed != opened {
        return Err(Error::parse(source, "malformed markup: unterminated <lexelt>"));
    }
    Ok(out)
}

/// Splits `bright.a` into `("bright", Adjective)`.
pub(crate) fn split_item(item: &str, source: &str) -> Result<(String, Pos)> {
    let (lemma, pos) = item
        .rsplit_once('.')
        .ok_or_else(|| Error::parse(source, format!("item `{item}` lacks a .pos suffix")))?;
    Ok((lemma.to_lowercase(), pos.parse()?))
}

pub(crate) fn sample_to_example(s: &SampleInstance, source: &str) -> Result<TargetedExample> {
    let (lemma, pos) = split_item(&s.item, source)?;
    let mut tokens = tokenize(&s.left);
    let target_index = tokens.len();
    let surface = if s.head.is_empty() {
        return Err(Error::parse(format!("{source}: instance {}", s.id), "empty <head>"));
    } else {
        s.head.split_whitespace().collect::<Vec<_>>().join(" ")
    };
    tokens.push(surface.clone());
    tokens.extend(tokenize(&s.right));
    Ok(TargetedExample {
        id: s.id.clone(),
        tokens,
        target_index,
        target_surface: surface,
        target_lemma: lemma,
        pos,
        gold: BTreeMap::new(),
        candidates: None,
        dep_neighbors: None,
    })
}

/// Parses one gold line: `bright.a 1 :: intelligent 3;clever 3;`.
/// Returns `(item, instance id, substitutes)`; substitute strings are
/// lowercased and repeated entries are summed.
pub fn parse_gold_line(line: &str) -> Result<(String, String, BTreeMap<String, u32>)> {
    let (head, subs) = line
        .split_once("::")
        .ok_or_else(|| Error::parse(line, "expected `item id :: substitutes`"))?;
    let mut head = head.split_whitespace();
    let (Some(item), Some(id), None) = (head.next(), head.next(), head.next()) else {
        return Err(Error::parse(line, "expected `item id` before `::`"));
    };
    let mut gold = BTreeMap::new();
    for entry in subs.split(';') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (word, count) = entry
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(line, format!("substitute `{entry}` has no count")))?;
        let count: u32 = count
            .parse()
            .map_err(|_| Error::parse(line, format!("bad count in `{entry}`")))?;
        if count == 0 {
            continue;
        }
        *gold.entry(word.trim().to_lowercase()).or_insert(0) += count;
    }
    Ok((item.to_string(), id.to_string(), gold))
}

pub fn parse_semeval2007_str(xml: &str, gold: &str, name: &str) -> Result<DatasetManifest> {
    let samples = scan_lexical_sample(xml, name)?;
    let mut examples = Vec::with_capacity(samples.len());
    let mut by_id = HashMap::new();
    for s in &samples {
        let ex = sample_to_example(s, name)?;
        if by_id.insert(ex.id.clone(), (examples.len(), s.item.clone())).is_some() {
            return Err(Error::Consistency(format!("duplicate instance id `{}`", ex.id)));
        }
        examples.push(ex);
    }
    for (n, line) in gold.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (item, id, subs) =
            parse_gold_line(line).map_err(|e| Error::parse(format!("{name} gold:{}", n + 1), e.to_string()))?;
        let (pos, expected_item) = by_id
            .get(&id)
            .ok_or_else(|| Error::Consistency(format!("gold entry for instance {id} has no sentence")))?;
        if *expected_item != item {
            return Err(Error::Consistency(format!(
                "gold entry for instance {id} names `{item}`, the sentence belongs to `{expected_item}`"
            )));
        }
        let ex = &mut examples[*pos];
        for (w, c) in subs {
            *ex.gold.entry(w).or_insert(0) += c;
        }
    }
    Ok(DatasetManifest::new(name, examples))
}

/// Parses the task XML and its gold file. Gold is not filtered; call
/// [`DatasetManifest::filter_gold`] to drop multi-word substitutes.
pub fn parse_semeval2007(xml_path: impl AsRef<Path>, gold_path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let xml_path = xml_path.as_ref();
    let gold_path = gold_path.as_ref();
    let xml = fs::read(xml_path).map_err(|e| Error::io(xml_path, e))?;
    let gold = fs::read(gold_path).map_err(|e| Error::io(gold_path, e))?;
    let name = xml_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    // The official files are Latin-1 in places.
    parse_semeval2007_str(&String::from_utf8_lossy(&xml), &String::from_utf8_lossy(&gold), &name)
}
