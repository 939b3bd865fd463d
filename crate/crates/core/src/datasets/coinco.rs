//! CoInCo (Concepts in Context) XML.
//!
//! Each `<sent>` carries its tokens; content words have a numeric `id` and a
//! `<substitutions>` block, all other tokens have `id="XXX"`. Every content
//! word becomes one example sharing the sentence tokens.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{DatasetManifest, Pos, TargetedExample};
use crate::error::{Error, Result};

#[derive(Default)]
struct Token {
    id: String,
    wordform: String,
    lemma: String,
    pos_tag: String,
    problematic: bool,
    gold: BTreeMap<String, u32>,
    has_substitutions: bool,
}

fn attrs(e: &BytesStart<'_>, source: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for a in e.attributes() {
        let a = a.map_err(|err| Error::parse(source, format!("malformed attribute: {err}")))?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a
            .unescape_value()
            .map_err(|err| Error::parse(source, format!("malformed attribute value: {err}")))?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn flush_sentence(tokens: &mut Vec<Token>, out: &mut Vec<TargetedExample>) {
    let words: Vec<String> = tokens.iter().map(|t| t.wordform.clone()).collect();
    for (i, t) in tokens.iter().enumerate() {
        if t.id == "XXX" || t.id.is_empty() || !t.has_substitutions {
            continue;
        }
        if t.problematic {
            log::debug!("skipping problematic CoInCo token {}", t.id);
            continue;
        }
        let Some(pos) = Pos::from_penn(&t.pos_tag) else {
            log::debug!("skipping CoInCo token {} with tag {}", t.id, t.pos_tag);
            continue;
        };
        out.push(TargetedExample {
            id: t.id.clone(),
            tokens: words.clone(),
            target_index: i,
            target_surface: t.wordform.clone(),
            target_lemma: t.lemma.to_lowercase(),
            pos,
            gold: t.gold.clone(),
            candidates: None,
            dep_neighbors: None,
        });
    }
    tokens.clear();
}

pub fn parse_coinco_str(xml: &str, name: &str) -> Result<DatasetManifest> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);
    let mut examples = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut in_sent = false;
    let mut open_token = false;
    loop {
        let event = reader
            .read_event()
            .map_err(|e| Error::parse(format!("{name}@{}", reader.buffer_position()), e.to_string()))?;
        let loc = || format!("{name}@{}", reader.buffer_position());
        match event {
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"sent" => {
                if in_sent {
                    return Err(Error::parse(loc(), "nested <sent>"));
                }
                in_sent = true;
                tokens.clear();
            }
            Event::End(e) if e.name().as_ref() == b"sent" => {
                flush_sentence(&mut tokens, &mut examples);
                in_sent = false;
            }
            ref ev @ (Event::Start(ref e) | Event::Empty(ref e)) if e.name().as_ref() == b"token" => {
                if !in_sent {
                    return Err(Error::parse(loc(), "<token> outside <sent>"));
                }
                let a = attrs(e, &loc())?;
                let field = |k: &str| a.get(k).cloned().unwrap_or_default();
                tokens.push(Token {
                    id: field("id"),
                    wordform: field("wordform"),
                    lemma: field("lemma"),
                    pos_tag: a.get("posMASC").or_else(|| a.get("posTT")).cloned().unwrap_or_default(),
                    problematic: field("problematic") == "yes",
                    ..Token::default()
                });
                open_token = matches!(ev, Event::Start(_));
            }
            Event::End(e) if e.name().as_ref() == b"token" => open_token = false,
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"substitutions" => {
                if let Some(t) = tokens.last_mut().filter(|_| open_token) {
                    t.has_substitutions = true;
                }
            }
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"subst" => {
                let a = attrs(&e, &loc())?;
                let token = tokens
                    .last_mut()
                    .filter(|_| open_token)
                    .ok_or_else(|| Error::parse(loc(), "<subst> outside <token>"))?;
                let lemma = a
                    .get("lemma")
                    .ok_or_else(|| Error::parse(loc(), "<subst> without lemma"))?
                    .trim()
                    .to_lowercase();
                let freq: u32 = a
                    .get("freq")
                    .map(|f| f.trim().parse())
                    .transpose()
                    .map_err(|_| Error::parse(loc(), "non-numeric freq"))?
                    .unwrap_or(1);
                if freq > 0 && !lemma.is_empty() {
                    *token.gold.entry(lemma).or_insert(0) += freq;
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if in_sent {
        return Err(Error::parse(name, "malformed markup: unterminated <sent>"));
    }
    Ok(DatasetManifest::new(name, examples))
}

pub fn parse_coinco(xml_path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = xml_path.as_ref();
    let xml = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_coinco_str(&xml, &name)
}
