//! Word sense induction corpora in the Senseval lexical-sample layout plus a
//! key file.
//!
//! Key lines are `lemma.pos instance_id sense[/weight] [sense[/weight] ...]`.
//! SemEval-2010 keys carry a single sense; SemEval-2013 keys are graded.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::semeval2007::{sample_to_example, scan_lexical_sample};
use crate::error::{Error, Result};
use crate::wsi::WsiInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum WsiFlavor {
    #[serde(rename = "semeval2010")]
    SemEval2010,
    #[serde(rename = "semeval2013")]
    SemEval2013,
}

impl FromStr for WsiFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semeval2010" | "2010" => Ok(WsiFlavor::SemEval2010),
            "semeval2013" | "2013" => Ok(WsiFlavor::SemEval2013),
            other => Err(Error::InvalidArgument(format!("unknown WSI dataset flavor `{other}`"))),
        }
    }
}

fn parse_key(text: &str, source: &str) -> Result<HashMap<String, (String, BTreeMap<String, f64>)>> {
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(item) = fields.next() else { continue };
        let loc = || format!("{source}:{}", n + 1);
        let id = fields.next().ok_or_else(|| Error::parse(loc(), "missing instance id"))?;
        let mut senses = BTreeMap::new();
        for f in fields {
            let (sense, weight) = match f.rsplit_once('/') {
                Some((s, w)) => (
                    s,
                    w.parse::<f64>()
                        .map_err(|_| Error::parse(loc(), format!("bad sense weight in `{f}`")))?,
                ),
                None => (f, 1.0),
            };
            *senses.entry(sense.to_string()).or_insert(0.0) += weight;
        }
        if senses.is_empty() {
            return Err(Error::parse(loc(), "instance has no sense label"));
        }
        if out.insert(id.to_string(), (item.to_string(), senses)).is_some() {
            return Err(Error::parse(loc(), format!("duplicate key for `{id}`")));
        }
    }
    Ok(out)
}

/// The highest-weight sense; ties go to the lexicographically smallest label.
pub(crate) fn project_hard(graded: &BTreeMap<String, f64>) -> String {
    let mut best: Option<(&String, f64)> = None;
    for (sense, w) in graded {
        if best.map_or(true, |(_, bw)| *w > bw) {
            best = Some((sense, *w));
        }
    }
    best.map(|(s, _)| s.clone()).unwrap_or_default()
}

pub fn parse_wsi_str(xml: &str, key: &str, flavor: WsiFlavor, name: &str) -> Result<Vec<WsiInstance>> {
    let samples = scan_lexical_sample(xml, name)?;
    let keys = parse_key(key, name)?;
    let mut out = Vec::with_capacity(samples.len());
    let mut used = 0;
    for s in &samples {
        let example = sample_to_example(s, name)?;
        let (item, graded) = keys
            .get(&example.id)
            .ok_or_else(|| Error::Consistency(format!("instance {} has no gold sense", example.id)))?;
        used += 1;
        if *item != s.item {
            return Err(Error::Consistency(format!(
                "key for {} names `{item}`, the instance belongs to `{}`",
                example.id, s.item
            )));
        }
        let graded_gold = match flavor {
            WsiFlavor::SemEval2013 => Some(graded.clone()),
            WsiFlavor::SemEval2010 if graded.len() > 1 => Some(graded.clone()),
            WsiFlavor::SemEval2010 => None,
        };
        out.push(WsiInstance {
            id: example.id.clone(),
            lemma: example.target_lemma.clone(),
            pos: example.pos,
            gold_sense: project_hard(graded),
            gold_graded: graded_gold,
            example,
        });
    }
    if used != keys.len() {
        let known: std::collections::HashSet<&str> = samples.iter().map(|s| s.id.as_str()).collect();
        let orphan = keys.keys().find(|k| !known.contains(k.as_str())).cloned().unwrap_or_default();
        return Err(Error::Consistency(format!("key entry `{orphan}` has no instance")));
    }
    Ok(out)
}

pub fn parse_wsi_dataset(
    xml_path: impl AsRef<Path>,
    key_path: impl AsRef<Path>,
    flavor: WsiFlavor,
) -> Result<Vec<WsiInstance>> {
    let xml_path = xml_path.as_ref();
    let key_path = key_path.as_ref();
    let xml = fs::read(xml_path).map_err(|e| Error::io(xml_path, e))?;
    let key = fs::read_to_string(key_path).map_err(|e| Error::io(key_path, e))?;
    let name = xml_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_wsi_str(&String::from_utf8_lossy(&xml), &key, flavor, &name)
}
