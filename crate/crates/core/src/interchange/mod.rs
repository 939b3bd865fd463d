//! Shared data types and the file formats that connect the toolkit to
//! external distribution and embedding producers.

mod binary;
mod distribution;
mod embeddings;
mod prior;
mod ranked;
mod vocab;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use binary::{
    read_distributions, write_distributions, write_distributions_to, DistributionIndex, DistributionReader,
    DISTRIBUTIONS_MAGIC,
};
pub use distribution::{log_sum_exp, SubstituteDistribution};
pub use embeddings::{dot, norm, EmbeddingTable, EMBEDDINGS_MAGIC};
pub use prior::{WordPrior, DEFAULT_PRIOR_FLOOR};
pub use ranked::{rank_order, RankedSubstitutes, ScoredWord, TopKRecord};
pub use vocab::Vocabulary;

use crate::error::{Error, Result};

/// Reads one JSON value per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| Error::parse(format!("{}:{}", path.display(), n + 1), e.to_string()))?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// True when the file starts with the LSD1 magic; top-k JSONL files do not.
pub fn is_distribution_file(path: impl AsRef<Path>) -> Result<bool> {
    use std::io::Read;
    let path = path.as_ref();
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    Ok(f.read_exact(&mut magic).is_ok() && &magic == DISTRIBUTIONS_MAGIC)
}
