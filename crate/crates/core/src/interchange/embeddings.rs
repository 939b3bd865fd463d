use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::vocab::Vocabulary;
use crate::error::{Error, Result};

pub const EMBEDDINGS_MAGIC: &[u8; 4] = b"LSE1";

/// Dense row-major embedding matrix aligned with a vocabulary.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    vocab: Arc<Vocabulary>,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(vocab: Arc<Vocabulary>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("embedding dimension must be positive".into()));
        }
        if data.len() != vocab.len() * dim {
            return Err(Error::Alignment(format!(
                "{} values cannot form {} rows of dimension {dim}",
                data.len(),
                vocab.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Corrupt("non-finite embedding value".into()));
        }
        Ok(Self { vocab, dim, data })
    }

    pub fn from_rows(vocab: Arc<Vocabulary>, rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Format("embedding rows differ in length".into()));
        }
        Self::new(vocab, dim, rows.concat())
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, position: usize) -> &[f32] {
        &self.data[position * self.dim..(position + 1) * self.dim]
    }

    pub fn row_of(&self, word: &str) -> Option<&[f32]> {
        self.vocab.get(word).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    /// Row of the first of `candidates` present in the vocabulary.
    pub fn lookup_any<'a>(&self, candidates: impl IntoIterator<Item = &'a str>) -> Option<&[f32]> {
        candidates.into_iter().find_map(|w| self.row_of(w))
    }

    /// Inner product of every row with `query`.
    pub fn dots(&self, query: &[f32]) -> Vec<f64> {
        self.rows().map(|r| dot(r, query)).collect()
    }

    /// Cosine similarity of every row with `query`; zero vectors score 0.
    pub fn cosines(&self, query: &[f32]) -> Vec<f64> {
        let qn = norm(query);
        self.rows()
            .map(|r| {
                let denom = norm(r) * qn;
                if denom > 0.0 {
                    dot(r, query) / denom
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn read(path: impl AsRef<Path>, vocab: Arc<Vocabulary>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), vocab)
    }

    pub fn read_from<R: Read>(mut reader: R, vocab: Arc<Vocabulary>) -> Result<Self> {
        let mut header = [0u8; 12];
        reader
            .read_exact(&mut header[..4])
            .map_err(|_| Error::Format("missing LSE1 magic".into()))?;
        if &header[..4] != EMBEDDINGS_MAGIC {
            return Err(Error::Format(format!(
                "bad embeddings magic {:?}",
                String::from_utf8_lossy(&header[..4])
            )));
        }
        reader
            .read_exact(&mut header[4..])
            .map_err(|_| Error::Corrupt("truncated LSE1 header".into()))?;
        let vocab_size = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if vocab_size != vocab.len() {
            return Err(Error::Alignment(format!(
                "embeddings file has {vocab_size} rows, vocabulary has {}",
                vocab.len()
            )));
        }
        let mut bytes = Vec::new();
        reader
            .read_to_end(&mut bytes)
            .map_err(|e| Error::Corrupt(e.to_string()))?;
        if bytes.len() != vocab_size * dim * 4 {
            return Err(Error::Format(format!(
                "dimension mismatch: expected {} payload bytes for {vocab_size}x{dim}, found {}",
                vocab_size * dim * 4,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(vocab, dim, data)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(EMBEDDINGS_MAGIC)?;
        w.write_all(&(self.vocab.len() as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the whitespace-separated text format: one `word v1 .. vd` line
    /// per entry, optionally preceded by a `count dim` header. Repeated words
    /// keep their first row.
    pub fn read_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut words = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut data = Vec::new();
        let mut dim = 0usize;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let values: Vec<&str> = fields.collect();
            if n == 0 && values.len() == 1 && word.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
                continue;
            }
            let row = values
                .iter()
                .map(|v| v.parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(format!("{}:{}", path.display(), n + 1), e.to_string()))?;
            if dim == 0 {
                dim = row.len();
            } else if row.len() != dim {
                return Err(Error::parse(
                    format!("{}:{}", path.display(), n + 1),
                    format!("dimension mismatch: expected {dim}, found {}", row.len()),
                ));
            }
            if seen.insert(word.to_string()) {
                words.push(word.to_string());
                data.extend(row);
            }
        }
        Self::new(Arc::new(Vocabulary::new(words)?), dim, data)
    }

    /// Opens either format: LSE1 (requires `vocab`) or text.
    pub fn read_auto(path: impl AsRef<Path>, vocab: Option<Arc<Vocabulary>>) -> Result<Self> {
        let path = path.as_ref();
        let mut magic = [0u8; 4];
        let is_binary = File::open(path)
            .and_then(|mut f| f.read_exact(&mut magic))
            .is_ok()
            && &magic == EMBEDDINGS_MAGIC;
        if is_binary {
            let vocab = vocab.ok_or_else(|| {
                Error::InvalidArgument(format!("{} is an LSE1 file and needs a vocabulary file", path.display()))
            })?;
            Self::read(path, vocab)
        } else {
            let _ = fs::metadata(path).map_err(|e| Error::io(path, e))?;
            Self::read_text(path)
        }
    }
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

pub fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}
