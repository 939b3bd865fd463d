//! The LSD1 distribution container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "LSD1" | u32 vocab_size | u64 count | count x ( u16 id_len | id bytes | vocab_size x f32 )
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::distribution::SubstituteDistribution;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

pub const DISTRIBUTIONS_MAGIC: &[u8; 4] = b"LSD1";
const HEADER_LEN: u64 = 16;

fn eof_as_corrupt(what: &str) -> impl Fn(io::Error) -> Error + '_ {
    move |e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Corrupt(format!("truncated payload while reading {what}"))
        } else {
            Error::Corrupt(e.to_string())
        }
    }
}

fn read_header<R: Read>(reader: &mut R, vocab: &Vocabulary) -> Result<u64> {
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("missing LSD1 magic".into()))?;
    if &magic != DISTRIBUTIONS_MAGIC {
        return Err(Error::Format(format!(
            "bad distributions magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut rest = [0u8; 12];
    reader.read_exact(&mut rest).map_err(eof_as_corrupt("header"))?;
    let vocab_size = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
    if vocab_size != vocab.len() {
        return Err(Error::Alignment(format!(
            "distributions file is over {vocab_size} entries, vocabulary has {}",
            vocab.len()
        )));
    }
    Ok(u64::from_le_bytes(rest[4..].try_into().unwrap()))
}

fn read_id<R: Read>(reader: &mut R) -> Result<String> {
    let mut len = [0u8; 2];
    reader.read_exact(&mut len).map_err(eof_as_corrupt("example id length"))?;
    let mut id = vec![0u8; u16::from_le_bytes(len) as usize];
    reader.read_exact(&mut id).map_err(eof_as_corrupt("example id"))?;
    String::from_utf8(id).map_err(|_| Error::Corrupt("example id is not UTF-8".into()))
}

fn read_scores<R: Read>(reader: &mut R, n: usize, buf: &mut Vec<u8>) -> Result<Vec<f64>> {
    buf.resize(n * 4, 0);
    reader.read_exact(buf).map_err(eof_as_corrupt("scores"))?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect())
}

/// Streaming reader over an LSD1 payload; yields distributions in file order.
pub struct DistributionReader<R> {
    reader: R,
    vocab: Arc<Vocabulary>,
    remaining: u64,
    buf: Vec<u8>,
    failed: bool,
}

impl<R: Read> DistributionReader<R> {
    pub fn new(mut reader: R, vocab: Arc<Vocabulary>) -> Result<Self> {
        let remaining = read_header(&mut reader, &vocab)?;
        Ok(Self {
            reader,
            vocab,
            remaining,
            buf: Vec::new(),
            failed: false,
        })
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    fn read_one(&mut self) -> Result<SubstituteDistribution> {
        let id = read_id(&mut self.reader)?;
        let scores = read_scores(&mut self.reader, self.vocab.len(), &mut self.buf)?;
        SubstituteDistribution::new(Arc::clone(&self.vocab), scores, id)
    }
}

impl<R: Read> Iterator for DistributionReader<R> {
    type Item = Result<SubstituteDistribution>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if self.remaining == 0 {
            let mut probe = [0u8; 1];
            return match self.reader.read(&mut probe) {
                Ok(0) => None,
                Ok(_) => {
                    self.failed = true;
                    Some(Err(Error::Corrupt("trailing bytes after the last example".into())))
                }
                Err(e) => {
                    self.failed = true;
                    Some(Err(Error::Corrupt(e.to_string())))
                }
            };
        }
        self.remaining -= 1;
        let item = self.read_one();
        self.failed = item.is_err();
        Some(item)
    }
}

pub fn read_distributions(
    path: impl AsRef<Path>,
    vocab: Arc<Vocabulary>,
) -> Result<DistributionReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    DistributionReader::new(BufReader::new(file), vocab)
}

pub fn write_distributions_to<W: Write>(writer: &mut W, distributions: &[SubstituteDistribution]) -> Result<()> {
    let vocab_size = match distributions.first() {
        Some(d) => d.len(),
        None => 0,
    };
    let io_err = |e: io::Error| Error::Corrupt(e.to_string());
    writer.write_all(DISTRIBUTIONS_MAGIC).map_err(io_err)?;
    writer.write_all(&(vocab_size as u32).to_le_bytes()).map_err(io_err)?;
    writer
        .write_all(&(distributions.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    for d in distributions {
        if let Some(first) = distributions.first() {
            d.ensure_same_vocab(first)?;
        }
        let id = d.example_id().as_bytes();
        let len: u16 = id
            .len()
            .try_into()
            .map_err(|_| Error::InvalidArgument(format!("example id longer than 65535 bytes: {}", d.example_id())))?;
        writer.write_all(&len.to_le_bytes()).map_err(io_err)?;
        writer.write_all(id).map_err(io_err)?;
        for s in d.scores() {
            writer.write_all(&(*s as f32).to_le_bytes()).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Writes an LSD1 file. An empty slice produces a header with vocab size 0.
pub fn write_distributions(path: impl AsRef<Path>, distributions: &[SubstituteDistribution]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_distributions_to(&mut w, distributions)?;
    w.flush().map_err(|e| Error::io(path, e))
}

enum Storage {
    Memory(HashMap<String, SubstituteDistribution>),
    File {
        path: PathBuf,
        file: Mutex<File>,
        offsets: HashMap<String, u64>,
    },
}

/// Random access to distributions by example key (`id` or `id#variant`).
///
/// File-backed indexes keep only the byte offset of every payload and read
/// scores on demand, so large vocabularies do not need to fit in memory.
pub struct DistributionIndex {
    vocab: Arc<Vocabulary>,
    storage: Storage,
}

impl DistributionIndex {
    pub fn from_distributions(vocab: Arc<Vocabulary>, distributions: Vec<SubstituteDistribution>) -> Result<Self> {
        let mut map = HashMap::with_capacity(distributions.len());
        for d in distributions {
            if *d.vocab().as_ref() != *vocab {
                return Err(Error::Alignment(format!(
                    "distribution `{}` is over a different vocabulary",
                    d.example_id()
                )));
            }
            let key = d.example_id().to_string();
            if map.insert(key.clone(), d).is_some() {
                return Err(Error::Format(format!("duplicate distribution key `{key}`")));
            }
        }
        Ok(Self {
            vocab,
            storage: Storage::Memory(map),
        })
    }

    /// Scans an LSD1 file once, recording where every example starts.
    pub fn open(path: impl AsRef<Path>, vocab: Arc<Vocabulary>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut reader = BufReader::new(file.try_clone().map_err(|e| Error::io(path, e))?);
        let count = read_header(&mut reader, &vocab)?;
        let payload = vocab.len() as u64 * 4;
        let mut offsets = HashMap::with_capacity(count as usize);
        let mut pos = HEADER_LEN;
        for _ in 0..count {
            let id = read_id(&mut reader)?;
            pos += 2 + id.len() as u64;
            if pos + payload > file_len {
                return Err(Error::Corrupt(format!("truncated payload for example `{id}`")));
            }
            if offsets.insert(id.clone(), pos).is_some() {
                return Err(Error::Format(format!("duplicate distribution key `{id}`")));
            }
            reader
                .seek_relative(payload as i64)
                .map_err(|e| Error::io(path, e))?;
            pos += payload;
        }
        if pos != file_len {
            return Err(Error::Corrupt("trailing bytes after the last example".into()));
        }
        Ok(Self {
            vocab,
            storage: Storage::File {
                path: path.to_path_buf(),
                file: Mutex::new(file),
                offsets,
            },
        })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        match &self.storage {
            Storage::Memory(m) => m.len(),
            Storage::File { offsets, .. } => offsets.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, key: &str) -> bool {
        match &self.storage {
            Storage::Memory(m) => m.contains_key(key),
            Storage::File { offsets, .. } => offsets.contains_key(key),
        }
    }

    pub fn get(&self, key: &str) -> Result<SubstituteDistribution> {
        match &self.storage {
            Storage::Memory(m) => m.get(key).cloned().ok_or_else(|| Error::Lookup(key.to_string())),
            Storage::File { path, file, offsets } => {
                let offset = *offsets.get(key).ok_or_else(|| Error::Lookup(key.to_string()))?;
                let mut buf = Vec::new();
                let scores = {
                    let mut f = file.lock().unwrap_or_else(|p| p.into_inner());
                    f.seek(SeekFrom::Start(offset)).map_err(|e| Error::io(path, e))?;
                    read_scores(&mut *f, self.vocab.len(), &mut buf)?
                };
                SubstituteDistribution::new(Arc::clone(&self.vocab), scores, key)
            }
        }
    }
}
