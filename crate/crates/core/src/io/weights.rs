//! Named tensor store and its `CTWB` binary encoding.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "CTWB" | version: u32 (=1) | tensor count: u32
//! per tensor: name length: u16 | name: UTF-8 | rank: u8 | dims: u32 * rank | data: f32 * prod(dims)
//! CRC-32 (IEEE) of every preceding byte: u32
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CTWB";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 12;
const CRC_LEN: usize = 4;

/// One stored tensor.
#[derive(Debug, Clone)]
pub struct WeightTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl WeightTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension {
                axis: "tensor data",
                expected,
                found: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Bitwise equality: `NaN` payloads and signed zeros must match too.
impl PartialEq for WeightTensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Insertion-ordered map from tensor name to tensor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightStore {
    tensors: IndexMap<String, WeightTensor>,
}

impl WeightStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a tensor; names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, tensor: WeightTensor) -> Result<()> {
        let name = name.into();
        if name.len() > u16::MAX as usize {
            return Err(Error::Malformed(format!("tensor name of {} bytes", name.len())));
        }
        if tensor.shape.len() > u8::MAX as usize {
            return Err(Error::Malformed(format!("rank {} for `{name}`", tensor.shape.len())));
        }
        if self.tensors.contains_key(&name) {
            return Err(Error::Malformed(format!("duplicate tensor name `{name}`")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&WeightTensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut WeightTensor> {
        self.tensors.get_mut(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<WeightTensor> {
        self.tensors.shift_remove(name)
    }

    /// Fetches `name` and checks its shape.
    pub fn expect(&self, name: &str, shape: &[usize]) -> Result<&WeightTensor> {
        let tensor = self.get(name).ok_or_else(|| Error::Load {
            tensor: name.to_string(),
            reason: "missing".into(),
        })?;
        if tensor.shape != shape {
            return Err(Error::Load {
                tensor: name.to_string(),
                reason: format!("shape {:?}, expected {:?}", tensor.shape, shape),
            });
        }
        Ok(tensor)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WeightTensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars over all tensors.
    pub fn scalar_count(&self) -> u64 {
        self.tensors.values().map(|t| t.data.len() as u64).sum()
    }

    /// Size in bytes of the encoded file.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN
            + self
                .iter()
                .map(|(name, t)| 2 + name.len() + 1 + 4 * t.shape.len() + 4 * t.data.len())
                .sum::<usize>()
            + CRC_LEN
    }
}

/// Serializes `store` into `dest` and returns the number of bytes written.
pub fn write_weights<W: Write>(store: &WeightStore, mut dest: W) -> Result<usize> {
    let mut buf = Vec::with_capacity(store.encoded_len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (name, tensor) in store.iter() {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(tensor.shape.len() as u8);
        for &dim in &tensor.shape {
            let dim = u32::try_from(dim)
                .map_err(|_| Error::Malformed(format!("dimension {dim} of `{name}` exceeds u32")))?;
            buf.extend_from_slice(&dim.to_le_bytes());
        }
        for v in &tensor.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    dest.write_all(&buf)?;
    dest.flush()?;
    Ok(buf.len())
}

/// Reads a `CTWB` stream written by [`write_weights`].
pub fn read_weights<R: Read>(mut source: R) -> Result<WeightStore> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save_weights(store: &WeightStore, path: impl AsRef<Path>) -> Result<usize> {
    let file = File::create(path)?;
    write_weights(store, BufWriter::new(file))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightStore> {
    read_weights(File::open(path)?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated(what))?;
        let slice = self.bytes.get(self.pos..end).ok_or(Error::Truncated(what))?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

fn decode(bytes: &[u8]) -> Result<WeightStore> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = cur.take(4, "magic")?.try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = cur.u32("tensor count")?;

    let mut store = WeightStore::new();
    for _ in 0..count {
        let name_len = cur.u16("tensor name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "tensor name")?)
            .map_err(|e| Error::Malformed(format!("tensor name is not UTF-8: {e}")))?
            .to_string();
        let rank = cur.u8("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u32("tensor dims")? as usize);
        }
        let len = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Malformed(format!("shape {shape:?} of `{name}` overflows")))?;
        let raw = cur.take(len, "tensor data")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.insert(name, WeightTensor { shape, data })?;
    }

    let body_end = cur.pos;
    let stored = cur.u32("checksum")?;
    if cur.pos != bytes.len() {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after checksum",
            bytes.len() - cur.pos
        )));
    }
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    Ok(store)
}
