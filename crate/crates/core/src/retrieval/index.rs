//! Flat vector index and its on-disk form.
//!
//! Byte layout, all integers and floats little-endian:
//!
//! ```text
//! magic     8 bytes  "KBQAIDX\0"
//! version   u32      1
//! dim       u32
//! count     u64
//! built_at  i64      unix seconds
//! model_len u32, model_id (UTF-8)
//! vectors   count * dim f32, row-major in entry order
//! ids       count * (u32 length, UTF-8 chunk_id)
//! ```

use std::collections::HashSet;
use std::path::Path;

use crate::chunk::Chunk;
use crate::provider::{Embedder, EmbeddingVector};
use crate::{Error, Result};

pub const INDEX_MAGIC: &[u8; 8] = b"KBQAIDX\0";
pub const INDEX_VERSION: u32 = 1;

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    model_id: String,
    built_at: i64,
    ids: Vec<String>,
    data: Vec<f32>,
}

impl VectorIndex {
    pub fn new(dim: usize, model_id: impl Into<String>, built_at: i64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("index dim must be positive".into()));
        }
        Ok(Self {
            dim,
            model_id: model_id.into(),
            built_at,
            ids: Vec::new(),
            data: Vec::new(),
        })
    }

    pub fn push(&mut self, chunk_id: impl Into<String>, vector: &EmbeddingVector) -> Result<()> {
        let chunk_id = chunk_id.into();
        if vector.dim() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector for {chunk_id} has dim {}, index dim is {}",
                vector.dim(),
                self.dim
            )));
        }
        if (vector.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidInput(format!("vector for {chunk_id} is not unit norm")));
        }
        if self.ids.contains(&chunk_id) {
            return Err(Error::InvalidInput(format!("duplicate chunk_id {chunk_id}")));
        }
        self.ids.push(chunk_id);
        self.data.extend_from_slice(vector.values());
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn built_at(&self) -> i64 {
        self.built_at
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn chunk_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn chunk_id(&self, position: usize) -> &str {
        &self.ids[position]
    }

    pub fn vector(&self, position: usize) -> &[f32] {
        &self.data[position * self.dim..(position + 1) * self.dim]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + self.data.len() * 4 + self.ids.len() * 24);
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.built_at.to_le_bytes());
        put_str(&mut out, &self.model_id);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for id in &self.ids {
            put_str(&mut out, id);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != INDEX_MAGIC {
            return Err(Error::IndexFormat("bad magic, not an index file".into()));
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(Error::IndexFormat(format!("unsupported version {version}")));
        }
        let dim = r.u32()? as usize;
        let count = usize::try_from(r.u64()?).map_err(|_| Error::IndexFormat("count overflows".into()))?;
        let built_at = r.i64()?;
        let model_id = r.string()?;
        if dim == 0 {
            return Err(Error::IndexFormat("dim is zero".into()));
        }
        let n_floats = count
            .checked_mul(dim)
            .filter(|n| n.checked_mul(4).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| Error::IndexFormat("vector block larger than file".into()))?;
        let data: Vec<f32> = r
            .take(n_floats * 4)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        let mut ids = Vec::with_capacity(count);
        let mut seen = HashSet::with_capacity(count);
        for _ in 0..count {
            let id = r.string()?;
            if !seen.insert(id.clone()) {
                return Err(Error::IndexFormat(format!("duplicate chunk_id {id}")));
            }
            ids.push(id);
        }
        if r.pos != bytes.len() {
            return Err(Error::IndexFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let index = Self {
            dim,
            model_id,
            built_at,
            ids,
            data,
        };
        for i in 0..index.len() {
            let norm = index.vector(i).iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::IndexFormat(format!("vector {i} is not unit norm")));
            }
        }
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::IndexFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::IndexFormat("string is not UTF-8".into()))
    }
}

/// Embeds every chunk in store order. Any provider failure aborts the build.
pub async fn build_index(chunks: &[Chunk], embedder: &dyn Embedder, batch_size: usize, built_at: i64) -> Result<VectorIndex> {
    if chunks.is_empty() {
        return Err(Error::Empty("chunk store"));
    }
    let mut index: Option<VectorIndex> = None;
    for batch in chunks.chunks(batch_size.max(1)) {
        let texts: Vec<String> = batch.iter().map(|c| c.text.clone()).collect();
        let vectors = embedder.embed_batch(&texts).await?;
        if vectors.len() != batch.len() {
            return Err(Error::InvalidInput(format!(
                "embedder returned {} vectors for {} texts",
                vectors.len(),
                batch.len()
            )));
        }
        for (chunk, v) in batch.iter().zip(&vectors) {
            if index.is_none() {
                index = Some(VectorIndex::new(v.dim(), embedder.model_id(), built_at)?);
            }
            index.as_mut().expect("just set").push(&chunk.chunk_id, v)?;
        }
        tracing::debug!(done = index.as_ref().map_or(0, VectorIndex::len), total = chunks.len(), "embedded batch");
    }
    Ok(index.expect("non-empty store yields an index"))
}
