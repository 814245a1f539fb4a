//! Self-describing binary weight files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            8 bytes  "MINNCKPT"
//! version          u32
//! digest           32 bytes SHA-256 of Architecture::describe()
//! description      u32 length + UTF-8 bytes
//! block count      u32
//! per block:       u32 name length, name bytes, u32 rank, rank × u64 dims,
//!                  numel × f64
//! ```

use std::fs;
use std::path::Path;

use autodiff::Tensor;
use sha2::{Digest, Sha256};

use crate::error::{MinnError, Result};
use crate::model::{Architecture, MinnWeights};

pub const MAGIC: &[u8; 8] = b"MINNCKPT";
pub const VERSION: u32 = 1;

pub fn config_digest(arch: &Architecture) -> [u8; 32] {
    Sha256::digest(arch.describe().as_bytes()).into()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode(weights: &MinnWeights) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&config_digest(&weights.arch));
    let desc = weights.arch.describe();
    out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    out.extend_from_slice(desc.as_bytes());
    let named = weights.named();
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    for (name, t) in named {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(MinnError::Format(format!(
                "checkpoint truncated while reading {what}: need {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, what)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8, what)?.try_into().expect("8 bytes"),
        ))
    }
}

/// Parses a checkpoint and checks it against `arch`.
pub fn decode(bytes: &[u8], arch: &Architecture) -> Result<MinnWeights> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(MinnError::Format(
            "not a checkpoint file (bad magic)".into(),
        ));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(MinnError::Incompatible(format!(
            "checkpoint format version {version}, this build reads {VERSION}"
        )));
    }
    let digest = r.take(32, "digest")?;
    let expected = config_digest(arch);
    let desc_len = r.u32("description length")? as usize;
    let desc = String::from_utf8_lossy(r.take(desc_len, "description")?).into_owned();
    if digest != expected {
        return Err(MinnError::Incompatible(format!(
            "configuration digest mismatch: file {} ({desc}), active {} ({})",
            hex(digest),
            hex(&expected),
            arch.describe()
        )));
    }
    let count = r.u32("block count")? as usize;
    let layout = MinnWeights::layout(arch);
    if count != layout.len() {
        return Err(MinnError::Incompatible(format!(
            "checkpoint has {count} blocks, architecture needs {}",
            layout.len()
        )));
    }
    let mut blocks = Vec::with_capacity(count);
    for (want_name, want_shape) in &layout {
        let name_len = r.u32("block name length")? as usize;
        let name = String::from_utf8_lossy(r.take(name_len, "block name")?).into_owned();
        if &name != want_name {
            return Err(MinnError::Incompatible(format!(
                "expected block {want_name}, found {name}"
            )));
        }
        let rank = r.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64("dimension")? as usize);
        }
        if &shape != want_shape {
            return Err(MinnError::Incompatible(format!(
                "block {name} has shape {shape:?}, expected {want_shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        let raw = r.take(numel * 8, &format!("values of {name}"))?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        blocks.push(Tensor::new(&shape, data).map_err(|e| MinnError::Format(e.to_string()))?);
    }
    if r.pos != bytes.len() {
        return Err(MinnError::Format(format!(
            "{} trailing bytes after the last block",
            bytes.len() - r.pos
        )));
    }
    MinnWeights::from_blocks(arch, blocks)
}

pub fn save_checkpoint(weights: &MinnWeights, path: &Path) -> Result<()> {
    fs::write(path, encode(weights)).map_err(|e| MinnError::io(path, e))
}

pub fn load_checkpoint(path: &Path, arch: &Architecture) -> Result<MinnWeights> {
    let bytes = fs::read(path).map_err(|e| MinnError::io(path, e))?;
    decode(&bytes, arch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::EnvironmentGeometry;
    use crate::seed::{self, Stream};

    fn weights(n: usize) -> MinnWeights {
        let geom = EnvironmentGeometry {
            n_t: 4,
            n_r: 2,
            n,
            layers: 2,
            ..Default::default()
        };
        MinnWeights::init(
            &Architecture::for_geometry(&geom),
            &mut seed::rng(1, Stream::Init),
        )
    }

    #[test]
    fn round_trip_is_bitwise() {
        let w = weights(16);
        let bytes = encode(&w);
        let back = decode(&bytes, &w.arch).unwrap();
        assert_eq!(back, w);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn mismatched_architecture_is_a_digest_error() {
        let w = weights(16);
        let other = weights(36).arch;
        match decode(&encode(&w), &other) {
            Err(MinnError::Incompatible(m)) => assert!(m.contains("digest")),
            r => panic!("{:?}", r.map(|_| ())),
        }
    }

    #[test]
    fn truncation_and_garbage_are_format_errors() {
        let w = weights(16);
        let bytes = encode(&w);
        for cut in [0, 5, 12, 50, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(decode(&bytes[..cut], &w.arch), Err(MinnError::Format(_))),
                "cut at {cut}"
            );
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode(&extra, &w.arch), Err(MinnError::Format(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad, &w.arch), Err(MinnError::Format(_))));
        let mut ver = bytes;
        ver[8] = 9;
        assert!(matches!(
            decode(&ver, &w.arch),
            Err(MinnError::Incompatible(_))
        ));
    }
}
