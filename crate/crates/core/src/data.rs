//! MNIST in the IDX container: loading, normalization and batching.
//!
//! Files may be stored raw or gzip-compressed; compression is detected from
//! the stream header.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use autodiff::Tensor;
use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{MinnError, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const CLASSES: usize = 10;

/// Raw images as stored in an IDX file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| MinnError::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| MinnError::Format(format!("{}: bad gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn header(bytes: &[u8], words: usize) -> Result<Vec<u32>> {
    if bytes.len() < 4 * words {
        return Err(MinnError::Format(format!(
            "file too short for a {}-byte header: {} bytes",
            4 * words,
            bytes.len()
        )));
    }
    Ok(bytes[..4 * words]
        .chunks(4)
        .map(|w| u32::from_be_bytes([w[0], w[1], w[2], w[3]]))
        .collect())
}

fn expect_magic(found: u32, want: u32) -> Result<()> {
    if found != want {
        return Err(MinnError::Format(format!(
            "bad IDX magic {found}, expected {want}"
        )));
    }
    Ok(())
}

fn expect_len(bytes: &[u8], want: usize) -> Result<()> {
    if bytes.len() != want {
        return Err(MinnError::Format(format!(
            "IDX payload length {} does not match header ({want} bytes expected)",
            bytes.len()
        )));
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    expect_magic(header(bytes, 1)?[0], IMAGE_MAGIC)?;
    let h = header(bytes, 4)?;
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    expect_len(&bytes[16..], count * rows * cols)?;
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    expect_magic(header(bytes, 1)?[0], LABEL_MAGIC)?;
    let h = header(bytes, 2)?;
    let labels = &bytes[8..];
    expect_len(labels, h[1] as usize)?;
    if let Some((i, &l)) = labels
        .iter()
        .enumerate()
        .find(|(_, &l)| l as usize >= CLASSES)
    {
        return Err(MinnError::Data(format!(
            "label {l} at index {i} is outside 0..=9"
        )));
    }
    Ok(labels.to_vec())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    let path = path.as_ref();
    parse_idx_images(&read_bytes(path)?).map_err(|e| annotate(e, path))
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_idx_labels(&read_bytes(path)?).map_err(|e| annotate(e, path))
}

fn annotate(e: MinnError, path: &Path) -> MinnError {
    match e {
        MinnError::Format(m) => MinnError::Format(format!("{}: {m}", path.display())),
        MinnError::Data(m) => MinnError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for w in [
        IMAGE_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&w.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Normalized images paired with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels in `[0, 1]`, one image after another.
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

fn find_file(dir: &Path, stem: &str) -> Result<PathBuf> {
    for name in [stem.to_string(), format!("{stem}.gz")] {
        let p = dir.join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(MinnError::io(
        dir.join(stem),
        std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "MNIST file not found (raw or .gz)",
        ),
    ))
}

impl Dataset {
    pub fn from_idx(images: IdxImages, labels: Vec<u8>) -> Result<Self> {
        if images.count != labels.len() {
            return Err(MinnError::Data(format!(
                "{} images but {} labels",
                images.count,
                labels.len()
            )));
        }
        Ok(Dataset {
            rows: images.rows,
            cols: images.cols,
            images: images.pixels.iter().map(|&b| b as f64 / 255.0).collect(),
            labels,
        })
    }

    /// Loads one split from a directory holding the standard MNIST file names.
    pub fn load_mnist(dir: impl AsRef<Path>, split: Split) -> Result<Self> {
        let dir = dir.as_ref();
        let p = split.prefix();
        let images = load_idx_images(find_file(dir, &format!("{p}-images-idx3-ubyte"))?)?;
        let labels = load_idx_labels(find_file(dir, &format!("{p}-labels-idx1-ubyte"))?)?;
        Self::from_idx(images, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let n = self.pixels_per_image();
        &self.images[i * n..(i + 1) * n]
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut images = Vec::with_capacity(indices.len() * self.pixels_per_image());
        for &i in indices {
            images.extend_from_slice(self.image(i));
        }
        Dataset {
            rows: self.rows,
            cols: self.cols,
            images,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// First `n` samples after a seeded shuffle (all samples if `n` is larger).
    pub fn seeded_subset<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(rng);
        idx.truncate(n);
        self.select(&idx)
    }

    /// `[B, 1, rows, cols]` images and `[B, 10]` one-hot targets.
    pub fn batch_tensors(&self, indices: &[usize]) -> Result<(Tensor, Tensor)> {
        let mut images = Vec::with_capacity(indices.len() * self.pixels_per_image());
        let mut targets = Vec::with_capacity(indices.len() * CLASSES);
        for &i in indices {
            images.extend_from_slice(self.image(i));
            targets.extend(one_hot(self.labels[i] as usize, CLASSES)?);
        }
        let b = indices.len();
        Ok((
            Tensor::new(&[b, 1, self.rows, self.cols], images)?,
            Tensor::new(&[b, CLASSES], targets)?,
        ))
    }
}

pub fn one_hot(label: usize, classes: usize) -> Result<Vec<f64>> {
    if label >= classes {
        return Err(MinnError::Data(format!(
            "label {label} out of range for {classes} classes"
        )));
    }
    let mut v = vec![0.0; classes];
    v[label] = 1.0;
    Ok(v)
}

/// Index batches over a seeded permutation of `0..len`; the last batch may
/// be short.
pub fn batches<R: Rng + ?Sized>(
    len: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(MinnError::Contract("batch size must be at least 1".into()));
    }
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    Ok(idx.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(0, 10).unwrap()[0], 1.0);
        assert_eq!(one_hot(9, 10).unwrap(), [vec![0.0; 9], vec![1.0]].concat());
        for l in 0..10 {
            assert_eq!(one_hot(l, 10).unwrap().iter().sum::<f64>(), 1.0);
        }
        assert!(matches!(one_hot(10, 10), Err(MinnError::Data(_))));
    }

    #[test]
    fn normalization_endpoints_are_exact() {
        let imgs = IdxImages {
            count: 1,
            rows: 1,
            cols: 2,
            pixels: vec![0, 255],
        };
        let d = Dataset::from_idx(imgs, vec![3]).unwrap();
        assert_eq!(d.images, vec![0.0, 1.0]);
    }
}
