//! MNIST in the IDX container format.

use std::fs;
use std::path::Path;

use crate::encoding::{IMAGE_PIXELS, IMAGE_SIDE};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Grayscale images with their digit labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImageDataset {
    /// `len() * 784` bytes, row-major per image.
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.images[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS]
    }

    /// The first `n` samples (or all of them if there are fewer).
    pub fn head(&self, n: usize) -> ImageDataset {
        let n = n.min(self.len());
        ImageDataset {
            images: self.images[..n * IMAGE_PIXELS].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile {
            path: path.to_path_buf(),
            expected: offset + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = read_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

fn check_len(bytes: &[u8], expected: usize, path: &Path) -> Result<()> {
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(())
}

/// Parses an IDX3 image file held in memory.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, Vec<u8>)> {
    check_magic(bytes, IMAGES_MAGIC, path)?;
    let n = read_u32(bytes, 4, path)? as usize;
    let rows = read_u32(bytes, 8, path)? as usize;
    let cols = read_u32(bytes, 12, path)? as usize;
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::DimensionMismatch(format!(
            "{}: images are {rows}x{cols}, expected {IMAGE_SIDE}x{IMAGE_SIDE}",
            path.display()
        )));
    }
    let end = 16 + n * IMAGE_PIXELS;
    check_len(bytes, end, path)?;
    Ok((n, bytes[16..end].to_vec()))
}

/// Parses an IDX1 label file held in memory.
pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC, path)?;
    let n = read_u32(bytes, 4, path)? as usize;
    let end = 8 + n;
    check_len(bytes, end, path)?;
    let labels = bytes[8..end].to_vec();
    if let Some(bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::DimensionMismatch(format!(
            "{}: label {bad} outside 0..=9",
            path.display()
        )));
    }
    Ok(labels)
}

/// Loads a paired image/label IDX dataset from disk.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<ImageDataset> {
    let img_bytes = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let lbl_bytes = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let (n, images) = parse_idx_images(&img_bytes, images_path)?;
    let labels = parse_idx_labels(&lbl_bytes, labels_path)?;
    if n != labels.len() {
        return Err(Error::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    Ok(ImageDataset { images, labels })
}

pub fn encode_idx_images(images: &[u8]) -> Vec<u8> {
    let n = images.len() / IMAGE_PIXELS;
    let mut out = Vec::with_capacity(16 + images.len());
    for v in [IMAGES_MAGIC, n as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images[..n * IMAGE_PIXELS]);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes `dataset` as an IDX image/label pair.
pub fn write_mnist_idx(dataset: &ImageDataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    fs::write(images_path, encode_idx_images(&dataset.images))
        .map_err(|e| Error::io(images_path, e))?;
    fs::write(labels_path, encode_idx_labels(&dataset.labels))
        .map_err(|e| Error::io(labels_path, e))?;
    Ok(())
}
