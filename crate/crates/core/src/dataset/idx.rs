//! IDX binary containers (the MNIST distribution format).
//!
//! Layout: a big-endian `u32` magic `0x0000_08NN` where `NN` is the number of
//! dimensions, one big-endian `u32` per dimension, then unsigned bytes.

use std::fs;
use std::path::Path;

use super::{LabelSet, LabeledDataset};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err(path, "truncated header"))
}

fn parse<'a>(bytes: &'a [u8], magic: u32, path: &Path) -> Result<(Vec<usize>, &'a [u8])> {
    let found = read_u32(bytes, 0, path)?;
    if found != magic {
        return Err(format_err(
            path,
            format!("magic 0x{found:08x}, expected 0x{magic:08x}"),
        ));
    }
    let ndims = (magic & 0xff) as usize;
    let dims = (0..ndims)
        .map(|k| read_u32(bytes, 4 + 4 * k, path).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * ndims;
    let expected: usize = dims.iter().product();
    let payload = &bytes[header.min(bytes.len())..];
    if payload.len() < expected {
        return Err(format_err(
            path,
            format!(
                "truncated payload: {} bytes, expected {expected}",
                payload.len()
            ),
        ));
    }
    Ok((dims, &payload[..expected]))
}

/// Reads an image file; returns `(count, pixels per image, raw bytes)`.
pub fn read_idx_images(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (dims, payload) = parse(&bytes, IMAGES_MAGIC, path)?;
    Ok((dims[0], dims[1] * dims[2], payload.to_vec()))
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (_, payload) = parse(&bytes, LABELS_MAGIC, path)?;
    Ok(payload.to_vec())
}

/// Loads an image/label IDX pair. Pixels are scaled by 1/255 and labels
/// shifted to `1..=K` with `K = max label + 1`.
pub fn load_idx_pair(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
) -> Result<LabeledDataset> {
    let (images, labels) = (images.as_ref(), labels.as_ref());
    let (count, dim, pixels) = read_idx_images(images)?;
    let raw_labels = read_idx_labels(labels)?;
    if raw_labels.len() != count {
        return Err(format_err(
            labels,
            format!(
                "{} labels for {count} images in {}",
                raw_labels.len(),
                images.display()
            ),
        ));
    }
    if count == 0 || dim == 0 {
        return Err(format_err(images, "no images"));
    }
    let classes = *raw_labels.iter().max().unwrap_or(&0) as usize + 1;
    let points = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let sets = raw_labels
        .iter()
        .map(|&l| LabelSet::single(u32::from(l) + 1))
        .collect();
    let name = images
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    LabeledDataset::new(name, dim, classes, points, sets)
}
