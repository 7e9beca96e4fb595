//! Source corpora: binary file parsers and a synthetic stand-in.
//!
//! Real benchmarks are built from the IDX image/label files used by MNIST
//! and Fashion-MNIST and from CIFAR-10 binary batches. The synthetic
//! source produces small, linearly separable Gaussian blobs so the whole
//! pipeline runs without any downloads.
//!
//! File layouts (all integers big-endian):
//!
//! ```text
//! IDX images: magic 0x00000803 | count u32 | rows u32 | cols u32 | count*rows*cols bytes
//! IDX labels: magic 0x00000801 | count u32 | count bytes (class ids 0..=9)
//! CIFAR-10:   3073-byte records, 1 label byte + 3072 pixel bytes (channel-major 32x32x3)
//! ```
//!
//! Pixels are normalized by dividing the raw byte by 255, nothing else.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rng::{self, CanonicalRng};

/// Magic number of an IDX image file (unsigned bytes, 3 dimensions).
pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
/// Magic number of an IDX label file (unsigned bytes, 1 dimension).
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;
/// Bytes per CIFAR-10 record: 1 label byte + 32*32*3 pixel bytes.
pub const CIFAR_RECORD_LEN: usize = 3073;
/// Class ids are always drawn from `0..MAX_CLASSES`.
pub const MAX_CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("bad magic number: expected {expected:#010x}, got {actual:#010x}")]
    BadMagic { expected: u32, actual: u32 },
    #[error("truncated input: need {needed} bytes, got {actual}")]
    Truncated { needed: usize, actual: usize },
    #[error("input length {len} is not a multiple of the {record}-byte record size")]
    BadRecordLength { len: usize, record: usize },
    #[error("label {label} at index {index} is outside 0..=9")]
    LabelOutOfRange { label: u8, index: usize },
    #[error("unknown source name `{0}` (expected mnist, fashion, cifar10 or synthetic)")]
    UnknownName(String),
}

/// One decoded image with pixels normalized into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub pixels: Vec<f64>,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl RawImage {
    pub fn new(pixels: Vec<f64>, width: usize, height: usize, channels: usize) -> Self {
        assert_eq!(pixels.len(), width * height * channels, "pixel count mismatch");
        debug_assert!(pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        RawImage { pixels, width, height, channels }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Supported source corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceName {
    Mnist,
    Fashion,
    Cifar10,
    Synthetic,
}

impl fmt::Display for SourceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SourceName::Mnist => "mnist",
            SourceName::Fashion => "fashion",
            SourceName::Cifar10 => "cifar10",
            SourceName::Synthetic => "synthetic",
        };
        f.write_str(name)
    }
}

impl FromStr for SourceName {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mnist" => Ok(SourceName::Mnist),
            "fashion" => Ok(SourceName::Fashion),
            "cifar10" => Ok(SourceName::Cifar10),
            "synthetic" => Ok(SourceName::Synthetic),
            other => Err(SourceError::UnknownName(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// All instances of one split of one corpus. Immutable once parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDataset {
    pub name: SourceName,
    pub split: Split,
    pub images: Vec<RawImage>,
    pub labels: Vec<u8>,
}

impl SourceDataset {
    pub fn new(name: SourceName, split: Split, images: Vec<RawImage>, labels: Vec<u8>) -> Self {
        assert_eq!(images.len(), labels.len(), "image/label count mismatch");
        assert!(labels.iter().all(|&l| (l as usize) < MAX_CLASSES));
        SourceDataset { name, split, images, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Flattened pixel count per instance; 0 for an empty dataset.
    pub fn instance_dim(&self) -> usize {
        self.images.first().map_or(0, RawImage::len)
    }
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32, SourceError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(SourceError::Truncated { needed: end, actual: bytes.len() });
    }
    Ok(u32::from_be_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]]))
}

/// Parse an IDX image file into normalized images.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<RawImage>, SourceError> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(SourceError::BadMagic { expected: IDX_IMAGE_MAGIC, actual: magic });
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let rows = read_be_u32(bytes, 8)? as usize;
    let cols = read_be_u32(bytes, 12)? as usize;
    let pixels_per_image = rows * cols;
    let needed = 16 + count * pixels_per_image;
    if bytes.len() < needed {
        return Err(SourceError::Truncated { needed, actual: bytes.len() });
    }

    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * pixels_per_image;
        let pixels = bytes[start..start + pixels_per_image]
            .iter()
            .map(|&b| f64::from(b) / 255.0)
            .collect();
        images.push(RawImage::new(pixels, cols, rows, 1));
    }
    Ok(images)
}

/// Parse an IDX label file into class ids.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, SourceError> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(SourceError::BadMagic { expected: IDX_LABEL_MAGIC, actual: magic });
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(SourceError::Truncated { needed, actual: bytes.len() });
    }

    let labels = &bytes[8..8 + count];
    for (index, &label) in labels.iter().enumerate() {
        if label as usize >= MAX_CLASSES {
            return Err(SourceError::LabelOutOfRange { label, index });
        }
    }
    Ok(labels.to_vec())
}

/// Parse one CIFAR-10 binary batch into normalized images and labels.
///
/// Pixels keep the channel-major layout of the file; downstream code
/// treats every image as a flat vector, so layout only matters here.
pub fn parse_cifar10_batch(bytes: &[u8]) -> Result<(Vec<RawImage>, Vec<u8>), SourceError> {
    if bytes.is_empty() || bytes.len() % CIFAR_RECORD_LEN != 0 {
        return Err(SourceError::BadRecordLength { len: bytes.len(), record: CIFAR_RECORD_LEN });
    }
    let count = bytes.len() / CIFAR_RECORD_LEN;
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for index in 0..count {
        let record = &bytes[index * CIFAR_RECORD_LEN..(index + 1) * CIFAR_RECORD_LEN];
        let label = record[0];
        if label as usize >= MAX_CLASSES {
            return Err(SourceError::LabelOutOfRange { label, index });
        }
        let pixels = record[1..].iter().map(|&b| f64::from(b) / 255.0).collect();
        images.push(RawImage::new(pixels, 32, 32, 3));
        labels.push(label);
    }
    Ok((images, labels))
}

/// Separation between adjacent synthetic class means, in units of the
/// per-coordinate standard deviation.
const SYNTHETIC_MEAN_GAP: f64 = 4.0;
/// Tail allowance on each side of the mean range before squashing.
const SYNTHETIC_TAIL: f64 = 5.0;

/// Generate a deterministic synthetic dataset of Gaussian class blobs.
///
/// Class `c` is centered at `c * 4` standard deviations along every
/// coordinate, so any two classes sit at least 4 sigmas apart; samples
/// are affinely mapped into `[0, 1]` (order preserving, so separation
/// survives) and clamped against the rare 5-sigma tail.
///
/// Requires `class_count <= 10` and `n >= class_count`. The returned
/// dataset is marked as the train split; see [`synthetic_pair`].
pub fn synthetic_source(seed: u64, n: usize, class_count: usize, dim: usize) -> SourceDataset {
    synthetic_split(seed, n, class_count, dim, Split::Train)
}

/// Train/test synthetic pair with decorrelated streams (`seed`, `seed + 1`).
pub fn synthetic_pair(
    seed: u64,
    n_train: usize,
    n_test: usize,
    class_count: usize,
    dim: usize,
) -> (SourceDataset, SourceDataset) {
    (
        synthetic_split(seed, n_train, class_count, dim, Split::Train),
        synthetic_split(seed.wrapping_add(1), n_test, class_count, dim, Split::Test),
    )
}

fn synthetic_split(seed: u64, n: usize, class_count: usize, dim: usize, split: Split) -> SourceDataset {
    assert!(class_count >= 1 && class_count <= MAX_CLASSES, "class_count must be in 1..=10");
    assert!(n >= class_count, "need at least one instance per class");
    assert!(dim >= 1, "dim must be positive");

    let mut rng: CanonicalRng = rng::seeded(seed);
    let span = SYNTHETIC_MEAN_GAP * (class_count - 1) as f64 + 2.0 * SYNTHETIC_TAIL;
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng::bounded_inclusive(&mut rng, 0, class_count as u64 - 1) as u8;
        let mean = SYNTHETIC_MEAN_GAP * f64::from(class);
        let pixels = (0..dim)
            .map(|_| {
                let raw = mean + rng::standard_normal(&mut rng);
                ((raw + SYNTHETIC_TAIL) / span).clamp(0.0, 1.0)
            })
            .collect();
        images.push(RawImage::new(pixels, dim, 1, 1));
        labels.push(class);
    }
    SourceDataset::new(SourceName::Synthetic, split, images, labels)
}
