//! IDX image/label parsing and conversion to trainer vectors and crossbar
//! input voltages.
//!
//! The IDX container is big-endian: a magic number (0x00000803 for
//! unsigned-byte images, 0x00000801 for labels), the item count, image rows
//! and columns for image files, then the raw payload. Parsing is strict: the
//! byte length must match the header exactly, so a parsed file re-encodes to
//! identical bytes.

use alloc::vec::Vec;
use core::fmt;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetError {
    /// The magic number did not match the expected file kind.
    WrongMagic { expected: u32, found: u32 },
    /// The byte length disagrees with the header (truncated or trailing).
    LengthMismatch { expected: usize, found: usize },
    /// A label above 9.
    LabelOutOfRange { index: usize, value: u8 },
    /// Image and label files disagree on the item count.
    CountMismatch { images: usize, labels: usize },
    /// Images are not the 28 x 28 MNIST shape.
    NotMnistShape { rows: usize, cols: usize },
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::WrongMagic { expected, found } => {
                write!(f, "IDX magic 0x{found:08x}, expected 0x{expected:08x}")
            }
            DatasetError::LengthMismatch { expected, found } => {
                write!(f, "IDX payload is {found} bytes, header requires {expected}")
            }
            DatasetError::LabelOutOfRange { index, value } => {
                write!(f, "label {index} is {value}, outside 0-9")
            }
            DatasetError::CountMismatch { images, labels } => {
                write!(f, "{images} images but {labels} labels")
            }
            DatasetError::NotMnistShape { rows, cols } => {
                write!(f, "images are {rows}x{cols}, expected 28x28")
            }
        }
    }
}

/// Raw parsed images: `count` images of `rows` x `cols` unsigned bytes,
/// stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl RawImages {
    pub fn count(&self) -> usize {
        self.pixels.len() / (self.rows * self.cols)
    }

    /// Pixel bytes of one image.
    pub fn image(&self, index: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[index * size..(index + 1) * size]
    }
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Option<u32> {
    let chunk = bytes.get(offset..offset + 4)?;
    Some(u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
}

/// Parse an IDX unsigned-byte image file.
pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages, DatasetError> {
    let magic = read_u32_be(bytes, 0)
        .ok_or(DatasetError::LengthMismatch { expected: 16, found: bytes.len() })?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DatasetError::WrongMagic { expected: IDX_IMAGES_MAGIC, found: magic });
    }
    let count = read_u32_be(bytes, 4)
        .ok_or(DatasetError::LengthMismatch { expected: 16, found: bytes.len() })?
        as usize;
    let rows = read_u32_be(bytes, 8)
        .ok_or(DatasetError::LengthMismatch { expected: 16, found: bytes.len() })?
        as usize;
    let cols = read_u32_be(bytes, 12)
        .ok_or(DatasetError::LengthMismatch { expected: 16, found: bytes.len() })?
        as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(DatasetError::LengthMismatch { expected, found: bytes.len() });
    }
    Ok(RawImages { rows, cols, pixels: bytes[16..].to_vec() })
}

/// Parse an IDX label file. Every label must be 0-9.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DatasetError> {
    let magic = read_u32_be(bytes, 0)
        .ok_or(DatasetError::LengthMismatch { expected: 8, found: bytes.len() })?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DatasetError::WrongMagic { expected: IDX_LABELS_MAGIC, found: magic });
    }
    let count = read_u32_be(bytes, 4)
        .ok_or(DatasetError::LengthMismatch { expected: 8, found: bytes.len() })?
        as usize;
    let expected = 8 + count;
    if bytes.len() != expected {
        return Err(DatasetError::LengthMismatch { expected, found: bytes.len() });
    }
    let labels = bytes[8..].to_vec();
    for (index, value) in labels.iter().enumerate() {
        if *value > 9 {
            return Err(DatasetError::LabelOutOfRange { index, value: *value });
        }
    }
    Ok(labels)
}

/// Re-encode images to IDX bytes (inverse of `parse_idx_images`).
pub fn encode_idx_images(images: &RawImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.count() as u32).to_be_bytes());
    out.extend_from_slice(&(images.rows as u32).to_be_bytes());
    out.extend_from_slice(&(images.cols as u32).to_be_bytes());
    out.extend_from_slice(&images.pixels);
    out
}

/// Re-encode labels to IDX bytes (inverse of `parse_idx_labels`).
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// One normalized sample: 784 pixels in [0, 1] and a 0-9 label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub pixels: Vec<f32>,
    pub label: u8,
}

/// Pair MNIST images with labels, enforcing the 28 x 28 shape and matching
/// counts, and normalizing pixels to [0, 1] by dividing by 255.
pub fn pair_mnist(images: &RawImages, labels: &[u8]) -> Result<Vec<LabeledImage>, DatasetError> {
    if images.rows != 28 || images.cols != 28 {
        return Err(DatasetError::NotMnistShape { rows: images.rows, cols: images.cols });
    }
    if images.count() != labels.len() {
        return Err(DatasetError::CountMismatch { images: images.count(), labels: labels.len() });
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, label)| LabeledImage {
            pixels: images.image(i).iter().map(|p| f32::from(*p) / 255.0).collect(),
            label: *label,
        })
        .collect())
}

/// Convert normalized pixels to crossbar input voltages: pixel * v_read.
pub fn to_voltages(image: &LabeledImage, v_read: f64) -> Vec<f64> {
    image.pixels.iter().map(|p| f64::from(*p) * v_read).collect()
}
