use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use sotmlp_core::dataset::{parse_idx_images, parse_idx_labels, pair_mnist, LabeledImage};

use crate::error::{usage, CliError};

/// Read a data file, transparently decompressing it when the contents
/// start with the gzip magic bytes.
pub fn read_data_file(path: &Path) -> Result<Vec<u8>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| usage(format!("cannot decompress {}: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Load an image/label IDX file pair into normalized labeled images.
pub fn load_labeled_set(images: &Path, labels: &Path) -> Result<Vec<LabeledImage>, CliError> {
    let raw_images = parse_idx_images(&read_data_file(images)?)
        .map_err(|e| usage(format!("{}: {e}", images.display())))?;
    let raw_labels = parse_idx_labels(&read_data_file(labels)?)
        .map_err(|e| usage(format!("{}: {e}", labels.display())))?;
    let data = pair_mnist(&raw_images, &raw_labels)
        .map_err(|e| usage(format!("{} / {}: {e}", images.display(), labels.display())))?;
    if data.is_empty() {
        return Err(usage(format!("{}: dataset is empty", images.display())));
    }
    Ok(data)
}

/// Load a single image from a plain-text file of whitespace-separated
/// pixel values in [0, 1].
pub fn load_pixel_file(path: &Path, expected_len: usize) -> Result<Vec<f32>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut pixels = Vec::new();
    for (i, token) in text.split_whitespace().enumerate() {
        let value: f32 = token
            .parse()
            .map_err(|e| usage(format!("{}: pixel {i}: {e}", path.display())))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(usage(format!(
                "{}: pixel {i} is {value}, outside [0, 1]",
                path.display()
            )));
        }
        pixels.push(value);
    }
    if pixels.len() != expected_len {
        return Err(usage(format!(
            "{}: expected {expected_len} pixels, found {}",
            path.display(),
            pixels.len()
        )));
    }
    Ok(pixels)
}
