use super::config::CS_BINS;
use super::{DescriptorConfig, DescriptorId, FeatureVector};
use crate::error::{Error, Result};
use crate::imaging::{rgb_to_hmmd, RasterImage};

/// Diff-range upper bounds (exclusive except the last) and the
/// (hue levels, sum levels) split of each subspace.
const DIFF_BOUNDS: [f64; 5] = [6.0, 20.0, 60.0, 110.0, 256.0];
const SUBSPACES: [(usize, usize); 5] = [(1, 8), (4, 4), (4, 4), (8, 2), (8, 1)];

/// Index of the 64-cell HMMD quantization for an RGB pixel.
pub fn hmmd_cell(rgb: [u8; 3]) -> usize {
    let hmmd = rgb_to_hmmd(rgb);
    let range = DIFF_BOUNDS.iter().position(|&b| hmmd.diff < b).unwrap_or(4);
    let offset: usize = SUBSPACES[..range].iter().map(|(h, s)| h * s).sum();
    let (hue_levels, sum_levels) = SUBSPACES[range];
    let hue = ((hmmd.hue / 360.0 * hue_levels as f64) as usize).min(hue_levels - 1);
    let sum = ((hmmd.sum / 256.0 * sum_levels as f64) as usize).min(sum_levels - 1);
    offset + hue * sum_levels + sum
}

/// Per-axis subsampling factor `2^max(0, round(0.5·log2(W·H) − 8))`.
pub fn color_structure_subsampling(width: usize, height: usize) -> usize {
    let p = (0.5 * ((width * height) as f64).log2() - 8.0).round();
    if p <= 0.0 {
        1
    } else {
        1 << (p as u32)
    }
}

pub fn extract_color_structure(img: &RasterImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    let k = color_structure_subsampling(img.width(), img.height());
    let w = img.width().div_ceil(k);
    let h = img.height().div_ceil(k);
    let win = cfg.cs_window;
    if w < win || h < win {
        return Err(Error::extraction(
            "CS",
            format!("subsampled image {w}x{h} smaller than {win}x{win} window"),
        ));
    }
    // One presence bit per cell; a window's cell set is the OR of its pixels.
    let bits: Vec<u64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| 1u64 << hmmd_cell(img.pixel(x * k, y * k)))
        .collect();
    // Vertical OR over `win` rows, then horizontal OR over `win` columns.
    let rows_out = h - win + 1;
    let cols_out = w - win + 1;
    let mut counts = [0u64; CS_BINS];
    let mut column = vec![0u64; w];
    for top in 0..rows_out {
        for (x, col) in column.iter_mut().enumerate() {
            *col = (top..top + win).fold(0, |acc, y| acc | bits[y * w + x]);
        }
        for left in 0..cols_out {
            let mut mask = column[left..left + win].iter().fold(0, |acc, &m| acc | m);
            while mask != 0 {
                counts[mask.trailing_zeros() as usize] += 1;
                mask &= mask - 1;
            }
        }
    }
    let windows = (rows_out * cols_out) as f64;
    let values = counts.iter().map(|&c| c as f64 / windows).collect();
    Ok(FeatureVector::new(DescriptorId::ColorStructure, values, img.id))
}
