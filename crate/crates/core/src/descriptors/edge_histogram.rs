use super::{DescriptorConfig, DescriptorId, FeatureVector};
use crate::error::{Error, Result};
use crate::imaging::RasterImage;

const GRID: usize = 4;
const EDGE_TYPES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeType {
    Vertical,
    Horizontal,
    Diagonal45,
    Diagonal135,
    NonDirectional,
}

impl EdgeType {
    pub const ALL: [EdgeType; EDGE_TYPES] = [
        EdgeType::Vertical,
        EdgeType::Horizontal,
        EdgeType::Diagonal45,
        EdgeType::Diagonal135,
        EdgeType::NonDirectional,
    ];
}

/// Sub-image indices (row-major in the 4×4 grid) averaged into each
/// semi-local histogram: 4 rows, 4 columns, then the four corner 2×2
/// neighbourhoods and the central one.
pub const SEMI_LOCAL_GROUPS: [[usize; 4]; 13] = [
    [0, 1, 2, 3],
    [4, 5, 6, 7],
    [8, 9, 10, 11],
    [12, 13, 14, 15],
    [0, 4, 8, 12],
    [1, 5, 9, 13],
    [2, 6, 10, 14],
    [3, 7, 11, 15],
    [0, 1, 4, 5],
    [2, 3, 6, 7],
    [8, 9, 12, 13],
    [10, 11, 14, 15],
    [5, 6, 9, 10],
];

/// Largest even block side whose tiling of a `w`×`h` sub-image yields at
/// least `target` blocks; 2 when even that falls short.
pub fn edge_block_side(w: usize, h: usize, target: usize) -> usize {
    let mut side = w.min(h) & !1;
    while side > 2 {
        if (w / side) * (h / side) >= target {
            return side;
        }
        side -= 2;
    }
    2
}

/// Five mask responses for a 2×2 arrangement of cell sums
/// (top-left, top-right, bottom-left, bottom-right), divided by `norm`.
/// Differences are formed on the integer sums so a global offset cancels exactly.
fn strengths(s: [i64; 4], norm: f64) -> [f64; EDGE_TYPES] {
    let [a0, a1, a2, a3] = s;
    let sqrt2 = std::f64::consts::SQRT_2;
    [
        (a0 - a1 + a2 - a3).abs() as f64 / norm,
        (a0 + a1 - a2 - a3).abs() as f64 / norm,
        sqrt2 * (a0 - a3).abs() as f64 / norm,
        sqrt2 * (a1 - a2).abs() as f64 / norm,
        (2 * a0 - 2 * a1 - 2 * a2 + 2 * a3).abs() as f64 / 2.0 / norm,
    ]
}

/// Per-block dominant edge type, or `None` below the threshold.
fn classify_block(s: [i64; 4], norm: f64, threshold: f64) -> Option<EdgeType> {
    let st = strengths(s, norm);
    let (best, &max) = st
        .iter()
        .enumerate()
        .fold((0, &st[0]), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    (max >= threshold).then_some(EdgeType::ALL[best])
}

fn local_histogram(
    luma: &[i64],
    width: usize,
    (x0, y0, w, h): (usize, usize, usize, usize),
    cfg: &DescriptorConfig,
) -> [f64; EDGE_TYPES] {
    let side = edge_block_side(w, h, cfg.eh_blocks);
    let cell = side / 2;
    // luminance weights are scaled by 1000 in `luma`
    let norm = 1000.0 * (cell * cell) as f64;
    let (bx_n, by_n) = (w / side, h / side);
    let mut votes = [0u64; EDGE_TYPES];
    let cell_sum = |cx: usize, cy: usize| -> i64 {
        (cy..cy + cell)
            .map(|y| luma[y * width + cx..y * width + cx + cell].iter().sum::<i64>())
            .sum()
    };
    for by in 0..by_n {
        for bx in 0..bx_n {
            let (px, py) = (x0 + bx * side, y0 + by * side);
            let sums = [
                cell_sum(px, py),
                cell_sum(px + cell, py),
                cell_sum(px, py + cell),
                cell_sum(px + cell, py + cell),
            ];
            if let Some(edge) = classify_block(sums, norm, cfg.eh_threshold) {
                votes[edge as usize] += 1;
            }
        }
    }
    let blocks = (bx_n * by_n) as f64;
    votes.map(|v| v as f64 / blocks)
}

pub fn extract_edge_histogram(img: &RasterImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    let (w, h) = (img.width(), img.height());
    if w < 2 * GRID || h < 2 * GRID {
        return Err(Error::extraction("EH", format!("image {w}x{h} smaller than 8x8")));
    }
    let luma: Vec<i64> = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| 299 * i64::from(r) + 587 * i64::from(g) + 114 * i64::from(b))
        .collect();

    let mut local = Vec::with_capacity(GRID * GRID);
    for gy in 0..GRID {
        let (y0, y1) = (gy * h / GRID, (gy + 1) * h / GRID);
        for gx in 0..GRID {
            let (x0, x1) = (gx * w / GRID, (gx + 1) * w / GRID);
            local.push(local_histogram(&luma, w, (x0, y0, x1 - x0, y1 - y0), cfg));
        }
    }

    let mean_of = |members: &[usize]| -> [f64; EDGE_TYPES] {
        let mut acc = [0.0; EDGE_TYPES];
        for &m in members {
            for (a, v) in acc.iter_mut().zip(&local[m]) {
                *a += v;
            }
        }
        acc.map(|a| a / members.len() as f64)
    };

    let mut values = Vec::with_capacity(150);
    values.extend(local.iter().flatten());
    for group in &SEMI_LOCAL_GROUPS {
        values.extend(mean_of(group));
    }
    let all: Vec<usize> = (0..GRID * GRID).collect();
    values.extend(mean_of(&all));
    Ok(FeatureVector::new(DescriptorId::EdgeHistogram, values, img.id))
}
