use super::{DescriptorConfig, DescriptorId, FeatureVector};
use crate::error::{Error, Result};
use crate::imaging::{rgb_to_ycbcr, RasterImage};

/// Zigzag traversal of an `n`×`n` coefficient grid as (row, col) pairs,
/// low to high frequency.
pub fn zigzag_order(n: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n).saturating_sub(1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 1 {
            for row in lo..=hi {
                order.push((row, s - row));
            }
        } else {
            for row in (lo..=hi).rev() {
                order.push((row, s - row));
            }
        }
    }
    order
}

/// Orthonormal 2-D type-II DCT of a square row-major plane.
pub fn dct2(plane: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(plane.len(), n * n);
    let nf = n as f64;
    // basis[k][x] = alpha(k) cos((2x+1) k pi / 2n)
    let basis: Vec<f64> = (0..n)
        .flat_map(|k| {
            let alpha = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            (0..n).map(move |x| {
                alpha * ((2 * x + 1) as f64 * k as f64 * std::f64::consts::PI / (2.0 * nf)).cos()
            })
        })
        .collect();
    // rows first, then columns
    let mut tmp = vec![0.0; n * n];
    for r in 0..n {
        for v in 0..n {
            tmp[r * n + v] = (0..n).map(|c| plane[r * n + c] * basis[v * n + c]).sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            out[u * n + v] = (0..n).map(|r| tmp[r * n + v] * basis[u * n + r]).sum();
        }
    }
    out
}

/// Mean RGB of each of `grid`² near-equal rectangles, row-major.
fn block_means(img: &RasterImage, grid: usize) -> Vec<[f64; 3]> {
    let (w, h) = (img.width(), img.height());
    let mut means = Vec::with_capacity(grid * grid);
    for by in 0..grid {
        let (y0, y1) = (by * h / grid, (by + 1) * h / grid);
        for bx in 0..grid {
            let (x0, x1) = (bx * w / grid, (bx + 1) * w / grid);
            let mut acc = [0u64; 3];
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = img.pixel(x, y);
                    for c in 0..3 {
                        acc[c] += u64::from(p[c]);
                    }
                }
            }
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            means.push(acc.map(|s| s as f64 / n));
        }
    }
    means
}

pub fn extract_color_layout(img: &RasterImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    let grid = cfg.cl_grid;
    if img.width() < grid || img.height() < grid {
        return Err(Error::extraction(
            "CL",
            format!("image {}x{} smaller than {grid}x{grid} grid", img.width(), img.height()),
        ));
    }
    let ycc: Vec<_> = block_means(img, grid).into_iter().map(rgb_to_ycbcr).collect();
    let planes = [
        ycc.iter().map(|c| c.y).collect::<Vec<_>>(),
        ycc.iter().map(|c| c.cb).collect(),
        ycc.iter().map(|c| c.cr).collect(),
    ];
    let zigzag = zigzag_order(grid);
    let mut values = Vec::with_capacity(cfg.dimension(DescriptorId::ColorLayout));
    for (plane, &keep) in planes.iter().zip(&cfg.cl_coeffs) {
        let coeffs = dct2(plane, grid);
        values.extend(zigzag.iter().take(keep).map(|&(r, c)| coeffs[r * grid + c]));
    }
    Ok(FeatureVector::new(DescriptorId::ColorLayout, values, img.id))
}
