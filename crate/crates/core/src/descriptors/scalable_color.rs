use super::config::SC_BINS;
use super::{DescriptorConfig, DescriptorId, FeatureVector};
use crate::error::Result;
use crate::imaging::{rgb_to_hsv, RasterImage};

const HUE_LEVELS: usize = 16;
const SAT_LEVELS: usize = 4;
const VAL_LEVELS: usize = 4;

#[inline]
fn level(x: f64, levels: usize) -> usize {
    ((x * levels as f64) as usize).min(levels - 1)
}

/// Normalized 256-bin HSV histogram, bin = h·16 + s·4 + v with uniform edges.
pub fn hsv_histogram(img: &RasterImage) -> Vec<f64> {
    let mut counts = vec![0u64; SC_BINS];
    for &p in img.pixels() {
        let hsv = rgb_to_hsv(p);
        let h = level(hsv.h / 360.0, HUE_LEVELS);
        let s = level(hsv.s, SAT_LEVELS);
        let v = level(hsv.v, VAL_LEVELS);
        counts[h * SAT_LEVELS * VAL_LEVELS + s * VAL_LEVELS + v] += 1;
    }
    let total = img.pixels().len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// Full 1-D Haar cascade with the sum-preserving convention (a+b, a−b),
/// recursing on the sums. Output layout is coarse to fine:
/// `[total, d(1), d(2)×2, d(4)×4, ...]`. Length must be a power of two.
pub fn haar_cascade(input: &[f64]) -> Vec<f64> {
    let n = input.len();
    assert!(n.is_power_of_two(), "Haar cascade needs a power-of-two length");
    let mut out = input.to_vec();
    let mut scratch = vec![0.0; n];
    let mut len = n;
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (out[2 * i], out[2 * i + 1]);
            scratch[i] = a + b;
            scratch[half + i] = a - b;
        }
        out[..len].copy_from_slice(&scratch[..len]);
        len = half;
    }
    out
}

pub fn extract_scalable_color(img: &RasterImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    let mut coeffs = haar_cascade(&hsv_histogram(img));
    coeffs.truncate(cfg.sc_out);
    Ok(FeatureVector::new(DescriptorId::ScalableColor, coeffs, img.id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_red_single_bin() {
        let img = RasterImage::uniform(10, 10, [255, 0, 0]).unwrap();
        let hist = hsv_histogram(&img);
        // h=0, s=3, v=3
        assert_eq!(hist[15], 1.0);
        assert_eq!(hist.iter().filter(|&&v| v > 0.0).count(), 1);
    }

    #[test]
    fn histogram_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let img = RasterImage::from_fn(37, 23, |_, _| rng.gen()).unwrap();
            let sum: f64 = hsv_histogram(&img).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dc_equals_total_mass() {
        let img = RasterImage::from_fn(20, 20, |x, y| [x as u8 * 10, y as u8 * 12, 77]).unwrap();
        let fv = extract_scalable_color(&img, &DescriptorConfig::default()).unwrap();
        assert!((fv.values[0] - 1.0).abs() < 1e-12);
        assert_eq!(fv.dim(), 64);
    }

    #[test]
    fn constant_prefix_has_zero_detail() {
        let mut h = vec![0.0; 256];
        h[..4].fill(0.25);
        let c = haar_cascade(&h);
        assert_eq!(c[0], 1.0);
        // finest details over pairs (0,1) and (2,3)
        assert_eq!(c[128], 0.0);
        assert_eq!(c[129], 0.0);
        // next level over (0..2, 2..4)
        assert_eq!(c[64], 0.0);
        // level 3 groups 0..4 against 4..8: all mass on the left
        assert_eq!(c[32], 1.0);
        assert_eq!(c.iter().filter(|&&v| v != 0.0).count(), 7);
    }

    #[test]
    fn haar_small_hand_case() {
        // [a,b,c,d] -> [a+b+c+d, (a+b)-(c+d), a-b, c-d]
        assert_eq!(haar_cascade(&[4.0, 2.0, 1.0, 1.0]), vec![8.0, 4.0, 2.0, 0.0]);
    }
}
