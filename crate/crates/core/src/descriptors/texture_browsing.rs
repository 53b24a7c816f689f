use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{DescriptorConfig, DescriptorId, FeatureVector};
use crate::error::{Error, Result};
use crate::imaging::RasterImage;

const MIN_SIDE: usize = 32;
const FINEST_FREQUENCY: f64 = 0.25;
/// Spatial sigma times center frequency for a one-octave half-magnitude
/// bandwidth: 3·sqrt(2 ln 2) / (2π).
const SIGMA_TIMES_FREQUENCY: f64 = 0.562_194_242_8;
const REGULARITY_CAP: f64 = 4.0;
const ZERO_ENERGY: f64 = 1e-9;

/// Geometry of the Gabor filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GaborBank {
    pub orientations: usize,
    pub scales: usize,
}

impl GaborBank {
    pub fn from_config(cfg: &DescriptorConfig) -> Self {
        GaborBank {
            orientations: cfg.tb_orientations,
            scales: cfg.tb_scales,
        }
    }

    /// Center frequency in cycles/pixel; halves with each scale.
    pub fn frequency(&self, scale: usize) -> f64 {
        FINEST_FREQUENCY / f64::from(1u32 << scale)
    }

    pub fn sigma(&self, scale: usize) -> f64 {
        SIGMA_TIMES_FREQUENCY / self.frequency(scale)
    }

    /// Orientation angle in radians, evenly spread over a half turn.
    pub fn angle(&self, orientation: usize) -> f64 {
        orientation as f64 * PI / self.orientations as f64
    }
}

/// Complex Gabor kernel value at offset (dx, dy), normalized so the peak of
/// its frequency response is 1.
pub fn gabor_kernel(bank: &GaborBank, orientation: usize, scale: usize, dx: f64, dy: f64) -> Complex64 {
    let sigma = bank.sigma(scale);
    let f = bank.frequency(scale);
    let theta = bank.angle(orientation);
    let envelope = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma);
    let phase = 2.0 * PI * f * (dx * theta.cos() + dy * theta.sin());
    Complex64::from_polar(envelope, phase)
}

/// Signed offset of index `i` on a circular axis of length `n`.
#[inline]
fn wrap(i: usize, n: usize) -> f64 {
    if i < n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

struct Plans {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Kernel spectra, indexed `orientation * scales + scale`.
    kernels: Vec<Vec<Complex64>>,
}

type PlanKey = (usize, usize, GaborBank);

fn plans_for(w: usize, h: usize, bank: GaborBank) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().unwrap().get(&(w, h, bank)) {
        return Arc::clone(p);
    }
    let mut planner = FftPlanner::new();
    let mut plans = Plans {
        row_fwd: planner.plan_fft_forward(w),
        row_inv: planner.plan_fft_inverse(w),
        col_fwd: planner.plan_fft_forward(h),
        col_inv: planner.plan_fft_inverse(h),
        kernels: Vec::with_capacity(bank.orientations * bank.scales),
    };
    for o in 0..bank.orientations {
        for s in 0..bank.scales {
            let mut k: Vec<Complex64> = (0..h)
                .flat_map(|y| (0..w).map(move |x| (x, y)))
                .map(|(x, y)| gabor_kernel(&bank, o, s, wrap(x, w), wrap(y, h)))
                .collect();
            fft2(&mut k, w, h, &plans.row_fwd, &plans.col_fwd);
            plans.kernels.push(k);
        }
    }
    let plans = Arc::new(plans);
    let mut guard = cache.lock().unwrap();
    if guard.len() >= 32 {
        guard.clear();
    }
    guard.insert((w, h, bank), Arc::clone(&plans));
    plans
}

fn transpose(data: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

/// In-place 2-D transform (unnormalized) of a row-major `w`×`h` grid.
fn fft2(data: &mut [Complex64], w: usize, h: usize, rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
    rows.process(data);
    let mut t = transpose(data, w, h);
    cols.process(&mut t);
    data.copy_from_slice(&transpose(&t, h, w));
}

/// Mean-removed luminance, box-downsampled so the longer side is at most
/// `max_side`.
fn analysis_luminance(img: &RasterImage, max_side: usize) -> (Vec<f64>, usize, usize) {
    let factor = img.width().max(img.height()).div_ceil(max_side).max(1);
    let (w, h) = (img.width() / factor, img.height() / factor);
    let mut lum = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for yy in y * factor..(y + 1) * factor {
                for xx in x * factor..(x + 1) * factor {
                    let [r, g, b] = img.pixel(xx, yy).map(f64::from);
                    acc += 0.299 * r + 0.587 * g + 0.114 * b;
                }
            }
            lum[y * w + x] = acc / (factor * factor) as f64;
        }
    }
    let mean = lum.iter().sum::<f64>() / lum.len() as f64;
    lum.iter_mut().for_each(|v| *v -= mean);
    (lum, w, h)
}

/// Mean response magnitude of every filter over a zero-mean luminance plane,
/// as an `orientations`×`scales` row-major matrix. Convolution is circular.
pub fn gabor_energy(lum: &[f64], w: usize, h: usize, bank: &GaborBank) -> Vec<f64> {
    let plans = plans_for(w, h, *bank);
    let mut spectrum: Vec<Complex64> = lum.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut spectrum, w, h, &plans.row_fwd, &plans.col_fwd);
    let n = (w * h) as f64;
    plans
        .kernels
        .iter()
        .map(|kernel| {
            let mut prod: Vec<Complex64> = spectrum.iter().zip(kernel).map(|(a, b)| a * b).collect();
            fft2(&mut prod, w, h, &plans.row_inv, &plans.col_inv);
            prod.iter().map(|c| c.norm()).sum::<f64>() / (n * n)
        })
        .collect()
}

fn peak_sharpness(marginal: &[f64]) -> f64 {
    let mean = marginal.iter().sum::<f64>() / marginal.len() as f64;
    let max = marginal.iter().copied().fold(f64::MIN, f64::max);
    (max / mean).clamp(0.0, REGULARITY_CAP)
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

pub fn extract_texture_browsing(img: &RasterImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    if img.width() < MIN_SIDE || img.height() < MIN_SIDE {
        return Err(Error::extraction(
            "TB",
            format!("image {}x{} smaller than {MIN_SIDE}x{MIN_SIDE}", img.width(), img.height()),
        ));
    }
    let bank = GaborBank::from_config(cfg);
    let max_side = cfg.tb_max_side.max(MIN_SIDE);
    let (lum, w, h) = analysis_luminance(img, max_side);
    let energy = gabor_energy(&lum, w, h, &bank);

    let (no, ns) = (bank.orientations, bank.scales);
    let by_orientation: Vec<f64> = (0..no).map(|o| energy[o * ns..(o + 1) * ns].iter().sum()).collect();
    let by_scale: Vec<f64> = (0..ns).map(|s| (0..no).map(|o| energy[o * ns + s]).sum()).collect();

    let mut values = Vec::with_capacity(2 + no + ns);
    if energy.iter().sum::<f64>() < ZERO_ENERGY {
        values.extend([0.0, 0.0]);
        values.extend(std::iter::repeat(1.0 / no as f64).take(no));
        values.extend(std::iter::repeat(1.0 / ns as f64).take(ns));
    } else {
        values.push(peak_sharpness(&by_orientation));
        values.push(peak_sharpness(&by_scale));
        values.extend(normalized(&by_orientation));
        values.extend(normalized(&by_scale));
    }
    Ok(FeatureVector::new(DescriptorId::TextureBrowsing, values, img.id))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct circular convolution with an independently written kernel.
    fn energy_oracle(lum: &[f64], w: usize, h: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for o in 0..6 {
            let theta = o as f64 * PI / 6.0;
            for s in 0..4 {
                let f = 0.25 / 2f64.powi(s);
                let sigma = 0.5621942428 / f;
                let kernel = |dx: f64, dy: f64| {
                    let g = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma);
                    let ph = 2.0 * PI * f * (dx * theta.cos() + dy * theta.sin());
                    (g * ph.cos(), g * ph.sin())
                };
                let signed = |d: isize, n: usize| {
                    let m = d.rem_euclid(n as isize) as usize;
                    if m < n / 2 { m as f64 } else { m as f64 - n as f64 }
                };
                // table[dy][dx] for every circular offset
                let table: Vec<(f64, f64)> = (0..h)
                    .flat_map(|dy| (0..w).map(move |dx| (dx, dy)))
                    .map(|(dx, dy)| kernel(signed(dx as isize, w), signed(dy as isize, h)))
                    .collect();
                let mut total = 0.0;
                for y in 0..h {
                    for x in 0..w {
                        let (mut re, mut im) = (0.0, 0.0);
                        for yy in 0..h {
                            let dy = (y + h - yy) % h;
                            for xx in 0..w {
                                let dx = (x + w - xx) % w;
                                let (kr, ki) = table[dy * w + dx];
                                re += lum[yy * w + xx] * kr;
                                im += lum[yy * w + xx] * ki;
                            }
                        }
                        total += (re * re + im * im).sqrt();
                    }
                }
                out.push(total / (w * h) as f64);
            }
        }
        out
    }

    fn grating(side: usize, freq: f64) -> RasterImage {
        RasterImage::from_fn(side, side, |x, _| {
            let v = 127.5 + 127.5 * (2.0 * PI * freq * x as f64).cos();
            [v.round() as u8; 3]
        })
        .unwrap()
    }

    #[test]
    fn fft_energy_matches_direct_convolution() {
        let img = RasterImage::from_fn(32, 32, |x, y| [((x * 37 + y * 11) % 256) as u8, (x * 8) as u8, (y * 8) as u8]).unwrap();
        let (lum, w, h) = analysis_luminance(&img, 256);
        let bank = GaborBank { orientations: 6, scales: 4 };
        let fast = gabor_energy(&lum, w, h, &bank);
        let slow = energy_oracle(&lum, w, h);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn vertical_grating_direction_and_scale() {
        let img = grating(64, 0.25);
        let (lum, w, h) = analysis_luminance(&img, 256);
        let oracle = energy_oracle(&lum, w, h);
        let fv = extract_texture_browsing(&img, &DescriptorConfig::default()).unwrap();
        let dir = &fv.values[2..8];
        let coarse = &fv.values[8..12];
        let argmax = |v: &[f64]| v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax(dir), 0);
        assert_eq!(argmax(coarse), 0);
        let oracle_dir: Vec<f64> = (0..6).map(|o| oracle[o * 4..o * 4 + 4].iter().sum()).collect();
        let oracle_scale: Vec<f64> = (0..4).map(|s| (0..6).map(|o| oracle[o * 4 + s]).sum()).collect();
        assert_eq!(argmax(&oracle_dir), 0);
        assert_eq!(argmax(&oracle_scale), 0);
    }

    #[test]
    fn uniform_image_fallback() {
        let img = RasterImage::uniform(40, 40, [33, 99, 200]).unwrap();
        let fv = extract_texture_browsing(&img, &DescriptorConfig::default()).unwrap();
        assert_eq!(&fv.values[..2], &[0.0, 0.0]);
        assert!(fv.values[2..8].iter().all(|&v| v == 1.0 / 6.0));
        assert!(fv.values[8..].iter().all(|&v| v == 0.25));
    }

    #[test]
    fn groups_sum_to_one() {
        let img = RasterImage::from_fn(50, 70, |x, y| [((x * y) % 256) as u8, (x * 3) as u8, (y * 2) as u8]).unwrap();
        let fv = extract_texture_browsing(&img, &DescriptorConfig::default()).unwrap();
        assert!((fv.values[2..8].iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((fv.values[8..12].iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(fv.values[..2].iter().all(|r| (0.0..=4.0).contains(r)));
    }

    #[test]
    fn large_images_are_downsampled() {
        let img = RasterImage::uniform(600, 300, [1, 2, 3]).unwrap();
        let (_, w, h) = analysis_luminance(&img, 256);
        assert_eq!((w, h), (200, 100));
    }

    #[test]
    fn undersized_errors() {
        let img = RasterImage::uniform(31, 64, [0; 3]).unwrap();
        assert!(extract_texture_browsing(&img, &DescriptorConfig::default()).is_err());
    }
}
