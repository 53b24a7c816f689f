//! Seeded generator for a labeled two-class image corpus.
//!
//! Fire images draw hues from a warm band with high saturation and value
//! laid out as a radial glow. Not-fire images draw from a disjoint cool band
//! and use one of three textures. Both share per-pixel noise. Colour alone
//! separates the classes; texture only partly does.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::featurestore::Label;
use crate::imaging::{hsv_to_rgb, Hsv, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TextureMode {
    Flat,
    Gradient,
    Stripes,
}

impl TextureMode {
    pub const ALL: [TextureMode; 3] = [TextureMode::Flat, TextureMode::Gradient, TextureMode::Stripes];

    pub fn as_str(self) -> &'static str {
        match self {
            TextureMode::Flat => "flat",
            TextureMode::Gradient => "gradient",
            TextureMode::Stripes => "stripes",
        }
    }
}

impl fmt::Display for TextureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TextureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown texture mode '{s}', expected flat, gradient or stripes")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub per_class: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Hue band in degrees, inclusive.
    pub fire_hue: (f64, f64),
    pub not_fire_hue: (f64, f64),
    /// Not-fire images cycle through these.
    pub modes: Vec<TextureMode>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            per_class: 200,
            seed: 0,
            width: 256,
            height: 256,
            fire_hue: (0.0, 60.0),
            not_fire_hue: (90.0, 270.0),
            modes: TextureMode::ALL.to_vec(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::Config("per-class count must be positive".into()));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::Config(format!("image size {}x{} below 16x16", self.width, self.height)));
        }
        for (lo, hi) in [self.fire_hue, self.not_fire_hue] {
            if !(0.0..=360.0).contains(&lo) || !(0.0..=360.0).contains(&hi) || lo > hi {
                return Err(Error::Config(format!("invalid hue band [{lo}, {hi}]")));
            }
        }
        let (a, b) = (self.fire_hue, self.not_fire_hue);
        if a.0 <= b.1 && b.0 <= a.1 {
            return Err(Error::Config("fire and not-fire hue bands overlap".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("at least one texture mode is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticImage {
    pub name: String,
    pub label: Label,
    /// `None` for fire images.
    pub mode: Option<TextureMode>,
    pub image: RasterImage,
}

fn image_rng(seed: u64, label: Label, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(label.wire()) << 32) | index as u64);
    rng
}

/// Pixel-level noise shared by both classes.
struct Noise {
    hue: Normal<f64>,
    sv: Normal<f64>,
}

impl Noise {
    fn new() -> Self {
        Noise {
            hue: Normal::new(0.0, 4.0).expect("valid sigma"),
            sv: Normal::new(0.0, 0.04).expect("valid sigma"),
        }
    }

    fn pixel(&self, rng: &mut ChaCha8Rng, h: f64, s: f64, v: f64, band: (f64, f64)) -> [u8; 3] {
        hsv_to_rgb(Hsv {
            h: (h + self.hue.sample(rng)).clamp(band.0, band.1),
            s: (s + self.sv.sample(rng)).clamp(0.0, 1.0),
            v: (v + self.sv.sample(rng)).clamp(0.0, 1.0),
        })
    }
}

fn fire_image(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<RasterImage> {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let band = spec.fire_hue;
    let hue_core = rng.gen_range(band.0..=band.1);
    let hue_edge = rng.gen_range(band.0..=hue_core);
    let (cx, cy) = (rng.gen_range(0.25..0.75) * w, rng.gen_range(0.25..0.75) * h);
    let radius = rng.gen_range(0.35..0.75) * w.hypot(h) / 2.0;
    let v_core = rng.gen_range(0.9..=1.0);
    let noise = Noise::new();
    RasterImage::from_fn(spec.width, spec.height, |x, y| {
        let t = ((x as f64 - cx).hypot(y as f64 - cy) / radius).min(1.0);
        let hue = hue_core + (hue_edge - hue_core) * t;
        noise.pixel(rng, hue, 0.7 + 0.3 * t, v_core * (1.0 - 0.35 * t), band)
    })
}

fn not_fire_image(spec: &SyntheticSpec, mode: TextureMode, rng: &mut ChaCha8Rng) -> Result<RasterImage> {
    let band = spec.not_fire_hue;
    let hue = rng.gen_range(band.0..=band.1);
    let s = rng.gen_range(0.3..0.9);
    let v = rng.gen_range(0.4..0.95);
    let theta = rng.gen_range(0.0..std::f64::consts::PI);
    let (dx, dy) = (theta.cos(), theta.sin());
    let span = (spec.width as f64 * dx.abs() + spec.height as f64 * dy.abs()).max(1.0);
    let period = rng.gen_range(6.0..24.0);
    let noise = Noise::new();
    RasterImage::from_fn(spec.width, spec.height, |x, y| {
        let along = x as f64 * dx + y as f64 * dy;
        let scale = match mode {
            TextureMode::Flat => 1.0,
            TextureMode::Gradient => 0.5 + 0.5 * (along / span + 0.5).clamp(0.0, 1.0),
            TextureMode::Stripes => {
                if (along / period).rem_euclid(1.0) < 0.5 {
                    1.0
                } else {
                    0.55
                }
            }
        };
        noise.pixel(rng, hue, s, v * scale, band)
    })
}

/// Renders one image. Deterministic in `(spec.seed, label, index)`.
pub fn generate_one(spec: &SyntheticSpec, label: Label, index: usize) -> Result<SyntheticImage> {
    let mut rng = image_rng(spec.seed, label, index);
    let (image, mode) = match label {
        Label::Fire => (fire_image(spec, &mut rng)?, None),
        Label::NotFire => {
            let mode = spec.modes[index % spec.modes.len()];
            (not_fire_image(spec, mode, &mut rng)?, Some(mode))
        }
        Label::Unlabeled => return Err(Error::Config("synthetic images are always labeled".into())),
    };
    Ok(SyntheticImage {
        name: format!("{label}_{index:05}.png"),
        label,
        mode,
        image,
    })
}

/// All images, fire first, with image ids 0, 1, 2, ... in that order.
pub fn generate(spec: &SyntheticSpec) -> Result<Vec<SyntheticImage>> {
    spec.validate()?;
    let jobs: Vec<(Label, usize)> = [Label::Fire, Label::NotFire]
        .into_iter()
        .flat_map(|l| (0..spec.per_class).map(move |i| (l, i)))
        .collect();
    jobs.par_iter()
        .enumerate()
        .map(|(id, &(label, i))| {
            let mut img = generate_one(spec, label, i)?;
            img.image = img.image.with_id(id as u64);
            Ok(img)
        })
        .collect()
}

/// Writes PNGs plus `manifest.csv` (path,label) into `dir`; returns the manifest path.
pub fn write_corpus(spec: &SyntheticSpec, dir: &Path) -> Result<PathBuf> {
    let images = generate(spec)?;
    std::fs::create_dir_all(dir)?;
    images
        .par_iter()
        .map(|img| Ok(std::fs::write(dir.join(&img.name), img.image.to_png()?)?))
        .collect::<Result<Vec<()>>>()?;
    let mut manifest = String::from("path,label\n");
    for img in &images {
        manifest.push_str(&format!("{},{}\n", img.name, img.label));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest)?;
    Ok(path)
}
