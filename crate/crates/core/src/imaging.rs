//! Image decoding and the color-space conversions used by the extractors.

use image::ImageFormat;

use crate::error::{Error, Result};

/// A decoded image: row-major RGB pixels at native resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
    /// Stable id assigned at ingestion.
    pub id: u64,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} grid",
                pixels.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
            id: 0,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn uniform(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Encodes the image as PNG.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, flat)
            .ok_or_else(|| Error::InvalidImage("raw buffer size".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Decode(e.to_string()))?;
        Ok(out.into_inner())
    }
}

/// Decodes a PNG or JPEG payload. Alpha is dropped and gray sources are
/// replicated to three equal channels.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    let format = image::guess_format(bytes)
        .map_err(|_| Error::UnsupportedFormat("unrecognized signature".into()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::UnsupportedFormat(format!("{format:?}")));
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Decode(format!("{format:?}: {e}")))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = rgb.pixels().map(|p| p.0).collect();
    RasterImage::new(w as usize, h as usize, pixels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YCbCr {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// HMMD carried as (hue, diff, sum); diff and sum on the 0..255 scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hmmd {
    pub hue: f64,
    pub diff: f64,
    pub sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xyz {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// CIE 1960 UCS chromaticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uv {
    pub u: f64,
    pub v: f64,
}

/// Full-range BT.601 with +128 chroma offset, clamped to `[0, 255]`.
pub fn rgb_to_ycbcr(rgb: [f64; 3]) -> YCbCr {
    let [r, g, b] = rgb;
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    YCbCr {
        y: y.clamp(0.0, 255.0),
        cb: cb.clamp(0.0, 255.0),
        cr: cr.clamp(0.0, 255.0),
    }
}

fn hue_of(r: f64, g: f64, b: f64, max: f64, min: f64) -> f64 {
    let d = max - min;
    if d == 0.0 {
        return 0.0;
    }
    let h = if max == r {
        60.0 * ((g - b) / d)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let h = if h < 0.0 { h + 360.0 } else { h };
    if h >= 360.0 {
        h - 360.0
    } else {
        h
    }
}

/// Hexcone HSV. Hue is 0 for achromatic input.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> Hsv {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let s = if max == 0.0 { 0.0 } else { (max - min) / max };
    Hsv {
        h: hue_of(r, g, b, max, min),
        s,
        v: max / 255.0,
    }
}

/// Inverse hexcone, used by the synthetic generator and round-trip tests.
pub fn hsv_to_rgb(hsv: Hsv) -> [u8; 3] {
    let c = hsv.v * hsv.s;
    let hp = (hsv.h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = hsv.v - c;
    [r1, g1, b1].map(|ch| ((ch + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

pub fn rgb_to_hmmd(rgb: [u8; 3]) -> Hmmd {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    Hmmd {
        hue: hue_of(r, g, b, max, min),
        diff: max - min,
        sum: (max + min) / 2.0,
    }
}

/// sRGB transfer-function decoding of an 8-bit channel to linear `[0, 1]`.
#[inline]
pub fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Linear sRGB (D65) to CIE XYZ.
pub fn linear_rgb_to_xyz(lin: [f64; 3]) -> Xyz {
    let [r, g, b] = lin;
    Xyz {
        x: 0.4124564 * r + 0.3575761 * g + 0.1804375 * b,
        y: 0.2126729 * r + 0.7151522 * g + 0.0721750 * b,
        z: 0.0193339 * r + 0.1191920 * g + 0.9503041 * b,
    }
}

pub fn rgb_to_xyz(rgb: [u8; 3]) -> Xyz {
    linear_rgb_to_xyz(rgb.map(srgb_to_linear))
}

pub fn xyz_to_uv(xyz: Xyz) -> Result<Uv> {
    let denom = xyz.x + 15.0 * xyz.y + 3.0 * xyz.z;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegenerateChromaticity(denom));
    }
    Ok(Uv {
        u: 4.0 * xyz.x / denom,
        v: 6.0 * xyz.y / denom,
    })
}
