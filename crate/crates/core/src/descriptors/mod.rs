//! The six feature extraction methods. Each is a pure map from a
//! [`RasterImage`] to a fixed-length [`FeatureVector`].

mod color_layout;
mod color_structure;
mod color_temperature;
mod config;
mod edge_histogram;
mod scalable_color;
mod texture_browsing;

use std::fmt;
use std::str::FromStr;

pub use color_layout::{dct2, extract_color_layout, zigzag_order};
pub use color_structure::{color_structure_subsampling, extract_color_structure, hmmd_cell};
pub use color_temperature::{
    cct_from_uv, cct_from_xyz, extract_color_temperature, CctEstimate, ISOTEMPERATURE_LINES,
};
pub use config::DescriptorConfig;
pub use edge_histogram::{edge_block_side, extract_edge_histogram, EdgeType, SEMI_LOCAL_GROUPS};
pub use scalable_color::{extract_scalable_color, haar_cascade, hsv_histogram};
pub use texture_browsing::{extract_texture_browsing, gabor_energy, gabor_kernel, GaborBank};

use crate::error::{Error, Result};
use crate::imaging::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DescriptorId {
    ColorLayout,
    ScalableColor,
    ColorStructure,
    ColorTemperature,
    EdgeHistogram,
    TextureBrowsing,
}

impl DescriptorId {
    pub const ALL: [DescriptorId; 6] = [
        DescriptorId::ColorLayout,
        DescriptorId::ScalableColor,
        DescriptorId::ColorStructure,
        DescriptorId::ColorTemperature,
        DescriptorId::EdgeHistogram,
        DescriptorId::TextureBrowsing,
    ];

    /// Two-letter acronym.
    pub fn code(self) -> &'static str {
        match self {
            DescriptorId::ColorLayout => "CL",
            DescriptorId::ScalableColor => "SC",
            DescriptorId::ColorStructure => "CS",
            DescriptorId::ColorTemperature => "CT",
            DescriptorId::EdgeHistogram => "EH",
            DescriptorId::TextureBrowsing => "TB",
        }
    }

    /// Numeric id used in the store header.
    pub fn wire_id(self) -> u16 {
        match self {
            DescriptorId::ColorLayout => 0,
            DescriptorId::ScalableColor => 1,
            DescriptorId::ColorStructure => 2,
            DescriptorId::ColorTemperature => 3,
            DescriptorId::EdgeHistogram => 4,
            DescriptorId::TextureBrowsing => 5,
        }
    }

    pub fn from_wire_id(id: u16) -> Option<Self> {
        Self::ALL.get(usize::from(id)).copied()
    }

    /// Output dimension under the default configuration.
    pub fn default_dimension(self) -> usize {
        DescriptorConfig::default().dimension(self)
    }

    pub fn is_color(self) -> bool {
        !matches!(self, DescriptorId::EdgeHistogram | DescriptorId::TextureBrowsing)
    }
}

impl fmt::Display for DescriptorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DescriptorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown descriptor '{s}', expected one of cl,sc,cs,ct,eh,tb")))
    }
}

/// A feature vector tagged with the extractor that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub descriptor: DescriptorId,
    pub values: Vec<f64>,
    pub image_id: u64,
}

impl FeatureVector {
    pub fn new(descriptor: DescriptorId, values: Vec<f64>, image_id: u64) -> Self {
        FeatureVector {
            descriptor,
            values,
            image_id,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Runs the extractor named by `id`.
pub fn extract(img: &RasterImage, id: DescriptorId, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    let fv = match id {
        DescriptorId::ColorLayout => extract_color_layout(img, cfg)?,
        DescriptorId::ScalableColor => extract_scalable_color(img, cfg)?,
        DescriptorId::ColorStructure => extract_color_structure(img, cfg)?,
        DescriptorId::ColorTemperature => extract_color_temperature(img, cfg)?,
        DescriptorId::EdgeHistogram => extract_edge_histogram(img, cfg)?,
        DescriptorId::TextureBrowsing => extract_texture_browsing(img, cfg)?,
    };
    debug_assert_eq!(fv.dim(), cfg.dimension(id));
    debug_assert!(fv.values.iter().all(|v| v.is_finite()));
    Ok(fv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured() -> RasterImage {
        RasterImage::from_fn(64, 48, |x, y| {
            [(x * 4) as u8, (y * 5) as u8, ((x * y) % 256) as u8]
        })
        .unwrap()
    }

    #[test]
    fn dimension_contract() {
        let cfg = DescriptorConfig::default();
        let img = textured();
        let expected = [12, 64, 64, 1, 150, 12];
        for (id, dim) in DescriptorId::ALL.into_iter().zip(expected) {
            assert_eq!(id.default_dimension(), dim);
            let fv = extract(&img, id, &cfg).unwrap();
            assert_eq!(fv.dim(), dim, "{id}");
            assert_eq!(fv.descriptor, id);
        }
    }

    #[test]
    fn uniform_gray_color_layout_has_no_ac() {
        let cfg = DescriptorConfig::default();
        let img = RasterImage::uniform(32, 32, [90, 90, 90]).unwrap();
        let fv = extract(&img, DescriptorId::ColorLayout, &cfg).unwrap();
        for (i, v) in fv.values.iter().enumerate() {
            if i != 0 && i != 6 && i != 9 {
                assert!(v.abs() < 1e-9, "coef {i} = {v}");
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = DescriptorConfig::default();
        let img = textured();
        for id in DescriptorId::ALL {
            let a = extract(&img, id, &cfg).unwrap();
            let b = extract(&img, id, &cfg).unwrap();
            let bits = |v: &FeatureVector| v.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn wire_ids_and_codes() {
        for id in DescriptorId::ALL {
            assert_eq!(DescriptorId::from_wire_id(id.wire_id()), Some(id));
            assert_eq!(id.code().to_lowercase().parse::<DescriptorId>().unwrap(), id);
        }
        assert!(DescriptorId::from_wire_id(6).is_none());
        assert!("xx".parse::<DescriptorId>().is_err());
    }
}
