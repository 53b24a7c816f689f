use std::path::Path;

use super::DescriptorId;
use crate::error::{Error, Result};

/// Extractor parameters. Loadable from a `key = value` text file; keys not
/// present keep their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorConfig {
    /// Color Layout blocks per side.
    pub cl_grid: usize,
    /// Retained zigzag coefficients for (Y, Cb, Cr).
    pub cl_coeffs: [usize; 3],
    /// Retained Haar coefficients out of the 256-bin HSV histogram.
    pub sc_out: usize,
    /// Color Structure window side.
    pub cs_window: usize,
    /// Desired edge-histogram blocks per sub-image.
    pub eh_blocks: usize,
    /// Edge strength threshold.
    pub eh_threshold: f64,
    /// Luminance band kept by Color Temperature, as percentiles.
    pub ct_low_percentile: f64,
    pub ct_high_percentile: f64,
    pub tb_orientations: usize,
    pub tb_scales: usize,
    /// Longest side of the Texture Browsing analysis raster; larger images
    /// are box-downsampled by an integer factor first.
    pub tb_max_side: usize,
}

pub const SC_BINS: usize = 256;
pub const CS_BINS: usize = 64;

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            cl_grid: 8,
            cl_coeffs: [6, 3, 3],
            sc_out: 64,
            cs_window: 8,
            eh_blocks: 64,
            eh_threshold: 11.0,
            ct_low_percentile: 5.0,
            ct_high_percentile: 95.0,
            tb_orientations: 6,
            tb_scales: 4,
            tb_max_side: 256,
        }
    }
}

impl DescriptorConfig {
    pub fn dimension(&self, id: DescriptorId) -> usize {
        match id {
            DescriptorId::ColorLayout => self.cl_coeffs.iter().sum(),
            DescriptorId::ScalableColor => self.sc_out,
            DescriptorId::ColorStructure => CS_BINS,
            DescriptorId::ColorTemperature => 1,
            DescriptorId::EdgeHistogram => 150,
            DescriptorId::TextureBrowsing => 2 + self.tb_orientations + self.tb_scales,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cl_grid", self.cl_grid),
            ("sc_out", self.sc_out),
            ("cs_window", self.cs_window),
            ("eh_blocks", self.eh_blocks),
            ("tb_orientations", self.tb_orientations),
            ("tb_scales", self.tb_scales),
            ("tb_max_side", self.tb_max_side),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.cl_coeffs.iter().any(|&c| c == 0) {
            return Err(Error::Config("cl_coeffs must be positive".into()));
        }
        if self.cl_coeffs.iter().any(|&c| c > self.cl_grid * self.cl_grid) {
            return Err(Error::Config("cl_coeffs exceed the number of DCT coefficients".into()));
        }
        if self.sc_out > SC_BINS {
            return Err(Error::Config(format!("sc_out must be at most {SC_BINS}")));
        }
        if !(self.eh_threshold >= 0.0) {
            return Err(Error::Config("eh_threshold must be non-negative".into()));
        }
        let (lo, hi) = (self.ct_low_percentile, self.ct_high_percentile);
        if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo > hi {
            return Err(Error::Config(format!("invalid luminance band [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Parses `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = DescriptorConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what} '{value}'", lineno + 1));
            let int = || value.parse::<usize>().map_err(|_| bad(key));
            let real = || value.parse::<f64>().map_err(|_| bad(key));
            match key {
                "cl_grid" => cfg.cl_grid = int()?,
                "cl_coeffs" => {
                    let parts: Vec<usize> = value
                        .split(',')
                        .map(|p| p.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(key))?;
                    cfg.cl_coeffs = parts.try_into().map_err(|_| bad(key))?;
                }
                "sc_bins" => {
                    if int()? != SC_BINS {
                        return Err(bad("sc_bins (fixed at 256)"));
                    }
                }
                "sc_out" => cfg.sc_out = int()?,
                "cs_window" => cfg.cs_window = int()?,
                "cs_bins" => {
                    if int()? != CS_BINS {
                        return Err(bad("cs_bins (fixed at 64)"));
                    }
                }
                "eh_blocks" => cfg.eh_blocks = int()?,
                "eh_threshold" => cfg.eh_threshold = real()?,
                "ct_low_percentile" => cfg.ct_low_percentile = real()?,
                "ct_high_percentile" => cfg.ct_high_percentile = real()?,
                "tb_orientations" => cfg.tb_orientations = int()?,
                "tb_scales" => cfg.tb_scales = int()?,
                "tb_max_side" => cfg.tb_max_side = int()?,
                other => {
                    return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1)))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
