use super::{DescriptorConfig, DescriptorId, FeatureVector};
use crate::error::{Error, Result};
use crate::imaging::{linear_rgb_to_xyz, srgb_to_linear, xyz_to_uv, RasterImage, Uv, Xyz};

/// One isotemperature line: reciprocal temperature (mired), the point where
/// it crosses the Planckian locus in CIE 1960 (u, v), and its slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotemperatureLine {
    pub mired: f64,
    pub u: f64,
    pub v: f64,
    pub slope: f64,
}

const fn line(mired: f64, u: f64, v: f64, slope: f64) -> IsotemperatureLine {
    IsotemperatureLine { mired, u, v, slope }
}

/// Robertson's 31 isotemperature lines, 0 to 600 mired.
pub const ISOTEMPERATURE_LINES: [IsotemperatureLine; 31] = [
    line(0.0, 0.18006, 0.26352, -0.24341),
    line(10.0, 0.18066, 0.26589, -0.25479),
    line(20.0, 0.18133, 0.26846, -0.26876),
    line(30.0, 0.18208, 0.27119, -0.28539),
    line(40.0, 0.18293, 0.27407, -0.30470),
    line(50.0, 0.18388, 0.27709, -0.32675),
    line(60.0, 0.18494, 0.28021, -0.35156),
    line(70.0, 0.18611, 0.28342, -0.37915),
    line(80.0, 0.18740, 0.28668, -0.40955),
    line(90.0, 0.18880, 0.28997, -0.44278),
    line(100.0, 0.19032, 0.29326, -0.47888),
    line(125.0, 0.19462, 0.30141, -0.58204),
    line(150.0, 0.19962, 0.30921, -0.70471),
    line(175.0, 0.20525, 0.31647, -0.84901),
    line(200.0, 0.21142, 0.32312, -1.0182),
    line(225.0, 0.21807, 0.32909, -1.2168),
    line(250.0, 0.22511, 0.33439, -1.4512),
    line(275.0, 0.23247, 0.33904, -1.7298),
    line(300.0, 0.24010, 0.34308, -2.0637),
    line(325.0, 0.24792, 0.34655, -2.4681),
    line(350.0, 0.25591, 0.34951, -2.9641),
    line(375.0, 0.26400, 0.35200, -3.5814),
    line(400.0, 0.27218, 0.35407, -4.3633),
    line(425.0, 0.28039, 0.35577, -5.3762),
    line(450.0, 0.28863, 0.35714, -6.7262),
    line(475.0, 0.29685, 0.35823, -8.5955),
    line(500.0, 0.30505, 0.35907, -11.324),
    line(525.0, 0.31320, 0.35968, -15.628),
    line(550.0, 0.32129, 0.36011, -23.325),
    line(575.0, 0.32931, 0.36038, -40.770),
    line(600.0, 0.33724, 0.36051, -116.45),
];

/// Hottest reportable temperature: the first line with finite temperature.
pub const MAX_CCT: f64 = 1e6 / 10.0;
pub const MIN_CCT: f64 = 1e6 / 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CctEstimate {
    pub kelvin: f64,
    /// The chromaticity fell outside the tabulated range and the result was
    /// clamped to an end of the table.
    pub clamped: bool,
}

/// Correlated color temperature by interpolating reciprocal temperature
/// between the two adjacent isotemperature lines whose signed distances to
/// `uv` change sign.
pub fn cct_from_uv(uv: Uv) -> CctEstimate {
    let signed_distance = |l: &IsotemperatureLine| {
        ((uv.v - l.v) - l.slope * (uv.u - l.u)) / (1.0 + l.slope * l.slope).sqrt()
    };
    let to_kelvin = |mired: f64| (1e6 / mired).min(MAX_CCT);

    let mut prev = signed_distance(&ISOTEMPERATURE_LINES[0]);
    if prev == 0.0 {
        return CctEstimate { kelvin: MAX_CCT, clamped: true };
    }
    for pair in ISOTEMPERATURE_LINES.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let d = signed_distance(hi);
        if d == 0.0 {
            return CctEstimate { kelvin: to_kelvin(hi.mired), clamped: false };
        }
        if (prev < 0.0) != (d < 0.0) {
            let p = prev / (prev - d);
            let mired = lo.mired + p * (hi.mired - lo.mired);
            return CctEstimate { kelvin: to_kelvin(mired), clamped: false };
        }
        prev = d;
    }
    let first = signed_distance(&ISOTEMPERATURE_LINES[0]).abs();
    let kelvin = if first < prev.abs() { MAX_CCT } else { MIN_CCT };
    CctEstimate { kelvin, clamped: true }
}

pub fn cct_from_xyz(xyz: Xyz) -> Result<CctEstimate> {
    Ok(cct_from_uv(xyz_to_uv(xyz)?))
}

/// Value at percentile `p` (0..=100) by nearest rank on `values`, which is
/// reordered in the process.
fn percentile(values: &mut [f64], p: f64) -> f64 {
    let idx = ((p / 100.0) * (values.len() - 1) as f64).round() as usize;
    *values.select_nth_unstable_by(idx, f64::total_cmp).1
}

pub fn extract_color_temperature(img: &RasterImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    let lut: Vec<f64> = (0..=255u8).map(srgb_to_linear).collect();
    let xyz: Vec<Xyz> = img
        .pixels()
        .iter()
        .map(|p| linear_rgb_to_xyz(p.map(|c| lut[usize::from(c)])))
        .collect();
    // zero-luminance pixels carry no chromaticity
    let mut lum: Vec<f64> = xyz.iter().map(|c| c.y).filter(|&y| y > 0.0).collect();
    if lum.is_empty() {
        return Err(Error::extraction("CT", "no pixel with positive luminance"));
    }
    let lo = percentile(&mut lum, cfg.ct_low_percentile);
    let hi = percentile(&mut lum, cfg.ct_high_percentile);

    let mut acc = Xyz { x: 0.0, y: 0.0, z: 0.0 };
    let mut kept = 0usize;
    for c in xyz.iter().filter(|c| c.y > 0.0 && c.y >= lo && c.y <= hi) {
        acc.x += c.x;
        acc.y += c.y;
        acc.z += c.z;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::extraction("CT", "luminance band filtered out every pixel"));
    }
    let n = kept as f64;
    let mean = Xyz { x: acc.x / n, y: acc.y / n, z: acc.z / n };
    let est = cct_from_xyz(mean)?;
    if est.clamped {
        log::warn!(
            "image {}: chromaticity outside the isotemperature table, CCT clamped to {:.0} K",
            img.id,
            est.kelvin
        );
    }
    Ok(FeatureVector::new(DescriptorId::ColorTemperature, vec![est.kelvin], img.id))
}
