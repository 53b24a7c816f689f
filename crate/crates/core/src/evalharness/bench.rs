use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descriptors::{extract, DescriptorConfig, DescriptorId};
use crate::error::{Error, Result};
use crate::evalfuncs::EvaluationFunctionId;
use crate::imaging::RasterImage;

pub const DEFAULT_BENCH_DIM: usize = 256;

/// Vectors in the distance benchmark pool; pairs cycle through it.
const POOL: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorTiming {
    pub descriptor: DescriptorId,
    pub images: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

/// Wall-clock extraction time per image for each descriptor, measured on
/// the calling thread after one untimed warm-up pass.
pub fn bench_extractors(images: &[RasterImage], cfg: &DescriptorConfig) -> Result<Vec<ExtractorTiming>> {
    if images.is_empty() {
        return Err(Error::Config("benchmark needs at least one image".into()));
    }
    let mut out = Vec::with_capacity(DescriptorId::ALL.len());
    for id in DescriptorId::ALL {
        for img in images {
            black_box(extract(img, id, cfg)?);
        }
        let mut ms = Vec::with_capacity(images.len());
        for img in images {
            let t = Instant::now();
            black_box(extract(black_box(img), id, cfg)?);
            ms.push(t.elapsed().as_secs_f64() * 1e3);
        }
        let mean = ms.iter().sum::<f64>() / ms.len() as f64;
        let var = ms.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / ms.len() as f64;
        out.push(ExtractorTiming {
            descriptor: id,
            images: images.len(),
            mean_ms: mean,
            std_ms: var.sqrt(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTiming {
    pub ef: EvaluationFunctionId,
    pub evals: u64,
    pub dim: usize,
    pub seconds: f64,
    pub evals_per_sec: f64,
    /// Sum of every returned distance.
    pub checksum: f64,
}

/// Times `n_evals` evaluations of each function on random positive vectors.
pub fn bench_distances(n_evals: u64, dim: usize, seed: u64) -> Vec<DistanceTiming> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<Vec<f64>> = (0..POOL)
        .map(|_| (0..dim.max(1)).map(|_| rng.gen_range(1e-3..1.0)).collect())
        .collect();
    EvaluationFunctionId::ALL
        .into_iter()
        .map(|ef| {
            let t = Instant::now();
            let mut checksum = 0.0;
            for i in 0..n_evals as usize {
                let a = &pool[i % POOL];
                let b = &pool[(i * 7 + 1) % POOL];
                checksum += ef.distance(black_box(a), black_box(b));
            }
            let seconds = t.elapsed().as_secs_f64();
            DistanceTiming {
                ef,
                evals: n_evals,
                dim,
                seconds,
                evals_per_sec: n_evals as f64 / seconds.max(1e-12),
                checksum: black_box(checksum),
            }
        })
        .collect()
}
