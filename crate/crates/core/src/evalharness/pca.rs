use nalgebra::{DMatrix, SymmetricEigen};

use crate::descriptors::FeatureVector;
use crate::error::{Error, Result};

/// Two-component principal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// Per input vector, in input order.
    pub coords: Vec<[f64; 2]>,
    /// Variance along each component, non-increasing.
    pub explained_variance: [f64; 2],
    /// Share of the total variance along each component.
    pub explained_ratio: [f64; 2],
    /// Unit eigenvectors, each with its largest-magnitude entry positive.
    pub components: [Vec<f64>; 2],
    pub mean: Vec<f64>,
}

/// Projects mean-centred vectors onto the top two eigenvectors of their
/// sample covariance.
pub fn pca_project(vectors: &[FeatureVector]) -> Result<PcaProjection> {
    let n = vectors.len();
    if n < 3 {
        return Err(Error::DegenerateProjection(format!("need at least 3 vectors, got {n}")));
    }
    let d = vectors[0].dim();
    if d < 2 {
        return Err(Error::DegenerateProjection(format!("need dimension at least 2, got {d}")));
    }
    if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: v.dim(),
        });
    }
    let data = DMatrix::from_fn(n, d, |i, j| vectors[i].values[j]);
    let mean: Vec<f64> = (0..d).map(|j| data.column(j).mean()).collect();
    let centred = DMatrix::from_fn(n, d, |i, j| data[(i, j)] - mean[j]);
    let cov = (centred.transpose() * &centred) / (n - 1) as f64;
    let total: f64 = cov.trace();
    if !(total > 0.0) {
        return Err(Error::DegenerateProjection("data has zero variance".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<(f64, usize, Vec<f64>)> = (0..d)
        .map(|c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let lead = argmax_abs(&v);
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (eig.eigenvalues[c], lead, v)
        })
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let top = order[0].0;
    let floor = top.abs() * 1e-12;
    let clean = |l: f64| if l <= floor { 0.0 } else { l };
    let explained_variance = [clean(order[0].0), clean(order[1].0)];
    let components = [order[0].2.clone(), order[1].2.clone()];
    let coords = (0..n)
        .map(|i| {
            let row = centred.row(i);
            let dot = |c: &[f64]| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [dot(&components[0]), dot(&components[1])]
        })
        .collect();
    Ok(PcaProjection {
        coords,
        explained_variance,
        explained_ratio: explained_variance.map(|v| v / total),
        components,
        mean,
    })
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}
