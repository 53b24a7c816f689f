//! The six evaluation functions: four Minkowski-family metrics and two
//! divergences, plus an empirical metric-axiom checker.

use std::fmt;
use std::str::FromStr;

use crate::descriptors::FeatureVector;
use crate::error::{Error, Result};

/// Floor applied to every component before a divergence is evaluated.
pub const DIVERGENCE_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvaluationFunctionId {
    CityBlock,
    Euclidean,
    Chebyshev,
    Canberra,
    KullbackLeibler,
    Jeffrey,
}

impl EvaluationFunctionId {
    pub const ALL: [EvaluationFunctionId; 6] = [
        EvaluationFunctionId::CityBlock,
        EvaluationFunctionId::Euclidean,
        EvaluationFunctionId::Chebyshev,
        EvaluationFunctionId::Canberra,
        EvaluationFunctionId::KullbackLeibler,
        EvaluationFunctionId::Jeffrey,
    ];

    pub fn code(self) -> &'static str {
        match self {
            EvaluationFunctionId::CityBlock => "CB",
            EvaluationFunctionId::Euclidean => "EU",
            EvaluationFunctionId::Chebyshev => "CH",
            EvaluationFunctionId::Canberra => "CA",
            EvaluationFunctionId::KullbackLeibler => "KU",
            EvaluationFunctionId::Jeffrey => "JF",
        }
    }

    pub fn is_metric(self) -> bool {
        !matches!(self, EvaluationFunctionId::KullbackLeibler | EvaluationFunctionId::Jeffrey)
    }

    /// Evaluates on raw slices of equal length. No validation.
    #[inline]
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self {
            EvaluationFunctionId::CityBlock => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
            EvaluationFunctionId::Euclidean => {
                x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }
            EvaluationFunctionId::Chebyshev => {
                x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            }
            EvaluationFunctionId::Canberra => x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let denom = a.abs() + b.abs();
                    if denom == 0.0 {
                        0.0
                    } else {
                        (a - b).abs() / denom
                    }
                })
                .sum(),
            EvaluationFunctionId::KullbackLeibler => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| kl_term(smooth(a), smooth(b)))
                .sum(),
            EvaluationFunctionId::Jeffrey => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| {
                    let (a, b) = (smooth(a), smooth(b));
                    (a - b) * (a / b).ln()
                })
                .sum(),
        }
    }
}

#[inline]
fn smooth(v: f64) -> f64 {
    if v < DIVERGENCE_EPSILON {
        DIVERGENCE_EPSILON
    } else {
        v
    }
}

/// One Kullback-Leibler summand over already-smoothed components.
#[inline]
pub fn kl_term(x: f64, y: f64) -> f64 {
    x * (x / y).ln()
}

impl fmt::Display for EvaluationFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for EvaluationFunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!("unknown evaluation function '{s}', expected one of cb,eu,ch,ca,ku,jf"))
            })
    }
}

/// Checks that two slices can be compared.
pub fn check_comparable(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Comparison(format!("dimension {} vs {}", x.len(), y.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::Comparison(format!("non-finite component {v}")));
    }
    Ok(())
}

/// Compares two feature vectors of the same descriptor and dimension.
///
/// KU over vectors that are not probability distributions can be negative;
/// the other five are always non-negative.
pub fn evaluate(id: EvaluationFunctionId, x: &FeatureVector, y: &FeatureVector) -> Result<f64> {
    if x.descriptor != y.descriptor {
        return Err(Error::Comparison(format!(
            "descriptor {} vs {}",
            x.descriptor, y.descriptor
        )));
    }
    check_comparable(&x.values, &y.values)?;
    Ok(id.distance(&x.values, &y.values))
}

/// Violation counts of the metric axioms over a sample of triples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub triples: usize,
    pub symmetry: usize,
    /// `d(x,x) != 0` or any negative distance.
    pub identity: usize,
    pub triangle: usize,
}

impl AxiomReport {
    pub fn is_metric(&self) -> bool {
        self.symmetry == 0 && self.identity == 0 && self.triangle == 0
    }
}

/// Relative tolerance on the triangle inequality and symmetry.
pub const AXIOM_TOLERANCE: f64 = 1e-9;

/// Counts axiom violations over sampled triples. The triangle inequality is
/// checked for all three arrangements of each triple.
pub fn check_metric_axioms<'a, I>(id: EvaluationFunctionId, samples: I) -> AxiomReport
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64], &'a [f64])>,
{
    let mut report = AxiomReport::default();
    let d = |a: &[f64], b: &[f64]| id.distance(a, b);
    let tol = |scale: f64| AXIOM_TOLERANCE * scale.abs().max(1.0);
    for (x, y, z) in samples {
        report.triples += 1;
        let (xy, yx) = (d(x, y), d(y, x));
        let (yz, zy) = (d(y, z), d(z, y));
        let (xz, zx) = (d(x, z), d(z, x));
        if [(xy, yx), (yz, zy), (xz, zx)].iter().any(|&(a, b)| (a - b).abs() > tol(a.max(b))) {
            report.symmetry += 1;
        }
        let selves = [d(x, x), d(y, y), d(z, z)];
        if selves.iter().any(|s| s.abs() > tol(0.0)) || [xy, yx, yz, zy, xz, zx].iter().any(|&v| v < 0.0) {
            report.identity += 1;
        }
        let broken = |direct: f64, a: f64, b: f64| direct > a + b + tol(a + b);
        if broken(xz, xy, yz) || broken(xy, xz, zy) || broken(yz, yx, xz) {
            report.triangle += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::DescriptorId;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use EvaluationFunctionId::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(DescriptorId::ScalableColor, v.to_vec(), 0)
    }

    #[test]
    fn table_examples() {
        let e = |id, a: &[f64], b: &[f64]| evaluate(id, &fv(a), &fv(b)).unwrap();
        assert_eq!(e(Euclidean, &[0.0, 0.0], &[3.0, 4.0]), 5.0);
        assert_eq!(e(Canberra, &[1.0, 0.0], &[0.0, 1.0]), 2.0);
        assert_eq!(e(Chebyshev, &[1.0, 5.0], &[4.0, 1.0]), 4.0);
        assert_eq!(e(CityBlock, &[1.0, 5.0], &[4.0, 1.0]), 7.0);
        assert_eq!(e(KullbackLeibler, &[0.5, 0.5], &[0.5, 0.5]), 0.0);
        let jf = e(Jeffrey, &[0.8, 0.2], &[0.2, 0.8]);
        assert!((jf - 1.2 * 4f64.ln()).abs() < 1e-12);
        assert!((jf - 1.6636).abs() < 1e-4);
    }

    #[test]
    fn canberra_zero_over_zero() {
        assert_eq!(Canberra.distance(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
        assert_eq!(Canberra.distance(&[0.0, 2.0], &[0.0, 1.0]), 1.0 / 3.0);
    }

    #[test]
    fn divergence_smoothing() {
        // both below epsilon: term vanishes
        assert_eq!(KullbackLeibler.distance(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
        // x > 0, y = 0 stays finite
        let v = KullbackLeibler.distance(&[1.0], &[0.0]);
        assert!(v.is_finite() && (v - (1e10f64).ln()).abs() < 1e-9);
        // negative components are clamped like zeros
        assert_eq!(Jeffrey.distance(&[-3.0], &[0.0]), 0.0);
    }

    #[test]
    fn self_distance_is_zero() {
        let x = [0.3, 0.0001, 7.0, 1e-3];
        for id in EvaluationFunctionId::ALL {
            assert_eq!(id.distance(&x, &x), 0.0, "{id}");
        }
    }

    #[test]
    fn mismatches_rejected() {
        let a = fv(&[1.0, 2.0]);
        let b = fv(&[1.0]);
        assert!(matches!(evaluate(CityBlock, &a, &b), Err(Error::Comparison(_))));
        let c = FeatureVector::new(DescriptorId::ColorLayout, vec![1.0, 2.0], 0);
        assert!(evaluate(CityBlock, &a, &c).is_err());
        let nan = fv(&[f64::NAN, 0.0]);
        assert!(evaluate(CityBlock, &a, &nan).is_err());
    }

    #[test]
    fn kl_on_mirrored_pair_is_symmetric() {
        let x = [0.9, 0.1];
        let y = [0.1, 0.9];
        let fwd = KullbackLeibler.distance(&x, &y);
        let back = KullbackLeibler.distance(&y, &x);
        // 0.9 ln 9 + 0.1 ln(1/9) = 0.8 ln 9 in both directions
        assert!((fwd - 0.8 * 9f64.ln()).abs() < 1e-12);
        assert!((back - 0.8 * 9f64.ln()).abs() < 1e-12);
        let report = check_metric_axioms(KullbackLeibler, [(&x[..], &y[..], &y[..])]);
        assert_eq!(report.symmetry, 0);
        // an unbalanced pair breaks symmetry
        let (p, q) = ([0.9, 0.1], [0.5, 0.5]);
        assert!((KullbackLeibler.distance(&p, &q) - KullbackLeibler.distance(&q, &p)).abs() > 1e-3);
        let report = check_metric_axioms(KullbackLeibler, [(&p[..], &q[..], &q[..])]);
        assert_eq!(report.symmetry, 1);
    }

    #[test]
    fn metrics_pass_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let triples: Vec<[Vec<f64>; 3]> = (0..2000)
            .map(|_| [0; 3].map(|_| (0..12).map(|_| rng.gen_range(0.0..1.0)).collect()))
            .collect();
        for id in [CityBlock, Euclidean, Chebyshev, Canberra] {
            let r = check_metric_axioms(id, triples.iter().map(|[a, b, c]| (&a[..], &b[..], &c[..])));
            assert!(r.is_metric(), "{id}: {r:?}");
            assert_eq!(r.triples, 2000);
        }
        let jf = check_metric_axioms(Jeffrey, triples.iter().map(|[a, b, c]| (&a[..], &b[..], &c[..])));
        assert_eq!(jf.symmetry, 0);
    }

    #[test]
    fn jeffrey_breaks_triangle_on_collinear_points() {
        let (x, y, z) = ([0.1], [0.2], [0.3]);
        let r = check_metric_axioms(Jeffrey, [(&x[..], &y[..], &z[..])]);
        assert_eq!(r.triangle, 1);
    }

    fn nonneg(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..100.0, n)
    }

    proptest! {
        #[test]
        fn minkowski_ordering((x, y) in (1usize..40).prop_flat_map(|n| (nonneg(n), nonneg(n)))) {
            let ch = Chebyshev.distance(&x, &y);
            let eu = Euclidean.distance(&x, &y);
            let cb = CityBlock.distance(&x, &y);
            prop_assert!(ch <= eu * (1.0 + 1e-12));
            prop_assert!(eu <= cb * (1.0 + 1e-12));
        }

        #[test]
        fn canberra_bounded_by_dimension((x, y) in (1usize..40).prop_flat_map(|n| (nonneg(n), nonneg(n)))) {
            prop_assert!(Canberra.distance(&x, &y) <= x.len() as f64 + 1e-12);
        }

        #[test]
        fn jeffrey_is_sum_of_both_kl((x, y) in (1usize..40).prop_flat_map(|n| (nonneg(n), nonneg(n)))) {
            let jf = Jeffrey.distance(&x, &y);
            let sum = KullbackLeibler.distance(&x, &y) + KullbackLeibler.distance(&y, &x);
            prop_assert!((jf - sum).abs() <= 1e-9 * jf.abs().max(1.0));
            prop_assert!(jf >= 0.0);
        }
    }

    #[test]
    fn parse_codes() {
        for id in EvaluationFunctionId::ALL {
            assert_eq!(id.code().to_lowercase().parse::<EvaluationFunctionId>().unwrap(), id);
        }
        let err = "xx".parse::<EvaluationFunctionId>().unwrap_err().to_string();
        assert!(err.contains("cb,eu,ch,ca,ku,jf"));
    }
}
