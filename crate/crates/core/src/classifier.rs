//! IB1: label a query by majority vote over its k nearest labeled neighbours.

use rayon::prelude::*;

use crate::descriptors::FeatureVector;
use crate::error::{Error, Result};
use crate::evalfuncs::EvaluationFunctionId;
use crate::featurestore::{Collection, Label};

pub const DEFAULT_K: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub image_id: u64,
    /// Always `Fire` or `NotFire`.
    pub predicted: Label,
    /// Fraction of fire labels among the neighbours.
    pub score: f64,
    pub k_used: usize,
}

/// Classifies `query` against the labeled instances of `store`.
pub fn classify(
    store: &Collection,
    query: &FeatureVector,
    k: usize,
    ef: EvaluationFunctionId,
) -> Result<Classification> {
    classify_inner(store, query, k, ef, None)
}

/// As [`classify`], ignoring the stored instance with id `exclude`.
/// Used for leave-one-out scoring of a corpus against itself.
pub fn classify_excluding(
    store: &Collection,
    query: &FeatureVector,
    k: usize,
    ef: EvaluationFunctionId,
    exclude: u64,
) -> Result<Classification> {
    classify_inner(store, query, k, ef, Some(exclude))
}

fn classify_inner(
    store: &Collection,
    query: &FeatureVector,
    k: usize,
    ef: EvaluationFunctionId,
    exclude: Option<u64>,
) -> Result<Classification> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let keep = |i: &crate::featurestore::StoredInstance| i.label.is_labeled() && Some(i.image_id) != exclude;
    let available = store.instances().iter().filter(|i| keep(i)).count();
    if available < k {
        return Err(Error::InsufficientInstances { needed: k, available });
    }
    let hits = store.search(query, k, ef, keep)?;
    let fire = hits.neighbors.iter().filter(|n| n.label == Label::Fire).count();
    let predicted = match (2 * fire).cmp(&k) {
        std::cmp::Ordering::Greater => Label::Fire,
        std::cmp::Ordering::Less => Label::NotFire,
        std::cmp::Ordering::Equal => hits.neighbors[0].label,
    };
    Ok(Classification {
        image_id: query.image_id,
        predicted,
        score: fire as f64 / k as f64,
        k_used: k,
    })
}

/// Classifies every query in parallel; output order matches input order.
pub fn classify_batch(
    store: &Collection,
    queries: &[FeatureVector],
    k: usize,
    ef: EvaluationFunctionId,
) -> Vec<Result<Classification>> {
    queries.par_iter().map(|q| classify(store, q, k, ef)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::DescriptorId;
    use crate::featurestore::StoredInstance;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const D: DescriptorId = DescriptorId::ColorTemperature;

    fn fv(id: u64, x: f64) -> FeatureVector {
        FeatureVector::new(D, vec![x], id)
    }

    fn store(points: &[(u64, Label, f64)]) -> Collection {
        let mut c = Collection::new(D, 1);
        for &(id, label, x) in points {
            c.insert(StoredInstance::new(label, fv(id, x))).unwrap();
        }
        c
    }

    #[test]
    fn k1_takes_nearest_label() {
        let c = store(&[(1, Label::Fire, 0.0), (2, Label::NotFire, 5.0)]);
        let r = classify(&c, &fv(9, 1.0), 1, EvaluationFunctionId::Euclidean).unwrap();
        assert_eq!(r.predicted, Label::Fire);
        assert_eq!(r.score, 1.0);
        assert_eq!(r.k_used, 1);
        assert_eq!(r.image_id, 9);
    }

    #[test]
    fn majority_of_three() {
        let c = store(&[
            (1, Label::Fire, 0.0),
            (2, Label::Fire, 0.2),
            (3, Label::NotFire, 0.1),
            (4, Label::NotFire, 9.0),
        ]);
        let r = classify(&c, &fv(9, 0.0), 3, EvaluationFunctionId::CityBlock).unwrap();
        assert_eq!(r.predicted, Label::Fire);
        assert!((r.score - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn even_tie_goes_to_nearest() {
        let c = store(&[(1, Label::Fire, 0.1), (2, Label::NotFire, 0.5)]);
        let r = classify(&c, &fv(9, 0.0), 2, EvaluationFunctionId::CityBlock).unwrap();
        assert_eq!((r.predicted, r.score), (Label::Fire, 0.5));
        let c = store(&[(1, Label::Fire, 0.5), (2, Label::NotFire, 0.1)]);
        let r = classify(&c, &fv(9, 0.0), 2, EvaluationFunctionId::CityBlock).unwrap();
        assert_eq!((r.predicted, r.score), (Label::NotFire, 0.5));
    }

    #[test]
    fn unlabeled_ignored_and_insufficient() {
        let c = store(&[(1, Label::Unlabeled, 0.0), (2, Label::NotFire, 3.0)]);
        let r = classify(&c, &fv(9, 0.0), 1, EvaluationFunctionId::Euclidean).unwrap();
        assert_eq!(r.predicted, Label::NotFire);
        assert!(matches!(
            classify(&c, &fv(9, 0.0), 2, EvaluationFunctionId::Euclidean),
            Err(Error::InsufficientInstances { needed: 2, available: 1 })
        ));
    }

    #[test]
    fn exclusion_skips_self() {
        let c = store(&[(1, Label::Fire, 0.0), (2, Label::NotFire, 1.0)]);
        let r = classify_excluding(&c, &fv(1, 0.0), 1, EvaluationFunctionId::Euclidean, 1).unwrap();
        assert_eq!(r.predicted, Label::NotFire);
    }

    fn random_setup(seed: u64) -> (Collection, Vec<FeatureVector>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Collection::new(DescriptorId::ColorLayout, 12);
        for id in 0..300u64 {
            let label = if rng.gen_bool(0.5) { Label::Fire } else { Label::NotFire };
            let v: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..10.0)).collect();
            c.insert(StoredInstance::new(label, FeatureVector::new(DescriptorId::ColorLayout, v, id))).unwrap();
        }
        let queries = (0..200u64)
            .map(|id| {
                let v: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..10.0)).collect();
                FeatureVector::new(DescriptorId::ColorLayout, v, 1000 + id)
            })
            .collect();
        (c, queries)
    }

    #[test]
    fn batch_matches_loop_and_concatenation() {
        let (c, queries) = random_setup(3);
        for ef in EvaluationFunctionId::ALL {
            let batch: Vec<_> = classify_batch(&c, &queries, 5, ef).into_iter().map(Result::unwrap).collect();
            let looped: Vec<_> = queries.iter().map(|q| classify(&c, q, 5, ef).unwrap()).collect();
            assert_eq!(batch, looped, "{ef}");
            let mut split: Vec<_> = classify_batch(&c, &queries[..77], 5, ef).into_iter().map(Result::unwrap).collect();
            split.extend(classify_batch(&c, &queries[77..], 5, ef).into_iter().map(Result::unwrap));
            assert_eq!(split, batch);
        }
        let one = classify_batch(&c, &queries[..1], 3, EvaluationFunctionId::Jeffrey);
        assert_eq!(one[0].as_ref().unwrap(), &classify(&c, &queries[0], 3, EvaluationFunctionId::Jeffrey).unwrap());
    }

    #[test]
    fn batch_reports_errors_per_item() {
        let (c, mut queries) = random_setup(4);
        queries[1] = FeatureVector::new(DescriptorId::ColorLayout, vec![0.0; 3], 5);
        let out = classify_batch(&c, &queries[..3], 1, EvaluationFunctionId::Euclidean);
        assert!(out[0].is_ok() && out[1].is_err() && out[2].is_ok());
    }

    #[test]
    fn insertion_order_irrelevant() {
        let (c, queries) = random_setup(5);
        let mut shuffled: Vec<StoredInstance> = c.instances().to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(6));
        let mut d = Collection::new(c.descriptor(), c.dim());
        for inst in shuffled {
            d.insert(inst).unwrap();
        }
        for q in &queries {
            for k in [1, 4, 15] {
                let a = classify(&c, q, k, EvaluationFunctionId::Canberra).unwrap();
                let b = classify(&d, q, k, EvaluationFunctionId::Canberra).unwrap();
                assert_eq!(a, b);
                assert_eq!((a.score * k as f64).round(), a.score * k as f64);
            }
        }
    }

    #[test]
    fn positive_scaling_keeps_prediction() {
        let (c, queries) = random_setup(7);
        let mut scaled = Collection::new(c.descriptor(), c.dim());
        let scale = |v: &FeatureVector| FeatureVector::new(v.descriptor, v.values.iter().map(|x| x * 3.5).collect(), v.image_id);
        for inst in c.instances() {
            scaled.insert(StoredInstance::new(inst.label, scale(&inst.vector))).unwrap();
        }
        for ef in [EvaluationFunctionId::CityBlock, EvaluationFunctionId::Euclidean, EvaluationFunctionId::Chebyshev] {
            for q in &queries {
                let a = classify(&c, q, 3, ef).unwrap();
                let b = classify(&scaled, &scale(q), 3, ef).unwrap();
                assert_eq!(a.predicted, b.predicted);
            }
        }
    }
}
