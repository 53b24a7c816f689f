use rayon::prelude::*;

use crate::classifier::classify_excluding;
use crate::error::{Error, Result};
use crate::evalfuncs::EvaluationFunctionId;
use crate::featurestore::{Collection, Label, StoredInstance};

/// Recall levels 0.0, 0.1, ..., 1.0.
pub const RECALL_LEVELS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Neighbourhood size for ROC scores.
pub const DEFAULT_ROC_K: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// Mean interpolated precision at each of [`RECALL_LEVELS`].
    pub precision: [f64; 11],
    /// Queries that contributed.
    pub queries: usize,
}

/// Interpolated precision of one ranking, `relevant[i]` flagging rank `i`.
/// The value at level r is the best precision reached at any recall ≥ r.
/// `None` when nothing is relevant.
pub fn interpolated_precision(relevant: &[bool]) -> Option<[f64; 11]> {
    let total = relevant.iter().filter(|&&r| r).count();
    if total == 0 {
        return None;
    }
    let mut out = [0.0; 11];
    let mut hits = 0usize;
    for (i, &rel) in relevant.iter().enumerate() {
        hits += usize::from(rel);
        let precision = hits as f64 / (i + 1) as f64;
        // recall ≥ j/10, kept in integers
        for (j, slot) in out.iter_mut().enumerate() {
            if hits * 10 >= j * total && precision > *slot {
                *slot = precision;
            }
        }
    }
    Some(out)
}

/// Averages interpolated precision over `queries`, each ranked against every
/// stored instance except itself. Relevant means same label.
pub fn precision_recall_curve(
    store: &Collection,
    queries: &[StoredInstance],
    ef: EvaluationFunctionId,
) -> Result<PrCurve> {
    let curves: Vec<Option<[f64; 11]>> = queries
        .par_iter()
        .map(|q| {
            if !q.label.is_labeled() {
                log::warn!("query {} is unlabeled; skipped", q.image_id);
                return Ok(None);
            }
            let hits = store.search(&q.vector, store.len().max(1), ef, |i| i.image_id != q.image_id);
            let hits = match hits {
                Ok(h) => h,
                Err(Error::EmptyStore) => return Ok(None),
                Err(e) => return Err(e),
            };
            let relevant: Vec<bool> = hits.neighbors.iter().map(|n| n.label == q.label).collect();
            let curve = interpolated_precision(&relevant);
            if curve.is_none() {
                log::warn!("no stored instance shares the label of query {}; skipped", q.image_id);
            }
            Ok(curve)
        })
        .collect::<Result<_>>()?;
    let used: Vec<[f64; 11]> = curves.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::UndefinedMeasure("no query has a relevant stored instance".into()));
    }
    let mut precision = [0.0; 11];
    for c in &used {
        for (p, v) in precision.iter_mut().zip(c) {
            *p += v;
        }
    }
    for p in &mut precision {
        *p /= used.len() as f64;
    }
    Ok(PrCurve {
        precision,
        queries: used.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC over `(score, is_positive)` pairs, one point per distinct score,
/// with trapezoidal area.
pub fn roc_curve(scores: &[(f64, bool)]) -> Result<RocCurve> {
    if scores.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::UndefinedMeasure("non-finite score".into()));
    }
    let pos = scores.iter().filter(|(_, p)| *p).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMeasure("ROC needs both classes".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// Fire-fraction scores from leave-one-out IB1 over the labeled part of `corpus`.
pub fn leave_one_out_scores(
    corpus: &[StoredInstance],
    ef: EvaluationFunctionId,
    k: usize,
) -> Result<Vec<(f64, bool)>> {
    let first = corpus.first().ok_or(Error::EmptyStore)?;
    let mut store = Collection::new(first.vector.descriptor, first.vector.dim());
    for inst in corpus.iter().filter(|i| i.label.is_labeled()) {
        store.insert(inst.clone())?;
    }
    store
        .instances()
        .par_iter()
        .map(|inst| {
            let c = classify_excluding(&store, &inst.vector, k, ef, inst.image_id)?;
            Ok((c.score, inst.label == Label::Fire))
        })
        .collect()
}
