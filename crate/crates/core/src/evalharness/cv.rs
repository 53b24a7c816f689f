use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::classify;
use crate::descriptors::DescriptorId;
use crate::error::{Error, Result};
use crate::evalfuncs::EvaluationFunctionId;
use crate::featurestore::{Collection, Label, StoredInstance};

/// Binary confusion counts with fire as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual == Label::Fire, predicted == Label::Fire) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// `2tp / (2tp + fp + fn)`.
pub fn f_measure(c: &ConfusionCounts) -> Result<f64> {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        return Err(Error::UndefinedMeasure("F-measure with no positives predicted or present".into()));
    }
    Ok((2 * c.tp) as f64 / denom as f64)
}

/// Which side of each round trains the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainSplit {
    /// One fold trains, the remaining folds test.
    #[default]
    OneFold,
    /// The conventional split: all folds but one train, one tests.
    AllButOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub k: usize,
    pub folds: usize,
    pub seed: u64,
    pub split: TrainSplit,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 1,
            folds: 10,
            seed: 0,
            split: TrainSplit::OneFold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub mean: f64,
    pub per_fold: Vec<f64>,
    pub counts: ConfusionCounts,
}

/// Partitions instance indices into `folds` class-stratified folds.
///
/// Each class is shuffled with a seeded generator and dealt round-robin, so
/// every fold holds the floor or ceiling of its share of each class.
/// Unlabeled instances are left out.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Stratification(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for class in [Label::Fire, Label::NotFire] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::Stratification(format!(
                "class {class} has {} instances, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

fn check_corpus(corpus: &[StoredInstance]) -> Result<(DescriptorId, usize)> {
    let first = corpus.first().ok_or(Error::EmptyStore)?;
    let (desc, dim) = (first.vector.descriptor, first.vector.dim());
    for inst in corpus {
        if inst.vector.descriptor != desc {
            return Err(Error::DescriptorMismatch {
                expected: desc.code(),
                actual: inst.vector.descriptor.code(),
            });
        }
        if inst.vector.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: inst.vector.dim(),
            });
        }
    }
    Ok((desc, dim))
}

/// Stratified k-fold cross-validation of IB1 under one evaluation function.
pub fn cross_validate(corpus: &[StoredInstance], ef: EvaluationFunctionId, cfg: &CvConfig) -> Result<CvResult> {
    let (desc, dim) = check_corpus(corpus)?;
    let labels: Vec<Label> = corpus.iter().map(|i| i.label).collect();
    let folds = stratified_folds(&labels, cfg.folds, cfg.seed)?;
    let mut per_fold = Vec::with_capacity(folds.len());
    let mut total = ConfusionCounts::default();
    for r in 0..folds.len() {
        let (train, test): (Vec<usize>, Vec<usize>) = match cfg.split {
            TrainSplit::OneFold => (folds[r].clone(), rest(&folds, r)),
            TrainSplit::AllButOne => (rest(&folds, r), folds[r].clone()),
        };
        let mut store = Collection::new(desc, dim);
        for &i in &train {
            store.insert(corpus[i].clone())?;
        }
        let mut counts = ConfusionCounts::default();
        for &i in &test {
            let c = classify(&store, &corpus[i].vector, cfg.k, ef)?;
            counts.record(corpus[i].label, c.predicted);
        }
        per_fold.push(f_measure(&counts)?);
        total.merge(&counts);
    }
    let mean = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    Ok(CvResult {
        mean,
        per_fold,
        counts: total,
    })
}

fn rest(folds: &[Vec<usize>], skip: usize) -> Vec<usize> {
    let mut v: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    v.sort_unstable();
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub fem: DescriptorId,
    pub ef: EvaluationFunctionId,
    /// A failed cell keeps its error message.
    pub result: std::result::Result<CvResult, String>,
}

impl GridCell {
    pub fn mean(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.mean)
    }
}

/// F-measure grid, one row per descriptor and one column per evaluation function.
#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub fems: Vec<DescriptorId>,
    pub efs: Vec<EvaluationFunctionId>,
    pub cfg: CvConfig,
    /// Row-major.
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn cell(&self, fem: DescriptorId, ef: EvaluationFunctionId) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.fem == fem && c.ef == ef)
    }

    /// The first evaluation function reaching the row maximum.
    pub fn best_ef(&self, fem: DescriptorId) -> Option<EvaluationFunctionId> {
        let mut best: Option<(EvaluationFunctionId, f64)> = None;
        for c in self.cells.iter().filter(|c| c.fem == fem) {
            if let Some(m) = c.mean() {
                if best.is_none_or(|(_, b)| m > b) {
                    best = Some((c.ef, m));
                }
            }
        }
        best.map(|(ef, _)| ef)
    }

    pub fn row_max(&self, fem: DescriptorId) -> Option<f64> {
        self.best_ef(fem).and_then(|ef| self.cell(fem, ef)?.mean())
    }

    /// One row per cell with per-fold values; failed cells read `NA`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["fem".to_string(), "ef".into(), "k".into(), "folds".into(), "seed".into()];
        header.extend(["mean_f".into(), "best".into()]);
        header.extend((1..=self.cfg.folds).map(|i| format!("fold_{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for c in &self.cells {
            let mut row = vec![
                c.fem.code().to_string(),
                c.ef.code().to_string(),
                self.cfg.k.to_string(),
                self.cfg.folds.to_string(),
                self.cfg.seed.to_string(),
            ];
            match &c.result {
                Ok(r) => {
                    row.push(format!("{:.6}", r.mean));
                    row.push((self.best_ef(c.fem) == Some(c.ef)).to_string());
                    row.extend(r.per_fold.iter().map(|f| format!("{f:.6}")));
                }
                Err(_) => {
                    row.push("NA".into());
                    row.push("false".into());
                    row.extend((0..self.cfg.folds).map(|_| "NA".to_string()));
                }
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width table with each row maximum marked by `*`.
    pub fn render_table(&self) -> String {
        let mut s = format!("{:<4}", "");
        for ef in &self.efs {
            s.push_str(&format!("{:>9}", ef.code()));
        }
        s.push('\n');
        for &fem in &self.fems {
            s.push_str(&format!("{:<4}", fem.code()));
            let best = self.best_ef(fem);
            for &ef in &self.efs {
                let text = match self.cell(fem, ef).and_then(GridCell::mean) {
                    Some(m) if best == Some(ef) => format!("*{m:.3}"),
                    Some(m) => format!("{m:.3}"),
                    None => "NA".into(),
                };
                s.push_str(&format!("{text:>9}"));
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Cross-validates every (descriptor, evaluation function) cell in parallel.
/// `corpora` maps each descriptor to its labeled vectors.
pub fn run_grid(
    corpora: &BTreeMap<DescriptorId, Vec<StoredInstance>>,
    efs: &[EvaluationFunctionId],
    cfg: &CvConfig,
) -> GridReport {
    let fems: Vec<DescriptorId> = corpora.keys().copied().collect();
    let pairs: Vec<(DescriptorId, EvaluationFunctionId)> =
        fems.iter().flat_map(|&f| efs.iter().map(move |&e| (f, e))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(fem, ef)| {
            let result = cross_validate(&corpora[&fem], ef, cfg).map_err(|e| {
                log::warn!("grid cell {fem}x{ef} failed: {e}");
                e.to_string()
            });
            GridCell { fem, ef, result }
        })
        .collect();
    GridReport {
        fems,
        efs: efs.to_vec(),
        cfg: *cfg,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::FeatureVector;
    use proptest::prelude::*;

    fn cc(tp: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn: 0 }
    }

    #[test]
    fn f_measure_examples() {
        assert_eq!(f_measure(&cc(10, 0, 0)).unwrap(), 1.0);
        assert_eq!(f_measure(&cc(2, 1, 1)).unwrap(), 2.0 / 3.0);
        assert_eq!(f_measure(&cc(0, 5, 5)).unwrap(), 0.0);
        assert!(matches!(f_measure(&ConfusionCounts { tn: 4, ..Default::default() }), Err(Error::UndefinedMeasure(_))));
    }

    proptest! {
        #[test]
        fn f_is_harmonic_mean(tp in 1u64..500, fp in 0u64..500, fn_ in 0u64..500) {
            let p = tp as f64 / (tp + fp) as f64;
            let r = tp as f64 / (tp + fn_) as f64;
            let f = f_measure(&cc(tp, fp, fn_)).unwrap();
            prop_assert!((f - 2.0 * p * r / (p + r)).abs() < 1e-12);
        }
    }

    fn line_corpus(per_class: usize) -> Vec<StoredInstance> {
        let mut v = Vec::new();
        for i in 0..per_class {
            let jitter = (i as f64 / per_class as f64 - 0.5) * 0.02;
            v.push(StoredInstance::new(
                Label::Fire,
                FeatureVector::new(DescriptorId::ColorTemperature, vec![jitter], i as u64),
            ));
            v.push(StoredInstance::new(
                Label::NotFire,
                FeatureVector::new(DescriptorId::ColorTemperature, vec![100.0 + jitter], (per_class + i) as u64),
            ));
        }
        v
    }

    #[test]
    fn separable_corpus_scores_one() {
        let corpus = line_corpus(30);
        let minkowski = [EvaluationFunctionId::CityBlock, EvaluationFunctionId::Euclidean, EvaluationFunctionId::Chebyshev];
        for ef in minkowski {
            for split in [TrainSplit::OneFold, TrainSplit::AllButOne] {
                let r = cross_validate(&corpus, ef, &CvConfig { split, ..Default::default() }).unwrap();
                assert_eq!(r.mean, 1.0, "{ef}");
                assert_eq!(r.per_fold.len(), 10);
            }
        }
    }

    #[test]
    fn canberra_blurs_points_straddling_zero() {
        // |a-b|/(|a|+|b|) is 1 for any pair of opposite sign, as far as 0 is from 100
        let corpus = line_corpus(30);
        let r = cross_validate(&corpus, EvaluationFunctionId::Canberra, &CvConfig::default()).unwrap();
        assert!(r.mean < 1.0);
        let shifted: Vec<StoredInstance> = corpus
            .into_iter()
            .map(|mut i| {
                i.vector.values[0] += 1.0;
                i
            })
            .collect();
        let r = cross_validate(&shifted, EvaluationFunctionId::Canberra, &CvConfig::default()).unwrap();
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn folds_partition_and_balance() {
        let labels: Vec<Label> = (0..103).map(|i| if i % 3 == 0 { Label::Fire } else { Label::NotFire }).collect();
        let folds = stratified_folds(&labels, 10, 42).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        let fire_total = labels.iter().filter(|&&l| l == Label::Fire).count() as f64;
        for f in &folds {
            let fire = f.iter().filter(|&&i| labels[i] == Label::Fire).count() as f64;
            assert!((fire - fire_total / 10.0).abs() <= 1.0);
        }
        assert_eq!(folds, stratified_folds(&labels, 10, 42).unwrap());
        assert_ne!(folds, stratified_folds(&labels, 10, 43).unwrap());
    }

    #[test]
    fn two_folds_on_four() {
        let labels = [Label::Fire, Label::Fire, Label::NotFire, Label::NotFire];
        let folds = stratified_folds(&labels, 2, 9).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 2);
            assert_eq!(f.iter().filter(|&&i| labels[i] == Label::Fire).count(), 1);
        }
        let corpus: Vec<StoredInstance> = [(Label::Fire, 0.0), (Label::Fire, 0.1), (Label::NotFire, 5.0), (Label::NotFire, 5.1)]
            .iter()
            .enumerate()
            .map(|(i, &(l, x))| StoredInstance::new(l, FeatureVector::new(DescriptorId::ColorTemperature, vec![x], i as u64)))
            .collect();
        let cfg = CvConfig { folds: 2, seed: 9, ..Default::default() };
        let r = cross_validate(&corpus, EvaluationFunctionId::Euclidean, &cfg).unwrap();
        assert_eq!(r.per_fold, vec![1.0, 1.0]);
        assert_eq!(r.counts.total(), 4);
    }

    #[test]
    fn too_few_per_class() {
        let corpus = line_corpus(5);
        assert!(matches!(
            cross_validate(&corpus, EvaluationFunctionId::Euclidean, &CvConfig::default()),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn grid_shape_and_best() {
        let mut corpora = BTreeMap::new();
        corpora.insert(DescriptorId::ColorTemperature, line_corpus(20));
        corpora.insert(DescriptorId::ColorLayout, Vec::new());
        let g = run_grid(&corpora, &EvaluationFunctionId::ALL, &CvConfig::default());
        assert_eq!(g.cells.len(), 12);
        assert!(g.cell(DescriptorId::ColorLayout, EvaluationFunctionId::Euclidean).unwrap().result.is_err());
        assert_eq!(g.best_ef(DescriptorId::ColorTemperature), Some(EvaluationFunctionId::CityBlock));
        assert_eq!(g.best_ef(DescriptorId::ColorLayout), None);
        let csv = g.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 13);
        assert!(csv.contains("CL,EU,1,10,0,NA,false"));
        assert_eq!(csv, run_grid(&corpora, &EvaluationFunctionId::ALL, &CvConfig::default()).to_csv().unwrap());
        assert!(g.render_table().contains("*1.000"));
    }
}
