//! Four from-scratch binary classifiers behind one fit/predict interface.
//!
//! Every model z-scores its inputs with parameters fitted on the training
//! rows only. The fitted standardizer can be read but never refitted.

mod metrics;
mod tree;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{invalid, ConfigError, KvConfig};
use crate::records::Label;
use crate::rng::{derive_seed, stream};
use crate::splits::LabeledDataset;
use tree::{grow, Splitter, Tree, TreeParams};

pub use metrics::{accuracy, confusion, Confusion};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrain,
    #[error("training matrix has {rows} rows but {labels} labels")]
    TrainShape { rows: usize, labels: usize },
    #[error("expected {expected} feature columns, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid {kind} hyperparameter: {reason}")]
    InvalidSpec { kind: &'static str, reason: String },
    #[error("length mismatch: {truth} true labels, {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("empty label vectors")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassifierKind {
    DecisionTree,
    ExtraTrees,
    Knn,
    GaussianNb,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::DecisionTree,
        ClassifierKind::ExtraTrees,
        ClassifierKind::Knn,
        ClassifierKind::GaussianNb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::ExtraTrees => "extra_trees",
            ClassifierKind::Knn => "knn",
            ClassifierKind::GaussianNb => "gaussian_nb",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown classifier `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    DecisionTree {
        max_depth: Option<usize>,
        min_samples_split: usize,
    },
    ExtraTrees {
        n_trees: usize,
        max_depth: Option<usize>,
        /// Features tried per node; `None` means ceil(sqrt(m)).
        feature_subsample: Option<usize>,
        seed: u64,
    },
    Knn {
        k: usize,
        /// Winner of an even vote.
        tie: Label,
    },
    GaussianNb {
        variance_floor: f64,
    },
}

fn parse_depth(key: &str, v: &str) -> Result<Option<usize>, ConfigError> {
    if v == "none" {
        return Ok(None);
    }
    v.parse().map(Some).map_err(|e: std::num::ParseIntError| invalid(key, v, e.to_string()))
}

impl ClassifierSpec {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::DecisionTree => ClassifierSpec::DecisionTree {
                max_depth: None,
                min_samples_split: 2,
            },
            ClassifierKind::ExtraTrees => ClassifierSpec::ExtraTrees {
                n_trees: 100,
                max_depth: None,
                feature_subsample: None,
                seed: 0,
            },
            ClassifierKind::Knn => ClassifierSpec::Knn {
                k: 5,
                tie: Label::Dropout,
            },
            ClassifierKind::GaussianNb => ClassifierSpec::GaussianNb { variance_floor: 1e-9 },
        }
    }

    /// Reads `<kind>.<param>` keys over the defaults, e.g. `knn.k=7` or
    /// `decision_tree.max_depth=none`.
    pub fn from_kv(kind: ClassifierKind, kv: &KvConfig) -> Result<Self, ConfigError> {
        let prefix = format!("{}.", kind.name());
        let mut spec = Self::default_for(kind);
        for (param, value) in kv.with_prefix(&prefix) {
            let key = format!("{prefix}{param}");
            let int = || value.parse::<usize>().map_err(|e| invalid(&key, value, e.to_string()));
            match (&mut spec, param) {
                (ClassifierSpec::DecisionTree { max_depth, .. }, "max_depth")
                | (ClassifierSpec::ExtraTrees { max_depth, .. }, "max_depth") => {
                    *max_depth = parse_depth(&key, value)?
                }
                (ClassifierSpec::DecisionTree { min_samples_split, .. }, "min_samples_split") => {
                    *min_samples_split = int()?
                }
                (ClassifierSpec::ExtraTrees { n_trees, .. }, "n_trees") => *n_trees = int()?,
                (ClassifierSpec::ExtraTrees { feature_subsample, .. }, "feature_subsample") => {
                    *feature_subsample = if value == "sqrt" { None } else { Some(int()?) }
                }
                (ClassifierSpec::ExtraTrees { seed, .. }, "seed") => {
                    *seed = value.parse().map_err(|e: std::num::ParseIntError| invalid(&key, value, e.to_string()))?
                }
                (ClassifierSpec::Knn { k, .. }, "k") => *k = int()?,
                (ClassifierSpec::Knn { tie, .. }, "tie") => {
                    *tie = match value {
                        "dropout" => Label::Dropout,
                        "graduated" => Label::Graduated,
                        _ => return Err(invalid(&key, value, "expected dropout or graduated")),
                    }
                }
                (ClassifierSpec::GaussianNb { variance_floor }, "variance_floor") => {
                    *variance_floor = value.parse().map_err(|e: std::num::ParseFloatError| invalid(&key, value, e.to_string()))?
                }
                _ => return Err(ConfigError::Unknown(key)),
            }
        }
        spec.validate().map_err(|e| invalid(&prefix, "", e.to_string()))?;
        Ok(spec)
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSpec::DecisionTree { .. } => ClassifierKind::DecisionTree,
            ClassifierSpec::ExtraTrees { .. } => ClassifierKind::ExtraTrees,
            ClassifierSpec::Knn { .. } => ClassifierKind::Knn,
            ClassifierSpec::GaussianNb { .. } => ClassifierKind::GaussianNb,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |reason: &str| {
            Err(ClassifierError::InvalidSpec {
                kind: self.name(),
                reason: reason.to_string(),
            })
        };
        match *self {
            ClassifierSpec::DecisionTree { max_depth, .. } | ClassifierSpec::ExtraTrees { max_depth, .. }
                if max_depth == Some(0) =>
            {
                bad("max_depth must be at least 1")
            }
            ClassifierSpec::ExtraTrees { n_trees: 0, .. } => bad("n_trees must be at least 1"),
            ClassifierSpec::ExtraTrees {
                feature_subsample: Some(0),
                ..
            } => bad("feature_subsample must be at least 1"),
            ClassifierSpec::Knn { k: 0, .. } => bad("k must be at least 1"),
            ClassifierSpec::GaussianNb { variance_floor } if !(variance_floor > 0.0 && variance_floor.is_finite()) => {
                bad("variance_floor must be positive")
            }
            _ => Ok(()),
        }
    }
}

/// Per-column z-score parameters. Constant columns get scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &[Vec<f64>]) -> Self {
        let m = x[0].len();
        let n = x.len() as f64;
        let mut means = vec![0.0; m];
        for row in x {
            for (acc, v) in means.iter_mut().zip(row) {
                *acc += v;
            }
        }
        means.iter_mut().for_each(|v| *v /= n);
        let mut scales = vec![0.0; m];
        for row in x {
            for ((acc, v), mu) in scales.iter_mut().zip(row).zip(&means) {
                *acc += (v - mu) * (v - mu);
            }
        }
        for s in &mut scales {
            *s = (*s / n).sqrt();
            if !(*s > 1e-12) {
                *s = 1.0;
            }
        }
        Standardizer { means, scales }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((v, mu), s)| (v - mu) / s)
            .collect()
    }
}

#[derive(Debug, Clone)]
struct NbClass {
    log_prior: f64,
    means: Vec<f64>,
    vars: Vec<f64>,
}

impl NbClass {
    fn log_joint(&self, row: &[f64]) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.log_prior
            + row
                .iter()
                .zip(&self.means)
                .zip(&self.vars)
                .map(|((x, mu), var)| -0.5 * (ln_2pi + var.ln()) - (x - mu) * (x - mu) / (2.0 * var))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Constant(Label),
    Tree(Tree),
    Forest(Vec<Tree>),
    Knn {
        x: Vec<Vec<f64>>,
        y: Vec<Label>,
        k: usize,
        tie: Label,
    },
    Nb([NbClass; 2]),
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    spec: ClassifierSpec,
    standardizer: Standardizer,
    fitted: Fitted,
}

fn vote(n0: usize, n1: usize, tie: Label) -> Label {
    match n0.cmp(&n1) {
        std::cmp::Ordering::Greater => Label::Dropout,
        std::cmp::Ordering::Less => Label::Graduated,
        std::cmp::Ordering::Equal => tie,
    }
}

fn fit_nb(x: &[Vec<f64>], y: &[Label], floor: f64) -> [NbClass; 2] {
    let m = x[0].len();
    let n = x.len() as f64;
    let class = |label: Label| {
        let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, l)| **l == label).map(|(r, _)| r).collect();
        let c = rows.len() as f64;
        let mut means = vec![0.0; m];
        for r in &rows {
            for (a, v) in means.iter_mut().zip(r.iter()) {
                *a += v;
            }
        }
        means.iter_mut().for_each(|a| *a /= c);
        let mut vars = vec![0.0; m];
        for r in &rows {
            for ((a, v), mu) in vars.iter_mut().zip(r.iter()).zip(&means) {
                *a += (v - mu) * (v - mu);
            }
        }
        vars.iter_mut().for_each(|a| *a = (*a / c).max(floor));
        NbClass {
            log_prior: (c / n).ln(),
            means,
            vars,
        }
    };
    [class(Label::Dropout), class(Label::Graduated)]
}

impl TrainedModel {
    pub fn fit(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[Label]) -> Result<Self, ClassifierError> {
        spec.validate()?;
        if x.is_empty() {
            return Err(ClassifierError::EmptyTrain);
        }
        if x.len() != y.len() {
            return Err(ClassifierError::TrainShape {
                rows: x.len(),
                labels: y.len(),
            });
        }
        let width = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != width) {
            return Err(ClassifierError::Shape {
                expected: width,
                got: bad.len(),
            });
        }
        let standardizer = Standardizer::fit(x);
        let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.transform_row(r)).collect();
        let n1 = y.iter().filter(|l| **l == Label::Graduated).count();
        let fitted = if n1 == 0 || n1 == y.len() {
            Fitted::Constant(y[0])
        } else {
            match *spec {
                ClassifierSpec::DecisionTree {
                    max_depth,
                    min_samples_split,
                } => Fitted::Tree(grow(
                    &z,
                    y,
                    TreeParams {
                        max_depth,
                        min_samples_split,
                    },
                    Splitter::Best,
                )),
                ClassifierSpec::ExtraTrees {
                    n_trees,
                    max_depth,
                    feature_subsample,
                    seed,
                } => {
                    let max_features = feature_subsample
                        .unwrap_or_else(|| (width as f64).sqrt().ceil() as usize)
                        .clamp(1, width.max(1));
                    let params = TreeParams {
                        max_depth,
                        min_samples_split: 2,
                    };
                    let trees = (0..n_trees as u64)
                        .into_par_iter()
                        .map(|i| {
                            let mut rng = stream(derive_seed(seed, i));
                            grow(
                                &z,
                                y,
                                params,
                                Splitter::Random {
                                    rng: &mut rng,
                                    max_features,
                                },
                            )
                        })
                        .collect();
                    Fitted::Forest(trees)
                }
                ClassifierSpec::Knn { k, tie } => Fitted::Knn {
                    x: z,
                    y: y.to_vec(),
                    k,
                    tie,
                },
                ClassifierSpec::GaussianNb { variance_floor } => Fitted::Nb(fit_nb(&z, y, variance_floor)),
            }
        };
        Ok(TrainedModel {
            spec: spec.clone(),
            standardizer,
            fitted,
        })
    }

    pub fn fit_dataset(spec: &ClassifierSpec, train: &LabeledDataset) -> Result<Self, ClassifierError> {
        Self::fit(spec, &train.x, &train.y)
    }

    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.means.len()
    }

    fn check_row(&self, row: &[f64]) -> Result<(), ClassifierError> {
        if row.len() != self.n_features() {
            return Err(ClassifierError::Shape {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        Ok(())
    }

    fn predict_z(&self, z: &[f64]) -> Label {
        match &self.fitted {
            Fitted::Constant(label) => *label,
            Fitted::Tree(t) => t.predict_row(z),
            Fitted::Forest(trees) => {
                let n1 = trees.iter().filter(|t| t.predict_row(z) == Label::Graduated).count();
                vote(trees.len() - n1, n1, Label::Dropout)
            }
            Fitted::Knn { x, y, k, tie } => {
                let mut d: Vec<(f64, usize)> = x
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                    .collect();
                let k = (*k).min(d.len());
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if k < d.len() {
                    d.select_nth_unstable_by(k - 1, cmp);
                }
                let n1 = d[..k].iter().filter(|(_, i)| y[*i] == Label::Graduated).count();
                vote(k - n1, n1, *tie)
            }
            Fitted::Nb(classes) => {
                let (l0, l1) = (classes[0].log_joint(z), classes[1].log_joint(z));
                if l1 > l0 {
                    Label::Graduated
                } else {
                    Label::Dropout
                }
            }
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<Label>, ClassifierError> {
        x.iter()
            .map(|row| {
                self.check_row(row)?;
                Ok(self.predict_z(&self.standardizer.transform_row(row)))
            })
            .collect()
    }

    /// P(graduated | row) for Gaussian NB; `None` for other kinds.
    pub fn posterior_graduated(&self, row: &[f64]) -> Result<Option<f64>, ClassifierError> {
        self.check_row(row)?;
        let z = self.standardizer.transform_row(row);
        Ok(match &self.fitted {
            Fitted::Nb(classes) => {
                let (l0, l1) = (classes[0].log_joint(&z), classes[1].log_joint(&z));
                Some(1.0 / (1.0 + (l0 - l1).exp()))
            }
            Fitted::Constant(label) if self.spec.kind() == ClassifierKind::GaussianNb => {
                Some(f64::from(label.as_u8()))
            }
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::bounded;
    use rand::RngCore;
    use Label::*;

    fn all_specs() -> Vec<ClassifierSpec> {
        ClassifierKind::ALL.into_iter().map(ClassifierSpec::default_for).collect()
    }

    fn normal(rng: &mut crate::rng::StreamRng) -> f64 {
        // Box-Muller from two open-interval uniforms.
        let u = |r: &mut crate::rng::StreamRng| ((r.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        let (a, b) = (u(rng), u(rng));
        (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
    }

    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = stream(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { Dropout } else { Graduated };
            let c = if label == Dropout { -3.0 } else { 3.0 };
            x.push(vec![c + normal(&mut rng), c + normal(&mut rng)]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn blobs_are_learned_by_every_kind() {
        let (x, y) = blobs(400, 1);
        let (xt, yt) = blobs(400, 2);
        for spec in all_specs() {
            let m = TrainedModel::fit(&spec, &x, &y).unwrap();
            let train_acc = accuracy(&y, &m.predict(&x).unwrap()).unwrap();
            let test_acc = accuracy(&yt, &m.predict(&xt).unwrap()).unwrap();
            assert!(train_acc >= 0.95, "{} train {train_acc}", spec.name());
            assert!(test_acc >= 0.95, "{} test {test_acc}", spec.name());
        }
    }

    #[test]
    fn xor_with_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![Dropout, Graduated, Graduated, Dropout];
        let spec = ClassifierSpec::DecisionTree {
            max_depth: Some(2),
            min_samples_split: 2,
        };
        let m = TrainedModel::fit(&spec, &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn single_label_is_constant() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        for spec in all_specs() {
            let m = TrainedModel::fit(&spec, &x, &[Graduated, Graduated]).unwrap();
            assert_eq!(m.predict(&[vec![-50.0, 9.0]]).unwrap(), vec![Graduated]);
        }
    }

    #[test]
    fn unlimited_tree_memorizes_unique_rows() {
        let mut rng = stream(9);
        let x: Vec<Vec<f64>> = (0..150).map(|i| vec![i as f64, bounded(&mut rng, 7) as f64]).collect();
        let y: Vec<Label> = (0..150).map(|_| Label::from_u8(bounded(&mut rng, 2) as u8).unwrap()).collect();
        let m = TrainedModel::fit(&ClassifierSpec::default_for(ClassifierKind::DecisionTree), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn knn_one_returns_the_matching_point() {
        let (x, mut y) = blobs(50, 4);
        y[7] = if y[7] == Dropout { Graduated } else { Dropout };
        let m = TrainedModel::fit(&ClassifierSpec::Knn { k: 1, tie: Dropout }, &x, &y).unwrap();
        assert_eq!(m.predict(&[x[7].clone()]).unwrap(), vec![y[7]]);
    }

    #[test]
    fn knn_even_vote_uses_tie_label() {
        let x = vec![vec![0.0], vec![2.0]];
        let y = vec![Graduated, Dropout];
        for tie in [Dropout, Graduated] {
            let m = TrainedModel::fit(&ClassifierSpec::Knn { k: 2, tie }, &x, &y).unwrap();
            assert_eq!(m.predict(&[vec![1.0]]).unwrap(), vec![tie]);
        }
    }

    #[test]
    fn nb_matches_hand_posterior() {
        // Class 0 at {0, 1}: mean 0.5, var 0.25. Class 1 at {2, 4}: mean 3,
        // var 1. Equal priors. Posteriors worked out by hand from the normal
        // density on the raw scale; z-scoring rescales both classes equally.
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![4.0]];
        let y = vec![Dropout, Dropout, Graduated, Graduated];
        let m = TrainedModel::fit(&ClassifierSpec::default_for(ClassifierKind::GaussianNb), &x, &y).unwrap();
        let cases = [
            (1.5, 0.5453383271076292),
            (1.0, 0.10036756468345168),
            (2.5, 0.9992403196372703),
            (0.0, 0.009074714844313747),
        ];
        for (q, want) in cases {
            let got = m.posterior_graduated(&[q]).unwrap().unwrap();
            assert!((got - want).abs() < 1e-9, "x={q}: {got} vs {want}");
            let argmax = if want > 0.5 { Graduated } else { Dropout };
            assert_eq!(m.predict(&[vec![q]]).unwrap(), vec![argmax]);
        }
    }

    #[test]
    fn nb_survives_constant_feature() {
        let x = vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![3.0, 5.0], vec![4.0, 5.0]];
        let y = vec![Dropout, Dropout, Graduated, Graduated];
        let m = TrainedModel::fit(&ClassifierSpec::default_for(ClassifierKind::GaussianNb), &x, &y).unwrap();
        let p = m.posterior_graduated(&[3.5, 5.0]).unwrap().unwrap();
        assert!(p.is_finite() && p > 0.5);
    }

    #[test]
    fn standardizer_ignores_test_rows() {
        let (x, y) = blobs(60, 5);
        let m = TrainedModel::fit(&ClassifierSpec::default_for(ClassifierKind::Knn), &x, &y).unwrap();
        let before = m.standardizer().clone();
        let outliers = vec![vec![1e9, -1e9]; 10];
        m.predict(&outliers).unwrap();
        assert_eq!(m.standardizer(), &before);
        let mean0 = x.iter().map(|r| r[0]).sum::<f64>() / x.len() as f64;
        assert!((m.standardizer().means()[0] - mean0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let m = TrainedModel::fit(&ClassifierSpec::default_for(ClassifierKind::Knn), &[vec![1.0, 2.0]], &[Dropout]).unwrap();
        assert_eq!(
            m.predict(&[vec![1.0]]),
            Err(ClassifierError::Shape { expected: 2, got: 1 })
        );
        assert_eq!(
            TrainedModel::fit(&ClassifierSpec::default_for(ClassifierKind::Knn), &[], &[]).unwrap_err(),
            ClassifierError::EmptyTrain
        );
    }

    #[test]
    fn invalid_specs() {
        assert!(ClassifierSpec::Knn { k: 0, tie: Dropout }.validate().is_err());
        assert!(ClassifierSpec::ExtraTrees {
            n_trees: 0,
            max_depth: None,
            feature_subsample: None,
            seed: 0
        }
        .validate()
        .is_err());
        assert!(ClassifierSpec::GaussianNb { variance_floor: 0.0 }.validate().is_err());
        assert!(ClassifierSpec::DecisionTree {
            max_depth: Some(0),
            min_samples_split: 2
        }
        .validate()
        .is_err());
    }

    #[test]
    fn spec_from_kv() {
        let kv = KvConfig::parse("knn.k=7\nknn.tie=graduated\nextra_trees.max_depth=none\nextra_trees.seed=9\n").unwrap();
        assert_eq!(
            ClassifierSpec::from_kv(ClassifierKind::Knn, &kv).unwrap(),
            ClassifierSpec::Knn { k: 7, tie: Graduated }
        );
        assert_eq!(
            ClassifierSpec::from_kv(ClassifierKind::ExtraTrees, &kv).unwrap(),
            ClassifierSpec::ExtraTrees {
                n_trees: 100,
                max_depth: None,
                feature_subsample: None,
                seed: 9
            }
        );
        let bad = KvConfig::parse("knn.depth=3\n").unwrap();
        assert!(matches!(ClassifierSpec::from_kv(ClassifierKind::Knn, &bad), Err(ConfigError::Unknown(_))));
        let zero = KvConfig::parse("knn.k=0\n").unwrap();
        assert!(ClassifierSpec::from_kv(ClassifierKind::Knn, &zero).is_err());
    }

    #[test]
    fn deterministic_forest() {
        let (x, y) = blobs(120, 6);
        let spec = ClassifierSpec::ExtraTrees {
            n_trees: 15,
            max_depth: None,
            feature_subsample: None,
            seed: 3,
        };
        let a = TrainedModel::fit(&spec, &x, &y).unwrap();
        let b = TrainedModel::fit(&spec, &x, &y).unwrap();
        let probe: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 5.0 - 5.0, 5.0 - i as f64 / 5.0]).collect();
        assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap());
    }

    #[test]
    fn more_trees_do_not_hurt_on_average() {
        // Noisy overlapping blobs so single trees make mistakes.
        let noisy = |seed| {
            let (mut x, y) = blobs(300, seed);
            for r in &mut x {
                r[0] /= 3.0;
                r[1] /= 3.0;
            }
            (x, y)
        };
        let (x, y) = noisy(10);
        let (xt, yt) = noisy(11);
        let mean_acc = |n_trees| {
            (0..8)
                .map(|seed| {
                    let spec = ClassifierSpec::ExtraTrees {
                        n_trees,
                        max_depth: None,
                        feature_subsample: None,
                        seed,
                    };
                    let m = TrainedModel::fit(&spec, &x, &y).unwrap();
                    accuracy(&yt, &m.predict(&xt).unwrap()).unwrap()
                })
                .sum::<f64>()
                / 8.0
        };
        let (one, many) = (mean_acc(1), mean_acc(60));
        assert!(many + 0.02 >= one, "1 tree {one}, 60 trees {many}");
    }
}
