//! Walk-forward evaluation grid, the point system and the final prediction
//! for enrolled students.

mod points;
mod report;

use rayon::prelude::*;
use thiserror::Error;

use crate::classifiers::{confusion, ClassifierError, ClassifierSpec, Confusion, TrainedModel};
use crate::features::Extractor;
use crate::records::{Cohort, Label};
use crate::splits::{build_split, reference_rows, training_rows, Exclusion, SplitApproach, SplitRequest};
use crate::terms::{Term, TermError};

pub use points::{score_points, PointRule, PointTable};
pub use report::{
    accuracy_csv, confusion_csv, points_csv, prediction_exclusions_csv, predictions_csv, read_accuracy_csv,
    render_svg, setsizes_csv, write_report, ParsedAccuracy, ReportBundle,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Range(#[from] TermError),
    #[error("no {0} requested")]
    Empty(&'static str),
    #[error("classifier `{0}` listed twice")]
    DuplicateClassifier(String),
    #[error("every cell of the accuracy table is skipped")]
    AllSkipped,
    #[error("no exited students to train on")]
    NoExited,
    #[error("training on {population}: {source}")]
    Classifier {
        population: String,
        source: ClassifierError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Scored { accuracy: f64, confusion: Confusion },
    Skipped { reason: String },
}

impl Cell {
    pub fn accuracy(&self) -> Option<f64> {
        match self {
            Cell::Scored { accuracy, .. } => Some(*accuracy),
            Cell::Skipped { .. } => None,
        }
    }
}

/// Train/test sizes for one (approach, T); zeros when the split failed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SetSize {
    pub train_students: usize,
    pub train_rows: usize,
    pub test_students: usize,
    pub test_rows: usize,
    /// Students dropped by a row precondition, either side.
    pub excluded: usize,
}

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub approaches: Vec<SplitApproach>,
    pub classifiers: Vec<ClassifierSpec>,
    pub terms: Vec<Term>,
    /// Seed for approach A's random partition.
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    pub approaches: Vec<SplitApproach>,
    pub classifiers: Vec<String>,
    pub terms: Vec<Term>,
    /// `cells[a][c][t]`.
    pub cells: Vec<Vec<Vec<Cell>>>,
    /// `set_sizes[a][t]`.
    pub set_sizes: Vec<Vec<SetSize>>,
    /// `|S^inf_T|` per term.
    pub enrolled: Vec<usize>,
}

/// One approach's block: accuracies by classifier and term, `None` if skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub classifiers: Vec<String>,
    pub terms: Vec<Term>,
    pub cells: Vec<Vec<Option<f64>>>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl AccuracyTable {
    /// Mean over the classifier's non-skipped terms.
    pub fn period_mean(&self, c: usize) -> Option<f64> {
        mean(self.cells[c].iter().flatten().copied())
    }

    /// Mean over the term's non-skipped classifiers.
    pub fn term_mean(&self, t: usize) -> Option<f64> {
        mean(self.cells.iter().filter_map(|row| row[t]))
    }

    /// Mean over every non-skipped cell.
    pub fn overall_mean(&self) -> Option<f64> {
        mean(self.cells.iter().flatten().flatten().copied())
    }

    pub fn classifier_index(&self, name: &str) -> Option<usize> {
        self.classifiers.iter().position(|c| c == name)
    }
}

impl EvaluationGrid {
    pub fn approach_index(&self, a: SplitApproach) -> Option<usize> {
        self.approaches.iter().position(|x| *x == a)
    }

    pub fn table(&self, approach: SplitApproach) -> Option<AccuracyTable> {
        let a = self.approach_index(approach)?;
        Some(AccuracyTable {
            classifiers: self.classifiers.clone(),
            terms: self.terms.clone(),
            cells: self.cells[a]
                .iter()
                .map(|row| row.iter().map(Cell::accuracy).collect())
                .collect(),
        })
    }
}

fn score_cell(spec: &ClassifierSpec, train: &crate::splits::LabeledDataset, test: &crate::splits::LabeledDataset) -> Cell {
    let fitted = TrainedModel::fit_dataset(spec, train).and_then(|m| m.predict(&test.x));
    match fitted.and_then(|pred| confusion(&test.y, &pred)) {
        Ok(m) => Cell::Scored {
            accuracy: m.accuracy(),
            confusion: m,
        },
        Err(e) => Cell::Skipped { reason: e.to_string() },
    }
}

/// Runs every (approach, classifier, T) cell. Cells run in parallel and are
/// collected in key order, so the grid does not depend on scheduling.
pub fn run_grid(cohort: &Cohort, extractor: &Extractor, cfg: &GridConfig) -> Result<EvaluationGrid, EvalError> {
    for (empty, what) in [
        (cfg.approaches.is_empty(), "approaches"),
        (cfg.classifiers.is_empty(), "classifiers"),
        (cfg.terms.is_empty(), "terms"),
    ] {
        if empty {
            return Err(EvalError::Empty(what));
        }
    }
    let names: Vec<String> = cfg.classifiers.iter().map(|s| s.name().to_string()).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(EvalError::DuplicateClassifier(n.clone()));
        }
    }
    for spec in &cfg.classifiers {
        spec.validate().map_err(|source| EvalError::Classifier {
            population: "spec validation".into(),
            source,
        })?;
    }
    for &t in &cfg.terms {
        cohort.range().check(t)?;
    }
    let enrolled = cfg
        .terms
        .iter()
        .map(|&t| cohort.enrolled(t).map(|v| v.len()))
        .collect::<Result<Vec<_>, _>>()?;

    let tasks: Vec<(SplitApproach, Term)> = cfg
        .approaches
        .iter()
        .flat_map(|&a| cfg.terms.iter().map(move |&t| (a, t)))
        .collect();
    let results: Vec<(SetSize, Vec<Cell>)> = tasks
        .par_iter()
        .map(|&(approach, t)| {
            let req = SplitRequest {
                approach,
                reference: t,
                seed: cfg.split_seed,
            };
            match build_split(cohort, extractor, req) {
                Ok(split) => {
                    let size = SetSize {
                        train_students: split.train.n_students(),
                        train_rows: split.train.len(),
                        test_students: split.test.n_students(),
                        test_rows: split.test.len(),
                        excluded: split.exclusions.len(),
                    };
                    let cells = cfg
                        .classifiers
                        .par_iter()
                        .map(|spec| score_cell(spec, &split.train, &split.test))
                        .collect();
                    (size, cells)
                }
                Err(e) => {
                    let reason = e.to_string();
                    let cells = cfg.classifiers.iter().map(|_| Cell::Skipped { reason: reason.clone() }).collect();
                    (SetSize::default(), cells)
                }
            }
        })
        .collect();

    let n_terms = cfg.terms.len();
    let mut cells = vec![vec![Vec::with_capacity(n_terms); names.len()]; cfg.approaches.len()];
    let mut set_sizes = vec![Vec::with_capacity(n_terms); cfg.approaches.len()];
    for (i, (size, row)) in results.into_iter().enumerate() {
        let a = i / n_terms;
        set_sizes[a].push(size);
        for (c, cell) in row.into_iter().enumerate() {
            cells[a][c].push(cell);
        }
    }
    Ok(EvaluationGrid {
        approaches: cfg.approaches.clone(),
        classifiers: names,
        terms: cfg.terms.clone(),
        cells,
        set_sizes,
        enrolled,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnrolledPrediction {
    pub approach: SplitApproach,
    pub classifier: String,
    pub reference: Term,
    pub train_rows: usize,
    /// `(student_id, predicted label)` sorted by id.
    pub predictions: Vec<(String, Label)>,
    pub exclusions: Vec<Exclusion>,
    pub notice: Option<String>,
}

/// Refits `spec` on every exited student (rows per the approach's training
/// rule) and predicts `x^F` for each student enrolled at F.
pub fn predict_enrolled(
    cohort: &Cohort,
    extractor: &Extractor,
    approach: SplitApproach,
    spec: &ClassifierSpec,
) -> Result<EnrolledPrediction, EvalError> {
    let f = cohort.range().hi();
    let enrolled = cohort.enrolled(f)?;
    let mut out = EnrolledPrediction {
        approach,
        classifier: spec.name().to_string(),
        reference: f,
        train_rows: 0,
        predictions: Vec::new(),
        exclusions: Vec::new(),
        notice: None,
    };
    if enrolled.is_empty() {
        out.notice = Some(format!("no students enrolled at {f}"));
        return Ok(out);
    }
    let (train, _) = training_rows(extractor, approach, cohort.exited_all());
    if train.is_empty() {
        return Err(EvalError::NoExited);
    }
    let x: Vec<Vec<f64>> = train.iter().map(|v| v.values.clone()).collect();
    let y: Vec<Label> = train.iter().map(|v| v.label.expect("exited students are labeled")).collect();
    let model = TrainedModel::fit(spec, &x, &y).map_err(|source| EvalError::Classifier {
        population: "all exited students".into(),
        source,
    })?;
    out.train_rows = x.len();
    let (rows, exclusions) = reference_rows(extractor, f, enrolled);
    out.exclusions = exclusions;
    if rows.is_empty() {
        out.notice = Some(format!("no enrolled student has a computable vector at {f}"));
        return Ok(out);
    }
    let xq: Vec<Vec<f64>> = rows.iter().map(|v| v.values.clone()).collect();
    let pred = model.predict(&xq).map_err(|source| EvalError::Classifier {
        population: "enrolled students".into(),
        source,
    })?;
    out.predictions = rows.into_iter().map(|v| v.student_id).zip(pred).collect();
    Ok(out)
}
