//! Training and test datasets for the six splitting approaches.
//!
//! | approach | train population    | train rows                 | test population | test rows |
//! |----------|---------------------|----------------------------|-----------------|-----------|
//! | A        | random, sized as B1 | `x^end`                    | rest of pool    | `x^end`   |
//! | B1       | exited before T     | `x^end`                    | exited from T   | `x^end`   |
//! | B2       | exited before T     | `x^last`                   | exited from T   | `x^last`  |
//! | B2T      | exited before T     | `x^last`                   | exited from T   | `x^T`     |
//! | B3T      | exited before T     | `x^t`, next(start)..=last  | exited from T   | `x^T`     |
//! | B4T      | exited before T     | `x^t`, next(start)..=end   | exited from T   | `x^T`     |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::features::{Extractor, FeatureError, FeatureVector};
use crate::records::{Cohort, Label, StudentStructure};
use crate::rng;
use crate::terms::{Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error(transparent)]
    Range(#[from] TermError),
    #[error("{approach} at {t}: {role} set is empty ({population})")]
    Empty {
        approach: SplitApproach,
        t: Term,
        role: Role,
        population: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitApproach {
    A,
    B1,
    B2,
    B2T,
    B3T,
    B4T,
}

impl SplitApproach {
    pub const ALL: [SplitApproach; 6] = [
        SplitApproach::A,
        SplitApproach::B1,
        SplitApproach::B2,
        SplitApproach::B2T,
        SplitApproach::B3T,
        SplitApproach::B4T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SplitApproach::A => "A",
            SplitApproach::B1 => "B1",
            SplitApproach::B2 => "B2",
            SplitApproach::B2T => "B2T",
            SplitApproach::B3T => "B3T",
            SplitApproach::B4T => "B4T",
        }
    }

    /// Row rule applied to the training population.
    fn train_rule(self) -> RowRule {
        match self {
            SplitApproach::A | SplitApproach::B1 => RowRule::End,
            SplitApproach::B2 | SplitApproach::B2T => RowRule::Last,
            SplitApproach::B3T => RowRule::HistoryToLast,
            SplitApproach::B4T => RowRule::HistoryToEnd,
        }
    }

    fn test_rule(self, t: Term) -> RowRule {
        match self {
            SplitApproach::A | SplitApproach::B1 => RowRule::End,
            SplitApproach::B2 => RowRule::Last,
            SplitApproach::B2T | SplitApproach::B3T | SplitApproach::B4T => RowRule::At(t),
        }
    }
}

impl fmt::Display for SplitApproach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitApproach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        SplitApproach::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown approach `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitRequest {
    pub approach: SplitApproach,
    pub reference: Term,
    /// Only used by approach A.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Train,
    Test,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Train => "train",
            Role::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowRef {
    pub student_id: String,
    pub as_of: Term,
}

/// Why a student contributed no rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExclusionReason {
    /// No course records usable for the requested vector.
    EmptyHistory,
    /// `last(s) = start(s)`, so `x^last` would be the freshman vector.
    SingleTerm,
    /// `start(s) = T`, so `x^T` would be the freshman vector.
    StartsAtReference,
    /// `T > end(s)`: no activity in the term before `T`.
    InactiveAtReference,
}

impl ExclusionReason {
    pub fn code(self) -> &'static str {
        match self {
            ExclusionReason::EmptyHistory => "empty_history",
            ExclusionReason::SingleTerm => "single_term",
            ExclusionReason::StartsAtReference => "starts_at_reference",
            ExclusionReason::InactiveAtReference => "inactive_at_reference",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub student_id: String,
    pub role: Role,
    pub reason: ExclusionReason,
}

/// An `n x m` feature matrix with labels and row provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
    pub rows: Vec<RowRef>,
    pub request: SplitRequest,
    pub role: Role,
}

impl LabeledDataset {
    fn from_vectors(
        mut vectors: Vec<FeatureVector>,
        feature_names: Vec<String>,
        request: SplitRequest,
        role: Role,
    ) -> Self {
        vectors.sort_by(|a, b| (&a.student_id, a.as_of).cmp(&(&b.student_id, b.as_of)));
        let mut x = Vec::with_capacity(vectors.len());
        let mut y = Vec::with_capacity(vectors.len());
        let mut rows = Vec::with_capacity(vectors.len());
        for v in vectors {
            y.push(v.label.expect("split populations only contain exited students"));
            rows.push(RowRef {
                student_id: v.student_id,
                as_of: v.as_of,
            });
            x.push(v.values);
        }
        Self {
            feature_names,
            x,
            y,
            rows,
            request,
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn student_ids(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.student_id.as_str()).collect()
    }

    pub fn n_students(&self) -> usize {
        self.student_ids().len()
    }

    /// Feature columns plus `label`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, label) in self.x.iter().zip(&self.y) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.as_u8().to_string());
            w.write_record(&rec)?;
        }
        w.flush()
    }

    /// `student_id,as_of,role` sidecar, one line per dataset row.
    pub fn write_provenance<W: Write>(&self, out: W, with_header: bool) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if with_header {
            w.write_record(["student_id", "as_of", "role"])?;
        }
        for r in &self.rows {
            w.write_record([r.student_id.as_str(), &r.as_of.to_string(), &self.role.to_string()])?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub exclusions: Vec<Exclusion>,
}

impl Split {
    pub fn exclusion_counts(&self) -> BTreeMap<(Role, ExclusionReason), usize> {
        let mut m = BTreeMap::new();
        for e in &self.exclusions {
            *m.entry((e.role, e.reason)).or_insert(0) += 1;
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
enum RowRule {
    End,
    Last,
    At(Term),
    HistoryToLast,
    HistoryToEnd,
}

fn classify(rule: RowRule, err: FeatureError) -> ExclusionReason {
    match (rule, err) {
        (_, FeatureError::EmptyWindow { .. }) => ExclusionReason::EmptyHistory,
        (_, FeatureError::AfterEnd { .. }) => ExclusionReason::InactiveAtReference,
        (RowRule::At(_), FeatureError::AtOrBeforeStart { .. }) => ExclusionReason::StartsAtReference,
        (_, FeatureError::AtOrBeforeStart { .. }) => ExclusionReason::SingleTerm,
    }
}

fn rows_for(
    extractor: &Extractor,
    s: &StudentStructure,
    rule: RowRule,
) -> Result<Vec<FeatureVector>, ExclusionReason> {
    if s.is_inactive() {
        return Err(ExclusionReason::EmptyHistory);
    }
    let cal = extractor.calendar();
    match rule {
        RowRule::End => extractor.at_end(s).map(|v| vec![v]).map_err(|e| classify(rule, e)),
        RowRule::Last => extractor.at_last(s).map(|v| vec![v]).map_err(|e| classify(rule, e)),
        RowRule::At(t) => extractor.at(s, t).map(|v| vec![v]).map_err(|e| classify(rule, e)),
        RowRule::HistoryToLast | RowRule::HistoryToEnd => {
            if s.last() <= s.entrance() {
                return Err(ExclusionReason::SingleTerm);
            }
            let hi = match rule {
                RowRule::HistoryToLast => s.last(),
                _ => s.end(cal),
            };
            let rows = extractor.expand_history(s, cal.next(s.entrance()), hi);
            if rows.is_empty() {
                Err(ExclusionReason::EmptyHistory)
            } else {
                Ok(rows)
            }
        }
    }
}

fn collect_rows<'a>(
    extractor: &Extractor,
    students: impl IntoIterator<Item = &'a StudentStructure>,
    rule: RowRule,
    role: Role,
    exclusions: &mut Vec<Exclusion>,
) -> Vec<FeatureVector> {
    let mut out = Vec::new();
    for s in students {
        match rows_for(extractor, s, rule) {
            Ok(rows) => out.extend(rows),
            Err(reason) => exclusions.push(Exclusion {
                student_id: s.id().to_string(),
                role,
                reason,
            }),
        }
    }
    out
}

/// Training rows for `approach` over an arbitrary exited population, used
/// when refitting on every exited student.
pub fn training_rows<'a>(
    extractor: &Extractor,
    approach: SplitApproach,
    students: impl IntoIterator<Item = &'a StudentStructure>,
) -> (Vec<FeatureVector>, Vec<Exclusion>) {
    let mut exclusions = Vec::new();
    let rows = collect_rows(extractor, students, approach.train_rule(), Role::Train, &mut exclusions);
    (rows, exclusions)
}

/// `x^t` for each student, with the same exclusion rules as a test set.
pub fn reference_rows<'a>(
    extractor: &Extractor,
    t: Term,
    students: impl IntoIterator<Item = &'a StudentStructure>,
) -> (Vec<FeatureVector>, Vec<Exclusion>) {
    let mut exclusions = Vec::new();
    let rows = collect_rows(extractor, students, RowRule::At(t), Role::Test, &mut exclusions);
    (rows, exclusions)
}

/// Materializes the train/test pair for one request.
pub fn build_split(cohort: &Cohort, extractor: &Extractor, req: SplitRequest) -> Result<Split, SplitError> {
    let t = req.reference;
    let before = cohort.exited_before(t)?;
    let from = cohort.exited_from(t)?;
    let names = extractor.spec().names();
    let mut exclusions = Vec::new();

    let (train_rows, test_rows) = if req.approach == SplitApproach::A {
        let mut train = collect_rows(extractor, before, RowRule::End, Role::Train, &mut exclusions);
        let test = collect_rows(extractor, from, RowRule::End, Role::Test, &mut exclusions);
        let n_train = train.len();
        let mut pool = train;
        pool.extend(test);
        pool.sort_by(|a, b| a.student_id.cmp(&b.student_id));
        let mut rng = rng::stream(req.seed);
        rng::sample_prefix(&mut rng, &mut pool, n_train);
        let test = pool.split_off(n_train);
        train = pool;
        (train, test)
    } else {
        let train = collect_rows(extractor, before, req.approach.train_rule(), Role::Train, &mut exclusions);
        let test = collect_rows(extractor, from, req.approach.test_rule(t), Role::Test, &mut exclusions);
        (train, test)
    };

    for (rows, role, population) in [
        (&train_rows, Role::Train, "students exited before T"),
        (&test_rows, Role::Test, "students exited from T"),
    ] {
        if rows.is_empty() {
            return Err(SplitError::Empty {
                approach: req.approach,
                t,
                role,
                population,
            });
        }
    }
    exclusions.sort_by(|a, b| (a.role, &a.student_id).cmp(&(b.role, &b.student_id)));
    Ok(Split {
        train: LabeledDataset::from_vectors(train_rows, names.clone(), req, Role::Train),
        test: LabeledDataset::from_vectors(test_rows, names, req, Role::Test),
        exclusions,
    })
}
