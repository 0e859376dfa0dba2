//! Incremental feature vectors `x^t_s`.
//!
//! A vector "as of" term `t` is the student's static block followed by
//! time-based aggregates over course records with term strictly before `t`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::records::{Label, StudentStructure};
use crate::terms::{Calendar, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    /// `t <= start(s)`: the freshman vector is not constructed.
    #[error("student {id}: term {t} is not after entrance {start}")]
    AtOrBeforeStart { id: String, t: Term, start: Term },
    #[error("student {id}: term {t} is after end {end}")]
    AfterEnd { id: String, t: Term, end: Term },
    #[error("student {id}: no course records before {t}")]
    EmptyWindow { id: String, t: Term },
}

/// A time-based aggregate over the record window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeFeature {
    /// Distinct terms with at least one record.
    CompletedTerms,
    CoursesTaken,
    /// Records with a failing result flag.
    CoursesFailed,
    MeanAttendance,
    MeanScore,
    /// Calendar terms elapsed since entrance, active or not.
    ElapsedTerms,
}

impl TimeFeature {
    pub const CANONICAL: [TimeFeature; 5] = [
        TimeFeature::CompletedTerms,
        TimeFeature::CoursesTaken,
        TimeFeature::CoursesFailed,
        TimeFeature::MeanAttendance,
        TimeFeature::MeanScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimeFeature::CompletedTerms => "completed_terms",
            TimeFeature::CoursesTaken => "courses_taken",
            TimeFeature::CoursesFailed => "courses_failed",
            TimeFeature::MeanAttendance => "mean_attendance",
            TimeFeature::MeanScore => "mean_score",
            TimeFeature::ElapsedTerms => "elapsed_terms",
        }
    }
}

impl fmt::Display for TimeFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimeFeature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeFeature::CANONICAL
            .iter()
            .chain(&[TimeFeature::ElapsedTerms])
            .copied()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| format!("unknown time feature `{s}`"))
    }
}

/// Column layout: static attribute names, then time-based features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSetSpec {
    pub static_names: Vec<String>,
    pub time_features: Vec<TimeFeature>,
}

impl FeatureSetSpec {
    pub fn canonical(static_names: Vec<String>) -> Self {
        Self {
            static_names,
            time_features: TimeFeature::CANONICAL.to_vec(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.static_names
            .iter()
            .cloned()
            .chain(self.time_features.iter().map(|f| f.name().to_string()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.static_names.len() + self.time_features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub student_id: String,
    pub as_of: Term,
    pub values: Vec<f64>,
    pub label: Option<Label>,
}

/// Builds feature vectors under one layout and calendar.
#[derive(Debug, Clone)]
pub struct Extractor {
    spec: FeatureSetSpec,
    calendar: Calendar,
}

impl Extractor {
    pub fn new(spec: FeatureSetSpec, calendar: Calendar) -> Self {
        Self { spec, calendar }
    }

    pub fn spec(&self) -> &FeatureSetSpec {
        &self.spec
    }

    pub fn calendar(&self) -> Calendar {
        self.calendar
    }

    /// `x^t_s`, defined for `start(s) < t <= end(s)` with a nonempty window.
    pub fn at(&self, s: &StudentStructure, t: Term) -> Result<FeatureVector, FeatureError> {
        let start = s.entrance();
        if t <= start {
            return Err(FeatureError::AtOrBeforeStart {
                id: s.id().to_string(),
                t,
                start,
            });
        }
        let end = s.end(self.calendar);
        if t > end {
            return Err(FeatureError::AfterEnd {
                id: s.id().to_string(),
                t,
                end,
            });
        }
        // Courses are sorted by term, so the window is a prefix.
        let n = s.courses().partition_point(|c| c.term < t);
        let window = &s.courses()[..n];
        if window.is_empty() {
            return Err(FeatureError::EmptyWindow {
                id: s.id().to_string(),
                t,
            });
        }
        let taken = window.len() as f64;
        let mut values = Vec::with_capacity(self.spec.len());
        values.extend_from_slice(s.static_attrs());
        for feature in &self.spec.time_features {
            let v = match feature {
                TimeFeature::CompletedTerms => {
                    window.iter().map(|c| c.term).collect::<BTreeSet<_>>().len() as f64
                }
                TimeFeature::CoursesTaken => taken,
                TimeFeature::CoursesFailed => window.iter().filter(|c| !c.passed).count() as f64,
                TimeFeature::MeanAttendance => {
                    window.iter().map(|c| c.attendance_pct).sum::<f64>() / taken
                }
                TimeFeature::MeanScore => window.iter().map(|c| c.score).sum::<f64>() / taken,
                TimeFeature::ElapsedTerms => self.calendar.distance(start, t) as f64,
            };
            values.push(v);
        }
        Ok(FeatureVector {
            student_id: s.id().to_string(),
            as_of: t,
            values,
            label: s.label(),
        })
    }

    /// `x^last`: everything before the final active term.
    pub fn at_last(&self, s: &StudentStructure) -> Result<FeatureVector, FeatureError> {
        self.at(s, s.last())
    }

    /// `x^end`: the complete history.
    pub fn at_end(&self, s: &StudentStructure) -> Result<FeatureVector, FeatureError> {
        self.at(s, s.end(self.calendar))
    }

    /// One vector per term in `[max(lo, next(start))..min(hi, end)]`, skipping
    /// terms whose window is empty.
    pub fn expand_history(&self, s: &StudentStructure, lo: Term, hi: Term) -> Vec<FeatureVector> {
        let lo = lo.max(self.calendar.next(s.entrance()));
        let hi = hi.min(s.end(self.calendar));
        self.calendar
            .iter(lo, hi)
            .filter_map(|t| self.at(s, t).ok())
            .collect()
    }
}
