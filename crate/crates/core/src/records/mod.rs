//! Student structures and the cohort-level subsets every split is built from.

mod ingest;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::terms::{Calendar, Term, TermError, TermRange};

pub use ingest::{
    ingest, reject_counts, AttributeDictionary, IngestConfig, IngestError, IngestOutcome, Reject,
    RejectReason,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("student {id}: course term {term} precedes entrance {entrance}")]
    CourseBeforeEntrance { id: String, term: Term, entrance: Term },
    #[error("student {id}: status {status} requires an exit term")]
    MissingExit { id: String, status: EnrollmentStatus },
    #[error("student {id}: enrolled students carry no exit term")]
    UnexpectedExit { id: String },
    #[error("student {id}: exit {exit} precedes entrance {entrance}")]
    ExitBeforeEntrance { id: String, exit: Term, entrance: Term },
    #[error("student {id}: last course term {last} is after exit {exit}")]
    CourseAfterExit { id: String, last: Term, exit: Term },
    #[error("student {id}: score {score} outside [0,10]")]
    Score { id: String, score: f64 },
    #[error("student {id}: attendance {pct} outside [0,100]")]
    Attendance { id: String, pct: f64 },
    #[error("student {id}: expected {expected} static attributes, got {got}")]
    AttributeCount { id: String, expected: usize, got: usize },
    #[error("student {id}: entrance {entrance} outside cohort range {range}")]
    EntranceOutOfRange { id: String, entrance: Term, range: TermRange },
    #[error("duplicate student id {0}")]
    DuplicateStudent(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Binary outcome label: dropout is 0, graduation is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Label {
    Dropout = 0,
    Graduated = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Dropout),
            1 => Some(Label::Graduated),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnrollmentStatus {
    Graduated,
    Dropout,
    Enrolled,
}

impl EnrollmentStatus {
    pub fn label(self) -> Option<Label> {
        match self {
            EnrollmentStatus::Graduated => Some(Label::Graduated),
            EnrollmentStatus::Dropout => Some(Label::Dropout),
            EnrollmentStatus::Enrolled => None,
        }
    }

    pub fn has_exited(self) -> bool {
        self != EnrollmentStatus::Enrolled
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnrollmentStatus::Graduated => "graduated",
            EnrollmentStatus::Dropout => "dropout",
            EnrollmentStatus::Enrolled => "enrolled",
        }
    }
}

impl fmt::Display for EnrollmentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnrollmentStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "graduated" => Ok(EnrollmentStatus::Graduated),
            "dropout" => Ok(EnrollmentStatus::Dropout),
            "enrolled" => Ok(EnrollmentStatus::Enrolled),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CourseRecord {
    pub course_code: String,
    pub term: Term,
    pub score: f64,
    pub attendance_pct: f64,
    pub passed: bool,
}

/// One student's static attributes, entrance/exit and course history.
///
/// Courses are kept sorted by term (stable, so retakes keep input order).
#[derive(Debug, Clone, PartialEq)]
pub struct StudentStructure {
    id: String,
    static_attrs: Vec<f64>,
    entrance: Term,
    status: EnrollmentStatus,
    exit_term: Option<Term>,
    courses: Vec<CourseRecord>,
}

impl StudentStructure {
    pub fn new(
        id: impl Into<String>,
        static_attrs: Vec<f64>,
        entrance: Term,
        status: EnrollmentStatus,
        exit_term: Option<Term>,
        mut courses: Vec<CourseRecord>,
    ) -> Result<Self, RecordError> {
        let id = id.into();
        courses.sort_by_key(|c| c.term);
        for c in &courses {
            if c.term < entrance {
                return Err(RecordError::CourseBeforeEntrance {
                    id,
                    term: c.term,
                    entrance,
                });
            }
            if !(0.0..=10.0).contains(&c.score) {
                return Err(RecordError::Score { id, score: c.score });
            }
            if !(0.0..=100.0).contains(&c.attendance_pct) {
                return Err(RecordError::Attendance {
                    id,
                    pct: c.attendance_pct,
                });
            }
        }
        match (status, exit_term) {
            (EnrollmentStatus::Enrolled, Some(_)) => return Err(RecordError::UnexpectedExit { id }),
            (EnrollmentStatus::Enrolled, None) => {}
            (_, None) => return Err(RecordError::MissingExit { id, status }),
            (_, Some(exit)) => {
                if exit < entrance {
                    return Err(RecordError::ExitBeforeEntrance { id, exit, entrance });
                }
                if let Some(last) = courses.last().map(|c| c.term) {
                    if last > exit {
                        return Err(RecordError::CourseAfterExit { id, last, exit });
                    }
                }
            }
        }
        Ok(Self {
            id,
            static_attrs,
            entrance,
            status,
            exit_term,
            courses,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn static_attrs(&self) -> &[f64] {
        &self.static_attrs
    }

    /// `start(s)`.
    pub fn entrance(&self) -> Term {
        self.entrance
    }

    pub fn status(&self) -> EnrollmentStatus {
        self.status
    }

    pub fn exit_term(&self) -> Option<Term> {
        self.exit_term
    }

    pub fn courses(&self) -> &[CourseRecord] {
        &self.courses
    }

    pub fn label(&self) -> Option<Label> {
        self.status.label()
    }

    /// `last(s)`: latest course term, or the entrance for an empty history.
    pub fn last(&self) -> Term {
        self.courses.last().map_or(self.entrance, |c| c.term)
    }

    /// `end(s) = next(last(s))`.
    pub fn end(&self, calendar: Calendar) -> Term {
        calendar.next(self.last())
    }

    /// No course records at all.
    pub fn is_inactive(&self) -> bool {
        self.courses.is_empty()
    }

    /// A copy keeping only the courses for which `keep` holds.
    pub fn retain_courses(&self, keep: impl Fn(&CourseRecord) -> bool) -> Self {
        Self {
            courses: self.courses.iter().filter(|c| keep(c)).cloned().collect(),
            ..self.clone()
        }
    }
}

/// The set `S`: students whose entrance lies in `[I..F]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    students: Vec<StudentStructure>,
    attr_names: Vec<String>,
    range: TermRange,
    calendar: Calendar,
}

impl Cohort {
    /// Validates entrance ranges, attribute widths and id uniqueness, then
    /// sorts students by id.
    pub fn new(
        mut students: Vec<StudentStructure>,
        attr_names: Vec<String>,
        range: TermRange,
        calendar: Calendar,
    ) -> Result<Self, RecordError> {
        students.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in students.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(RecordError::DuplicateStudent(pair[0].id.clone()));
            }
        }
        for s in &students {
            if !range.contains(s.entrance) {
                return Err(RecordError::EntranceOutOfRange {
                    id: s.id.clone(),
                    entrance: s.entrance,
                    range,
                });
            }
            if s.static_attrs.len() != attr_names.len() {
                return Err(RecordError::AttributeCount {
                    id: s.id.clone(),
                    expected: attr_names.len(),
                    got: s.static_attrs.len(),
                });
            }
        }
        Ok(Self {
            students,
            attr_names,
            range,
            calendar,
        })
    }

    pub fn students(&self) -> &[StudentStructure] {
        &self.students
    }

    pub fn attr_names(&self) -> &[String] {
        &self.attr_names
    }

    pub fn range(&self) -> TermRange {
        self.range
    }

    pub fn calendar(&self) -> Calendar {
        self.calendar
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&StudentStructure> {
        self.students
            .binary_search_by(|s| s.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.students[i])
    }

    /// Same cohort with each student passed through `f`.
    pub fn map_students(&self, f: impl Fn(&StudentStructure) -> StudentStructure) -> Self {
        Self {
            students: self.students.iter().map(f).collect(),
            ..self.clone()
        }
    }

    /// `S^{I..prev(T)}`: exited within `[I..prev(T)]`.
    pub fn exited_before(&self, t: Term) -> Result<Vec<&StudentStructure>, TermError> {
        self.range.check(t)?;
        let lo = self.range.lo();
        Ok(self
            .students
            .iter()
            .filter(|s| s.status.has_exited())
            .filter(|s| s.exit_term.is_some_and(|e| lo <= e && e < t))
            .collect())
    }

    /// `S^{T..F}_T`: exited within `[T..F]` with entrance at or before `T`.
    pub fn exited_from(&self, t: Term) -> Result<Vec<&StudentStructure>, TermError> {
        self.range.check(t)?;
        let hi = self.range.hi();
        Ok(self
            .students
            .iter()
            .filter(|s| s.status.has_exited() && s.entrance <= t)
            .filter(|s| s.exit_term.is_some_and(|e| t <= e && e <= hi))
            .collect())
    }

    /// `S^∞_T`: still enrolled with entrance at or before `T`.
    pub fn enrolled(&self, t: Term) -> Result<Vec<&StudentStructure>, TermError> {
        self.range.check(t)?;
        Ok(self
            .students
            .iter()
            .filter(|s| s.status == EnrollmentStatus::Enrolled && s.entrance <= t)
            .collect())
    }

    /// `S^{I..F}`: every student who exited within the cohort range.
    pub fn exited_all(&self) -> Vec<&StudentStructure> {
        let range = self.range;
        self.students
            .iter()
            .filter(|s| s.exit_term.is_some_and(|e| range.contains(e)))
            .collect()
    }
}

#[cfg(test)]
pub(crate) fn ids<'a>(
    students: impl IntoIterator<Item = &'a StudentStructure>,
) -> std::collections::BTreeSet<&'a str> {
    students.into_iter().map(|s| s.id()).collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn term(text: &str) -> Term {
        Calendar::default().parse(text).unwrap()
    }

    pub fn course(code: &str, t: &str, score: f64, att: f64, passed: bool) -> CourseRecord {
        CourseRecord {
            course_code: code.into(),
            term: term(t),
            score,
            attendance_pct: att,
            passed,
        }
    }

    pub fn student(
        id: &str,
        entrance: &str,
        status: EnrollmentStatus,
        exit: Option<&str>,
        courses: Vec<CourseRecord>,
    ) -> StudentStructure {
        StudentStructure::new(
            id,
            vec![19.0, 1.0, 3.0],
            term(entrance),
            status,
            exit.map(term),
            courses,
        )
        .unwrap()
    }

    /// One course per term from `from` through `to`.
    pub fn steady(id: &str, from: &str, to: &str, status: EnrollmentStatus, exit: Option<&str>) -> StudentStructure {
        let cal = Calendar::default();
        let courses = cal
            .iter(term(from), term(to))
            .enumerate()
            .map(|(i, t)| CourseRecord {
                course_code: format!("C{i}"),
                term: t,
                score: 5.0 + (i % 5) as f64,
                attendance_pct: 60.0 + (i % 4) as f64 * 10.0,
                passed: i % 3 != 2,
            })
            .collect();
        StudentStructure::new(id, vec![19.0, 1.0, 3.0], term(from), status, exit.map(term), courses).unwrap()
    }

    pub fn cohort(students: Vec<StudentStructure>) -> Cohort {
        Cohort::new(
            students,
            vec!["entrance_age".into(), "sex_code".into(), "degree_code".into()],
            TermRange::new(term("2009.1"), term("2019.1")).unwrap(),
            Calendar::default(),
        )
        .unwrap()
    }
}
