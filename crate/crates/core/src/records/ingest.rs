//! CSV ingestion of `students.csv` and `courses.csv`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::PathBuf;

use log::{debug, warn};
use thiserror::Error;

use super::{Cohort, CourseRecord, EnrollmentStatus, RecordError, StudentStructure};
use crate::config::{invalid, ConfigError, KvConfig};
use crate::terms::{parse_term, Calendar, Term, TermError, TermRange};

const STUDENT_COLUMNS: [&str; 4] = ["student_id", "entrance_term", "status", "exit_term"];
const COURSE_COLUMNS: [&str; 6] = [
    "student_id",
    "course_code",
    "term",
    "score",
    "attendance_pct",
    "result",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: {source}")]
    Csv {
        file: &'static str,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: &'static str, column: String },
    #[error("{file} row {row}: column `{column}`: {message}")]
    Field {
        file: &'static str,
        row: u64,
        column: &'static str,
        message: String,
    },
    #[error("students.csv row {row}: {source}")]
    Student {
        row: u64,
        #[source]
        source: RecordError,
    },
    #[error("duplicate student id `{id}` at students.csv row {row}")]
    DuplicateStudent { id: String, row: u64 },
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Ingestion settings: calendar, cohort window and mini-term remapping.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub calendar: Calendar,
    pub range: TermRange,
    pub mini_terms: BTreeMap<String, u16>,
    pub attr_dictionary: Option<PathBuf>,
}

impl IngestConfig {
    pub fn new(calendar: Calendar, range: TermRange) -> Self {
        Self {
            calendar,
            range,
            mini_terms: BTreeMap::new(),
            attr_dictionary: None,
        }
    }

    /// Reads `terms_per_year`, `range_start`, `range_end`, `map.<TOKEN>` and
    /// `attr_dictionary`.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self, ConfigError> {
        let per: u16 = cfg.parsed_or("terms_per_year", 2)?;
        let calendar = Calendar::new(per).map_err(|e| invalid("terms_per_year", &per.to_string(), e.to_string()))?;
        let mut mini_terms = BTreeMap::new();
        for (token, value) in cfg.with_prefix("map.") {
            let key = format!("map.{token}");
            let index: u16 = value
                .parse()
                .map_err(|_| invalid(&key, value, "expected a term index"))?;
            if index == 0 || index > per {
                return Err(invalid(&key, value, format!("index outside 1..={per}")));
            }
            mini_terms.insert(token.to_string(), index);
        }
        let term = |key: &str| -> Result<Term, ConfigError> {
            let v = cfg.require(key)?;
            parse_term(v, calendar, &BTreeMap::new()).map_err(|e| invalid(key, v, e.to_string()))
        };
        let (lo, hi) = (term("range_start")?, term("range_end")?);
        let range = TermRange::new(lo, hi).map_err(|e| invalid("range_end", &hi.to_string(), e.to_string()))?;
        Ok(Self {
            calendar,
            range,
            mini_terms,
            attr_dictionary: cfg.get("attr_dictionary").map(PathBuf::from),
        })
    }

    fn parse_term(&self, text: &str) -> Result<Term, TermError> {
        parse_term(text, self.calendar, &self.mini_terms)
    }
}

/// Integer codes for non-numeric static attribute values, keyed by
/// `(attribute, value)`. New values get the next free code in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeDictionary {
    codes: BTreeMap<String, BTreeMap<String, i64>>,
}

impl AttributeDictionary {
    /// Parses `attr.value=code` lines.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self, ConfigError> {
        let mut codes: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
        for (key, value) in cfg.iter() {
            let (attr, raw) = key
                .split_once('.')
                .ok_or_else(|| invalid(key, value, "expected attr.value"))?;
            let code: i64 = value.parse().map_err(|_| invalid(key, value, "expected an integer code"))?;
            codes.entry(attr.to_string()).or_default().insert(raw.to_string(), code);
        }
        Ok(Self { codes })
    }

    pub fn code(&self, attr: &str, value: &str) -> Option<i64> {
        self.codes.get(attr)?.get(value).copied()
    }

    fn code_or_assign(&mut self, attr: &str, value: &str) -> i64 {
        let entry = self.codes.entry(attr.to_string()).or_default();
        if let Some(&c) = entry.get(value) {
            return c;
        }
        let next = entry.values().max().map_or(0, |m| m + 1);
        entry.insert(value.to_string(), next);
        next
    }

    /// Flat `attr.value=code` form, for manifests.
    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        for (attr, values) in &self.codes {
            for (value, code) in values {
                kv.set(format!("{attr}.{value}"), code.to_string());
            }
        }
        kv
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    UnknownStudent,
    StudentOutOfRange,
    BeforeEntrance,
    AfterExit,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::UnknownStudent => "unknown_student",
            RejectReason::StudentOutOfRange => "student_out_of_range",
            RejectReason::BeforeEntrance => "before_entrance",
            RejectReason::AfterExit => "after_exit",
        })
    }
}

/// A course row that was not attached to any student.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub row: u64,
    pub student_id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub cohort: Cohort,
    pub rejects: Vec<Reject>,
    /// Students whose entrance lies outside the configured window.
    pub dropped_students: usize,
    pub duplicate_rows: usize,
    /// Students whose registered exit is later than their last course.
    pub exit_mismatches: usize,
    pub dictionary: AttributeDictionary,
}

struct PendingStudent {
    attrs: Vec<f64>,
    entrance: Term,
    status: EnrollmentStatus,
    exit: Option<Term>,
    row: u64,
    courses: Vec<CourseRecord>,
}

fn column_index(
    headers: &csv::StringRecord,
    file: &'static str,
    column: &str,
) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| IngestError::MissingColumn {
            file,
            column: column.to_string(),
        })
}

fn row_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn reader<R: Read>(src: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(src)
}

/// Reads both tables into a validated [`Cohort`].
///
/// Schema violations abort with the offending row. Course rows that cannot be
/// attached to a student are collected in [`IngestOutcome::rejects`].
pub fn ingest<S: Read, C: Read>(
    students: S,
    courses: C,
    cfg: &IngestConfig,
    mut dictionary: AttributeDictionary,
) -> Result<IngestOutcome, IngestError> {
    const SF: &str = "students.csv";
    const CF: &str = "courses.csv";

    let mut rdr = reader(students);
    let headers = rdr.headers().map_err(|source| IngestError::Csv { file: SF, source })?.clone();
    let idx: Vec<usize> = STUDENT_COLUMNS
        .iter()
        .map(|c| column_index(&headers, SF, c))
        .collect::<Result<_, _>>()?;
    let attr_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !idx.contains(i))
        .map(|(i, h)| (i, h.trim().to_string()))
        .collect();

    let mut pending: BTreeMap<String, PendingStudent> = BTreeMap::new();
    let mut out_of_range: HashSet<String> = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| IngestError::Csv { file: SF, source })?;
        let row = row_of(&rec);
        let field = |column: &'static str, message: String| IngestError::Field {
            file: SF,
            row,
            column,
            message,
        };
        let id = rec[idx[0]].to_string();
        if id.is_empty() {
            return Err(field("student_id", "empty id".into()));
        }
        let entrance = cfg
            .parse_term(&rec[idx[1]])
            .map_err(|e| field("entrance_term", e.to_string()))?;
        let status: EnrollmentStatus = rec[idx[2]].parse().map_err(|e| field("status", e))?;
        let exit = match &rec[idx[3]] {
            "" => None,
            text => Some(cfg.parse_term(text).map_err(|e| field("exit_term", e.to_string()))?),
        };
        let mut attrs = Vec::with_capacity(attr_cols.len());
        for (col, name) in &attr_cols {
            let raw = &rec[*col];
            if raw.is_empty() {
                return Err(IngestError::Field {
                    file: SF,
                    row,
                    column: "attribute",
                    message: format!("empty value for `{name}`"),
                });
            }
            let value = match (dictionary.code(name, raw), raw.parse::<f64>()) {
                (Some(code), _) => code as f64,
                (None, Ok(v)) if v.is_finite() => v,
                _ => dictionary.code_or_assign(name, raw) as f64,
            };
            attrs.push(value);
        }
        // Validate the static part now so the error carries this row.
        StudentStructure::new(id.clone(), attrs.clone(), entrance, status, exit, Vec::new())
            .map_err(|source| IngestError::Student { row, source })?;
        if pending.contains_key(&id) || out_of_range.contains(&id) {
            return Err(IngestError::DuplicateStudent { id, row });
        }
        if !cfg.range.contains(entrance) {
            out_of_range.insert(id);
            continue;
        }
        pending.insert(
            id,
            PendingStudent {
                attrs,
                entrance,
                status,
                exit,
                row,
                courses: Vec::new(),
            },
        );
    }
    if !out_of_range.is_empty() {
        warn!(
            "dropped {} students with entrance outside {}",
            out_of_range.len(),
            cfg.range
        );
    }

    let mut rdr = reader(courses);
    let headers = rdr.headers().map_err(|source| IngestError::Csv { file: CF, source })?.clone();
    let idx: Vec<usize> = COURSE_COLUMNS
        .iter()
        .map(|c| column_index(&headers, CF, c))
        .collect::<Result<_, _>>()?;
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut rejects = Vec::new();
    let mut duplicate_rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|source| IngestError::Csv { file: CF, source })?;
        let row = row_of(&rec);
        let field = |column: &'static str, message: String| IngestError::Field {
            file: CF,
            row,
            column,
            message,
        };
        let id = rec[idx[0]].to_string();
        let term = cfg.parse_term(&rec[idx[2]]).map_err(|e| field("term", e.to_string()))?;
        let score: f64 = rec[idx[3]].parse().map_err(|_| field("score", format!("`{}` is not a number", &rec[idx[3]])))?;
        if !(0.0..=10.0).contains(&score) {
            return Err(field("score", format!("{score} outside [0,10]")));
        }
        let att: f64 = rec[idx[4]]
            .parse()
            .map_err(|_| field("attendance_pct", format!("`{}` is not a number", &rec[idx[4]])))?;
        if !(0.0..=100.0).contains(&att) {
            return Err(field("attendance_pct", format!("{att} outside [0,100]")));
        }
        let passed = match &rec[idx[5]] {
            "0" => false,
            "1" => true,
            other => return Err(field("result", format!("`{other}` is not 0 or 1"))),
        };
        let fingerprint: Vec<String> = rec.iter().map(str::to_string).collect();
        if !seen.insert(fingerprint) {
            duplicate_rows += 1;
            continue;
        }
        let Some(student) = pending.get_mut(&id) else {
            let reason = if out_of_range.contains(&id) {
                RejectReason::StudentOutOfRange
            } else {
                RejectReason::UnknownStudent
            };
            rejects.push(Reject { row, student_id: id, reason });
            continue;
        };
        let reason = if term < student.entrance {
            Some(RejectReason::BeforeEntrance)
        } else if student.exit.is_some_and(|e| term > e) {
            Some(RejectReason::AfterExit)
        } else {
            None
        };
        if let Some(reason) = reason {
            rejects.push(Reject { row, student_id: id, reason });
            continue;
        }
        student.courses.push(CourseRecord {
            course_code: rec[idx[1]].to_string(),
            term,
            score,
            attendance_pct: att,
            passed,
        });
    }

    let mut exit_mismatches = 0;
    let mut students = Vec::with_capacity(pending.len());
    for (id, p) in pending {
        let last = p.courses.iter().map(|c| c.term).max();
        if let (Some(exit), Some(last)) = (p.exit, last) {
            if exit != last {
                exit_mismatches += 1;
                debug!("student {id}: exit term {exit} differs from last course term {last}; using exit term");
            }
        }
        let s = StudentStructure::new(id, p.attrs, p.entrance, p.status, p.exit, p.courses)
            .map_err(|source| IngestError::Student { row: p.row, source })?;
        students.push(s);
    }
    let attr_names = attr_cols.into_iter().map(|(_, n)| n).collect();
    let cohort = Cohort::new(students, attr_names, cfg.range, cfg.calendar)?;
    if exit_mismatches > 0 {
        warn!("{exit_mismatches} students have an exit term later than their last course term");
    }
    Ok(IngestOutcome {
        cohort,
        rejects,
        dropped_students: out_of_range.len(),
        duplicate_rows,
        exit_mismatches,
        dictionary,
    })
}

/// Per-reason reject counts, sorted by reason.
pub fn reject_counts(rejects: &[Reject]) -> BTreeMap<RejectReason, usize> {
    let mut m = BTreeMap::new();
    for r in rejects {
        *m.entry(r.reason).or_insert(0) += 1;
    }
    m
}
