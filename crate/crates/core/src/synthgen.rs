//! Synthetic cohorts with a discrete-time logistic dropout hazard.
//!
//! Each student draws a latent ability, then takes courses every term from
//! entrance on. After each term the student graduates (degree length reached
//! and enough courses passed), drops out with probability
//! `sigmoid(logit(baseline) + ability_weight*a + failed_weight*fail_frac
//! + age_weight*(age-18) + regime)` scaled in odds by the early multiplier,
//! or continues. A dropout is registered up to `exit_lag_max` terms after
//! the last term with records, as abandonment is noticed late.
//! Lives are simulated to completion and then truncated at F;
//! students still active at F become `enrolled` and their real outcome goes
//! to the sealed truth list.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{invalid, ConfigError, KvConfig};
use crate::records::{Cohort, CourseRecord, EnrollmentStatus, Label, RecordError, StudentStructure};
use crate::rng::{bounded, derive_seed, StreamRng};
use crate::terms::{Calendar, Term, TermRange};

/// Hard stop for the simulated continuation when no time limit applies.
const MAX_TERMS: u32 = 200;

pub const ATTR_NAMES: [&str; 3] = ["entrance_age", "sex_code", "degree_code"];

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("generated record invalid: {0}")]
    Record(#[from] RecordError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeChange {
    /// First term under the new regime.
    pub term: Term,
    /// Added to the hazard logit.
    pub shift: f64,
    /// Degrees `0..degrees` are affected.
    pub degrees: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub calendar: Calendar,
    pub range: TermRange,
    pub intake_per_term: u32,
    pub n_degrees: u32,
    pub degree_length_terms: u32,
    pub required_courses: u32,
    /// Administrative dropout after this many terms; 0 disables it.
    pub time_limit_terms: u32,
    pub courses_min: u32,
    pub courses_max: u32,
    pub ability_mean: f64,
    pub ability_sd: f64,
    pub score_base: f64,
    pub score_ability: f64,
    pub score_noise: f64,
    /// Per-term shock shared by all of a student's courses in that term.
    pub term_noise: f64,
    pub pass_score: f64,
    pub attendance_base: f64,
    pub attendance_ability: f64,
    pub attendance_noise: f64,
    pub min_attendance: f64,
    /// Per-term dropout probability at zero covariates; 0 disables dropout.
    pub hazard_baseline: f64,
    pub hazard_ability: f64,
    pub hazard_failed: f64,
    pub hazard_age: f64,
    /// Odds multiplier for the first `early_terms` terms.
    pub early_multiplier: f64,
    pub early_terms: u32,
    /// Registered exit of a hazard dropout lags its last active term by a
    /// uniform draw from `0..=exit_lag_max` terms.
    pub exit_lag_max: u32,
    /// Chance that a dropout first sits one disengaged term, with attendance
    /// scaled by `abandon_attendance_factor` and scores lowered by
    /// `abandon_score_drop`, before leaving.
    pub abandon_prob: f64,
    pub abandon_attendance_factor: f64,
    pub abandon_score_drop: f64,
    pub regime: Option<RegimeChange>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let calendar = Calendar::default();
        let t = |y| Term::new(y, 1, calendar).expect("valid default term");
        GeneratorConfig {
            seed: 0,
            calendar,
            range: TermRange::new(t(2009), t(2019)).expect("valid default range"),
            intake_per_term: 150,
            n_degrees: 4,
            degree_length_terms: 8,
            required_courses: 32,
            time_limit_terms: 16,
            courses_min: 4,
            courses_max: 6,
            ability_mean: 0.0,
            ability_sd: 1.0,
            score_base: 6.5,
            score_ability: 1.2,
            score_noise: 1.5,
            term_noise: 1.0,
            pass_score: 5.0,
            attendance_base: 82.0,
            attendance_ability: 6.0,
            attendance_noise: 10.0,
            min_attendance: 60.0,
            hazard_baseline: 0.025,
            hazard_ability: -1.0,
            hazard_failed: 3.0,
            hazard_age: 0.05,
            early_multiplier: 2.0,
            early_terms: 2,
            exit_lag_max: 2,
            abandon_prob: 0.8,
            abandon_attendance_factor: 0.5,
            abandon_score_drop: 2.5,
            regime: None,
        }
    }
}

impl GeneratorConfig {
    /// Reads keys over the defaults. Unknown keys are errors.
    pub fn from_kv(kv: &KvConfig) -> Result<Self, ConfigError> {
        let mut c = GeneratorConfig::default();
        let tpy: u16 = kv.parsed_or("terms_per_year", c.calendar.terms_per_year())?;
        c.calendar = Calendar::new(tpy).map_err(|e| invalid("terms_per_year", &tpy.to_string(), e.to_string()))?;
        let term = |key: &str| -> Result<Option<Term>, ConfigError> {
            kv.get(key)
                .map(|v| c.calendar.parse(v).map_err(|e| invalid(key, v, e.to_string())))
                .transpose()
        };
        let lo = term("range_start")?.unwrap_or(c.range.lo());
        let hi = term("range_end")?.unwrap_or(c.range.hi());
        c.range = TermRange::new(lo, hi).map_err(|e| invalid("range_end", &hi.to_string(), e.to_string()))?;
        let regime_term = term("regime_term")?;
        let mut regime_shift = 0.0;
        let mut regime_degrees = None;
        for (key, value) in kv.iter() {
            macro_rules! set {
                ($field:expr) => {
                    $field = value.parse().map_err(|e| invalid(key, value, format!("{e}")))?
                };
            }
            match key {
                "terms_per_year" | "range_start" | "range_end" | "regime_term" => {}
                "seed" => set!(c.seed),
                "intake_per_term" => set!(c.intake_per_term),
                "n_degrees" => set!(c.n_degrees),
                "degree_length_terms" => set!(c.degree_length_terms),
                "required_courses" => set!(c.required_courses),
                "time_limit_terms" => set!(c.time_limit_terms),
                "courses_min" => set!(c.courses_min),
                "courses_max" => set!(c.courses_max),
                "ability_mean" => set!(c.ability_mean),
                "ability_sd" => set!(c.ability_sd),
                "score_base" => set!(c.score_base),
                "score_ability" => set!(c.score_ability),
                "score_noise" => set!(c.score_noise),
                "term_noise" => set!(c.term_noise),
                "pass_score" => set!(c.pass_score),
                "attendance_base" => set!(c.attendance_base),
                "attendance_ability" => set!(c.attendance_ability),
                "attendance_noise" => set!(c.attendance_noise),
                "min_attendance" => set!(c.min_attendance),
                "hazard_baseline" => set!(c.hazard_baseline),
                "hazard_ability" => set!(c.hazard_ability),
                "hazard_failed" => set!(c.hazard_failed),
                "hazard_age" => set!(c.hazard_age),
                "early_multiplier" => set!(c.early_multiplier),
                "early_terms" => set!(c.early_terms),
                "exit_lag_max" => set!(c.exit_lag_max),
                "abandon_prob" => set!(c.abandon_prob),
                "abandon_attendance_factor" => set!(c.abandon_attendance_factor),
                "abandon_score_drop" => set!(c.abandon_score_drop),
                "regime_shift" => set!(regime_shift),
                "regime_degrees" => {
                    regime_degrees = Some(value.parse().map_err(|e| invalid(key, value, format!("{e}")))?)
                }
                _ => return Err(ConfigError::Unknown(key.to_string())),
            }
        }
        c.regime = regime_term.map(|term| RegimeChange {
            term,
            shift: regime_shift,
            degrees: regime_degrees.unwrap_or(c.n_degrees),
        });
        c.validate()?;
        Ok(c)
    }

    /// The config as `key=value` text that `from_kv` reads back unchanged.
    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        let mut put = |k: &str, v: String| kv.set(k, v);
        put("seed", self.seed.to_string());
        put("terms_per_year", self.calendar.terms_per_year().to_string());
        put("range_start", self.range.lo().to_string());
        put("range_end", self.range.hi().to_string());
        put("intake_per_term", self.intake_per_term.to_string());
        put("n_degrees", self.n_degrees.to_string());
        put("degree_length_terms", self.degree_length_terms.to_string());
        put("required_courses", self.required_courses.to_string());
        put("time_limit_terms", self.time_limit_terms.to_string());
        put("courses_min", self.courses_min.to_string());
        put("courses_max", self.courses_max.to_string());
        put("ability_mean", self.ability_mean.to_string());
        put("ability_sd", self.ability_sd.to_string());
        put("score_base", self.score_base.to_string());
        put("score_ability", self.score_ability.to_string());
        put("score_noise", self.score_noise.to_string());
        put("term_noise", self.term_noise.to_string());
        put("pass_score", self.pass_score.to_string());
        put("attendance_base", self.attendance_base.to_string());
        put("attendance_ability", self.attendance_ability.to_string());
        put("attendance_noise", self.attendance_noise.to_string());
        put("min_attendance", self.min_attendance.to_string());
        put("hazard_baseline", self.hazard_baseline.to_string());
        put("hazard_ability", self.hazard_ability.to_string());
        put("hazard_failed", self.hazard_failed.to_string());
        put("hazard_age", self.hazard_age.to_string());
        put("early_multiplier", self.early_multiplier.to_string());
        put("early_terms", self.early_terms.to_string());
        put("exit_lag_max", self.exit_lag_max.to_string());
        put("abandon_prob", self.abandon_prob.to_string());
        put("abandon_attendance_factor", self.abandon_attendance_factor.to_string());
        put("abandon_score_drop", self.abandon_score_drop.to_string());
        if let Some(r) = &self.regime {
            put("regime_term", r.term.to_string());
            put("regime_shift", r.shift.to_string());
            put("regime_degrees", r.degrees.to_string());
        }
        kv
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, value: String, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(invalid(key, &value, reason))
            }
        };
        check(self.intake_per_term >= 1, "intake_per_term", self.intake_per_term.to_string(), "must be at least 1")?;
        check(self.n_degrees >= 1, "n_degrees", self.n_degrees.to_string(), "must be at least 1")?;
        check(
            self.degree_length_terms >= 1,
            "degree_length_terms",
            self.degree_length_terms.to_string(),
            "must be at least 1",
        )?;
        check(
            self.courses_min >= 1 && self.courses_min <= self.courses_max,
            "courses_min",
            self.courses_min.to_string(),
            "need 1 <= courses_min <= courses_max",
        )?;
        check(
            (0.0..=1.0).contains(&self.hazard_baseline),
            "hazard_baseline",
            self.hazard_baseline.to_string(),
            "must be a probability",
        )?;
        for (key, v) in [
            ("abandon_prob", self.abandon_prob),
            ("abandon_attendance_factor", self.abandon_attendance_factor),
        ] {
            check((0.0..=1.0).contains(&v), key, v.to_string(), "must lie in [0, 1]")?;
        }
        check(
            self.abandon_score_drop.is_finite(),
            "abandon_score_drop",
            self.abandon_score_drop.to_string(),
            "must be finite",
        )?;
        check(
            self.early_multiplier > 0.0 && self.early_multiplier.is_finite(),
            "early_multiplier",
            self.early_multiplier.to_string(),
            "must be positive",
        )?;
        for (key, v) in [
            ("ability_sd", self.ability_sd),
            ("score_noise", self.score_noise),
            ("term_noise", self.term_noise),
            ("attendance_noise", self.attendance_noise),
        ] {
            check(v >= 0.0 && v.is_finite(), key, v.to_string(), "must be a finite non-negative number")?;
        }
        for (key, v) in [
            ("ability_mean", self.ability_mean),
            ("score_base", self.score_base),
            ("score_ability", self.score_ability),
            ("pass_score", self.pass_score),
            ("attendance_base", self.attendance_base),
            ("attendance_ability", self.attendance_ability),
            ("min_attendance", self.min_attendance),
            ("hazard_ability", self.hazard_ability),
            ("hazard_failed", self.hazard_failed),
            ("hazard_age", self.hazard_age),
        ] {
            check(v.is_finite(), key, v.to_string(), "must be finite")?;
        }
        if let Some(r) = &self.regime {
            check(r.shift.is_finite(), "regime_shift", r.shift.to_string(), "must be finite")?;
        }
        Ok(())
    }

    pub fn n_students(&self) -> usize {
        let terms = self.calendar.distance(self.range.lo(), self.range.hi()) + 1;
        terms as usize * self.intake_per_term as usize
    }
}

/// Real outcome of a student observed as enrolled at F.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub student_id: String,
    pub label: Label,
    pub exit_term: Term,
}

#[derive(Debug, Clone)]
pub struct GeneratedCohort {
    pub cohort: Cohort,
    pub truth: Vec<TruthRow>,
}

impl GeneratedCohort {
    pub fn truth_map(&self) -> BTreeMap<&str, Label> {
        self.truth.iter().map(|t| (t.student_id.as_str(), t.label)).collect()
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn unit(rng: &mut StreamRng) -> f64 {
    use rand::RngCore;
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

struct Life {
    attrs: Vec<f64>,
    courses: Vec<CourseRecord>,
    outcome: Label,
    exit: Term,
}

fn simulate(cfg: &GeneratorConfig, index: usize, entrance: Term) -> Life {
    let mut rng = StreamRng::seed_from_u64(derive_seed(cfg.seed, index as u64));
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let ability = cfg.ability_mean + cfg.ability_sd * std_normal.sample(&mut rng);
    let age = 17.0 + bounded(&mut rng, 4) as f64 + if bounded(&mut rng, 10) == 0 { bounded(&mut rng, 15) as f64 } else { 0.0 };
    let sex = bounded(&mut rng, 2) as f64;
    let degree = bounded(&mut rng, u64::from(cfg.n_degrees)) as u32;
    let cal = cfg.calendar;
    let mut courses = Vec::new();
    let mut passed_total = 0u32;
    let mut term = entrance;
    let mut leaving = false;
    for k in 0..MAX_TERMS {
        let n = cfg.courses_min + bounded(&mut rng, u64::from(cfg.courses_max - cfg.courses_min + 1)) as u32;
        let shock = cfg.term_noise * std_normal.sample(&mut rng);
        let (att_factor, score_drop) = if leaving {
            (cfg.abandon_attendance_factor, cfg.abandon_score_drop)
        } else {
            (1.0, 0.0)
        };
        let mut failed = 0u32;
        for j in 0..n {
            let score = cfg.score_base + cfg.score_ability * ability + shock - score_drop
                + cfg.score_noise * std_normal.sample(&mut rng);
            let att = att_factor
                * (cfg.attendance_base
                    + cfg.attendance_ability * ability
                    + 3.0 * shock
                    + cfg.attendance_noise * std_normal.sample(&mut rng));
            let score = round1(score.clamp(0.0, 10.0));
            let attendance_pct = round1(att.clamp(0.0, 100.0));
            let passed = score >= cfg.pass_score && attendance_pct >= cfg.min_attendance;
            if passed {
                passed_total += 1;
            } else {
                failed += 1;
            }
            courses.push(CourseRecord {
                course_code: format!("D{degree}-{:02}{j}", k % 100),
                term,
                score,
                attendance_pct,
                passed,
            });
        }
        let done = k + 1;
        if leaving {
            let lag = bounded(&mut rng, u64::from(cfg.exit_lag_max) + 1) as i64;
            return Life {
                attrs: vec![age, sex, f64::from(degree)],
                courses,
                outcome: Label::Dropout,
                exit: cal.offset(term, lag),
            };
        }
        if done >= cfg.degree_length_terms && passed_total >= cfg.required_courses {
            return Life {
                attrs: vec![age, sex, f64::from(degree)],
                courses,
                outcome: Label::Graduated,
                exit: term,
            };
        }
        let forced = cfg.time_limit_terms > 0 && done >= cfg.time_limit_terms;
        let mut drop_out = forced;
        if !drop_out && cfg.hazard_baseline > 0.0 {
            let mut x = logit(cfg.hazard_baseline)
                + cfg.hazard_ability * ability
                + cfg.hazard_failed * f64::from(failed) / f64::from(n)
                + cfg.hazard_age * (age - 18.0);
            if k < cfg.early_terms {
                x += cfg.early_multiplier.ln();
            }
            if let Some(r) = &cfg.regime {
                if term >= r.term && degree < r.degrees {
                    x += r.shift;
                }
            }
            let p = 1.0 / (1.0 + (-x).exp());
            drop_out = unit(&mut rng) < p;
            if drop_out && done < MAX_TERMS && unit(&mut rng) < cfg.abandon_prob {
                drop_out = false;
                leaving = true;
            }
        }
        if drop_out || done == MAX_TERMS {
            let lag = if drop_out && !forced {
                bounded(&mut rng, u64::from(cfg.exit_lag_max) + 1) as i64
            } else {
                0
            };
            return Life {
                attrs: vec![age, sex, f64::from(degree)],
                courses,
                outcome: Label::Dropout,
                exit: cal.offset(term, lag),
            };
        }
        term = cal.next(term);
    }
    unreachable!("loop returns by MAX_TERMS")
}

/// Builds the cohort observed at F plus the sealed outcomes of students
/// still enrolled there. Parallel over students; identical to a sequential
/// run because every student owns a derived stream.
pub fn generate(cfg: &GeneratorConfig) -> Result<GeneratedCohort, GenerateError> {
    cfg.validate()?;
    let cal = cfg.calendar;
    let f = cfg.range.hi();
    let width = cfg.n_students().to_string().len().max(5);
    let entrances: Vec<Term> = cal
        .iter(cfg.range.lo(), f)
        .flat_map(|t| std::iter::repeat(t).take(cfg.intake_per_term as usize))
        .collect();
    let lives: Vec<Life> = entrances
        .par_iter()
        .enumerate()
        .map(|(i, &e)| simulate(cfg, i, e))
        .collect();
    let mut students = Vec::with_capacity(lives.len());
    let mut truth = Vec::new();
    for (i, (life, &entrance)) in lives.into_iter().zip(&entrances).enumerate() {
        let id = format!("S{i:0width$}");
        let s = if life.exit <= f {
            let status = match life.outcome {
                Label::Graduated => EnrollmentStatus::Graduated,
                Label::Dropout => EnrollmentStatus::Dropout,
            };
            StudentStructure::new(id, life.attrs, entrance, status, Some(life.exit), life.courses)?
        } else {
            truth.push(TruthRow {
                student_id: id.clone(),
                label: life.outcome,
                exit_term: life.exit,
            });
            let observed = life.courses.into_iter().filter(|c| c.term <= f).collect();
            StudentStructure::new(id, life.attrs, entrance, EnrollmentStatus::Enrolled, None, observed)?
        };
        students.push(s);
    }
    let names = ATTR_NAMES.iter().map(|s| s.to_string()).collect();
    Ok(GeneratedCohort {
        cohort: Cohort::new(students, names, cfg.range, cal)?,
        truth,
    })
}

pub fn write_students_csv<W: Write>(cohort: &Cohort, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["student_id", "entrance_term", "status", "exit_term"];
    header.extend(cohort.attr_names().iter().map(String::as_str));
    w.write_record(&header)?;
    for s in cohort.students() {
        let mut row = vec![
            s.id().to_string(),
            s.entrance().to_string(),
            s.status().as_str().to_string(),
            s.exit_term().map(|t| t.to_string()).unwrap_or_default(),
        ];
        row.extend(s.static_attrs().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_courses_csv<W: Write>(cohort: &Cohort, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["student_id", "course_code", "term", "score", "attendance_pct", "result"])?;
    for s in cohort.students() {
        for c in s.courses() {
            w.write_record([
                s.id(),
                &c.course_code,
                &c.term.to_string(),
                &c.score.to_string(),
                &c.attendance_pct.to_string(),
                if c.passed { "1" } else { "0" },
            ])?;
        }
    }
    w.flush()
}

pub fn write_truth_csv<W: Write>(truth: &[TruthRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["student_id", "final_status", "exit_term"])?;
    for t in truth {
        let status = match t.label {
            Label::Dropout => "dropout",
            Label::Graduated => "graduated",
        };
        w.write_record([t.student_id.as_str(), status, &t.exit_term.to_string()])?;
    }
    w.flush()
}

/// Reads the file written by [`write_truth_csv`].
pub fn read_truth_csv<R: io::Read>(src: R, calendar: Calendar) -> Result<Vec<TruthRow>, String> {
    let mut r = csv::Reader::from_reader(src);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let label = match rec.get(1) {
            Some("dropout") => Label::Dropout,
            Some("graduated") => Label::Graduated,
            other => return Err(format!("bad final_status {other:?}")),
        };
        let exit_term = calendar
            .parse(rec.get(2).unwrap_or(""))
            .map_err(|e| e.to_string())?;
        rows.push(TruthRow {
            student_id: rec.get(0).unwrap_or("").to_string(),
            label,
            exit_term,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatusDurations {
    pub count: usize,
    pub mean_terms: f64,
    /// Students by number of distinct terms with records.
    pub histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntranceRow {
    pub entrance: Term,
    pub students: usize,
    pub dropouts: usize,
    pub graduates: usize,
    pub enrolled: usize,
}

impl EntranceRow {
    pub fn dropout_rate(&self) -> f64 {
        self.dropouts as f64 / self.students as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HazardRow {
    pub term: Term,
    /// Students with a course record in this term.
    pub active: usize,
    /// Of those, students exiting as dropouts in this term.
    pub dropouts: usize,
}

impl HazardRow {
    pub fn rate(&self) -> f64 {
        if self.active == 0 {
            0.0
        } else {
            self.dropouts as f64 / self.active as f64
        }
    }
}

/// Descriptive statistics over any cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSummary {
    pub students: usize,
    pub course_records: usize,
    pub by_entrance: Vec<EntranceRow>,
    pub hazard: Vec<HazardRow>,
    pub durations: BTreeMap<&'static str, StatusDurations>,
    /// Students by number of course records, in buckets of 10.
    pub records_histogram: BTreeMap<usize, usize>,
}

pub fn distinct_terms(s: &StudentStructure) -> usize {
    let mut n = 0;
    let mut prev = None;
    for c in s.courses() {
        if prev != Some(c.term) {
            n += 1;
            prev = Some(c.term);
        }
    }
    n
}

pub fn summarize(cohort: &Cohort) -> CohortSummary {
    let cal = cohort.calendar();
    let range = cohort.range();
    let mut by_entrance: BTreeMap<Term, EntranceRow> = BTreeMap::new();
    let mut active: BTreeMap<Term, (usize, usize)> = cal.iter(range.lo(), range.hi()).map(|t| (t, (0, 0))).collect();
    let mut durations: BTreeMap<&'static str, StatusDurations> = BTreeMap::new();
    let mut records_histogram = BTreeMap::new();
    let mut course_records = 0;
    for s in cohort.students() {
        let row = by_entrance.entry(s.entrance()).or_insert_with(|| EntranceRow {
            entrance: s.entrance(),
            students: 0,
            dropouts: 0,
            graduates: 0,
            enrolled: 0,
        });
        row.students += 1;
        match s.status() {
            EnrollmentStatus::Dropout => row.dropouts += 1,
            EnrollmentStatus::Graduated => row.graduates += 1,
            EnrollmentStatus::Enrolled => row.enrolled += 1,
        }
        let mut prev = None;
        for c in s.courses() {
            if prev != Some(c.term) {
                if let Some(a) = active.get_mut(&c.term) {
                    a.0 += 1;
                }
                prev = Some(c.term);
            }
        }
        if s.status() == EnrollmentStatus::Dropout {
            if let Some(a) = s.exit_term().and_then(|t| active.get_mut(&t)) {
                a.1 += 1;
            }
        }
        let n = distinct_terms(s);
        let d = durations.entry(s.status().as_str()).or_default();
        d.count += 1;
        d.mean_terms += n as f64;
        *d.histogram.entry(n).or_default() += 1;
        course_records += s.courses().len();
        *records_histogram.entry(s.courses().len() / 10 * 10).or_default() += 1;
    }
    for d in durations.values_mut() {
        d.mean_terms /= d.count as f64;
    }
    CohortSummary {
        students: cohort.len(),
        course_records,
        by_entrance: by_entrance.into_values().collect(),
        hazard: active
            .into_iter()
            .map(|(term, (active, dropouts))| HazardRow { term, active, dropouts })
            .collect(),
        durations,
        records_histogram,
    }
}

impl fmt::Display for CohortSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "students={}", self.students)?;
        writeln!(f, "course_records={}", self.course_records)?;
        writeln!(f, "\n[entrance] term,students,dropout,graduated,enrolled,dropout_rate")?;
        for r in &self.by_entrance {
            writeln!(
                f,
                "{},{},{},{},{},{:.4}",
                r.entrance,
                r.students,
                r.dropouts,
                r.graduates,
                r.enrolled,
                r.dropout_rate()
            )?;
        }
        writeln!(f, "\n[hazard] term,active,dropouts,rate")?;
        for h in &self.hazard {
            writeln!(f, "{},{},{},{:.4}", h.term, h.active, h.dropouts, h.rate())?;
        }
        writeln!(f, "\n[terms_by_status] status,count,mean_terms,histogram")?;
        for (status, d) in &self.durations {
            let hist: Vec<String> = d.histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            writeln!(f, "{status},{},{:.4},{}", d.count, d.mean_terms, hist.join(" "))?;
        }
        writeln!(f, "\n[records_per_student] bucket_start,students")?;
        for (b, n) in &self.records_histogram {
            writeln!(f, "{b},{n}")?;
        }
        Ok(())
    }
}
