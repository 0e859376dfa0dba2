//! Run configuration shared by every subcommand, and the cohort loader.

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifiers::{ClassifierKind, ClassifierSpec};
use crate::config::{invalid, ConfigError, KvConfig};
use crate::evaluation::{EvalError, GridConfig, PointRule};
use crate::features::{Extractor, FeatureSetSpec, TimeFeature};
use crate::records::{ingest, AttributeDictionary, Cohort, IngestConfig, IngestError, IngestOutcome};
use crate::splits::{SplitApproach, SplitError};
use crate::synthgen::{generate, GenerateError, GeneratorConfig};
use crate::terms::{Calendar, Term, TermRange};

/// Errors are prefixed with the module that raised them.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config: cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("config: {what} file {} does not exist", path.display())]
    MissingFile { what: &'static str, path: PathBuf },
    #[error("config: T range {lo}..{hi} is outside the data range {range}")]
    OutOfRange { lo: Term, hi: Term, range: TermRange },
    #[error("records: {0}")]
    Ingest(#[from] IngestError),
    #[error("synthgen: {0}")]
    Generate(#[from] GenerateError),
    #[error("splits: {0}")]
    Split(#[from] SplitError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv {
        students: PathBuf,
        courses: PathBuf,
        ingest: IngestConfig,
    },
    Generated(GeneratorConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub time_features: Vec<TimeFeature>,
    pub t_start: Term,
    pub t_end: Term,
    pub approaches: Vec<SplitApproach>,
    pub classifiers: Vec<ClassifierSpec>,
    pub split_seed: u64,
    pub point_rule: PointRule,
    pub final_approach: SplitApproach,
    pub confusion_terms: Vec<Term>,
}

const KEYS: &[&str] = &[
    "students",
    "courses",
    "generator",
    "terms_per_year",
    "range_start",
    "range_end",
    "attr_dictionary",
    "time_features",
    "t_start",
    "t_end",
    "approaches",
    "classifiers",
    "split_seed",
    "point_rule",
    "final_approach",
    "confusion_terms",
];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn read_text(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|source| RunError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn existing(base: &Path, value: &str, what: &'static str) -> Result<PathBuf, RunError> {
    let path = base.join(value);
    if path.is_file() {
        Ok(path)
    } else {
        Err(RunError::MissingFile { what, path })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let kv = KvConfig::parse(&read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_kv(&kv, base)
    }

    /// Relative paths resolve against `base`. Referenced files must exist.
    pub fn from_kv(kv: &KvConfig, base: &Path) -> Result<Self, RunError> {
        for (key, _) in kv.iter() {
            let prefixed = key.starts_with("map.")
                || ClassifierKind::ALL
                    .iter()
                    .any(|k| key.strip_prefix(k.name()).is_some_and(|r| r.starts_with('.')));
            if !prefixed && !KEYS.contains(&key) {
                return Err(ConfigError::Unknown(key.to_string()).into());
            }
        }

        let source = match (kv.get("generator"), kv.get("students"), kv.get("courses")) {
            (Some(g), None, None) => {
                let path = existing(base, g, "generator config")?;
                let gen_kv = KvConfig::parse(&read_text(&path)?)?;
                DataSource::Generated(GeneratorConfig::from_kv(&gen_kv)?)
            }
            (None, Some(s), Some(c)) => {
                let students = existing(base, s, "students")?;
                let courses = existing(base, c, "courses")?;
                let mut ingest = IngestConfig::from_kv(kv)?;
                if let Some(d) = &ingest.attr_dictionary {
                    let d = d.to_string_lossy().into_owned();
                    ingest.attr_dictionary = Some(existing(base, &d, "attribute dictionary")?);
                }
                DataSource::Csv {
                    students,
                    courses,
                    ingest,
                }
            }
            (Some(_), _, _) => {
                return Err(invalid("generator", "", "use either generator or students/courses, not both").into())
            }
            (None, None, _) => return Err(ConfigError::Missing("students".into()).into()),
            (None, Some(_), None) => return Err(ConfigError::Missing("courses".into()).into()),
        };
        let calendar = source.calendar();
        let range = source.range();

        let time_features = match kv.get("time_features") {
            Some(v) => list(v)
                .map(|f| f.parse().map_err(|e: String| invalid("time_features", v, e)))
                .collect::<Result<_, _>>()?,
            None => TimeFeature::CANONICAL.to_vec(),
        };
        let term = |key: &str, v: &str| calendar.parse(v).map_err(|e| invalid(key, v, e.to_string()));
        let t_start = term("t_start", kv.require("t_start")?)?;
        let t_end = term("t_end", kv.require("t_end")?)?;
        if t_start > t_end {
            return Err(invalid("t_end", &t_end.to_string(), format!("before t_start {t_start}")).into());
        }
        if !range.contains(t_start) || !range.contains(t_end) {
            return Err(RunError::OutOfRange {
                lo: t_start,
                hi: t_end,
                range,
            });
        }
        let approaches = match kv.get("approaches") {
            Some(v) => parse_approaches(v)?,
            None => SplitApproach::ALL.to_vec(),
        };
        let kinds: Vec<ClassifierKind> = match kv.get("classifiers") {
            Some(v) => list(v)
                .map(|k| k.parse().map_err(|e: String| invalid("classifiers", v, e)))
                .collect::<Result<_, _>>()?,
            None => ClassifierKind::ALL.to_vec(),
        };
        let classifiers = kinds
            .iter()
            .map(|&k| ClassifierSpec::from_kv(k, kv))
            .collect::<Result<Vec<_>, _>>()?;
        let confusion_terms = match kv.get("confusion_terms") {
            Some(v) => list(v).map(|t| term("confusion_terms", t)).collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let final_approach = match kv.get("final_approach") {
            Some(v) => v.parse().map_err(|e: String| invalid("final_approach", v, e))?,
            None => SplitApproach::B4T,
        };
        let point_rule = match kv.get("point_rule") {
            Some(v) => v.parse().map_err(|e: String| invalid("point_rule", v, e))?,
            None => PointRule::default(),
        };
        let cfg = Self {
            source,
            time_features,
            t_start,
            t_end,
            approaches,
            classifiers,
            split_seed: kv.parsed_or("split_seed", 0)?,
            point_rule,
            final_approach,
            confusion_terms,
        };
        if cfg.approaches.is_empty() {
            return Err(invalid("approaches", "", "empty list").into());
        }
        if cfg.classifiers.is_empty() {
            return Err(invalid("classifiers", "", "empty list").into());
        }
        Ok(cfg)
    }

    pub fn calendar(&self) -> Calendar {
        self.source.calendar()
    }

    pub fn terms(&self) -> Vec<Term> {
        self.calendar().iter(self.t_start, self.t_end).collect()
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            approaches: self.approaches.clone(),
            classifiers: self.classifiers.clone(),
            terms: self.terms(),
            split_seed: self.split_seed,
        }
    }

    pub fn extractor(&self, cohort: &Cohort) -> Extractor {
        let spec = FeatureSetSpec {
            static_names: cohort.attr_names().to_vec(),
            time_features: self.time_features.clone(),
        };
        Extractor::new(spec, self.calendar())
    }

    /// Reads or generates the cohort. Enrolled-student truth from the
    /// generator is discarded here.
    pub fn load_cohort(&self) -> Result<LoadedCohort, RunError> {
        match &self.source {
            DataSource::Csv {
                students,
                courses,
                ingest: cfg,
            } => {
                let open = |path: &PathBuf, what| {
                    File::open(path).map_err(|_| RunError::MissingFile {
                        what,
                        path: path.clone(),
                    })
                };
                let dictionary = match &cfg.attr_dictionary {
                    Some(p) => AttributeDictionary::from_kv(&KvConfig::parse(&read_text(p)?)?)?,
                    None => AttributeDictionary::default(),
                };
                let outcome = ingest(open(students, "students")?, open(courses, "courses")?, cfg, dictionary)?;
                Ok(LoadedCohort {
                    cohort: outcome.cohort.clone(),
                    ingest: Some(outcome),
                })
            }
            DataSource::Generated(g) => Ok(LoadedCohort {
                cohort: generate(g)?.cohort,
                ingest: None,
            }),
        }
    }
}

pub fn parse_approaches(value: &str) -> Result<Vec<SplitApproach>, ConfigError> {
    let out: Vec<SplitApproach> = list(value)
        .map(|a| a.parse().map_err(|e: String| invalid("approaches", value, e)))
        .collect::<Result<_, _>>()?;
    for (i, a) in out.iter().enumerate() {
        if out[..i].contains(a) {
            return Err(invalid("approaches", value, format!("{a} listed twice")));
        }
    }
    Ok(out)
}

impl DataSource {
    pub fn calendar(&self) -> Calendar {
        match self {
            DataSource::Csv { ingest, .. } => ingest.calendar,
            DataSource::Generated(g) => g.calendar,
        }
    }

    pub fn range(&self) -> TermRange {
        match self {
            DataSource::Csv { ingest, .. } => ingest.range,
            DataSource::Generated(g) => g.range,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCohort {
    pub cohort: Cohort,
    /// Present when the cohort came from CSV files.
    pub ingest: Option<IngestOutcome>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn generator_source_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "gen.cfg", "intake_per_term=10\n");
        let run = write(dir.path(), "run.cfg", "generator=gen.cfg\nt_start=2012.2\nt_end=2013.2\n");
        let cfg = RunConfig::load(&run).unwrap();
        assert_eq!(cfg.approaches, SplitApproach::ALL.to_vec());
        assert_eq!(cfg.classifiers.len(), 4);
        assert_eq!(cfg.final_approach, SplitApproach::B4T);
        assert_eq!(cfg.terms().len(), 3);
        let loaded = cfg.load_cohort().unwrap();
        assert!(loaded.ingest.is_none());
        assert_eq!(loaded.cohort.len(), 10 * 21);
    }

    #[test]
    fn classifier_params_and_lists() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "gen.cfg", "");
        let text = "generator=gen.cfg\nt_start=2012.2\nt_end=2013.2\napproaches=B2T, B4T\n\
                    classifiers=knn,decision_tree\nknn.k=3\ndecision_tree.max_depth=4\n\
                    point_rule=streak\nconfusion_terms=2013.1\ntime_features=mean_score,courses_failed\n";
        let cfg = RunConfig::from_kv(&KvConfig::parse(text).unwrap(), dir.path()).unwrap();
        assert_eq!(cfg.approaches, vec![SplitApproach::B2T, SplitApproach::B4T]);
        assert_eq!(cfg.classifiers[0], ClassifierSpec::Knn { k: 3, tie: crate::records::Label::Dropout });
        assert_eq!(cfg.point_rule, PointRule::Streak);
        assert_eq!(cfg.confusion_terms.len(), 1);
        assert_eq!(cfg.time_features, vec![TimeFeature::MeanScore, TimeFeature::CoursesFailed]);
    }

    #[test]
    fn rejects_bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "gen.cfg", "");
        write(dir.path(), "students.csv", "");
        let base = "t_start=2012.2\nt_end=2013.2\n";
        let parse = |extra: &str| RunConfig::from_kv(&KvConfig::parse(&format!("{base}{extra}")).unwrap(), dir.path());
        assert!(matches!(parse("generator=gen.cfg\nbogus=1\n"), Err(RunError::Config(ConfigError::Unknown(_)))));
        assert!(matches!(parse("generator=gen.cfg\nknn.bogus=1\n"), Err(RunError::Config(ConfigError::Unknown(_)))));
        assert!(matches!(parse("generator=missing.cfg\n"), Err(RunError::MissingFile { .. })));
        let err = parse("students=students.csv\ncourses=courses.csv\nrange_start=2009.1\nrange_end=2019.1\n").unwrap_err();
        assert!(err.to_string().contains("courses.csv"), "{err}");
        assert!(matches!(parse(""), Err(RunError::Config(ConfigError::Missing(_)))));
        assert!(matches!(parse("generator=gen.cfg\napproaches=A,A\n"), Err(RunError::Config(_))));
        let out = RunConfig::from_kv(
            &KvConfig::parse("generator=gen.cfg\nt_start=2005.1\nt_end=2013.2\n").unwrap(),
            dir.path(),
        );
        assert!(matches!(out, Err(RunError::OutOfRange { .. })));
    }

    #[test]
    fn csv_source_reads_ingest_keys() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "students.csv", "student_id,entrance_term,status,exit_term,age\nS1,2010.1,graduated,2011.2,19\n");
        write(
            dir.path(),
            "courses.csv",
            "student_id,course_code,term,score,attendance_pct,result\nS1,C1,2010.1,7,90,1\nS1,C2,2011.S1,6,80,1\n",
        );
        let text = "students=students.csv\ncourses=courses.csv\nrange_start=2009.1\nrange_end=2012.2\n\
                    map.S1=2\nt_start=2011.1\nt_end=2012.1\n";
        let cfg = RunConfig::from_kv(&KvConfig::parse(text).unwrap(), dir.path()).unwrap();
        let loaded = cfg.load_cohort().unwrap();
        assert_eq!(loaded.cohort.len(), 1);
        assert!(loaded.ingest.unwrap().rejects.is_empty());
    }
}
