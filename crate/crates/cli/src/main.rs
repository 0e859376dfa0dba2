mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use tempsplit::classifiers::{ClassifierKind, ClassifierSpec};
use tempsplit::config::KvConfig;
use tempsplit::evaluation::{
    predict_enrolled, prediction_exclusions_csv, predictions_csv, read_accuracy_csv, render_svg, run_grid,
    score_points, write_report, Cell, EnrolledPrediction, EvaluationGrid, GridConfig, PointRule, PointTable,
    SetSize,
};
use tempsplit::records::{reject_counts, Label};
use tempsplit::run::{DataSource, RunConfig, RunError};
use tempsplit::splits::{build_split, SplitApproach, SplitRequest};
use tempsplit::synthgen::{
    generate, read_truth_csv, summarize, write_courses_csv, write_students_csv, write_truth_csv, GeneratorConfig,
};
use tempsplit::terms::Calendar;

use manifest::{sha256_hex, Manifest, OutputDir};

/// Setting this variable to `1` allows `predict --oracle`.
const TEST_MODE_ENV: &str = "TEMPSPLIT_TEST_MODE";

#[derive(Parser)]
#[command(name = "tempsplit", version, about = "Temporal train/test splits for dropout prediction")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate input CSVs and write the normalized cohort.
    Ingest(RunArgs),
    /// Materialize one train/test split.
    Split {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        approach: SplitApproach,
        #[arg(long = "t")]
        t: String,
    },
    /// Run the accuracy grid, point system and enrolled prediction.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated list overriding `approaches`.
        #[arg(long)]
        approaches: Option<String>,
        #[arg(long)]
        t_start: Option<String>,
        #[arg(long)]
        t_end: Option<String>,
    },
    /// Predict the outcome of students still enrolled at the horizon.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to `final_approach` from the config.
        #[arg(long)]
        approach: Option<SplitApproach>,
        /// Skip model selection and use this classifier.
        #[arg(long)]
        classifier: Option<ClassifierKind>,
        /// Sealed truth file; only honored in test mode.
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
    /// Recompute points and charts from an evaluate output directory.
    Report {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "pairwise")]
        point_rule: PointRule,
        #[arg(long, default_value_t = 2)]
        terms_per_year: u16,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// The parsed config plus everything the manifest needs to reproduce it.
struct Loaded {
    run: RunConfig,
    kv: KvConfig,
}

fn load_run(path: &Path, overrides: &[(&str, Option<&String>)]) -> Result<Loaded> {
    let text = fs::read_to_string(path).map_err(|e| anyhow!("config: cannot read {}: {e}", path.display()))?;
    let mut kv = KvConfig::parse(&text).map_err(|e| anyhow!("config: {}: {e}", path.display()))?;
    for (key, value) in overrides {
        if let Some(v) = value {
            kv.set(*key, v.as_str());
        }
    }
    let config_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let run = RunConfig::from_kv(&kv, &config_dir)?;
    Ok(Loaded { run, kv })
}

fn base_manifest(command: &str, loaded: &Loaded) -> Result<Manifest> {
    let mut m = Manifest::new(command);
    let cfg_text = loaded.kv.to_string();
    m.put("config_sha256", sha256_hex(cfg_text.as_bytes()));
    m.put("config_file", "run.cfg");
    m.put("split_seed", loaded.run.split_seed);
    for spec in &loaded.run.classifiers {
        if let ClassifierSpec::ExtraTrees { seed, .. } = spec {
            m.put("extra_trees_seed", seed);
        }
    }
    match &loaded.run.source {
        DataSource::Csv { students, courses, .. } => {
            m.put_file_hash("students_sha256", students)?;
            m.put_file_hash("courses_sha256", courses)?;
        }
        DataSource::Generated(g) => {
            m.put("generator_seed", g.seed);
            m.put("generator_sha256", sha256_hex(g.to_kv().to_string().as_bytes()));
        }
    }
    Ok(m)
}

fn config_copies(loaded: &Loaded) -> Vec<(&'static str, String)> {
    let mut out = vec![("run.cfg", loaded.kv.to_string())];
    if let DataSource::Generated(g) = &loaded.run.source {
        out.push(("generator.cfg", g.to_kv().to_string()));
    }
    out
}

fn open_out<'a>(dir: &'a Path, m: &Manifest, loaded: &Loaded) -> Result<OutputDir<'a>> {
    let copies = config_copies(loaded);
    let refs: Vec<(&str, &str)> = copies.iter().map(|(n, b)| (*n, b.as_str())).collect();
    OutputDir::open(dir, m, &refs).with_context(|| format!("cli: cannot write to {}", dir.display()))
}

fn cmd_generate(config: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(config).map_err(|e| anyhow!("config: cannot read {}: {e}", config.display()))?;
    let kv = KvConfig::parse(&text).map_err(|e| anyhow!("config: {}: {e}", config.display()))?;
    let cfg = GeneratorConfig::from_kv(&kv).map_err(|e| anyhow!("synthgen: {e}"))?;
    let generated = generate(&cfg).map_err(|e| anyhow!("synthgen: {e}"))?;
    let effective = cfg.to_kv().to_string();

    let mut m = Manifest::new("generate");
    m.put("config_sha256", sha256_hex(effective.as_bytes()));
    m.put("config_file", "generator.cfg");
    m.put("generator_seed", cfg.seed);
    m.put("students", generated.cohort.len());
    m.put("truth_rows", generated.truth.len());
    let dir = OutputDir::open(out, &m, &[("generator.cfg", &effective)])?;

    let mut buf = Vec::new();
    write_students_csv(&generated.cohort, &mut buf)?;
    dir.write("students.csv", &buf)?;
    buf.clear();
    write_courses_csv(&generated.cohort, &mut buf)?;
    dir.write("courses.csv", &buf)?;
    buf.clear();
    write_truth_csv(&generated.truth, &mut buf)?;
    dir.write("truth_sealed.csv", &buf)?;
    dir.write("genstats.txt", summarize(&generated.cohort).to_string())?;
    info!("generated {} students into {}", generated.cohort.len(), out.display());
    Ok(())
}

fn cmd_ingest(args: &RunArgs) -> Result<()> {
    let loaded = load_run(&args.config, &[])?;
    let cohort = loaded.run.load_cohort()?;
    let mut m = base_manifest("ingest", &loaded)?;
    m.put("students", cohort.cohort.len());
    let mut rejects_csv = String::from("row,student_id,reason\n");
    if let Some(outcome) = &cohort.ingest {
        m.put("dropped_students", outcome.dropped_students);
        m.put("duplicate_rows", outcome.duplicate_rows);
        m.put("exit_mismatches", outcome.exit_mismatches);
        for (reason, n) in reject_counts(&outcome.rejects) {
            m.put(format!("rejects.{reason}"), n);
        }
        for (key, value) in outcome.dictionary.to_kv().iter() {
            m.put(format!("dictionary.{key}"), value);
        }
        for r in &outcome.rejects {
            rejects_csv.push_str(&format!("{},{},{}\n", r.row, r.student_id, r.reason));
        }
    }
    let dir = open_out(&args.out, &m, &loaded)?;
    let mut buf = Vec::new();
    write_students_csv(&cohort.cohort, &mut buf)?;
    dir.write("students.csv", &buf)?;
    buf.clear();
    write_courses_csv(&cohort.cohort, &mut buf)?;
    dir.write("courses.csv", &buf)?;
    dir.write("rejects.csv", rejects_csv)?;
    dir.write("summary.txt", summarize(&cohort.cohort).to_string())?;
    Ok(())
}

fn cmd_split(args: &RunArgs, approach: SplitApproach, t: &str) -> Result<()> {
    let loaded = load_run(&args.config, &[])?;
    let t = loaded
        .run
        .calendar()
        .parse(t)
        .map_err(|e| anyhow!("terms: --t {t}: {e}"))?;
    let cohort = loaded.run.load_cohort()?.cohort;
    let extractor = loaded.run.extractor(&cohort);
    let req = SplitRequest {
        approach,
        reference: t,
        seed: loaded.run.split_seed,
    };
    let split = build_split(&cohort, &extractor, req).map_err(RunError::from)?;

    let mut m = base_manifest("split", &loaded)?;
    m.put("approach", approach);
    m.put("t", t);
    m.put("train_rows", split.train.len());
    m.put("test_rows", split.test.len());
    for ((role, reason), n) in split.exclusion_counts() {
        m.put(format!("exclusions.{role}.{reason}"), n);
    }
    let dir = open_out(&args.out, &m, &loaded)?;
    let mut buf = Vec::new();
    split.train.write_csv(&mut buf)?;
    dir.write("train.csv", &buf)?;
    buf.clear();
    split.test.write_csv(&mut buf)?;
    dir.write("test.csv", &buf)?;
    buf.clear();
    split.train.write_provenance(&mut buf, true)?;
    split.test.write_provenance(&mut buf, false)?;
    dir.write("provenance.csv", &buf)?;
    let mut ex = String::from("student_id,role,reason\n");
    for e in &split.exclusions {
        ex.push_str(&format!("{},{},{}\n", e.student_id, e.role, e.reason));
    }
    dir.write("exclusions.csv", ex)?;
    Ok(())
}

fn score_all(grid: &EvaluationGrid, rule: PointRule) -> Vec<(SplitApproach, PointTable)> {
    grid.approaches
        .iter()
        .filter_map(|&a| {
            let table = grid.table(a)?;
            match score_points(&table, rule) {
                Ok(p) => Some((a, p)),
                Err(e) => {
                    log::warn!("evaluation: no points for {a}: {e}");
                    None
                }
            }
        })
        .collect()
}

fn skips_csv(grid: &EvaluationGrid) -> String {
    let mut out = String::from("approach,classifier,term,reason\n");
    for (a, approach) in grid.approaches.iter().enumerate() {
        for (c, name) in grid.classifiers.iter().enumerate() {
            for (t, term) in grid.terms.iter().enumerate() {
                if let Cell::Skipped { reason } = &grid.cells[a][c][t] {
                    let reason = reason.replace(['"', ','], " ");
                    out.push_str(&format!("{approach},{name},{term},{reason}\n"));
                }
            }
        }
    }
    out
}

fn put_prediction(m: &mut Manifest, p: &EnrolledPrediction) {
    m.put("prediction.approach", p.approach);
    m.put("prediction.classifier", &p.classifier);
    m.put("prediction.reference", p.reference);
    m.put("prediction.train_rows", p.train_rows);
    m.put("prediction.rows", p.predictions.len());
    m.put("prediction.exclusions", p.exclusions.len());
    if let Some(n) = &p.notice {
        m.put("prediction.notice", n);
    }
}

fn cmd_evaluate(args: &RunArgs, approaches: Option<&String>, t_start: Option<&String>, t_end: Option<&String>) -> Result<()> {
    let loaded = load_run(
        &args.config,
        &[("approaches", approaches), ("t_start", t_start), ("t_end", t_end)],
    )?;
    let run = &loaded.run;
    let cohort = run.load_cohort()?.cohort;
    let extractor = run.extractor(&cohort);
    let grid = run_grid(&cohort, &extractor, &run.grid_config()).map_err(RunError::from)?;
    let points = score_all(&grid, run.point_rule);

    let prediction = match points.iter().find(|(a, _)| *a == run.final_approach) {
        Some((a, p)) => {
            let spec = &run.classifiers[p.winner];
            Some(predict_enrolled(&cohort, &extractor, *a, spec).map_err(RunError::from)?)
        }
        None => {
            log::warn!("evaluation: final approach {} not scored; no enrolled prediction", run.final_approach);
            None
        }
    };

    let mut m = base_manifest("evaluate", &loaded)?;
    m.put("point_rule", run.point_rule);
    m.put("final_approach", run.final_approach);
    for (a, approach) in grid.approaches.iter().enumerate() {
        let sizes: &[SetSize] = &grid.set_sizes[a];
        m.put(format!("exclusions.{approach}"), sizes.iter().map(|s| s.excluded).sum::<usize>());
    }
    for (a, p) in &points {
        m.put(format!("winner.{a}"), p.winner_name());
        if let Some(r) = p.runner_up_name() {
            m.put(format!("runner_up.{a}"), r);
        }
    }
    if let Some(p) = &prediction {
        put_prediction(&mut m, p);
    }
    let dir = open_out(&args.out, &m, &loaded)?;
    write_report(dir.path(), &grid, &points, &run.confusion_terms, prediction.as_ref())?;
    dir.write("skips.csv", skips_csv(&grid))?;
    Ok(())
}

struct OracleScore {
    n: usize,
    correct: usize,
    predicted_dropouts: usize,
    true_dropouts: usize,
}

fn oracle_score(p: &EnrolledPrediction, truth_path: &Path, calendar: Calendar) -> Result<OracleScore> {
    let file = fs::File::open(truth_path).map_err(|e| anyhow!("cli: cannot open {}: {e}", truth_path.display()))?;
    let truth: BTreeMap<String, Label> = read_truth_csv(file, calendar)
        .map_err(|e| anyhow!("synthgen: {}: {e}", truth_path.display()))?
        .into_iter()
        .map(|r| (r.student_id, r.label))
        .collect();
    let mut s = OracleScore {
        n: 0,
        correct: 0,
        predicted_dropouts: 0,
        true_dropouts: 0,
    };
    for (id, label) in &p.predictions {
        let t = *truth
            .get(id)
            .ok_or_else(|| anyhow!("synthgen: student {id} missing from {}", truth_path.display()))?;
        s.n += 1;
        s.correct += usize::from(t == *label);
        s.predicted_dropouts += usize::from(*label == Label::Dropout);
        s.true_dropouts += usize::from(t == Label::Dropout);
    }
    Ok(s)
}

fn cmd_predict(
    args: &RunArgs,
    approach: Option<SplitApproach>,
    classifier: Option<ClassifierKind>,
    oracle: Option<&Path>,
) -> Result<()> {
    if oracle.is_some() && std::env::var(TEST_MODE_ENV).as_deref() != Ok("1") {
        bail!("cli: --oracle reads sealed truth and is refused outside test mode ({TEST_MODE_ENV}=1)");
    }
    let loaded = load_run(&args.config, &[])?;
    let run = &loaded.run;
    let approach = approach.unwrap_or(run.final_approach);
    let cohort = run.load_cohort()?.cohort;
    let extractor = run.extractor(&cohort);

    let (spec, points) = match classifier {
        Some(kind) => {
            let spec = run
                .classifiers
                .iter()
                .find(|s| s.kind() == kind)
                .cloned()
                .unwrap_or_else(|| ClassifierSpec::default_for(kind));
            (spec, None)
        }
        None => {
            let cfg = GridConfig {
                approaches: vec![approach],
                ..run.grid_config()
            };
            let grid = run_grid(&cohort, &extractor, &cfg).map_err(RunError::from)?;
            let table = grid.table(approach).expect("single approach grid");
            let p = score_points(&table, run.point_rule).map_err(RunError::from)?;
            (run.classifiers[p.winner].clone(), Some(p))
        }
    };
    let prediction = predict_enrolled(&cohort, &extractor, approach, &spec).map_err(RunError::from)?;
    let score = oracle.map(|path| oracle_score(&prediction, path, run.calendar())).transpose()?;

    let mut m = base_manifest("predict", &loaded)?;
    put_prediction(&mut m, &prediction);
    m.put("prediction.selected_by", if points.is_some() { "points" } else { "flag" });
    m.put("enrolled_at_horizon", prediction.predictions.len() + prediction.exclusions.len());
    let dir = open_out(&args.out, &m, &loaded)?;
    dir.write("predictions.csv", predictions_csv(&prediction))?;
    dir.write("prediction_exclusions.csv", prediction_exclusions_csv(&prediction))?;
    if let Some(p) = &points {
        dir.write(format!("points_{approach}.csv").as_str(), tempsplit::evaluation::points_csv(p))?;
    }
    if let Some(s) = score {
        let frac = |k: usize| if s.n == 0 { 0.0 } else { k as f64 / s.n as f64 };
        let majority = s.true_dropouts.max(s.n - s.true_dropouts);
        dir.write(
            "oracle.txt",
            format!(
                "n={}\naccuracy={}\nmajority_baseline={}\npredicted_dropout_rate={}\nrealized_dropout_rate={}\n",
                s.n,
                frac(s.correct),
                frac(majority),
                frac(s.predicted_dropouts),
                frac(s.true_dropouts)
            ),
        )?;
    }
    Ok(())
}

fn cmd_report(from: &Path, out: &Path, rule: PointRule, terms_per_year: u16) -> Result<()> {
    let calendar = Calendar::new(terms_per_year).map_err(|e| anyhow!("terms: {e}"))?;
    let mut m = Manifest::new("report");
    m.put("point_rule", rule);
    m.put("terms_per_year", terms_per_year);
    let mut tables = Vec::new();
    for approach in SplitApproach::ALL {
        let path = from.join(format!("accuracy_{approach}.csv"));
        if !path.is_file() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| anyhow!("cli: cannot read {}: {e}", path.display()))?;
        let parsed = read_accuracy_csv(&text, calendar).map_err(|e| anyhow!("evaluation: {}: {e}", path.display()))?;
        m.put(format!("input.accuracy_{approach}_sha256"), sha256_hex(text.as_bytes()));
        tables.push((approach, parsed.table));
    }
    if tables.is_empty() {
        bail!("evaluation: no accuracy_<approach>.csv files in {}", from.display());
    }
    let first = &tables[0].1;
    if tables.iter().any(|(_, t)| t.terms != first.terms || t.classifiers != first.classifiers) {
        bail!("evaluation: accuracy files in {} disagree on terms or classifiers", from.display());
    }
    let grid = EvaluationGrid {
        approaches: tables.iter().map(|(a, _)| *a).collect(),
        classifiers: first.classifiers.clone(),
        terms: first.terms.clone(),
        cells: tables
            .iter()
            .map(|(_, t)| {
                t.cells
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|v| match v {
                                Some(a) => Cell::Scored {
                                    accuracy: *a,
                                    confusion: Default::default(),
                                },
                                None => Cell::Skipped {
                                    reason: "skipped in source".into(),
                                },
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        set_sizes: vec![vec![SetSize::default(); first.terms.len()]; tables.len()],
        enrolled: vec![0; first.terms.len()],
    };
    let points = score_all(&grid, rule);
    for (a, p) in &points {
        m.put(format!("winner.{a}"), p.winner_name());
    }
    let dir = OutputDir::open(out, &m, &[])?;
    for (a, p) in &points {
        dir.write(&format!("points_{a}.csv"), tempsplit::evaluation::points_csv(p))?;
    }
    for &a in &grid.approaches {
        dir.write(&format!("chart_{a}.svg"), render_svg(&grid, a).expect("approach in grid"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| anyhow!("cli: --jobs: {e}"))?;
    }
    match &cli.command {
        Command::Generate { config, out } => cmd_generate(config, out),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Split { run, approach, t } => cmd_split(run, *approach, t),
        Command::Evaluate {
            run,
            approaches,
            t_start,
            t_end,
        } => cmd_evaluate(run, approaches.as_ref(), t_start.as_ref(), t_end.as_ref()),
        Command::Predict {
            run,
            approach,
            classifier,
            oracle,
        } => cmd_predict(run, *approach, *classifier, oracle.as_deref()),
        Command::Report {
            from,
            out,
            point_rule,
            terms_per_year,
        } => cmd_report(from, out, *point_rule, *terms_per_year),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
