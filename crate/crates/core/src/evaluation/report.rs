//! Report files: accuracy blocks, set sizes, points, confusion matrices,
//! line charts and enrolled predictions.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{AccuracyTable, EnrolledPrediction, EvaluationGrid, PointTable};
use crate::classifiers::Confusion;
use crate::splits::SplitApproach;
use crate::terms::{Calendar, Term};

const SKIP: &str = "skip";
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| SKIP.to_string(), |x| x.to_string())
}

/// One row per classifier, one column per term, a trailing `mean` column
/// and a trailing `mean` row. Values are fractions in `[0, 1]`.
pub fn accuracy_csv(table: &AccuracyTable) -> String {
    let mut out = String::from("classifier");
    for t in &table.terms {
        write!(out, ",{t}").unwrap();
    }
    out.push_str(",mean\n");
    for (c, name) in table.classifiers.iter().enumerate() {
        out.push_str(name);
        for v in &table.cells[c] {
            write!(out, ",{}", fmt_cell(*v)).unwrap();
        }
        writeln!(out, ",{}", fmt_cell(table.period_mean(c))).unwrap();
    }
    out.push_str("mean");
    for t in 0..table.terms.len() {
        write!(out, ",{}", fmt_cell(table.term_mean(t))).unwrap();
    }
    writeln!(out, ",{}", fmt_cell(table.overall_mean())).unwrap();
    out
}

/// An accuracy block read back, with its stored means.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedAccuracy {
    pub table: AccuracyTable,
    pub period_means: Vec<Option<f64>>,
    pub term_means: Vec<Option<f64>>,
    pub overall_mean: Option<f64>,
}

fn parse_cell(s: &str, line: usize) -> Result<Option<f64>, String> {
    if s == SKIP {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|e| format!("line {line}: bad value `{s}`: {e}"))
}

/// Parses the output of [`accuracy_csv`].
pub fn read_accuracy_csv(text: &str, calendar: Calendar) -> Result<ParsedAccuracy, String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty accuracy file")?.split(',').collect();
    if header.len() < 3 || header[0] != "classifier" || header[header.len() - 1] != "mean" {
        return Err("header must be classifier,<terms...>,mean".into());
    }
    let terms = header[1..header.len() - 1]
        .iter()
        .map(|t| calendar.parse(t).map_err(|e| e.to_string()))
        .collect::<Result<Vec<Term>, _>>()?;
    let mut rows: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(format!("line {}: expected {} fields", i + 2, header.len()));
        }
        let values = fields[1..]
            .iter()
            .map(|f| parse_cell(f, i + 2))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((fields[0].to_string(), values));
    }
    let (last_name, mut mean_row) = rows.pop().ok_or("missing mean row")?;
    if last_name != "mean" {
        return Err("last row must be the mean row".into());
    }
    let overall_mean = mean_row.pop().flatten();
    let mut classifiers = Vec::new();
    let mut cells = Vec::new();
    let mut period_means = Vec::new();
    for (name, mut values) in rows {
        period_means.push(values.pop().flatten());
        classifiers.push(name);
        cells.push(values);
    }
    Ok(ParsedAccuracy {
        table: AccuracyTable {
            classifiers,
            terms,
            cells,
        },
        period_means,
        term_means: mean_row,
        overall_mean,
    })
}

/// Set sizes shaped like a per-approach train/test table with an enrolled row.
pub fn setsizes_csv(grid: &EvaluationGrid) -> String {
    let mut out = String::from("set");
    for t in &grid.terms {
        write!(out, ",{t}").unwrap();
    }
    out.push('\n');
    for (a, approach) in grid.approaches.iter().enumerate() {
        let fields: [(&str, fn(&super::SetSize) -> usize); 5] = [
            ("train_students", |s| s.train_students),
            ("train_rows", |s| s.train_rows),
            ("test_students", |s| s.test_students),
            ("test_rows", |s| s.test_rows),
            ("excluded", |s| s.excluded),
        ];
        for (label, get) in fields {
            write!(out, "{approach}_{label}").unwrap();
            for s in &grid.set_sizes[a] {
                write!(out, ",{}", get(s)).unwrap();
            }
            out.push('\n');
        }
    }
    out.push_str("enrolled");
    for n in &grid.enrolled {
        write!(out, ",{n}").unwrap();
    }
    out.push('\n');
    out
}

pub fn points_csv(p: &PointTable) -> String {
    let mut out = String::from("classifier,points,period_mean,role,tiebreak_used\n");
    for (c, name) in p.classifiers.iter().enumerate() {
        let role = if c == p.winner {
            "winner"
        } else if Some(c) == p.runner_up {
            "runner_up"
        } else {
            "-"
        };
        writeln!(
            out,
            "{name},{},{},{role},{}",
            p.points[c],
            fmt_cell(p.period_means[c]),
            p.tiebreak_used
        )
        .unwrap();
    }
    out
}

pub fn confusion_csv(m: &Confusion) -> String {
    format!(
        "truth,pred_dropout,pred_graduated\ndropout,{},{}\ngraduated,{},{}\n",
        m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]
    )
}

/// Accuracy against T, one polyline per classifier. Skipped cells leave
/// gaps in the x positions but are not plotted.
pub fn render_svg(grid: &EvaluationGrid, approach: SplitApproach) -> Option<String> {
    let table = grid.table(approach)?;
    let (w, h, left, right, top, bottom) = (760.0, 420.0, 60.0, 170.0, 30.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let values: Vec<f64> = table.cells.iter().flatten().flatten().copied().collect();
    let lo = values.iter().copied().fold(1.0f64, f64::min);
    let lo = ((lo * 10.0).floor() / 10.0).clamp(0.0, 0.9);
    let n = table.terms.len();
    let x = |t: usize| left + if n > 1 { pw * t as f64 / (n - 1) as f64 } else { pw / 2.0 };
    let y = |v: f64| top + ph * (1.0 - (v - lo) / (1.0 - lo));
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<text x="{left}" y="18" font-size="14">Accuracy by reference term, {approach}</text>"#).unwrap();
    writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>"##
    )
    .unwrap();
    let mut tick = lo;
    while tick <= 1.0 + 1e-9 {
        let yy = y(tick);
        writeln!(
            s,
            r##"<line x1="{left}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{tick:.1}</text>"##,
            left + pw,
            left - 6.0,
            yy + 4.0
        )
        .unwrap();
        tick += 0.1;
    }
    for (i, t) in table.terms.iter().enumerate() {
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" transform="rotate(-45 {:.2} {:.2})">{t}</text>"#,
            x(i),
            top + ph + 16.0,
            x(i),
            top + ph + 16.0
        )
        .unwrap();
    }
    for (c, name) in table.classifiers.iter().enumerate() {
        let color = PALETTE[c % PALETTE.len()];
        let pts: Vec<String> = table.cells[c]
            .iter()
            .enumerate()
            .filter_map(|(t, v)| v.map(|v| format!("{:.2},{:.2}", x(t), y(v))))
            .collect();
        writeln!(
            s,
            r#"<polyline data-approach="{approach}" data-classifier="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        )
        .unwrap();
        let ly = top + 16.0 * c as f64 + 8.0;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            w - right + 12.0,
            w - right + 32.0,
            w - right + 38.0,
            ly + 4.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Some(s)
}

pub fn predictions_csv(p: &EnrolledPrediction) -> String {
    let mut out = String::from("student_id,as_of,predicted\n");
    for (id, label) in &p.predictions {
        let l = match label {
            crate::records::Label::Dropout => "dropout",
            crate::records::Label::Graduated => "graduated",
        };
        writeln!(out, "{id},{},{l}", p.reference).unwrap();
    }
    out
}

pub fn prediction_exclusions_csv(p: &EnrolledPrediction) -> String {
    let mut out = String::from("student_id,reason\n");
    for e in &p.exclusions {
        writeln!(out, "{},{}", e.student_id, e.reason).unwrap();
    }
    out
}

/// Paths written by [`write_report`], in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    pub files: Vec<PathBuf>,
}

/// Writes every report file into `dir`. Confusion matrices are written for
/// the winner and runner-up of each scored approach at each requested term
/// present in the grid.
pub fn write_report(
    dir: &Path,
    grid: &EvaluationGrid,
    points: &[(SplitApproach, PointTable)],
    confusion_terms: &[Term],
    prediction: Option<&EnrolledPrediction>,
) -> io::Result<ReportBundle> {
    fs::create_dir_all(dir)?;
    let mut bundle = ReportBundle::default();
    let mut put = |name: String, body: String| -> io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        bundle.files.push(path);
        Ok(())
    };
    for &approach in &grid.approaches {
        let table = grid.table(approach).expect("approach from grid");
        put(format!("accuracy_{approach}.csv"), accuracy_csv(&table))?;
    }
    put("setsizes.csv".into(), setsizes_csv(grid))?;
    for (approach, p) in points {
        put(format!("points_{approach}.csv"), points_csv(p))?;
        let a = grid.approach_index(*approach).expect("scored approach in grid");
        for c in std::iter::once(p.winner).chain(p.runner_up) {
            for t in confusion_terms {
                let Some(ti) = grid.terms.iter().position(|x| x == t) else {
                    continue;
                };
                if let super::Cell::Scored { confusion, .. } = &grid.cells[a][c][ti] {
                    put(
                        format!("confusion_{approach}_{}_{t}.csv", grid.classifiers[c]),
                        confusion_csv(confusion),
                    )?;
                }
            }
        }
    }
    for &approach in &grid.approaches {
        put(format!("chart_{approach}.svg"), render_svg(grid, approach).expect("approach from grid"))?;
    }
    if let Some(p) = prediction {
        put("predictions.csv".into(), predictions_csv(p))?;
        put("prediction_exclusions.csv".into(), prediction_exclusions_csv(p))?;
    }
    Ok(bundle)
}
