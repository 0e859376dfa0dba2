use std::fmt;
use std::str::FromStr;

use super::{AccuracyTable, EvalError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PointRule {
    /// One point per adjacent pair of terms topped at both ends.
    #[default]
    Pairwise,
    /// One point per maximal run of two or more topped terms.
    Streak,
}

impl FromStr for PointRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pairwise" => Ok(PointRule::Pairwise),
            "streak" => Ok(PointRule::Streak),
            _ => Err(format!("unknown point rule `{s}` (pairwise or streak)")),
        }
    }
}

impl fmt::Display for PointRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointRule::Pairwise => "pairwise",
            PointRule::Streak => "streak",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub classifiers: Vec<String>,
    pub points: Vec<u32>,
    pub period_means: Vec<Option<f64>>,
    pub winner: usize,
    pub runner_up: Option<usize>,
    /// The winner was picked among several classifiers with equal points.
    pub tiebreak_used: bool,
}

impl PointTable {
    pub fn winner_name(&self) -> &str {
        &self.classifiers[self.winner]
    }

    pub fn runner_up_name(&self) -> Option<&str> {
        self.runner_up.map(|i| self.classifiers[i].as_str())
    }
}

/// Per term, which classifiers hold the (inclusive) maximum. `None` for a
/// term with any skipped cell.
fn tops(table: &AccuracyTable) -> Vec<Option<Vec<bool>>> {
    (0..table.terms.len())
        .map(|t| {
            let col: Option<Vec<f64>> = table.cells.iter().map(|row| row[t]).collect();
            let col = col?;
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(col.iter().map(|&v| v == max).collect())
        })
        .collect()
}

/// Returns the index with the most points; ties go to the higher period
/// mean, then to the earlier classifier.
fn pick(candidates: &[usize], points: &[u32], means: &[Option<f64>]) -> (usize, bool) {
    let best = candidates.iter().map(|&c| points[c]).max().expect("at least one candidate");
    let tied: Vec<usize> = candidates.iter().copied().filter(|&c| points[c] == best).collect();
    let mut winner = tied[0];
    for &c in &tied[1..] {
        if means[c].unwrap_or(f64::NEG_INFINITY) > means[winner].unwrap_or(f64::NEG_INFINITY) {
            winner = c;
        }
    }
    (winner, tied.len() > 1)
}

pub fn score_points(table: &AccuracyTable, rule: PointRule) -> Result<PointTable, EvalError> {
    let n = table.classifiers.len();
    if n == 0 {
        return Err(EvalError::Empty("classifiers"));
    }
    if table.cells.iter().flatten().all(Option::is_none) {
        return Err(EvalError::AllSkipped);
    }
    let tops = tops(table);
    let mut points = vec![0u32; n];
    for c in 0..n {
        let mut run = 0usize;
        for t in 0..tops.len() {
            let on_top = tops[t].as_ref().is_some_and(|col| col[c]);
            match rule {
                PointRule::Pairwise => {
                    if t > 0 && on_top && tops[t - 1].as_ref().is_some_and(|col| col[c]) {
                        points[c] += 1;
                    }
                }
                PointRule::Streak => {
                    if on_top {
                        run += 1;
                        if run == 2 {
                            points[c] += 1;
                        }
                    } else {
                        run = 0;
                    }
                }
            }
        }
    }
    let period_means: Vec<Option<f64>> = (0..n).map(|c| table.period_mean(c)).collect();
    let all: Vec<usize> = (0..n).collect();
    let (winner, tiebreak_used) = pick(&all, &points, &period_means);
    let rest: Vec<usize> = all.into_iter().filter(|&c| c != winner).collect();
    let runner_up = (!rest.is_empty()).then(|| pick(&rest, &points, &period_means).0);
    Ok(PointTable {
        classifiers: table.classifiers.clone(),
        points,
        period_means,
        winner,
        runner_up,
        tiebreak_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::fixtures::term;
    use crate::terms::{Calendar, Term};

    fn table(rows: &[&[Option<f64>]]) -> AccuracyTable {
        let n = rows[0].len();
        let terms: Vec<Term> = Calendar::default().iter(term("2012.2"), term("2030.1")).take(n).collect();
        AccuracyTable {
            classifiers: (0..rows.len()).map(|i| format!("m{i}")).collect(),
            terms,
            cells: rows.iter().map(|r| r.to_vec()).collect(),
        }
    }

    fn s(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn four_term_streak_is_three_points() {
        let t = table(&[&s(&[0.9, 0.9, 0.9, 0.9]), &s(&[0.1, 0.2, 0.3, 0.4])]);
        let p = score_points(&t, PointRule::Pairwise).unwrap();
        assert_eq!(p.points, vec![3, 0]);
        assert_eq!((p.winner, p.runner_up, p.tiebreak_used), (0, Some(1), false));
        assert_eq!(score_points(&t, PointRule::Streak).unwrap().points, vec![1, 0]);
    }

    #[test]
    fn alternating_tops_fall_back_to_mean() {
        let t = table(&[&s(&[0.9, 0.5, 0.9, 0.5]), &s(&[0.5, 0.8, 0.5, 0.8])]);
        let p = score_points(&t, PointRule::Pairwise).unwrap();
        assert_eq!(p.points, vec![0, 0]);
        assert_eq!(p.winner, 0);
        assert!(p.tiebreak_used);
    }

    #[test]
    fn ties_at_the_top_are_inclusive() {
        let t = table(&[&s(&[0.7, 0.7]), &s(&[0.7, 0.7]), &s(&[0.1, 0.1])]);
        let p = score_points(&t, PointRule::Pairwise).unwrap();
        assert_eq!(p.points, vec![1, 1, 0]);
        assert_eq!((p.winner, p.runner_up), (0, Some(1)));
    }

    #[test]
    fn skipped_columns_break_pairs() {
        let t = table(&[
            &[Some(0.9), None, Some(0.9), Some(0.9)],
            &[Some(0.1), Some(0.5), Some(0.1), Some(0.1)],
        ]);
        let p = score_points(&t, PointRule::Pairwise).unwrap();
        assert_eq!(p.points, vec![1, 0]);
        assert_eq!(p.period_means[0], Some(0.9));
    }

    #[test]
    fn all_skipped_is_an_error() {
        let t = table(&[&[None, None]]);
        assert!(matches!(score_points(&t, PointRule::Pairwise), Err(EvalError::AllSkipped)));
    }

    #[test]
    fn single_classifier_has_no_runner_up() {
        let t = table(&[&s(&[0.5, 0.6])]);
        let p = score_points(&t, PointRule::Pairwise).unwrap();
        assert_eq!((p.winner, p.runner_up), (0, None));
    }

    #[test]
    fn rule_names() {
        assert_eq!("streak".parse::<PointRule>().unwrap(), PointRule::Streak);
        assert!("pairs".parse::<PointRule>().is_err());
        assert_eq!(PointRule::Pairwise.to_string(), "pairwise");
    }
}
