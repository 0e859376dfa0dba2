//! Cross-module properties on randomly drawn cohorts.

use std::collections::BTreeSet;

use proptest::prelude::*;

use tempsplit::features::{Extractor, FeatureSetSpec};
use tempsplit::records::{Cohort, CourseRecord, EnrollmentStatus, StudentStructure};
use tempsplit::splits::{build_split, SplitApproach, SplitRequest};
use tempsplit::terms::{Calendar, Term, TermRange};

const CAL: Calendar = Calendar::DEFAULT;

fn t(text: &str) -> Term {
    CAL.parse(text).unwrap()
}

fn range() -> TermRange {
    TermRange::new(t("2010.1"), t("2016.2")).unwrap()
}

/// Per student: entrance offset, number of active terms (0 = inactive),
/// outcome code, exit lag, and a course-count seed.
type Draw = (i64, i64, u8, i64, u64);

fn build(draws: &[Draw], gaps: bool) -> Cohort {
    let r = range();
    let span = CAL.distance(r.lo(), r.hi());
    let students = draws
        .iter()
        .enumerate()
        .map(|(i, &(entry, active, outcome, lag, seed))| {
            let entrance = CAL.offset(r.lo(), entry % (span + 1));
            let mut courses = Vec::new();
            let mut k = 0;
            for n in 0..active {
                if gaps && (seed >> (n % 60)) & 3 == 0 && n > 0 {
                    continue;
                }
                let term = CAL.offset(entrance, n);
                for c in 0..1 + (seed >> (2 * (n % 30))) % 3 {
                    courses.push(CourseRecord {
                        course_code: format!("C{k}"),
                        term,
                        score: ((seed >> (c + n as u64)) % 11) as f64,
                        attendance_pct: ((seed >> (3 + n as u64)) % 101) as f64,
                        passed: (seed >> (c + 7)) & 1 == 1,
                    });
                    k += 1;
                }
            }
            let last = courses.last().map_or(entrance, |c| c.term);
            let exit = CAL.offset(last, lag);
            let (status, exit) = if outcome == 0 || exit > r.hi() {
                (EnrollmentStatus::Enrolled, None)
            } else if outcome == 1 {
                (EnrollmentStatus::Dropout, Some(exit))
            } else {
                (EnrollmentStatus::Graduated, Some(exit))
            };
            // Enrolled students only have records up to the horizon.
            courses.retain(|c| c.term <= r.hi());
            StudentStructure::new(format!("S{i:03}"), vec![(i % 7) as f64], entrance, status, exit, courses).unwrap()
        })
        .collect();
    Cohort::new(students, vec!["a".into()], r, CAL).unwrap()
}

fn draws() -> impl Strategy<Value = Vec<Draw>> {
    prop::collection::vec((0i64..40, 0i64..10, 0u8..3, 0i64..3, any::<u64>()), 1..40)
}

fn extractor(c: &Cohort) -> Extractor {
    Extractor::new(FeatureSetSpec::canonical(c.attr_names().to_vec()), CAL)
}

fn ids(v: &[&StudentStructure]) -> BTreeSet<String> {
    v.iter().map(|s| s.id().to_string()).collect()
}

fn truncate(c: &Cohort, at: Term) -> Cohort {
    c.map_students(|s| s.retain_courses(|r| r.term < at))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn subsets_match_definitions(d in draws(), gaps in any::<bool>()) {
        let c = build(&d, gaps);
        let r = c.range();
        let mut prev_before = BTreeSet::new();
        for tt in CAL.iter(r.lo(), r.hi()) {
            let before = ids(&c.exited_before(tt).unwrap());
            let from = ids(&c.exited_from(tt).unwrap());
            let enrolled = ids(&c.enrolled(tt).unwrap());
            let brute = |f: &dyn Fn(&StudentStructure) -> bool| -> BTreeSet<String> {
                c.students().iter().filter(|s| f(s)).map(|s| s.id().to_string()).collect()
            };
            let exited = |s: &StudentStructure| s.status() != EnrollmentStatus::Enrolled;
            prop_assert_eq!(&before, &brute(&|s| exited(s) && s.exit_term().unwrap() < tt));
            prop_assert_eq!(&from, &brute(&|s| exited(s) && s.entrance() <= tt && s.exit_term().unwrap() >= tt));
            prop_assert_eq!(&enrolled, &brute(&|s| !exited(s) && s.entrance() <= tt));
            prop_assert!(before.is_disjoint(&from));
            prop_assert!(before.is_disjoint(&enrolled) && from.is_disjoint(&enrolled));
            let exited_by_t: BTreeSet<String> = brute(&|s| exited(s) && s.entrance() <= tt);
            let union: BTreeSet<String> = before.union(&from).cloned().collect();
            prop_assert!(exited_by_t.is_subset(&union));
            prop_assert!(prev_before.is_subset(&before));
            prev_before = before;
        }
    }

    #[test]
    fn temporal_splits_are_disjoint_and_leak_free(d in draws(), step in 1i64..13) {
        let c = build(&d, false);
        let e = extractor(&c);
        let tt = CAL.offset(c.range().lo(), step);
        let cut = truncate(&c, tt);
        for approach in [SplitApproach::B1, SplitApproach::B2, SplitApproach::B2T, SplitApproach::B3T, SplitApproach::B4T] {
            let req = SplitRequest { approach, reference: tt, seed: 0 };
            let Ok(split) = build_split(&c, &e, req) else { continue };
            prop_assert!(split.train.student_ids().is_disjoint(&split.test.student_ids()));
            if matches!(approach, SplitApproach::B2T | SplitApproach::B3T | SplitApproach::B4T) {
                for (row, x) in split.test.rows.iter().zip(&split.test.x) {
                    let s = cut.get(&row.student_id).unwrap();
                    let again = e.at(s, row.as_of).unwrap();
                    prop_assert_eq!(&again.values, x);
                }
            }
        }
    }

    #[test]
    fn rows_follow_the_approach_table(d in draws(), gaps in any::<bool>(), step in 1i64..13) {
        let c = build(&d, gaps);
        let e = extractor(&c);
        let tt = CAL.offset(c.range().lo(), step);
        for approach in SplitApproach::ALL {
            let req = SplitRequest { approach, reference: tt, seed: 11 };
            let Ok(split) = build_split(&c, &e, req) else { continue };
            let before = ids(&c.exited_before(tt).unwrap());
            let from = ids(&c.exited_from(tt).unwrap());
            for (set, role_is_train) in [(&split.train, true), (&split.test, false)] {
                for ((row, x), y) in set.rows.iter().zip(&set.x).zip(&set.y) {
                    let s = c.get(&row.student_id).unwrap();
                    let (start, last, end) = (s.entrance(), s.last(), s.end(CAL));
                    let in_before = before.contains(&row.student_id);
                    let in_from = from.contains(&row.student_id);
                    let ok = match (approach, role_is_train) {
                        (SplitApproach::A, _) => (in_before || in_from) && row.as_of == end,
                        (SplitApproach::B1, true) => in_before && row.as_of == end,
                        (SplitApproach::B1, false) => in_from && row.as_of == end,
                        (SplitApproach::B2, true) | (SplitApproach::B2T, true) => in_before && row.as_of == last,
                        (SplitApproach::B2, false) => in_from && row.as_of == last,
                        (SplitApproach::B3T, true) => in_before && start < row.as_of && row.as_of <= last,
                        (SplitApproach::B4T, true) => in_before && start < row.as_of && row.as_of <= end,
                        (_, false) => in_from && row.as_of == tt,
                    };
                    prop_assert!(ok, "{approach} {:?} {row:?}", if role_is_train { "train" } else { "test" });
                    prop_assert_eq!(&e.at(s, row.as_of).unwrap().values, x);
                    prop_assert_eq!(Some(*y), s.label());
                }
            }
        }
    }

    #[test]
    fn expansion_counts(d in draws(), step in 1i64..13) {
        let c = build(&d, false);
        let e = extractor(&c);
        let tt = CAL.offset(c.range().lo(), step);
        let get = |a| build_split(&c, &e, SplitRequest { approach: a, reference: tt, seed: 0 });
        if let (Ok(b3), Ok(b4)) = (get(SplitApproach::B3T), get(SplitApproach::B4T)) {
            prop_assert_eq!(b4.train.len() - b3.train.len(), b3.train.n_students());
            prop_assert_eq!(b4.train.student_ids(), b3.train.student_ids());
            let closed_form: i64 = b3
                .train
                .student_ids()
                .iter()
                .map(|id| {
                    let s = c.get(id).unwrap();
                    CAL.distance(s.entrance(), s.last())
                })
                .sum();
            prop_assert_eq!(b3.train.len() as i64, closed_form);
        }
    }
}
