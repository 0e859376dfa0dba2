//! Academic terms as exact `(year, index)` pairs.
//!
//! The textual form is `YYYY.K` (e.g. `2012.2`). It is display syntax only:
//! terms are never stored or compared as floating point numbers.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("malformed term `{0}`: expected YYYY.K")]
    Malformed(String),
    #[error("term index `{token}` out of range 1..={terms_per_year}")]
    IndexOutOfRange { token: String, terms_per_year: u16 },
    #[error("unknown mini-term token `{0}`")]
    UnknownMiniTerm(String),
    #[error("terms_per_year must be at least 1")]
    BadCalendar,
    #[error("empty term range {lo}..{hi}")]
    EmptyRange { lo: Term, hi: Term },
    #[error("term {term} outside range {range}")]
    OutOfRange { term: Term, range: TermRange },
}

/// One academic period. Ordering is lexicographic on `(year, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    year: i32,
    index: u16,
}

impl Term {
    /// Builds a term, checking the index against the calendar.
    pub fn new(year: i32, index: u16, calendar: Calendar) -> Result<Self, TermError> {
        if index == 0 || index > calendar.terms_per_year {
            return Err(TermError::IndexOutOfRange {
                token: index.to_string(),
                terms_per_year: calendar.terms_per_year,
            });
        }
        Ok(Self { year, index })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn index(self) -> u16 {
        self.index
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.year, self.index)
    }
}

/// Calendar parameters shared by every term in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Calendar {
    terms_per_year: u16,
}

impl Default for Calendar {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl Calendar {
    /// Two terms per year.
    pub const DEFAULT: Calendar = Calendar { terms_per_year: 2 };

    pub fn new(terms_per_year: u16) -> Result<Self, TermError> {
        if terms_per_year == 0 {
            return Err(TermError::BadCalendar);
        }
        Ok(Self { terms_per_year })
    }

    pub fn terms_per_year(self) -> u16 {
        self.terms_per_year
    }

    pub fn next(self, t: Term) -> Term {
        if t.index >= self.terms_per_year {
            Term { year: t.year + 1, index: 1 }
        } else {
            Term { year: t.year, index: t.index + 1 }
        }
    }

    pub fn prev(self, t: Term) -> Term {
        if t.index <= 1 {
            Term { year: t.year - 1, index: self.terms_per_year }
        } else {
            Term { year: t.year, index: t.index - 1 }
        }
    }

    /// Position of `t` on a linear term axis.
    fn ordinal(self, t: Term) -> i64 {
        i64::from(t.year) * i64::from(self.terms_per_year) + i64::from(t.index) - 1
    }

    /// Signed number of terms from `from` to `to`.
    pub fn distance(self, from: Term, to: Term) -> i64 {
        self.ordinal(to) - self.ordinal(from)
    }

    /// Moves `t` by `n` terms (negative moves backwards).
    pub fn offset(self, t: Term, n: i64) -> Term {
        let per = i64::from(self.terms_per_year);
        let ord = self.ordinal(t) + n;
        Term {
            year: ord.div_euclid(per) as i32,
            index: (ord.rem_euclid(per) + 1) as u16,
        }
    }

    /// Inclusive iterator over `[lo..hi]`; empty when `lo > hi`.
    pub fn iter(self, lo: Term, hi: Term) -> TermIter {
        TermIter {
            calendar: self,
            cur: lo,
            hi,
            done: lo > hi,
        }
    }

    pub fn parse(self, text: &str) -> Result<Term, TermError> {
        parse_term(text, self, &BTreeMap::new())
    }
}

pub struct TermIter {
    calendar: Calendar,
    cur: Term,
    hi: Term,
    done: bool,
}

impl Iterator for TermIter {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        if self.done {
            return None;
        }
        let out = self.cur;
        if out >= self.hi {
            self.done = true;
        } else {
            self.cur = self.calendar.next(out);
        }
        Some(out)
    }
}

/// Parses `YYYY.K`. Suffixes found in `mini_terms` (e.g. `S1` in `2014.S1`)
/// are remapped to the configured main-term index.
pub fn parse_term(
    text: &str,
    calendar: Calendar,
    mini_terms: &BTreeMap<String, u16>,
) -> Result<Term, TermError> {
    let text = text.trim();
    let (year, suffix) = text
        .split_once('.')
        .ok_or_else(|| TermError::Malformed(text.to_string()))?;
    if year.is_empty() || year.len() > 6 || !year.bytes().all(|b| b.is_ascii_digit()) {
        return Err(TermError::Malformed(text.to_string()));
    }
    let year: i32 = year
        .parse()
        .map_err(|_| TermError::Malformed(text.to_string()))?;
    let index = if let Some(&mapped) = mini_terms.get(suffix) {
        mapped
    } else if !suffix.is_empty() && suffix.len() <= 4 && suffix.bytes().all(|b| b.is_ascii_digit()) {
        suffix.parse().map_err(|_| TermError::Malformed(text.to_string()))?
    } else if !suffix.is_empty() && suffix.bytes().all(|b| b.is_ascii_alphanumeric()) {
        return Err(TermError::UnknownMiniTerm(suffix.to_string()));
    } else {
        return Err(TermError::Malformed(text.to_string()));
    };
    if index == 0 || index > calendar.terms_per_year {
        return Err(TermError::IndexOutOfRange {
            token: suffix.to_string(),
            terms_per_year: calendar.terms_per_year,
        });
    }
    Ok(Term { year, index })
}

/// Inclusive interval `[lo..hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TermRange {
    lo: Term,
    hi: Term,
}

impl TermRange {
    pub fn new(lo: Term, hi: Term) -> Result<Self, TermError> {
        if lo > hi {
            return Err(TermError::EmptyRange { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(self) -> Term {
        self.lo
    }

    pub fn hi(self) -> Term {
        self.hi
    }

    pub fn contains(self, t: Term) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn check(self, t: Term) -> Result<(), TermError> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(TermError::OutOfRange { term: t, range: self })
        }
    }
}

impl fmt::Display for TermRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(y: i32, i: u16) -> Term {
        Term::new(y, i, Calendar::default()).unwrap()
    }

    #[test]
    fn next_wraps_year() {
        let cal = Calendar::default();
        assert_eq!(cal.next(t(2012, 2)), t(2013, 1));
        assert_eq!(cal.next(t(2012, 1)), t(2012, 2));
    }

    #[test]
    fn prev_wraps_year() {
        let cal = Calendar::default();
        assert_eq!(cal.prev(t(2013, 1)), t(2012, 2));
        assert_eq!(cal.prev(t(2019, 1)), t(2018, 2));
    }

    #[test]
    fn parse_examples() {
        let cal = Calendar::default();
        assert_eq!(cal.parse("2012.2").unwrap(), t(2012, 2));
        assert_eq!(cal.parse("2009.1").unwrap(), t(2009, 1));
        match cal.parse("2012.3") {
            Err(TermError::IndexOutOfRange { token, .. }) => assert_eq!(token, "3"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(cal.parse("2012").is_err());
        assert!(cal.parse("2012.").is_err());
        assert!(cal.parse(".1").is_err());
        assert!(cal.parse("20x2.1").is_err());
        assert!(cal.parse("2012.0").is_err());
    }

    #[test]
    fn mini_term_mapping() {
        let cal = Calendar::default();
        let map = BTreeMap::from([("S1".to_string(), 1u16), ("W".to_string(), 2u16)]);
        assert_eq!(parse_term("2014.S1", cal, &map).unwrap(), t(2014, 1));
        assert_eq!(parse_term("2014.W", cal, &map).unwrap(), t(2014, 2));
        assert_eq!(
            parse_term("2014.S2", cal, &map),
            Err(TermError::UnknownMiniTerm("S2".into()))
        );
    }

    #[test]
    fn iter_is_inclusive() {
        let cal = Calendar::default();
        let v: Vec<_> = cal.iter(t(2012, 2), t(2014, 1)).collect();
        assert_eq!(v, vec![t(2012, 2), t(2013, 1), t(2013, 2), t(2014, 1)]);
        assert_eq!(cal.iter(t(2014, 1), t(2012, 2)).count(), 0);
        assert_eq!(cal.iter(t(2014, 1), t(2014, 1)).count(), 1);
    }

    #[test]
    fn range_rejects_inverted() {
        assert!(TermRange::new(t(2014, 1), t(2013, 2)).is_err());
        let r = TermRange::new(t(2009, 1), t(2019, 1)).unwrap();
        assert!(r.contains(t(2009, 1)) && r.contains(t(2019, 1)));
        assert!(!r.contains(t(2019, 2)));
    }

    fn arb_term(per: u16) -> impl Strategy<Value = Term> {
        (1900i32..2200, 1..=per).prop_map(|(year, index)| Term { year, index })
    }

    proptest! {
        #[test]
        fn next_prev_inverse(per in 1u16..5, seed in any::<u64>()) {
            let cal = Calendar::new(per).unwrap();
            let year = 1900 + (seed % 300) as i32;
            let index = 1 + (seed / 300 % per as u64) as u16;
            let term = Term { year, index };
            prop_assert_eq!(cal.prev(cal.next(term)), term);
            prop_assert_eq!(cal.next(cal.prev(term)), term);
        }

        #[test]
        fn format_parse_roundtrip(term in arb_term(3)) {
            let cal = Calendar::new(3).unwrap();
            prop_assert_eq!(cal.parse(&term.to_string()).unwrap(), term);
        }

        #[test]
        fn distance_matches_stepping(a in arb_term(2), steps in 0i64..60) {
            let cal = Calendar::default();
            let mut b = a;
            for _ in 0..steps {
                b = cal.next(b);
            }
            prop_assert_eq!(cal.distance(a, b), steps);
            prop_assert_eq!(cal.distance(b, a), -steps);
            prop_assert_eq!(cal.offset(a, steps), b);
            prop_assert_eq!(cal.offset(b, -steps), a);
            prop_assert_eq!(cal.iter(a, b).count() as i64, steps + 1);
        }
    }
}
