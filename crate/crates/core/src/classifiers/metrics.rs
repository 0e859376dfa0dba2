use std::ops::AddAssign;

use super::ClassifierError;
use crate::records::Label;

/// 2x2 counts; rows are true labels, columns predictions, dropout first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion(pub [[u64; 2]; 2]);

impl Confusion {
    pub fn get(&self, truth: Label, predicted: Label) -> u64 {
        self.0[truth.as_u8() as usize][predicted.as_u8() as usize]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }
}

impl AddAssign for Confusion {
    fn add_assign(&mut self, rhs: Self) {
        for r in 0..2 {
            for c in 0..2 {
                self.0[r][c] += rhs.0[r][c];
            }
        }
    }
}

fn check(y_true: &[Label], y_pred: &[Label]) -> Result<(), ClassifierError> {
    if y_true.len() != y_pred.len() {
        return Err(ClassifierError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    Ok(())
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<Confusion, ClassifierError> {
    check(y_true, y_pred)?;
    let mut m = Confusion::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        m.0[t.as_u8() as usize][p.as_u8() as usize] += 1;
    }
    Ok(m)
}

/// `(TP + TN) / n`.
pub fn accuracy(y_true: &[Label], y_pred: &[Label]) -> Result<f64, ClassifierError> {
    Ok(confusion(y_true, y_pred)?.accuracy())
}
