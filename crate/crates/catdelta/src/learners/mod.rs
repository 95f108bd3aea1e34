//! Distance-based learners and their evaluation: KNN classification, PAM
//! clustering, accuracy, the adjusted Rand index, and the repeated
//! cross-validation harness.

mod ari;
mod cv;
mod knn;
mod pam;

pub use ari::adjusted_rand_index;
pub use cv::{cross_validate, CvCell, CvOptions, CvReport, CvSummaryRow, CvTask};
pub use knn::{knn_predict, knn_predict_grid};
pub use pam::{pam_assign, pam_fit, PamResult};

use crate::dataset::VariableSchema;
use crate::error::{Error, Result};

/// Class labels for a set of rows: codes into a shared class dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    levels: Vec<String>,
    codes: Vec<u32>,
}

impl Labeling {
    pub fn new(levels: Vec<String>, codes: Vec<u32>) -> Result<Self> {
        for &c in &codes {
            if c as usize >= levels.len() {
                return Err(Error::SchemaMismatch(format!(
                    "class code {c} out of range ({} classes)",
                    levels.len()
                )));
            }
        }
        Ok(Labeling { levels, codes })
    }

    /// Enumerate classes by first appearance.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let code = match levels.iter().position(|x| x == l) {
                Some(i) => i as u32,
                None => {
                    levels.push(l.to_string());
                    (levels.len() - 1) as u32
                }
            };
            codes.push(code);
        }
        Labeling { levels, codes }
    }

    /// Adopt a response column extracted from a dataset.
    pub fn from_schema(schema: &VariableSchema, codes: Vec<u32>) -> Result<Self> {
        Labeling::new(schema.levels.clone(), codes)
    }

    pub fn n_rows(&self) -> usize {
        self.codes.len()
    }

    pub fn n_classes(&self) -> usize {
        self.levels.len()
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn label(&self, row: usize) -> &str {
        &self.levels[self.codes[row] as usize]
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Labeling> {
        for &r in rows {
            if r >= self.codes.len() {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    len: self.codes.len(),
                });
            }
        }
        Ok(Labeling {
            levels: self.levels.clone(),
            codes: rows.iter().map(|&r| self.codes[r]).collect(),
        })
    }
}

/// Proportion of positions where the two labelings agree.
pub fn accuracy(pred: &[u32], truth: &[u32]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptySelection);
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0], &[1, 1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 0], &[1, 2, 3, 9]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn labeling_round_trip() {
        let l = Labeling::from_labels(&["b", "a", "b", "c"]);
        assert_eq!(l.codes(), &[0, 1, 0, 2]);
        assert_eq!(l.levels(), &["b", "a", "c"]);
        assert_eq!(l.label(3), "c");
        let s = l.subset(&[0, 3]).unwrap();
        assert_eq!(s.codes(), &[0, 2]);
        assert_eq!(s.n_classes(), 3, "class dictionary preserved");
    }
}
