use super::RecordSet;
use crate::error::{invalid, Result};

/// How two representations are considered to agree on an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgreementMode {
    /// The other representation predicts the same wrong class.
    SameLabel,
    /// The other representation is also wrong, whatever it predicts.
    BothWrong,
}

/// `matrix[r][q]`: fraction of `r`'s errors on which `q` agrees; `None`
/// when `r` makes no errors.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementTable {
    pub representations: Vec<String>,
    pub mode: AgreementMode,
    pub error_counts: Vec<usize>,
    pub matrix: Vec<Vec<Option<f64>>>,
}

pub fn error_agreement_matrix(set: &RecordSet, mode: AgreementMode) -> AgreementTable {
    let k = set.representations.len();
    let mut error_counts = vec![0; k];
    let mut matrix = vec![vec![None; k]; k];
    for r in 0..k {
        let errors: Vec<usize> = (0..set.len()).filter(|&i| !set.correct(r, i)).collect();
        error_counts[r] = errors.len();
        if errors.is_empty() {
            continue;
        }
        for q in 0..k {
            let agree = errors
                .iter()
                .filter(|&&i| match mode {
                    AgreementMode::SameLabel => set.predictions[q][i] == set.predictions[r][i],
                    AgreementMode::BothWrong => !set.correct(q, i),
                })
                .count();
            matrix[r][q] = Some(agree as f64 / errors.len() as f64);
        }
    }
    AgreementTable { representations: set.representations.clone(), mode, error_counts, matrix }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    pub correct_any: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Samples that at least one representation classifies correctly.
pub fn oracle_upper_bound(set: &RecordSet) -> UpperBound {
    let k = set.representations.len();
    let correct_any = (0..set.len()).filter(|&i| (0..k).any(|r| set.correct(r, i))).count();
    let total = set.len();
    let fraction = if total == 0 { 0.0 } else { correct_any as f64 / total as f64 };
    UpperBound { correct_any, total, fraction }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniqueCounts {
    pub representations: Vec<String>,
    pub counts: Vec<usize>,
    pub total: usize,
    pub samples: usize,
}

/// Per representation, the samples it alone classifies correctly.
pub fn unique_correct_counts(set: &RecordSet) -> UniqueCounts {
    let k = set.representations.len();
    let mut counts = vec![0; k];
    for i in 0..set.len() {
        let right: Vec<usize> = (0..k).filter(|&r| set.correct(r, i)).collect();
        if let [only] = right[..] {
            counts[only] += 1;
        }
    }
    let total = counts.iter().sum();
    UniqueCounts { representations: set.representations.clone(), counts, total, samples: set.len() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub base: String,
    pub base_accuracy: f64,
    /// Samples wrong under the base but uniquely correct under another
    /// representation.
    pub recoverable: usize,
    pub total: usize,
    /// `base_accuracy + recoverable / total`.
    pub potential: f64,
}

pub fn potential_margin(set: &RecordSet, base: &str) -> Result<Margin> {
    let Some(b) = set.index_of(base) else {
        return invalid(format!("unknown base representation '{base}'"));
    };
    let total = set.len();
    if total == 0 {
        return invalid("no samples");
    }
    let k = set.representations.len();
    let base_correct = (0..total).filter(|&i| set.correct(b, i)).count();
    let recoverable = (0..total)
        .filter(|&i| !set.correct(b, i) && (0..k).filter(|&r| set.correct(r, i)).count() == 1)
        .count();
    let base_accuracy = base_correct as f64 / total as f64;
    Ok(Margin {
        base: base.to_string(),
        base_accuracy,
        recoverable,
        total,
        potential: base_accuracy + recoverable as f64 / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        ["real", "imag", "magnitude", "phase-w", "phase-u"][..k].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_built_agreement() {
        // Labels 0..6; A errs on samples 1, 3, 5, B errs on 3, 4, 5.
        let labels = vec![0, 1, 2, 3, 4, 5];
        let a = vec![0, 2, 2, 1, 4, 0];
        let b = vec![0, 1, 2, 1, 0, 1];
        let set = RecordSet::from_predictions(names(2), labels, vec![a, b]).unwrap();
        let t = error_agreement_matrix(&set, AgreementMode::SameLabel);
        assert_eq!(t.error_counts, vec![3, 3]);
        // A's errors {1,3,5}: B predicts 1,1,1 vs A's 2,1,0 → agrees on 3 only.
        assert_eq!(t.matrix[0], vec![Some(1.0), Some(1.0 / 3.0)]);
        assert_eq!(t.matrix[1], vec![Some(1.0 / 3.0), Some(1.0)]);
        let bw = error_agreement_matrix(&set, AgreementMode::BothWrong);
        assert_eq!(bw.matrix[0][1], Some(2.0 / 3.0));
    }

    #[test]
    fn identical_predictions_agree_fully_and_error_free_rows_are_undefined() {
        let labels = vec![0, 1, 2, 3];
        let p = vec![1, 1, 0, 3];
        let perfect = labels.clone();
        let set = RecordSet::from_predictions(names(3), labels, vec![p.clone(), p, perfect]).unwrap();
        let t = error_agreement_matrix(&set, AgreementMode::SameLabel);
        assert_eq!(t.matrix[0][1], Some(1.0));
        assert_eq!(t.matrix[1][0], Some(1.0));
        assert_eq!(t.matrix[2], vec![None, None, None]);
    }

    #[test]
    fn counts_bound_and_margin() {
        let labels = vec![0, 1, 2, 3, 4, 5, 0, 1, 2, 3];
        let preds = vec![
            vec![0, 1, 2, 3, 0, 0, 0, 0, 0, 0],
            vec![1, 1, 2, 0, 4, 0, 0, 0, 0, 0],
            vec![1, 0, 2, 0, 0, 5, 0, 0, 2, 0],
        ];
        let set = RecordSet::from_predictions(names(3), labels, preds).unwrap();
        let b = oracle_upper_bound(&set);
        assert_eq!((b.correct_any, b.total), (8, 10));
        let u = unique_correct_counts(&set);
        assert_eq!(u.counts, vec![2, 1, 2]);
        assert_eq!(u.total, 5);
        let m = potential_margin(&set, "real").unwrap();
        assert_eq!(m.recoverable, 3);
        assert!((m.potential - (0.5 + 0.3)).abs() < 1e-12);
        assert!(potential_margin(&set, "nope").is_err());
    }

    #[test]
    fn all_wrong_and_all_right() {
        let labels = vec![0, 1, 2];
        let wrong = RecordSet::from_predictions(names(2), labels.clone(), vec![vec![1, 2, 3], vec![5, 5, 5]]).unwrap();
        assert_eq!(oracle_upper_bound(&wrong).correct_any, 0);
        let right = RecordSet::from_predictions(names(2), labels.clone(), vec![labels.clone(), labels]).unwrap();
        assert_eq!(unique_correct_counts(&right).counts, vec![0, 0]);
        assert_eq!(potential_margin(&right, "imag").unwrap().recoverable, 0);
    }

    #[test]
    fn published_arithmetic() {
        use crate::analysis::reference as r;
        let upper = r::UPPER_BOUND_CORRECT as f64 / r::TEST_SAMPLES as f64;
        assert!((upper - 0.9863).abs() < 1e-4);
        let margin = r::MARGIN_BASE_ACCURACY + r::MARGIN_RECOVERABLE as f64 / r::TEST_SAMPLES as f64;
        assert!((margin - 0.9565).abs() < 1e-4);
        assert_eq!(r::UNIQUE.iter().sum::<usize>(), r::UNIQUE_TOTAL);
        // Mag errors (column) repeated by Im (row).
        assert_eq!(r::AGREEMENT[1][2], 0.514);
    }
}
