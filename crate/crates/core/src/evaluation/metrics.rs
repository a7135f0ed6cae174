//! Per-class and macro-averaged classification metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision, recall and F1 of one class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Unweighted means of the per-class values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Metrics of a binary prediction.
///
/// `confusion[t][p]` counts samples of true class `t` predicted as `p`, with
/// index 0 for −1 and index 1 for +1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: BTreeMap<i8, ClassMetrics>,
    pub accuracy: f64,
    #[serde(rename = "macro")]
    pub macro_avg: MacroMetrics,
    pub confusion: [[usize; 2]; 2],
}

impl MetricsReport {
    /// F1 of the positive (minority) class.
    pub fn minority_f1(&self) -> f64 {
        self.per_class[&1].f1
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn slot(label: i8) -> Result<usize> {
    match label {
        1 => Ok(1),
        -1 => Ok(0),
        other => Err(Error::InvalidInput(format!("labels must be +1 or -1, found {other}"))),
    }
}

/// Computes precision, recall and F1 for both classes. Ratios with a zero
/// denominator are defined as 0.
pub fn confusion_metrics(y_true: &[i8], y_pred: &[i8]) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[slot(t)?][slot(p)?] += 1;
    }

    let mut per_class = BTreeMap::new();
    for (label, k) in [(-1i8, 0usize), (1, 1)] {
        let tp = confusion[k][k];
        let predicted = confusion[0][k] + confusion[1][k];
        let support = confusion[k][0] + confusion[k][1];
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.insert(
            label,
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.values().map(f).sum::<f64>() / 2.0;
    let macro_avg = MacroMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    };
    Ok(MetricsReport {
        accuracy: ratio(confusion[0][0] + confusion[1][1], y_true.len()),
        per_class,
        macro_avg,
        confusion,
    })
}
