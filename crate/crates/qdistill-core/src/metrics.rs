//! Classification metrics: accuracy, precision, recall and F1 from
//! confusion counts. Binary tasks score class 1 as positive; multi-class
//! tasks report macro averages over per-class one-vs-rest scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// counts[true_label][predicted_label].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(
        truths: &[usize],
        predictions: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        if truths.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot score an empty example list".into(),
            ));
        }
        if truths.len() != predictions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels but {} predictions",
                truths.len(),
                predictions.len()
            )));
        }
        let mut cm = Self::new(n_classes);
        for (&t, &p) in truths.iter().zip(predictions) {
            if t >= n_classes || p >= n_classes {
                return Err(Error::InvalidArgument(format!(
                    "label/prediction ({t}, {p}) outside {n_classes} classes"
                )));
            }
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    /// Binary fixture constructor with class 1 as the positive class.
    pub fn from_binary_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        let mut cm = Self::new(2);
        cm.counts[1][1] = tp;
        cm.counts[0][0] = tn;
        cm.counts[0][1] = fp;
        cm.counts[1][0] = fn_;
        cm
    }

    pub fn record(&mut self, truth: usize, prediction: usize) {
        self.counts[truth][prediction] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|r| r.iter().sum::<usize>()).sum()
    }

    fn diagonal(&self) -> usize {
        (0..self.n_classes).map(|i| self.counts[i][i]).sum()
    }

    fn predicted(&self, class: usize) -> usize {
        self.counts.iter().map(|r| r[class]).sum()
    }

    fn actual(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }
}

/// Scores for one run over one example set. The cost ratios are filled in
/// only when the parameter count or distillation time is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_examples: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class_f1: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc_per_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc_per_second: Option<f64>,
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self> {
        let total = cm.total();
        if total == 0 {
            return Err(Error::InvalidArgument(
                "cannot score an empty example list".into(),
            ));
        }
        let accuracy = cm.diagonal() as f64 / total as f64;

        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let class_prf = |c: usize| -> (f64, f64, f64) {
            let tp = cm.counts[c][c];
            let p = ratio(tp, cm.predicted(c));
            let r = ratio(tp, cm.actual(c));
            let f1 = if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            };
            (p, r, f1)
        };

        let (precision, recall, f1, per_class_f1) = if cm.n_classes == 2 {
            let (p, r, f1) = class_prf(1);
            let f1s = vec![class_prf(0).2, f1];
            (p, r, f1, f1s)
        } else {
            let prf: Vec<(f64, f64, f64)> = (0..cm.n_classes).map(class_prf).collect();
            let k = cm.n_classes as f64;
            let p = prf.iter().map(|x| x.0).sum::<f64>() / k;
            let r = prf.iter().map(|x| x.1).sum::<f64>() / k;
            let f1 = prf.iter().map(|x| x.2).sum::<f64>() / k;
            (p, r, f1, prf.iter().map(|x| x.2).collect())
        };

        Ok(Self {
            n_examples: total,
            accuracy,
            precision,
            recall,
            f1,
            per_class_f1,
            acc_per_param: None,
            acc_per_second: None,
        })
    }

    pub fn with_param_count(mut self, params: usize) -> Self {
        self.acc_per_param = Some(self.accuracy / params as f64);
        self
    }

    pub fn with_distill_seconds(mut self, seconds: f64) -> Self {
        if seconds > 0.0 {
            self.acc_per_second = Some(self.accuracy / seconds);
        }
        self
    }
}
