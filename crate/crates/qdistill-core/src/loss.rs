//! The distillation objective: KL and JS divergence against the teacher,
//! cross-entropy against the true label, and the weighted combination
//! `lambda1 * (KL + JS) + lambda2 * CE` with `lambda1 = 1 - lambda2`.
//!
//! All logarithms are natural. Every log argument is floored at
//! [`LOG_EPS`] so teacher distributions with exact zeros stay finite.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Floor applied inside every logarithm.
pub const LOG_EPS: f64 = 1e-12;

/// A probability distribution over classes: non-negative entries that sum
/// to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "probability distribution must be non-empty".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "probability entries must be finite and non-negative, got {v}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1 within 1e-9"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn one_hot(len: usize, class: usize) -> Result<Self> {
        if class >= len {
            return Err(Error::InvalidArgument(format!(
                "one-hot class {class} out of range for {len} classes"
            )));
        }
        let mut v = vec![0.0; len];
        v[class] = 1.0;
        Ok(Self(v))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.0.iter().enumerate().skip(1) {
            if *v > self.0[best] {
                best = i;
            }
        }
        best
    }

    fn is_exact_one_hot(&self) -> bool {
        let ones = self.0.iter().filter(|v| **v == 1.0).count();
        let zeros = self.0.iter().filter(|v| **v == 0.0).count();
        ones == 1 && ones + zeros == self.0.len()
    }
}

impl TryFrom<Vec<f64>> for ProbDist {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        ProbDist::new(values)
    }
}

impl From<ProbDist> for Vec<f64> {
    fn from(p: ProbDist) -> Self {
        p.0
    }
}

/// Which terms of the objective are active. The single-term modes exist
/// for the loss ablation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    Ce,
    Kl,
    Js,
    Combined,
}

impl LossMode {
    pub const ALL: [LossMode; 4] = [LossMode::Ce, LossMode::Kl, LossMode::Js, LossMode::Combined];

    /// Whether this mode reads the teacher distribution.
    pub fn uses_teacher(self) -> bool {
        !matches!(self, LossMode::Ce)
    }
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LossMode::Ce => "ce",
            LossMode::Kl => "kl",
            LossMode::Js => "js",
            LossMode::Combined => "combined",
        };
        f.write_str(s)
    }
}

impl FromStr for LossMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ce" => Ok(LossMode::Ce),
            "kl" => Ok(LossMode::Kl),
            "js" => Ok(LossMode::Js),
            "combined" | "kl+js+ce" => Ok(LossMode::Combined),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss mode '{other}' (expected ce, kl, js or combined)"
            ))),
        }
    }
}

/// Objective selection plus the cross-entropy weight `lambda2`; the
/// teacher weight is always the complement `1 - lambda2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub mode: LossMode,
    pub lambda2: f64,
}

impl LossSpec {
    pub fn new(mode: LossMode, lambda2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda2) {
            return Err(Error::Config(format!(
                "lambda2 must lie in [0, 1], got {lambda2}"
            )));
        }
        Ok(Self { mode, lambda2 })
    }

    pub fn lambda1(&self) -> f64 {
        1.0 - self.lambda2
    }
}

impl Default for LossSpec {
    /// Combined objective with teacher weight 0.9 (so lambda2 = 0.1).
    fn default() -> Self {
        Self {
            mode: LossMode::Combined,
            lambda2: 0.1,
        }
    }
}

fn ln_clamped(x: f64) -> f64 {
    x.max(LOG_EPS).ln()
}

pub(crate) fn kl_raw(f: &[f64], q: &[f64]) -> f64 {
    f.iter()
        .zip(q)
        .map(|(&fi, &qi)| {
            if fi <= 0.0 {
                0.0
            } else {
                fi * (ln_clamped(fi) - ln_clamped(qi))
            }
        })
        .sum()
}

pub(crate) fn js_raw(f: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = f.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    0.5 * (kl_raw(f, &m) + kl_raw(q, &m))
}

pub(crate) fn ce_raw(true_class: usize, q: &[f64]) -> f64 {
    -ln_clamped(q[true_class])
}

fn check_same_len(a: &ProbDist, b: &ProbDist) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "distribution lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// KL(f || q) = sum_i f_i ln(f_i / q_i), in nats.
pub fn kl_divergence(f: &ProbDist, q: &ProbDist) -> Result<f64> {
    check_same_len(f, q)?;
    Ok(kl_raw(f.values(), q.values()))
}

/// Symmetrized divergence 0.5 [KL(f||m) + KL(q||m)] with m the midpoint;
/// bounded by ln 2.
pub fn js_divergence(f: &ProbDist, q: &ProbDist) -> Result<f64> {
    check_same_len(f, q)?;
    Ok(js_raw(f.values(), q.values()))
}

/// -sum_i y_i ln q_i for a one-hot y, i.e. -ln q at the true class.
pub fn cross_entropy(y: &ProbDist, q: &ProbDist) -> Result<f64> {
    check_same_len(y, q)?;
    if !y.is_exact_one_hot() {
        return Err(Error::InvalidArgument(
            "cross_entropy expects a one-hot label distribution".into(),
        ));
    }
    Ok(ce_raw(y.argmax(), q.values()))
}

/// Loss of one example under `spec`, on raw slices. `q` must come from a
/// softmax (strictly positive); `f` may contain exact zeros.
pub(crate) fn example_loss(f: &[f64], q: &[f64], true_class: usize, spec: &LossSpec) -> f64 {
    match spec.mode {
        LossMode::Ce => ce_raw(true_class, q),
        LossMode::Kl => kl_raw(f, q),
        LossMode::Js => js_raw(f, q),
        LossMode::Combined => {
            spec.lambda1() * (kl_raw(f, q) + js_raw(f, q)) + spec.lambda2 * ce_raw(true_class, q)
        }
    }
}

/// d(example_loss)/dq at interior points (all q_i > 0).
pub(crate) fn example_loss_grad_q(
    f: &[f64],
    q: &[f64],
    true_class: usize,
    spec: &LossSpec,
) -> Vec<f64> {
    let c = q.len();
    let kl_term = |i: usize| -> f64 {
        if q[i] > LOG_EPS {
            -f[i] / q[i]
        } else {
            0.0
        }
    };
    let js_term = |i: usize| -> f64 {
        let m = 0.5 * (f[i] + q[i]);
        0.5 * (ln_clamped(q[i]) - ln_clamped(m))
    };
    let ce_term = |i: usize| -> f64 {
        if i == true_class {
            -1.0 / q[i].max(LOG_EPS)
        } else {
            0.0
        }
    };
    (0..c)
        .map(|i| match spec.mode {
            LossMode::Ce => ce_term(i),
            LossMode::Kl => kl_term(i),
            LossMode::Js => js_term(i),
            LossMode::Combined => {
                spec.lambda1() * (kl_term(i) + js_term(i)) + spec.lambda2 * ce_term(i)
            }
        })
        .collect()
}

/// Mean loss over a batch of (teacher, student, label) triples.
pub fn combined_loss(batch: &[(ProbDist, ProbDist, ProbDist)], spec: &LossSpec) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument(
            "combined_loss requires a non-empty batch".into(),
        ));
    }
    let c = batch[0].0.len();
    let mut total = 0.0;
    for (f, q, y) in batch {
        if f.len() != c || q.len() != c || y.len() != c {
            return Err(Error::InvalidArgument(
                "all batch distributions must share the same class count".into(),
            ));
        }
        if !y.is_exact_one_hot() {
            return Err(Error::InvalidArgument(
                "label distributions must be one-hot".into(),
            ));
        }
        total += example_loss(f.values(), q.values(), y.argmax(), spec);
    }
    Ok(total / batch.len() as f64)
}
