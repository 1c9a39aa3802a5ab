//! The quantum student model: pooled token embeddings pass through a
//! trainable linear projection, the projected values become RX encoding
//! angles, a depth-p ansatz evolves the register, and Z expectations of
//! the readout qubits feed a softmax over classes.
//!
//! One ansatz layer applies, in order: three RY rotations per qubit (UY),
//! an RZZ on every adjacent pair, three RZ rotations per qubit (UZ), and a
//! CNOT on every adjacent pair with the lower qubit as control.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::loss::ProbDist;
use crate::sim::{GateOp, StateVector, MAX_QUBITS};

/// Static shape of the student: register size, embedding input width,
/// ansatz depth, and which qubits are read out for the classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_qubits: usize,
    pub embed_dim: usize,
    pub depth: usize,
    pub n_classes: usize,
    /// Readout qubit per class; defaults to the first `n_classes` qubits.
    pub readout: Vec<usize>,
}

impl ModelConfig {
    pub fn new(n_qubits: usize, embed_dim: usize, depth: usize, n_classes: usize) -> Result<Self> {
        let config = Self {
            n_qubits,
            embed_dim,
            depth,
            n_classes,
            readout: (0..n_classes).collect(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {} outside supported range 1..={}",
                self.n_qubits, MAX_QUBITS
            )));
        }
        if self.embed_dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Config("need at least 2 classes".into()));
        }
        if self.n_classes > self.n_qubits {
            return Err(Error::Config(format!(
                "{} classes cannot be read out from {} qubits",
                self.n_classes, self.n_qubits
            )));
        }
        if self.readout.len() != self.n_classes {
            return Err(Error::Config(format!(
                "readout list has {} entries for {} classes",
                self.readout.len(),
                self.n_classes
            )));
        }
        let mut seen = vec![false; self.n_qubits];
        for &q in &self.readout {
            if q >= self.n_qubits {
                return Err(Error::Config(format!(
                    "readout qubit {q} outside register of {} qubits",
                    self.n_qubits
                )));
            }
            if seen[q] {
                return Err(Error::Config(format!("readout qubit {q} listed twice")));
            }
            seen[q] = true;
        }
        Ok(())
    }

    /// Trainable parameter count: n*m + n for the projection plus
    /// 6n + (n-1) angles per ansatz layer.
    pub fn param_count(&self) -> usize {
        let n = self.n_qubits;
        n * self.embed_dim + n + self.depth * (6 * n + n - 1)
    }
}

/// Trainable angles of one ansatz layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzLayer {
    /// Three RY angles per qubit.
    pub uy: Vec<[f64; 3]>,
    /// One RZZ angle per adjacent pair (i, i+1).
    pub zz: Vec<f64>,
    /// Three RZ angles per qubit.
    pub uz: Vec<[f64; 3]>,
}

/// All trainable values: the linear projection and the per-layer angles.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentParams {
    /// Row-major n_qubits x embed_dim weight matrix.
    pub proj_weight: Vec<f64>,
    pub proj_bias: Vec<f64>,
    pub layers: Vec<AnsatzLayer>,
}

/// Gradient with respect to every trainable value; same shape as
/// [`StudentParams`].
pub type GradientVector = StudentParams;

impl StudentParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let n = config.n_qubits;
        Self {
            proj_weight: vec![0.0; n * config.embed_dim],
            proj_bias: vec![0.0; n],
            layers: (0..config.depth)
                .map(|_| AnsatzLayer {
                    uy: vec![[0.0; 3]; n],
                    zz: vec![0.0; n.saturating_sub(1)],
                    uz: vec![[0.0; 3]; n],
                })
                .collect(),
        }
    }

    /// Random initialization: projection weights uniform in
    /// +-sqrt(1/embed_dim), bias zero, angles uniform in +-0.1.
    pub fn init(config: &ModelConfig, rng: &mut impl Rng) -> Self {
        let mut params = Self::zeros(config);
        let bound = (1.0 / config.embed_dim as f64).sqrt();
        for w in params.proj_weight.iter_mut() {
            *w = rng.gen_range(-bound..bound);
        }
        for layer in params.layers.iter_mut() {
            for angles in layer.uy.iter_mut() {
                for a in angles.iter_mut() {
                    *a = rng.gen_range(-0.1..0.1);
                }
            }
            for a in layer.zz.iter_mut() {
                *a = rng.gen_range(-0.1..0.1);
            }
            for angles in layer.uz.iter_mut() {
                for a in angles.iter_mut() {
                    *a = rng.gen_range(-0.1..0.1);
                }
            }
        }
        params
    }

    pub fn count(&self) -> usize {
        self.proj_weight.len()
            + self.proj_bias.len()
            + self
                .layers
                .iter()
                .map(|l| l.uy.len() * 3 + l.zz.len() + l.uz.len() * 3)
                .sum::<usize>()
    }

    pub fn matches_config(&self, config: &ModelConfig) -> bool {
        let n = config.n_qubits;
        self.proj_weight.len() == n * config.embed_dim
            && self.proj_bias.len() == n
            && self.layers.len() == config.depth
            && self
                .layers
                .iter()
                .all(|l| l.uy.len() == n && l.zz.len() == n.saturating_sub(1) && l.uz.len() == n)
    }

    /// Flatten in the canonical order: weight row-major, bias, then per
    /// layer UY (qubit-major), RZZ, UZ. Checkpoints, the optimizer and the
    /// finite-difference oracle all rely on this order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count());
        out.extend_from_slice(&self.proj_weight);
        out.extend_from_slice(&self.proj_bias);
        for layer in &self.layers {
            for angles in &layer.uy {
                out.extend_from_slice(angles);
            }
            out.extend_from_slice(&layer.zz);
            for angles in &layer.uz {
                out.extend_from_slice(angles);
            }
        }
        out
    }

    pub fn from_flat(config: &ModelConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != config.param_count() {
            return Err(Error::InvalidArgument(format!(
                "flat parameter vector has {} entries, config requires {}",
                flat.len(),
                config.param_count()
            )));
        }
        let n = config.n_qubits;
        let mut it = flat.iter().copied();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        let proj_weight = take(n * config.embed_dim);
        let proj_bias = take(n);
        let mut layers = Vec::with_capacity(config.depth);
        for _ in 0..config.depth {
            let uy = take(3 * n)
                .chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect();
            let zz = take(n - 1);
            let uz = take(3 * n)
                .chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect();
            layers.push(AnsatzLayer { uy, zz, uz });
        }
        Ok(Self {
            proj_weight,
            proj_bias,
            layers,
        })
    }
}

/// Identifies the trainable angle a circuit gate was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamRef {
    /// Encoding angle z_i (chains into the projection weights and bias).
    Encode(usize),
    Uy {
        layer: usize,
        qubit: usize,
        slot: usize,
    },
    Zz {
        layer: usize,
        pair: usize,
    },
    Uz {
        layer: usize,
        qubit: usize,
        slot: usize,
    },
}

/// The full gate schedule for given encoding angles and ansatz parameters,
/// each gate tagged with the parameter it realizes (CNOTs carry none).
pub fn circuit_gates(
    params: &StudentParams,
    encoding_angles: &[f64],
) -> Vec<(GateOp, Option<ParamRef>)> {
    let n = encoding_angles.len();
    let mut gates = Vec::new();
    for (q, &z) in encoding_angles.iter().enumerate() {
        gates.push((GateOp::rx(q, z), Some(ParamRef::Encode(q))));
    }
    for (l, layer) in params.layers.iter().enumerate() {
        for (q, angles) in layer.uy.iter().enumerate() {
            for (s, &a) in angles.iter().enumerate() {
                gates.push((
                    GateOp::ry(q, a),
                    Some(ParamRef::Uy {
                        layer: l,
                        qubit: q,
                        slot: s,
                    }),
                ));
            }
        }
        for (p, &a) in layer.zz.iter().enumerate() {
            gates.push((
                GateOp::rzz(p, p + 1, a),
                Some(ParamRef::Zz { layer: l, pair: p }),
            ));
        }
        for (q, angles) in layer.uz.iter().enumerate() {
            for (s, &a) in angles.iter().enumerate() {
                gates.push((
                    GateOp::rz(q, a),
                    Some(ParamRef::Uz {
                        layer: l,
                        qubit: q,
                        slot: s,
                    }),
                ));
            }
        }
        for p in 0..n.saturating_sub(1) {
            gates.push((GateOp::cnot(p, p + 1), None));
        }
    }
    gates
}

/// z = W * pooled + b: the RX encoding angles.
pub fn encoding_angles(params: &StudentParams, pooled: &[f64]) -> Vec<f64> {
    let m = pooled.len();
    params
        .proj_bias
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let row = &params.proj_weight[i * m..(i + 1) * m];
            row.iter().zip(pooled).map(|(w, e)| w * e).sum::<f64>() + b
        })
        .collect()
}

fn check_shapes(
    tokens: &[u32],
    table: &EmbeddingTable,
    params: &StudentParams,
    config: &ModelConfig,
) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::Input("cannot encode an empty token sequence".into()));
    }
    if table.dim() != config.embed_dim {
        return Err(Error::Config(format!(
            "embedding table dimension {} does not match configured embed_dim {}",
            table.dim(),
            config.embed_dim
        )));
    }
    if !params.matches_config(config) {
        return Err(Error::Config(
            "parameter shapes do not match the model configuration".into(),
        ));
    }
    Ok(())
}

/// Load a token sequence into the register: |psi_enc> = prod_i RX(z_i)|0>^n.
pub fn encode(
    tokens: &[u32],
    table: &EmbeddingTable,
    params: &StudentParams,
    config: &ModelConfig,
) -> Result<StateVector> {
    check_shapes(tokens, table, params, config)?;
    let pooled = table.pooled(tokens)?;
    let z = encoding_angles(params, &pooled);
    let mut state = StateVector::zero(config.n_qubits)?;
    for (q, &angle) in z.iter().enumerate() {
        state.apply(&GateOp::rx(q, angle))?;
    }
    Ok(state)
}

/// Evolve `state` through all ansatz layers.
pub fn apply_ansatz(state: &mut StateVector, params: &StudentParams) -> Result<()> {
    let n = state.n_qubits();
    for layer in &params.layers {
        for (q, angles) in layer.uy.iter().enumerate() {
            for &a in angles {
                state.apply(&GateOp::ry(q, a))?;
            }
        }
        for (p, &a) in layer.zz.iter().enumerate() {
            state.apply(&GateOp::rzz(p, p + 1, a))?;
        }
        for (q, angles) in layer.uz.iter().enumerate() {
            for &a in angles {
                state.apply(&GateOp::rz(q, a))?;
            }
        }
        for p in 0..n.saturating_sub(1) {
            state.apply(&GateOp::cnot(p, p + 1))?;
        }
    }
    Ok(())
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Z expectations of the readout qubits, in class order.
pub fn readout_expectations(state: &StateVector, config: &ModelConfig) -> Vec<f64> {
    let all = state.z_expectations();
    config.readout.iter().map(|&q| all[q]).collect()
}

/// Full forward pass: encode, evolve, measure, softmax.
pub fn forward(
    tokens: &[u32],
    table: &EmbeddingTable,
    params: &StudentParams,
    config: &ModelConfig,
) -> Result<ProbDist> {
    let mut state = encode(tokens, table, params, config)?;
    apply_ansatz(&mut state, params)?;
    let logits = readout_expectations(&state, config);
    ProbDist::new(softmax(&logits))
}
