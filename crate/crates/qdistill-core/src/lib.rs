//! Quantum knowledge distillation for text classification, desk scale.
//!
//! A small language-model student is realized as a parameterized quantum
//! circuit on a dense statevector simulator: pooled token embeddings are
//! projected down to one RX angle per qubit, a layered ansatz (RY triples,
//! nearest-neighbour RZZ, RZ triples, CNOT chain) evolves the register and
//! Z expectations of the readout qubits feed a softmax over classes. The
//! student trains against precomputed teacher distributions with a
//! combined KL + JS + cross-entropy objective under Adam, with adjoint
//! differentiation supplying exact gradients.
//!
//! Module map: [`sim`] holds the statevector register and gate kernels,
//! [`model`] the student circuit and its parameters, [`grad`] adjoint
//! gradients plus the parameter-shift and finite-difference oracles,
//! [`loss`] the KL/JS/CE objective, [`optim`] Adam, [`data`] corpora,
//! tokenization, splits, teachers and embeddings, [`train`] the
//! distillation loop with evaluation, ablation and inference,
//! [`checkpoint`] the on-disk model format, [`metrics`] confusion-matrix
//! scores, and [`oracle`] brute-force dense-matrix references for tests.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod grad;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod sim;
pub mod train;

pub use checkpoint::{Checkpoint, EmbeddingSpec};
pub use data::{
    attach_teacher, load_corpus, make_synthetic_corpus, save_corpus, save_teacher, split_corpus,
    CountingTeacher, EmbeddingTable, FileTeacher, LabeledExample, SplitCorpus,
    SyntheticCorpusConfig, SyntheticTeacher, TeacherProvider, Vocabulary,
};
pub use error::{Error, Result};
pub use grad::{batch_loss, finite_diff_gradient, loss_gradient, param_shift_gradient};
pub use loss::{
    combined_loss, cross_entropy, js_divergence, kl_divergence, LossMode, LossSpec, ProbDist,
};
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use model::{
    apply_ansatz, circuit_gates, encode, forward, softmax, GradientVector, ModelConfig, ParamRef,
    StudentParams,
};
pub use optim::{adam_step, AdamState};
pub use sim::{GateKind, GateOp, StateVector, MAX_QUBITS};
pub use train::{
    ablation_run, embedding_seed, evaluate_checkpoint, evaluate_params, infer, prepare, train_run,
    AblationReport, RunMetrics, RunReport, RunTiming, TrainConfig, TrainSetup,
};
