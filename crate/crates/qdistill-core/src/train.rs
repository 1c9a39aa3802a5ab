//! The distillation loop and everything around it: corpus preparation,
//! seeded batching, Adam steps, best-epoch selection on validation
//! accuracy, checkpointing, evaluation, the loss-ablation harness and
//! standalone inference.
//!
//! Determinism contract: given the same prepared corpus and config, the
//! sequence of parameter updates and every reported metric are
//! bit-identical across runs. Wall-clock timing lives in a separate
//! [`RunTiming`] block so metric artifacts stay byte-comparable.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, EmbeddingSpec};
use crate::data::{
    attach_teacher, split_corpus, splitmix64, EmbeddingTable, LabeledExample, SplitCorpus,
    TeacherProvider, Vocabulary,
};
use crate::error::{Error, Result};
use crate::grad::loss_gradient;
use crate::loss::{LossMode, LossSpec, ProbDist};
use crate::metrics::{ConfusionMatrix, MetricsReport};
use crate::model::{forward, ModelConfig, StudentParams};
use crate::optim::{adam_step, AdamState};

const SEED_TAG_PARAMS: u64 = 0x11;
const SEED_TAG_SHUFFLE: u64 = 0x22;
const SEED_TAG_EMBED: u64 = 0x33;

fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Seed of the frozen embedding table for a run seed.
pub fn embedding_seed(seed: u64) -> u64 {
    derive_seed(seed, SEED_TAG_EMBED)
}

/// Full run configuration. Defaults: 10 epochs, batch size 8, learning
/// rate 0.06, 5 repeats for averaged experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub loss: LossSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub repeats: usize,
}

impl TrainConfig {
    pub fn new(model: ModelConfig, loss: LossSpec, seed: u64) -> Self {
        Self {
            model,
            loss,
            epochs: 10,
            batch_size: 8,
            lr: 0.06,
            seed,
            repeats: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        LossSpec::new(self.loss.mode, self.loss.lambda2)?;
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// A corpus ready to train on: split, tokenized, teacher-attached, with
/// the vocabulary and embedding table the run will use.
#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub corpus: SplitCorpus,
    pub vocab: Vocabulary,
    pub table: EmbeddingTable,
    pub embedding: EmbeddingSpec,
}

/// Assemble a [`TrainSetup`] from raw examples: 6:2:2 split on the run
/// seed, vocabulary from the training split only, tokenization of all
/// splits, optional teacher attachment, and the frozen embedding table
/// (optionally overridden from a JSONL embedding file).
pub fn prepare(
    examples: Vec<LabeledExample>,
    provider: Option<&dyn TeacherProvider>,
    config: &TrainConfig,
    embedding_file: Option<&Path>,
) -> Result<TrainSetup> {
    config.validate()?;
    for ex in &examples {
        if ex.label >= config.model.n_classes {
            return Err(Error::Data(format!(
                "example '{}' has label {} but the model has {} classes",
                ex.id, ex.label, config.model.n_classes
            )));
        }
    }
    let mut corpus = split_corpus(examples, config.seed)?;
    let vocab = Vocabulary::build(corpus.train.iter().map(|e| e.text.as_str()));
    corpus.tokenize_with(&vocab);
    if let Some(p) = provider {
        attach_teacher(&mut corpus, p)?;
    }
    let seed = embedding_seed(config.seed);
    let mut table = EmbeddingTable::deterministic(seed, vocab.len(), config.model.embed_dim);
    let embedding = match embedding_file {
        Some(path) => {
            table.load_overrides(path)?;
            EmbeddingSpec::Inline {
                vectors: table.vectors().to_vec(),
            }
        }
        None => EmbeddingSpec::Seed { seed },
    };
    Ok(TrainSetup {
        corpus,
        vocab,
        table,
        embedding,
    })
}

/// Deterministic metrics of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub loss_mode: LossMode,
    pub lambda2: f64,
    pub param_count: usize,
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Wall-clock side of a run, reported separately from the metrics so the
/// metric files of identically-seeded runs stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    /// Optimization-loop seconds per epoch (validation excluded).
    pub per_epoch_seconds: Vec<f64>,
    /// Running total after each epoch; monotone by construction.
    pub cumulative_seconds: Vec<f64>,
    /// Total distillation time Tkd.
    pub distill_seconds: f64,
    /// One forward pass over the full test split.
    pub inference_seconds: f64,
    pub acc_per_distill_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metrics: RunMetrics,
    pub timing: RunTiming,
}

fn predict(
    params: &StudentParams,
    table: &EmbeddingTable,
    config: &ModelConfig,
    ex: &LabeledExample,
) -> Result<usize> {
    Ok(forward(&ex.tokens, table, params, config)?.argmax())
}

/// Accuracy and macro/binary metrics of `params` over labeled examples.
pub fn evaluate_params(
    params: &StudentParams,
    table: &EmbeddingTable,
    config: &ModelConfig,
    examples: &[LabeledExample],
) -> Result<MetricsReport> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot evaluate an empty example list".into(),
        ));
    }
    let mut cm = ConfusionMatrix::new(config.n_classes);
    for ex in examples {
        if ex.label >= config.n_classes {
            return Err(Error::Data(format!(
                "example '{}' has label {} but the model has {} classes",
                ex.id, ex.label, config.n_classes
            )));
        }
        cm.record(ex.label, predict(params, table, config, ex)?);
    }
    MetricsReport::from_confusion(&cm)
}

/// Evaluate a checkpoint on raw examples; texts are re-tokenized with the
/// checkpoint's own vocabulary.
pub fn evaluate_checkpoint(ck: &Checkpoint, examples: &[LabeledExample]) -> Result<MetricsReport> {
    let table = ck.embedding_table()?;
    let tokenized: Vec<LabeledExample> = examples
        .iter()
        .map(|ex| {
            let mut ex = ex.clone();
            ex.tokens = ck.vocab.tokenize(&ex.text);
            ex
        })
        .collect();
    Ok(
        evaluate_params(&ck.params, &table, &ck.config.model, &tokenized)?
            .with_param_count(ck.config.model.param_count())
            .with_distill_seconds(ck.distill_seconds),
    )
}

/// Standalone inference: tokenize, forward, argmax (lowest index wins
/// ties). Touches nothing but the checkpoint contents.
pub fn infer(ck: &Checkpoint, text: &str) -> Result<(usize, ProbDist)> {
    let table = ck.embedding_table()?;
    let tokens = ck.vocab.tokenize(text);
    let dist = forward(&tokens, &table, &ck.params, &ck.config.model)?;
    Ok((dist.argmax(), dist))
}

/// Run the distillation loop and return the best-validation checkpoint
/// together with the full report.
///
/// Every epoch shuffles the training split with a seeded permutation,
/// takes one Adam step per batch, then scores validation accuracy; the
/// snapshot with the best accuracy wins, later epochs winning ties.
pub fn train_run(setup: &TrainSetup, config: &TrainConfig) -> Result<(Checkpoint, RunReport)> {
    config.validate()?;
    if setup.corpus.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    if setup.table.dim() != config.model.embed_dim {
        return Err(Error::Config(format!(
            "embedding table dimension {} does not match configured embed_dim {}",
            setup.table.dim(),
            config.model.embed_dim
        )));
    }
    let missing: Vec<&str> = setup
        .corpus
        .train
        .iter()
        .filter(|e| e.teacher.is_none())
        .map(|e| e.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "{} training example(s) lack teacher distributions: {}",
            missing.len(),
            missing.join(", ")
        )));
    }

    let mut params = StudentParams::init(
        &config.model,
        &mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SEED_TAG_PARAMS)),
    );
    let mut adam = AdamState::new(config.model.param_count(), config.lr);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SEED_TAG_SHUFFLE));

    let mut epochs = Vec::with_capacity(config.epochs);
    let mut per_epoch_seconds = Vec::with_capacity(config.epochs);
    let mut cumulative_seconds = Vec::with_capacity(config.epochs);
    let mut elapsed_total = 0.0f64;
    let mut best: Option<(f64, usize, StudentParams, AdamState, u128, f64)> = None;

    for epoch in 0..config.epochs {
        let mut order = setup.corpus.train.clone();
        order.shuffle(&mut shuffle_rng);

        let started = Instant::now();
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let (loss, grad) =
                loss_gradient(batch, &setup.table, &params, &config.model, &config.loss).map_err(
                    |e| match e {
                        Error::Numeric(msg) => {
                            Error::Numeric(format!("epoch {epoch} batch {batch_idx}: {msg}"))
                        }
                        other => other,
                    },
                )?;
            loss_sum += loss * batch.len() as f64;
            let mut flat = params.flatten();
            adam_step(&mut flat, &grad.flatten(), &mut adam).map_err(|e| match e {
                Error::Numeric(msg) => {
                    Error::Numeric(format!("epoch {epoch} batch {batch_idx}: {msg}"))
                }
                other => other,
            })?;
            params = StudentParams::from_flat(&config.model, &flat)?;
        }
        let epoch_seconds = started.elapsed().as_secs_f64();
        elapsed_total += epoch_seconds;
        per_epoch_seconds.push(epoch_seconds);
        cumulative_seconds.push(elapsed_total);

        let val = evaluate_params(
            &params,
            &setup.table,
            &config.model,
            &setup.corpus.validation,
        )?;
        epochs.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / setup.corpus.train.len() as f64,
            val_accuracy: val.accuracy,
        });
        let improved = best.as_ref().is_none_or(|(acc, ..)| val.accuracy >= *acc);
        if improved {
            best = Some((
                val.accuracy,
                epoch,
                params.clone(),
                adam.clone(),
                shuffle_rng.get_word_pos(),
                elapsed_total,
            ));
        }
    }

    let (best_acc, best_epoch, best_params, best_adam, rng_word_pos, best_elapsed) =
        best.expect("at least one epoch ran");

    let checkpoint = Checkpoint {
        config: config.clone(),
        vocab: setup.vocab.clone(),
        embedding: setup.embedding.clone(),
        epoch: best_epoch,
        rng_word_pos,
        distill_seconds: best_elapsed,
        params: best_params,
        adam: best_adam,
    };

    let infer_started = Instant::now();
    let test = evaluate_params(
        &checkpoint.params,
        &setup.table,
        &config.model,
        &setup.corpus.test,
    )?
    .with_param_count(config.model.param_count());
    let inference_seconds = infer_started.elapsed().as_secs_f64();

    let acc_per_distill_second = if elapsed_total > 0.0 {
        test.accuracy / elapsed_total
    } else {
        0.0
    };
    let report = RunReport {
        metrics: RunMetrics {
            seed: config.seed,
            loss_mode: config.loss.mode,
            lambda2: config.loss.lambda2,
            param_count: config.model.param_count(),
            epochs,
            best_epoch,
            best_val_accuracy: best_acc,
            test,
        },
        timing: RunTiming {
            per_epoch_seconds,
            cumulative_seconds,
            distill_seconds: elapsed_total,
            inference_seconds,
            acc_per_distill_second,
        },
    };
    Ok((checkpoint, report))
}

fn hash_f64s(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    h
}

/// One loss mode's outcome in the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: LossMode,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    pub per_repeat: Vec<RepeatOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub seed: u64,
    pub accuracy: f64,
    pub f1: f64,
    /// Hash of the initial flat parameters; equal across modes within a
    /// repeat by construction, recorded so reports can prove it.
    pub init_param_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub repeats: usize,
    pub rows: Vec<AblationRow>,
}

/// Run all four loss modes from identical per-repeat initializations and
/// average test metrics over `config.repeats` seeds (seed, seed+1, ...).
pub fn ablation_run(setup: &TrainSetup, config: &TrainConfig) -> Result<AblationReport> {
    config.validate()?;
    let mut rows: Vec<AblationRow> = LossMode::ALL
        .iter()
        .map(|&mode| AblationRow {
            mode,
            mean_accuracy: 0.0,
            mean_f1: 0.0,
            per_repeat: Vec::new(),
        })
        .collect();

    for r in 0..config.repeats {
        let seed = config.seed + r as u64;
        let init = StudentParams::init(
            &config.model,
            &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, SEED_TAG_PARAMS)),
        );
        let init_hash = hash_f64s(&init.flatten());
        for row in rows.iter_mut() {
            let mut run_config = config.clone();
            run_config.seed = seed;
            run_config.loss = LossSpec::new(row.mode, config.loss.lambda2)?;
            let (_, report) = train_run(setup, &run_config)?;
            row.per_repeat.push(RepeatOutcome {
                seed,
                accuracy: report.metrics.test.accuracy,
                f1: report.metrics.test.f1,
                init_param_hash: init_hash,
            });
        }
    }

    for row in rows.iter_mut() {
        let n = row.per_repeat.len() as f64;
        row.mean_accuracy = row.per_repeat.iter().map(|o| o.accuracy).sum::<f64>() / n;
        row.mean_f1 = row.per_repeat.iter().map(|o| o.f1).sum::<f64>() / n;
    }
    Ok(AblationReport {
        repeats: config.repeats,
        rows,
    })
}
