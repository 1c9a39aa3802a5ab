//! `qdistill`: config-driven runner for quantum knowledge distillation
//! experiments.
//!
//! Subcommands: `gen-data`, `gen-teacher`, `train`, `eval`, `infer`,
//! `ablate`, `describe-circuit`. Hyperparameters resolve with precedence
//! command-line flags > config file > built-in defaults, and every run
//! prints its resolved configuration and seed. Exit codes: 0 success,
//! 1 usage error, 2 data error, 3 numerical error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use qdistill_core::{
    ablation_run, evaluate_checkpoint, infer, load_corpus, make_synthetic_corpus, prepare,
    save_corpus, save_teacher, split_corpus, train_run, Checkpoint, Error, FileTeacher, LossMode,
    LossSpec, ModelConfig, Result, RunReport, SyntheticCorpusConfig, SyntheticTeacher, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "qdistill",
    about = "Train and run quantum-circuit students distilled from teacher distributions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic classification corpus (JSONL).
    GenData(GenDataArgs),
    /// Generate a teacher-distribution file for a corpus (JSONL).
    GenTeacher(GenTeacherArgs),
    /// Distill a student against a corpus and teacher file.
    Train(TrainArgs),
    /// Score a checkpoint on a corpus split.
    Eval(EvalArgs),
    /// Classify a single text with a trained checkpoint.
    Infer(InferArgs),
    /// Run the four-mode loss ablation from shared initializations.
    Ablate(AblateArgs),
    /// Print the gate schedule and parameter count for a configuration.
    DescribeCircuit(DescribeArgs),
}

/// Hyperparameters shared by train/ablate/describe-circuit. Every field
/// falls back to the config file, then to the built-in default.
#[derive(Args, Clone)]
struct HyperArgs {
    /// Flat key-value config file (key = value per line).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    /// ce | kl | js | combined
    #[arg(long)]
    loss_mode: Option<String>,
    /// Cross-entropy weight; the teacher weight is 1 - lambda2.
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 400)]
    examples: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Fraction of tokens drawn from the class-shared pool.
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    #[arg(long, default_value_t = 12)]
    words_per_class: usize,
    #[arg(long, default_value_t = 12)]
    shared_words: usize,
    #[arg(long, default_value_t = 8)]
    min_tokens: usize,
    #[arg(long, default_value_t = 16)]
    max_tokens: usize,
}

#[derive(Args)]
struct GenTeacherArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Probability the teacher's peak lands on the true label.
    #[arg(long, default_value_t = 0.95)]
    accuracy: f64,
    /// Probability mass spread over the non-peak classes.
    #[arg(long, default_value_t = 0.05)]
    smoothing: f64,
    /// Class count; inferred from the corpus labels when omitted.
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    teacher: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Optional JSONL embedding overrides ({"token_id", "vector"} rows).
    #[arg(long)]
    embedding_file: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// train | validation | test | all
    #[arg(long, default_value = "test")]
    split: String,
    /// Write eval_metrics.json here in addition to printing.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    text: String,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    teacher: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct DescribeArgs {
    #[command(flatten)]
    hyper: HyperArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Input(_) => 1,
        Error::Data(_) | Error::Format(_) | Error::Io(_) => 2,
        Error::Numeric(_) => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => gen_data(args),
        Command::GenTeacher(args) => gen_teacher(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Infer(args) => run_infer(args),
        Command::Ablate(args) => ablate(args),
        Command::DescribeCircuit(args) => describe_circuit(args),
    }
}

/// Merge flags > config file > defaults into a full TrainConfig.
fn resolve_config(hyper: &HyperArgs) -> Result<TrainConfig> {
    #[derive(Default)]
    struct FileValues {
        seed: Option<u64>,
        qubits: Option<usize>,
        depth: Option<usize>,
        embed_dim: Option<usize>,
        classes: Option<usize>,
        loss_mode: Option<String>,
        lambda2: Option<f64>,
        lr: Option<f64>,
        epochs: Option<usize>,
        batch_size: Option<usize>,
        repeats: Option<usize>,
    }

    let mut file = FileValues::default();
    if let Some(path) = &hyper.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {path:?}: {e}")))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config file {path:?}: {e}")))?;
        for (key, value) in &table {
            let as_usize = |v: &toml::Value| -> Result<usize> {
                v.as_integer()
                    .filter(|i| *i >= 0)
                    .map(|i| i as usize)
                    .ok_or_else(|| {
                        Error::Config(format!("config key '{key}' must be a non-negative integer"))
                    })
            };
            let as_f64 = |v: &toml::Value| -> Result<f64> {
                v.as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| Error::Config(format!("config key '{key}' must be a number")))
            };
            match key.as_str() {
                "seed" => file.seed = Some(as_usize(value)? as u64),
                "qubits" => file.qubits = Some(as_usize(value)?),
                "depth" => file.depth = Some(as_usize(value)?),
                "embed_dim" => file.embed_dim = Some(as_usize(value)?),
                "classes" => file.classes = Some(as_usize(value)?),
                "loss_mode" => {
                    file.loss_mode = Some(
                        value
                            .as_str()
                            .ok_or_else(|| {
                                Error::Config("config key 'loss_mode' must be a string".into())
                            })?
                            .to_owned(),
                    )
                }
                "lambda2" => file.lambda2 = Some(as_f64(value)?),
                "lr" => file.lr = Some(as_f64(value)?),
                "epochs" => file.epochs = Some(as_usize(value)?),
                "batch_size" => file.batch_size = Some(as_usize(value)?),
                "repeats" => file.repeats = Some(as_usize(value)?),
                other => {
                    return Err(Error::Config(format!("unknown config key '{other}'")));
                }
            }
        }
    }

    let qubits = hyper.qubits.or(file.qubits).unwrap_or(4);
    let embed_dim = hyper.embed_dim.or(file.embed_dim).unwrap_or(16);
    let depth = hyper.depth.or(file.depth).unwrap_or(2);
    let classes = hyper.classes.or(file.classes).unwrap_or(2);
    let mode_name = hyper
        .loss_mode
        .clone()
        .or(file.loss_mode)
        .unwrap_or_else(|| "combined".to_owned());
    let mode = LossMode::from_str(&mode_name)?;
    let lambda2 = hyper.lambda2.or(file.lambda2).unwrap_or(0.1);

    let model = ModelConfig::new(qubits, embed_dim, depth, classes)?;
    let loss = LossSpec::new(mode, lambda2)?;
    let seed = hyper.seed.or(file.seed).unwrap_or(7);
    let mut config = TrainConfig::new(model, loss, seed);
    if let Some(v) = hyper.lr.or(file.lr) {
        config.lr = v;
    }
    if let Some(v) = hyper.epochs.or(file.epochs) {
        config.epochs = v;
    }
    if let Some(v) = hyper.batch_size.or(file.batch_size) {
        config.batch_size = v;
    }
    if let Some(v) = hyper.repeats.or(file.repeats) {
        config.repeats = v;
    }
    config.validate()?;
    Ok(config)
}

fn print_resolved(config: &TrainConfig) {
    println!(
        "resolved config: qubits={} embed_dim={} depth={} classes={} readout={:?} \
         loss_mode={} lambda2={} lr={} epochs={} batch_size={} repeats={} seed={}",
        config.model.n_qubits,
        config.model.embed_dim,
        config.model.depth,
        config.model.n_classes,
        config.model.readout,
        config.loss.mode,
        config.loss.lambda2,
        config.lr,
        config.epochs,
        config.batch_size,
        config.repeats,
        config.seed
    );
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let config = SyntheticCorpusConfig {
        n_examples: args.examples,
        n_classes: args.classes,
        seed: args.seed,
        vocab_overlap: args.overlap,
        words_per_class: args.words_per_class,
        shared_words: args.shared_words,
        min_tokens: args.min_tokens,
        max_tokens: args.max_tokens,
    };
    println!(
        "resolved config: examples={} classes={} overlap={} words_per_class={} \
         shared_words={} tokens={}..={} seed={}",
        config.n_examples,
        config.n_classes,
        config.vocab_overlap,
        config.words_per_class,
        config.shared_words,
        config.min_tokens,
        config.max_tokens,
        config.seed
    );
    let corpus = make_synthetic_corpus(&config)?;
    save_corpus(&args.out, &corpus)?;
    println!("wrote {} examples to {}", corpus.len(), args.out.display());
    Ok(())
}

fn gen_teacher(args: GenTeacherArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let classes = args
        .classes
        .unwrap_or_else(|| corpus.iter().map(|e| e.label + 1).max().unwrap_or(2));
    println!(
        "resolved config: classes={} accuracy={} smoothing={} seed={}",
        classes, args.accuracy, args.smoothing, args.seed
    );
    let provider = SyntheticTeacher::new(args.seed, classes, args.accuracy, args.smoothing)?;
    save_teacher(&args.out, &corpus, &provider)?;
    println!(
        "wrote {} teacher rows to {}",
        corpus.len(),
        args.out.display()
    );
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Format(format!("cannot encode {path:?}: {e}")))?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

fn write_run_log(path: &Path, report: &RunReport) -> Result<()> {
    use std::fmt::Write as _;
    let mut log = String::new();
    for (e, t) in report
        .metrics
        .epochs
        .iter()
        .zip(&report.timing.per_epoch_seconds)
    {
        writeln!(
            log,
            "epoch {} train_loss={:.6} val_acc={:.4} seconds={:.3}",
            e.epoch, e.train_loss, e.val_accuracy, t
        )
        .ok();
    }
    writeln!(
        log,
        "best epoch {} val_acc={:.4}",
        report.metrics.best_epoch, report.metrics.best_val_accuracy
    )
    .ok();
    let m = &report.metrics.test;
    writeln!(
        log,
        "test acc={:.4} precision={:.4} recall={:.4} f1={:.4}",
        m.accuracy, m.precision, m.recall, m.f1
    )
    .ok();
    writeln!(log, "params={}", report.metrics.param_count).ok();
    if let Some(r) = m.acc_per_param {
        writeln!(log, "acc/param={r:.3e}").ok();
    }
    writeln!(
        log,
        "distill_seconds={:.3} inference_seconds={:.3} acc/tkd={:.3e}",
        report.timing.distill_seconds,
        report.timing.inference_seconds,
        report.timing.acc_per_distill_second
    )
    .ok();
    fs::write(path, log)?;
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let config = resolve_config(&args.hyper)?;
    print_resolved(&config);
    fs::create_dir_all(&args.out_dir)?;

    let corpus = load_corpus(&args.corpus)?;
    let teacher = FileTeacher::load(&args.teacher)?;
    let setup = prepare(
        corpus,
        Some(&teacher),
        &config,
        args.embedding_file.as_deref(),
    )?;
    println!(
        "corpus: {} train / {} validation / {} test, vocabulary {} tokens",
        setup.corpus.train.len(),
        setup.corpus.validation.len(),
        setup.corpus.test.len(),
        setup.vocab.len()
    );

    let (checkpoint, report) = train_run(&setup, &config)?;

    let ck_path = args.out_dir.join("checkpoint.qdck");
    checkpoint.save(&ck_path)?;
    write_json(&args.out_dir.join("metrics.json"), &report.metrics)?;
    write_json(&args.out_dir.join("timing.json"), &report.timing)?;
    write_run_log(&args.out_dir.join("run.log"), &report)?;

    let m = &report.metrics.test;
    println!(
        "best epoch {} (val_acc {:.4}); test acc={:.4} p={:.4} r={:.4} f1={:.4}",
        report.metrics.best_epoch,
        report.metrics.best_val_accuracy,
        m.accuracy,
        m.precision,
        m.recall,
        m.f1
    );
    println!(
        "distillation {:.3}s, inference pass {:.3}s, checkpoint {}",
        report.timing.distill_seconds,
        report.timing.inference_seconds,
        ck_path.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    print_resolved(&checkpoint.config);
    let corpus = load_corpus(&args.corpus)?;
    let split = split_corpus(corpus, checkpoint.config.seed)?;
    let examples = match args.split.as_str() {
        "train" => split.train,
        "validation" => split.validation,
        "test" => split.test,
        "all" => split.all().cloned().collect(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown split '{other}' (expected train, validation, test or all)"
            )))
        }
    };
    let metrics = evaluate_checkpoint(&checkpoint, &examples)?;
    println!(
        "{} split: {} examples, acc={:.4} precision={:.4} recall={:.4} f1={:.4}",
        args.split,
        metrics.n_examples,
        metrics.accuracy,
        metrics.precision,
        metrics.recall,
        metrics.f1
    );
    if let Some(r) = metrics.acc_per_param {
        println!("acc/param={r:.3e}");
    }
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("eval_metrics.json"), &metrics)?;
    }
    Ok(())
}

fn run_infer(args: InferArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    print_resolved(&checkpoint.config);
    let (class, dist) = infer(&checkpoint, &args.text)?;
    println!("class: {class}");
    let probs: Vec<String> = dist.values().iter().map(|p| format!("{p:.6}")).collect();
    println!("probabilities: [{}]", probs.join(", "));
    Ok(())
}

fn ablate(args: AblateArgs) -> Result<()> {
    let config = resolve_config(&args.hyper)?;
    print_resolved(&config);
    fs::create_dir_all(&args.out_dir)?;

    let corpus = load_corpus(&args.corpus)?;
    let teacher = FileTeacher::load(&args.teacher)?;
    let setup = prepare(corpus, Some(&teacher), &config, None)?;

    let report = ablation_run(&setup, &config)?;
    write_json(&args.out_dir.join("ablation.json"), &report)?;

    println!(
        "loss ablation over {} repeats (test split):",
        report.repeats
    );
    println!("{:<10} {:>8} {:>8}", "mode", "acc", "f1");
    for row in &report.rows {
        println!(
            "{:<10} {:>8.4} {:>8.4}",
            row.mode.to_string(),
            row.mean_accuracy,
            row.mean_f1
        );
    }
    Ok(())
}

fn describe_circuit(args: DescribeArgs) -> Result<()> {
    let config = resolve_config(&args.hyper)?;
    print_resolved(&config);
    let n = config.model.n_qubits;

    println!(
        "encoding layer: RX(z[q]) on qubits 0..{} ({} gates, angles from w*E + b)",
        n - 1,
        n
    );
    for layer in 0..config.model.depth {
        println!("layer {layer}:");
        for q in 0..n {
            println!("  UY q{q}: RY RY RY");
        }
        for p in 0..n - 1 {
            println!("  RZZ (q{p}, q{})", p + 1);
        }
        for q in 0..n {
            println!("  UZ q{q}: RZ RZ RZ");
        }
        for p in 0..n - 1 {
            println!("  CNOT (q{p} -> q{})", p + 1);
        }
        println!(
            "  layer totals: {} UY angles, {} RZZ angle(s), {} UZ angles, {} CNOT(s)",
            3 * n,
            n - 1,
            3 * n,
            n - 1
        );
    }
    println!(
        "readout: Z expectations on qubits {:?} -> softmax over {} classes",
        config.model.readout, config.model.n_classes
    );
    println!(
        "trainable parameters: {} (projection {}, ansatz {})",
        config.model.param_count(),
        n * config.model.embed_dim + n,
        config.model.depth * (7 * n - 1)
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_category() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
        assert_eq!(exit_code(&Error::Input("x".into())), 1);
        assert_eq!(exit_code(&Error::Data("x".into())), 2);
        assert_eq!(exit_code(&Error::Format("x".into())), 2);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
    }

    #[test]
    fn flags_override_config_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "epochs = 4\nseed = 9\nlambda2 = 0.4\n").unwrap();
        let hyper = HyperArgs {
            config: Some(path),
            seed: None,
            qubits: None,
            depth: None,
            embed_dim: None,
            classes: None,
            loss_mode: None,
            lambda2: None,
            lr: None,
            epochs: Some(2),
            batch_size: None,
            repeats: None,
        };
        let config = resolve_config(&hyper).unwrap();
        assert_eq!(config.epochs, 2); // flag wins
        assert_eq!(config.seed, 9); // file wins over default
        assert_eq!(config.loss.lambda2, 0.4);
        assert_eq!(config.batch_size, 8); // default
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "epoch_count = 4\n").unwrap();
        let hyper = HyperArgs {
            config: Some(path),
            seed: None,
            qubits: None,
            depth: None,
            embed_dim: None,
            classes: None,
            loss_mode: None,
            lambda2: None,
            lr: None,
            epochs: None,
            batch_size: None,
            repeats: None,
        };
        let err = resolve_config(&hyper).unwrap_err();
        assert!(err.to_string().contains("epoch_count"));
    }
}
