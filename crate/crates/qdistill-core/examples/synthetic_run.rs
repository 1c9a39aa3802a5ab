//! Minimal library walkthrough: generate a synthetic task, distill, and
//! run standalone inference.

use qdistill_core::{
    infer, make_synthetic_corpus, prepare, train_run, LossSpec, ModelConfig, SyntheticCorpusConfig,
    SyntheticTeacher, TrainConfig,
};

fn main() -> qdistill_core::Result<()> {
    let corpus = make_synthetic_corpus(&SyntheticCorpusConfig::new(400, 2, 7))?;
    let teacher = SyntheticTeacher::new(7, 2, 0.95, 0.05)?;
    let config = TrainConfig::new(ModelConfig::new(4, 16, 2, 2)?, LossSpec::default(), 7);
    let setup = prepare(corpus, Some(&teacher), &config, None)?;
    let (checkpoint, report) = train_run(&setup, &config)?;
    println!("test accuracy {:.4}", report.metrics.test.accuracy);
    let (class, _dist) = infer(&checkpoint, "fresh text")?;
    println!("predicted class {class}");
    Ok(())
}
