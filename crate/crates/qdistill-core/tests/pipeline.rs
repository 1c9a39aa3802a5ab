//! End-to-end distillation on the synthetic reference task.

use qdistill_core::data::UNK_ID;
use qdistill_core::{
    make_synthetic_corpus, prepare, train_run, LossSpec, ModelConfig, SyntheticCorpusConfig,
    SyntheticTeacher, TrainConfig,
};

fn reference_setup(seed: u64) -> (qdistill_core::TrainSetup, TrainConfig) {
    let corpus_cfg = SyntheticCorpusConfig::new(400, 2, seed);
    let corpus = make_synthetic_corpus(&corpus_cfg).unwrap();
    let teacher = SyntheticTeacher::new(seed, 2, 0.95, 0.05).unwrap();
    let model = ModelConfig::new(4, 16, 2, 2).unwrap();
    let config = TrainConfig::new(model, LossSpec::default(), seed);
    let setup = prepare(corpus, Some(&teacher), &config, None).unwrap();
    (setup, config)
}

#[test]
fn reference_config_learns_the_separable_task() {
    let (setup, config) = reference_setup(1);
    let (ck, report) = train_run(&setup, &config).unwrap();
    assert!(
        report.metrics.best_val_accuracy >= 0.9,
        "validation accuracy {} below 0.9",
        report.metrics.best_val_accuracy
    );
    assert_eq!(ck.params.count(), config.model.param_count());
    let first = report.metrics.epochs.first().unwrap().train_loss;
    let last_best = report.metrics.epochs[report.metrics.best_epoch].train_loss;
    assert!(last_best < first);
}

#[test]
fn vocabulary_never_leaks_past_the_training_split() {
    let (setup, _) = reference_setup(3);
    // Every non-unknown token id in validation/test must name a word that
    // occurs in some training text.
    let train_words: std::collections::HashSet<String> = setup
        .corpus
        .train
        .iter()
        .flat_map(|e| qdistill_core::data::word_split(&e.text))
        .collect();
    for ex in setup
        .corpus
        .validation
        .iter()
        .chain(setup.corpus.test.iter())
    {
        for &t in &ex.tokens {
            if t != UNK_ID {
                let word = setup.vocab.token(t).unwrap();
                assert!(
                    train_words.contains(word),
                    "token '{word}' in '{}' is absent from the training split",
                    ex.id
                );
            }
        }
    }
}

#[test]
fn prepared_pipeline_is_deterministic_end_to_end() {
    let (setup_a, config) = reference_setup(5);
    let (setup_b, _) = reference_setup(5);
    assert_eq!(setup_a.vocab, setup_b.vocab);
    assert_eq!(setup_a.table, setup_b.table);

    let mut short = config.clone();
    short.epochs = 2;
    let (ck_a, rep_a) = train_run(&setup_a, &short).unwrap();
    let (ck_b, rep_b) = train_run(&setup_b, &short).unwrap();
    assert_eq!(ck_a.params, ck_b.params);
    assert_eq!(
        serde_json::to_string(&rep_a.metrics).unwrap(),
        serde_json::to_string(&rep_b.metrics).unwrap()
    );
}
