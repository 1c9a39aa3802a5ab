//! Complexity guard for the adjoint sweep. Lives alone in its own test
//! binary so the process-wide gate counter sees no other traffic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qdistill_core::sim::applied_gate_count;
use qdistill_core::{
    attach_teacher, loss_gradient, make_synthetic_corpus, split_corpus, EmbeddingTable, LossSpec,
    ModelConfig, StudentParams, SyntheticCorpusConfig, SyntheticTeacher, Vocabulary,
};

#[test]
fn adjoint_costs_at_most_four_applications_per_gate() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    for (n, depth) in [(2, 1), (3, 2), (4, 3), (5, 2)] {
        let config = ModelConfig::new(n, 4, depth, 2).unwrap();
        let params = StudentParams::init(&config, &mut rng);
        let table = EmbeddingTable::deterministic(5, 300, 4);

        let corpus = make_synthetic_corpus(&SyntheticCorpusConfig::new(10, 2, 77)).unwrap();
        let mut split = split_corpus(corpus, 77).unwrap();
        let vocab = Vocabulary::build(split.train.iter().map(|e| e.text.as_str()));
        split.tokenize_with(&vocab);
        let teacher = SyntheticTeacher::new(1, 2, 0.9, 0.1).unwrap();
        attach_teacher(&mut split, &teacher).unwrap();
        let batch = &split.train[..1];

        // Gates per circuit: n encoding RX plus (6n rotations + (n-1) RZZ
        // + (n-1) CNOT) per layer.
        let gates = n + depth * (6 * n + 2 * (n - 1));

        let before = applied_gate_count();
        loss_gradient(batch, &table, &params, &config, &LossSpec::default()).unwrap();
        let used = applied_gate_count() - before;

        let bound = (4 * gates + n + 4) as u64;
        assert!(
            used <= bound,
            "adjoint used {used} gate applications for {gates} gates (bound {bound})"
        );
    }
}
