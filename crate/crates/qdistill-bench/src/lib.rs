//! Shared fixtures for the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdistill_core::{
    attach_teacher, make_synthetic_corpus, split_corpus, EmbeddingTable, LabeledExample, LossSpec,
    ModelConfig, StudentParams, SyntheticCorpusConfig, SyntheticTeacher, Vocabulary,
};

/// Everything a gradient or forward benchmark needs for one batch.
pub struct GradFixture {
    pub batch: Vec<LabeledExample>,
    pub table: EmbeddingTable,
    pub params: StudentParams,
    pub config: ModelConfig,
    pub spec: LossSpec,
}

/// Tokenized, teacher-attached batch plus initialized parameters for a
/// (qubits, depth, embed_dim) student.
pub fn gradient_fixture(
    n_qubits: usize,
    depth: usize,
    embed_dim: usize,
    batch: usize,
) -> GradFixture {
    let config = ModelConfig::new(n_qubits, embed_dim, depth, 2).expect("valid config");
    let mut rng = ChaCha8Rng::seed_from_u64(0xBE5C);
    let params = StudentParams::init(&config, &mut rng);

    let corpus =
        make_synthetic_corpus(&SyntheticCorpusConfig::new(batch.max(2) * 5, 2, 3)).expect("corpus");
    let mut split = split_corpus(corpus, 3).expect("split");
    let vocab = Vocabulary::build(split.train.iter().map(|e| e.text.as_str()));
    split.tokenize_with(&vocab);
    let teacher = SyntheticTeacher::new(3, 2, 0.95, 0.05).expect("teacher");
    attach_teacher(&mut split, &teacher).expect("attach");
    split.train.truncate(batch);

    let table = EmbeddingTable::deterministic(11, vocab.len(), embed_dim);
    GradFixture {
        batch: split.train,
        table,
        params,
        config,
        spec: LossSpec::default(),
    }
}

/// Deterministic angle stream for gate benchmarks.
pub fn angle_stream(count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11);
    (0..count).map(|_| rng.gen_range(-3.0..3.0)).collect()
}
