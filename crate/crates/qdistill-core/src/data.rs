//! Corpus ingestion and preparation: tokenization over a train-split
//! vocabulary, deterministic 6:2:2 splitting, teacher-distribution
//! attachment, the frozen embedding table, and synthetic corpus/teacher
//! generators for desk-scale experiments.
//!
//! File formats are line-delimited JSON. A corpus row is
//! `{"id": "...", "text": "...", "label": 0}`; a teacher row is
//! `{"id": "...", "probs": [..]}` and every corpus id must appear exactly
//! once in a teacher file.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::loss::ProbDist;

/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: u32 = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// One classified text with its tokenized form and, once attached, the
/// teacher's class distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub tokens: Vec<u32>,
    pub label: usize,
    pub teacher: Option<ProbDist>,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: usize) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            tokens: Vec::new(),
            label,
            teacher: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CorpusRecord {
    id: String,
    text: String,
    label: usize,
}

#[derive(Serialize, Deserialize)]
struct TeacherRecord {
    id: String,
    probs: Vec<f64>,
}

/// SplitMix64; the stable hash behind every deterministic table in the
/// library (embeddings, per-example teacher draws, derived seeds).
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub(crate) fn hash_str(s: &str) -> u64 {
    // FNV-1a.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn map_unit(h: u64) -> f64 {
    // 53 high bits to [0, 1).
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Lowercased alphanumeric runs of `text`, in order.
pub fn word_split(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Token-to-id mapping built from the training split only. Id 0 is the
/// reserved unknown token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut tokens = vec![UNK_TOKEN.to_owned()];
        let mut index = HashMap::new();
        index.insert(UNK_TOKEN.to_owned(), UNK_ID);
        for text in texts {
            for word in word_split(text) {
                if !index.contains_key(&word) {
                    index.insert(word.clone(), tokens.len() as u32);
                    tokens.push(word);
                }
            }
        }
        Self { tokens, index }
    }

    /// Token ids for `text`; unknown words map to [`UNK_ID`] and an empty
    /// result is replaced by a single unknown token.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let ids: Vec<u32> = word_split(text)
            .iter()
            .map(|w| self.index.get(w).copied().unwrap_or(UNK_ID))
            .collect();
        if ids.is_empty() {
            vec![UNK_ID]
        } else {
            ids
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

/// Frozen token embeddings, indexed by token id. The table is not part of
/// the trainable parameters; it only maps ids to fixed vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    /// Deterministic table: entry (t, d) is uniform in [-1, 1), a pure
    /// function of (seed, token id, dimension index).
    pub fn deterministic(seed: u64, vocab_size: usize, dim: usize) -> Self {
        let vectors = (0..vocab_size)
            .map(|t| {
                (0..dim)
                    .map(|d| {
                        let h = splitmix64(splitmix64(splitmix64(seed) ^ t as u64) ^ d as u64);
                        2.0 * map_unit(h) - 1.0
                    })
                    .collect()
            })
            .collect();
        Self { dim, vectors }
    }

    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or_else(|| {
            Error::Config("embedding table must contain at least one vector".into())
        })?;
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Config(
                "embedding vectors must all share one dimension".into(),
            ));
        }
        Ok(Self { dim, vectors })
    }

    /// Replace rows of a deterministic table with vectors from a JSONL
    /// file of `{"token_id": .., "vector": [..]}` records.
    pub fn load_overrides(&mut self, path: &Path) -> Result<()> {
        #[derive(Deserialize)]
        struct Row {
            token_id: u32,
            vector: Vec<f64>,
        }
        let file = File::open(path)
            .map_err(|e| Error::Data(format!("cannot open embedding file {path:?}: {e}")))?;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(&line).map_err(|e| {
                Error::Data(format!("embedding file {path:?} line {}: {e}", lineno + 1))
            })?;
            if row.vector.len() != self.dim {
                return Err(Error::Config(format!(
                    "embedding override for token {} has dimension {}, table uses {}",
                    row.token_id,
                    row.vector.len(),
                    self.dim
                )));
            }
            let idx = row.token_id as usize;
            if idx >= self.vectors.len() {
                return Err(Error::Data(format!(
                    "embedding override references token id {} beyond vocabulary size {}",
                    row.token_id,
                    self.vectors.len()
                )));
            }
            self.vectors[idx] = row.vector;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, token: u32) -> &[f64] {
        &self.vectors[token as usize]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Mean of the token vectors: the pooled sentence embedding fed to the
    /// projection layer.
    pub fn pooled(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::Input("cannot embed an empty token sequence".into()));
        }
        let mut mean = vec![0.0; self.dim];
        for &t in tokens {
            let v = self.vectors.get(t as usize).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "token id {t} outside embedding table of size {}",
                    self.vectors.len()
                ))
            })?;
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        let n = tokens.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }
}

/// Train/validation/test partition produced by [`split_corpus`].
#[derive(Debug, Clone)]
pub struct SplitCorpus {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub seed: u64,
}

impl SplitCorpus {
    pub fn all(&self) -> impl Iterator<Item = &LabeledExample> {
        self.train
            .iter()
            .chain(self.validation.iter())
            .chain(self.test.iter())
    }

    pub fn all_mut(&mut self) -> impl Iterator<Item = &mut LabeledExample> {
        self.train
            .iter_mut()
            .chain(self.validation.iter_mut())
            .chain(self.test.iter_mut())
    }

    /// Highest label + 1 across all splits.
    pub fn n_classes(&self) -> usize {
        self.all().map(|e| e.label + 1).max().unwrap_or(0)
    }

    /// Tokenize every example against `vocab` (normally built from the
    /// training split only).
    pub fn tokenize_with(&mut self, vocab: &Vocabulary) {
        for ex in self.all_mut() {
            ex.tokens = vocab.tokenize(&ex.text);
        }
    }
}

/// 6:2:2 sizes by largest-remainder rounding. Leftover units go to the
/// splits with the largest fractional share, ties resolved train first.
fn split_sizes(n: usize) -> [usize; 3] {
    let ideal = [0.6 * n as f64, 0.2 * n as f64, 0.2 * n as f64];
    let mut sizes = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for i in 0..3 {
        sizes[i] = ideal[i].floor() as usize;
        frac[i] = ideal[i] - ideal[i].floor();
    }
    let mut rem = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap().then(a.cmp(&b)));
    for &i in &order {
        if rem == 0 {
            break;
        }
        sizes[i] += 1;
        rem -= 1;
    }
    sizes
}

/// Deterministic stratified split in a 6:2:2 ratio.
///
/// Examples are shuffled within each class by a seeded permutation, then
/// interleaved across classes before cutting, so a class-balanced corpus
/// stays balanced (within one example) inside every split.
pub fn split_corpus(examples: Vec<LabeledExample>, seed: u64) -> Result<SplitCorpus> {
    if examples.len() < 5 {
        return Err(Error::Input(format!(
            "need at least 5 examples to split 6:2:2, got {}",
            examples.len()
        )));
    }
    let n = examples.len();
    let [n_train, n_val, _] = split_sizes(n);

    let mut by_class: BTreeMap<usize, Vec<LabeledExample>> = BTreeMap::new();
    for ex in examples {
        by_class.entry(ex.label).or_default().push(ex);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
    }

    let mut queues: Vec<Vec<LabeledExample>> = by_class.into_values().collect();
    queues.iter_mut().for_each(|q| q.reverse());
    let mut interleaved = Vec::with_capacity(n);
    while interleaved.len() < n {
        for q in queues.iter_mut() {
            if let Some(ex) = q.pop() {
                interleaved.push(ex);
            }
        }
    }

    let test = interleaved.split_off(n_train + n_val);
    let validation = interleaved.split_off(n_train);
    Ok(SplitCorpus {
        train: interleaved,
        validation,
        test,
        seed,
    })
}

/// Source of per-example teacher class distributions.
pub trait TeacherProvider {
    fn distribution(&self, example: &LabeledExample) -> Result<ProbDist>;
}

/// Teacher distributions read from a JSONL file.
pub struct FileTeacher {
    map: HashMap<String, ProbDist>,
}

impl FileTeacher {
    /// Rows whose probabilities sum within 1e-6 of 1 are renormalized;
    /// larger deviations are data errors.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::Data(format!("cannot open teacher file {path:?}: {e}")))?;
        let mut map = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TeacherRecord = serde_json::from_str(&line).map_err(|e| {
                Error::Data(format!("teacher file {path:?} line {}: {e}", lineno + 1))
            })?;
            let sum: f64 = rec.probs.iter().sum();
            if !sum.is_finite() || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Data(format!(
                    "teacher probabilities for id '{}' sum to {sum}, beyond the 1e-6 tolerance",
                    rec.id
                )));
            }
            let normalized: Vec<f64> = rec.probs.iter().map(|p| p / sum).collect();
            let dist = ProbDist::new(normalized).map_err(|e| {
                Error::Data(format!("teacher probabilities for id '{}': {e}", rec.id))
            })?;
            if map.insert(rec.id.clone(), dist).is_some() {
                return Err(Error::Data(format!(
                    "teacher file lists id '{}' more than once",
                    rec.id
                )));
            }
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl TeacherProvider for FileTeacher {
    fn distribution(&self, example: &LabeledExample) -> Result<ProbDist> {
        self.map
            .get(&example.id)
            .cloned()
            .ok_or_else(|| Error::Data(format!("no teacher distribution for id '{}'", example.id)))
    }
}

/// Deterministic synthetic teacher: a seeded noisy one-hot. With
/// probability `accuracy` the peak sits on the true label, otherwise on a
/// uniformly drawn wrong class; `smoothing` mass is spread over the rest.
pub struct SyntheticTeacher {
    pub seed: u64,
    pub n_classes: usize,
    pub accuracy: f64,
    pub smoothing: f64,
}

impl SyntheticTeacher {
    pub fn new(seed: u64, n_classes: usize, accuracy: f64, smoothing: f64) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Config(
                "synthetic teacher needs at least 2 classes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&accuracy) || !(0.0..1.0).contains(&smoothing) {
            return Err(Error::Config(format!(
                "teacher accuracy must be in [0,1] and smoothing in [0,1), got {accuracy} / {smoothing}"
            )));
        }
        Ok(Self {
            seed,
            n_classes,
            accuracy,
            smoothing,
        })
    }
}

impl TeacherProvider for SyntheticTeacher {
    fn distribution(&self, example: &LabeledExample) -> Result<ProbDist> {
        if example.label >= self.n_classes {
            return Err(Error::Data(format!(
                "example '{}' has label {} but the teacher models {} classes",
                example.id, example.label, self.n_classes
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed) ^ hash_str(&example.id));
        let correct = rng.gen::<f64>() < self.accuracy;
        let peak = if correct {
            example.label
        } else {
            let w = rng.gen_range(0..self.n_classes - 1);
            if w >= example.label {
                w + 1
            } else {
                w
            }
        };
        let off = self.smoothing / (self.n_classes - 1) as f64;
        let probs = (0..self.n_classes)
            .map(|c| if c == peak { 1.0 - self.smoothing } else { off })
            .collect();
        ProbDist::new(probs)
    }
}

/// Wrapper that counts provider reads; used by the teacher-freeze audit.
pub struct CountingTeacher<T> {
    inner: T,
    reads: AtomicUsize,
}

impl<T> CountingTeacher<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            reads: AtomicUsize::new(0),
        }
    }

    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::Relaxed)
    }
}

impl<T: TeacherProvider> TeacherProvider for CountingTeacher<T> {
    fn distribution(&self, example: &LabeledExample) -> Result<ProbDist> {
        self.reads.fetch_add(1, Ordering::Relaxed);
        self.inner.distribution(example)
    }
}

/// Attach a teacher distribution to every example of every split.
///
/// Labels and texts are never modified. If any ids are missing from the
/// provider the error lists all of them.
pub fn attach_teacher(corpus: &mut SplitCorpus, provider: &dyn TeacherProvider) -> Result<()> {
    let mut missing = Vec::new();
    let mut fetched = Vec::new();
    for ex in corpus.all() {
        match provider.distribution(ex) {
            Ok(dist) => fetched.push(Some(dist)),
            Err(Error::Data(_)) => {
                missing.push(ex.id.clone());
                fetched.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "missing teacher distributions for {} example(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    for (ex, dist) in corpus.all_mut().zip(fetched) {
        ex.teacher = dist;
    }
    Ok(())
}

/// Controls for the synthetic corpus generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticCorpusConfig {
    pub n_examples: usize,
    pub n_classes: usize,
    pub seed: u64,
    /// Probability that a token is drawn from the class-shared pool
    /// instead of the class-specific block. 0 makes classes disjoint.
    pub vocab_overlap: f64,
    pub words_per_class: usize,
    pub shared_words: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
}

impl SyntheticCorpusConfig {
    pub fn new(n_examples: usize, n_classes: usize, seed: u64) -> Self {
        Self {
            n_examples,
            n_classes,
            seed,
            vocab_overlap: 0.0,
            words_per_class: 12,
            shared_words: 12,
            min_tokens: 8,
            max_tokens: 16,
        }
    }
}

/// Generate a class-balanced synthetic corpus. Each class owns a block of
/// vocabulary; `vocab_overlap` controls how much probability mass falls on
/// a pool shared by all classes, so separability is tunable.
pub fn make_synthetic_corpus(config: &SyntheticCorpusConfig) -> Result<Vec<LabeledExample>> {
    if config.n_classes < 2 {
        return Err(Error::Config(
            "synthetic corpus needs at least 2 classes".into(),
        ));
    }
    if config.n_examples < config.n_classes {
        return Err(Error::Input(format!(
            "need at least one example per class: {} examples for {} classes",
            config.n_examples, config.n_classes
        )));
    }
    if !(0.0..=1.0).contains(&config.vocab_overlap) {
        return Err(Error::Config(format!(
            "vocab_overlap must lie in [0, 1], got {}",
            config.vocab_overlap
        )));
    }
    if config.min_tokens == 0 || config.min_tokens > config.max_tokens {
        return Err(Error::Config(format!(
            "token length range {}..={} is invalid",
            config.min_tokens, config.max_tokens
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(config.seed));
    let mut examples = Vec::with_capacity(config.n_examples);
    for i in 0..config.n_examples {
        let class = i % config.n_classes;
        let len = rng.gen_range(config.min_tokens..=config.max_tokens);
        let words: Vec<String> = (0..len)
            .map(|_| {
                if config.vocab_overlap > 0.0 && rng.gen::<f64>() < config.vocab_overlap {
                    format!("shared{}", rng.gen_range(0..config.shared_words))
                } else {
                    format!("c{}w{}", class, rng.gen_range(0..config.words_per_class))
                }
            })
            .collect();
        examples.push(LabeledExample::new(
            format!("ex{i:05}"),
            words.join(" "),
            class,
        ));
    }
    Ok(examples)
}

/// Read a JSONL corpus. Ids must be unique.
pub fn load_corpus(path: &Path) -> Result<Vec<LabeledExample>> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open corpus file {path:?}: {e}")))?;
    let mut seen = HashSet::new();
    let mut examples = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("corpus file {path:?} line {}: {e}", lineno + 1)))?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Data(format!(
                "corpus lists id '{}' more than once",
                rec.id
            )));
        }
        examples.push(LabeledExample::new(rec.id, rec.text, rec.label));
    }
    if examples.is_empty() {
        return Err(Error::Data(format!(
            "corpus file {path:?} contains no examples"
        )));
    }
    Ok(examples)
}

pub fn save_corpus(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for ex in examples {
        let rec = CorpusRecord {
            id: ex.id.clone(),
            text: ex.text.clone(),
            label: ex.label,
        };
        serde_json::to_writer(&mut out, &rec)
            .map_err(|e| Error::Data(format!("cannot encode corpus record: {e}")))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Evaluate `provider` on every example and write the teacher file.
pub fn save_teacher(
    path: &Path,
    examples: &[LabeledExample],
    provider: &dyn TeacherProvider,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for ex in examples {
        let dist = provider.distribution(ex)?;
        let rec = TeacherRecord {
            id: ex.id.clone(),
            probs: dist.into(),
        };
        serde_json::to_writer(&mut out, &rec)
            .map_err(|e| Error::Data(format!("cannot encode teacher record: {e}")))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_of(n: usize, classes: usize) -> Vec<LabeledExample> {
        (0..n)
            .map(|i| LabeledExample::new(format!("e{i}"), format!("w{i} w{}", i % 7), i % classes))
            .collect()
    }

    #[test]
    fn word_split_and_tokenize() {
        assert_eq!(word_split("Hello, world"), vec!["hello", "world"]);
        let vocab = Vocabulary::build(["hello world", "hello again"]);
        assert_eq!(
            vocab.tokenize("Hello, world"),
            vec![vocab.id("hello").unwrap(), vocab.id("world").unwrap()]
        );
        assert_eq!(vocab.tokenize(""), vec![UNK_ID]);
        assert_eq!(vocab.tokenize("???"), vec![UNK_ID]);
        assert_eq!(vocab.tokenize("unseen"), vec![UNK_ID]);
        assert_eq!(vocab.tokenize("abc"), vocab.tokenize("abc"));
    }

    #[test]
    fn split_sizes_follow_largest_remainder() {
        assert_eq!(split_sizes(10), [6, 2, 2]);
        assert_eq!(split_sizes(11), [7, 2, 2]);
        assert_eq!(split_sizes(5), [3, 1, 1]);
        for n in 5..200 {
            let s = split_sizes(n);
            assert_eq!(s.iter().sum::<usize>(), n);
            let ideal = [0.6 * n as f64, 0.2 * n as f64, 0.2 * n as f64];
            for i in 0..3 {
                assert!(
                    (s[i] as f64 - ideal[i]).abs() <= 1.0,
                    "split sizes {s:?} stray from ideal {ideal:?} at n={n}"
                );
            }
        }
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let a = split_corpus(corpus_of(37, 3), 9).unwrap();
        let b = split_corpus(corpus_of(37, 3), 9).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.validation, b.validation);
        assert_eq!(a.test, b.test);

        let mut ids: Vec<&str> = a.all().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 37);

        let c = split_corpus(corpus_of(37, 3), 10).unwrap();
        assert_ne!(
            a.train.iter().map(|e| &e.id).collect::<Vec<_>>(),
            c.train.iter().map(|e| &e.id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn balanced_corpus_stays_balanced_per_split() {
        let split = split_corpus(corpus_of(40, 4), 3).unwrap();
        for part in [&split.train, &split.validation, &split.test] {
            let mut counts = [0usize; 4];
            for ex in part.iter() {
                counts[ex.label] += 1;
            }
            let ideal = part.len() as f64 / 4.0;
            for c in counts {
                assert!(
                    (c as f64 - ideal).abs() <= 1.0,
                    "{counts:?} vs ideal {ideal}"
                );
            }
        }
    }

    #[test]
    fn split_rejects_tiny_corpora() {
        assert!(matches!(
            split_corpus(corpus_of(4, 2), 0),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn synthetic_corpus_is_balanced_and_deterministic() {
        let cfg = SyntheticCorpusConfig::new(100, 2, 11);
        let a = make_synthetic_corpus(&cfg).unwrap();
        let b = make_synthetic_corpus(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|e| e.label == 0).count(), 50);
        assert_eq!(a.iter().filter(|e| e.label == 1).count(), 50);
    }

    #[test]
    fn disjoint_synthetic_corpus_is_unigram_separable() {
        // Independent oracle: per-class token counts, argmax vote.
        let cfg = SyntheticCorpusConfig::new(120, 3, 5);
        let corpus = make_synthetic_corpus(&cfg).unwrap();
        let mut counts: HashMap<String, Vec<usize>> = HashMap::new();
        for ex in &corpus {
            for w in word_split(&ex.text) {
                counts.entry(w).or_insert_with(|| vec![0; 3])[ex.label] += 1;
            }
        }
        let correct = corpus
            .iter()
            .filter(|ex| {
                let mut votes = [0usize; 3];
                for w in word_split(&ex.text) {
                    for (c, v) in counts[&w].iter().enumerate() {
                        votes[c] += v;
                    }
                }
                let pred = votes
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .unwrap()
                    .0;
                pred == ex.label
            })
            .count();
        assert_eq!(correct, corpus.len());
    }

    #[test]
    fn synthetic_teacher_modes() {
        let exact = SyntheticTeacher::new(3, 2, 1.0, 0.0).unwrap();
        let ex = LabeledExample::new("a", "text", 1);
        let dist = exact.distribution(&ex).unwrap();
        assert_eq!(dist.values(), &[0.0, 1.0]);

        let noisy = SyntheticTeacher::new(3, 4, 0.5, 0.1).unwrap();
        let d1 = noisy.distribution(&ex).unwrap();
        let d2 = noisy.distribution(&ex).unwrap();
        assert_eq!(d1, d2);
        let hits = (0..400)
            .filter(|i| {
                let e = LabeledExample::new(format!("id{i}"), "t", 2);
                noisy.distribution(&e).unwrap().argmax() == 2
            })
            .count();
        assert!(
            (130..=270).contains(&hits),
            "teacher accuracy drifted: {hits}/400"
        );
    }

    #[test]
    fn attach_teacher_covers_all_and_lists_missing() {
        let mut split = split_corpus(corpus_of(10, 2), 1).unwrap();
        let provider = SyntheticTeacher::new(7, 2, 0.9, 0.05).unwrap();
        attach_teacher(&mut split, &provider).unwrap();
        assert!(split.all().all(|e| e.teacher.is_some()));
        // Labels and texts untouched.
        let again = split_corpus(corpus_of(10, 2), 1).unwrap();
        for (a, b) in split.all().zip(again.all()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.text, b.text);
            assert_eq!(a.label, b.label);
        }

        struct Empty;
        impl TeacherProvider for Empty {
            fn distribution(&self, ex: &LabeledExample) -> Result<ProbDist> {
                Err(Error::Data(format!("no id '{}'", ex.id)))
            }
        }
        let err = attach_teacher(&mut split, &Empty).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("10 example(s)"), "unexpected message: {msg}");
    }

    #[test]
    fn teacher_file_roundtrip_and_renormalization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("teacher.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"a\",\"probs\":[0.7,0.3]}\n{\"id\":\"b\",\"probs\":[0.5,0.499999]}\n",
        )
        .unwrap();
        let teacher = FileTeacher::load(&path).unwrap();
        let ex = LabeledExample::new("a", "", 0);
        assert_eq!(teacher.distribution(&ex).unwrap().values(), &[0.7, 0.3]);
        let ex = LabeledExample::new("b", "", 0);
        let d = teacher.distribution(&ex).unwrap();
        assert!((d.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        std::fs::write(&path, "{\"id\":\"a\",\"probs\":[0.7,0.2]}\n").unwrap();
        assert!(matches!(FileTeacher::load(&path), Err(Error::Data(_))));
    }

    #[test]
    fn embedding_table_is_deterministic_and_bounded() {
        let a = EmbeddingTable::deterministic(5, 30, 8);
        let b = EmbeddingTable::deterministic(5, 30, 8);
        assert_eq!(a, b);
        let c = EmbeddingTable::deterministic(6, 30, 8);
        assert_ne!(a, c);
        for v in a.vectors() {
            assert!(v.iter().all(|x| (-1.0..1.0).contains(x)));
        }
        let pooled = a.pooled(&[0, 1, 2]).unwrap();
        assert_eq!(pooled.len(), 8);
        assert!(a.pooled(&[]).is_err());
    }

    #[test]
    fn corpus_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let examples = corpus_of(12, 3);
        save_corpus(&path, &examples).unwrap();
        let loaded = load_corpus(&path).unwrap();
        assert_eq!(loaded, examples);
    }
}
