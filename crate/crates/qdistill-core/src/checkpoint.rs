//! Single-file checkpoint format.
//!
//! Layout: 4-byte magic `QDCK`, a little-endian u32 format version, a
//! little-endian u64 header length, a JSON header (configuration, vocab,
//! embedding source, epoch, RNG position, timing), then the binary
//! payload: trainable parameters and both Adam moment vectors as
//! little-endian f64, followed by the Adam step counter as u64. The
//! payload round-trips bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingTable, Vocabulary};
use crate::error::{Error, Result};
use crate::model::StudentParams;
use crate::optim::AdamState;
use crate::train::TrainConfig;

const MAGIC: &[u8; 4] = b"QDCK";
const VERSION: u32 = 1;

/// Where the frozen embedding table comes from: regenerated from a seed,
/// or stored inline when the run used a user-supplied embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbeddingSpec {
    Seed { seed: u64 },
    Inline { vectors: Vec<Vec<f64>> },
}

impl EmbeddingSpec {
    pub fn table(&self, vocab_size: usize, dim: usize) -> Result<EmbeddingTable> {
        match self {
            EmbeddingSpec::Seed { seed } => {
                Ok(EmbeddingTable::deterministic(*seed, vocab_size, dim))
            }
            EmbeddingSpec::Inline { vectors } => EmbeddingTable::from_vectors(vectors.clone()),
        }
    }
}

/// A trained (or in-progress) student model with everything needed to
/// resume or run inference: config, vocabulary, embedding source,
/// parameters and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub embedding: EmbeddingSpec,
    /// Epoch index this snapshot was taken after.
    pub epoch: usize,
    /// Shuffle-RNG stream position at snapshot time.
    pub rng_word_pos: u128,
    /// Wall-clock distillation seconds accumulated so far.
    pub distill_seconds: f64,
    pub params: StudentParams,
    pub adam: AdamState,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    vocab: Vocabulary,
    embedding: EmbeddingSpec,
    epoch: usize,
    rng_word_pos_hi: u64,
    rng_word_pos_lo: u64,
    distill_seconds: f64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    param_len: usize,
}

fn write_f64s(out: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(input: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = [0u8; 8];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("checkpoint payload truncated".into()))?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

impl Checkpoint {
    pub fn embedding_table(&self) -> Result<EmbeddingTable> {
        self.embedding
            .table(self.vocab.len(), self.config.model.embed_dim)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let flat = self.params.flatten();
        let header = Header {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            embedding: self.embedding.clone(),
            epoch: self.epoch,
            rng_word_pos_hi: (self.rng_word_pos >> 64) as u64,
            rng_word_pos_lo: self.rng_word_pos as u64,
            distill_seconds: self.distill_seconds,
            lr: self.adam.lr,
            beta1: self.adam.beta1,
            beta2: self.adam.beta2,
            epsilon: self.adam.epsilon,
            param_len: flat.len(),
        };
        let header_bytes = serde_json::to_vec(&header)
            .map_err(|e| Error::Format(format!("cannot encode checkpoint header: {e}")))?;

        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        out.write_all(&header_bytes)?;
        write_f64s(&mut out, &flat)?;
        write_f64s(&mut out, &self.adam.first_moment)?;
        write_f64s(&mut out, &self.adam.second_moment)?;
        out.write_all(&self.adam.step.to_le_bytes())?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut input = BufReader::new(
            File::open(path)
                .map_err(|e| Error::Data(format!("cannot open checkpoint {path:?}: {e}")))?,
        );
        let mut magic = [0u8; 4];
        input
            .read_exact(&mut magic)
            .map_err(|_| Error::Format("file too short for a checkpoint".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file (bad magic)".into()));
        }
        let mut u32buf = [0u8; 4];
        input
            .read_exact(&mut u32buf)
            .map_err(|_| Error::Format("checkpoint header truncated".into()))?;
        let version = u32::from_le_bytes(u32buf);
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}, expected {VERSION}"
            )));
        }
        let mut u64buf = [0u8; 8];
        input
            .read_exact(&mut u64buf)
            .map_err(|_| Error::Format("checkpoint header truncated".into()))?;
        let header_len = u64::from_le_bytes(u64buf) as usize;
        let mut header_bytes = vec![0u8; header_len];
        input
            .read_exact(&mut header_bytes)
            .map_err(|_| Error::Format("checkpoint header truncated".into()))?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::Format(format!("cannot decode checkpoint header: {e}")))?;

        header.config.validate()?;
        if header.param_len != header.config.model.param_count() {
            return Err(Error::Format(format!(
                "checkpoint stores {} parameters but its config requires {}",
                header.param_len,
                header.config.model.param_count()
            )));
        }

        let flat = read_f64s(&mut input, header.param_len)?;
        let first = read_f64s(&mut input, header.param_len)?;
        let second = read_f64s(&mut input, header.param_len)?;
        input
            .read_exact(&mut u64buf)
            .map_err(|_| Error::Format("checkpoint payload truncated".into()))?;
        let step = u64::from_le_bytes(u64buf);
        let mut trailing = Vec::new();
        input.read_to_end(&mut trailing)?;
        if !trailing.is_empty() {
            return Err(Error::Format(format!(
                "{} unexpected trailing bytes in checkpoint",
                trailing.len()
            )));
        }

        let params = StudentParams::from_flat(&header.config.model, &flat)?;
        let adam = AdamState {
            step,
            lr: header.lr,
            beta1: header.beta1,
            beta2: header.beta2,
            epsilon: header.epsilon,
            first_moment: first,
            second_moment: second,
        };
        Ok(Self {
            config: header.config,
            vocab: header.vocab,
            embedding: header.embedding,
            epoch: header.epoch,
            rng_word_pos: ((header.rng_word_pos_hi as u128) << 64) | header.rng_word_pos_lo as u128,
            distill_seconds: header.distill_seconds,
            params,
            adam,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossSpec;
    use crate::model::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_checkpoint() -> Checkpoint {
        let model = ModelConfig::new(3, 4, 2, 2).unwrap();
        let config = TrainConfig::new(model, LossSpec::default(), 42);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = StudentParams::init(&config.model, &mut rng);
        let mut adam = AdamState::new(config.model.param_count(), config.lr);
        adam.step = 17;
        adam.first_moment[3] = 0.1234567891234567;
        adam.second_moment[5] = 1e-17;
        Checkpoint {
            config,
            vocab: Vocabulary::build(["alpha beta", "gamma"]),
            embedding: EmbeddingSpec::Seed { seed: 42 },
            epoch: 4,
            rng_word_pos: (7u128 << 64) | 99,
            // A value whose shortest decimal form needs full 17-digit
            // precision to parse back to the same bits.
            distill_seconds: 0.1 + 0.2,
            params,
            adam,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.qdck");
        let ck = sample_checkpoint();
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(ck, back);

        // Re-saving the loaded checkpoint reproduces the same bytes.
        let path2 = dir.path().join("model2.qdck");
        back.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.qdck");
        let ck = sample_checkpoint();
        ck.save(&path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Format(_))));

        ck.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Format(_))));
    }

    #[test]
    fn param_count_matches_serialized_length() {
        let ck = sample_checkpoint();
        assert_eq!(ck.params.count(), ck.config.model.param_count());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.qdck");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.params.flatten().len(), back.config.model.param_count());
    }
}
