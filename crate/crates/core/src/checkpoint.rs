//! Binary checkpoints for trained models.
//!
//! Layout (little-endian): magic `KGJC`, `u32` format version, `u32` header
//! length, a JSON header, then each tensor listed in the header as raw `f32`
//! values in row-major order. The header carries the vocabulary names so a
//! checkpoint can be evaluated without the original training files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::joint::{JointConfig, JointModel};
use crate::numeric::{Matrix, SgdConfig};
use crate::structural::StructuralModel;

const MAGIC: &[u8; 4] = b"KGJC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Structural,
    Joint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelHeader {
    Structural { config: SgdConfig },
    Joint { config: JointConfig, structural_dim: usize, literal_dim: usize, projection_trainable: bool },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    #[serde(flatten)]
    model: ModelHeader,
    entities: Vec<String>,
    relations: Vec<String>,
    vocab_sha256: String,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Structural(StructuralModel<f32>),
    Joint(Box<JointModel<f32>>),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Structural(_) => ModelKind::Structural,
            Model::Joint(_) => ModelKind::Joint,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub vocab: Vocabulary,
    pub model: Model,
}

fn write_checkpoint(path: &Path, header: &Header, tensors: &[&[f32]]) -> Result<()> {
    let json = serde_json::to_vec(header).map_err(|e| Error::format(path, e.to_string()))?;
    let payload: usize = tensors.iter().map(|t| t.len() * 4).sum();
    let mut buf = Vec::with_capacity(12 + json.len() + payload);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for t in tensors {
        for v in *t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

fn base_header(model: ModelHeader, vocab: &Vocabulary, names: Vec<String>, shapes: Vec<(usize, usize)>) -> Header {
    Header {
        model,
        entities: vocab.entity_names().to_vec(),
        relations: vocab.relation_names().to_vec(),
        vocab_sha256: hex::encode(vocab.fingerprint()),
        tensors: names.into_iter().zip(shapes).map(|(name, (rows, cols))| TensorInfo { name, rows, cols }).collect(),
    }
}

fn check_vocab(model_entities: usize, model_relations: usize, vocab: &Vocabulary) -> Result<()> {
    if vocab.n_entities() != model_entities || vocab.n_relations() != model_relations {
        return Err(Error::Shape(format!(
            "model has {model_entities} entities/{model_relations} relations, vocabulary {}/{}",
            vocab.n_entities(),
            vocab.n_relations()
        )));
    }
    Ok(())
}

pub fn save_structural(path: &Path, model: &StructuralModel<f32>, vocab: &Vocabulary) -> Result<()> {
    check_vocab(model.n_entities(), model.n_relations(), vocab)?;
    let header = base_header(
        ModelHeader::Structural { config: model.config.clone() },
        vocab,
        vec!["entities".into(), "relations".into()],
        vec![model.entities.shape(), model.relations.shape()],
    );
    write_checkpoint(path, &header, &[model.entities.as_slice(), model.relations.as_slice()])
}

pub fn save_joint(path: &Path, model: &JointModel<f32>, vocab: &Vocabulary) -> Result<()> {
    check_vocab(model.n_entities(), model.n_relations(), vocab)?;
    let header = base_header(
        ModelHeader::Joint {
            config: model.config.clone(),
            structural_dim: model.structural_dim(),
            literal_dim: model.literal_dim(),
            projection_trainable: model.projection.as_ref().is_some_and(|p| p.trainable),
        },
        vocab,
        model.param_names(),
        model.param_shapes(),
    );
    write_checkpoint(path, &header, &model.param_groups())
}

pub fn save_model(path: &Path, model: &Model, vocab: &Vocabulary) -> Result<()> {
    match model {
        Model::Structural(m) => save_structural(path, m, vocab),
        Model::Joint(m) => save_joint(path, m, vocab),
    }
}

fn take<'a>(path: &Path, bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::format(path, format!("truncated checkpoint while reading {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn read_u32(path: &Path, bytes: &mut &[u8], what: &str) -> Result<u32> {
    let b = take(path, bytes, 4, what)?;
    Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = data.as_slice();
    if take(path, &mut bytes, 4, "magic")? != MAGIC {
        return Err(Error::format(path, "not a model checkpoint (bad magic)"));
    }
    let version = read_u32(path, &mut bytes, "version")?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported checkpoint version {version}")));
    }
    let header_len = read_u32(path, &mut bytes, "header length")? as usize;
    let header: Header = serde_json::from_slice(take(path, &mut bytes, header_len, "header")?)
        .map_err(|e| Error::format(path, format!("bad header: {e}")))?;

    let vocab = Vocabulary::from_names(header.entities.iter().cloned(), header.relations.iter().cloned());
    if vocab.entity_names() != header.entities.as_slice() || vocab.relation_names() != header.relations.as_slice() {
        return Err(Error::format(path, "vocabulary names are not sorted and unique"));
    }
    if hex::encode(vocab.fingerprint()) != header.vocab_sha256 {
        return Err(Error::format(path, "vocabulary fingerprint mismatch"));
    }

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for info in &header.tensors {
        let n = info.rows * info.cols;
        let raw = take(path, &mut bytes, n * 4, &info.name)?;
        let values: Vec<f32> =
            raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        tensors.push(values);
    }
    if !bytes.is_empty() {
        return Err(Error::format(path, format!("{} trailing bytes", bytes.len())));
    }

    let (n_e, n_r) = (vocab.n_entities(), vocab.n_relations());
    let model = match header.model {
        ModelHeader::Structural { config } => {
            let [e, r] = <[Vec<f32>; 2]>::try_from(tensors)
                .map_err(|_| Error::format(path, "structural checkpoint must hold two tensors"))?;
            let dim = config.dim;
            let entities = Matrix::from_vec(n_e, dim, e).map_err(|e| Error::format(path, e.to_string()))?;
            let relations = Matrix::from_vec(n_r, dim, r).map_err(|e| Error::format(path, e.to_string()))?;
            Model::Structural(StructuralModel::from_parts(entities, relations, config)?)
        }
        ModelHeader::Joint { config, structural_dim, literal_dim, projection_trainable } => {
            let mut model = JointModel::build(
                Matrix::zeros(n_e, structural_dim),
                Matrix::zeros(n_r, structural_dim),
                Matrix::zeros(n_e, literal_dim),
                Matrix::zeros(n_r, literal_dim),
                config,
            )?;
            let names = model.param_names();
            let shapes = model.param_shapes();
            if names.len() != header.tensors.len() {
                return Err(Error::format(path, "joint checkpoint tensor count mismatch"));
            }
            for (i, info) in header.tensors.iter().enumerate() {
                if info.name != names[i] || (info.rows, info.cols) != shapes[i] {
                    return Err(Error::format(
                        path,
                        format!(
                            "tensor {i} is {} {}x{}, expected {} {:?}",
                            info.name, info.rows, info.cols, names[i], shapes[i]
                        ),
                    ));
                }
            }
            for (dst, src) in model.param_groups_mut().into_iter().zip(&tensors) {
                dst.copy_from_slice(src);
            }
            if let Some(p) = &mut model.projection {
                p.trainable = projection_trainable;
            }
            Model::Joint(Box::new(model))
        }
    };
    Ok(Checkpoint { vocab, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::init_uniform_bound;

    fn vocab() -> Vocabulary {
        Vocabulary::from_names(["a", "b", "c", "d"], ["r", "s"])
    }

    #[test]
    fn structural_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ckpt");
        let cfg = SgdConfig { dim: 5, seed: 9, ..SgdConfig::default() };
        let m = StructuralModel::<f32>::new(4, 2, cfg).unwrap();
        save_structural(&path, &m, &vocab()).unwrap();
        let c = load_checkpoint(&path).unwrap();
        assert_eq!(c.model, Model::Structural(m));
        assert_eq!(c.vocab.entity_names(), vocab().entity_names());
    }

    #[test]
    fn joint_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.ckpt");
        let cfg = JointConfig::new(SgdConfig { dim: 3, ..SgdConfig::default() });
        let m = JointModel::build(
            init_uniform_bound(4, 5, 1.0, 1),
            init_uniform_bound(2, 5, 1.0, 2),
            init_uniform_bound(4, 6, 1.0, 3),
            init_uniform_bound(2, 6, 1.0, 4),
            cfg,
        )
        .unwrap();
        save_joint(&path, &m, &vocab()).unwrap();
        let c = load_checkpoint(&path).unwrap();
        assert_eq!(c.model, Model::Joint(Box::new(m)));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ckpt");
        let m = StructuralModel::<f32>::new(4, 2, SgdConfig { dim: 3, ..SgdConfig::default() }).unwrap();
        save_structural(&path, &m, &vocab()).unwrap();
        let good = fs::read(&path).unwrap();

        fs::write(&path, &good[..good.len() - 2]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format { .. })));
        let mut bad = good.clone();
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format { .. })));
        let mut extra = good;
        extra.push(0);
        fs::write(&path, &extra).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn vocabulary_size_must_match_model() {
        let dir = tempfile::tempdir().unwrap();
        let m = StructuralModel::<f32>::new(3, 2, SgdConfig { dim: 3, ..SgdConfig::default() }).unwrap();
        assert!(save_structural(&dir.path().join("x"), &m, &vocab()).is_err());
    }
}
