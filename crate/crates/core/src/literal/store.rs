use std::collections::HashMap;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::format::{read_literal_records, write_literal_records, LiteralKind, LiteralRecord, LiteralRecords};
use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Fill rule for vocabulary names that have no literal record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Zeros,
    /// Mean of the present vectors of the same kind (zeros if none).
    Mean,
}

impl std::str::FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(MissingPolicy::Zeros),
            "mean" => Ok(MissingPolicy::Mean),
            other => Err(Error::Config(format!("missing policy must be `zeros` or `mean`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Coverage {
    pub entities_found: usize,
    pub entities_missing: usize,
    pub relations_found: usize,
    pub relations_missing: usize,
    /// Records whose name is not in the vocabulary.
    pub ignored: usize,
}

/// One literal vector per vocabulary index, for entities and relations.
#[derive(Debug, Clone, PartialEq)]
pub struct LiteralStore {
    dim: usize,
    entity_vectors: Matrix<f32>,
    relation_vectors: Matrix<f32>,
    entity_present: Vec<bool>,
    relation_present: Vec<bool>,
    coverage: Coverage,
}

impl LiteralStore {
    /// Every row zero and counted as missing.
    pub fn zeros(n_entities: usize, n_relations: usize, dim: usize) -> Self {
        Self {
            dim,
            entity_vectors: Matrix::zeros(n_entities, dim),
            relation_vectors: Matrix::zeros(n_relations, dim),
            entity_present: vec![false; n_entities],
            relation_present: vec![false; n_relations],
            coverage: Coverage { entities_missing: n_entities, relations_missing: n_relations, ..Coverage::default() },
        }
    }

    /// Every row present.
    pub fn from_matrices(entity_vectors: Matrix<f32>, relation_vectors: Matrix<f32>) -> Result<Self> {
        if entity_vectors.cols() != relation_vectors.cols() {
            return Err(Error::Shape(format!(
                "entity literal width {} differs from relation literal width {}",
                entity_vectors.cols(),
                relation_vectors.cols()
            )));
        }
        let (ne, nr) = (entity_vectors.rows(), relation_vectors.rows());
        Ok(Self {
            dim: entity_vectors.cols(),
            entity_vectors,
            relation_vectors,
            entity_present: vec![true; ne],
            relation_present: vec![true; nr],
            coverage: Coverage { entities_found: ne, relations_found: nr, ..Coverage::default() },
        })
    }

    /// Binds parsed records to vocabulary indices.
    pub fn bind(records: &LiteralRecords, vocab: &Vocabulary, policy: MissingPolicy) -> Self {
        let dim = records.dim;
        let mut latest: HashMap<(LiteralKind, &str), &LiteralRecord> = HashMap::new();
        for r in &records.records {
            if latest.insert((r.kind, r.name.as_str()), r).is_some() {
                warn!("duplicate literal record {:?} `{}`: keeping the last one", r.kind, r.name);
            }
        }
        let mut store = Self::zeros(vocab.n_entities(), vocab.n_relations(), dim);
        let mut ignored = 0;
        for ((kind, name), r) in &latest {
            let (idx, matrix, present) = match kind {
                LiteralKind::Entity => (vocab.entity_id(name), &mut store.entity_vectors, &mut store.entity_present),
                LiteralKind::Relation => {
                    (vocab.relation_id(name), &mut store.relation_vectors, &mut store.relation_present)
                }
            };
            match idx {
                Some(i) => {
                    matrix.row_mut(i).copy_from_slice(&r.vector);
                    present[i] = true;
                }
                None => ignored += 1,
            }
        }
        if policy == MissingPolicy::Mean {
            fill_mean(&mut store.entity_vectors, &store.entity_present);
            fill_mean(&mut store.relation_vectors, &store.relation_present);
        }
        let found = |p: &[bool]| p.iter().filter(|&&b| b).count();
        store.coverage = Coverage {
            entities_found: found(&store.entity_present),
            entities_missing: vocab.n_entities() - found(&store.entity_present),
            relations_found: found(&store.relation_present),
            relations_missing: vocab.n_relations() - found(&store.relation_present),
            ignored,
        };
        store
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity_vectors(&self) -> &Matrix<f32> {
        &self.entity_vectors
    }

    pub fn relation_vectors(&self) -> &Matrix<f32> {
        &self.relation_vectors
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage
    }

    pub fn entity_present(&self, i: usize) -> bool {
        self.entity_present[i]
    }

    pub fn relation_present(&self, i: usize) -> bool {
        self.relation_present[i]
    }

    /// Present rows as records in vocabulary order, entities first.
    pub fn records(&self, vocab: &Vocabulary) -> Vec<LiteralRecord> {
        let mut out = Vec::new();
        for (i, name) in vocab.entity_names().iter().enumerate() {
            if self.entity_present.get(i).copied().unwrap_or(false) {
                out.push(LiteralRecord {
                    kind: LiteralKind::Entity,
                    name: name.clone(),
                    vector: self.entity_vectors.row(i).to_vec(),
                });
            }
        }
        for (i, name) in vocab.relation_names().iter().enumerate() {
            if self.relation_present.get(i).copied().unwrap_or(false) {
                out.push(LiteralRecord {
                    kind: LiteralKind::Relation,
                    name: name.clone(),
                    vector: self.relation_vectors.row(i).to_vec(),
                });
            }
        }
        out
    }
}

fn fill_mean(m: &mut Matrix<f32>, present: &[bool]) {
    let n_present = present.iter().filter(|&&p| p).count();
    if n_present == 0 || n_present == present.len() {
        return;
    }
    let mut mean = vec![0.0f64; m.cols()];
    for (i, _) in present.iter().enumerate().filter(|(_, &p)| p) {
        for (acc, &v) in mean.iter_mut().zip(m.row(i)) {
            *acc += v as f64;
        }
    }
    let mean: Vec<f32> = mean.iter().map(|s| (s / n_present as f64) as f32).collect();
    for (i, _) in present.iter().enumerate().filter(|(_, &p)| !p) {
        m.row_mut(i).copy_from_slice(&mean);
    }
}

pub fn load_literal_file(path: &Path, vocab: &Vocabulary, policy: MissingPolicy) -> Result<LiteralStore> {
    let records = read_literal_records(path)?;
    let store = LiteralStore::bind(&records, vocab, policy);
    let c = store.coverage();
    if c.entities_missing + c.relations_missing + c.ignored > 0 {
        warn!(
            "{}: {} entities and {} relations without literals, {} records not in vocabulary",
            path.display(),
            c.entities_missing,
            c.relations_missing,
            c.ignored
        );
    }
    Ok(store)
}

/// Writes the present records in canonical (vocabulary) order as `LEB1`.
pub fn write_literal_file(path: &Path, store: &LiteralStore, vocab: &Vocabulary) -> Result<()> {
    write_literal_records(path, store.dim(), &store.records(vocab))
}
