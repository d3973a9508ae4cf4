use serde::{Deserialize, Serialize};

use super::triples::TripleSet;
use super::vocab::Vocabulary;

/// Dataset size summary, serialized as `{"entities":…,"relations":…,"train":…,"valid":…,"test":…}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    #[serde(rename = "entities")]
    pub n_entities: usize,
    #[serde(rename = "relations")]
    pub n_relations: usize,
    #[serde(rename = "train")]
    pub n_train: usize,
    #[serde(rename = "valid")]
    pub n_valid: usize,
    #[serde(rename = "test")]
    pub n_test: usize,
}

impl DatasetStats {
    pub fn collect(vocab: &Vocabulary, train: &TripleSet, valid: Option<&TripleSet>, test: Option<&TripleSet>) -> Self {
        Self {
            n_entities: vocab.n_entities(),
            n_relations: vocab.n_relations(),
            n_train: train.len(),
            n_valid: valid.map_or(0, TripleSet::len),
            n_test: test.map_or(0, TripleSet::len),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}
