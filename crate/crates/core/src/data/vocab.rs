use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Bidirectional name ↔ index maps for entities and relations.
///
/// Indices are dense and assigned in ascending byte order of the names, so
/// the same set of names always produces the same indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_index: HashMap<String, usize>,
    relation_index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from arbitrary name collections; duplicates are merged.
    pub fn from_names<E, R>(entities: E, relations: R) -> Self
    where
        E: IntoIterator,
        E::Item: Into<String>,
        R: IntoIterator,
        R::Item: Into<String>,
    {
        let entities: BTreeSet<String> = entities.into_iter().map(Into::into).collect();
        let relations: BTreeSet<String> = relations.into_iter().map(Into::into).collect();
        Self::from_sorted(entities.into_iter().collect(), relations.into_iter().collect())
    }

    fn from_sorted(entities: Vec<String>, relations: Vec<String>) -> Self {
        let entity_index = entities.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let relation_index = relations.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { entities, relations, entity_index, relation_index }
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_index.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_index.get(name).copied()
    }

    pub fn entity_name(&self, id: usize) -> Option<&str> {
        self.entities.get(id).map(String::as_str)
    }

    pub fn relation_name(&self, id: usize) -> Option<&str> {
        self.relations.get(id).map(String::as_str)
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations
    }

    /// SHA-256 over both name lists; used to tie checkpoints to a vocabulary.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (tag, names) in [(b'E', &self.entities), (b'R', &self.relations)] {
            h.update([tag]);
            h.update((names.len() as u64).to_le_bytes());
            for n in names {
                h.update((n.len() as u64).to_le_bytes());
                h.update(n.as_bytes());
            }
        }
        h.finalize().into()
    }
}

/// Splits a triple line into trimmed `(head, relation, tail)`.
/// Returns `Ok(None)` for blank lines.
pub(crate) fn parse_line<'a>(line: &'a str, path: &Path, lineno: usize) -> Result<Option<(&'a str, &'a str, &'a str)>> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
    let err = |message: String| Error::Parse { path: path.to_path_buf(), line: lineno, message };
    if fields.len() != 3 {
        return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
    }
    if fields.iter().any(|f| f.is_empty()) {
        return Err(err("empty field".into()));
    }
    Ok(Some((fields[0], fields[1], fields[2])))
}

/// Reads a triple file as `(line number, head, relation, tail)` names.
pub fn read_named_triples(path: &Path) -> Result<Vec<(usize, String, String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some((h, r, t)) = parse_line(line, path, i + 1)? {
            out.push((i + 1, h.to_owned(), r.to_owned(), t.to_owned()));
        }
    }
    Ok(out)
}

/// Hex SHA-256 of a file's bytes, for provenance records.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects every entity and relation name appearing in any of `paths`.
pub fn build_vocab<P: AsRef<Path>>(paths: &[P]) -> Result<Vocabulary> {
    if paths.is_empty() {
        return Err(Error::Config("no triple files given to build a vocabulary".into()));
    }
    let mut entities = BTreeSet::new();
    let mut relations = BTreeSet::new();
    for p in paths {
        for (_, h, r, t) in read_named_triples(p.as_ref())? {
            entities.insert(h);
            entities.insert(t);
            relations.insert(r);
        }
    }
    if entities.is_empty() {
        let listed: Vec<PathBuf> = paths.iter().map(|p| p.as_ref().to_path_buf()).collect();
        return Err(Error::Data(format!("no triples found in {listed:?}")));
    }
    Ok(Vocabulary::from_sorted(entities.into_iter().collect(), relations.into_iter().collect()))
}
