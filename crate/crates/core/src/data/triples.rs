use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use log::warn;

use super::vocab::{read_named_triples, Vocabulary};
use crate::error::{Error, Result};

/// Integer-indexed `(head, relation, tail)` fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub const fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self { head, relation, tail }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Train,
    Valid,
    Test,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Train => "train",
            Role::Valid => "valid",
            Role::Test => "test",
        })
    }
}

/// Ordered, duplicate-free list of triples with O(1) membership.
#[derive(Debug, Clone)]
pub struct TripleSet {
    role: Role,
    triples: Vec<Triple>,
    index: HashSet<Triple>,
    duplicates: usize,
}

impl TripleSet {
    /// Keeps the first occurrence of each triple and counts the rest.
    pub fn new(role: Role, triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut set = Self { role, triples: Vec::new(), index: HashSet::new(), duplicates: 0 };
        for t in triples {
            if set.index.insert(t) {
                set.triples.push(t);
            } else {
                set.duplicates += 1;
            }
        }
        set
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.index.contains(t)
    }

    /// Number of repeated lines dropped while building the set.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// Checks every index against the vocabulary sizes.
    pub fn validate(&self, n_entities: usize, n_relations: usize) -> Result<()> {
        for t in &self.triples {
            if t.head >= n_entities || t.tail >= n_entities || t.relation >= n_relations {
                return Err(Error::Data(format!(
                    "{} triple {t:?} out of range for {n_entities} entities / {n_relations} relations",
                    self.role
                )));
            }
        }
        Ok(())
    }
}

/// Loads a triple file against an existing vocabulary.
pub fn load_triples(path: &Path, vocab: &Vocabulary, role: Role) -> Result<TripleSet> {
    let mut out = Vec::new();
    for (line, h, r, t) in read_named_triples(path)? {
        let unknown =
            |kind, name: &str| Error::UnknownName { path: path.to_path_buf(), line, kind, name: name.to_owned() };
        let head = vocab.entity_id(&h).ok_or_else(|| unknown("entity", &h))?;
        let relation = vocab.relation_id(&r).ok_or_else(|| unknown("relation", &r))?;
        let tail = vocab.entity_id(&t).ok_or_else(|| unknown("entity", &t))?;
        out.push(Triple::new(head, relation, tail));
    }
    let set = TripleSet::new(role, out);
    if set.duplicates() > 0 {
        warn!("{}: dropped {} duplicate {} triples", path.display(), set.duplicates(), role);
    }
    Ok(set)
}

/// Writes triples as `head⇥relation⇥tail` lines.
pub fn write_triples(path: &Path, set: &TripleSet, vocab: &Vocabulary) -> Result<()> {
    let mut buf = Vec::new();
    for t in set.triples() {
        let name = |n: Option<&str>| {
            n.map(str::to_owned).ok_or_else(|| Error::Data(format!("triple {t:?} not covered by vocabulary")))
        };
        writeln!(
            buf,
            "{}\t{}\t{}",
            name(vocab.entity_name(t.head))?,
            name(vocab.relation_name(t.relation))?,
            name(vocab.entity_name(t.tail))?
        )
        .expect("write to Vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Union of known true triples, indexed for filtered ranking.
#[derive(Debug, Clone, Default)]
pub struct KnownTriples {
    all: HashSet<Triple>,
    heads: HashMap<(usize, usize), Vec<usize>>,
    tails: HashMap<(usize, usize), Vec<usize>>,
}

impl KnownTriples {
    pub fn from_sets<'a>(sets: impl IntoIterator<Item = &'a TripleSet>) -> Self {
        Self::from_triples(sets.into_iter().flat_map(|s| s.triples().iter().copied()))
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut k = Self::default();
        for t in triples {
            if k.all.insert(t) {
                k.heads.entry((t.relation, t.tail)).or_default().push(t.head);
                k.tails.entry((t.head, t.relation)).or_default().push(t.tail);
            }
        }
        k
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.all.contains(t)
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    /// Heads `h` with `(h, relation, tail)` known.
    pub fn heads_of(&self, relation: usize, tail: usize) -> &[usize] {
        self.heads.get(&(relation, tail)).map_or(&[], Vec::as_slice)
    }

    /// Tails `t` with `(head, relation, t)` known.
    pub fn tails_of(&self, head: usize, relation: usize) -> &[usize] {
        self.tails.get(&(head, relation)).map_or(&[], Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn duplicate_lines_dropped() {
        let f = file("a\tr\tb\na\tr\tb\n");
        let v = crate::data::build_vocab(&[f.path()]).unwrap();
        let s = load_triples(f.path(), &v, Role::Train).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.duplicates(), 1);
        assert!(s.contains(&Triple::new(0, 0, 1)));
    }

    #[test]
    fn unknown_name_is_reported() {
        let train = file("a\tr\tb\n");
        let test = file("a\tr\tb\nb\tr\tzz\n");
        let v = crate::data::build_vocab(&[train.path()]).unwrap();
        match load_triples(test.path(), &v, Role::Test).unwrap_err() {
            Error::UnknownName { line, name, kind, .. } => {
                assert_eq!((line, name.as_str(), kind), (2, "zz", "entity"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_order_preserved() {
        let f = file("c\tr\ta\na\tr\tb\n");
        let v = crate::data::build_vocab(&[f.path()]).unwrap();
        let s = load_triples(f.path(), &v, Role::Train).unwrap();
        assert_eq!(s.triples(), &[Triple::new(2, 0, 0), Triple::new(0, 0, 1)]);
    }

    #[test]
    fn write_then_load() {
        let v = Vocabulary::from_names(["a", "b", "c"], ["r", "s"]);
        let s = TripleSet::new(Role::Valid, [Triple::new(2, 1, 0), Triple::new(0, 0, 1)]);
        let out = tempfile::NamedTempFile::new().unwrap();
        write_triples(out.path(), &s, &v).unwrap();
        let back = load_triples(out.path(), &v, Role::Valid).unwrap();
        assert_eq!(back.triples(), s.triples());
    }

    #[test]
    fn validate_catches_out_of_range() {
        let s = TripleSet::new(Role::Train, [Triple::new(0, 0, 5)]);
        assert!(s.validate(5, 1).is_err());
        assert!(s.validate(6, 1).is_ok());
    }

    proptest! {
        #[test]
        fn membership_agrees_with_scan(
            raw in proptest::collection::vec((0usize..6, 0usize..3, 0usize..6), 0..40),
            probe in (0usize..6, 0usize..3, 0usize..6),
        ) {
            let triples: Vec<Triple> = raw.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
            let set = TripleSet::new(Role::Train, triples.clone());
            let known = KnownTriples::from_sets([&set]);
            let p = Triple::new(probe.0, probe.1, probe.2);
            let scan = triples.contains(&p);
            prop_assert_eq!(set.contains(&p), scan);
            prop_assert_eq!(known.contains(&p), scan);
            prop_assert_eq!(known.tails_of(p.head, p.relation).contains(&p.tail), scan);
            prop_assert_eq!(known.heads_of(p.relation, p.tail).contains(&p.head), scan);
            prop_assert_eq!(set.len() + set.duplicates(), triples.len());
        }
    }
}
