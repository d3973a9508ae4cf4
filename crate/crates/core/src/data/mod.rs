//! Triple datasets: vocabularies, indexed triple sets, statistics and
//! synthetic generators.

mod stats;
mod synthetic;
mod triples;
mod vocab;

pub use stats::DatasetStats;
pub use synthetic::{
    default_offsets, lattice_positions, lattice_triples, make_cluster_kg, make_synthetic, make_synthetic_with_offsets,
    ClusterKg, ClusterKgParams, LatticeKg,
};
pub use triples::{load_triples, write_triples, KnownTriples, Role, Triple, TripleSet};
pub use vocab::{build_vocab, file_sha256, read_named_triples, Vocabulary};
