//! Knowledge graph embedding toolkit.
//!
//! Structural embeddings are trained with a translation objective
//! (`h + r ≈ t`, margin ranking loss over corrupted triples). They are then
//! fused with literal vectors derived from entity and relation text through
//! three independent single-step GRU cells, one each for heads, relations and
//! tails, and the fused vectors are trained with the same translation score.
//! Link prediction is evaluated with raw and filtered Mean Rank and Hits@10.

pub mod checkpoint;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod joint;
pub mod literal;
pub mod numeric;
pub mod structural;
pub mod training;

pub use error::{Error, ErrorKind, Result};
