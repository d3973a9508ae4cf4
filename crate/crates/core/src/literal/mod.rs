//! Literal embedding vectors: file formats, binding to a vocabulary, and an
//! optional affine projection to the joint dimension.

mod format;
mod projection;
mod store;

pub use format::{
    read_literal_records, write_literal_records, write_literal_tsv, LiteralKind, LiteralRecord, LiteralRecords,
};
pub use projection::{project, LiteralProjection};
pub use store::{load_literal_file, write_literal_file, Coverage, LiteralStore, MissingPolicy};
