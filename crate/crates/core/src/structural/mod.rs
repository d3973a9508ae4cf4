//! Translation-based structural embeddings trained with a margin ranking
//! loss over corrupted triples.

mod corrupt;
mod model;
mod score;
mod train;

pub use corrupt::{corrupt, corrupt_with_branch, CorruptSide};
pub use model::{StructuralGrads, StructuralModel};
pub use score::{margin_term, score, score_grad_coeffs, translation_residual};
pub use train::{train_structural, train_structural_with, TrainOutcome};
