//! Joint embeddings: three independent GRU cells fuse structural and literal
//! vectors for heads, relations and tails, trained with the translation
//! score and margin ranking loss.

mod gru;
mod model;
mod train;

pub use gru::{GruCache, GruInputGrads, GruParams, GRU_TENSOR_NAMES};
pub use model::{JointConfig, JointEmbeddings, JointGrads, JointModel, Slot};
pub use train::{train_joint, train_joint_with};
