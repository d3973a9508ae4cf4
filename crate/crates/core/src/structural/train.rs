use crate::data::{Triple, TripleSet, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::TranslationScorer;
use crate::numeric::{Scalar, SgdConfig};
use crate::training::{run, Trainable, Validation};

pub use crate::training::TrainOutcome;

use super::model::StructuralModel;

impl<T: Scalar> Trainable for StructuralModel<T> {
    type Scorer<'s> = TranslationScorer<'s, T>;

    fn n_entities(&self) -> usize {
        StructuralModel::n_entities(self)
    }

    fn step(&mut self, pairs: &[(Triple, Triple)], lr: f64) -> Result<f64> {
        let (loss, grads) = self.batch_loss_and_grads(pairs);
        if !loss.is_finite() {
            return Err(Error::NonFinite("structural batch loss".into()));
        }
        self.apply(&grads, lr)?;
        Ok(loss)
    }

    fn scorer(&self) -> Result<Self::Scorer<'_>> {
        Ok(StructuralModel::scorer(self))
    }
}

/// Trains structural embeddings from a fresh initialization.
pub fn train_structural(
    train: &TripleSet,
    vocab: &Vocabulary,
    config: &SgdConfig,
) -> Result<TrainOutcome<StructuralModel<f32>>> {
    let model = StructuralModel::new(vocab.n_entities(), vocab.n_relations(), config.clone())?;
    train_structural_with(model, train, None)
}

/// Continues training `model` (using its own config), optionally with early stopping.
pub fn train_structural_with<T: Scalar>(
    model: StructuralModel<T>,
    train: &TripleSet,
    validation: Option<&Validation<'_>>,
) -> Result<TrainOutcome<StructuralModel<T>>> {
    train.validate(model.n_entities(), model.n_relations())?;
    let config = model.config.clone();
    run(model, train, &config, validation, "structural")
}
