use crate::data::{Triple, TripleSet};
use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::training::{run, TrainOutcome, Trainable, Validation};

use super::model::{JointEmbeddings, JointModel};

impl<T: Scalar> Trainable for JointModel<T> {
    type Scorer<'s> = JointEmbeddings<T>;

    fn n_entities(&self) -> usize {
        JointModel::n_entities(self)
    }

    fn step(&mut self, pairs: &[(Triple, Triple)], lr: f64) -> Result<f64> {
        let (loss, grads) = self.batch_loss_and_grads(pairs)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("joint batch loss".into()));
        }
        self.apply(&grads, lr)?;
        Ok(loss)
    }

    fn scorer(&self) -> Result<JointEmbeddings<T>> {
        self.embed_all()
    }
}

/// Runs the joint phase with the model's own SGD settings.
pub fn train_joint<T: Scalar>(model: JointModel<T>, train: &TripleSet) -> Result<TrainOutcome<JointModel<T>>> {
    train_joint_with(model, train, None)
}

pub fn train_joint_with<T: Scalar>(
    model: JointModel<T>,
    train: &TripleSet,
    validation: Option<&Validation<'_>>,
) -> Result<TrainOutcome<JointModel<T>>> {
    train.validate(model.n_entities(), model.n_relations())?;
    let config = model.config.sgd.clone();
    run(model, train, &config, validation, "joint")
}
