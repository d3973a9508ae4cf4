//! Epoch/batch driver shared by the structural and joint phases.

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{KnownTriples, Triple, TripleSet};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalOptions, TripleScorer};
use crate::numeric::{sub_seed, SgdConfig};
use crate::structural::corrupt;

const SHUFFLE_STREAM: u64 = 3;

/// Early stopping on validation filtered Mean Rank.
#[derive(Debug, Clone, Copy)]
pub struct Validation<'a> {
    pub set: &'a TripleSet,
    pub known: &'a KnownTriples,
    /// Evaluate every `every` epochs.
    pub every: usize,
    /// Stop after this many evaluations without improvement.
    pub patience: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub epoch_losses: Vec<f64>,
    /// Validation filtered MR of the returned model, when validation ran.
    pub best_valid_mr: Option<f64>,
    pub best_epoch: Option<usize>,
}

pub(crate) trait Trainable: Clone {
    type Scorer<'s>: TripleScorer
    where
        Self: 's;

    fn n_entities(&self) -> usize;
    /// Takes one SGD step on the batch and returns its loss.
    fn step(&mut self, pairs: &[(Triple, Triple)], lr: f64) -> Result<f64>;
    fn scorer(&self) -> Result<Self::Scorer<'_>>;
}

pub(crate) fn run<M: Trainable>(
    mut model: M,
    train: &TripleSet,
    config: &SgdConfig,
    validation: Option<&Validation<'_>>,
    phase: &str,
) -> Result<TrainOutcome<M>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, SHUFFLE_STREAM));
    let mut order: Vec<Triple> = train.triples().to_vec();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, M)> = None;
    let mut stale = 0usize;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let pairs = batch
                .iter()
                .map(|&p| Ok((p, corrupt(p, model.n_entities(), &mut rng)?)))
                .collect::<Result<Vec<_>>>()?;
            let loss = model.step(&pairs, config.learning_rate)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("{phase} loss diverged in epoch {epoch}")));
            }
            epoch_loss += loss;
        }
        debug!("{phase} epoch {epoch}: loss {epoch_loss:.6}");
        epoch_losses.push(epoch_loss);

        if let Some(v) = validation {
            if v.every > 0 && epoch % v.every == 0 {
                let report = evaluate(&model.scorer()?, v.set, v.known, &EvalOptions::default())?;
                let mr = report.report.all.mr_filtered;
                info!("{phase} epoch {epoch}: loss {epoch_loss:.4}, valid filtered MR {mr:.2}");
                if best.as_ref().is_none_or(|(b, _, _)| mr < *b) {
                    best = Some((mr, epoch, model.clone()));
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= v.patience {
                        info!("{phase}: early stop at epoch {epoch}");
                        break;
                    }
                }
            }
        }
    }
    if let Some(last) = epoch_losses.last() {
        info!("{phase}: {} epochs, final loss {last:.4}", epoch_losses.len());
    }
    Ok(match best {
        Some((mr, epoch, m)) => {
            TrainOutcome { model: m, epoch_losses, best_valid_mr: Some(mr), best_epoch: Some(epoch) }
        }
        None => TrainOutcome { model, epoch_losses, best_valid_mr: None, best_epoch: None },
    })
}
