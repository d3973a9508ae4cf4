//! Finite-difference gradient checks of every analytic backward pass, in
//! double precision on small random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::Triple;
use crate::error::{Error, Result};
use crate::joint::{GruParams, JointConfig, JointModel, GRU_TENSOR_NAMES};
use crate::numeric::{grad_check, init_uniform_bound, sub_seed, Matrix, SgdConfig};
use crate::structural::{corrupt, StructuralModel};

/// Central-difference step used by the checks.
pub const EPSILON: f64 = 1e-6;

/// Size of a toy check instance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ToySize {
    pub n_entities: usize,
    pub n_relations: usize,
    /// Structural dimension `k`.
    pub structural_dim: usize,
    pub literal_dim: usize,
    pub joint_dim: usize,
    pub n_triples: usize,
}

impl Default for ToySize {
    fn default() -> Self {
        Self { n_entities: 6, n_relations: 2, structural_dim: 3, literal_dim: 4, joint_dim: 4, n_triples: 5 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupError {
    pub group: String,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub target: &'static str,
    pub groups: Vec<GroupError>,
    pub max_relative_error: f64,
}

impl GradCheckReport {
    fn new(target: &'static str, groups: Vec<GroupError>) -> Self {
        let max_relative_error = groups.iter().map(|g| g.max_relative_error).fold(0.0, f64::max);
        Self { target, groups, max_relative_error }
    }
}

fn toy_pairs(size: &ToySize, rng: &mut ChaCha8Rng) -> Result<Vec<(Triple, Triple)>> {
    if size.n_entities < 2 || size.n_relations == 0 || size.n_triples == 0 {
        return Err(Error::Config("toy instance needs >= 2 entities, >= 1 relation and >= 1 triple".into()));
    }
    (0..size.n_triples)
        .map(|_| {
            let p = Triple::new(
                rng.gen_range(0..size.n_entities),
                rng.gen_range(0..size.n_relations),
                rng.gen_range(0..size.n_entities),
            );
            Ok((p, corrupt(p, size.n_entities, rng)?))
        })
        .collect()
}

/// Picks a margin large enough that every hinge is strictly active, so the
/// loss is smooth around the evaluation point.
fn active_margin(scores: impl Iterator<Item = (f64, f64)>) -> f64 {
    let worst = scores.map(|(p, n)| n - p).fold(0.0, f64::max);
    worst + 1.0
}

/// Margin ranking loss of the translation model w.r.t. entity and relation tables.
pub fn check_structural(size: &ToySize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = toy_pairs(size, &mut rng)?;
    let config = SgdConfig { dim: size.structural_dim, seed, ..SgdConfig::default() };
    let mut model = StructuralModel::<f64>::new(size.n_entities, size.n_relations, config)?;
    model.config.margin = active_margin(pairs.iter().map(|(p, n)| (model.score_triple(p), model.score_triple(n))));

    let (_, grads) = model.batch_loss_and_grads(&pairs);
    let mut groups = Vec::new();
    for (name, analytic, is_entity) in [
        ("entities", grads.entities.to_dense(size.n_entities), true),
        ("relations", grads.relations.to_dense(size.n_relations), false),
    ] {
        let base = if is_entity { &model.entities } else { &model.relations };
        let err = grad_check(
            |v| {
                let mut m = model.clone();
                let target = if is_entity { &mut m.entities } else { &mut m.relations };
                target.as_mut_slice().copy_from_slice(v);
                m.batch_loss(&pairs)
            },
            base.as_slice(),
            analytic.as_slice(),
            EPSILON,
        )?;
        groups.push(GroupError { group: name.into(), max_relative_error: err });
    }
    Ok(GradCheckReport::new("structural", groups))
}

/// A single GRU cell under the loss `Σ w_i · out_i` with random weights `w`.
pub fn check_gru(size: &ToySize, seed: u64) -> Result<GradCheckReport> {
    let (ds, dj) = (size.structural_dim, size.joint_dim);
    let params = GruParams::<f64>::random(ds, dj, sub_seed(seed, 1));
    let x = init_uniform_bound::<f64>(1, ds, 1.0, sub_seed(seed, 2)).into_vec();
    let h0 = init_uniform_bound::<f64>(1, dj, 1.0, sub_seed(seed, 3)).into_vec();
    let w = init_uniform_bound::<f64>(1, dj, 1.0, sub_seed(seed, 4)).into_vec();
    let loss = |p: &GruParams<f64>, x: &[f64], h: &[f64]| -> f64 {
        p.forward(x, h).map(|o| o.iter().zip(&w).map(|(a, b)| a * b).sum()).unwrap_or(f64::NAN)
    };

    let cache = params.forward_cached(&x, &h0)?;
    let mut grads = GruParams::zeros(ds, dj);
    let input = params.backward(&cache, &w, &mut grads)?;

    let mut groups = Vec::new();
    for (i, name) in GRU_TENSOR_NAMES.iter().enumerate() {
        let err = grad_check(
            |v| {
                let mut p = params.clone();
                p.tensors_mut()[i].copy_from_slice(v);
                loss(&p, &x, &h0)
            },
            params.tensors()[i],
            grads.tensors()[i],
            EPSILON,
        )?;
        groups.push(GroupError { group: (*name).into(), max_relative_error: err });
    }
    let err_x = grad_check(|v| loss(&params, v, &h0), &x, &input.dx, EPSILON)?;
    let err_h = grad_check(|v| loss(&params, &x, v), &h0, &input.dh0, EPSILON)?;
    groups.push(GroupError { group: "x".into(), max_relative_error: err_x });
    groups.push(GroupError { group: "h0".into(), max_relative_error: err_h });
    Ok(GradCheckReport::new("gru", groups))
}

/// Full joint margin loss w.r.t. every parameter group of the joint model.
pub fn check_joint(size: &ToySize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = toy_pairs(size, &mut rng)?;
    let table = |rows, cols, stream| -> Matrix<f64> { init_uniform_bound(rows, cols, 1.0, sub_seed(seed, stream)) };
    let config = JointConfig::new(SgdConfig { dim: size.joint_dim, seed, ..SgdConfig::default() });
    let mut model = JointModel::build(
        table(size.n_entities, size.structural_dim, 5),
        table(size.n_relations, size.structural_dim, 6),
        table(size.n_entities, size.literal_dim, 7),
        table(size.n_relations, size.literal_dim, 8),
        config,
    )?;
    let scores =
        pairs.iter().map(|(p, n)| Ok((model.joint_score(p)?, model.joint_score(n)?))).collect::<Result<Vec<_>>>()?;
    model.config.sgd.margin = active_margin(scores.into_iter());

    let (_, grads) = model.batch_loss_and_grads(&pairs)?;
    let dense = grads.dense_groups(&model);
    let names = model.param_names();
    let mut groups = Vec::with_capacity(names.len());
    for (i, (name, analytic)) in names.into_iter().zip(&dense).enumerate() {
        let err = grad_check(
            |v| {
                let mut m = model.clone();
                m.param_groups_mut()[i].copy_from_slice(v);
                m.batch_loss(&pairs).unwrap_or(f64::NAN)
            },
            model.param_groups()[i],
            analytic,
            EPSILON,
        )?;
        groups.push(GroupError { group: name, max_relative_error: err });
    }
    Ok(GradCheckReport::new("joint", groups))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_on_default_toy() {
        let size = ToySize::default();
        for seed in 0..3 {
            for r in [
                check_structural(&size, seed).unwrap(),
                check_gru(&size, seed).unwrap(),
                check_joint(&size, seed).unwrap(),
            ] {
                assert!(r.max_relative_error < 1e-6, "{} seed {seed}: {:?}", r.target, r.groups);
            }
        }
    }

    #[test]
    fn joint_check_covers_projection_when_dims_differ() {
        let size = ToySize { literal_dim: 6, ..ToySize::default() };
        let r = check_joint(&size, 1).unwrap();
        assert!(r.groups.iter().any(|g| g.group == "projection.weight"));
        assert_eq!(r.groups.len(), 3 * 12 + 4 + 2);
    }
}
