use serde::{Deserialize, Serialize};

use super::gru::{GruCache, GruParams, GRU_TENSOR_NAMES};
use crate::data::Triple;
use crate::error::{Error, Result};
use crate::eval::{TranslationScorer, TripleScorer};
use crate::literal::{LiteralProjection, LiteralStore};
use crate::numeric::{normalize_rows, sub_seed, Matrix, NormOrder, Scalar, SgdConfig, SparseGrad};
use crate::structural::{margin_term, score_grad_coeffs, translation_residual, StructuralModel};

const GRU_HEAD_STREAM: u64 = 11;
const GRU_RELATION_STREAM: u64 = 12;
const GRU_TAIL_STREAM: u64 = 13;
const PROJECTION_STREAM: u64 = 14;

/// Joint-phase settings. `sgd.dim` is the joint dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub sgd: SgdConfig,
    pub freeze_literals: bool,
    pub freeze_structural: bool,
    pub freeze_projection: bool,
}

impl JointConfig {
    pub fn new(sgd: SgdConfig) -> Self {
        Self { sgd, freeze_literals: false, freeze_structural: false, freeze_projection: false }
    }
}

/// Which GRU a vector goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Head,
    Relation,
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointModel<T> {
    pub entity_structural: Matrix<T>,
    pub relation_structural: Matrix<T>,
    /// Native-dimension literal vectors.
    pub entity_literals: Matrix<T>,
    pub relation_literals: Matrix<T>,
    /// Present when the joint dimension differs from the literal dimension.
    pub projection: Option<LiteralProjection<T>>,
    pub gru_head: GruParams<T>,
    pub gru_relation: GruParams<T>,
    pub gru_tail: GruParams<T>,
    pub config: JointConfig,
}

#[derive(Debug, Clone)]
pub struct JointGrads<T> {
    pub gru_head: GruParams<T>,
    pub gru_relation: GruParams<T>,
    pub gru_tail: GruParams<T>,
    pub entity_structural: SparseGrad<T>,
    pub relation_structural: SparseGrad<T>,
    pub entity_literals: SparseGrad<T>,
    pub relation_literals: SparseGrad<T>,
    pub projection: Option<(Matrix<T>, Vec<T>)>,
}

struct TripleForward<T> {
    head: GruCache<T>,
    relation: GruCache<T>,
    tail: GruCache<T>,
    residual: Vec<T>,
}

impl JointModel<f32> {
    /// Starts the joint phase from trained structural embeddings and loaded literals.
    pub fn new(structural: &StructuralModel<f32>, literals: &LiteralStore, config: JointConfig) -> Result<Self> {
        if literals.entity_vectors().rows() != structural.n_entities()
            || literals.relation_vectors().rows() != structural.n_relations()
        {
            return Err(Error::Shape(format!(
                "literal store covers {}/{} entities/relations, structural model {}/{}",
                literals.entity_vectors().rows(),
                literals.relation_vectors().rows(),
                structural.n_entities(),
                structural.n_relations()
            )));
        }
        Self::build(
            structural.entities.clone(),
            structural.relations.clone(),
            literals.entity_vectors().clone(),
            literals.relation_vectors().clone(),
            config,
        )
    }
}

impl<T: Scalar> JointModel<T> {
    /// Fresh GRUs (uniform on `±1/√dim_j`) over the given embeddings. A
    /// projection is created when `config.sgd.dim` differs from the literal width.
    pub fn build(
        entity_structural: Matrix<T>,
        relation_structural: Matrix<T>,
        entity_literals: Matrix<T>,
        relation_literals: Matrix<T>,
        config: JointConfig,
    ) -> Result<Self> {
        config.sgd.validate()?;
        if entity_structural.cols() != relation_structural.cols() {
            return Err(Error::Shape("structural entity/relation widths differ".into()));
        }
        if entity_literals.cols() != relation_literals.cols() {
            return Err(Error::Shape("literal entity/relation widths differ".into()));
        }
        if entity_structural.rows() != entity_literals.rows() || relation_structural.rows() != relation_literals.rows()
        {
            return Err(Error::Shape("structural and literal tables cover different vocabularies".into()));
        }
        let (dim_s, dim_l, dim_j) = (entity_structural.cols(), entity_literals.cols(), config.sgd.dim);
        let seed = config.sgd.seed;
        let projection = (dim_l != dim_j).then(|| {
            let mut p = LiteralProjection::random(dim_l, dim_j, sub_seed(seed, PROJECTION_STREAM));
            p.trainable = !config.freeze_projection;
            p
        });
        Ok(Self {
            entity_structural,
            relation_structural,
            entity_literals,
            relation_literals,
            projection,
            gru_head: GruParams::random(dim_s, dim_j, sub_seed(seed, GRU_HEAD_STREAM)),
            gru_relation: GruParams::random(dim_s, dim_j, sub_seed(seed, GRU_RELATION_STREAM)),
            gru_tail: GruParams::random(dim_s, dim_j, sub_seed(seed, GRU_TAIL_STREAM)),
            config,
        })
    }

    pub fn n_entities(&self) -> usize {
        self.entity_structural.rows()
    }

    pub fn n_relations(&self) -> usize {
        self.relation_structural.rows()
    }

    pub fn structural_dim(&self) -> usize {
        self.entity_structural.cols()
    }

    pub fn literal_dim(&self) -> usize {
        self.entity_literals.cols()
    }

    pub fn joint_dim(&self) -> usize {
        self.gru_head.dim_j()
    }

    pub fn norm_order(&self) -> NormOrder {
        self.config.sgd.norm_order
    }

    pub fn gru(&self, slot: Slot) -> &GruParams<T> {
        match slot {
            Slot::Head => &self.gru_head,
            Slot::Relation => &self.gru_relation,
            Slot::Tail => &self.gru_tail,
        }
    }

    fn inputs(&self, slot: Slot, idx: usize) -> Result<(&[T], Vec<T>)> {
        let (s, l) = match slot {
            Slot::Relation => (self.relation_structural.row(idx), self.relation_literals.row(idx)),
            Slot::Head | Slot::Tail => (self.entity_structural.row(idx), self.entity_literals.row(idx)),
        };
        let hidden = match &self.projection {
            Some(p) => p.apply(l)?,
            None => l.to_vec(),
        };
        Ok((s, hidden))
    }

    fn forward_slot(&self, slot: Slot, idx: usize) -> Result<GruCache<T>> {
        let (x, h0) = self.inputs(slot, idx)?;
        self.gru(slot).forward_cached(x, &h0)
    }

    /// Joint vector of entity/relation `idx` as seen through `slot`'s GRU.
    pub fn joint_vector(&self, slot: Slot, idx: usize) -> Result<Vec<T>> {
        Ok(self.forward_slot(slot, idx)?.output)
    }

    fn check_triple(&self, t: &Triple) -> Result<()> {
        if t.head >= self.n_entities() || t.tail >= self.n_entities() || t.relation >= self.n_relations() {
            return Err(Error::Data(format!("triple {t:?} outside model vocabulary")));
        }
        Ok(())
    }

    fn forward_triple(&self, t: &Triple) -> Result<TripleForward<T>> {
        self.check_triple(t)?;
        let head = self.forward_slot(Slot::Head, t.head)?;
        let relation = self.forward_slot(Slot::Relation, t.relation)?;
        let tail = self.forward_slot(Slot::Tail, t.tail)?;
        let residual = translation_residual(&head.output, &relation.output, &tail.output);
        Ok(TripleForward { head, relation, tail, residual })
    }

    /// Translation score of the three GRU outputs.
    pub fn joint_score(&self, t: &Triple) -> Result<T> {
        let f = self.forward_triple(t)?;
        crate::structural::score(&f.head.output, &f.relation.output, &f.tail.output, self.norm_order())
    }

    pub fn batch_loss(&self, pairs: &[(Triple, Triple)]) -> Result<f64> {
        let mut loss = 0.0;
        for (p, n) in pairs {
            loss += margin_term(self.joint_score(p)?.as_f64(), self.joint_score(n)?.as_f64(), self.config.sgd.margin);
        }
        Ok(loss)
    }

    pub fn zero_grads(&self) -> JointGrads<T> {
        let (s, j, l) = (self.structural_dim(), self.joint_dim(), self.literal_dim());
        JointGrads {
            gru_head: GruParams::zeros(s, j),
            gru_relation: GruParams::zeros(s, j),
            gru_tail: GruParams::zeros(s, j),
            entity_structural: SparseGrad::new(s),
            relation_structural: SparseGrad::new(s),
            entity_literals: SparseGrad::new(l),
            relation_literals: SparseGrad::new(l),
            projection: self
                .projection
                .as_ref()
                .map(|p| (Matrix::zeros(p.dim_out(), p.dim_in()), vec![T::zero(); p.dim_out()])),
        }
    }

    fn backprop_slot(
        &self,
        slot: Slot,
        idx: usize,
        cache: &GruCache<T>,
        upstream: &[T],
        grads: &mut JointGrads<T>,
    ) -> Result<()> {
        let acc = match slot {
            Slot::Head => &mut grads.gru_head,
            Slot::Relation => &mut grads.gru_relation,
            Slot::Tail => &mut grads.gru_tail,
        };
        let d = self.gru(slot).backward(cache, upstream, acc)?;
        let (s_grad, l_grad, literal) = match slot {
            Slot::Relation => {
                (&mut grads.relation_structural, &mut grads.relation_literals, self.relation_literals.row(idx))
            }
            Slot::Head | Slot::Tail => {
                (&mut grads.entity_structural, &mut grads.entity_literals, self.entity_literals.row(idx))
            }
        };
        s_grad.add_scaled(idx, &d.dx, T::one());
        match (&self.projection, &mut grads.projection) {
            (Some(p), Some((dw, db))) => {
                dw.add_outer(&d.dh0, literal);
                for (b, &g) in db.iter_mut().zip(&d.dh0) {
                    *b += g;
                }
                let dl = l_grad.row_mut(idx);
                p.weight.matvec_transpose_acc(&d.dh0, dl);
            }
            _ => l_grad.add_scaled(idx, &d.dh0, T::one()),
        }
        Ok(())
    }

    /// Batch hinge loss and gradients for every parameter group.
    pub fn batch_loss_and_grads(&self, pairs: &[(Triple, Triple)]) -> Result<(f64, JointGrads<T>)> {
        let mut grads = self.zero_grads();
        let mut loss = 0.0;
        let norm = self.norm_order();
        for (pos, neg) in pairs {
            let fp = self.forward_triple(pos)?;
            let fn_ = self.forward_triple(neg)?;
            let sp = crate::structural::score(&fp.head.output, &fp.relation.output, &fp.tail.output, norm)?;
            let sn = crate::structural::score(&fn_.head.output, &fn_.relation.output, &fn_.tail.output, norm)?;
            let hinge = self.config.sgd.margin + sp.as_f64() - sn.as_f64();
            if hinge <= 0.0 {
                continue;
            }
            loss += hinge;
            for (t, f, sign) in [(pos, &fp, T::one()), (neg, &fn_, -T::one())] {
                let g: Vec<T> = score_grad_coeffs(&f.residual, norm).into_iter().map(|v| v * sign).collect();
                let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
                self.backprop_slot(Slot::Head, t.head, &f.head, &g, &mut grads)?;
                self.backprop_slot(Slot::Relation, t.relation, &f.relation, &g, &mut grads)?;
                self.backprop_slot(Slot::Tail, t.tail, &f.tail, &neg_g, &mut grads)?;
            }
        }
        Ok((loss, grads))
    }

    /// SGD step honouring the freeze flags. Structural entity rows that move
    /// are renormalized to unit length; joint outputs are not constrained.
    pub fn apply(&mut self, grads: &JointGrads<T>, lr: f64) -> Result<()> {
        self.gru_head.sgd_update(&grads.gru_head, lr);
        self.gru_relation.sgd_update(&grads.gru_relation, lr);
        self.gru_tail.sgd_update(&grads.gru_tail, lr);
        if !self.config.freeze_structural {
            grads.entity_structural.apply(&mut self.entity_structural, lr)?;
            grads.relation_structural.apply(&mut self.relation_structural, lr)?;
            normalize_rows(&mut self.entity_structural, grads.entity_structural.touched());
        }
        if !self.config.freeze_literals {
            grads.entity_literals.apply(&mut self.entity_literals, lr)?;
            grads.relation_literals.apply(&mut self.relation_literals, lr)?;
        }
        if let (Some(p), Some((dw, db))) = (&mut self.projection, &grads.projection) {
            if p.trainable && !self.config.freeze_projection {
                crate::numeric::sgd_step(&mut p.weight, dw, lr)?;
                let lr = T::from_f64(lr);
                for (b, &g) in p.bias.iter_mut().zip(db) {
                    *b -= lr * g;
                }
            }
        }
        Ok(())
    }

    /// Joint vectors of every entity (as head and as tail) and relation.
    pub fn embed_all(&self) -> Result<JointEmbeddings<T>> {
        let j = self.joint_dim();
        let mut heads = Matrix::zeros(self.n_entities(), j);
        let mut tails = Matrix::zeros(self.n_entities(), j);
        let mut relations = Matrix::zeros(self.n_relations(), j);
        for e in 0..self.n_entities() {
            heads.row_mut(e).copy_from_slice(&self.joint_vector(Slot::Head, e)?);
            tails.row_mut(e).copy_from_slice(&self.joint_vector(Slot::Tail, e)?);
        }
        for r in 0..self.n_relations() {
            relations.row_mut(r).copy_from_slice(&self.joint_vector(Slot::Relation, r)?);
        }
        Ok(JointEmbeddings { heads, relations, tails, norm: self.norm_order() })
    }

    /// Names of the parameter groups, in the order used by
    /// [`param_groups`](Self::param_groups) and [`JointGrads::dense_groups`].
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for gru in ["gru_head", "gru_relation", "gru_tail"] {
            names.extend(GRU_TENSOR_NAMES.iter().map(|t| format!("{gru}.{t}")));
        }
        names.extend(
            ["entity_structural", "relation_structural", "entity_literals", "relation_literals"].map(String::from),
        );
        if self.projection.is_some() {
            names.push("projection.weight".into());
            names.push("projection.bias".into());
        }
        names
    }

    /// `(rows, cols)` of each group.
    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        for g in [&self.gru_head, &self.gru_relation, &self.gru_tail] {
            shapes.extend(g.shapes());
        }
        for m in [&self.entity_structural, &self.relation_structural, &self.entity_literals, &self.relation_literals] {
            shapes.push(m.shape());
        }
        if let Some(p) = &self.projection {
            shapes.push(p.weight.shape());
            shapes.push((1, p.bias.len()));
        }
        shapes
    }

    pub fn param_groups(&self) -> Vec<&[T]> {
        let mut groups: Vec<&[T]> = Vec::new();
        for g in [&self.gru_head, &self.gru_relation, &self.gru_tail] {
            groups.extend(g.tensors());
        }
        groups.push(self.entity_structural.as_slice());
        groups.push(self.relation_structural.as_slice());
        groups.push(self.entity_literals.as_slice());
        groups.push(self.relation_literals.as_slice());
        if let Some(p) = &self.projection {
            groups.push(p.weight.as_slice());
            groups.push(&p.bias);
        }
        groups
    }

    pub fn param_groups_mut(&mut self) -> Vec<&mut [T]> {
        let mut groups: Vec<&mut [T]> = Vec::new();
        groups.extend(self.gru_head.tensors_mut());
        groups.extend(self.gru_relation.tensors_mut());
        groups.extend(self.gru_tail.tensors_mut());
        groups.push(self.entity_structural.as_mut_slice());
        groups.push(self.relation_structural.as_mut_slice());
        groups.push(self.entity_literals.as_mut_slice());
        groups.push(self.relation_literals.as_mut_slice());
        if let Some(p) = &mut self.projection {
            groups.push(p.weight.as_mut_slice());
            groups.push(&mut p.bias);
        }
        groups
    }

    pub fn is_finite(&self) -> bool {
        self.param_groups().iter().all(|g| g.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Scalar>(&self) -> JointModel<U> {
        JointModel {
            entity_structural: self.entity_structural.cast(),
            relation_structural: self.relation_structural.cast(),
            entity_literals: self.entity_literals.cast(),
            relation_literals: self.relation_literals.cast(),
            projection: self.projection.as_ref().map(|p| LiteralProjection {
                weight: p.weight.cast(),
                bias: p.bias.iter().map(|b| U::from_f64(b.as_f64())).collect(),
                trainable: p.trainable,
            }),
            gru_head: self.gru_head.cast(),
            gru_relation: self.gru_relation.cast(),
            gru_tail: self.gru_tail.cast(),
            config: self.config.clone(),
        }
    }
}

impl<T: Scalar> JointGrads<T> {
    /// Dense gradients in [`JointModel::param_names`] order.
    pub fn dense_groups(&self, model: &JointModel<T>) -> Vec<Vec<T>> {
        let mut out: Vec<Vec<T>> = Vec::new();
        for g in [&self.gru_head, &self.gru_relation, &self.gru_tail] {
            out.extend(g.tensors().iter().map(|t| t.to_vec()));
        }
        out.push(self.entity_structural.to_dense(model.n_entities()).into_vec());
        out.push(self.relation_structural.to_dense(model.n_relations()).into_vec());
        out.push(self.entity_literals.to_dense(model.n_entities()).into_vec());
        out.push(self.relation_literals.to_dense(model.n_relations()).into_vec());
        if let Some((w, b)) = &self.projection {
            out.push(w.as_slice().to_vec());
            out.push(b.clone());
        }
        out
    }
}

/// Precomputed joint vectors of a frozen model, ready for ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEmbeddings<T> {
    pub heads: Matrix<T>,
    pub relations: Matrix<T>,
    pub tails: Matrix<T>,
    pub norm: NormOrder,
}

impl<T: Scalar> JointEmbeddings<T> {
    pub fn scorer(&self) -> TranslationScorer<'_, T> {
        TranslationScorer::new(&self.heads, &self.relations, &self.tails, self.norm)
    }
}

impl<T: Scalar> TripleScorer for JointEmbeddings<T> {
    fn n_entities(&self) -> usize {
        self.heads.rows()
    }

    fn n_relations(&self) -> usize {
        self.relations.rows()
    }

    fn score_heads(&self, relation: usize, tail: usize, out: &mut [f64]) {
        self.scorer().score_heads(relation, tail, out)
    }

    fn score_tails(&self, head: usize, relation: usize, out: &mut [f64]) {
        self.scorer().score_tails(head, relation, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{grad_check, init_uniform_bound};

    fn toy(dim_l: usize, dim_j: usize) -> JointModel<f64> {
        let cfg = JointConfig::new(SgdConfig { dim: dim_j, seed: 3, margin: 4.0, ..SgdConfig::default() });
        JointModel::build(
            init_uniform_bound(5, 3, 1.0, 1),
            init_uniform_bound(2, 3, 1.0, 2),
            init_uniform_bound(5, dim_l, 1.0, 3),
            init_uniform_bound(2, dim_l, 1.0, 4),
            cfg,
        )
        .unwrap()
    }

    fn pairs() -> Vec<(Triple, Triple)> {
        vec![
            (Triple::new(0, 0, 1), Triple::new(0, 0, 4)),
            (Triple::new(1, 1, 2), Triple::new(3, 1, 2)),
            (Triple::new(2, 0, 2), Triple::new(2, 0, 0)),
        ]
    }

    #[test]
    fn projection_only_when_dims_differ() {
        assert!(toy(4, 4).projection.is_none());
        let m = toy(6, 4);
        assert_eq!(m.projection.as_ref().unwrap().dim_in(), 6);
        assert_eq!(m.param_names().len(), m.param_groups().len());
        assert_eq!(m.param_shapes().len(), m.param_groups().len());
    }

    #[test]
    fn zero_relation_and_shared_cells_score_zero() {
        let mut m = toy(4, 4);
        m.gru_tail = m.gru_head.clone();
        m.gru_relation = GruParams::zeros(3, 4);
        m.relation_literals.fill(0.0);
        m.relation_structural.fill(0.0);
        let s = m.joint_score(&Triple::new(2, 1, 2)).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn score_is_nonnegative_and_matches_composition() {
        let m = toy(5, 4);
        for t in [Triple::new(0, 0, 1), Triple::new(4, 1, 3)] {
            let s = m.joint_score(&t).unwrap();
            assert!(s >= 0.0);
            let p = m.projection.as_ref().unwrap();
            let h = m
                .gru_head
                .forward(m.entity_structural.row(t.head), &p.apply(m.entity_literals.row(t.head)).unwrap())
                .unwrap();
            let r = m
                .gru_relation
                .forward(m.relation_structural.row(t.relation), &p.apply(m.relation_literals.row(t.relation)).unwrap())
                .unwrap();
            let tl = m
                .gru_tail
                .forward(m.entity_structural.row(t.tail), &p.apply(m.entity_literals.row(t.tail)).unwrap())
                .unwrap();
            let expect: f64 = (0..4).map(|i| (h[i] + r[i] - tl[i]).powi(2)).sum();
            assert!((s - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn relation_cell_does_not_affect_entity_vectors() {
        let m = toy(4, 4);
        let mut perturbed = m.clone();
        perturbed.gru_relation = GruParams::random(3, 4, 999);
        for e in 0..5 {
            assert_eq!(m.joint_vector(Slot::Head, e).unwrap(), perturbed.joint_vector(Slot::Head, e).unwrap());
            assert_eq!(m.joint_vector(Slot::Tail, e).unwrap(), perturbed.joint_vector(Slot::Tail, e).unwrap());
        }
        assert_ne!(m.joint_vector(Slot::Relation, 0).unwrap(), perturbed.joint_vector(Slot::Relation, 0).unwrap());
    }

    #[test]
    fn every_group_passes_gradient_check() {
        for (dim_l, dim_j) in [(4, 4), (6, 4)] {
            let m = toy(dim_l, dim_j);
            let ps = pairs();
            let (loss, g) = m.batch_loss_and_grads(&ps).unwrap();
            assert!((loss - m.batch_loss(&ps).unwrap()).abs() < 1e-12);
            assert!(loss > 0.0);
            let dense = g.dense_groups(&m);
            let names = m.param_names();
            for (idx, analytic) in dense.iter().enumerate() {
                let err = grad_check(
                    |v| {
                        let mut q = m.clone();
                        q.param_groups_mut()[idx].copy_from_slice(v);
                        q.batch_loss(&ps).unwrap()
                    },
                    m.param_groups()[idx],
                    analytic,
                    1e-6,
                )
                .unwrap();
                assert!(err < 1e-6, "{}: {err}", names[idx]);
            }
        }
    }

    #[test]
    fn frozen_groups_do_not_move() {
        let mut m = toy(4, 4);
        m.config.freeze_literals = true;
        m.config.freeze_structural = true;
        let before = m.clone();
        let (_, g) = m.batch_loss_and_grads(&pairs()).unwrap();
        m.apply(&g, 0.1).unwrap();
        assert_eq!(m.entity_literals, before.entity_literals);
        assert_eq!(m.entity_structural, before.entity_structural);
        assert_ne!(m.gru_head, before.gru_head);
    }

    #[test]
    fn embeddings_scorer_agrees_with_joint_score() {
        let m = toy(5, 4);
        let emb = m.embed_all().unwrap();
        let t = Triple::new(3, 1, 0);
        let mut buf = vec![0.0; 5];
        emb.score_tails(t.head, t.relation, &mut buf);
        assert!((buf[0] - m.joint_score(&t).unwrap()).abs() < 1e-12);
    }
}
