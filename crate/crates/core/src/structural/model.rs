use crate::data::Triple;
use crate::error::{Error, Result};
use crate::eval::TranslationScorer;
use crate::numeric::{init_uniform, normalize_rows, sub_seed, Matrix, Scalar, SgdConfig, SparseGrad};

use super::score::{residual_norm, score_grad_coeffs, translation_residual};

const ENTITY_STREAM: u64 = 1;
const RELATION_STREAM: u64 = 2;

/// Entity and relation embedding tables (`|E|×k`, `|R|×k`).
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel<T> {
    pub entities: Matrix<T>,
    pub relations: Matrix<T>,
    pub config: SgdConfig,
}

/// Row-sparse gradients of the batch loss.
#[derive(Debug, Clone)]
pub struct StructuralGrads<T> {
    pub entities: SparseGrad<T>,
    pub relations: SparseGrad<T>,
}

impl<T: Scalar> StructuralModel<T> {
    /// Uniform initialization. Entity and relation rows both start at unit
    /// norm; afterwards only entity rows are held there.
    pub fn new(n_entities: usize, n_relations: usize, config: SgdConfig) -> Result<Self> {
        config.validate()?;
        if n_entities == 0 || n_relations == 0 {
            return Err(Error::Data("model needs at least one entity and one relation".into()));
        }
        let mut entities = init_uniform(n_entities, config.dim, sub_seed(config.seed, ENTITY_STREAM));
        normalize_rows(&mut entities, 0..n_entities);
        let mut relations = init_uniform(n_relations, config.dim, sub_seed(config.seed, RELATION_STREAM));
        normalize_rows(&mut relations, 0..n_relations);
        Ok(Self { entities, relations, config })
    }

    pub fn from_parts(entities: Matrix<T>, relations: Matrix<T>, config: SgdConfig) -> Result<Self> {
        if entities.cols() != relations.cols() {
            return Err(Error::Shape(format!(
                "entity width {} differs from relation width {}",
                entities.cols(),
                relations.cols()
            )));
        }
        Ok(Self { entities, relations, config })
    }

    pub fn dim(&self) -> usize {
        self.entities.cols()
    }

    pub fn n_entities(&self) -> usize {
        self.entities.rows()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.rows()
    }

    pub fn check_triple(&self, t: &Triple) -> Result<()> {
        if t.head >= self.n_entities() || t.tail >= self.n_entities() || t.relation >= self.n_relations() {
            return Err(Error::Data(format!("triple {t:?} outside model vocabulary")));
        }
        Ok(())
    }

    pub fn score_triple(&self, t: &Triple) -> T {
        let d =
            translation_residual(self.entities.row(t.head), self.relations.row(t.relation), self.entities.row(t.tail));
        residual_norm(&d, self.config.norm_order)
    }

    /// Sum of hinge terms over `(positive, negative)` pairs, accumulated in f64.
    pub fn batch_loss(&self, pairs: &[(Triple, Triple)]) -> f64 {
        pairs
            .iter()
            .map(|(p, n)| {
                super::margin_term(self.score_triple(p).as_f64(), self.score_triple(n).as_f64(), self.config.margin)
            })
            .sum()
    }

    /// Batch loss and its gradient w.r.t. every touched row.
    pub fn batch_loss_and_grads(&self, pairs: &[(Triple, Triple)]) -> (f64, StructuralGrads<T>) {
        let k = self.dim();
        let mut grads = StructuralGrads { entities: SparseGrad::new(k), relations: SparseGrad::new(k) };
        let mut loss = 0.0;
        for (pos, neg) in pairs {
            let dp = translation_residual(
                self.entities.row(pos.head),
                self.relations.row(pos.relation),
                self.entities.row(pos.tail),
            );
            let dn = translation_residual(
                self.entities.row(neg.head),
                self.relations.row(neg.relation),
                self.entities.row(neg.tail),
            );
            let sp = residual_norm(&dp, self.config.norm_order).as_f64();
            let sn = residual_norm(&dn, self.config.norm_order).as_f64();
            let hinge = self.config.margin + sp - sn;
            if hinge <= 0.0 {
                continue;
            }
            loss += hinge;
            for (t, d, sign) in [(pos, &dp, T::one()), (neg, &dn, -T::one())] {
                let g = score_grad_coeffs(d, self.config.norm_order);
                grads.entities.add_scaled(t.head, &g, sign);
                grads.relations.add_scaled(t.relation, &g, sign);
                grads.entities.add_scaled(t.tail, &g, -sign);
            }
        }
        (loss, grads)
    }

    /// One SGD step followed by renormalization of the touched entity rows.
    pub fn apply(&mut self, grads: &StructuralGrads<T>, lr: f64) -> Result<()> {
        grads.entities.apply(&mut self.entities, lr)?;
        grads.relations.apply(&mut self.relations, lr)?;
        normalize_rows(&mut self.entities, grads.entities.touched());
        Ok(())
    }

    pub fn scorer(&self) -> TranslationScorer<'_, T> {
        TranslationScorer::new(&self.entities, &self.relations, &self.entities, self.config.norm_order)
    }

    pub fn is_finite(&self) -> bool {
        self.entities.is_finite() && self.relations.is_finite()
    }

    pub fn cast<U: Scalar>(&self) -> StructuralModel<U> {
        StructuralModel {
            entities: self.entities.cast(),
            relations: self.relations.cast(),
            config: self.config.clone(),
        }
    }
}
