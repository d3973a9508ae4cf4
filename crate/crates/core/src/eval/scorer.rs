use crate::data::Triple;
use crate::numeric::{Matrix, NormOrder, Scalar};

/// Scores every candidate completion of a query. Lower is better.
pub trait TripleScorer: Sync {
    fn n_entities(&self) -> usize;
    fn n_relations(&self) -> usize;
    /// `out[e] = score(e, relation, tail)`
    fn score_heads(&self, relation: usize, tail: usize, out: &mut [f64]);
    /// `out[e] = score(head, relation, e)`
    fn score_tails(&self, head: usize, relation: usize, out: &mut [f64]);
}

impl<S: TripleScorer + ?Sized> TripleScorer for &S {
    fn n_entities(&self) -> usize {
        (**self).n_entities()
    }
    fn n_relations(&self) -> usize {
        (**self).n_relations()
    }
    fn score_heads(&self, relation: usize, tail: usize, out: &mut [f64]) {
        (**self).score_heads(relation, tail, out)
    }
    fn score_tails(&self, head: usize, relation: usize, out: &mut [f64]) {
        (**self).score_tails(head, relation, out)
    }
}

/// `‖H[h] + R[r] − T[t]‖` over three embedding tables, computed in f64.
/// Structural models use the entity table for both `H` and `T`; joint
/// models supply separate head-side and tail-side tables.
#[derive(Debug, Clone, Copy)]
pub struct TranslationScorer<'a, T> {
    heads: &'a Matrix<T>,
    relations: &'a Matrix<T>,
    tails: &'a Matrix<T>,
    norm: NormOrder,
}

impl<'a, T: Scalar> TranslationScorer<'a, T> {
    pub fn new(heads: &'a Matrix<T>, relations: &'a Matrix<T>, tails: &'a Matrix<T>, norm: NormOrder) -> Self {
        debug_assert_eq!(heads.rows(), tails.rows());
        debug_assert_eq!(heads.cols(), relations.cols());
        debug_assert_eq!(heads.cols(), tails.cols());
        Self { heads, relations, tails, norm }
    }

    #[inline]
    fn distance(&self, h: &[T], r: &[T], t: &[T]) -> f64 {
        let terms = h.iter().zip(r).zip(t).map(|((&a, &b), &c)| a.as_f64() + b.as_f64() - c.as_f64());
        match self.norm {
            NormOrder::L2 => terms.map(|d| d * d).sum(),
            NormOrder::L1 => terms.map(f64::abs).sum(),
        }
    }

    pub fn score(&self, t: Triple) -> f64 {
        self.distance(self.heads.row(t.head), self.relations.row(t.relation), self.tails.row(t.tail))
    }
}

impl<T: Scalar> TripleScorer for TranslationScorer<'_, T> {
    fn n_entities(&self) -> usize {
        self.heads.rows()
    }

    fn n_relations(&self) -> usize {
        self.relations.rows()
    }

    fn score_heads(&self, relation: usize, tail: usize, out: &mut [f64]) {
        let (r, t) = (self.relations.row(relation), self.tails.row(tail));
        for (e, o) in out.iter_mut().enumerate() {
            *o = self.distance(self.heads.row(e), r, t);
        }
    }

    fn score_tails(&self, head: usize, relation: usize, out: &mut [f64]) {
        let (h, r) = (self.heads.row(head), self.relations.row(relation));
        for (e, o) in out.iter_mut().enumerate() {
            *o = self.distance(h, r, self.tails.row(e));
        }
    }
}

/// Adapts any per-triple scoring function.
pub struct FnScorer<F> {
    n_entities: usize,
    n_relations: usize,
    f: F,
}

impl<F: Fn(Triple) -> f64 + Sync> FnScorer<F> {
    pub fn new(n_entities: usize, n_relations: usize, f: F) -> Self {
        Self { n_entities, n_relations, f }
    }
}

impl<F: Fn(Triple) -> f64 + Sync> TripleScorer for FnScorer<F> {
    fn n_entities(&self) -> usize {
        self.n_entities
    }

    fn n_relations(&self) -> usize {
        self.n_relations
    }

    fn score_heads(&self, relation: usize, tail: usize, out: &mut [f64]) {
        for (e, o) in out.iter_mut().enumerate() {
            *o = (self.f)(Triple::new(e, relation, tail));
        }
    }

    fn score_tails(&self, head: usize, relation: usize, out: &mut [f64]) {
        for (e, o) in out.iter_mut().enumerate() {
            *o = (self.f)(Triple::new(head, relation, e));
        }
    }
}
