use crate::data::{KnownTriples, Triple};
use crate::error::{Error, Result};

use super::scorer::TripleScorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Head,
    Tail,
}

/// A test triple with one slot to be predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub triple: Triple,
    pub side: Side,
}

impl Query {
    pub fn new(triple: Triple, side: Side) -> Self {
        Self { triple, side }
    }

    pub fn target(&self) -> usize {
        match self.side {
            Side::Head => self.triple.head,
            Side::Tail => self.triple.tail,
        }
    }

    /// The triple obtained by putting `entity` in the query slot.
    pub fn with_candidate(&self, entity: usize) -> Triple {
        match self.side {
            Side::Head => Triple { head: entity, ..self.triple },
            Side::Tail => Triple { tail: entity, ..self.triple },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryRanks {
    pub query: Query,
    pub raw: usize,
    pub filtered: usize,
}

/// 1-based rank of `target` in ascending score order, skipping candidates for
/// which `skip` holds. A tie group places the target at its mean position,
/// rounded up: `1 + #better + ⌈#tied / 2⌉`.
pub fn rank_among(scores: &[f64], target: usize, skip: impl Fn(usize) -> bool) -> usize {
    let s = scores[target];
    let (mut better, mut tied) = (0usize, 0usize);
    for (e, &v) in scores.iter().enumerate() {
        if e == target || skip(e) {
            continue;
        }
        if v < s {
            better += 1;
        } else if v == s {
            tied += 1;
        }
    }
    1 + better + tied.div_ceil(2)
}

fn check_query<S: TripleScorer + ?Sized>(scorer: &S, query: &Query) -> Result<()> {
    let t = query.triple;
    let n = scorer.n_entities();
    if t.head >= n || t.tail >= n || t.relation >= scorer.n_relations() {
        return Err(Error::Data(format!(
            "query triple {t:?} outside the scorer's {n} entities / {} relations",
            scorer.n_relations()
        )));
    }
    Ok(())
}

fn score_query<S: TripleScorer + ?Sized>(scorer: &S, query: &Query, buf: &mut Vec<f64>) -> Result<()> {
    check_query(scorer, query)?;
    buf.clear();
    buf.resize(scorer.n_entities(), 0.0);
    let t = query.triple;
    match query.side {
        Side::Head => scorer.score_heads(t.relation, t.tail, buf),
        Side::Tail => scorer.score_tails(t.head, t.relation, buf),
    }
    if !buf[query.target()].is_finite() {
        return Err(Error::NonFinite(format!("score of test triple {t:?}")));
    }
    Ok(())
}

fn known_competitors<'k>(known: &'k KnownTriples, query: &Query) -> &'k [usize] {
    let t = query.triple;
    match query.side {
        Side::Head => known.heads_of(t.relation, t.tail),
        Side::Tail => known.tails_of(t.head, t.relation),
    }
}

/// Rank of the true entity for one query. In filtered mode candidates that
/// complete a known triple (other than the target) are removed first.
pub fn rank_query<S: TripleScorer + ?Sized>(
    scorer: &S,
    query: &Query,
    known: &KnownTriples,
    filtered: bool,
) -> Result<usize> {
    let mut buf = Vec::new();
    let r = rank_query_both(scorer, query, known, &mut buf)?;
    Ok(if filtered { r.filtered } else { r.raw })
}

/// Raw and filtered ranks from a single scoring pass.
pub fn rank_query_both<S: TripleScorer + ?Sized>(
    scorer: &S,
    query: &Query,
    known: &KnownTriples,
    buf: &mut Vec<f64>,
) -> Result<QueryRanks> {
    score_query(scorer, query, buf)?;
    let target = query.target();
    let s = buf[target];
    let (mut better, mut tied) = (0usize, 0usize);
    for (e, &v) in buf.iter().enumerate() {
        if e == target {
            continue;
        }
        if v < s {
            better += 1;
        } else if v == s {
            tied += 1;
        }
    }
    let raw = 1 + better + tied.div_ceil(2);
    for &e in known_competitors(known, query) {
        if e == target {
            continue;
        }
        let v = buf[e];
        if v < s {
            better -= 1;
        } else if v == s {
            tied -= 1;
        }
    }
    let filtered = 1 + better + tied.div_ceil(2);
    Ok(QueryRanks { query: *query, raw, filtered })
}
