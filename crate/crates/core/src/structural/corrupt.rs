use rand::Rng;

use crate::data::Triple;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptSide {
    Head,
    Tail,
}

/// Replaces the head or the tail (50/50) by a different, uniformly drawn
/// entity. The relation is never touched and the result is not checked
/// against the known triples.
pub fn corrupt<R: Rng + ?Sized>(triple: Triple, n_entities: usize, rng: &mut R) -> Result<Triple> {
    let side = if rng.gen_bool(0.5) { CorruptSide::Head } else { CorruptSide::Tail };
    corrupt_with_branch(triple, n_entities, side, rng)
}

pub fn corrupt_with_branch<R: Rng + ?Sized>(
    triple: Triple,
    n_entities: usize,
    side: CorruptSide,
    rng: &mut R,
) -> Result<Triple> {
    if n_entities < 2 {
        return Err(Error::Data(format!("corruption needs at least 2 entities, have {n_entities}")));
    }
    let original = match side {
        CorruptSide::Head => triple.head,
        CorruptSide::Tail => triple.tail,
    };
    // uniform over the n−1 entities other than `original`
    let mut e = rng.gen_range(0..n_entities - 1);
    if e >= original {
        e += 1;
    }
    Ok(match side {
        CorruptSide::Head => Triple { head: e, ..triple },
        CorruptSide::Tail => Triple { tail: e, ..triple },
    })
}
