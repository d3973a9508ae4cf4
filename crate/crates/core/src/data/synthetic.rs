//! Synthetic knowledge graphs with planted structure.
//!
//! The lattice generator places entities on an integer grid and makes every
//! relation a fixed grid offset, so `(h, r, t)` holds iff `pos(t) = pos(h) + offset(r)`.
//! This is exactly translational and therefore learnable by the structural model.
//!
//! The cluster generator makes links depend only on a hidden cluster id that is
//! also encoded in each entity's literal vector. With a sparse training split
//! the graph alone says little about most entities while the literals say a lot.

use std::collections::HashMap;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::triples::{Role, Triple, TripleSet};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::numeric::{sub_seed, Matrix};

/// Smallest usable generated graph.
const MIN_TRIPLES: usize = 10;
const MIN_ENTITIES: usize = 20;

#[derive(Debug, Clone)]
pub struct LatticeKg {
    pub vocab: Vocabulary,
    pub train: TripleSet,
    pub valid: TripleSet,
    pub test: TripleSet,
    /// Planted offset per relation index.
    pub offsets: Vec<Vec<i64>>,
    /// Grid position per entity index.
    pub positions: Vec<Vec<i64>>,
}

fn side_for(n_entities: usize, grid_dim: usize) -> usize {
    let mut side = 1usize;
    while side.checked_pow(grid_dim as u32).is_some_and(|v| v < n_entities) {
        side += 1;
    }
    side
}

/// Grid coordinates of entities `0..n_entities`, filled in mixed-radix order on
/// the smallest cube with at least `n_entities` points.
pub fn lattice_positions(n_entities: usize, grid_dim: usize) -> Vec<Vec<i64>> {
    let side = side_for(n_entities, grid_dim);
    (0..n_entities)
        .map(|mut i| {
            (0..grid_dim)
                .map(|_| {
                    let c = (i % side) as i64;
                    i /= side;
                    c
                })
                .collect()
        })
        .collect()
}

/// Every triple implied by the offsets, in (relation, head) order.
pub fn lattice_triples(n_entities: usize, grid_dim: usize, offsets: &[Vec<i64>]) -> Result<Vec<Triple>> {
    if n_entities == 0 || grid_dim == 0 {
        return Err(Error::Config("lattice needs at least one entity and one dimension".into()));
    }
    for (r, off) in offsets.iter().enumerate() {
        if off.len() != grid_dim {
            return Err(Error::Config(format!("offset {r} has {} coordinates, grid has {grid_dim}", off.len())));
        }
        if off.iter().all(|&c| c == 0) {
            return Err(Error::Config(format!("offset {r} is zero and would only produce self-loops")));
        }
        if offsets[..r].contains(off) {
            return Err(Error::Config(format!("offset {r} duplicates an earlier relation")));
        }
    }
    let positions = lattice_positions(n_entities, grid_dim);
    let at: HashMap<&[i64], usize> = positions.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let mut out = Vec::new();
    for (r, off) in offsets.iter().enumerate() {
        for (h, p) in positions.iter().enumerate() {
            let target: Vec<i64> = p.iter().zip(off).map(|(a, b)| a + b).collect();
            if let Some(&t) = at.get(target.as_slice()) {
                out.push(Triple::new(h, r, t));
            }
        }
    }
    Ok(out)
}

/// Deterministic list of distinct nonzero offsets, shortest first, never
/// containing both `v` and `−v`.
pub fn default_offsets(n_relations: usize, grid_dim: usize) -> Vec<Vec<i64>> {
    let mut candidates: Vec<Vec<i64>> = Vec::new();
    let range = [-2i64, -1, 0, 1, 2];
    let total = range.len().pow(grid_dim as u32);
    for mut code in 0..total {
        let v: Vec<i64> = (0..grid_dim)
            .map(|_| {
                let c = range[code % range.len()];
                code /= range.len();
                c
            })
            .collect();
        if v.iter().any(|&c| c != 0) {
            candidates.push(v);
        }
    }
    candidates.sort_by(|a, b| {
        let key = |v: &Vec<i64>| {
            let l1: i64 = v.iter().map(|c| c.abs()).sum();
            let max = v.iter().map(|c| c.abs()).max().unwrap_or(0);
            let negatives = v.iter().filter(|&&c| c < 0).count();
            (l1, max, negatives)
        };
        key(a).cmp(&key(b)).then_with(|| b.cmp(a))
    });
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    for v in candidates {
        if chosen.len() == n_relations {
            break;
        }
        let neg: Vec<i64> = v.iter().map(|c| -c).collect();
        if !chosen.contains(&neg) {
            chosen.push(v);
        }
    }
    chosen
}

fn padded_names(prefix: char, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

fn split(mut triples: Vec<Triple>, seed: u64, train_frac: f64, valid_frac: f64) -> (TripleSet, TripleSet, TripleSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    triples.shuffle(&mut rng);
    let n = triples.len();
    let n_train = ((n as f64) * train_frac).round() as usize;
    let n_valid = ((n as f64) * valid_frac).round() as usize;
    let test = triples.split_off((n_train + n_valid).min(n));
    let valid = triples.split_off(n_train.min(triples.len()));
    (TripleSet::new(Role::Train, triples), TripleSet::new(Role::Valid, valid), TripleSet::new(Role::Test, test))
}

/// Planted-lattice KG with the default offsets, split 80/10/10.
pub fn make_synthetic(n_entities: usize, n_relations: usize, grid_dim: usize, seed: u64) -> Result<LatticeKg> {
    if n_relations == 0 {
        return Err(Error::Config("synthetic KG needs at least one relation".into()));
    }
    if grid_dim == 0 {
        return Err(Error::Config("grid dimension must be positive".into()));
    }
    let offsets = default_offsets(n_relations, grid_dim);
    if offsets.len() < n_relations {
        return Err(Error::Config(format!(
            "only {} distinct offsets available in {grid_dim} dimensions",
            offsets.len()
        )));
    }
    make_synthetic_with_offsets(n_entities, grid_dim, offsets, seed)
}

/// Planted-lattice KG with caller-chosen offsets, split 80/10/10.
pub fn make_synthetic_with_offsets(
    n_entities: usize,
    grid_dim: usize,
    offsets: Vec<Vec<i64>>,
    seed: u64,
) -> Result<LatticeKg> {
    if n_entities < MIN_ENTITIES {
        return Err(Error::Config(format!("synthetic KG needs at least {MIN_ENTITIES} entities, got {n_entities}")));
    }
    if offsets.is_empty() {
        return Err(Error::Config("synthetic KG needs at least one relation".into()));
    }
    let triples = lattice_triples(n_entities, grid_dim, &offsets)?;
    if triples.len() < MIN_TRIPLES {
        return Err(Error::Config(format!("parameters produce {} triples, fewer than {MIN_TRIPLES}", triples.len())));
    }
    let vocab = Vocabulary::from_names(padded_names('e', n_entities), padded_names('r', offsets.len()));
    let (train, valid, test) = split(triples, seed, 0.8, 0.1);
    Ok(LatticeKg { vocab, train, valid, test, offsets, positions: lattice_positions(n_entities, grid_dim) })
}

/// Parameters of the literal-informative cluster generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterKgParams {
    pub n_entities: usize,
    pub n_clusters: usize,
    pub n_relations: usize,
    /// Distinct tails sampled per `(head, relation)` pair.
    pub tails_per_query: usize,
    pub literal_dim: usize,
    /// Half-width of the uniform noise added to each cluster code.
    pub literal_noise: f64,
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub seed: u64,
}

impl Default for ClusterKgParams {
    fn default() -> Self {
        Self {
            n_entities: 200,
            n_clusters: 20,
            n_relations: 4,
            tails_per_query: 2,
            literal_dim: 16,
            literal_noise: 0.1,
            train_fraction: 0.2,
            valid_fraction: 0.1,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterKg {
    pub vocab: Vocabulary,
    pub train: TripleSet,
    pub valid: TripleSet,
    pub test: TripleSet,
    /// Cluster id per entity index.
    pub clusters: Vec<usize>,
    pub entity_literals: Matrix<f32>,
    pub relation_literals: Matrix<f32>,
}

/// Cluster of `e` is `e mod n_clusters`; relation `r` links cluster `c` to
/// cluster `(c + r + 1) mod n_clusters`. Literal vectors are a per-cluster
/// random code plus small noise.
pub fn make_cluster_kg(p: &ClusterKgParams) -> Result<ClusterKg> {
    if p.n_entities < MIN_ENTITIES || p.n_clusters < 2 || p.n_clusters > p.n_entities {
        return Err(Error::Config(format!("cluster KG needs ≥ {MIN_ENTITIES} entities and 2 ≤ clusters ≤ entities")));
    }
    if p.n_relations == 0 || p.n_relations >= p.n_clusters {
        return Err(Error::Config("cluster KG needs 1 ≤ relations < clusters".into()));
    }
    let min_cluster = p.n_entities / p.n_clusters;
    if p.tails_per_query == 0 || p.tails_per_query > min_cluster {
        return Err(Error::Config(format!("tails per query must lie in 1..={min_cluster}")));
    }
    if p.literal_dim == 0 || !(p.train_fraction > 0.0 && p.train_fraction + p.valid_fraction < 1.0) {
        return Err(Error::Config("literal dim must be positive and split fractions proper".into()));
    }
    let clusters: Vec<usize> = (0..p.n_entities).map(|e| e % p.n_clusters).collect();
    let members: Vec<Vec<usize>> =
        (0..p.n_clusters).map(|c| (0..p.n_entities).filter(|&e| clusters[e] == c).collect()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(p.seed, 1));
    let mut triples = Vec::new();
    for (h, &cluster) in clusters.iter().enumerate() {
        for r in 0..p.n_relations {
            let target = (cluster + r + 1) % p.n_clusters;
            for &t in members[target].choose_multiple(&mut rng, p.tails_per_query) {
                triples.push(Triple::new(h, r, t));
            }
        }
    }

    let unit = Uniform::new_inclusive(-1.0f64, 1.0);
    let mut code_rng = ChaCha8Rng::seed_from_u64(sub_seed(p.seed, 2));
    let codes = Matrix::<f64>::from_fn(p.n_clusters, p.literal_dim, |_, _| unit.sample(&mut code_rng));
    let entity_literals = Matrix::from_fn(p.n_entities, p.literal_dim, |e, j| {
        (codes.get(clusters[e], j) + p.literal_noise * unit.sample(&mut code_rng)) as f32
    });
    let relation_literals = Matrix::from_fn(p.n_relations, p.literal_dim, |_, _| unit.sample(&mut code_rng) as f32);

    let vocab = Vocabulary::from_names(padded_names('e', p.n_entities), padded_names('r', p.n_relations));
    let (train, valid, test) = split(triples, sub_seed(p.seed, 3), p.train_fraction, p.valid_fraction);
    Ok(ClusterKg { vocab, train, valid, test, clusters, entity_literals, relation_literals })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over all ordered entity pairs.
    fn brute_force(n: usize, d: usize, offsets: &[Vec<i64>]) -> Vec<Triple> {
        let pos = lattice_positions(n, d);
        let mut out = Vec::new();
        for (r, off) in offsets.iter().enumerate() {
            for h in 0..n {
                for t in 0..n {
                    if (0..d).all(|k| pos[t][k] - pos[h][k] == off[k]) {
                        out.push(Triple::new(h, r, t));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn two_by_two_grid_has_two_triples() {
        let t = lattice_triples(4, 2, &[vec![1, 0]]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t, brute_force(4, 2, &[vec![1, 0]]));
        assert_eq!(t, vec![Triple::new(0, 0, 1), Triple::new(2, 0, 3)]);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (n, d, r) in [(20, 2, 3), (50, 3, 4), (37, 2, 2), (30, 1, 2)] {
            let offs = default_offsets(r, d);
            assert_eq!(lattice_triples(n, d, &offs).unwrap(), brute_force(n, d, &offs));
        }
    }

    #[test]
    fn zero_offset_rejected() {
        assert!(lattice_triples(25, 2, &[vec![0, 0]]).is_err());
        assert!(make_synthetic_with_offsets(25, 2, vec![vec![0, 0]], 1).is_err());
    }

    #[test]
    fn too_few_triples_rejected() {
        assert!(make_synthetic(4, 1, 2, 0).is_err());
        // 20 entities on a line, offset 15 → 5 triples
        assert!(make_synthetic_with_offsets(20, 1, vec![vec![15]], 0).is_err());
    }

    #[test]
    fn default_offsets_start_with_axes() {
        assert_eq!(default_offsets(3, 2), vec![vec![1, 0], vec![0, 1], vec![1, 1]]);
        let offs = default_offsets(8, 3);
        for v in &offs {
            let neg: Vec<i64> = v.iter().map(|c| -c).collect();
            assert!(!offs.contains(&neg));
        }
    }

    #[test]
    fn planted_offsets_hold_and_split_is_complete() {
        let kg = make_synthetic(200, 2, 2, 11).unwrap();
        let all: Vec<Triple> =
            [&kg.train, &kg.valid, &kg.test].iter().flat_map(|s| s.triples().iter().copied()).collect();
        for t in &all {
            for k in 0..2 {
                assert_eq!(kg.positions[t.tail][k] - kg.positions[t.head][k], kg.offsets[t.relation][k]);
            }
        }
        let mut sorted = all.clone();
        sorted.sort();
        let mut expect = lattice_triples(200, 2, &kg.offsets).unwrap();
        expect.sort();
        assert_eq!(sorted, expect);
        let n = all.len();
        assert_eq!(kg.train.len(), (n as f64 * 0.8).round() as usize);
        assert_eq!(kg.valid.len(), (n as f64 * 0.1).round() as usize);
    }

    #[test]
    fn seeded_output_is_identical() {
        let a = make_synthetic(60, 3, 2, 5).unwrap();
        let b = make_synthetic(60, 3, 2, 5).unwrap();
        assert_eq!(a.train.triples(), b.train.triples());
        assert_eq!(a.test.triples(), b.test.triples());
        let c = make_synthetic(60, 3, 2, 6).unwrap();
        assert_ne!(a.train.triples(), c.train.triples());
    }

    #[test]
    fn names_sort_like_indices() {
        let kg = make_synthetic(120, 2, 2, 0).unwrap();
        assert_eq!(kg.vocab.entity_name(7), Some("e007"));
        assert_eq!(kg.vocab.entity_id("e119"), Some(119));
    }

    #[test]
    fn cluster_links_follow_rule() {
        let p = ClusterKgParams::default();
        let kg = make_cluster_kg(&p).unwrap();
        for s in [&kg.train, &kg.valid, &kg.test] {
            for t in s.triples() {
                assert_eq!(kg.clusters[t.tail], (kg.clusters[t.head] + t.relation + 1) % p.n_clusters);
            }
        }
        let total = kg.train.len() + kg.valid.len() + kg.test.len();
        assert_eq!(total, p.n_entities * p.n_relations * p.tails_per_query);
        assert_eq!(kg.entity_literals.shape(), (p.n_entities, p.literal_dim));
    }
}
