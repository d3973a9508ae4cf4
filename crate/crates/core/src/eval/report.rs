use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::data::{KnownTriples, TripleSet, Vocabulary};
use crate::error::{Error, Result};

use super::rank::{rank_query_both, Query, QueryRanks, Side};
use super::scorer::TripleScorer;

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Worker threads for scoring; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Mean Rank and Hits@10 in both settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideMetrics {
    pub queries: usize,
    pub mr_raw: f64,
    pub mr_filtered: f64,
    pub hits10_raw: f64,
    pub hits10_filtered: f64,
}

impl SideMetrics {
    pub fn from_ranks<'a>(ranks: impl IntoIterator<Item = &'a QueryRanks>) -> Self {
        let (mut n, mut raw, mut filt, mut h_raw, mut h_filt) = (0usize, 0u64, 0u64, 0usize, 0usize);
        for r in ranks {
            n += 1;
            raw += r.raw as u64;
            filt += r.filtered as u64;
            h_raw += usize::from(r.raw <= 10);
            h_filt += usize::from(r.filtered <= 10);
        }
        if n == 0 {
            return Self { queries: 0, mr_raw: 0.0, mr_filtered: 0.0, hits10_raw: 0.0, hits10_filtered: 0.0 };
        }
        let n_f = n as f64;
        Self {
            queries: n,
            mr_raw: raw as f64 / n_f,
            mr_filtered: filt as f64 / n_f,
            hits10_raw: h_raw as f64 / n_f,
            hits10_filtered: h_filt as f64 / n_f,
        }
    }

    fn write_json(&self, out: &mut String) {
        write!(
            out,
            "{{\"mr_raw\":{:.4},\"mr_filtered\":{:.4},\"hits10_raw\":{:.4},\"hits10_filtered\":{:.4}}}",
            self.mr_raw, self.mr_filtered, self.hits10_raw, self.hits10_filtered
        )
        .expect("write to String");
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub queries: usize,
    pub head: SideMetrics,
    pub tail: SideMetrics,
    pub all: SideMetrics,
}

impl EvalReport {
    pub fn from_ranks(ranks: &[QueryRanks]) -> Self {
        Self {
            queries: ranks.len(),
            head: SideMetrics::from_ranks(ranks.iter().filter(|r| r.query.side == Side::Head)),
            tail: SideMetrics::from_ranks(ranks.iter().filter(|r| r.query.side == Side::Tail)),
            all: SideMetrics::from_ranks(ranks),
        }
    }

    /// `{"queries":…,"head":{…},"tail":{…},"all":{…}}`, floats at four decimals.
    pub fn to_json(&self) -> String {
        let mut s = format!("{{\"queries\":{},\"head\":", self.queries);
        self.head.write_json(&mut s);
        s.push_str(",\"tail\":");
        self.tail.write_json(&mut s);
        s.push_str(",\"all\":");
        self.all.write_json(&mut s);
        s.push('}');
        s
    }
}

/// Aggregate report plus the per-query ranks it was computed from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub ranks: Vec<QueryRanks>,
}

/// Head and tail queries for every test triple, ranked raw and filtered
/// against `known` (normally train ∪ valid ∪ test).
pub fn evaluate<S: TripleScorer + ?Sized>(
    scorer: &S,
    test: &TripleSet,
    known: &KnownTriples,
    options: &EvalOptions,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let queries: Vec<Query> =
        test.triples().iter().flat_map(|&t| [Query::new(t, Side::Head), Query::new(t, Side::Tail)]).collect();
    let run = || {
        queries
            .par_iter()
            .map_init(Vec::new, |buf, q| rank_query_both(scorer, q, known, buf))
            .collect::<Result<Vec<_>>>()
    };
    let ranks = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} evaluation threads: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(Evaluation { report: EvalReport::from_ranks(&ranks), ranks })
}

/// Per-query sidecar: `head⇥relation⇥tail⇥side⇥raw⇥filtered`.
pub fn write_ranks_tsv(path: &Path, ranks: &[QueryRanks], vocab: &Vocabulary) -> Result<()> {
    let mut s = String::from("head\trelation\ttail\tside\traw_rank\tfiltered_rank\n");
    for r in ranks {
        let t = r.query.triple;
        let name = |n: Option<&str>| n.unwrap_or("?").to_owned();
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            name(vocab.entity_name(t.head)),
            name(vocab.relation_name(t.relation)),
            name(vocab.entity_name(t.tail)),
            match r.query.side {
                Side::Head => "head",
                Side::Tail => "tail",
            },
            r.raw,
            r.filtered
        )
        .expect("write to String");
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Role, Triple};
    use crate::eval::FnScorer;

    #[test]
    fn perfect_scorer() {
        let test = TripleSet::new(Role::Test, [Triple::new(0, 0, 1), Triple::new(2, 0, 3)]);
        let truth = KnownTriples::from_sets([&test]);
        let scorer = FnScorer::new(5, 1, |t: Triple| if truth.contains(&t) { 0.0 } else { 1.0 });
        let ev = evaluate(&scorer, &test, &truth, &EvalOptions::default()).unwrap();
        assert_eq!(ev.report.queries, 4);
        assert_eq!(ev.report.all.mr_raw, 1.0);
        assert_eq!(ev.report.all.mr_filtered, 1.0);
        assert_eq!(ev.report.all.hits10_raw, 1.0);
        assert_eq!(ev.report.all.hits10_filtered, 1.0);
    }

    #[test]
    fn constant_scorer_ranks_mid_tie() {
        let test = TripleSet::new(Role::Test, [Triple::new(0, 0, 1), Triple::new(50, 0, 100)]);
        let scorer = FnScorer::new(101, 1, |_| 3.0);
        let ev = evaluate(&scorer, &test, &KnownTriples::default(), &EvalOptions::default()).unwrap();
        assert!(ev.ranks.iter().all(|r| r.raw == 51 && r.filtered == 51));
        assert_eq!(ev.report.all.mr_raw, 51.0);
        assert_eq!(ev.report.all.hits10_raw, 0.0);
    }

    #[test]
    fn json_layout_and_rounding() {
        let m = SideMetrics {
            queries: 3,
            mr_raw: 2.0 / 3.0 + 1.0,
            mr_filtered: 1.0,
            hits10_raw: 0.5,
            hits10_filtered: 1.0,
        };
        let r = EvalReport { queries: 6, head: m, tail: m, all: m };
        let j = r.to_json();
        assert!(j.starts_with(r#"{"queries":6,"head":{"mr_raw":1.6667,"mr_filtered":1.0000,"hits10_raw":0.5000,"#));
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["all"]["hits10_filtered"], 1.0);
    }

    #[test]
    fn thread_count_does_not_change_ranks() {
        let test = TripleSet::new(Role::Test, (0..20).map(|i| Triple::new(i, i % 2, (i * 7) % 20)));
        let scorer = FnScorer::new(20, 2, |t: Triple| ((t.head * 31 + t.tail * 17 + t.relation) % 13) as f64);
        let known = KnownTriples::from_sets([&test]);
        let a = evaluate(&scorer, &test, &known, &EvalOptions { threads: Some(1) }).unwrap();
        let b = evaluate(&scorer, &test, &known, &EvalOptions { threads: Some(4) }).unwrap();
        assert_eq!(a.ranks, b.ranks);
        assert_eq!(a.report.to_json(), b.report.to_json());
    }

    #[test]
    fn empty_test_set_rejected() {
        let scorer = FnScorer::new(3, 1, |_| 0.0);
        let empty = TripleSet::new(Role::Test, []);
        assert!(evaluate(&scorer, &empty, &KnownTriples::default(), &EvalOptions::default()).is_err());
    }
}
