//! Link prediction: head/tail ranking in raw and filtered settings, Mean
//! Rank and Hits@10.

mod rank;
mod report;
mod scorer;

pub use rank::{rank_among, rank_query, rank_query_both, Query, QueryRanks, Side};
pub use report::{evaluate, write_ranks_tsv, EvalOptions, EvalReport, Evaluation, SideMetrics};
pub use scorer::{FnScorer, TranslationScorer, TripleScorer};
