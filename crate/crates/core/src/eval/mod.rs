//! Answer quality metrics and the sampled multi-run evaluation protocol.

mod metrics;
mod protocol;

pub use metrics::{answer_cosine, bleu, normalize_tokens, token_prf, TokenPrf, DEFAULT_BLEU_ORDER};
pub use protocol::{
    compare_configs, run_eval, summarize, AnswerSystem, Comparison, ComparisonRow, EvalConfig, ItemRecord, MeanStd,
    Metric, MetricReport, MetricStats, RunSummary, MISSING_CELL,
};
