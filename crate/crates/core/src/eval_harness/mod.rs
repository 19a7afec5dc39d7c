//! Merge safety metrics and batch evaluation of greedy policies.

mod evaluation;
mod metrics;
mod replay;
mod sweep;

pub use evaluation::{
    evaluate_seed, read_records_csv, run_episode, run_evaluation, summarize, write_records_csv,
    Density, DensityConfig, Evaluation, EvaluationSummary, MergeRecord,
    EVAL_UNCOOPERATIVE_FRACTION, POST_MERGE_SECONDS,
};
pub use metrics::{
    detect_conflict, gap_ratio, ttc_below_threshold, ttc_leading, ttc_trailing,
    CONFLICT_TAIL_SECONDS, GAP_RATIO_THRESHOLD, TTC_THRESHOLD,
};
pub use replay::{replay_episode, Replay};
pub use sweep::{density_sweep, svo_sweep, SweepColumn, SweepTable};
