//! Ranking metrics, assignment statistics and cross-replacement grids.

mod grid;
mod metrics;

use thiserror::Error;

pub use grid::{level_label, run_grid, GridConfig, GridReport};
pub use metrics::{
    accuracy_global, accuracy_local, assignment_distribution, evaluate_global, evaluate_local, mrr, score_corpus,
    AssignHistogram, MetricReport, CUMULATIVE_BUCKETS,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no ranks to average")]
    EmptyInput,
    #[error("ranks are 1-based")]
    BadRank,
    #[error(transparent)]
    Decoding(#[from] crate::decoding::DecodingError),
    #[error(transparent)]
    Assignment(#[from] crate::assignment::AssignmentError),
    #[error(transparent)]
    Symbols(#[from] crate::symbols::SymbolError),
    #[error(transparent)]
    Encoder(#[from] crate::encoders::EncoderError),
    #[error(transparent)]
    Train(#[from] crate::training::TrainError),
}
