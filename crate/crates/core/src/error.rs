use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset is empty{0}")]
    EmptyDataset(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training diverged at iteration {iteration}: non-finite factor")]
    TrainingDiverged { iteration: u32 },
    #[error("insufficient data: need at least 2 paired observations, got {0}")]
    InsufficientData(usize),
    #[error("no evaluable users in fold {fold}")]
    NoEvaluableUsers { fold: usize },
    #[error("pair universe has {universe} pairs, fewer than the {requested} requested")]
    PairUniverseTooSmall { universe: u64, requested: usize },
    #[error("grid dimension `{0}` is empty")]
    EmptyDimension(&'static str),
    #[error("configuration is not part of the grid")]
    ConfigNotInGrid,
    #[error("missing metric store cell: config {config}, fold {fold}")]
    MissingCell { config: usize, fold: usize },
    #[error("no usable pairs left for analysis ({dropped} dropped, {failed} touching failed cells)")]
    NoUsablePairs { dropped: usize, failed: usize },
}
