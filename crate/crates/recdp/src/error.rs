//! Exit-status classification.

use crate::io::DataError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Success = 0,
    Usage = 1,
    Data = 2,
    Training = 3,
}

/// Some sweep cells diverged; the rest of the sweep completed.
#[derive(Debug, thiserror::Error)]
#[error("{failed} of {total} cells failed to train")]
pub struct TrainingFailures {
    pub failed: usize,
    pub total: usize,
}

/// Maps an error chain to its exit status: data problems -> 2, training
/// failures -> 3, everything else (usage, configuration) -> 1.
pub fn classify(e: &anyhow::Error) -> ExitKind {
    use recdp_core::Error as Core;
    for cause in e.chain() {
        if cause.is::<TrainingFailures>() {
            return ExitKind::Training;
        }
        if cause.is::<DataError>() || cause.is::<std::io::Error>() {
            return ExitKind::Data;
        }
        if let Some(core) = cause.downcast_ref::<Core>() {
            return match core {
                Core::TrainingDiverged { .. } => ExitKind::Training,
                Core::EmptyDataset(_) | Core::InsufficientData(_) | Core::NoEvaluableUsers { .. } => ExitKind::Data,
                _ => ExitKind::Usage,
            };
        }
    }
    ExitKind::Usage
}
