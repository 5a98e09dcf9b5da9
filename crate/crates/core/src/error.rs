use std::path::PathBuf;

use thiserror::Error;

use crate::catalog::SlotId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}:{line}: {reason}")]
    Row {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("duplicate billboard id `{id}` (line {line})")]
    DuplicateBillboard { id: String, line: u64 },

    #[error("invalid horizon: {0}")]
    Horizon(String),

    #[error("probability {prob} for slot {slot}, user `{user}` is outside (0, 1]")]
    ProbabilityOutOfRange {
        slot: SlotId,
        user: String,
        prob: f64,
    },

    #[error("no explicit probability for exposed pair (slot {slot}, user `{user}`)")]
    MissingProbability { slot: SlotId, user: String },

    #[error("unknown slot id {0}")]
    UnknownSlot(SlotId),

    #[error("slot {0} is already in the set")]
    AlreadyInSet(SlotId),

    #[error("edge weight needs two distinct slots, got {0} twice")]
    SelfEdge(SlotId),

    #[error("divergence needs a non-empty sample set")]
    EmptySample,

    #[error("slot {0} is itself in the sample set")]
    InSample(SlotId),

    #[error("invalid pruning parameters: {0}")]
    PruneParams(String),

    #[error("brute force would enumerate {combinations} subsets (limit {limit})")]
    OracleTooLarge { combinations: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
