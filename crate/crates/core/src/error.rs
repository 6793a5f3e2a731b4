use std::path::PathBuf;

use thiserror::Error;

/// A single violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigIssue {
    #[error("total quota {total} cannot host {ues} UEs")]
    InsufficientQuota { total: usize, ues: usize },
    #[error("BS {bs}: quota {quota} x {streams} streams exceeds {antennas} antennas")]
    StreamOverflow {
        bs: usize,
        quota: usize,
        streams: usize,
        antennas: usize,
    },
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {}", join_issues(.0))]
    InvalidConfig(Vec<ConfigIssue>),

    #[error("scenario file line {line}: {message}")]
    ScenarioParse { line: usize, message: String },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("channel has rank {rank}, fewer than the {requested} requested streams")]
    RankDeficient { rank: usize, requested: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("covariance is not positive definite for UE {ue} on BS {bs}")]
    NumericalBreakdown { ue: usize, bs: usize },

    #[error("UE {ue} is not served by BS {bs}")]
    NotServing { ue: usize, bs: usize },

    #[error("infeasible activation: {0}")]
    InfeasibleActivation(String),

    #[error("UE {0} was rejected by every BS")]
    QuotaExhaustion(usize),

    #[error("no improvement verdict after {0} rounds")]
    RoundLimitExceeded(usize),

    #[error("{count} feasible assignments exceed the enumeration budget of {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("cannot summarise an empty group: {0}")]
    EmptyGroup(String),

    #[error("empirical distribution needs at least one sample")]
    EmptySamples,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the experiment runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::ScenarioParse { .. } => 2,
            Error::BudgetExceeded { .. } => 3,
            Error::Io { .. } | Error::Json(_) => 4,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
