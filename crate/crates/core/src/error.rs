use std::path::PathBuf;

use thiserror::Error;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Internal,
}

/// A topic whose seed ranking ran out before `d` non-gold passages were found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthShortfall {
    pub topic: String,
    pub needed: usize,
    pub available: usize,
}

#[derive(Error, Debug)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: duplicate {what}")]
    Duplicate { line: usize, what: String },

    #[error("line {line}: non-positive grade {grade} for ({topic}, {passage})")]
    NonPositiveGrade {
        line: usize,
        topic: String,
        passage: String,
        grade: i64,
    },

    #[error("line {line}: conflicting grades {first} and {second} for ({topic}, {passage})")]
    GradeConflict {
        line: usize,
        topic: String,
        passage: String,
        first: u32,
        second: u32,
    },

    #[error("run tag mismatch: expected {expected:?}, found {found:?}")]
    TagMismatch { expected: String, found: String },

    #[error("invalid identifier {0:?}: must be non-empty and contain no whitespace")]
    InvalidId(String),

    #[error("non-finite score for passage {0}")]
    NonFiniteScore(String),

    #[error("duplicate passage {passage} in ranked list for topic {topic}")]
    DuplicatePassage { topic: String, passage: String },

    #[error("collection is empty")]
    EmptyCollection,

    #[error("unknown passage {0}")]
    UnknownPassage(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("topic mismatch: expected {expected}, found {found}")]
    TopicMismatch { expected: String, found: String },

    #[error("run {system:?} shares no topics with the qrels")]
    NoTopicOverlap { system: String },

    #[error("duplicate system tag {0:?}")]
    DuplicateSystem(String),

    #[error("system orderings cover different system sets")]
    SystemSetMismatch,

    #[error("need at least 2 systems, got {0}")]
    TooFewSystems(usize),

    #[error("topic {0} has no judged passages")]
    EmptyTopic(String),

    #[error("seed ranking too shallow for {} topic(s), first: {}", .0.len(), describe_shortfall(.0))]
    InsufficientDepth(Vec<DepthShortfall>),

    #[error("missing second-stage external runs for {} (topic, passage) pair(s), first: {}", .0.len(), describe_pairs(.0))]
    MissingSecondStage(Vec<(String, String)>),

    #[error("rank {rank} exceeds fused ranking depth {available} for topic {topic}")]
    RankTooDeep {
        topic: String,
        rank: usize,
        available: usize,
    },

    #[error("nothing to sweep")]
    NothingToSweep,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index format error: {0}")]
    IndexFormat(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

fn describe_shortfall(v: &[DepthShortfall]) -> String {
    v.first()
        .map(|s| format!("{} (needed {}, had {})", s.topic, s.needed, s.available))
        .unwrap_or_default()
}

fn describe_pairs(v: &[(String, String)]) -> String {
    v.first()
        .map(|(t, p)| format!("({t}, {p})"))
        .unwrap_or_default()
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidParam(_) | Error::NothingToSweep | Error::Toml(_) => {
                ErrorClass::Config
            }
            Error::Json(_) => ErrorClass::Internal,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
