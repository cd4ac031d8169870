use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("construction impossible at level {level}: need {need} elements, only {have} available")]
    ConstructionImpossible { level: usize, need: String, have: String },
    #[error("insufficient depth: need {need} letters, sets cover {have}")]
    InsufficientDepth { need: usize, have: usize },
    #[error("no valid n at stage {stage}: {detail}")]
    NoValidN { stage: usize, detail: String },
    #[error("table exhausted at stage {stage}: {detail}")]
    TableExhausted { stage: usize, detail: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid f2: {0}")]
    InvalidF2(String),
    #[error("insufficient data: {have} points, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("parameters too small: {0}")]
    ParamsTooSmall(String),
    #[error("generator mismatch at k = {k}: measured {measured} outside [{lo}, {hi}]")]
    GeneratorMismatch {
        k: usize,
        measured: String,
        lo: String,
        hi: String,
    },
    #[error("{stage}: {source}")]
    InStage { stage: String, source: Box<Error> },
}

impl Error {
    /// Attributes an error to a named pipeline stage.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::InStage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
