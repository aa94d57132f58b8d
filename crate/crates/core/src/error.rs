use crate::grammar::Violation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid trajectory `{id}`: {reason}")]
    InvalidTrajectory { id: String, reason: String },

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("segments cover different intervals: [{a0}, {a1}] vs [{b0}, {b1}]")]
    IntervalMismatch { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("empty group")]
    EmptyGroup,

    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("training failed: {}", format_violations(.0))]
    TrainingFailed(Vec<Violation>),

    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("interval [{start}, {end}] is not aligned to the {unit} s unit grid")]
    Unaligned { start: f64, end: f64, unit: f64 },

    #[error("infeasible solution: {0}")]
    Infeasible(String),

    #[error("event `{0}` has no source-to-sink path")]
    InfeasibleEvent(String),

    #[error("cannot match an empty group")]
    UndefinedMatch,

    #[error("truth and prediction are not aligned: {0}")]
    Alignment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl ToString) -> Self {
        Error::Schema { path: path.into(), message: message.to_string() }
    }
}
