use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid client: {0}")]
    InvalidClient(String),
    #[error("invalid trip: {0}")]
    InvalidTrip(String),
    #[error("invalid price: {0}")]
    InvalidPrice(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty game set")]
    EmptyGameSet,
    #[error("insufficient history: game {index} has no preceding games")]
    InsufficientHistory { index: usize },
    #[error("expected {expected} own clients, got {got}")]
    OwnClientCount { expected: usize, got: usize },
    #[error("missing prediction for game {0}")]
    MissingPrediction(String),
    #[error("unknown game id(s): {0}")]
    UnknownGames(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("degenerate paired sample: differences have zero variance")]
    DegenerateSample,
    #[error("zero variance input")]
    ZeroVariance,
    #[error("rank-deficient design matrix")]
    RankDeficient,
    #[error("unknown predictor `{name}`; valid: {valid}")]
    UnknownPredictor { name: String, valid: String },
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
