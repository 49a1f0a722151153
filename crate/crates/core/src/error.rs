use thiserror::Error;

/// Errors raised by simulation stages, scenario handling and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Content would leave the representable band `(-fs/2, +fs/2)`.
    #[error("bandwidth violation: content edge at {edge_hz:.6e} Hz exceeds representable limit {limit_hz:.6e} Hz")]
    Bandwidth { edge_hz: f64, limit_hz: f64 },

    #[error("polarization mismatch: expected {expected}, got {got}")]
    Polarization { expected: usize, got: usize },

    #[error("signals are incompatible: {0}")]
    Incompatible(String),

    #[error("grid violation: channels at {a_hz:.6e} Hz and {b_hz:.6e} Hz are spaced {spacing_hz:.6e} Hz, not a nonzero multiple of {grid_hz:.6e} Hz")]
    Grid {
        a_hz: f64,
        b_hz: f64,
        spacing_hz: f64,
        grid_hz: f64,
    },

    #[error("frequency plan: {0}")]
    FrequencyPlan(String),

    #[error("filter passband [{lo_hz:.6e}, {hi_hz:.6e}] Hz does not overlap signal content")]
    FilterDisjoint { lo_hz: f64, hi_hz: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("alignment failed: {0}")]
    Alignment(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by the scenario or its inputs rather than by execution.
    pub fn is_scenario_error(&self) -> bool {
        match self {
            Error::Scenario(_)
            | Error::FrequencyPlan(_)
            | Error::Grid { .. }
            | Error::Json(_)
            | Error::Io(_) => true,
            Error::Stage { source, .. } => source.is_scenario_error(),
            _ => false,
        }
    }
}

/// Attach a stage name to errors coming out of a pipeline step.
pub(crate) trait StageContext<T> {
    fn stage(self, name: &str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, name: &str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage: name.to_string(),
            source: Box::new(e),
        })
    }
}
