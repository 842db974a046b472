use thiserror::Error;

/// Errors produced anywhere in the simulation, signature or clustering stack.
#[derive(Debug, Error)]
pub enum KsbmError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integration diverged: non-finite state after t = {last_valid_time} s")]
    Diverged { last_valid_time: f64 },

    #[error("no phase locking possible: arcsin argument {argument} outside [-1, 1]")]
    NoLocking { argument: f64 },

    #[error("storage cap exceeded: {requested} entries requested, cap is {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("degenerate clustering: {0}")]
    Degenerate(String),

    #[error("unknown reference: {0}")]
    UnknownReference(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<KsbmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl KsbmError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        KsbmError::Parameter(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            KsbmError::Stage { source, .. } => source.is_numerical(),
            other => matches!(
                other,
                KsbmError::Diverged { .. } | KsbmError::NoLocking { .. } | KsbmError::Degenerate(_)
            ),
        }
    }

    /// Innermost error below any stage tags.
    pub fn root(&self) -> &KsbmError {
        match self {
            KsbmError::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at(self, stage: &'static str) -> Self {
        KsbmError::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, KsbmError>;
