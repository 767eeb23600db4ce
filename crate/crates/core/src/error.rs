use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular: pivot {pivot} has magnitude {magnitude:e}")]
    Singular { pivot: usize, magnitude: f64 },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix 1-norm {norm:e} exceeds the exponential range")]
    Overflow { norm: f64 },

    #[error(
        "logarithm branch cut: eigenvalue {re:e}{im:+e}i lies on the closed negative real axis"
    )]
    BranchCut { re: f64, im: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("group axiom violated: {0}")]
    GroupAxiom(String),

    #[error("kind mismatch: {0}")]
    KindMismatch(String),

    #[error("non-abelian target cannot carry {0}")]
    NonAbelian(String),

    /// A coboundary value fell outside the logarithm chart; the defect is at
    /// least the chart radius there.
    #[error("defect outside the chart domain at tuple {tuple}: {source}")]
    Chart {
        tuple: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that mean the input is too far from a cocycle for
    /// the exponential chart.
    pub fn is_chart_error(&self) -> bool {
        matches!(self, Error::Chart { .. } | Error::BranchCut { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
