use thiserror::Error;

/// Errors raised by scenario loading, the solvers and the controllers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("expression `{expr}`: {message}")]
    Expression { expr: String, message: String },
    #[error("sex ratio out of range: r = {0} (expected 0 < r < 1)")]
    SexRatio(f64),
    #[error("H1 violated: {0}")]
    Hypothesis(String),
    #[error("invalid rate `{name}` at a = {age}: {value}")]
    InvalidRate { name: String, age: f64, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("negative equilibrium: {0}")]
    NegativeEquilibrium(String),
    #[error("inner iteration diverged: {0}")]
    InnerDivergence(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("invalid reference: {0}")]
    InvalidReference(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("infeasible feedforward: P_FF = {p_ff} outside [{p_min}, {p_max}]")]
    InfeasibleFeedforward { p_ff: f64, p_min: f64, p_max: f64 },
    #[error("undefined Q(t): degenerate denominator Gamma + gamma - 2K = {0}")]
    DegenerateQ(f64),
    #[error("divergence under {controller} control at t = {t}: {detail}")]
    Divergence {
        controller: String,
        t: f64,
        detail: String,
    },
    #[error("positivity lost at t = {t}: {detail}")]
    Positivity { t: f64, detail: String },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoEquilibrium(_)
                | Error::NegativeEquilibrium(_)
                | Error::InnerDivergence(_)
                | Error::Divergence { .. }
                | Error::Positivity { .. }
                | Error::DegenerateQ(_)
                | Error::InfeasibleFeedforward { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
