use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Rigid-bounce operations require a downward incoming normal velocity.
    #[error("not an impact: vertical velocity must be negative, got ydot = {ydot}")]
    NotAnImpact { ydot: f64 },

    /// Simulation was started from a state with negative normal force.
    #[error("not in contact: normal force {lambda_n} < 0 at the initial state")]
    NotInContact { lambda_n: f64 },

    /// Bad configuration value or malformed config text.
    #[error("config error: {0}")]
    Config(String),

    /// Model parameters or field functions violate a structural requirement.
    #[error("model error: {0}")]
    Model(String),

    /// The Filippov convex coefficient is undefined (the fields do not
    /// straddle the switching surface transversally, e.g. at lambda_n = 0).
    #[error("singular sliding coefficient: (F1 - F2).grad(H) = {denominator}")]
    SingularAlpha { denominator: f64 },

    /// The integrator ran out of its step budget.
    #[error("integration exceeded {max_steps} steps")]
    MaxSteps { max_steps: usize },

    /// Newton iteration failed to find a two-fold point near the seed.
    #[error("no two-fold singularity near seed: {0}")]
    NoTwoFold(String),

    /// Bisection bracket endpoints do not straddle a sign change.
    #[error("bracket [{lo}, {hi}] does not straddle a sign change in H_F")]
    Bracket { lo: f64, hi: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input data (CSV, CLI values).
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable code, stable across releases; the CLI prints
    /// `error[<code>]: <message>` on a single line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotAnImpact { .. } => "not_an_impact",
            Error::NotInContact { .. } => "not_in_contact",
            Error::Config(_) => "config",
            Error::Model(_) => "model",
            Error::SingularAlpha { .. } => "singular_alpha",
            Error::MaxSteps { .. } => "max_steps",
            Error::NoTwoFold(_) => "no_two_fold",
            Error::Bracket { .. } => "bracket",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
