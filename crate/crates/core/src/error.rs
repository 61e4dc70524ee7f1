use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("flux Jacobian is singular: 1 + w2 = {0} <= 0")]
    Singular(f64),

    #[error("strict hyperbolicity lost: discriminant {0} <= 0")]
    HyperbolicityLoss(f64),

    #[error("logarithm undefined: 1 + u~ = {0} <= 0")]
    LogDomain(f64),

    #[error("state ({w1}, {w2}) left the amplitude ball of radius {rho0}")]
    AmplitudeGuard { w1: f64, w2: f64, rho0: f64 },

    #[error("amplitude guard aborted strip {strip}: {source}")]
    GuardAbort { strip: usize, source: Box<Error> },

    #[error("parameter regime invalid: {0}")]
    Regime(String),

    #[error("sample {index} is not positive ({value})")]
    NonPositive { index: usize, value: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("wave speed {speed} violates the mesh ratio {limit}")]
    Cfl { speed: f64, limit: f64 },

    #[error("nontrivial wave of strength {strength:e} reached the boundary at strip {strip}")]
    BoundaryInfluence { strip: usize, strength: f64 },

    #[error("initial data violate the decay hypothesis: r = {0} <= 3/2")]
    DecayHypothesis(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors raised by the amplitude or mesh-ratio guards.
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            Error::AmplitudeGuard { .. }
                | Error::GuardAbort { .. }
                | Error::Cfl { .. }
                | Error::BoundaryInfluence { .. }
                | Error::Singular(_)
                | Error::HyperbolicityLoss(_)
                | Error::LogDomain(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
