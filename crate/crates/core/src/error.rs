use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid derivative order {0}; expected 1 or 2")]
    InvalidOrder(u32),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("energy minimization did not converge after {iterations} iterations (KKT residual {residual:.3e}, gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        gradient_norm: f64,
    },

    #[error("edge solver failed: {0}")]
    EdgeSolver(String),

    #[error("evaluation point {0} lies within {1:e} of the support")]
    NearSupport(Complex64, f64),

    #[error("evaluation point {0} collides with particle at {1}")]
    Collision(Complex64, f64),

    #[error("invalid kappa {kappa}: {reason}")]
    InvalidKappa { kappa: f64, reason: String },

    #[error("sampling domain is empty")]
    EmptyDomain,

    #[error("N = {0} exceeds the configured maximum {1}")]
    TooManyParticles(usize, usize),

    #[error("model has no differentiable potential: {0}")]
    NotDifferentiable(String),

    #[error("fourier route requires zero total mass, got {0:e}")]
    NonzeroMass(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("archive hash {found} does not match configuration hash {expected}")]
    HashMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
