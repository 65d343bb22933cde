use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {x} outside the admissible domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("derivative requested at kink x = {at} (left {left}, right {right})")]
    Kink { at: f64, left: f64, right: f64 },

    #[error("tariff pair ({theta}, {theta_star}) outside the box [{lo}, 1]")]
    TariffOutOfBox { theta: f64, theta_star: f64, lo: f64 },

    #[error("no sign change of the currency balance on [{lo}, {hi}] (balance {f_lo:e} .. {f_hi:e})")]
    NoEquilibriumInBox { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("rate sensitivity denominator {0:e} is singular")]
    SingularDenominator(f64),

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    Integration { a: f64, b: f64, err: f64 },

    #[error("no Nash equilibrium found: {0}")]
    NoNashFound(String),

    #[error("stationary point ({e}, {theta}, {theta_star}) fails the second-order conditions {soc:?}")]
    SaddleRejected { e: f64, theta: f64, theta_star: f64, soc: (bool, bool) },

    #[error("closed-form solution ({e}, {theta}, {theta_star}) leaves the box")]
    Boundary { e: f64, theta: f64, theta_star: f64 },

    #[error("best-response iteration did not converge in {rounds} rounds")]
    NonConvergent { rounds: usize, trajectory: Vec<(f64, f64)> },

    #[error("every grid point of the best-response search failed")]
    BestResponseFailed,

    #[error("invalid commodity sample: {0}")]
    InvalidSample(String),
}
