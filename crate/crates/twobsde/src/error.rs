//! Error type shared by all solvers.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid control set: need 0 < a_lo <= a_hi, got [{a_lo}, {a_hi}]")]
    InvalidControlSet { a_lo: f64, a_hi: f64 },

    #[error("control grid needs >= 2 points to span [{a_lo}, {a_hi}], got {grid_size}")]
    ControlGridTooSmall {
        a_lo: f64,
        a_hi: f64,
        grid_size: usize,
    },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("CFL violation: p_a = a*dt/dx^2 = {p_a} > 1/2 (a = {a}, dt = {dt}, dx = {dx})")]
    CflViolation { a: f64, dt: f64, dx: f64, p_a: f64 },

    #[error(
        "monotonicity violation: margin = {margin} < 0 \
         (lip_z = {lip_z}, dx = {dx}, a_lo = {a_lo}); refusing to run"
    )]
    MonotonicityViolation {
        margin: f64,
        lip_z: f64,
        dx: f64,
        a_lo: f64,
    },

    #[error("implicit step is not a contraction: lip_y * dt = {product} >= 1")]
    NoContraction { product: f64 },

    #[error("path tree too large: n = {n} steps exceeds the oracle cap {max}")]
    TreeTooLarge { n: usize, max: usize },

    #[error("density domain violation: need a0 <= a <= 3*a0, got a = {a}, a0 = {a0}")]
    DomainViolation { a: f64, a0: f64 },

    #[error("generator depends on z; this scheme requires a z-independent generator")]
    ZDependentGenerator,

    #[error("increment family {family} is not supported by {solver}")]
    UnsupportedFamily {
        family: &'static str,
        solver: &'static str,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
