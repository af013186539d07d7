use thiserror::Error;

use crate::register::BasisState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid register configuration: {0}")]
    Config(String),

    #[error("{n} qubits exceeds the cap of {cap} (dense 2^n x 2^n storage)")]
    ResourceCap { n: usize, cap: usize },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    #[error("basis state {state} is not part of this spectrum's basis")]
    StateOutsideBasis { state: BasisState },

    #[error("Breit-Wigner fit unavailable: {0}")]
    FitUnavailable(String),

    #[error("{model} model outside its domain: {reason}")]
    Domain { model: &'static str, reason: String },

    #[error("states {i} and {f} are not directly coupled")]
    NotCoupled { i: BasisState, f: BasisState },

    #[error("trajectory has no stored components; re-run evolve with component storage enabled")]
    ComponentsUnavailable,

    #[error("too few levels: need at least {needed}, got {got}")]
    TooFewLevels { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
