//! Shared error types for contract violations and evaluation failures.

use thiserror::Error;

use crate::order::Layout;

/// Errors raised when an operation's preconditions are violated or an
/// evaluation cannot produce a finite result.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("layout mismatch: {left} vs {right}")]
    LayoutMismatch { left: Layout, right: Layout },

    #[error("cone order has {signs} species signs but state layout has {species} species")]
    SpeciesMismatch { signs: usize, species: usize },

    #[error("{what} must not be empty")]
    EmptyInput { what: &'static str },

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("evaluation error in component {component}: {message}")]
    Eval { component: usize, message: String },

    #[error("reaction arity {arity} does not match {expected} diffusion coefficients")]
    ArityMismatch { arity: usize, expected: usize },

    #[error("power iteration did not converge after {iterations} iterations at horizon {horizon} (last estimate {last_estimate}); dominant eigenvalue may be a complex pair")]
    SpectralNotConverged {
        iterations: usize,
        horizon: f64,
        last_estimate: f64,
    },

    #[error("integration ended with {flag:?} at t = {t} before the requested horizon")]
    FlowIncomplete {
        flag: crate::flow::TerminalFlag,
        t: f64,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
