//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the exact-arithmetic layers.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// Division by zero or inversion of a non-invertible ring element.
    #[error("inversion of zero or non-invertible element")]
    NotInvertible,

    /// The order of the zero matrix is undefined.
    #[error("undefined order: zero matrix")]
    UndefinedOrder,

    /// A pivot could not be chosen at the working precision.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    /// A p-adic embedding needs more local digits than were computed.
    #[error("raise precision: {0}")]
    RaisePrecision(String),

    /// Input outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Root-of-unity order not of the supported shape d * p^B with d | p - 1.
    #[error("unsupported cyclotomic order {n} for p = {p}")]
    BadCycOrder { n: u64, p: u64 },

    /// An unramified local L-factor was evaluated at one of its poles.
    #[error("L-factor pole at the requested point")]
    LFactorPole,

    /// The Euler-factor denominator vanishes (non-regular parameter).
    #[error("non-regular parameter: Euler-factor denominator vanishes")]
    NonRegular,

    /// The convergence guard for truncated unramified sums failed.
    #[error("guard violation: {0}")]
    GuardViolation(String),

    /// The truncation window is too small for the requested computation.
    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),

    /// An L-value was requested that the provider does not contain.
    #[error("missing L-value for {0}")]
    MissingLValue(String),

    /// A measure tower failed a structural precondition.
    #[error("measure tower error: {0}")]
    Tower(String),
}
