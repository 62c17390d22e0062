//! Exact local machinery for p-adic L-functions of GL(2n) with Shalika models.
//!
//! The crate is organized in layers:
//!
//! * [`padic`] - truncated p-adic numbers and matrices over them, with exact
//!   valuation tracking and Iwasawa decomposition;
//! * [`scalar`] - the exact coefficient ring `Q(zeta_N)[u]/(u^2 - p)` used for
//!   character values, Gauss sums and Euler factors, together with its complex
//!   and p-adic embeddings;
//! * [`chars`] - multiplicative characters of `Q_p^*`, the fixed additive
//!   character of conductor `Z_p`, and Gauss sums;
//! * [`reps`] - unramified principal-series data, Satake parameters,
//!   stabilizations, the delta-map calculus, ordinarity and criticality tests;
//! * [`zeta`] - a brute-force finite-sum oracle for the local Shalika
//!   distribution and the vanishing/support lemmas behind it;
//! * [`euler`] - closed-form local L-factors and modified Euler factors, and
//!   the interpolation right-hand side;
//! * [`measure`] - finite-level p-adic measures on `(Z/p^m)^*` built by
//!   Fourier inversion from interpolation moments, with boundedness
//!   diagnostics and the resulting one-variable p-adic L-function.
//!
//! All arithmetic on the exact path is performed over big rationals; floating
//! point appears only in the complex embedding and in truncated-tail bounds.

pub mod chars;
pub mod error;
pub mod euler;
pub mod measure;
pub mod padic;
pub mod reps;
pub mod sample;
pub mod scalar;
pub mod zeta;

mod cyc;

pub use chars::{AddChar, MultChar};
pub use error::Error;
pub use padic::{PAdicMatrix, PAdicNum};
pub use reps::{PSData, Stabilization, TestFunction, WeightData};
pub use scalar::{CycScalar, HalfInt, LocalRingElem, OrdVal};
pub use zeta::{OracleResult, Truncation};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
