//! Exact local formulas for derivatives of anticyclotomic Katz p-adic
//! L-functions over imaginary quadratic fields, and a desk-scale check of
//! the mu-invariant formula for them.

pub mod arith;
pub mod cm;
pub mod cyclo;
pub mod error;
pub mod fourier;
pub mod hecke;
pub mod local;
pub mod par;
pub mod padic;
pub mod quad;

pub use error::{Error, HypothesisError, Result};
pub use padic::{PadicNum, Valuation};
