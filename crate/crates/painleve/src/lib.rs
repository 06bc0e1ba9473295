//! Connection problem for `Φ'' = (Φ'² − 1) cot Φ + (1 − Φ')/x` with
//! `Φ(x) = x − a x² + O(x³)` at the origin.
//!
//! The crate integrates the one-parameter family, extracts the large-x
//! parameters of `Φ ≈ ±x + β ln x + γ`, and checks them against closed-form
//! connection formulas, the transformation to Painlevé V/III, and the
//! isomonodromy of an associated Lax pair.

pub mod asymfit;
pub mod connection;
pub mod critical;
pub mod error;
pub mod integrator;
pub mod monodromy;
pub(crate) mod ode;
pub mod powser;
pub mod seriesseed;
pub mod specfun;
pub mod transforms;

pub use error::{Error, Result};
