//! Concentration of the geometric-mean / arithmetic-mean ratio on norm spheres.
//!
//! The ratio `GM/AM = prod |x_i|^{alpha_i} / sum alpha_i |x_i|` is homogeneous of
//! degree zero, so its distribution under the uniform (surface) probability on the
//! level set `{sum a_i |x_i| = 1}` is a well-defined object. For weight families
//! with `sum a_i = n` this crate provides:
//!
//! * exact closed-form moments of the ratio on weighted l1 spheres and on the
//!   Euclidean sphere, evaluated stably in log space ([`moments`]);
//! * the standard weight-sequence constructions (equal, two-level, diverging)
//!   and their geometric-mean statistics ([`weights`]);
//! * Chebyshev tail machinery: moment-based levels, factor decompositions and
//!   optimized two-sided concentration certificates ([`bounds`]);
//! * uniform samplers for both sphere families plus streaming Monte Carlo
//!   estimation of the ratio distribution ([`sampling`], [`estimator`]).
//!
//! Everything is deterministic given a seed: sampling uses counter-mode streams
//! so parallel runs reproduce bit-identical statistics regardless of thread count.

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod moments;
pub mod sampling;
pub mod special;
pub mod sum;
pub mod weights;

pub use error::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
