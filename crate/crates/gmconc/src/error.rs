//! Error types shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside a function's domain (non-positive, non-finite, ...).
    #[error("domain error: {name} = {value} is outside the domain ({requirement})")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// Dimension below the minimum of 2.
    #[error("dimension n = {n} is too small; need n >= 2")]
    DimensionTooSmall { n: usize },

    /// Two-level construction could not place its correction element.
    #[error(
        "two-level construction failed for n = {n}, M = {m}: \
         correction element {t} falls outside [{lo}, {hi}]"
    )]
    CorrectionOutOfRange {
        n: usize,
        m: f64,
        t: f64,
        lo: f64,
        hi: f64,
    },

    /// Growth function value incompatible with the diverging construction.
    #[error("growth function gives f({n}) = {value}; need 1 <= f(n) < n")]
    InvalidGrowth { n: usize, value: f64 },

    /// Moment exponent violates the hypothesis 1 + s*a_i > 0.
    #[error(
        "moment exponent s = {s} violates 1 + s*a_i > 0 at index {index} (a_i = {weight})"
    )]
    MomentHypothesis { s: f64, index: usize, weight: f64 },

    /// An operation that divides by s received s = 0.
    #[error("exponent s must be non-zero for {operation}")]
    ZeroExponent { operation: &'static str },

    /// The vector fed to the power-product minimum violates its sum constraint.
    #[error("sum constraint violated: sum = {sum} < required {required}")]
    SumConstraint { sum: f64, required: f64 },

    /// Optimizer could not certify a threshold on its search grid.
    #[error(
        "{side} optimization failed: best threshold {best_threshold} \
         did not meet target {target} on the search grid"
    )]
    OptimizationFailure {
        side: &'static str,
        best_threshold: f64,
        target: f64,
    },

    /// Operation requires a scalable weight family (equal / two-level / diverging).
    #[error("{operation} requires a scalable weight family, got {family}")]
    UnsupportedFamily {
        operation: &'static str,
        family: String,
    },

    /// A weight sequence failed validation.
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),
}
