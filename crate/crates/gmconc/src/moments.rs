//! Exact moments of the GM/AM ratio functional on both sphere families.
//!
//! On the weighted l1 sphere `{sum a_i |x_i| = 1}` the s-moment of
//! `prod |x_i|^{a_i s}` has the closed form
//!
//! ```text
//! E = Gamma(n) / Gamma((1+s) n) * prod_i Gamma(1 + a_i s) / a_i^{a_i s},
//! ```
//!
//! valid whenever `1 + s a_max > 0`. On the Euclidean sphere the analogue is
//! `(Gamma((1+s)/2) / Gamma(1/2))^n * Gamma(n/2) / Gamma((1+s) n/2)` for
//! `s > -1`. Both are computed as compensated sums of log-gamma terms; direct
//! gamma products overflow already near n = 170.

use serde::Serialize;

use crate::special::log_gamma_unchecked;
use crate::sum::KahanSum;
use crate::weights::WeightSequence;
use crate::{Error, Result};

/// A weighted moment request: which sphere (via its weights) and which
/// exponent. Valid whenever `1 + s * a_max > 0`.
#[derive(Debug, Clone, Copy)]
pub struct MomentQuery<'a> {
    pub weights: &'a WeightSequence,
    pub s: f64,
}

impl<'a> MomentQuery<'a> {
    pub fn new(weights: &'a WeightSequence, s: f64) -> Result<Self> {
        check_hypothesis(weights.a_max(), s)?;
        Ok(Self { weights, s })
    }

    pub fn evaluate(&self) -> Result<MomentResult> {
        exact_moment_weighted(self.weights, self.s)
    }
}

/// The result of a moment evaluation.
///
/// `normalized_root` is the scale-matched root `n * E^{1/(s n)}` in the
/// weighted case and `sqrt(n) * E^{1/(s n)}` in the Euclidean case — the
/// quantity directly comparable with the concentration centers. It is `None`
/// at s = 0, where the exponent degenerates; callers wanting the limit use
/// small |s|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentResult {
    /// ln E of the moment.
    pub log_moment: f64,
    /// `n * exp(log_moment / (s n))` (weighted) or
    /// `sqrt(n) * exp(log_moment / (s n))` (Euclidean); `None` when s = 0.
    pub normalized_root: Option<f64>,
}

fn check_exponent(s: f64) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::Domain {
            name: "s",
            value: s,
            requirement: "finite",
        });
    }
    Ok(())
}

/// Verify the moment hypothesis `1 + s a_i > 0` for every weight. The largest
/// weight is the binding one; errors name it.
pub(crate) fn check_hypothesis(a_max: f64, s: f64) -> Result<()> {
    check_exponent(s)?;
    if 1.0 + s * a_max <= 0.0 {
        return Err(Error::MomentHypothesis {
            s,
            index: 0,
            weight: a_max,
        });
    }
    Ok(())
}

/// Log-moment from run-length weights; hypothesis must already hold.
pub(crate) fn log_moment_weighted_runs(runs: &[(f64, u64)], n: u64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut acc = KahanSum::new();
    acc.add(log_gamma_unchecked(nf));
    acc.add(-log_gamma_unchecked((1.0 + s) * nf));
    for &(a, count) in runs {
        let term = log_gamma_unchecked(1.0 + a * s) - a * s * a.ln();
        acc.add(term * count as f64);
    }
    acc.total()
}

/// Exact s-moment of `prod |x_i|^{a_i s}` under the uniform probability on the
/// weighted l1 sphere of `weights`.
pub fn exact_moment_weighted(weights: &WeightSequence, s: f64) -> Result<MomentResult> {
    check_hypothesis(weights.a_max(), s)?;
    let n = weights.n();
    if s == 0.0 {
        return Ok(MomentResult {
            log_moment: 0.0,
            normalized_root: None,
        });
    }
    let log_moment = log_moment_weighted_runs(&weights.runs(), n as u64, s);
    let root = n as f64 * (log_moment / (s * n as f64)).exp();
    Ok(MomentResult {
        log_moment,
        normalized_root: Some(root),
    })
}

/// Exact s-moment of `prod |y_i|^s` under the uniform probability on the
/// Euclidean unit sphere in dimension n.
pub fn exact_moment_euclidean(n: usize, s: f64) -> Result<MomentResult> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n });
    }
    check_exponent(s)?;
    if s <= -1.0 {
        return Err(Error::Domain {
            name: "s",
            value: s,
            requirement: "> -1",
        });
    }
    if s == 0.0 {
        return Ok(MomentResult {
            log_moment: 0.0,
            normalized_root: None,
        });
    }
    let nf = n as f64;
    let mut acc = KahanSum::new();
    acc.add(nf * (log_gamma_unchecked((1.0 + s) / 2.0) - log_gamma_unchecked(0.5)));
    acc.add(log_gamma_unchecked(nf / 2.0));
    acc.add(-log_gamma_unchecked((1.0 + s) * nf / 2.0));
    let log_moment = acc.total();
    let root = nf.sqrt() * (log_moment / (s * nf)).exp();
    Ok(MomentResult {
        log_moment,
        normalized_root: Some(root),
    })
}

/// Log of the (n-1)-dimensional surface area of the weighted l1 sphere,
/// `ln( 2^n |a|_2 / (Gamma(n) prod a_i) )`, in the Hausdorff normalization
/// that gives the unit cube measure one.
pub fn log_sphere_area_weighted(weights: &WeightSequence) -> f64 {
    let n = weights.n() as f64;
    let mut norm_sq = KahanSum::new();
    let mut log_prod = KahanSum::new();
    for &(a, count) in &weights.runs() {
        norm_sq.add(a * a * count as f64);
        log_prod.add(a.ln() * count as f64);
    }
    n * std::f64::consts::LN_2 + 0.5 * norm_sq.total().ln()
        - log_gamma_unchecked(n)
        - log_prod.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{equal_weights, two_level_weights, WeightSequence};

    #[test]
    fn weighted_equal_n2_s1_is_one_sixth() {
        let w = equal_weights(2).unwrap();
        let m = exact_moment_weighted(&w, 1.0).unwrap();
        assert!((m.log_moment - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        // Same thing through the query type.
        let q = MomentQuery::new(&w, 1.0).unwrap();
        assert_eq!(q.evaluate().unwrap(), m);
        assert!(MomentQuery::new(&w, -1.0).is_err());
    }

    #[test]
    fn zero_exponent_gives_unit_moment() {
        let w = two_level_weights(10, 3.0).unwrap();
        let m = exact_moment_weighted(&w, 0.0).unwrap();
        assert_eq!(m.log_moment, 0.0);
        assert_eq!(m.normalized_root, None);
        let m = exact_moment_euclidean(7, 0.0).unwrap();
        assert_eq!(m.log_moment, 0.0);
        assert_eq!(m.normalized_root, None);
    }

    #[test]
    fn weighted_equal_n3_half_moment() {
        let w = equal_weights(3).unwrap();
        let m = exact_moment_weighted(&w, 0.5).unwrap();
        let expected = crate::special::log_gamma(3.0).unwrap()
            - crate::special::log_gamma(4.5).unwrap()
            + 3.0 * crate::special::log_gamma(1.5).unwrap();
        assert!((m.log_moment - expected).abs() < 1e-12);
    }

    #[test]
    fn euclidean_n2_s2_is_one_eighth() {
        let m = exact_moment_euclidean(2, 2.0).unwrap();
        assert!((m.log_moment - (1.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn euclidean_n4_s2_is_one_over_1920() {
        let m = exact_moment_euclidean(4, 2.0).unwrap();
        assert!((m.log_moment - (1.0f64 / 1920.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn hypothesis_violations_name_the_weight() {
        let w = equal_weights(2).unwrap();
        match exact_moment_weighted(&w, -1.0) {
            Err(Error::MomentHypothesis { weight, .. }) => assert_eq!(weight, 1.0),
            other => panic!("expected hypothesis error, got {other:?}"),
        }
        let w = two_level_weights(10, 4.0).unwrap();
        assert!(exact_moment_weighted(&w, -0.3).is_err()); // 1 - 0.3*4 < 0
        assert!(exact_moment_weighted(&w, -0.2).is_ok());
        assert!(exact_moment_euclidean(5, -1.0).is_err());
        assert!(exact_moment_weighted(&w, f64::NAN).is_err());
    }

    #[test]
    fn positive_moments_respect_the_am_gm_ceiling() {
        // On the sphere prod |x_i|^{a_i s} <= n^{-n s}, so ln E <= -n s ln n.
        for (w, s) in [
            (equal_weights(5).unwrap(), 0.7),
            (two_level_weights(10, 3.0).unwrap(), 1.5),
            (WeightSequence::custom(vec![1.5, 1.0, 0.5]).unwrap(), 0.25),
        ] {
            let n = w.n() as f64;
            let m = exact_moment_weighted(&w, s).unwrap();
            assert!(
                m.log_moment <= -n * s * n.ln() + 1e-9,
                "{:?} s={s}: {} vs {}",
                w.family(),
                m.log_moment,
                -n * s * n.ln()
            );
        }
    }

    #[test]
    fn log_moment_is_convex_in_s() {
        for w in [equal_weights(5).unwrap(), two_level_weights(10, 2.0).unwrap()] {
            let h = 0.05;
            let values: Vec<f64> = (0..47)
                .map(|i| -0.3 + i as f64 * h)
                .map(|s| exact_moment_weighted(&w, s).unwrap().log_moment)
                .collect();
            for t in values.windows(3) {
                let second_diff = t[2] - 2.0 * t[1] + t[0];
                assert!(second_diff >= -1e-9, "second difference {second_diff}");
            }
        }
    }

    #[test]
    fn moment_is_permutation_invariant() {
        let a = exact_moment_weighted(
            &WeightSequence::custom(vec![0.5, 2.0, 0.5, 1.0]).unwrap(),
            0.8,
        )
        .unwrap();
        let b = exact_moment_weighted(
            &WeightSequence::custom(vec![1.0, 0.5, 2.0, 0.5]).unwrap(),
            0.8,
        )
        .unwrap();
        assert_eq!(a.log_moment, b.log_moment);
    }

    #[test]
    fn normalized_root_approaches_the_center_for_small_s() {
        let w = equal_weights(100_000).unwrap();
        for s in [0.01, -0.01] {
            let root = exact_moment_weighted(&w, s)
                .unwrap()
                .normalized_root
                .unwrap();
            assert!(
                (root - 0.561459).abs() / 0.561459 < 0.02,
                "s = {s}: root = {root}"
            );
        }
    }

    #[test]
    fn sphere_areas_match_polytope_geometry() {
        // n=2: the diamond with vertices (+-1, 0), (0, +-1) has perimeter 4 sqrt(2).
        let w = equal_weights(2).unwrap();
        let area = log_sphere_area_weighted(&w).exp();
        assert!((area - 4.0 * 2.0f64.sqrt()).abs() < 1e-12);

        // n=3: the octahedron boundary is 8 equilateral triangles of area sqrt(3)/2.
        let w = equal_weights(3).unwrap();
        let area = log_sphere_area_weighted(&w).exp();
        assert!((area - 4.0 * 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn runs_and_dense_paths_agree() {
        let w = two_level_weights(1001, 4.0).unwrap();
        let from_runs = log_moment_weighted_runs(&w.runs(), w.n() as u64, 0.3);
        let mut dense = KahanSum::new();
        dense.add(log_gamma_unchecked(1001.0));
        dense.add(-log_gamma_unchecked(1.3 * 1001.0));
        for &a in w.a() {
            dense.add(log_gamma_unchecked(1.0 + a * 0.3) - a * 0.3 * a.ln());
        }
        assert!((from_runs - dense.total()).abs() <= 1e-9 * from_runs.abs().max(1.0));
    }
}
