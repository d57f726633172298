//! Weight sequences controlling the sphere geometry and the concentration center.
//!
//! A sequence holds renormalized weights `a_i` with `sum a_i = n`, stored in
//! non-increasing order. The geometric-mean statistic
//! `log_weight_gm = sum (a_i/n) ln a_i` determines where the GM/AM ratio
//! concentrates: the predicted center is `e^{-gamma} * exp(-log_weight_gm)`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::special::exp_neg_gamma;
use crate::sum::KahanSum;
use crate::{Error, Result};

/// Relative tolerance on `sum a_i = n`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Named growth functions for the diverging construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthFn {
    /// f(n) = floor(sqrt(n))
    Sqrt,
    /// f(n) = max(2, floor(ln n))
    Log,
}

impl GrowthFn {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            GrowthFn::Sqrt => (n as f64).sqrt().floor(),
            GrowthFn::Log => (n as f64).ln().floor().max(2.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GrowthFn::Sqrt => "sqrt",
            GrowthFn::Log => "log",
        }
    }
}

/// The weight family a sequence was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    Equal,
    TwoLevel { m: f64 },
    Diverging { f: GrowthFn },
    Custom,
}

impl WeightFamily {
    /// Families other than `Custom` can be re-instantiated at any dimension,
    /// which is what the bound optimizer needs when it scans its n-grid.
    pub fn is_scalable(&self) -> bool {
        !matches!(self, WeightFamily::Custom)
    }

    /// Materialize the family at dimension `n`.
    pub fn instantiate(&self, n: usize) -> Result<WeightSequence> {
        match self {
            WeightFamily::Equal => equal_weights(n),
            WeightFamily::TwoLevel { m } => two_level_weights(n, *m),
            WeightFamily::Diverging { f } => diverging_weights(n, *f),
            WeightFamily::Custom => Err(Error::UnsupportedFamily {
                operation: "instantiate",
                family: "custom".to_string(),
            }),
        }
    }

    /// Run-length form `(value, multiplicity)` in non-increasing value order.
    /// Lets the optimizer evaluate moment sums in O(#distinct values) instead
    /// of O(n), which matters on the 2^24 end of its grid.
    pub(crate) fn runs(&self, n: usize) -> Result<Vec<(f64, u64)>> {
        match self {
            WeightFamily::Equal => {
                check_dimension(n)?;
                Ok(vec![(1.0, n as u64)])
            }
            WeightFamily::TwoLevel { m } => two_level_runs(n, *m),
            WeightFamily::Diverging { f } => {
                let value = f.value(n);
                if !(1.0..).contains(&value) || value >= n as f64 {
                    return Err(Error::InvalidGrowth { n, value });
                }
                two_level_runs(n, value)
            }
            WeightFamily::Custom => Err(Error::UnsupportedFamily {
                operation: "runs",
                family: "custom".to_string(),
            }),
        }
    }
}

impl std::fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightFamily::Equal => write!(f, "equal"),
            WeightFamily::TwoLevel { m } => write!(f, "two-level:{m}"),
            WeightFamily::Diverging { f: g } => write!(f, "diverging:{}", g.name()),
            WeightFamily::Custom => write!(f, "custom"),
        }
    }
}

impl std::str::FromStr for WeightFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "equal" {
            return Ok(WeightFamily::Equal);
        }
        if s == "custom" {
            return Ok(WeightFamily::Custom);
        }
        if let Some(m) = s.strip_prefix("two-level:") {
            let m: f64 = m.parse().map_err(|_| format!("bad two-level weight: {s}"))?;
            return Ok(WeightFamily::TwoLevel { m });
        }
        if let Some(g) = s.strip_prefix("diverging:") {
            return match g {
                "sqrt" => Ok(WeightFamily::Diverging { f: GrowthFn::Sqrt }),
                "log" => Ok(WeightFamily::Diverging { f: GrowthFn::Log }),
                other => Err(format!("unknown growth function: {other}")),
            };
        }
        Err(format!("unknown weight family: {s}"))
    }
}

/// A validated weight vector: `n` positive entries in non-increasing order
/// summing to `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    n: usize,
    a: Vec<f64>,
    family: WeightFamily,
}

/// A violation found by [`WeightSequence::validate`]. Violations are data, not
/// errors: validation never fails, it reports.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightViolation {
    SumMismatch { sum: f64, expected: f64 },
    NonPositive { index: usize, value: f64 },
    NotSorted { index: usize },
    LengthMismatch { len: usize, n: usize },
    DimensionTooSmall { n: usize },
}

impl std::fmt::Display for WeightViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightViolation::SumMismatch { sum, expected } => {
                write!(f, "sum violation: sum = {sum} != {expected}")
            }
            WeightViolation::NonPositive { index, value } => {
                write!(f, "positivity violation at index {index}: {value}")
            }
            WeightViolation::NotSorted { index } => {
                write!(f, "ordering violation at index {index}: not non-increasing")
            }
            WeightViolation::LengthMismatch { len, n } => {
                write!(f, "length violation: {len} entries but n = {n}")
            }
            WeightViolation::DimensionTooSmall { n } => {
                write!(f, "dimension violation: n = {n} < 2")
            }
        }
    }
}

/// Summary statistics of a weight sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightStats {
    /// Largest weight, `a_1` after sorting.
    pub a_max: f64,
    /// `sum (a_i/n) ln a_i`, the log of the weight geometric-mean power product.
    pub log_weight_gm: f64,
    /// `e^{-gamma} * exp(-log_weight_gm)`: where the GM/AM ratio concentrates.
    pub predicted_center: f64,
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n });
    }
    Ok(())
}

/// All weights equal to one: the plain l1 sphere.
pub fn equal_weights(n: usize) -> Result<WeightSequence> {
    check_dimension(n)?;
    Ok(WeightSequence {
        n,
        a: vec![1.0; n],
        family: WeightFamily::Equal,
    })
}

/// Run-length two-level construction: entries `m` for j <= n/(m+1), entries
/// `1/m` for j >= 1 + n/(m+1), and when n/(m+1) is not an integer one
/// correction entry t in [1/m, m] making the sum exactly n.
fn two_level_runs(n: usize, m: f64) -> Result<Vec<(f64, u64)>> {
    check_dimension(n)?;
    if !m.is_finite() || m < 1.0 {
        return Err(Error::Domain {
            name: "M",
            value: m,
            requirement: "finite and >= 1",
        });
    }
    let nf = n as f64;
    let q = nf / (m + 1.0);
    let integer_q = (q - q.round()).abs() < 1e-9 * q.max(1.0);
    let j = if integer_q { q.round() as u64 } else { q.floor() as u64 };

    let mut runs: Vec<(f64, u64)> = Vec::with_capacity(3);
    if integer_q {
        if j > 0 {
            runs.push((m, j));
        }
        if n as u64 > j {
            runs.push((1.0 / m, n as u64 - j));
        }
    } else {
        let small = n as u64 - j - 1;
        let t = nf - j as f64 * m - small as f64 / m;
        let tol = SUM_TOLERANCE * nf;
        if t < 1.0 / m - tol || t > m + tol {
            return Err(Error::CorrectionOutOfRange {
                n,
                m,
                t,
                lo: 1.0 / m,
                hi: m,
            });
        }
        let t = t.clamp(1.0 / m, m);
        if j > 0 {
            runs.push((m, j));
        }
        runs.push((t, 1));
        if small > 0 {
            runs.push((1.0 / m, small));
        }
    }
    // Re-sort in non-increasing value order (the correction entry may tie or
    // exceed its neighbours) and coalesce equal values.
    runs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut merged: Vec<(f64, u64)> = Vec::with_capacity(runs.len());
    for (v, c) in runs {
        match merged.last_mut() {
            Some((last, count)) if *last == v => *count += c,
            _ => merged.push((v, c)),
        }
    }
    Ok(merged)
}

fn expand_runs(n: usize, runs: &[(f64, u64)], family: WeightFamily) -> WeightSequence {
    let mut a = Vec::with_capacity(n);
    for &(v, c) in runs {
        for _ in 0..c {
            a.push(v);
        }
    }
    debug_assert_eq!(a.len(), n);
    WeightSequence { n, a, family }
}

/// Two levels `M` and `1/M` plus one correction element.
pub fn two_level_weights(n: usize, m: f64) -> Result<WeightSequence> {
    let runs = two_level_runs(n, m)?;
    Ok(expand_runs(n, &runs, WeightFamily::TwoLevel { m }))
}

/// Two-level structure with the large level given by a growth function, so
/// the large weights diverge with n and the ratio concentrates at zero.
pub fn diverging_weights(n: usize, f: GrowthFn) -> Result<WeightSequence> {
    check_dimension(n)?;
    let value = f.value(n);
    if !(1.0..).contains(&value) || value >= n as f64 {
        return Err(Error::InvalidGrowth { n, value });
    }
    let runs = two_level_runs(n, value)?;
    Ok(expand_runs(n, &runs, WeightFamily::Diverging { f }))
}

impl WeightSequence {
    /// Build from an explicit vector. Entries are sorted non-increasing; the
    /// result must satisfy all invariants or this errors.
    pub fn custom(a: Vec<f64>) -> Result<Self> {
        let n = a.len();
        check_dimension(n)?;
        let mut a = a;
        a.sort_by(|x, y| y.total_cmp(x));
        let w = WeightSequence {
            n,
            a,
            family: WeightFamily::Custom,
        };
        let violations = w.validate();
        if violations.is_empty() {
            Ok(w)
        } else {
            let text = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidWeights(text))
        }
    }

    /// Re-check every invariant, reporting each violation.
    pub fn validate(&self) -> Vec<WeightViolation> {
        let mut out = Vec::new();
        if self.n < 2 {
            out.push(WeightViolation::DimensionTooSmall { n: self.n });
        }
        if self.a.len() != self.n {
            out.push(WeightViolation::LengthMismatch {
                len: self.a.len(),
                n: self.n,
            });
        }
        let mut sum = KahanSum::new();
        for (i, &v) in self.a.iter().enumerate() {
            // NaN must land here too, hence no plain `v <= 0.0`.
            if !v.is_finite() || v <= 0.0 {
                out.push(WeightViolation::NonPositive { index: i, value: v });
            }
            if i > 0 && v > self.a[i - 1] {
                out.push(WeightViolation::NotSorted { index: i });
            }
            sum.add(v);
        }
        let total = sum.total();
        let expected = self.n as f64;
        if (total - expected).abs() > SUM_TOLERANCE * expected {
            out.push(WeightViolation::SumMismatch {
                sum: total,
                expected,
            });
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    /// Largest weight (first entry: the vector is sorted non-increasing).
    pub fn a_max(&self) -> f64 {
        self.a[0]
    }

    /// Run-length form of this sequence's entries.
    pub fn runs(&self) -> Vec<(f64, u64)> {
        let mut runs: Vec<(f64, u64)> = Vec::new();
        for &v in &self.a {
            match runs.last_mut() {
                Some((last, count)) if *last == v => *count += 1,
                _ => runs.push((v, 1)),
            }
        }
        runs
    }

    /// Geometric-mean statistics; `log_weight_gm` uses compensated summation.
    pub fn stats(&self) -> WeightStats {
        let nf = self.n as f64;
        let mut acc = KahanSum::new();
        for &(v, c) in &self.runs() {
            acc.add((v / nf) * v.ln() * c as f64);
        }
        let log_weight_gm = acc.total();
        WeightStats {
            a_max: self.a_max(),
            log_weight_gm,
            predicted_center: exp_neg_gamma() * (-log_weight_gm).exp(),
        }
    }
}

// JSON form: {"n": 4, "a": [2.0, 1.0, 0.5, 0.5], "family": "two-level:2"}
#[derive(Serialize, Deserialize)]
struct WeightSequenceRepr {
    n: usize,
    a: Vec<f64>,
    family: String,
}

impl Serialize for WeightSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        WeightSequenceRepr {
            n: self.n,
            a: self.a.clone(),
            family: self.family.to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeightSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = WeightSequenceRepr::deserialize(deserializer)?;
        let family: WeightFamily = repr.family.parse().map_err(D::Error::custom)?;
        let w = WeightSequence {
            n: repr.n,
            a: repr.a,
            family,
        };
        // Structural errors are rejected here; numeric invariants are left to
        // an explicit validate() pass so callers can report them in full.
        if w.a.len() != w.n {
            return Err(D::Error::custom(format!(
                "length violation: {} entries but n = {}",
                w.a.len(),
                w.n
            )));
        }
        Ok(w)
    }
}
