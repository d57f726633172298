//! Uniform sampling on both sphere families and streaming Monte Carlo
//! estimation of the GM/AM ratio.
//!
//! Weighted l1 sphere: draw unit-rate exponentials e_1..e_n and independent
//! signs, set u = e / sum(e) and x_i = sign_i * u_i / a_i. Every facet of
//! `{sum a_i |x_i| = 1}` lies in a hyperplane at distance `1/|a|_2` from the
//! origin, so cone measure and surface (Hausdorff) measure coincide on this
//! sphere; normalized exponentials give the uniform (Dirichlet) law on the
//! simplex, and the per-facet map u -> (sign_i u_i / a_i) scales area by the
//! same factor on all 2^n sign-symmetric facets. The construction therefore
//! realizes the uniform probability on the sphere. The cross-check against
//! the exact moment formula is the empirical safety net for this argument.
//!
//! Euclidean sphere: normalized standard Gaussians (rotation invariance).
//!
//! Sampling is embarrassingly parallel: batches draw from independent
//! counter-mode substreams identified by (seed, batch index) and merge in
//! batch order, so results are bit-identical for a fixed partition no matter
//! how many threads run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::estimator::{EstimatorState, Interval};
use crate::moments::check_hypothesis;
use crate::sum::KahanSum;
use crate::weights::WeightSequence;
use crate::{Error, Result};

/// Samples per parallel batch. Fixed so the (seed, partition) pair — and with
/// it every statistic — is reproducible across thread counts.
pub const BATCH_SIZE: u64 = 4096;

/// A reproducible stream: `seed` names the experiment, `stream_index` the
/// substream (batch). Identical pairs yield identical sample sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Which sphere a point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereTag {
    WeightedL1,
    Euclidean,
}

/// A sampled point together with its sphere family.
#[derive(Debug, Clone)]
pub struct SpherePoint {
    pub coords: Vec<f64>,
    pub tag: SphereTag,
}

/// A GM/AM ratio value; always in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub value: f64,
}

/// Uniform sample from the weighted l1 sphere of `weights`.
pub fn sample_weighted_sphere<R: Rng + ?Sized>(
    weights: &WeightSequence,
    rng: &mut R,
) -> SpherePoint {
    let n = weights.n();
    let mut exps = Vec::with_capacity(n);
    let total = loop {
        exps.clear();
        let mut sum = KahanSum::new();
        for _ in 0..n {
            let e: f64 = rng.sample(Exp1);
            sum.add(e);
            exps.push(e);
        }
        let total = sum.total();
        if total > 0.0 {
            break total;
        }
        // Unreachable in practice; redraw on the degenerate event anyway.
    };
    let coords = exps
        .iter()
        .zip(weights.a())
        .map(|(&e, &a)| {
            let magnitude = e / (total * a);
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    SpherePoint {
        coords,
        tag: SphereTag::WeightedL1,
    }
}

/// Uniform sample from the Euclidean unit sphere in dimension n.
pub fn sample_euclidean_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SpherePoint> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n });
    }
    let mut coords = Vec::with_capacity(n);
    loop {
        coords.clear();
        let mut sum_sq = KahanSum::new();
        for _ in 0..n {
            let g: f64 = rng.sample(StandardNormal);
            sum_sq.add(g * g);
            coords.push(g);
        }
        let norm = sum_sq.total().sqrt();
        if norm > 0.0 {
            for c in coords.iter_mut() {
                *c /= norm;
            }
            return Ok(SpherePoint {
                coords,
                tag: SphereTag::Euclidean,
            });
        }
    }
}

/// |sum a_i |x_i| - 1|, computed with compensated summation.
pub fn l1_constraint_residual(point: &SpherePoint, weights: &WeightSequence) -> f64 {
    let mut sum = KahanSum::new();
    for (&x, &a) in point.coords.iter().zip(weights.a()) {
        sum.add(a * x.abs());
    }
    (sum.total() - 1.0).abs()
}

/// |sum x_i^2 - 1|, computed with compensated summation.
pub fn l2_constraint_residual(point: &SpherePoint) -> f64 {
    let mut sum = KahanSum::new();
    for &x in &point.coords {
        sum.add(x * x);
    }
    (sum.total() - 1.0).abs()
}

/// GM/AM ratio at an on-sphere point: `n prod |x_i|^{alpha_i}`, evaluated in
/// log space. A zero coordinate yields ratio zero.
pub fn gm_am_ratio_weighted(point: &SpherePoint, weights: &WeightSequence) -> RatioSample {
    assert_eq!(point.tag, SphereTag::WeightedL1, "point is not on an l1 sphere");
    assert_eq!(point.coords.len(), weights.n(), "dimension mismatch");
    let n = weights.n() as f64;
    let mut acc = KahanSum::new();
    for (&x, &a) in point.coords.iter().zip(weights.a()) {
        if x == 0.0 {
            return RatioSample { value: 0.0 };
        }
        acc.add((a / n) * x.abs().ln());
    }
    RatioSample {
        value: (n.ln() + acc.total()).exp().clamp(0.0, 1.0),
    }
}

/// Euclidean variant: `sqrt(n) prod |y_i|^{1/n}` on the unit sphere.
pub fn gm_am_ratio_euclidean(point: &SpherePoint) -> RatioSample {
    assert_eq!(point.tag, SphereTag::Euclidean, "point is not on the euclidean sphere");
    let n = point.coords.len() as f64;
    let mut acc = KahanSum::new();
    for &y in &point.coords {
        if y == 0.0 {
            return RatioSample { value: 0.0 };
        }
        acc.add(y.abs().ln());
    }
    RatioSample {
        value: (0.5 * n.ln() + acc.total() / n).exp().clamp(0.0, 1.0),
    }
}

/// The homogeneous-of-degree-zero form `prod |x_i|^{alpha_i} / sum alpha_i |x_i|`,
/// defined for any nonzero x (not only on-sphere points).
pub fn gm_am_ratio_general(coords: &[f64], weights: &WeightSequence) -> f64 {
    let n = weights.n() as f64;
    let mut log_gm = KahanSum::new();
    let mut am = KahanSum::new();
    let mut has_zero = false;
    for (&x, &a) in coords.iter().zip(weights.a()) {
        if x == 0.0 {
            has_zero = true;
        } else {
            log_gm.add((a / n) * x.abs().ln());
        }
        am.add((a / n) * x.abs());
    }
    if has_zero {
        return 0.0;
    }
    (log_gm.total() - am.total().ln()).exp().clamp(0.0, 1.0)
}

/// Precomputed per-dimension quantities for the streaming kernels. One sample
/// costs one exponential draw and one log per coordinate.
struct WeightedKernel {
    alpha: Vec<f64>,
    log_weight_gm: f64,
    n: f64,
}

impl WeightedKernel {
    fn new(weights: &WeightSequence) -> Self {
        let n = weights.n() as f64;
        Self {
            alpha: weights.a().iter().map(|&a| a / n).collect(),
            log_weight_gm: weights.stats().log_weight_gm,
            n,
        }
    }

    /// Draws one sample and returns g = ln(ratio) - ln n. The s-moment term
    /// of the same sample is exp(s * n * g).
    #[inline]
    fn draw_log_gm<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let mut sum = KahanSum::new();
            let mut weighted_log = KahanSum::new();
            for &alpha in &self.alpha {
                let e: f64 = rng.sample(Exp1);
                sum.add(e);
                weighted_log.add(alpha * e.ln());
            }
            let total = sum.total();
            if total > 0.0 {
                return weighted_log.total() - total.ln() - self.log_weight_gm;
            }
        }
    }

    #[inline]
    fn ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.n.ln() + self.draw_log_gm(rng)).exp().clamp(0.0, 1.0)
    }
}

struct EuclideanKernel {
    n: f64,
    dim: usize,
}

impl EuclideanKernel {
    fn new(dim: usize) -> Self {
        Self { n: dim as f64, dim }
    }

    /// g = ln(ratio) - ln sqrt(n); the s-moment term is exp(s * n * g).
    #[inline]
    fn draw_log_gm<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let mut sum_sq = KahanSum::new();
            let mut log_sum = KahanSum::new();
            for _ in 0..self.dim {
                let g: f64 = rng.sample(StandardNormal);
                sum_sq.add(g * g);
                log_sum.add(g.abs().ln());
            }
            let total = sum_sq.total();
            if total > 0.0 {
                return log_sum.total() / self.n - 0.5 * total.ln();
            }
        }
    }

    #[inline]
    fn ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (0.5 * self.n.ln() + self.draw_log_gm(rng))
            .exp()
            .clamp(0.0, 1.0)
    }
}

/// Sample mean and standard error of `prod |x_i|^{a_i s}` over fresh samples.
pub fn empirical_moment(
    weights: &WeightSequence,
    s: f64,
    samples: u64,
    stream: &SeededStream,
) -> Result<(f64, f64)> {
    check_hypothesis(weights.a_max(), s)?;
    if samples == 0 {
        return Err(Error::Domain {
            name: "samples",
            value: 0.0,
            requirement: ">= 1",
        });
    }
    let kernel = WeightedKernel::new(weights);
    let mut rng = stream.rng();
    let sn = s * kernel.n;
    // Welford accumulation of exp(s n g).
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 1..=samples {
        let x = (sn * kernel.draw_log_gm(&mut rng)).exp();
        let delta = x - mean;
        mean += delta / i as f64;
        m2 += delta * (x - mean);
    }
    let se = if samples > 1 {
        (m2 / ((samples - 1) as f64 * samples as f64)).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

/// Which sphere an experiment samples from.
#[derive(Debug, Clone)]
pub enum SphereSpec {
    Weighted(WeightSequence),
    Euclidean(usize),
}

/// A reproducible Monte Carlo experiment over the ratio distribution.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub sphere: SphereSpec,
    pub samples: u64,
    pub seed: u64,
    /// Open intervals whose hit probabilities are counted exactly.
    pub intervals: Vec<Interval>,
    pub batch_size: u64,
}

impl SimulationPlan {
    pub fn new(sphere: SphereSpec, samples: u64, seed: u64, intervals: Vec<Interval>) -> Self {
        Self {
            sphere,
            samples,
            seed,
            intervals,
            batch_size: BATCH_SIZE,
        }
    }
}

enum Kernel {
    Weighted(WeightedKernel),
    Euclidean(EuclideanKernel),
}

impl Kernel {
    #[inline]
    fn ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Kernel::Weighted(k) => k.ratio(rng),
            Kernel::Euclidean(k) => k.ratio(rng),
        }
    }
}

/// Stream ratio samples through estimator states, one independent substream
/// per batch, merged in batch order. Deterministic given (seed, partition).
pub fn run_experiment(plan: &SimulationPlan) -> Result<EstimatorState> {
    if plan.batch_size == 0 {
        return Err(Error::Domain {
            name: "batch_size",
            value: 0.0,
            requirement: ">= 1",
        });
    }
    let kernel = match &plan.sphere {
        SphereSpec::Weighted(w) => Kernel::Weighted(WeightedKernel::new(w)),
        SphereSpec::Euclidean(n) => {
            if *n < 2 {
                return Err(Error::DimensionTooSmall { n: *n });
            }
            Kernel::Euclidean(EuclideanKernel::new(*n))
        }
    };
    let batches = plan.samples.div_ceil(plan.batch_size);
    let states: Vec<EstimatorState> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = SeededStream::new(plan.seed, batch).rng();
            let in_batch = plan.batch_size.min(plan.samples - batch * plan.batch_size);
            let mut state = EstimatorState::new(plan.intervals.clone());
            for _ in 0..in_batch {
                state.push(kernel.ratio(&mut rng));
            }
            state
        })
        .collect();
    let mut merged = EstimatorState::new(plan.intervals.clone());
    for state in states {
        merged.merge(state);
    }
    Ok(merged)
}
