//! Streaming accumulation of ratio statistics: count/mean/variance (Welford,
//! merged with Chan's formula), a fixed 1000-bin histogram on [0, 1], exact
//! interval hit counts, and a mergeable quantile sketch.
//!
//! States merge associatively up to floating-point roundoff, so batches can be
//! accumulated in any fixed order; the simulation driver merges in batch-index
//! order, which makes runs bit-reproducible regardless of thread count.

use serde::Serialize;

/// Number of histogram bins over [0, 1]. Ratio values are provably in [0, 1],
/// so no clipping policy is needed beyond the bin index clamp.
pub const HISTOGRAM_BINS: usize = 1000;

/// Per-level buffer capacity of the quantile sketch. Sized so the worst-case
/// rank error over streams up to ~1e8 samples stays below 1e-3 of the count.
pub const SKETCH_CAPACITY: usize = 32_768;

/// An open interval whose hit probability is tracked exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }
}

/// Deterministic mergeable quantile sketch.
///
/// A KLL-style compactor hierarchy: level l holds items of weight 2^l; a full
/// level is sorted and every other item is promoted, alternating the surviving
/// parity per level. Compaction is pair-preserving, so total retained weight
/// always equals the number of inserted items exactly. Rank queries carry a
/// worst-case error of a few `count * levels / capacity`, which the capacity
/// keeps below 1e-3 of the count for every stream size used here.
#[derive(Debug, Clone)]
pub struct QuantileSketch {
    capacity: usize,
    levels: Vec<Vec<f64>>,
    parities: Vec<bool>,
    count: u64,
}

impl Default for QuantileSketch {
    fn default() -> Self {
        Self::with_capacity(SKETCH_CAPACITY)
    }
}

impl QuantileSketch {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity >= 4, "sketch capacity too small");
        Self {
            capacity,
            levels: vec![Vec::new()],
            parities: vec![false],
            count: 0,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn insert(&mut self, value: f64) {
        self.count += 1;
        self.levels[0].push(value);
        if self.levels[0].len() >= self.capacity {
            self.compact(0);
        }
    }

    fn compact(&mut self, level: usize) {
        if self.levels.len() == level + 1 {
            self.levels.push(Vec::new());
            self.parities.push(false);
        }
        let mut buf = std::mem::take(&mut self.levels[level]);
        buf.sort_unstable_by(f64::total_cmp);
        let offset = usize::from(self.parities[level]);
        self.parities[level] = !self.parities[level];
        let pairs = buf.len() / 2;
        for p in 0..pairs {
            let survivor = buf[2 * p + offset];
            self.levels[level + 1].push(survivor);
        }
        if buf.len() % 2 == 1 {
            // Odd leftover stays at its level with its weight unchanged.
            self.levels[level].push(buf[buf.len() - 1]);
        }
        if self.levels[level + 1].len() >= self.capacity {
            self.compact(level + 1);
        }
    }

    pub fn merge(&mut self, other: QuantileSketch) {
        assert_eq!(self.capacity, other.capacity, "sketch capacity mismatch");
        self.count += other.count;
        for (level, items) in other.levels.into_iter().enumerate() {
            while self.levels.len() <= level {
                self.levels.push(Vec::new());
                self.parities.push(false);
            }
            self.levels[level].extend(items);
        }
        for level in 0..self.levels.len() {
            if self.levels[level].len() >= self.capacity {
                self.compact(level);
            }
        }
    }

    /// Smallest retained value whose cumulative weight reaches `q * count`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let q = q.clamp(0.0, 1.0);
        let mut weighted: Vec<(f64, u64)> = Vec::new();
        for (level, items) in self.levels.iter().enumerate() {
            let w = 1u64 << level;
            weighted.extend(items.iter().map(|&v| (v, w)));
        }
        weighted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let target = ((q * self.count as f64).ceil() as u64).clamp(1, self.count);
        let mut cum = 0u64;
        for (v, w) in weighted {
            cum += w;
            if cum >= target {
                return Some(v);
            }
        }
        None
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }
}

/// Streaming estimator state for one stream (or one batch of a parallel run).
#[derive(Debug, Clone)]
pub struct EstimatorState {
    count: u64,
    mean: f64,
    m2: f64,
    histogram: Vec<u64>,
    sketch: QuantileSketch,
    intervals: Vec<Interval>,
    interval_hits: Vec<u64>,
}

impl EstimatorState {
    pub fn new(intervals: Vec<Interval>) -> Self {
        let hits = vec![0; intervals.len()];
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            histogram: vec![0; HISTOGRAM_BINS],
            sketch: QuantileSketch::default(),
            intervals,
            interval_hits: hits,
        }
    }

    #[inline]
    fn bin(value: f64) -> usize {
        ((value * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
        self.histogram[Self::bin(value)] += 1;
        self.sketch.insert(value);
        for (interval, hits) in self.intervals.iter().zip(self.interval_hits.iter_mut()) {
            if interval.contains(value) {
                *hits += 1;
            }
        }
    }

    /// Merge another state produced with the same interval list.
    pub fn merge(&mut self, other: EstimatorState) {
        assert_eq!(self.intervals, other.intervals, "interval lists differ");
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let total = n1 + n2;
        let delta = other.mean - self.mean;
        self.mean += delta * n2 / total;
        self.m2 += other.m2 + delta * delta * n1 * n2 / total;
        self.count += other.count;
        for (a, b) in self.histogram.iter_mut().zip(other.histogram.iter()) {
            *a += b;
        }
        for (a, b) in self.interval_hits.iter_mut().zip(other.interval_hits.iter()) {
            *a += b;
        }
        self.sketch.merge(other.sketch);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count as f64 - 1.0)
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn median(&self) -> Option<f64> {
        self.sketch.median()
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        self.sketch.quantile(q)
    }

    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval_probability(&self, index: usize) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.interval_hits[index] as f64 / self.count as f64
        }
    }

    pub fn to_report(&self) -> EstimatorReport {
        EstimatorReport {
            count: self.count,
            mean: self.mean,
            sd: self.sd(),
            median: self.median(),
            histogram: self.histogram.clone(),
            intervals: self
                .intervals
                .iter()
                .enumerate()
                .map(|(i, iv)| IntervalProbability {
                    lo: iv.lo,
                    hi: iv.hi,
                    probability: self.interval_probability(i),
                })
                .collect(),
        }
    }
}

/// Serializable summary of an estimator state.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub count: u64,
    pub mean: f64,
    pub sd: f64,
    pub median: Option<f64>,
    pub histogram: Vec<u64>,
    pub intervals: Vec<IntervalProbability>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalProbability {
    pub lo: f64,
    pub hi: f64,
    pub probability: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_values(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    fn exact_rank(sorted: &[f64], v: f64) -> usize {
        sorted.partition_point(|&x| x <= v)
    }

    #[test]
    fn sketch_rank_error_is_within_contract() {
        let n = 1_000_000;
        let mut values = uniform_values(n, 0x5EED_1000);
        let mut sketch = QuantileSketch::default();
        for &v in &values {
            sketch.insert(v);
        }
        values.sort_unstable_by(f64::total_cmp);
        for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let est = sketch.quantile(q).unwrap();
            let rank = exact_rank(&values, est) as f64;
            let target = q * n as f64;
            assert!(
                (rank - target).abs() <= 1e-3 * n as f64,
                "q={q}: rank {rank} vs target {target}"
            );
        }
    }

    #[test]
    fn sketch_handles_sorted_streams() {
        // Adversarial ordering: strictly increasing input.
        let n = 300_000usize;
        let mut sketch = QuantileSketch::default();
        for i in 0..n {
            sketch.insert(i as f64 / n as f64);
        }
        for q in [0.25, 0.5, 0.75] {
            let est = sketch.quantile(q).unwrap();
            assert!(
                (est - q).abs() <= 2e-3,
                "q={q}: estimate {est}"
            );
        }
    }

    #[test]
    fn sketch_merge_matches_contract() {
        let n = 400_000;
        let values = uniform_values(n, 0x5EED_1001);
        let mut whole = QuantileSketch::default();
        for &v in &values {
            whole.insert(v);
        }
        let mut left = QuantileSketch::default();
        let mut right = QuantileSketch::default();
        for &v in &values[..n / 3] {
            left.insert(v);
        }
        for &v in &values[n / 3..] {
            right.insert(v);
        }
        left.merge(right);
        assert_eq!(left.count(), whole.count());
        let mut sorted = values;
        sorted.sort_unstable_by(f64::total_cmp);
        for q in [0.1, 0.5, 0.9] {
            let est = left.quantile(q).unwrap();
            let rank = exact_rank(&sorted, est) as f64;
            assert!(
                (rank - q * n as f64).abs() <= 1e-3 * n as f64,
                "merged q={q}"
            );
        }
    }

    #[test]
    fn merged_batches_equal_single_stream() {
        let values = uniform_values(30_000, 0x5EED_1002);
        let intervals = vec![Interval::new(0.2, 0.8), Interval::new(0.0, 0.5)];

        let mut single = EstimatorState::new(intervals.clone());
        for &v in &values {
            single.push(v);
        }

        let mut merged = EstimatorState::new(intervals.clone());
        for chunk in values.chunks(7_001) {
            let mut batch = EstimatorState::new(intervals.clone());
            for &v in chunk {
                batch.push(v);
            }
            merged.merge(batch);
        }

        assert_eq!(merged.count(), single.count());
        assert!((merged.mean() - single.mean()).abs() <= 1e-12 * single.mean().abs());
        assert!((merged.variance() - single.variance()).abs() <= 1e-12 * single.variance());
        assert_eq!(merged.histogram(), single.histogram());
        for i in 0..intervals.len() {
            assert_eq!(
                merged.interval_hits[i], single.interval_hits[i],
                "interval {i}"
            );
        }
    }

    #[test]
    fn merge_is_associative_up_to_roundoff() {
        let values = uniform_values(9_000, 0x5EED_1003);
        let parts: Vec<_> = values.chunks(3_000).collect();
        let state_of = |chunks: &[&[f64]]| {
            let mut s = EstimatorState::new(vec![]);
            for c in chunks {
                let mut b = EstimatorState::new(vec![]);
                for &v in *c {
                    b.push(v);
                }
                s.merge(b);
            }
            s
        };
        let abc = state_of(&[parts[0], parts[1], parts[2]]);
        let acb = state_of(&[parts[0], parts[2], parts[1]]);
        let cba = state_of(&[parts[2], parts[1], parts[0]]);
        for other in [&acb, &cba] {
            assert_eq!(abc.count(), other.count());
            assert!((abc.mean() - other.mean()).abs() <= 1e-12 * abc.mean().abs());
            assert!((abc.m2 - other.m2).abs() <= 1e-12 * abc.m2.abs());
            assert_eq!(abc.histogram(), other.histogram());
        }
    }

    #[test]
    fn histogram_bins_cover_the_closed_interval() {
        let mut s = EstimatorState::new(vec![]);
        s.push(0.0);
        s.push(1.0);
        s.push(0.9994);
        assert_eq!(s.histogram()[0], 1);
        assert_eq!(s.histogram()[HISTOGRAM_BINS - 1], 2);
    }

    #[test]
    fn interval_probabilities_are_exact_counts() {
        let mut s = EstimatorState::new(vec![Interval::new(0.25, 0.75)]);
        for i in 0..100 {
            s.push(i as f64 / 100.0 + 0.005);
        }
        // values 0.005, 0.015, ..., 0.995: those in (0.25, 0.75) are 0.255..0.745.
        assert_eq!(s.interval_hits[0], 50);
        assert!((s.interval_probability(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn report_serializes() {
        let mut s = EstimatorState::new(vec![Interval::new(0.1, 0.9)]);
        for v in [0.2, 0.4, 0.6] {
            s.push(v);
        }
        let json = serde_json::to_string(&s.to_report()).unwrap();
        assert!(json.contains("\"count\":3"));
        assert!(json.contains("\"median\":0.4"));
    }

    #[test]
    fn empty_state_edge_cases() {
        let s = EstimatorState::new(vec![Interval::new(0.0, 1.0)]);
        assert_eq!(s.count(), 0);
        assert_eq!(s.median(), None);
        assert_eq!(s.variance(), 0.0);
        assert_eq!(s.interval_probability(0), 0.0);
        let mut a = EstimatorState::new(vec![Interval::new(0.0, 1.0)]);
        a.merge(s);
        assert_eq!(a.count(), 0);
    }
}
