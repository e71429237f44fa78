//! Monte Carlo estimators that check the analytic models independently.
//!
//! Every estimator splits its samples into `batch_count` batches. Batch `b`
//! draws from a ChaCha8 stream seeded by the 64-bit seed with stream id `b`,
//! so batches can run in parallel and results merge by batch index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::connectivity::{segment_position_quantile, SegmentDistribution};
use crate::error::{check_param, ModelError};
use crate::linktime::{self, Direction, KinematicsConfig};

/// Kinematic integration step (s).
pub const KINEMATIC_STEP: f64 = 1e-3;
/// Warm-up discarded before observing a population, in strip-traversal times.
pub const WARMUP_TRAVERSALS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub batch_count: u32,
}

impl McConfig {
    pub const MIN_SAMPLES: u64 = 1_000;
    pub const MIN_BATCHES: u32 = 10;

    pub fn new(samples: u64, seed: u64, batch_count: u32) -> Result<Self, ModelError> {
        let cfg = Self {
            samples,
            seed,
            batch_count,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_param("samples", self.samples as f64, self.samples >= Self::MIN_SAMPLES, "need at least 1000 samples")?;
        check_param("batch_count", self.batch_count as f64, self.batch_count >= Self::MIN_BATCHES, "need at least 10 batches")?;
        check_param(
            "batch_count",
            self.batch_count as f64,
            self.samples >= self.batch_count as u64,
            "cannot exceed the sample count",
        )
    }

    fn batch_size(&self, batch: u32) -> u64 {
        let b = self.batch_count as u64;
        self.samples / b + u64::from((batch as u64) < self.samples % b)
    }
}

/// Generator for one batch: ChaCha8 seeded from `seed`, on stream `batch`.
pub fn batch_rng(seed: u64, batch: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Mean with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    /// Combines per-batch `(sum, count)` pairs.
    pub fn from_batches(batches: &[(f64, u64)]) -> Self {
        let samples: u64 = batches.iter().map(|b| b.1).sum();
        let total: f64 = batches.iter().map(|b| b.0).sum();
        let mean = if samples > 0 { total / samples as f64 } else { 0.0 };
        let k = batches.len() as f64;
        let std_error = if batches.len() > 1 {
            let ss: f64 = batches
                .iter()
                .filter(|b| b.1 > 0)
                .map(|b| (b.0 / b.1 as f64 - mean).powi(2))
                .sum();
            (ss / (k * (k - 1.0))).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            samples,
        }
    }

    /// `(mean - reference) / std_error`; zero when both coincide exactly.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if diff == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY.copysign(diff)
        } else {
            diff / self.std_error
        }
    }

    pub fn scaled(&self, factor: f64, offset: f64) -> Self {
        Self {
            mean: self.mean * factor + offset,
            std_error: self.std_error * factor.abs(),
            samples: self.samples,
        }
    }
}

/// Runs `per_batch(batch_index, batch_size, rng)` for every batch, in
/// parallel, returning results in batch order.
pub fn run_batches<T, F>(cfg: &McConfig, per_batch: F) -> Vec<T>
where
    T: Send,
    F: Fn(u32, u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..cfg.batch_count)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(cfg.seed, b);
            per_batch(b, cfg.batch_size(b), &mut rng)
        })
        .collect()
}

/// Batch-means estimate of `E[sample(rng)]`.
pub fn estimate_mean<F>(cfg: &McConfig, sample: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let batches = run_batches(cfg, |_, n, rng| {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample(rng);
        }
        (sum, n)
    });
    McEstimate::from_batches(&batches)
}

/// Inverse-CDF draw of a node position in segment `i`.
pub fn sample_segment_position<R: Rng + ?Sized>(m: f64, d: f64, i: u32, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (i - 1) as f64 * d + segment_position_quantile(m, d, u)
}

/// Fraction of sampled pairs in segments `i` and `i + 1` closer than `d`.
pub fn estimate_direct_prob(m: f64, d: f64, i: u32, cfg: &McConfig) -> Result<McEstimate, ModelError> {
    cfg.validate()?;
    check_param("m", m, m.is_finite(), "must be finite")?;
    check_param("d", d, d > 0.0 && d.is_finite(), "must be positive")?;
    check_param("i", i as f64, i >= 1, "segments are 1-based")?;
    Ok(estimate_mean(cfg, |rng| {
        let here = sample_segment_position(m, d, i, rng);
        let next = sample_segment_position(m, d, i + 1, rng);
        if next - here < d {
            1.0
        } else {
            0.0
        }
    }))
}

/// Per-batch histograms of the number of nodes inside a strip window.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSample {
    /// `batches[b][n]`: replications of batch `b` that observed `n` nodes.
    pub batches: Vec<Vec<u64>>,
}

impl PopulationSample {
    pub fn observations(&self) -> u64 {
        self.batches.iter().flatten().sum()
    }

    /// Pooled histogram over all batches.
    pub fn histogram(&self) -> Vec<u64> {
        let len = self.batches.iter().map(Vec::len).max().unwrap_or(0);
        let mut hist = vec![0; len];
        for batch in &self.batches {
            for (n, c) in batch.iter().enumerate() {
                hist[n] += c;
            }
        }
        hist
    }

    /// Batch-means estimate of `E[f(N)]`.
    pub fn statistic<F: Fn(u64) -> f64>(&self, f: F) -> McEstimate {
        let per: Vec<(f64, u64)> = self
            .batches
            .iter()
            .map(|h| {
                let sum = h.iter().enumerate().map(|(n, &c)| c as f64 * f(n as u64)).sum();
                (sum, h.iter().sum())
            })
            .collect();
        McEstimate::from_batches(&per)
    }

    pub fn mean(&self) -> McEstimate {
        self.statistic(|n| n as f64)
    }

    /// Empirical PGF `E[z^N]`.
    pub fn pgf(&self, z: f64) -> McEstimate {
        self.statistic(|n| z.powi(n as i32))
    }

    pub fn pmf(&self, k: u64) -> McEstimate {
        self.statistic(|n| if n == k { 1.0 } else { 0.0 })
    }

    /// Chi-square goodness of fit against Poisson(`phi`) at 1% significance.
    pub fn chi_square(&self, phi: f64) -> Result<ChiSquareTest, ModelError> {
        chi_square_poisson(&self.histogram(), phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: u32,
    /// 99th percentile of the chi-square distribution with `dof` degrees.
    pub critical: f64,
}

impl ChiSquareTest {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Pearson chi-square of a count histogram against Poisson(`phi`). Cells are
/// pooled left to right until each expects at least 5 observations; the last
/// cell absorbs the upper tail.
pub fn chi_square_poisson(hist: &[u64], phi: f64) -> Result<ChiSquareTest, ModelError> {
    let dist = SegmentDistribution::new(phi)?;
    let total: u64 = hist.iter().sum();
    check_param("observations", total as f64, total > 0, "histogram is empty")?;
    let total = total as f64;
    let max_n = (hist.len() as u64).max((phi + 10.0 * phi.sqrt() + 10.0) as u64);

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut cdf = 0.0;
    for n in 0..=max_n {
        let p = dist.pmf(n);
        cdf += p;
        obs += hist.get(n as usize).copied().unwrap_or(0) as f64;
        exp += total * p;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    // Remaining mass and everything past max_n go into the tail cell.
    exp += total * (1.0 - cdf).max(0.0);
    match cells.last_mut() {
        Some(last) if exp < 5.0 => {
            last.0 += obs;
            last.1 += exp;
        }
        _ => cells.push((obs, exp)),
    }
    check_param("cells", cells.len() as f64, cells.len() >= 2, "too few cells for a chi-square test")?;
    let statistic = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() as u32 - 1;
    let critical = ChiSquared::new(dof as f64)
        .map_err(|_| ModelError::Degenerate("invalid chi-square degrees of freedom"))?
        .inverse_cdf(0.99);
    Ok(ChiSquareTest {
        statistic,
        dof,
        critical,
    })
}

/// Counts nodes inside `[0, strip_len]` at time `horizon` in independent
/// replications of a Poisson arrival stream. Each node enters at position 0
/// and crosses at a constant speed drawn from `N(mu, sigma2)` truncated to
/// positive values (exactly `mu` when `sigma2 = 0`).
pub fn simulate_population(
    rate: f64,
    mu: f64,
    sigma2: f64,
    strip_len: f64,
    horizon: f64,
    cfg: &McConfig,
) -> Result<PopulationSample, ModelError> {
    cfg.validate()?;
    check_param("rate", rate, rate >= 0.0 && rate.is_finite(), "must be non-negative")?;
    check_param("mu", mu, mu > 0.0 && mu.is_finite(), "nodes must drift into the strip")?;
    check_param("sigma2", sigma2, sigma2 >= 0.0 && sigma2.is_finite(), "must be non-negative")?;
    check_param("strip_len", strip_len, strip_len > 0.0 && strip_len.is_finite(), "must be positive")?;
    let warmup = WARMUP_TRAVERSALS * strip_len / mu;
    if !(horizon >= warmup) {
        return Err(ModelError::SteadyStateNotReached { horizon, warmup });
    }
    let arrivals = if rate > 0.0 { Some(Exp::new(rate).expect("positive rate")) } else { None };
    let speed = Normal::new(mu, sigma2.sqrt()).expect("finite parameters");

    let batches = run_batches(cfg, |_, n, rng| {
        let mut hist: Vec<u64> = Vec::new();
        for _ in 0..n {
            let mut count = 0usize;
            if let Some(gap) = &arrivals {
                let mut t = gap.sample(rng);
                while t <= horizon {
                    let v = if sigma2 == 0.0 {
                        mu
                    } else {
                        loop {
                            let v = speed.sample(rng);
                            if v > 0.0 {
                                break v;
                            }
                        }
                    };
                    if v * (horizon - t) <= strip_len {
                        count += 1;
                    }
                    t += gap.sample(rng);
                }
            }
            if hist.len() <= count {
                hist.resize(count + 1, 0);
            }
            hist[count] += 1;
        }
        hist
    });
    Ok(PopulationSample { batches })
}

/// Outcome of a kinematic link simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkDuration {
    Finite(f64),
    /// The pair never separates.
    Unbounded,
}

impl LinkDuration {
    pub fn finite(self) -> Option<f64> {
        match self {
            LinkDuration::Finite(t) => Some(t),
            LinkDuration::Unbounded => None,
        }
    }
}

/// Steps two nodes forward in [`KINEMATIC_STEP`] increments until they leave
/// each other's range.
///
/// Same direction: the faster node starts `initial_sep` ahead and pulls away
/// at `|v1 - v2|`. Opposite direction: the oncoming node starts
/// `initial_sep` past the far edge of the range (`t_r - initial_sep` ahead)
/// and closes at `v1 + v2` until it is `t_r` behind.
pub fn simulate_link_duration(
    v1: f64,
    v2: f64,
    t_r: f64,
    initial_sep: f64,
    direction: Direction,
) -> Result<LinkDuration, ModelError> {
    check_param("v1", v1, v1 >= 0.0 && v1.is_finite(), "must be non-negative")?;
    check_param("v2", v2, v2 >= 0.0 && v2.is_finite(), "must be non-negative")?;
    check_param("t_r", t_r, t_r > 0.0 && t_r.is_finite(), "must be positive")?;
    let (start, velocity) = match direction {
        Direction::Same => {
            if !(0.0..=t_r).contains(&initial_sep) {
                return Err(ModelError::NeverInRange);
            }
            (initial_sep, (v1 - v2).abs())
        }
        Direction::Opposite => {
            if !(0.0..=2.0 * t_r).contains(&initial_sep) {
                return Err(ModelError::NeverInRange);
            }
            (t_r - initial_sep, -(v1 + v2))
        }
    };
    if velocity == 0.0 {
        return Ok(LinkDuration::Unbounded);
    }
    let mut k: u64 = 0;
    loop {
        let pos = start + velocity * (k as f64 * KINEMATIC_STEP);
        if pos.abs() > t_r {
            return Ok(LinkDuration::Finite(k as f64 * KINEMATIC_STEP));
        }
        k += 1;
    }
}

/// Monte Carlo view of the distinct-speed link lifetimes behind `linktime::ct`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtEstimate {
    pub direction: Direction,
    /// Mean kinematic duration over distinct-speed pairs; `None` when there
    /// are no such pairs (every link is unbounded).
    pub pair_duration: Option<McEstimate>,
    /// `t_comm_diff / (V_c (V_c + 1))`, the enumeration mean of the same quantity.
    pub analytic_pair_duration: f64,
    pub analytic_ct: f64,
    /// `CT` rebuilt from the sampled pair duration.
    pub ct: Option<McEstimate>,
}

impl CtEstimate {
    pub fn is_degenerate(&self) -> bool {
        self.pair_duration.is_none()
    }
}

/// Samples speed pairs `i != j` and node offsets uniformly from the lattice
/// the analytic sums run over, and simulates each link kinematically.
pub fn estimate_ct(cfg: &KinematicsConfig, direction: Direction, mc: &McConfig) -> Result<CtEstimate, ModelError> {
    mc.validate()?;
    let levels = cfg.speed_levels()?;
    let analytic_ct = linktime::ct(cfg, direction)?;
    let same_speed = linktime::t_comm_same_speed(cfg, direction)?;
    let n = linktime::nodes_in_range(cfg.t_r, cfg.spacing, direction);
    let pairs = levels as f64 * (levels as f64 + 1.0);
    let analytic_pair_duration = if levels == 0 {
        f64::INFINITY
    } else {
        linktime::t_comm_diff(cfg, direction)? / pairs
    };
    if levels == 0 {
        return Ok(CtEstimate {
            direction,
            pair_duration: None,
            analytic_pair_duration,
            analytic_ct,
            ct: None,
        });
    }
    let (first_m, last_m) = match direction {
        Direction::Same => (1, n),
        Direction::Opposite => (0, n),
    };
    let estimate = estimate_mean(mc, |rng| {
        let i = rng.random_range(0..=levels);
        let mut j = rng.random_range(0..levels);
        if j >= i {
            j += 1;
        }
        let m = rng.random_range(first_m..=last_m);
        let sep = m as f64 * cfg.spacing;
        match simulate_link_duration(cfg.speed(i), cfg.speed(j), cfg.t_r, sep, direction) {
            Ok(LinkDuration::Finite(t)) => t,
            // Offsets past the range only arise when the node count was
            // rounded up to one; the analytic sum counts them as zero.
            Err(ModelError::NeverInRange) => 0.0,
            Ok(LinkDuration::Unbounded) | Err(_) => unreachable!("distinct speeds always separate"),
        }
    });
    let scale = pairs / ((levels as f64 + 1.0) * (levels as f64 + 1.0));
    let offset = same_speed / ((levels as f64 + 1.0) * (levels as f64 + 1.0));
    Ok(CtEstimate {
        direction,
        pair_duration: Some(estimate),
        analytic_pair_duration,
        analytic_ct,
        ct: Some(estimate.scaled(scale, offset)),
    })
}
