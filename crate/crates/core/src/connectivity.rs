//! Node population and segment connectivity on a one-dimensional service strip.
//!
//! The strip is cut into segments whose length equals the transmission range
//! `d`. Node positions inside a segment follow the truncated exponential
//! density `m e^{m r} / (e^{i m d} - e^{(i-1) m d})`, and segment populations
//! are Poisson. Everything here is a pure function of its arguments.

use crate::error::{check_param, check_probability, ModelError};
use crate::numeric::{self, ln_abs_expm1};

/// Relative tolerance for the Richardson-checked double integral.
pub const QUADRATURE_REL_TOL: f64 = 1e-8;
/// Relative change below which a doubled horizon counts as converged.
pub const HORIZON_REL_TOL: f64 = 1e-6;

const MAX_DOUBLINGS: u32 = 6;
const MAX_HORIZON_DOUBLINGS: u32 = 20;

/// Decay rate `m = mu * beta / (2 sigma^2 + mu^2)`.
pub fn derive_m(mu: f64, sigma2: f64, beta: f64) -> Result<f64, ModelError> {
    check_param("sigma2", sigma2, sigma2 >= 0.0, "variance must be non-negative")?;
    check_param("mu", mu, mu.is_finite(), "must be finite")?;
    check_param("beta", beta, beta.is_finite(), "must be finite")?;
    let denom = 2.0 * sigma2 + mu * mu;
    if denom <= 0.0 {
        return Err(ModelError::Degenerate("mu = 0 and sigma2 = 0 leave m undefined"));
    }
    Ok(mu * beta / denom)
}

/// Geometry and motion statistics of the service strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripModel {
    /// Segment length, equal to the transmission range (m).
    pub d: f64,
    pub n_segments: u32,
    /// Mean drift speed (m/s).
    pub mu: f64,
    /// Motion variance (m^2/s^2).
    pub sigma2: f64,
    /// Model constant (1/m).
    pub beta: f64,
}

impl StripModel {
    pub fn new(d: f64, n_segments: u32, mu: f64, sigma2: f64, beta: f64) -> Result<Self, ModelError> {
        check_param("d", d, d > 0.0 && d.is_finite(), "must be positive")?;
        check_param("n_segments", n_segments as f64, n_segments >= 1, "need at least one segment")?;
        derive_m(mu, sigma2, beta)?;
        Ok(Self {
            d,
            n_segments,
            mu,
            sigma2,
            beta,
        })
    }

    /// Decay rate, recomputed from the motion parameters on every call.
    pub fn m(&self) -> f64 {
        derive_m(self.mu, self.sigma2, self.beta).expect("validated in StripModel::new")
    }

    /// Strip length `n_segments * d`.
    pub fn length(&self) -> f64 {
        self.n_segments as f64 * self.d
    }
}

/// One Poisson arrival stream and the sub-strip it travels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    /// Arrival intensity (nodes/s).
    pub rate: f64,
    /// Entry point of the sub-strip measured from the start of the strip (m).
    pub strip_offset: f64,
    /// Length of the sub-strip (m).
    pub strip_length: f64,
    /// Scale of the position variance law `theta(tau) = scale * tau` (m^2/s).
    pub variance_scale: f64,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_param("rate", self.rate, self.rate >= 0.0 && self.rate.is_finite(), "must be non-negative")?;
        check_param("strip_offset", self.strip_offset, self.strip_offset >= 0.0, "must be non-negative")?;
        check_param("strip_length", self.strip_length, self.strip_length > 0.0 && self.strip_length.is_finite(), "must be positive")?;
        check_param("variance_scale", self.variance_scale, self.variance_scale >= 0.0, "must be non-negative")
    }

    /// Whether segment `i` (1-based, length `d`) lies inside this stream's sub-strip.
    pub fn covers(&self, i: u32, d: f64) -> bool {
        let tol = 1e-9 * d.max(self.strip_length);
        i >= 1
            && (i - 1) as f64 * d >= self.strip_offset - tol
            && i as f64 * d <= self.strip_offset + self.strip_length + tol
    }
}

/// Steady-state intensity of one stream over its sub-strip, evaluated on a
/// finite horizon with the Brownian variance law `theta(tau) = sigma^2 tau`.
pub fn stream_intensity(
    stream: &StreamSpec,
    mu: f64,
    horizon: f64,
    quadrature_steps: usize,
) -> Result<f64, ModelError> {
    let scale = stream.variance_scale;
    stream_intensity_with_variance(stream, mu, horizon, quadrature_steps, |tau| scale * tau)
}

/// [`stream_intensity`] with a caller-supplied variance law `theta(tau)`.
///
/// The inner integral over the sub-strip is the Gaussian mass on
/// `[0, strip_length]`; the outer integral over `tau` is composite Simpson,
/// split at the mean transit time `strip_length / mu` when that falls inside
/// the horizon.
pub fn stream_intensity_with_variance<V>(
    stream: &StreamSpec,
    mu: f64,
    horizon: f64,
    quadrature_steps: usize,
    variance: V,
) -> Result<f64, ModelError>
where
    V: Fn(f64) -> f64,
{
    stream.validate()?;
    check_param("mu", mu, mu.is_finite(), "must be finite")?;
    check_param("horizon", horizon, horizon > 0.0 && horizon.is_finite(), "must be positive")?;
    check_param("quadrature_steps", quadrature_steps as f64, quadrature_steps >= 100, "need at least 100 steps")?;
    if stream.rate == 0.0 {
        return Ok(0.0);
    }
    let len = stream.strip_length;
    let eps = 1e-12 * horizon.max(1.0);
    let occupancy = |tau: f64| -> Result<f64, ModelError> {
        let tau = tau.max(eps);
        let mean = mu * tau;
        let theta = variance(tau);
        if !theta.is_finite() {
            return Err(ModelError::NonFinite { tau });
        }
        let p = if theta > 0.0 {
            let s = theta.sqrt();
            numeric::normal_cdf((len - mean) / s) - numeric::normal_cdf(-mean / s)
        } else if (0.0..=len).contains(&mean) {
            1.0
        } else {
            0.0
        };
        if p.is_finite() {
            Ok(p.max(0.0))
        } else {
            Err(ModelError::NonFinite { tau })
        }
    };

    let transit = if mu > 0.0 { len / mu } else { f64::INFINITY };
    let mut pieces = vec![(0.0, horizon)];
    if transit < horizon {
        pieces = vec![(0.0, transit), (transit, horizon)];
    }
    let mut total = 0.0;
    for (a, b) in pieces {
        total += fallible_simpson(&occupancy, a, b, quadrature_steps)?;
    }
    Ok(stream.rate * total)
}

fn fallible_simpson<F>(f: &F, a: f64, b: f64, n: usize) -> Result<f64, ModelError>
where
    F: Fn(f64) -> Result<f64, ModelError>,
{
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    // One-sided endpoint values: the deterministic occupancy jumps at the split.
    let nudge = 1e-10 * (b - a);
    let mut acc = f(a + nudge)? + f(b - nudge)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Doubles the horizon (and the step count with it) until the intensity
/// changes by less than [`HORIZON_REL_TOL`]; this stands in for `t -> inf`.
pub fn steady_state_intensity(
    stream: &StreamSpec,
    mu: f64,
    initial_horizon: f64,
    quadrature_steps: usize,
) -> Result<f64, ModelError> {
    let mut horizon = initial_horizon;
    let mut steps = quadrature_steps;
    let mut prev = stream_intensity(stream, mu, horizon, steps)?;
    for _ in 0..MAX_HORIZON_DOUBLINGS {
        horizon *= 2.0;
        steps *= 2;
        let next = stream_intensity(stream, mu, horizon, steps)?;
        if (next - prev).abs() <= HORIZON_REL_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(ModelError::NotConverged {
        coarse: prev,
        fine: stream_intensity(stream, mu, horizon, steps)?,
    })
}

/// Probability that a stream position, distributed with density
/// `m e^{m r} / (e^{m len} - 1)` on `[0, len]`, falls in `[lo, hi]`.
fn strip_mass(m: f64, lo: f64, hi: f64, len: f64) -> Result<f64, ModelError> {
    if hi <= lo {
        return Ok(0.0);
    }
    if m == 0.0 {
        return Ok((hi - lo) / len);
    }
    let ln_p = m * lo + ln_abs_expm1(m * (hi - lo)) - ln_abs_expm1(m * len);
    let p = ln_p.exp();
    if p.is_finite() {
        Ok(p)
    } else {
        Err(ModelError::Overflow)
    }
}

/// Probability that a node of a stream entering at `offset` with sub-strip
/// length `stream_len` is located in segment `i`.
pub fn stream_segment_probability(
    m: f64,
    d: f64,
    i: u32,
    offset: f64,
    stream_len: f64,
) -> Result<f64, ModelError> {
    check_param("m", m, m.is_finite(), "must be finite")?;
    check_param("d", d, d > 0.0, "must be positive")?;
    check_param("i", i as f64, i >= 1, "segments are 1-based")?;
    let stream = StreamSpec {
        rate: 0.0,
        strip_offset: offset,
        strip_length: stream_len,
        variance_scale: 0.0,
    };
    stream.validate()?;
    if !stream.covers(i, d) {
        return Err(ModelError::Uncovered {
            segment: i,
            start: offset,
            end: offset + stream_len,
        });
    }
    let lo = ((i - 1) as f64 * d - offset).max(0.0);
    let hi = (i as f64 * d - offset).min(stream_len);
    Ok(strip_mass(m, lo, hi, stream_len)?.min(1.0))
}

/// Segment intensity from `(phi_stream, P_stream(i))` pairs of the streams
/// covering the segment.
pub fn segment_intensity(contributions: &[(f64, f64)]) -> Result<f64, ModelError> {
    let mut phi = 0.0;
    for &(phi_stream, p) in contributions {
        check_param("phi", phi_stream, phi_stream >= 0.0, "must be non-negative")?;
        check_probability("P", p)?;
        phi += phi_stream * p;
    }
    Ok(phi)
}

/// A stream together with its steady-state Poisson parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamLoad {
    pub phi: f64,
    pub spec: StreamSpec,
}

/// `phi_i` for every segment `1..=n_segments`.
pub fn segment_intensities(
    loads: &[StreamLoad],
    m: f64,
    d: f64,
    n_segments: u32,
) -> Result<Vec<f64>, ModelError> {
    (1..=n_segments)
        .map(|i| {
            let mut pairs = Vec::with_capacity(loads.len());
            for load in loads.iter().filter(|l| l.spec.covers(i, d)) {
                let p = stream_segment_probability(
                    m,
                    d,
                    i,
                    load.spec.strip_offset,
                    load.spec.strip_length,
                )?;
                pairs.push((load.phi, p));
            }
            segment_intensity(&pairs)
        })
        .collect()
}

/// Poisson parameter of the population over the first `n_segments` segments.
///
/// Each stream contributes `phi * P(n_total)`, where `P(n_total)` is the
/// aggregate mass of the stream over the covered segments in a single
/// closed-form evaluation.
pub fn total_intensity(
    loads: &[StreamLoad],
    m: f64,
    d: f64,
    n_segments: u32,
) -> Result<f64, ModelError> {
    check_param("n_segments", n_segments as f64, n_segments >= 1, "need at least one segment")?;
    let mut phi = 0.0;
    for load in loads {
        load.spec.validate()?;
        check_param("phi", load.phi, load.phi >= 0.0, "must be non-negative")?;
        let covered: Vec<u32> = (1..=n_segments).filter(|&i| load.spec.covers(i, d)).collect();
        let (Some(&first), Some(&last)) = (covered.first(), covered.last()) else {
            continue;
        };
        let off = load.spec.strip_offset;
        let len = load.spec.strip_length;
        let lo = ((first - 1) as f64 * d - off).max(0.0);
        let hi = (last as f64 * d - off).min(len);
        phi += load.phi * strip_mass(m, lo, hi, len)?.min(1.0);
    }
    Ok(phi)
}

/// Poisson count distribution with parameter `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentDistribution {
    pub phi: f64,
}

impl SegmentDistribution {
    pub fn new(phi: f64) -> Result<Self, ModelError> {
        check_param("phi", phi, phi >= 0.0 && phi.is_finite(), "must be non-negative")?;
        Ok(Self { phi })
    }

    pub fn pmf(&self, n: u64) -> f64 {
        population_pmf(self, n)
    }

    pub fn pgf(&self, z: f64) -> Result<f64, ModelError> {
        population_pgf(self, z)
    }
}

/// `e^{-phi} phi^n / n!`, evaluated in log space.
pub fn population_pmf(dist: &SegmentDistribution, n: u64) -> f64 {
    let phi = dist.phi;
    if phi == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    (-phi + nf * phi.ln() - statrs::function::gamma::ln_gamma(nf + 1.0)).exp()
}

/// `E[z^N] = e^{-phi (1 - z)}` for `z` in `[0, 1]`.
pub fn population_pgf(dist: &SegmentDistribution, z: f64) -> Result<f64, ModelError> {
    check_probability("z", z)?;
    Ok((-dist.phi * (1.0 - z)).exp())
}

fn segment_bounds(d: f64, i: u32) -> (f64, f64) {
    ((i - 1) as f64 * d, i as f64 * d)
}

fn check_segment(m: f64, d: f64, i: u32) -> Result<(), ModelError> {
    check_param("m", m, m.is_finite(), "must be finite")?;
    check_param("d", d, d > 0.0 && d.is_finite(), "must be positive")?;
    check_param("i", i as f64, i >= 1, "segments are 1-based")
}

/// Density of a node position inside segment `i`.
pub fn segment_position_pdf(m: f64, d: f64, i: u32, r: f64) -> Result<f64, ModelError> {
    check_segment(m, d, i)?;
    let (lo, hi) = segment_bounds(d, i);
    let tol = 1e-12 * hi.max(1.0);
    if !(r >= lo - tol && r <= hi + tol) {
        return Err(ModelError::OutsideSegment { r, lo, hi });
    }
    Ok(pdf_unchecked(m, d, r.clamp(lo, hi) - lo))
}

/// Density at offset `s` in `[0, d]` from the segment start.
#[inline]
fn pdf_unchecked(m: f64, d: f64, s: f64) -> f64 {
    if m == 0.0 {
        1.0 / d
    } else {
        (m.abs().ln() + m * s - ln_abs_expm1(m * d)).exp()
    }
}

/// Position CDF inside segment `i`, as a function of the offset `s = r - (i-1)d`.
pub fn segment_position_cdf(m: f64, d: f64, s: f64) -> f64 {
    let s = s.clamp(0.0, d);
    if m == 0.0 {
        return s / d;
    }
    let md = m * d;
    if md > numeric::LOG_SPACE_THRESHOLD {
        (m * (s - d)).exp() * (-(-m * s).exp_m1()) / (-(-md).exp_m1())
    } else {
        (m * s).exp_m1() / md.exp_m1()
    }
}

/// Inverse of [`segment_position_cdf`]: offset into the segment for `u` in `[0, 1)`.
pub fn segment_position_quantile(m: f64, d: f64, u: f64) -> f64 {
    let s = if m == 0.0 {
        u * d
    } else {
        let md = m * d;
        if md > numeric::LOG_SPACE_THRESHOLD {
            d + (u + (1.0 - u) * (-md).exp()).ln() / m
        } else {
            (u * md.exp_m1()).ln_1p() / m
        }
    };
    s.clamp(0.0, d)
}

/// Probability that a node in segment `i` and a node in segment `i + 1` are
/// closer than `d`, by Richardson-checked composite Simpson over both positions.
pub fn direct_comm_probability(
    m: f64,
    d: f64,
    i: u32,
    quadrature_steps: usize,
) -> Result<f64, ModelError> {
    check_segment(m, d, i)?;
    check_param("quadrature_steps", quadrature_steps as f64, quadrature_steps >= 100, "need at least 100 steps")?;
    let (lo, _) = segment_bounds(d, i);
    let (next_lo, _) = segment_bounds(d, i + 1);
    // Both densities depend only on the offset into their segment; the
    // absolute bounds are kept so the integral reads as Pr(x_{i+1} - x_i < d).
    let estimate = |n: usize| {
        numeric::simpson(
            |r1| {
                let inner = numeric::simpson(
                    |r2| pdf_unchecked(m, d, r2 - next_lo),
                    next_lo,
                    r1 + d,
                    n,
                );
                pdf_unchecked(m, d, r1 - lo) * inner
            },
            lo,
            lo + d,
            n,
        )
    };
    let (refined, converged) =
        numeric::simpson_refine(estimate, quadrature_steps, QUADRATURE_REL_TOL, MAX_DOUBLINGS);
    if !converged {
        return Err(ModelError::NotConverged {
            coarse: refined.coarse,
            fine: refined.fine,
        });
    }
    Ok(refined.value.clamp(0.0, 1.0))
}

/// Probability of relaying across three consecutive segments.
pub fn indirect_comm_probability(p_i: f64, p_next: f64) -> Result<f64, ModelError> {
    check_probability("P_i", p_i)?;
    check_probability("P_next", p_next)?;
    Ok(p_i * p_next)
}

/// Efficiency in percent.
pub fn efficiency(p: f64) -> Result<f64, ModelError> {
    check_probability("P", p)?;
    Ok(100.0 * p)
}

/// `prod_{i=1}^{n_total-1} P_i * P_{i+1}`, taken literally: every interior
/// link probability appears twice.
pub fn chain_comm_probability(per_segment: &[f64], n_total: usize) -> Result<f64, ModelError> {
    chain_product(per_segment, n_total, 1.0)
}

pub(crate) fn chain_product(per_segment: &[f64], n_total: usize, link: f64) -> Result<f64, ModelError> {
    check_param("n_total", n_total as f64, n_total >= 1, "need at least one segment")?;
    check_param(
        "n_total",
        n_total as f64,
        n_total <= per_segment.len(),
        "exceeds the number of segment probabilities",
    )?;
    check_probability("P_link", link)?;
    for &p in &per_segment[..n_total] {
        check_probability("P_i", p)?;
    }
    Ok(per_segment[..n_total]
        .windows(2)
        .map(|w| w[0] * w[1] * link)
        .product())
}

/// Node-density heuristic `1 / n`.
pub fn density_heuristic(n: u32) -> Result<f64, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "node density must be at least 1",
        });
    }
    Ok(1.0 / n as f64)
}

/// Direct, pairwise-indirect, efficiency and chain figures for a run of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityReport {
    pub per_segment_direct: Vec<f64>,
    pub pairwise_indirect: Vec<f64>,
    /// Percent, one per entry of `pairwise_indirect`.
    pub efficiency: Vec<f64>,
    pub chain: f64,
}

impl ConnectivityReport {
    pub fn from_direct(per_segment_direct: Vec<f64>) -> Result<Self, ModelError> {
        let pairwise_indirect = per_segment_direct
            .windows(2)
            .map(|w| indirect_comm_probability(w[0], w[1]))
            .collect::<Result<Vec<_>, _>>()?;
        let efficiency = pairwise_indirect
            .iter()
            .map(|&p| efficiency(p))
            .collect::<Result<Vec<_>, _>>()?;
        let chain = chain_comm_probability(&per_segment_direct, per_segment_direct.len().max(1))
            .or_else(|e| if per_segment_direct.is_empty() { Ok(1.0) } else { Err(e) })?;
        Ok(Self {
            per_segment_direct,
            pairwise_indirect,
            efficiency,
            chain,
        })
    }

    /// Direct probabilities for segment pairs `(i, i+1)`, `i = 1..n_segments-1`.
    pub fn for_strip(strip: &StripModel, quadrature_steps: usize) -> Result<Self, ModelError> {
        let m = strip.m();
        let direct = (1..strip.n_segments.max(2))
            .map(|i| direct_comm_probability(m, strip.d, i, quadrature_steps))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_direct(direct)
    }
}
