//! Communication time and link persistence for nodes on a discrete speed lattice.
//!
//! Speeds run over `v_min + k * delta_v`, `k = 0..=V_c`. Same-speed pairs keep
//! their link for the whole horizon; distinct-speed pairs keep it until the
//! separation leaves the transmission range.

use std::fmt;

use crate::connectivity;
use crate::error::{check_param, check_probability, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Same,
    Opposite,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Same => "same",
            Direction::Opposite => "opposite",
        })
    }
}

/// Relative speed used for opposite-direction pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OppositeSpeed {
    /// `v_i + v_j`, the speed at which approaching nodes close the gap.
    #[default]
    Closing,
    /// `|v_i - v_j|`, the same-direction denominator reused as written.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicsConfig {
    pub v_min: f64,
    pub v_max: f64,
    pub delta_v: f64,
    /// Transmission range (m).
    pub t_r: f64,
    /// Inter-node separation `R / n` (m).
    pub spacing: f64,
    /// Simulation time (s).
    pub horizon: f64,
}

impl KinematicsConfig {
    pub fn new(
        v_min: f64,
        v_max: f64,
        delta_v: f64,
        t_r: f64,
        spacing: f64,
        horizon: f64,
    ) -> Result<Self, ModelError> {
        let cfg = Self {
            v_min,
            v_max,
            delta_v,
            t_r,
            spacing,
            horizon,
        };
        cfg.speed_levels()?;
        Ok(cfg)
    }

    /// Number of speed steps `V_c = (v_max - v_min) / delta_v`; validates the config.
    pub fn speed_levels(&self) -> Result<u32, ModelError> {
        check_param("v_min", self.v_min, self.v_min >= 0.0 && self.v_min.is_finite(), "must be non-negative")?;
        check_param("v_max", self.v_max, self.v_max >= self.v_min && self.v_max.is_finite(), "must be at least v_min")?;
        check_param("delta_v", self.delta_v, self.delta_v > 0.0, "must be positive")?;
        check_param("t_r", self.t_r, self.t_r > 0.0 && self.t_r.is_finite(), "must be positive")?;
        check_param("spacing", self.spacing, self.spacing > 0.0 && self.spacing.is_finite(), "must be positive")?;
        check_param("horizon", self.horizon, self.horizon > 0.0 && self.horizon.is_finite(), "must be positive")?;
        let ratio = (self.v_max - self.v_min) / self.delta_v;
        let levels = ratio.round();
        check_param(
            "delta_v",
            self.delta_v,
            (ratio - levels).abs() <= 1e-9 * ratio.max(1.0) && levels <= u32::MAX as f64,
            "(v_max - v_min) / delta_v must be a whole number",
        )?;
        Ok(levels as u32)
    }

    /// Speed of lattice index `k`.
    pub fn speed(&self, k: u32) -> f64 {
        self.v_min + k as f64 * self.delta_v
    }
}

/// `V_c` for a config.
pub fn speed_levels(cfg: &KinematicsConfig) -> Result<u32, ModelError> {
    cfg.speed_levels()
}

/// Nodes within range: `floor(t_r / spacing)` for the same direction,
/// `floor(2 t_r / spacing)` for the opposite one, never less than 1.
pub fn nodes_in_range(t_r: f64, spacing: f64, direction: Direction) -> u32 {
    let reach = match direction {
        Direction::Same => t_r,
        Direction::Opposite => 2.0 * t_r,
    };
    let ratio = reach / spacing;
    // Absorb representation error such as 0.3 / 0.1 = 2.9999999999999996.
    let n = (ratio + 1e-9 * ratio.max(1.0)).floor();
    if n.is_finite() && n >= 1.0 {
        n.min(u32::MAX as f64) as u32
    } else {
        1
    }
}

/// Same-direction, same-speed communication time, summed literally:
/// `sum_{k=0}^{V_c} sum_{m=1}^{N_i} T / N_i`.
pub fn t_comm_same(cfg: &KinematicsConfig) -> Result<f64, ModelError> {
    t_comm_same_speed(cfg, Direction::Same)
}

/// Same-speed communication time for either direction. Opposite-direction
/// pairs use `N_o` terms over a divisor of `N_o + 1`.
pub fn t_comm_same_speed(cfg: &KinematicsConfig, direction: Direction) -> Result<f64, ModelError> {
    let levels = cfg.speed_levels()?;
    let n = nodes_in_range(cfg.t_r, cfg.spacing, direction);
    let divisor = match direction {
        Direction::Same => n as f64,
        Direction::Opposite => n as f64 + 1.0,
    };
    let mut total = 0.0;
    for _ in 0..=levels {
        let mut inner = 0.0;
        for _ in 1..=n {
            inner += cfg.horizon;
        }
        total += inner / divisor;
    }
    Ok(total)
}

/// Distinct-speed communication time with closing speed for opposite pairs.
pub fn t_comm_diff(cfg: &KinematicsConfig, direction: Direction) -> Result<f64, ModelError> {
    t_comm_diff_with(cfg, direction, OppositeSpeed::Closing)
}

/// Double sum over speed indices `i != j`:
///
/// * same direction: `[sum_{m=1}^{N_i} (T_r - m d) / |v_i - v_j|] / N_i`
/// * opposite: `[sum_{m=0}^{N_o} (2 T_r - m d) / rel] / (N_o + 1)`, where
///   `rel` follows `mode`.
///
/// Terms with a negative numerator (possible only when `spacing > t_r`
/// forces the count up to 1) contribute zero.
pub fn t_comm_diff_with(
    cfg: &KinematicsConfig,
    direction: Direction,
    mode: OppositeSpeed,
) -> Result<f64, ModelError> {
    let levels = cfg.speed_levels()?;
    let n = nodes_in_range(cfg.t_r, cfg.spacing, direction);
    let (reach, first_m, divisor) = match direction {
        Direction::Same => (cfg.t_r, 1, n as f64),
        Direction::Opposite => (2.0 * cfg.t_r, 0, n as f64 + 1.0),
    };
    let mut total = 0.0;
    for i in 0..=levels {
        for j in 0..=levels {
            if i == j {
                continue;
            }
            let (vi, vj) = (cfg.speed(i), cfg.speed(j));
            let rel = match (direction, mode) {
                (Direction::Same, _) | (Direction::Opposite, OppositeSpeed::Literal) => (vi - vj).abs(),
                (Direction::Opposite, OppositeSpeed::Closing) => vi + vj,
            };
            let inner: f64 = (first_m..=n)
                .map(|m| (reach - m as f64 * cfg.spacing).max(0.0) / rel)
                .sum();
            total += inner / divisor;
        }
    }
    Ok(total)
}

/// Average link lifetime `(T_same_speed + T_diff) / (V_c + 1)^2`.
pub fn ct(cfg: &KinematicsConfig, direction: Direction) -> Result<f64, ModelError> {
    ct_with(cfg, direction, OppositeSpeed::Closing)
}

pub fn ct_with(cfg: &KinematicsConfig, direction: Direction, mode: OppositeSpeed) -> Result<f64, ModelError> {
    let levels = cfg.speed_levels()? as f64;
    let same = t_comm_same_speed(cfg, direction)?;
    let diff = t_comm_diff_with(cfg, direction, mode)?;
    Ok((same + diff) / ((levels + 1.0) * (levels + 1.0)))
}

/// Link persistence probability: the raw `1 - T / CT` and its clamp to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProbability {
    pub raw: f64,
    pub clamped: f64,
}

/// `1 - horizon / ct`, clamped.
pub fn p_link_from(horizon: f64, ct: f64) -> Result<LinkProbability, ModelError> {
    if ct == 0.0 {
        return Err(ModelError::Degenerate("average link lifetime is zero"));
    }
    check_param("ct", ct, ct > 0.0 && ct.is_finite(), "must be positive")?;
    let raw = 1.0 - horizon / ct;
    Ok(LinkProbability {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

pub fn p_link(cfg: &KinematicsConfig, direction: Direction) -> Result<LinkProbability, ModelError> {
    p_link_from(cfg.horizon, ct(cfg, direction)?)
}

/// `P_i * P_next * P_link`.
pub fn coupled_indirect(p_i: f64, p_next: f64, p_link: f64) -> Result<f64, ModelError> {
    check_probability("P_link", p_link)?;
    Ok(connectivity::indirect_comm_probability(p_i, p_next)? * p_link)
}

/// `prod_{i=1}^{n_total-1} P_i * P_{i+1} * P_link`.
pub fn coupled_chain(per_segment: &[f64], n_total: usize, p_link: f64) -> Result<f64, ModelError> {
    connectivity::chain_product(per_segment, n_total, p_link)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTimeReport {
    pub direction: Direction,
    pub speed_levels: u32,
    /// Same-speed communication time for `direction` (s).
    pub t_comm_same: f64,
    /// Distinct-speed communication time for `direction` (s).
    pub t_comm_diff: f64,
    /// Average link lifetime (s).
    pub ct: f64,
    /// `T / CT`.
    pub p_break: f64,
    pub p_link: f64,
    pub p_link_raw: f64,
}

impl LinkTimeReport {
    pub fn compute(cfg: &KinematicsConfig, direction: Direction) -> Result<Self, ModelError> {
        Self::compute_with(cfg, direction, OppositeSpeed::Closing)
    }

    pub fn compute_with(
        cfg: &KinematicsConfig,
        direction: Direction,
        mode: OppositeSpeed,
    ) -> Result<Self, ModelError> {
        let speed_levels = cfg.speed_levels()?;
        let t_comm_same = t_comm_same_speed(cfg, direction)?;
        let t_comm_diff = t_comm_diff_with(cfg, direction, mode)?;
        let ct = ct_with(cfg, direction, mode)?;
        let p = p_link_from(cfg.horizon, ct)?;
        Ok(Self {
            direction,
            speed_levels,
            t_comm_same,
            t_comm_diff,
            ct,
            p_break: cfg.horizon / ct,
            p_link: p.clamped,
            p_link_raw: p.raw,
        })
    }

    /// A single speed level leaves no distinct-speed pairs, so the link
    /// probability collapses to zero regardless of geometry.
    pub fn is_degenerate(&self) -> bool {
        self.speed_levels == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v_min: f64, v_max: f64, dv: f64, t_r: f64, spacing: f64, horizon: f64) -> KinematicsConfig {
        KinematicsConfig::new(v_min, v_max, dv, t_r, spacing, horizon).unwrap()
    }

    #[test]
    fn speed_level_examples() {
        assert_eq!(cfg(2.0, 30.0, 7.0, 100.0, 50.0, 900.0).speed_levels().unwrap(), 4);
        assert_eq!(cfg(10.0, 10.0, 5.0, 100.0, 50.0, 900.0).speed_levels().unwrap(), 0);
        assert_eq!(cfg(10.0, 20.0, 5.0, 100.0, 50.0, 900.0).speed_levels().unwrap(), 2);
        assert!(KinematicsConfig::new(10.0, 21.0, 5.0, 100.0, 50.0, 900.0).is_err());
        assert!(KinematicsConfig::new(10.0, 5.0, 5.0, 100.0, 50.0, 900.0).is_err());
        assert!(KinematicsConfig::new(1.0, 5.0, 0.0, 100.0, 50.0, 900.0).is_err());
    }

    #[test]
    fn nodes_in_range_examples() {
        assert_eq!(nodes_in_range(100.0, 50.0, Direction::Same), 2);
        assert_eq!(nodes_in_range(100.0, 50.0, Direction::Opposite), 4);
        assert_eq!(nodes_in_range(100.0, 30.0, Direction::Same), 3);
        assert_eq!(nodes_in_range(0.3, 0.1, Direction::Same), 3);
        assert_eq!(nodes_in_range(10.0, 50.0, Direction::Same), 1);
    }

    #[test]
    fn t_comm_same_examples() {
        assert_eq!(t_comm_same(&cfg(10.0, 10.0, 5.0, 100.0, 50.0, 100.0)).unwrap(), 100.0);
        assert_eq!(t_comm_same(&cfg(10.0, 20.0, 5.0, 100.0, 50.0, 900.0)).unwrap(), 2700.0);
        assert_eq!(t_comm_same(&cfg(10.0, 30.0, 5.0, 100.0, 50.0, 900.0)).unwrap(), 4500.0);
    }

    #[test]
    fn t_comm_diff_same_direction_example() {
        let c = cfg(10.0, 20.0, 5.0, 100.0, 50.0, 900.0);
        assert_eq!(t_comm_diff(&c, Direction::Same).unwrap(), 25.0);
        let single = cfg(10.0, 10.0, 5.0, 100.0, 50.0, 900.0);
        assert_eq!(t_comm_diff(&single, Direction::Same).unwrap(), 0.0);
        assert_eq!(t_comm_diff(&single, Direction::Opposite).unwrap(), 0.0);
    }

    #[test]
    fn literal_mode_only_changes_opposite_direction() {
        let c = cfg(10.0, 20.0, 5.0, 100.0, 50.0, 900.0);
        let same_lit = t_comm_diff_with(&c, Direction::Same, OppositeSpeed::Literal).unwrap();
        assert_eq!(same_lit, 25.0);
        let closing = t_comm_diff_with(&c, Direction::Opposite, OppositeSpeed::Closing).unwrap();
        let literal = t_comm_diff_with(&c, Direction::Opposite, OppositeSpeed::Literal).unwrap();
        assert!(literal > closing);
    }

    #[test]
    fn ct_and_p_link_examples() {
        let single = cfg(10.0, 10.0, 5.0, 100.0, 50.0, 100.0);
        assert_eq!(ct(&single, Direction::Same).unwrap(), 100.0);
        let p = p_link(&single, Direction::Same).unwrap();
        assert_eq!((p.raw, p.clamped), (0.0, 0.0));

        let c = cfg(10.0, 20.0, 5.0, 100.0, 50.0, 900.0);
        let lifetime = ct(&c, Direction::Same).unwrap();
        assert!((lifetime - 2725.0 / 9.0).abs() < 1e-12);
        let p = p_link(&c, Direction::Same).unwrap();
        assert!((p.raw - (1.0 - 900.0 * 9.0 / 2725.0)).abs() < 1e-12);
        assert!(p.raw < -1.97 && p.raw > -1.98);
        assert_eq!(p.clamped, 0.0);

        assert_eq!(p_link_from(100.0, 200.0).unwrap().clamped, 0.5);
        assert!(p_link_from(100.0, 0.0).is_err());
    }

    #[test]
    fn coupled_examples() {
        assert_eq!(coupled_indirect(0.5, 0.5, 1.0).unwrap(), 0.25);
        assert_eq!(coupled_indirect(0.5, 0.5, 0.0).unwrap(), 0.0);
        assert_eq!(coupled_indirect(0.5, 0.5, 0.5).unwrap(), 0.125);
        assert!(coupled_indirect(0.5, 0.5, 1.5).is_err());
        assert_eq!(coupled_chain(&[0.5, 0.5], 2, 0.5).unwrap(), 0.125);
        let ps = [0.9, 0.4, 0.7, 0.6];
        assert_eq!(
            coupled_chain(&ps, 4, 1.0).unwrap(),
            connectivity::chain_comm_probability(&ps, 4).unwrap()
        );
    }

    #[test]
    fn report_flags_single_speed() {
        let single = cfg(10.0, 10.0, 5.0, 100.0, 50.0, 100.0);
        let r = LinkTimeReport::compute(&single, Direction::Same).unwrap();
        assert!(r.is_degenerate());
        assert_eq!(r.p_link, 0.0);
        assert_eq!(r.p_break, 1.0);
        let r = LinkTimeReport::compute(&cfg(10.0, 20.0, 5.0, 100.0, 50.0, 900.0), Direction::Opposite).unwrap();
        assert!(!r.is_degenerate());
        assert!(r.ct > 0.0);
    }
}
