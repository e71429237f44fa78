use std::collections::HashMap;

use super::engine::PacketKind;
use super::trace::{TraceEvent, TraceRecord};

/// Raw counters of a run and the throughput, delay and routing-load figures
/// derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub duration: f64,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub bytes_delivered: u64,
    /// Per-hop control transmissions.
    pub control_transmissions: u64,
    /// Summed end-to-end delay of delivered packets (ns).
    pub sum_delay_ns: u128,
    /// Bytes per second.
    pub throughput: f64,
    /// Mean end-to-end delay (s); 0 when nothing was delivered.
    pub e2ed: f64,
    /// Control transmissions per delivered packet; `None` when nothing was delivered.
    pub nrl: Option<f64>,
}

impl SimMetrics {
    pub fn from_counts(
        duration: f64,
        data_sent: u64,
        data_delivered: u64,
        bytes_delivered: u64,
        control_transmissions: u64,
        sum_delay_ns: u128,
    ) -> SimMetrics {
        let (e2ed, nrl) = if data_delivered == 0 {
            (0.0, None)
        } else {
            (
                sum_delay_ns as f64 / 1e9 / data_delivered as f64,
                Some(control_transmissions as f64 / data_delivered as f64),
            )
        };
        SimMetrics {
            duration,
            data_sent,
            data_delivered,
            bytes_delivered,
            control_transmissions,
            sum_delay_ns,
            throughput: bytes_delivered as f64 / duration,
            e2ed,
            nrl,
        }
    }

    /// Rebuilds the metrics from a trace alone.
    pub fn from_trace(duration: f64, records: &[TraceRecord]) -> SimMetrics {
        let mut born = HashMap::new();
        let (mut sent, mut delivered, mut bytes, mut control, mut delay) = (0u64, 0u64, 0u64, 0u64, 0u128);
        for r in records {
            match (r.event, r.kind) {
                (TraceEvent::Gen, PacketKind::Data) => {
                    sent += 1;
                    born.insert(r.packet_id, r.time);
                }
                (TraceEvent::Recv, PacketKind::Data) => {
                    delivered += 1;
                    bytes += r.bytes as u64;
                    if let Some(t0) = born.get(&r.packet_id) {
                        delay += (r.time.0 - t0.0) as u128;
                    }
                }
                (TraceEvent::Tx, PacketKind::Control) => control += 1,
                _ => {}
            }
        }
        SimMetrics::from_counts(duration, sent, delivered, bytes, control, delay)
    }

    /// NRL as printed in reports: `NA` when undefined.
    pub fn nrl_display(&self) -> String {
        match self.nrl {
            Some(v) => format!("{v}"),
            None => "NA".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_figures() {
        let m = SimMetrics::from_counts(100.0, 10, 10, 5120, 4, 10 * 2_049_000);
        assert_eq!(m.throughput, 51.2);
        assert_eq!(m.nrl, Some(0.4));
        assert!((m.e2ed - 0.002049).abs() < 1e-15);
        let none = SimMetrics::from_counts(100.0, 10, 0, 0, 7, 0);
        assert_eq!(none.e2ed, 0.0);
        assert_eq!(none.nrl, None);
        assert_eq!(none.nrl_display(), "NA");
    }
}
