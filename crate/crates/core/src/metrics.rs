//! Efficiency, fairness and the raw counters they are derived from.

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive};
use serde::Serialize;

use crate::aal5::{cells_for_segment, CELL_BYTES};
use crate::event::SimTime;
use crate::switch::{BufferStats, DropReason};

/// Fraction of the link rate left for TCP payload: `mss / (53 * cells)`.
pub fn payload_fraction(mss: u64) -> Ratio<u64> {
    Ratio::new(mss, CELL_BYTES * cells_for_segment(mss))
}

fn cast<F: FromPrimitive>(v: u64) -> F {
    F::from_u64(v).expect("u64 representable as float")
}

/// Highest TCP goodput a link can carry given ATM framing, in bits/s.
pub fn max_possible_throughput<F>(link_rate_bps: F, mss: u64) -> F
where
    F: Float + FromPrimitive,
{
    let frac = payload_fraction(mss);
    link_rate_bps * cast::<F>(*frac.numer()) / cast::<F>(*frac.denom())
}

/// Sum of throughputs over the maximum possible throughput.
pub fn efficiency<F>(throughputs_bps: &[F], link_rate_bps: F, mss: u64) -> F
where
    F: Float + FromPrimitive,
{
    let total = throughputs_bps.iter().fold(F::zero(), |acc, &x| acc + x);
    total / max_possible_throughput(link_rate_bps, mss)
}

/// Jain's fairness index, with a flag for the all-zero vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fairness<F> {
    pub value: F,
    /// Set when every input was zero; `value` is then 1 by convention.
    pub degenerate: bool,
}

/// `(Σx)² / (n · Σx²)`.
pub fn fairness_index<F: Float>(xs: &[F]) -> Fairness<F> {
    assert!(!xs.is_empty(), "fairness index needs at least one value");
    let (sum, sum_sq) = xs
        .iter()
        .fold((F::zero(), F::zero()), |(s, q), &x| (s + x, q + x * x));
    if sum_sq == F::zero() {
        return Fairness {
            value: F::one(),
            degenerate: true,
        };
    }
    let n = F::from(xs.len()).expect("length representable as float");
    Fairness {
        value: sum * sum / (n * sum_sq),
        degenerate: false,
    }
}

/// Cell bookkeeping across the whole network. Every injected cell is, at the
/// end of a run, either delivered to a host, dropped at a switch, or still
/// resident in a queue, a transmitter or on a wire.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CellLedger {
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub resident: u64,
}

impl CellLedger {
    pub fn balanced(&self) -> bool {
        self.injected == self.delivered + self.dropped + self.resident
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SwitchReport {
    pub name: String,
    /// Largest occupancy over all output ports of this switch.
    pub max_queue_cells: u64,
    pub drops_by_reason: [u64; 4],
    pub drops_per_vc: Vec<u64>,
}

impl SwitchReport {
    pub fn from_ports<'a>(name: &str, ports: impl IntoIterator<Item = &'a BufferStats>) -> Self {
        let mut report = SwitchReport {
            name: name.to_string(),
            max_queue_cells: 0,
            drops_by_reason: [0; 4],
            drops_per_vc: Vec::new(),
        };
        for stats in ports {
            report.max_queue_cells = report.max_queue_cells.max(stats.max_occupancy);
            for (acc, d) in report.drops_by_reason.iter_mut().zip(stats.drops_by_reason) {
                *acc += d;
            }
            if report.drops_per_vc.len() < stats.drops_per_vc.len() {
                report.drops_per_vc.resize(stats.drops_per_vc.len(), 0);
            }
            for (acc, d) in report.drops_per_vc.iter_mut().zip(&stats.drops_per_vc) {
                *acc += d;
            }
        }
        report
    }

    pub fn drops(&self) -> u64 {
        self.drops_by_reason.iter().sum()
    }

    pub fn drops_for(&self, reason: DropReason) -> u64 {
        self.drops_by_reason[reason.index()]
    }
}

/// Raw counters of one run. Efficiency and fairness are always derived from
/// these on demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub per_conn_delivered_bytes: Vec<u64>,
    pub duration: SimTime,
    pub link_rate_bps: u64,
    pub mss: u32,
    pub switches: Vec<SwitchReport>,
    pub reassembly_discards: u64,
    pub retransmitted_segments: u64,
    pub timeouts: u64,
    pub cells: CellLedger,
    pub events: u64,
}

impl RunResult {
    pub fn max_queue_cells(&self) -> u64 {
        self.switches
            .iter()
            .map(|s| s.max_queue_cells)
            .max()
            .unwrap_or(0)
    }

    pub fn drops_total(&self) -> u64 {
        self.switches.iter().map(SwitchReport::drops).sum()
    }

    pub fn throughputs_bps<F: Float + FromPrimitive>(&self) -> Vec<F> {
        let secs = F::from_f64(self.duration.as_secs_f64()).expect("finite duration");
        self.per_conn_delivered_bytes
            .iter()
            .map(|&b| cast::<F>(b * 8) / secs)
            .collect()
    }

    pub fn metrics<F: Float + FromPrimitive>(&self) -> RunMetrics<F> {
        let throughputs = self.throughputs_bps::<F>();
        let link = cast::<F>(self.link_rate_bps);
        let fairness = fairness_index(&throughputs);
        RunMetrics {
            efficiency: efficiency(&throughputs, link, u64::from(self.mss)),
            fairness: fairness.value,
            fairness_degenerate: fairness.degenerate,
            throughputs_bps: throughputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics<F> {
    pub efficiency: F,
    pub fairness: F,
    pub fairness_degenerate: bool,
    pub throughputs_bps: Vec<F>,
}
