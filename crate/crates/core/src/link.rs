//! Point-to-point links with a fixed bit rate and propagation delay.

use crate::aal5::CELL_BYTES;
use crate::event::SimTime;

const NANOS_PER_SEC: u128 = 1_000_000_000;

/// Timing of one cell handed to a [`Link`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub start: SimTime,
    /// Transmitter becomes free again.
    pub end: SimTime,
    /// Last bit reaches the far end.
    pub arrival: SimTime,
}

/// A serializing transmitter plus a propagation delay.
///
/// One cell takes `53 * 8 / rate` seconds, which is not a whole number of
/// nanoseconds at 155.52 Mbps. Per-cell durations are drawn from an exact
/// rational accumulator rounded half-up, so the k-th back-to-back cell ends
/// at `round(k * cell_time)` with no long-run drift.
#[derive(Debug, Clone)]
pub struct Link {
    rate_bps: u64,
    prop_delay: SimTime,
    busy_until: SimTime,
    // remainder of the running sum, in units of 1/rate_bps ns
    carry: u128,
}

impl Link {
    pub fn new(rate_bps: u64, prop_delay: SimTime) -> Self {
        assert!(rate_bps > 0, "link rate must be positive");
        Self {
            rate_bps,
            prop_delay,
            busy_until: SimTime::ZERO,
            carry: u128::from(rate_bps) / 2,
        }
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn prop_delay(&self) -> SimTime {
        self.prop_delay
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn is_idle(&self, now: SimTime) -> bool {
        self.busy_until <= now
    }

    fn next_cell_time(&mut self) -> SimTime {
        let rate = u128::from(self.rate_bps);
        let total = self.carry + u128::from(CELL_BYTES * 8) * NANOS_PER_SEC;
        self.carry = total % rate;
        SimTime::from_nanos((total / rate) as u64)
    }

    /// Serializes one cell onto the link.
    pub fn transmit(&mut self, now: SimTime) -> Transmission {
        let start = now.max(self.busy_until);
        let end = start + self.next_cell_time();
        self.busy_until = end;
        Transmission {
            start,
            end,
            arrival: end + self.prop_delay,
        }
    }
}
