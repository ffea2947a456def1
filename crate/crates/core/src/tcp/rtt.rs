//! Smoothed RTT and mean-deviation estimator driving the retransmission
//! timeout, measured in whole timer ticks.

/// Internal fixed-point scale: values are kept in eighths of a tick.
const SCALE: i64 = 8;

/// Divides rounding away from zero so both averages settle exactly on a
/// constant input instead of stalling one unit short.
fn div_away(n: i64, d: i64) -> i64 {
    let q = n.abs().div_euclid(d) + i64::from(n.abs() % d != 0);
    q * n.signum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RttEstimator {
    srtt: i64,
    rttvar: i64,
    rto: u64,
    min_rto: u64,
    max_rto: u64,
    /// Lower bound on the variance term, scaled.
    granularity: i64,
    initialized: bool,
}

impl RttEstimator {
    pub fn new(initial_rto: u64, max_rto: u64) -> Self {
        assert!(initial_rto >= 1 && max_rto >= initial_rto);
        Self {
            srtt: 0,
            rttvar: 0,
            rto: initial_rto,
            min_rto: 1,
            max_rto,
            granularity: 0,
            initialized: false,
        }
    }

    /// Raises the lower clamp on computed timeouts (1 tick by default).
    pub fn with_min_rto(mut self, min_rto: u64) -> Self {
        assert!(min_rto >= 1 && min_rto <= self.max_rto);
        self.min_rto = min_rto;
        self
    }

    /// Uses `srtt + max(g, 4 * rttvar)` instead of `srtt + 4 * rttvar`.
    /// With whole-tick samples the variance decays to zero on a steady
    /// path, which leaves the timeout equal to the measured RTT; one tick
    /// of slack keeps it above it.
    pub fn with_granularity(mut self, ticks: u64) -> Self {
        self.granularity = ticks as i64 * SCALE;
        self
    }

    /// Current retransmission timeout in ticks.
    pub fn rto(&self) -> u64 {
        self.rto
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Smoothed RTT in ticks.
    pub fn srtt(&self) -> f64 {
        self.srtt as f64 / SCALE as f64
    }

    /// Mean deviation in ticks.
    pub fn rttvar(&self) -> f64 {
        self.rttvar as f64 / SCALE as f64
    }

    /// Folds in one RTT sample (ticks). Callers must skip samples from
    /// retransmitted segments.
    pub fn update(&mut self, sample_ticks: u64) {
        let sample = sample_ticks as i64 * SCALE;
        if self.initialized {
            let err = sample - self.srtt;
            self.srtt += div_away(err, 8);
            self.rttvar += div_away(err.abs() - self.rttvar, 4);
        } else {
            self.srtt = sample;
            self.rttvar = sample / 2;
            self.initialized = true;
        }
        let raw = (self.srtt + self.granularity.max(4 * self.rttvar)).max(0) as u64;
        self.rto = raw.div_ceil(SCALE as u64).clamp(self.min_rto, self.max_rto);
    }

    /// Exponential backoff after a timeout.
    pub fn backoff(&mut self) {
        self.rto = (self.rto * 2).min(self.max_rto);
    }
}
