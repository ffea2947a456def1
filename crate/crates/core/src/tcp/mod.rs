//! TCP endpoints: slow start, congestion avoidance, a coarse retransmission
//! timer with go-back-N recovery, and an immediately-acking receiver.

mod receiver;
mod rtt;
mod sender;

pub use receiver::TcpReceiver;
pub use rtt::RttEstimator;
pub use sender::{AckOutcome, Phase, SenderStats, TcpSender};

/// Per-connection TCP parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcpParams {
    pub mss: u32,
    /// Receiver-advertised window in bytes.
    pub rcvwnd: u64,
    pub initial_ssthresh: u64,
    pub initial_rto_ticks: u64,
    /// Lower clamp on computed timeouts.
    pub min_rto_ticks: u64,
    pub max_rto_ticks: u64,
    /// Floor on the variance term of the timeout (0 disables it).
    pub rto_granularity_ticks: u64,
}

impl Default for TcpParams {
    fn default() -> Self {
        Self {
            mss: 512,
            rcvwnd: 65535,
            initial_ssthresh: 65535,
            initial_rto_ticks: 3,
            min_rto_ticks: 2,
            max_rto_ticks: 640,
            rto_granularity_ticks: 0,
        }
    }
}
