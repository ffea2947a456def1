use crate::aal5::{ConnId, Segment};
use crate::error::SimError;

use super::rtt::RttEstimator;
use super::TcpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    SlowStart,
    CongestionAvoidance,
}

/// What a cumulative ack did to the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckOutcome {
    NewData {
        acked_bytes: u64,
        rtt_sample: Option<u64>,
    },
    Duplicate,
    Stale,
}

/// Infinite-source TCP sender without fast retransmit/recovery.
///
/// Losses are detected only by the coarse retransmission timer, after which
/// the sender falls back to one segment and resends everything from the
/// oldest unacknowledged byte (go-back-N).
#[derive(Debug, Clone)]
pub struct TcpSender {
    conn: ConnId,
    mss: u64,
    rcvwnd: u64,
    cwnd: u64,
    ssthresh: u64,
    cwnd_frac: u64,
    snd_una: u64,
    snd_nxt: u64,
    snd_max: u64,
    rtt: RttEstimator,
    /// Expiry tick of the retransmission timer.
    timer: Option<u64>,
    /// (end seq, send tick) of the one segment being timed.
    timing: Option<(u64, u64)>,
    pub(crate) stats: SenderStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub segments_sent: u64,
    pub retransmitted_segments: u64,
    pub timeouts: u64,
    pub duplicate_acks: u64,
    pub rtt_samples: u64,
}

impl TcpSender {
    pub fn new(conn: ConnId, params: &TcpParams) -> Self {
        let mss = u64::from(params.mss);
        Self {
            conn,
            mss,
            rcvwnd: params.rcvwnd,
            cwnd: mss,
            ssthresh: params.initial_ssthresh.max(2 * mss),
            cwnd_frac: 0,
            snd_una: 0,
            snd_nxt: 0,
            snd_max: 0,
            rtt: RttEstimator::new(params.initial_rto_ticks, params.max_rto_ticks)
                .with_min_rto(params.min_rto_ticks)
                .with_granularity(params.rto_granularity_ticks),
            timer: None,
            timing: None,
            stats: SenderStats::default(),
        }
    }

    pub fn conn(&self) -> ConnId {
        self.conn
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> u64 {
        self.ssthresh
    }

    pub fn snd_una(&self) -> u64 {
        self.snd_una
    }

    pub fn snd_nxt(&self) -> u64 {
        self.snd_nxt
    }

    pub fn snd_max(&self) -> u64 {
        self.snd_max
    }

    pub fn rto(&self) -> u64 {
        self.rtt.rto()
    }

    pub fn rtt(&self) -> &RttEstimator {
        &self.rtt
    }

    pub fn timer(&self) -> Option<u64> {
        self.timer
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    pub fn phase(&self) -> Phase {
        if self.cwnd < self.ssthresh {
            Phase::SlowStart
        } else {
            Phase::CongestionAvoidance
        }
    }

    /// `min(cwnd, rcvwnd)`.
    pub fn effective_window(&self) -> u64 {
        self.cwnd.min(self.rcvwnd)
    }

    pub fn bytes_in_flight(&self) -> u64 {
        self.snd_nxt - self.snd_una
    }

    /// Emits every full segment the window allows, appending to `out`.
    pub fn try_send(&mut self, tick_now: u64, out: &mut Vec<Segment>) -> usize {
        let limit = self.snd_una + self.effective_window();
        let before = out.len();
        while self.snd_nxt + self.mss <= limit {
            let seq = self.snd_nxt;
            if seq < self.snd_max {
                self.stats.retransmitted_segments += 1;
            } else if self.timing.is_none() {
                self.timing = Some((seq + self.mss, tick_now));
            }
            out.push(Segment::data(self.conn, seq, self.mss as u32));
            self.snd_nxt += self.mss;
            self.snd_max = self.snd_max.max(self.snd_nxt);
            self.stats.segments_sent += 1;
        }
        let sent = out.len() - before;
        if sent > 0 && self.timer.is_none() {
            self.timer = Some(tick_now + self.rtt.rto());
        }
        sent
    }

    pub fn on_ack(&mut self, ack_no: u64, tick_now: u64) -> Result<AckOutcome, SimError> {
        if ack_no > self.snd_max {
            return Err(SimError::AckBeyondSent {
                conn: self.conn,
                ack_no,
                snd_max: self.snd_max,
            });
        }
        if ack_no == self.snd_una {
            self.stats.duplicate_acks += 1;
            return Ok(AckOutcome::Duplicate);
        }
        if ack_no < self.snd_una {
            return Ok(AckOutcome::Stale);
        }

        let acked_bytes = ack_no - self.snd_una;
        self.snd_una = ack_no;
        // the receiver may have cached data past a go-back-N restart point
        self.snd_nxt = self.snd_nxt.max(ack_no);

        let mut rtt_sample = None;
        if let Some((end, sent_tick)) = self.timing {
            if ack_no >= end {
                let sample = tick_now - sent_tick;
                self.rtt.update(sample);
                self.stats.rtt_samples += 1;
                self.timing = None;
                rtt_sample = Some(sample);
            }
        }

        if self.cwnd < self.ssthresh {
            self.cwnd += self.mss;
        } else {
            self.cwnd_frac += self.mss * self.mss / self.cwnd;
            if self.cwnd_frac >= self.mss {
                self.cwnd += self.mss;
                self.cwnd_frac -= self.mss;
            }
        }

        self.timer = if self.snd_una < self.snd_max {
            Some(tick_now + self.rtt.rto())
        } else {
            None
        };
        Ok(AckOutcome::NewData {
            acked_bytes,
            rtt_sample,
        })
    }

    /// Retransmission timeout: halve into ssthresh, collapse the window and
    /// rewind to the oldest unacknowledged byte.
    pub fn on_timeout(&mut self, tick_now: u64) {
        self.ssthresh = (2 * self.mss).max((self.cwnd / 2).min(self.rcvwnd));
        self.cwnd = self.mss;
        self.cwnd_frac = 0;
        self.snd_nxt = self.snd_una;
        // Karn: never sample a segment that may be retransmitted
        self.timing = None;
        self.rtt.backoff();
        self.timer = Some(tick_now + self.rtt.rto());
        self.stats.timeouts += 1;
    }

    /// Called on every timer tick; fires the timeout when its expiry tick
    /// has been reached.
    pub fn timer_tick(&mut self, tick_now: u64) -> bool {
        match self.timer {
            Some(expiry) if tick_now >= expiry => {
                self.on_timeout(tick_now);
                true
            }
            _ => false,
        }
    }
}
