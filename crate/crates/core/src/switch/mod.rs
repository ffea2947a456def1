//! Output-buffered switch port: a FIFO cell queue with per-VC occupancy
//! accounting and a pluggable drop policy.

pub mod policy;

use std::collections::VecDeque;

use serde::Serialize;

use crate::aal5::{Cell, ConnId};
pub use policy::{DropDecision, DropReason, PolicyConfig, PolicyKind, ScaleFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PacketState {
    Accepting,
    Discarding(u64),
}

/// Counters exported at the end of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BufferStats {
    pub max_occupancy: u64,
    pub arrivals: u64,
    pub accepted: u64,
    pub departures: u64,
    /// Indexed by [`DropReason::index`].
    pub drops_by_reason: [u64; 4],
    pub drops_per_vc: Vec<u64>,
}

impl BufferStats {
    pub fn drops(&self) -> u64 {
        self.drops_by_reason.iter().sum()
    }

    pub fn drops_for(&self, reason: DropReason) -> u64 {
        self.drops_by_reason[reason.index()]
    }
}

/// FIFO cell buffer of capacity `K` (or unbounded).
///
/// Tracks occupancy `X`, per-VC counts `Y_i` and the number of active VCs
/// `N_a` incrementally. With auditing on, every mutation re-derives `X` and
/// `N_a` from the per-VC counts and panics on any mismatch.
#[derive(Debug, Clone)]
pub struct SwitchBuffer {
    capacity: Option<u64>,
    policy: PolicyConfig,
    queue: VecDeque<Cell>,
    per_vc: Vec<u64>,
    active: u64,
    packet_state: Vec<PacketState>,
    stats: BufferStats,
    audit: bool,
}

impl SwitchBuffer {
    /// `capacity == None` means an infinite buffer: the policy is never consulted.
    pub fn new(capacity: Option<u64>, policy: PolicyConfig) -> Self {
        Self {
            capacity,
            policy,
            queue: VecDeque::new(),
            per_vc: Vec::new(),
            active: 0,
            packet_state: Vec::new(),
            stats: BufferStats::default(),
            audit: false,
        }
    }

    pub fn unbounded() -> Self {
        Self::new(None, PolicyConfig::tail_drop())
    }

    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn capacity(&self) -> Option<u64> {
        self.capacity
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    /// Current occupancy X.
    pub fn occupancy(&self) -> u64 {
        self.queue.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Y_i for `vc`.
    pub fn vc_occupancy(&self, vc: ConnId) -> u64 {
        self.per_vc.get(vc as usize).copied().unwrap_or(0)
    }

    /// N_a.
    pub fn active_vcs(&self) -> u64 {
        self.active
    }

    pub fn stats(&self) -> &BufferStats {
        &self.stats
    }

    fn ensure_vc(&mut self, vc: ConnId) {
        let idx = vc as usize;
        if idx >= self.per_vc.len() {
            self.per_vc.resize(idx + 1, 0);
            self.packet_state.resize(idx + 1, PacketState::Accepting);
            self.stats.drops_per_vc.resize(idx + 1, 0);
        }
    }

    fn decide(&self, cell: &Cell) -> DropDecision {
        let Some(k) = self.capacity else {
            return DropDecision::Accept;
        };
        policy::decide(
            &self.policy,
            self.occupancy(),
            k,
            self.per_vc[cell.vc as usize],
            self.active,
            cell.is_first(),
        )
    }

    /// Applies the drop policy to an arriving cell and enqueues it if accepted.
    pub fn on_cell_arrival(&mut self, cell: Cell) -> DropDecision {
        self.ensure_vc(cell.vc);
        self.stats.arrivals += 1;
        let vc = cell.vc as usize;

        let decision = match self.packet_state[vc] {
            PacketState::Discarding(pid) if pid == cell.packet_id => {
                DropDecision::Drop(DropReason::ContinuedPacketDiscard)
            }
            _ => {
                self.packet_state[vc] = PacketState::Accepting;
                self.decide(&cell)
            }
        };

        match decision {
            DropDecision::Accept => {
                self.per_vc[vc] += 1;
                if self.per_vc[vc] == 1 {
                    self.active += 1;
                }
                self.queue.push_back(cell);
                self.stats.accepted += 1;
                self.stats.max_occupancy = self.stats.max_occupancy.max(self.occupancy());
            }
            DropDecision::Drop(reason) => {
                self.stats.drops_by_reason[reason.index()] += 1;
                self.stats.drops_per_vc[vc] += 1;
                // tail drop stays cell-granular; the other policies discard
                // the rest of a packet once any of its cells is lost here
                if self.policy.kind != PolicyKind::TailDrop {
                    self.packet_state[vc] = PacketState::Discarding(cell.packet_id);
                }
            }
        }
        if cell.is_last {
            self.packet_state[vc] = PacketState::Accepting;
        }
        self.check();
        decision
    }

    /// Removes the head cell. Panics on an empty buffer.
    pub fn on_cell_departure(&mut self) -> Cell {
        self.pop().expect("departure from an empty switch buffer")
    }

    pub fn pop(&mut self) -> Option<Cell> {
        let cell = self.queue.pop_front()?;
        let vc = cell.vc as usize;
        self.per_vc[vc] -= 1;
        if self.per_vc[vc] == 0 {
            self.active -= 1;
        }
        self.stats.departures += 1;
        self.check();
        Some(cell)
    }

    fn check(&self) {
        if !self.audit {
            return;
        }
        let sum: u64 = self.per_vc.iter().sum();
        assert_eq!(
            sum,
            self.occupancy(),
            "per-VC counts do not sum to occupancy"
        );
        let active = self.per_vc.iter().filter(|&&y| y > 0).count() as u64;
        assert_eq!(active, self.active, "active VC count out of sync");
        if let Some(k) = self.capacity {
            assert!(self.occupancy() <= k, "occupancy exceeds capacity");
        }
    }

    /// Recounts the queue cell by cell and compares with the per-VC
    /// counters. Linear in the occupancy, so it is not run per mutation.
    pub fn verify_contents(&self) -> bool {
        let mut scan = vec![0u64; self.per_vc.len()];
        for c in &self.queue {
            scan[c.vc as usize] += 1;
        }
        scan == self.per_vc
    }
}
