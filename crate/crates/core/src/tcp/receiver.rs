use std::collections::BTreeMap;

use crate::aal5::{ConnId, Segment};

/// Cumulative-ack receiver with an out-of-order cache. Every arriving
/// segment is acked at once.
#[derive(Debug, Clone)]
pub struct TcpReceiver {
    conn: ConnId,
    rcv_nxt: u64,
    /// Disjoint cached ranges `start -> end`, all beyond `rcv_nxt`.
    ooo: BTreeMap<u64, u64>,
    duplicates: u64,
}

impl TcpReceiver {
    pub fn new(conn: ConnId) -> Self {
        Self {
            conn,
            rcv_nxt: 0,
            ooo: BTreeMap::new(),
            duplicates: 0,
        }
    }

    pub fn rcv_nxt(&self) -> u64 {
        self.rcv_nxt
    }

    /// Bytes handed to the application, in order.
    pub fn delivered_bytes(&self) -> u64 {
        self.rcv_nxt
    }

    pub fn cached_ranges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.ooo.iter().map(|(&s, &e)| (s, e))
    }

    /// Segments thrown away because every byte was already held.
    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn on_segment(&mut self, seg: &Segment) -> Segment {
        debug_assert!(!seg.is_ack && seg.conn == self.conn);
        let (start, end) = (seg.seq, seg.end_seq());
        if end <= self.rcv_nxt || self.is_cached(start, end) {
            self.duplicates += 1;
        } else if start <= self.rcv_nxt {
            self.rcv_nxt = end;
            self.absorb();
        } else {
            self.cache(start, end);
        }
        Segment::ack(self.conn, self.rcv_nxt)
    }

    fn is_cached(&self, start: u64, end: u64) -> bool {
        self.ooo
            .range(..=start)
            .next_back()
            .is_some_and(|(_, &e)| e >= end)
    }

    fn cache(&mut self, mut start: u64, mut end: u64) {
        // merge with any overlapping or touching neighbours
        if let Some((&s, &e)) = self.ooo.range(..=start).next_back() {
            if e >= start {
                start = s;
                end = end.max(e);
                self.ooo.remove(&s);
            }
        }
        while let Some((&s, &e)) = self.ooo.range(start..=end).next() {
            end = end.max(e);
            self.ooo.remove(&s);
        }
        self.ooo.insert(start, end);
    }

    fn absorb(&mut self) {
        while let Some((&s, &e)) = self.ooo.first_key_value() {
            if s > self.rcv_nxt {
                break;
            }
            self.rcv_nxt = self.rcv_nxt.max(e);
            self.ooo.remove(&s);
        }
    }
}
