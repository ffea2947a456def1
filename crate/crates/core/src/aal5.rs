//! Segmentation of TCP segments into ATM cell trains and reassembly at the
//! destination.

use serde::{Deserialize, Serialize};

/// Bytes on the wire per ATM cell.
pub const CELL_BYTES: u64 = 53;
/// Payload bytes carried by one cell.
pub const CELL_PAYLOAD_BYTES: u64 = 48;
/// TCP (20) + IP (20) + LLC (8) + AAL5 trailer (8).
pub const FRAMING_OVERHEAD_BYTES: u64 = 56;

/// Identifies a TCP connection and the virtual circuit carrying it.
pub type ConnId = u32;

/// A TCP segment. Sequence numbers are unbounded byte offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub conn: ConnId,
    pub is_ack: bool,
    pub seq: u64,
    pub payload_len: u32,
    pub ack_no: u64,
}

impl Segment {
    pub fn data(conn: ConnId, seq: u64, payload_len: u32) -> Self {
        Self {
            conn,
            is_ack: false,
            seq,
            payload_len,
            ack_no: 0,
        }
    }

    pub fn ack(conn: ConnId, ack_no: u64) -> Self {
        Self {
            conn,
            is_ack: true,
            seq: 0,
            payload_len: 0,
            ack_no,
        }
    }

    pub fn end_seq(&self) -> u64 {
        self.seq + u64::from(self.payload_len)
    }
}

/// One ATM cell. Instead of a literal payload it carries a copy of the
/// segment header it was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub vc: ConnId,
    pub packet_id: u64,
    pub index: u16,
    pub is_last: bool,
    pub segment: Segment,
}

impl Cell {
    pub fn is_first(&self) -> bool {
        self.index == 0
    }
}

/// Number of cells needed for a segment with `payload_len` data bytes.
pub fn cells_for_segment(payload_len: u64) -> u64 {
    (payload_len + FRAMING_OVERHEAD_BYTES).div_ceil(CELL_PAYLOAD_BYTES)
}

/// Cuts a segment into its cell train.
pub fn segment_to_cells(segment: Segment, packet_id: u64) -> impl Iterator<Item = Cell> {
    let n = cells_for_segment(u64::from(segment.payload_len)) as u16;
    (0..n).map(move |index| Cell {
        vc: segment.conn,
        packet_id,
        index,
        is_last: index + 1 == n,
        segment,
    })
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    packet_id: u64,
    next_index: u16,
    intact: bool,
}

/// Result of feeding one cell to a [`Reassembler`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Reassembled {
    /// Incomplete packets thrown away while handling this cell (0, 1 or 2).
    pub discarded: u8,
    pub delivered: Option<Segment>,
}

/// Per-VC reassembly buffer. Assumes cells of a VC arrive in the order the
/// network forwarded them; any gap makes the packet undeliverable.
#[derive(Debug, Clone, Default)]
pub struct Reassembler {
    partial: Option<Partial>,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, cell: &Cell) -> Reassembled {
        let mut out = Reassembled::default();
        let state = match self.partial {
            Some(p) if p.packet_id == cell.packet_id => p,
            previous => {
                if previous.is_some() {
                    out.discarded += 1;
                }
                Partial {
                    packet_id: cell.packet_id,
                    next_index: 0,
                    intact: true,
                }
            }
        };
        let intact = state.intact && cell.index == state.next_index;
        if cell.is_last {
            self.partial = None;
            if intact {
                out.delivered = Some(cell.segment);
            } else {
                out.discarded += 1;
            }
        } else {
            self.partial = Some(Partial {
                packet_id: cell.packet_id,
                next_index: cell.index + 1,
                intact,
            });
        }
        out
    }

    /// True while cells of an unfinished packet are held.
    pub fn holds_partial(&self) -> bool {
        self.partial.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ceil_div_oracle(n: u64, d: u64) -> u64 {
        // smallest c with c*d >= n
        (0..).find(|c| c * d >= n).unwrap()
    }

    #[test]
    fn cell_counts() {
        assert_eq!(cells_for_segment(512), 12);
        assert_eq!(cells_for_segment(0), 2);
        assert_eq!(cells_for_segment(1), 2);
        for len in 0..2000 {
            assert_eq!(cells_for_segment(len), ceil_div_oracle(len + 56, 48));
        }
    }

    #[test]
    fn data_segment_train() {
        let cells: Vec<_> = segment_to_cells(Segment::data(3, 1024, 512), 7).collect();
        assert_eq!(cells.len(), 12);
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(c.index as usize, i);
            assert_eq!(c.is_last, i == 11);
            assert_eq!(c.vc, 3);
            assert_eq!(c.packet_id, 7);
        }
        assert_eq!(12 * CELL_BYTES, 636);
    }

    #[test]
    fn ack_train() {
        let cells: Vec<_> = segment_to_cells(Segment::ack(0, 512), 1).collect();
        assert_eq!(cells.len(), 2);
        assert!(!cells[0].is_last);
        assert!(cells[1].is_last);
    }

    #[test]
    fn lossless_reassembly() {
        let seg = Segment::data(1, 0, 512);
        let mut r = Reassembler::new();
        let mut got = None;
        for c in segment_to_cells(seg, 0) {
            let out = r.push(&c);
            assert_eq!(out.discarded, 0);
            if out.delivered.is_some() {
                got = out.delivered;
            }
        }
        assert_eq!(got, Some(seg));
        assert!(!r.holds_partial());
    }

    #[test]
    fn tail_loss_discards_on_next_packet() {
        let mut r = Reassembler::new();
        let first: Vec<_> = segment_to_cells(Segment::data(1, 0, 512), 0).collect();
        for c in &first[..11] {
            assert_eq!(r.push(c), Reassembled::default());
        }
        let second: Vec<_> = segment_to_cells(Segment::data(1, 512, 512), 1).collect();
        let out = r.push(&second[0]);
        assert_eq!(out.discarded, 1);
        assert_eq!(out.delivered, None);
        let mut delivered = None;
        for c in &second[1..] {
            delivered = delivered.or(r.push(c).delivered);
        }
        assert_eq!(delivered.map(|s| s.seq), Some(512));
    }

    #[test]
    fn head_loss_discards_on_last_cell() {
        let mut r = Reassembler::new();
        let cells: Vec<_> = segment_to_cells(Segment::data(1, 0, 512), 0).collect();
        let mut discarded = 0;
        for c in &cells[1..] {
            let out = r.push(c);
            assert_eq!(out.delivered, None);
            discarded += out.discarded;
        }
        assert_eq!(discarded, 1);
    }

    #[test]
    fn middle_loss_is_not_delivered() {
        let mut r = Reassembler::new();
        let cells: Vec<_> = segment_to_cells(Segment::data(1, 0, 512), 0).collect();
        let mut discarded = 0;
        for (i, c) in cells.iter().enumerate() {
            if i == 5 {
                continue;
            }
            let out = r.push(c);
            assert_eq!(out.delivered, None);
            discarded += out.discarded;
        }
        assert_eq!(discarded, 1);
    }

    #[test]
    fn stray_last_cell_after_partial_counts_both() {
        let mut r = Reassembler::new();
        let a: Vec<_> = segment_to_cells(Segment::data(1, 0, 512), 0).collect();
        let b: Vec<_> = segment_to_cells(Segment::data(1, 512, 512), 1).collect();
        r.push(&a[0]);
        let out = r.push(&b[11]);
        assert_eq!(out.discarded, 2);
        assert_eq!(out.delivered, None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_is_identity(
                conn in 0u32..64,
                seq in 0u64..1_000_000_000,
                len in prop_oneof![Just(0u32), Just(512u32), 1u32..9000],
                is_ack in any::<bool>(),
            ) {
                let seg = if is_ack { Segment::ack(conn, seq) } else { Segment::data(conn, seq, len) };
                let mut r = Reassembler::new();
                let mut delivered = Vec::new();
                for c in segment_to_cells(seg, 42) {
                    let out = r.push(&c);
                    prop_assert_eq!(out.discarded, 0);
                    delivered.extend(out.delivered);
                }
                prop_assert_eq!(delivered, vec![seg]);
            }

            #[test]
            fn any_loss_prevents_delivery(drop_mask in 1u16..(1 << 12)) {
                let seg = Segment::data(0, 0, 512);
                let mut r = Reassembler::new();
                let mut delivered = 0;
                for c in segment_to_cells(seg, 0) {
                    if drop_mask & (1 << c.index) != 0 {
                        continue;
                    }
                    delivered += r.push(&c).delivered.is_some() as u32;
                }
                prop_assert_eq!(delivered, 0);
            }
        }
    }
}
