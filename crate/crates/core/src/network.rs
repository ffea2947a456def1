//! The N-source network driven by the event engine.
//!
//! Every hop is a [`Port`]: a cell buffer feeding a transmitter, followed by
//! a FIFO delay line standing in for the wire. Only the head of each delay
//! line sits in the event queue, which keeps the queue small even when tens
//! of thousands of cells are in flight on WAN links.

use std::collections::VecDeque;

use crate::aal5::{segment_to_cells, Cell, ConnId, Reassembler, Segment};
use crate::error::SimError;
use crate::event::{EventQueue, SimTime};
use crate::link::Link;
use crate::metrics::{CellLedger, RunResult, SwitchReport};
use crate::scenario::Scenario;
use crate::switch::{DropDecision, SwitchBuffer};
use crate::tcp::{AckOutcome, TcpReceiver, TcpSender};

type PortId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Source(ConnId),
    Dest(ConnId),
    SwitchA,
    SwitchB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    /// Application send opportunity for every source.
    Start,
    /// The port's transmitter finished serializing its cell.
    TxDone(PortId),
    /// The oldest cell on the port's wire reached the far end.
    Arrive(PortId),
    /// Coarse TCP timer tick.
    Tick,
}

struct Port {
    buffer: SwitchBuffer,
    link: Link,
    to: Node,
    in_tx: Option<Cell>,
    wire: VecDeque<(SimTime, Cell)>,
}

impl Port {
    fn new(buffer: SwitchBuffer, link: Link, to: Node) -> Self {
        Self {
            buffer,
            link,
            to,
            in_tx: None,
            wire: VecDeque::new(),
        }
    }

    fn resident(&self) -> u64 {
        self.buffer.occupancy() + u64::from(self.in_tx.is_some()) + self.wire.len() as u64
    }
}

/// Port index layout for `n` connections.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
}

impl Layout {
    fn source_nic(self, c: ConnId) -> PortId {
        c as usize
    }
    fn bottleneck_fwd(self) -> PortId {
        self.n
    }
    fn to_dest(self, c: ConnId) -> PortId {
        self.n + 1 + c as usize
    }
    fn dest_nic(self, c: ConnId) -> PortId {
        2 * self.n + 1 + c as usize
    }
    fn bottleneck_rev(self) -> PortId {
        3 * self.n + 1
    }
    fn to_source(self, c: ConnId) -> PortId {
        3 * self.n + 2 + c as usize
    }
    fn count(self) -> usize {
        4 * self.n + 2
    }
    fn switch_a_ports(self) -> impl Iterator<Item = PortId> {
        std::iter::once(self.bottleneck_fwd())
            .chain((0..self.n as ConnId).map(move |c| self.to_source(c)))
    }
    fn switch_b_ports(self) -> impl Iterator<Item = PortId> {
        std::iter::once(self.bottleneck_rev())
            .chain((0..self.n as ConnId).map(move |c| self.to_dest(c)))
    }
}

/// Sender state after it has responded to the start of the run, a new
/// ack or a timeout, so `snd_max` includes whatever that released.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSample {
    pub time: SimTime,
    pub cwnd: u64,
    pub ssthresh: u64,
    pub snd_una: u64,
    pub snd_max: u64,
}

impl TraceSample {
    fn of(time: SimTime, s: &TcpSender) -> Self {
        Self {
            time,
            cwnd: s.cwnd(),
            ssthresh: s.ssthresh(),
            snd_una: s.snd_una(),
            snd_max: s.snd_max(),
        }
    }
}

/// Samples of one connection in time order, starting with its initial state.
pub type CwndTrace = Vec<TraceSample>;

/// All mutable state of one simulation run.
pub struct Network {
    layout: Layout,
    ports: Vec<Port>,
    senders: Vec<TcpSender>,
    receivers: Vec<TcpReceiver>,
    data_reassembly: Vec<Reassembler>,
    ack_reassembly: Vec<Reassembler>,
    tick: SimTime,
    next_packet_id: u64,
    ledger: CellLedger,
    reassembly_discards: u64,
    traces: Option<Vec<CwndTrace>>,
    scratch: Vec<Segment>,
    error: Option<SimError>,
}

impl Network {
    pub fn new(s: &Scenario) -> Self {
        let n = s.n_sources as usize;
        let layout = Layout { n };
        let link = || Link::new(s.link_rate_bps, s.link_delay);
        let fwd_switch = || {
            match s.policy {
                Some(p) => SwitchBuffer::new(s.buffer.cells(), p),
                None => SwitchBuffer::unbounded(),
            }
            .with_audit(s.audit)
        };
        let rev_switch = || {
            match s.reverse_policy {
                Some(p) => SwitchBuffer::new(s.reverse_buffer.cells(), p),
                None => SwitchBuffer::unbounded(),
            }
            .with_audit(s.audit)
        };
        let host = || SwitchBuffer::unbounded().with_audit(s.audit);

        let mut ports = Vec::with_capacity(layout.count());
        for _ in 0..n {
            ports.push(Port::new(host(), link(), Node::SwitchA));
        }
        ports.push(Port::new(fwd_switch(), link(), Node::SwitchB));
        for c in 0..n as ConnId {
            ports.push(Port::new(fwd_switch(), link(), Node::Dest(c)));
        }
        for _ in 0..n {
            ports.push(Port::new(host(), link(), Node::SwitchB));
        }
        ports.push(Port::new(rev_switch(), link(), Node::SwitchA));
        for c in 0..n as ConnId {
            ports.push(Port::new(rev_switch(), link(), Node::Source(c)));
        }
        debug_assert_eq!(ports.len(), layout.count());

        Self {
            layout,
            ports,
            senders: (0..n as ConnId)
                .map(|c| TcpSender::new(c, &s.tcp))
                .collect(),
            receivers: (0..n as ConnId).map(TcpReceiver::new).collect(),
            data_reassembly: vec![Reassembler::new(); n],
            ack_reassembly: vec![Reassembler::new(); n],
            tick: s.tick,
            next_packet_id: 0,
            ledger: CellLedger::default(),
            reassembly_discards: 0,
            traces: None,
            scratch: Vec::new(),
            error: None,
        }
    }

    /// Records CWND changes for every connection.
    pub fn enable_trace(&mut self) {
        self.traces = Some(self.senders.iter().map(|_| Vec::new()).collect());
    }

    pub fn senders(&self) -> &[TcpSender] {
        &self.senders
    }

    pub fn receivers(&self) -> &[TcpReceiver] {
        &self.receivers
    }

    pub fn take_traces(&mut self) -> Option<Vec<CwndTrace>> {
        self.traces.take()
    }

    fn tick_index(&self, now: SimTime) -> u64 {
        now.as_nanos() / self.tick.as_nanos()
    }

    fn fail(&mut self, err: SimError) {
        if self.error.is_none() {
            self.error = Some(err);
        }
    }

    fn handle(&mut self, q: &mut EventQueue<Event>, event: Event) {
        if self.error.is_some() {
            return;
        }
        match event {
            Event::Start => {
                for c in 0..self.senders.len() as ConnId {
                    self.send_opportunity(q, c);
                    self.record(q.now(), c);
                }
            }
            Event::TxDone(p) => self.on_tx_done(q, p),
            Event::Arrive(p) => self.on_wire_arrival(q, p),
            Event::Tick => {
                let tick = self.tick_index(q.now());
                for c in 0..self.senders.len() as ConnId {
                    if self.senders[c as usize].timer_tick(tick) {
                        let una = self.senders[c as usize].snd_una();
                        let first = self.send_opportunity(q, c);
                        if first != Some(una) {
                            self.fail(SimError::Invariant(format!(
                                "connection {c}: first segment after timeout is {first:?}, snd_una is {una}"
                            )));
                            return;
                        }
                        self.record(q.now(), c);
                    }
                }
                q.schedule_in(self.tick, Event::Tick);
            }
        }
    }

    /// Lets a sender emit what its window allows. Returns the sequence
    /// number of the first segment sent.
    fn send_opportunity(&mut self, q: &mut EventQueue<Event>, c: ConnId) -> Option<u64> {
        let tick = self.tick_index(q.now());
        let mut segs = std::mem::take(&mut self.scratch);
        segs.clear();
        let sender = &mut self.senders[c as usize];
        sender.try_send(tick, &mut segs);
        debug_assert!(sender.bytes_in_flight() <= sender.effective_window());
        let nic = self.layout.source_nic(c);
        for seg in &segs {
            self.inject(q, nic, *seg);
        }
        let first = segs.first().map(|seg| seg.seq);
        self.scratch = segs;
        first
    }

    fn inject(&mut self, q: &mut EventQueue<Event>, port: PortId, seg: Segment) {
        let pid = self.next_packet_id;
        self.next_packet_id += 1;
        for cell in segment_to_cells(seg, pid) {
            self.ledger.injected += 1;
            self.enqueue(q, port, cell);
        }
    }

    fn enqueue(&mut self, q: &mut EventQueue<Event>, p: PortId, cell: Cell) {
        let port = &mut self.ports[p];
        match port.buffer.on_cell_arrival(cell) {
            DropDecision::Accept => {
                if port.in_tx.is_none() {
                    self.start_tx(q, p);
                }
            }
            DropDecision::Drop(_) => self.ledger.dropped += 1,
        }
    }

    fn start_tx(&mut self, q: &mut EventQueue<Event>, p: PortId) {
        let port = &mut self.ports[p];
        let cell = port.buffer.on_cell_departure();
        let tx = port.link.transmit(q.now());
        debug_assert_eq!(tx.start, q.now());
        port.in_tx = Some(cell);
        q.schedule(tx.end, Event::TxDone(p));
    }

    fn on_tx_done(&mut self, q: &mut EventQueue<Event>, p: PortId) {
        let port = &mut self.ports[p];
        let cell = port.in_tx.take().expect("transmitter holds a cell");
        let arrival = q.now() + port.link.prop_delay();
        if port.wire.is_empty() {
            q.schedule(arrival, Event::Arrive(p));
        }
        port.wire.push_back((arrival, cell));
        if !port.buffer.is_empty() {
            self.start_tx(q, p);
        }
    }

    fn on_wire_arrival(&mut self, q: &mut EventQueue<Event>, p: PortId) {
        let port = &mut self.ports[p];
        let (at, cell) = port.wire.pop_front().expect("wire holds a cell");
        debug_assert_eq!(at, q.now());
        if let Some(&(next, _)) = port.wire.front() {
            q.schedule(next, Event::Arrive(p));
        }
        let to = port.to;
        match to {
            Node::SwitchA => {
                let out = if cell.segment.is_ack {
                    self.layout.to_source(cell.vc)
                } else {
                    self.layout.bottleneck_fwd()
                };
                self.enqueue(q, out, cell);
            }
            Node::SwitchB => {
                let out = if cell.segment.is_ack {
                    self.layout.bottleneck_rev()
                } else {
                    self.layout.to_dest(cell.vc)
                };
                self.enqueue(q, out, cell);
            }
            Node::Dest(c) => self.at_destination(q, c, cell),
            Node::Source(c) => self.at_source(q, c, cell),
        }
    }

    fn at_destination(&mut self, q: &mut EventQueue<Event>, c: ConnId, cell: Cell) {
        self.ledger.delivered += 1;
        let out = self.data_reassembly[c as usize].push(&cell);
        self.reassembly_discards += u64::from(out.discarded);
        if let Some(seg) = out.delivered {
            let ack = self.receivers[c as usize].on_segment(&seg);
            let nic = self.layout.dest_nic(c);
            self.inject(q, nic, ack);
        }
    }

    fn at_source(&mut self, q: &mut EventQueue<Event>, c: ConnId, cell: Cell) {
        self.ledger.delivered += 1;
        let out = self.ack_reassembly[c as usize].push(&cell);
        self.reassembly_discards += u64::from(out.discarded);
        let Some(ack) = out.delivered else {
            return;
        };
        let tick = self.tick_index(q.now());
        match self.senders[c as usize].on_ack(ack.ack_no, tick) {
            Ok(outcome) => {
                self.send_opportunity(q, c);
                if matches!(outcome, AckOutcome::NewData { .. }) {
                    self.record(q.now(), c);
                }
            }
            Err(e) => self.fail(e),
        }
    }

    fn record(&mut self, now: SimTime, c: ConnId) {
        if let Some(traces) = &mut self.traces {
            traces[c as usize].push(TraceSample::of(now, &self.senders[c as usize]));
        }
    }

    fn resident_cells(&self) -> u64 {
        self.ports.iter().map(Port::resident).sum()
    }

    fn check_invariants(&self) -> Result<(), SimError> {
        let mut ledger = self.ledger;
        ledger.resident = self.resident_cells();
        if !ledger.balanced() {
            return Err(SimError::Invariant(format!(
                "cell conservation: injected {} != delivered {} + dropped {} + resident {}",
                ledger.injected, ledger.delivered, ledger.dropped, ledger.resident
            )));
        }
        if let Some(p) = self.ports.iter().position(|p| !p.buffer.verify_contents()) {
            return Err(SimError::Invariant(format!(
                "port {p}: per-VC counts disagree with queue contents"
            )));
        }
        let switch_drops: u64 = self.ports.iter().map(|p| p.buffer.stats().drops()).sum();
        if switch_drops != ledger.dropped {
            return Err(SimError::Invariant(format!(
                "drop counters disagree: ports {switch_drops}, ledger {}",
                ledger.dropped
            )));
        }
        for (s, r) in self.senders.iter().zip(&self.receivers) {
            if r.delivered_bytes() > s.snd_max() {
                return Err(SimError::Invariant(format!(
                    "connection {} delivered {} bytes but sent only {}",
                    s.conn(),
                    r.delivered_bytes(),
                    s.snd_max()
                )));
            }
            if s.snd_una() > r.rcv_nxt() {
                return Err(SimError::Invariant(format!(
                    "connection {} acked beyond the receiver",
                    s.conn()
                )));
            }
        }
        Ok(())
    }

    fn result(&self, s: &Scenario, events: u64) -> RunResult {
        let mut cells = self.ledger;
        cells.resident = self.resident_cells();
        let switch = |name: &str, ports: Vec<PortId>| {
            SwitchReport::from_ports(
                name,
                ports.into_iter().map(|p| self.ports[p].buffer.stats()),
            )
        };
        RunResult {
            per_conn_delivered_bytes: self
                .receivers
                .iter()
                .map(TcpReceiver::delivered_bytes)
                .collect(),
            duration: s.duration,
            link_rate_bps: s.link_rate_bps,
            mss: s.tcp.mss,
            switches: vec![
                switch("A", self.layout.switch_a_ports().collect()),
                switch("B", self.layout.switch_b_ports().collect()),
            ],
            reassembly_discards: self.reassembly_discards,
            retransmitted_segments: self
                .senders
                .iter()
                .map(|s| s.stats().retransmitted_segments)
                .sum(),
            timeouts: self.senders.iter().map(|s| s.stats().timeouts).sum(),
            cells,
            events,
        }
    }
}

/// Output of [`simulate`].
pub struct Simulation {
    pub result: RunResult,
    pub traces: Option<Vec<CwndTrace>>,
    pub network: Network,
}

/// Runs a scenario for its full duration.
pub fn simulate(s: &Scenario, trace: bool) -> Result<Simulation, SimError> {
    simulate_for(s, s.duration, trace)
}

/// Runs a scenario up to `end`, which may be shorter than its duration.
/// Throughput is still computed over `s.duration`; callers inspecting
/// partial runs should look at the network state instead.
pub fn simulate_for(s: &Scenario, end: SimTime, trace: bool) -> Result<Simulation, SimError> {
    let mut net = Network::new(s);
    if trace {
        net.enable_trace();
    }
    let mut q = EventQueue::new();
    q.schedule(SimTime::ZERO, Event::Start);
    q.schedule(s.tick, Event::Tick);
    let events = q.run_until(end, |q, e| net.handle(q, e));
    if let Some(err) = net.error.take() {
        return Err(err);
    }
    net.check_invariants()?;
    let result = net.result(s, events);
    let traces = net.take_traces();
    Ok(Simulation {
        result,
        traces,
        network: net,
    })
}

/// Runs a scenario and returns its counters.
pub fn run_scenario(s: &Scenario) -> Result<RunResult, SimError> {
    simulate(s, false).map(|sim| sim.result)
}
