//! Radio plane: EPC traffic source, CU PDCP encapsulation producing V1
//! frames, and the DU receive side with its reordering buffer.
//!
//! The EPC↔CU (S1) and DU↔UE hops are zero-delay handoffs; the air
//! interface is abstracted away.

use alloc::collections::BTreeMap;

use crate::error::SimError;
use crate::metrics::DropReason;
use crate::time::SimTime;

/// PDCP sequence numbers use the 18-bit long format.
pub const PDCP_SN_BITS: u32 = 18;
pub const PDCP_SN_MODULUS: u32 = 1 << PDCP_SN_BITS;

/// Preamble + SFD (8 B), MAC header (14 B), FCS (4 B) and inter-packet gap (12 B).
pub const ETHERNET_OVERHEAD_BYTES: u32 = 38;

pub const DEFAULT_PAYLOAD_BYTES: u32 = 1200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VlanTag(pub u16);

impl VlanTag {
    pub const V1_DEFAULT: VlanTag = VlanTag(100);
    pub const OVERLOAD_DEFAULT: VlanTag = VlanTag(200);
}

/// A UDP test datagram emitted by the EPC side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UserPacket {
    pub flow_id: FlowId,
    pub payload_bytes: u32,
    pub created_at: SimTime,
    pub user_seq: u64,
}

impl UserPacket {
    pub fn payload_bits(&self) -> u64 {
        8 * self.payload_bytes as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct V1Pdu {
    pub pdcp_sn: u32,
    pub inner: UserPacket,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FramePayload {
    V1(V1Pdu),
    Overload { payload_bytes: u32 },
}

/// An Ethernet frame on the V1 path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frame {
    pub vlan: VlanTag,
    pub payload: FramePayload,
    /// Payload plus [`ETHERNET_OVERHEAD_BYTES`], in bits.
    pub wire_bits: u64,
    pub corrupted: bool,
    pub sent_at: Option<SimTime>,
    pub cu_egress_at: Option<SimTime>,
    pub du_ingress_at: Option<SimTime>,
}

impl Frame {
    pub fn overload(payload_bytes: u32, vlan: VlanTag) -> Frame {
        Frame {
            vlan,
            payload: FramePayload::Overload { payload_bytes },
            wire_bits: wire_bits_for(payload_bytes),
            corrupted: false,
            sent_at: None,
            cu_egress_at: None,
            du_ingress_at: None,
        }
    }

    pub fn pdu(&self) -> Option<&V1Pdu> {
        match &self.payload {
            FramePayload::V1(p) => Some(p),
            FramePayload::Overload { .. } => None,
        }
    }

    pub fn payload_bytes(&self) -> u32 {
        match &self.payload {
            FramePayload::V1(p) => p.inner.payload_bytes,
            FramePayload::Overload { payload_bytes } => *payload_bytes,
        }
    }

    pub fn payload_bits(&self) -> u64 {
        8 * self.payload_bytes() as u64
    }

    /// One-way delay from EPC emission to DU ingress.
    pub fn one_way_delay(&self) -> Option<SimTime> {
        self.du_ingress_at?.checked_sub(self.sent_at?)
    }

    /// CU egress to DU ingress, the quantity packet jitter is measured on.
    pub fn cu_du_delay(&self) -> Option<SimTime> {
        self.du_ingress_at?.checked_sub(self.cu_egress_at?)
    }
}

pub fn wire_bits_for(payload_bytes: u32) -> u64 {
    8 * (payload_bytes as u64 + ETHERNET_OVERHEAD_BYTES as u64)
}

/// Constant-bit-rate packet schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CbrSchedule {
    flow_id: FlowId,
    payload_bytes: u32,
    interval: SimTime,
    count: u64,
    next: u64,
}

/// Packets of `payload_bytes` every `8·payload_bytes / rate_bps` seconds,
/// `floor(duration / interval)` of them, the first at t = 0. A zero rate
/// yields an empty schedule.
pub fn generate_cbr_traffic(
    rate_bps: f64,
    payload_bytes: u32,
    duration: SimTime,
) -> Result<CbrSchedule, SimError> {
    CbrSchedule::new(FlowId(0), rate_bps, payload_bytes, duration)
}

impl CbrSchedule {
    pub fn new(
        flow_id: FlowId,
        rate_bps: f64,
        payload_bytes: u32,
        duration: SimTime,
    ) -> Result<Self, SimError> {
        if !(rate_bps >= 0.0) || !rate_bps.is_finite() {
            return Err(SimError::invalid("rate_bps", "must be finite and non-negative"));
        }
        if payload_bytes == 0 {
            return Err(SimError::invalid("payload_bytes", "must be at least 1"));
        }
        if rate_bps == 0.0 {
            return Ok(CbrSchedule {
                flow_id,
                payload_bytes,
                interval: SimTime::MAX,
                count: 0,
                next: 0,
            });
        }
        let interval = SimTime::from_secs_f64(8.0 * payload_bytes as f64 / rate_bps);
        if interval == SimTime::ZERO {
            return Err(SimError::invalid("rate_bps", "inter-departure time below 1 ps"));
        }
        Ok(CbrSchedule {
            flow_id,
            payload_bytes,
            interval,
            count: duration.as_ps() / interval.as_ps(),
            next: 0,
        })
    }

    /// Schedule producing exactly `packets` packets.
    pub fn with_packet_count(
        flow_id: FlowId,
        rate_bps: f64,
        payload_bytes: u32,
        packets: u64,
    ) -> Result<Self, SimError> {
        let mut s = Self::new(flow_id, rate_bps, payload_bytes, SimTime::ZERO)?;
        if rate_bps > 0.0 {
            s.count = packets;
        }
        Ok(s)
    }

    pub fn interval(&self) -> Option<SimTime> {
        (self.count > 0).then_some(self.interval)
    }

    pub fn packet_count(&self) -> u64 {
        self.count
    }

    pub fn payload_bytes(&self) -> u32 {
        self.payload_bytes
    }

    /// Time of the `k`-th departure.
    pub fn departure(&self, k: u64) -> SimTime {
        self.interval.mul_u64(k)
    }

    /// Span from the first departure to one interval past the last.
    pub fn span(&self) -> SimTime {
        if self.count == 0 {
            SimTime::ZERO
        } else {
            self.interval.mul_u64(self.count)
        }
    }

    pub fn packet(&self, k: u64) -> UserPacket {
        UserPacket {
            flow_id: self.flow_id,
            payload_bytes: self.payload_bytes,
            created_at: self.departure(k),
            user_seq: k,
        }
    }
}

impl Iterator for CbrSchedule {
    type Item = UserPacket;

    fn next(&mut self) -> Option<UserPacket> {
        if self.next >= self.count {
            return None;
        }
        let p = self.packet(self.next);
        self.next += 1;
        Some(p)
    }
}

/// CU-side PDCP entity for one flow.
#[derive(Clone, Debug, Default)]
pub struct PdcpEntity {
    last_user_seq: Option<u64>,
}

impl PdcpEntity {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assigns `pdcp_sn = user_seq mod 2^18`. Calls must come in strictly
    /// increasing `user_seq` order.
    pub fn encapsulate(&mut self, p: UserPacket) -> Result<V1Pdu, SimError> {
        if let Some(last) = self.last_user_seq {
            if p.user_seq <= last {
                return Err(SimError::OutOfOrderEncapsulation {
                    last,
                    got: p.user_seq,
                });
            }
        }
        self.last_user_seq = Some(p.user_seq);
        Ok(V1Pdu {
            pdcp_sn: (p.user_seq % PDCP_SN_MODULUS as u64) as u32,
            inner: p,
        })
    }
}

pub fn pdcp_decapsulate(pdu: V1Pdu) -> UserPacket {
    pdu.inner
}

pub fn frame_v1(pdu: V1Pdu, vlan: VlanTag) -> Frame {
    Frame {
        vlan,
        wire_bits: wire_bits_for(pdu.inner.payload_bytes),
        payload: FramePayload::V1(pdu),
        corrupted: false,
        sent_at: None,
        cu_egress_at: None,
        du_ingress_at: None,
    }
}

/// Signed distance `a − b` in the modular SN space, in `[-2^17, 2^17)`.
pub fn sn_delta(a: u32, b: u32) -> i32 {
    let m = PDCP_SN_MODULUS;
    let d = (a.wrapping_sub(b)) & (m - 1);
    if d >= m / 2 {
        d as i32 - m as i32
    } else {
        d as i32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deadline {
    Disabled,
    /// Absolute bound on the one-way delay.
    Fixed(SimTime),
    /// Nominal one-way path delay plus this slack; resolved by the scenario.
    AfterNominal(SimTime),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReorderPolicy {
    pub window: SimTime,
    pub deadline: Deadline,
}

impl Default for ReorderPolicy {
    fn default() -> Self {
        ReorderPolicy {
            window: SimTime::from_ms(1),
            deadline: Deadline::AfterNominal(SimTime::from_ms(1)),
        }
    }
}

impl ReorderPolicy {
    /// The one-way delay bound, given the path's nominal delay.
    pub fn resolve_deadline(&self, nominal_delay: SimTime) -> Option<SimTime> {
        match self.deadline {
            Deadline::Disabled => None,
            Deadline::Fixed(d) => Some(d),
            Deadline::AfterNominal(slack) => Some(nominal_delay + slack),
        }
    }
}

/// Receives the reordered stream in SN order and checks it stays strictly
/// increasing.
#[derive(Clone, Debug, Default)]
pub struct UeSink {
    delivered: u64,
    delivered_bits: u64,
    last_count: Option<u64>,
}

impl UeSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// `count` is the unwrapped PDCP count assigned by the receiver.
    pub fn accept(&mut self, count: u64, frame: &Frame) -> Result<(), SimError> {
        if let Some(last) = self.last_count {
            if count <= last {
                return Err(SimError::DeliveryOrder { last, got: count });
            }
        }
        self.last_count = Some(count);
        self.delivered += 1;
        self.delivered_bits += frame.payload_bits();
        Ok(())
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn delivered_payload_bits(&self) -> u64 {
        self.delivered_bits
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RxOutcome {
    /// Delivered immediately, possibly flushing buffered successors.
    Delivered,
    /// Held behind a gap; call [`DuReceiver::expire`] with `key` at `release_at`.
    Buffered { key: u64, release_at: SimTime },
    Dropped(DropReason),
}

/// DU receive buffer.
///
/// Frames are passed to the UE in SN order. A frame that arrives ahead of a
/// gap is held for at most `window`; when its hold expires, the missing SNs
/// before it are given up and everything buffered up to it is released.
/// Frames whose SN has already been passed this way are dropped as stale.
#[derive(Clone, Debug)]
pub struct DuReceiver {
    window: SimTime,
    deadline: Option<SimTime>,
    next_count: u64,
    buffer: BTreeMap<u64, Frame>,
}

impl DuReceiver {
    pub fn new(policy: &ReorderPolicy, deadline: Option<SimTime>) -> Self {
        DuReceiver {
            window: policy.window,
            deadline,
            next_count: 0,
            buffer: BTreeMap::new(),
        }
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Unwrapped PDCP count of the next expected SN.
    pub fn next_expected(&self) -> u64 {
        self.next_count
    }

    pub fn receive(&mut self, frame: Frame, sink: &mut UeSink) -> Result<RxOutcome, SimError> {
        let Some(pdu) = frame.pdu().copied() else {
            return Err(SimError::invalid("frame", "overload frame reached the DU"));
        };
        let Some(arrived) = frame.du_ingress_at else {
            return Err(SimError::invalid("frame", "du_ingress_at not set"));
        };
        if frame.corrupted {
            return Ok(RxOutcome::Dropped(DropReason::Corruption));
        }
        if let (Some(limit), Some(delay)) = (self.deadline, frame.one_way_delay()) {
            if delay > limit {
                return Ok(RxOutcome::Dropped(DropReason::Deadline));
            }
        }
        let expected_sn = (self.next_count % PDCP_SN_MODULUS as u64) as u32;
        let delta = sn_delta(pdu.pdcp_sn, expected_sn);
        if delta < 0 {
            return Ok(RxOutcome::Dropped(DropReason::Stale));
        }
        let count = self.next_count + delta as u64;
        if delta == 0 {
            sink.accept(count, &frame)?;
            self.next_count += 1;
            self.flush_consecutive(sink)?;
            return Ok(RxOutcome::Delivered);
        }
        if self.buffer.contains_key(&count) {
            return Err(SimError::invalid("frame", "duplicate PDCP count"));
        }
        self.buffer.insert(count, frame);
        Ok(RxOutcome::Buffered {
            key: count,
            release_at: arrived + self.window,
        })
    }

    /// Hold timer for `key` fired. Returns the number of frames released.
    pub fn expire(&mut self, key: u64, sink: &mut UeSink) -> Result<u64, SimError> {
        if key < self.next_count || !self.buffer.contains_key(&key) {
            return Ok(0);
        }
        let mut released = 0;
        while let Some((&count, _)) = self.buffer.first_key_value() {
            if count > key {
                break;
            }
            let (count, frame) = self.buffer.pop_first().expect("non-empty");
            sink.accept(count, &frame)?;
            released += 1;
        }
        self.next_count = key + 1;
        released += self.flush_consecutive(sink)?;
        Ok(released)
    }

    fn flush_consecutive(&mut self, sink: &mut UeSink) -> Result<u64, SimError> {
        let mut n = 0;
        while let Some(frame) = self.buffer.remove(&self.next_count) {
            sink.accept(self.next_count, &frame)?;
            self.next_count += 1;
            n += 1;
        }
        Ok(n)
    }
}
