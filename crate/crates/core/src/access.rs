//! Fixed access plane between the impairment engine and the DU: the 10 GbE
//! switch shared with overload traffic, equipment hops, the PAM4 optical
//! segment and fibre propagation.

use alloc::vec::Vec;

use crate::error::SimError;
use crate::impair::per_from_ber;
use crate::rng::{streams, RngStream};
use crate::stack::{wire_bits_for, VlanTag};
use crate::time::SimTime;

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;
pub const TEN_GBE_LINE_RATE_BPS: f64 = 10.3125e9;

/// `fiber_km · 10³ · group_index / c`.
pub fn propagation_delay(fiber_km: f64, group_index: f64) -> SimTime {
    SimTime::from_secs_f64(fiber_km * 1.0e3 * group_index / SPEED_OF_LIGHT_M_PER_S)
}

pub fn serialization_delay(wire_bits: u64, line_rate_bps: f64) -> SimTime {
    SimTime::from_secs_f64(wire_bits as f64 / line_rate_bps)
}

/// How per-hop equipment delays interact between frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HopDiscipline {
    /// Each hop's latency is a stationary Gauss-Markov process in time with
    /// correlation time `hop_correlation_time`; frames close together see
    /// nearly the same latency. Hops stay FIFO.
    #[default]
    Correlated,
    /// Independent per-frame latencies, but a frame never leaves a hop
    /// before its predecessor.
    Fifo,
    /// Independent per-frame delays; frames may overtake each other.
    Iid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkConfig {
    pub fiber_km: f64,
    pub group_index: f64,
    pub line_rate_bps: f64,
    /// Mean latency of one equipment hop.
    pub hop_latency: SimTime,
    /// Standard deviation of one hop's latency.
    pub hop_jitter_std: SimTime,
    pub hop_count: u32,
    pub hop_discipline: HopDiscipline,
    /// Only used by [`HopDiscipline::Correlated`].
    pub hop_correlation_time: SimTime,
    pub queue_capacity_bytes: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            fiber_km: 20.0,
            group_index: 1.468,
            line_rate_bps: TEN_GBE_LINE_RATE_BPS,
            hop_latency: SimTime::from_us(200),
            // Four independent hops of 60 us add up to 120 us.
            hop_jitter_std: SimTime::from_us(60),
            hop_count: 4,
            hop_discipline: HopDiscipline::Correlated,
            hop_correlation_time: SimTime::from_ms(10),
            queue_capacity_bytes: 2_000_000,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.fiber_km >= 0.0) || !self.fiber_km.is_finite() {
            return Err(SimError::invalid("fiber_km", "must be finite and non-negative"));
        }
        if !(self.group_index >= 0.0) || !self.group_index.is_finite() {
            return Err(SimError::invalid("group_index", "must be finite and non-negative"));
        }
        if !(self.line_rate_bps > 0.0) || !self.line_rate_bps.is_finite() {
            return Err(SimError::invalid("line_rate_bps", "must be positive"));
        }
        if self.hop_discipline == HopDiscipline::Correlated && self.hop_correlation_time == SimTime::ZERO {
            return Err(SimError::invalid("hop_correlation_time", "must be positive"));
        }
        Ok(())
    }

    pub fn propagation(&self) -> SimTime {
        propagation_delay(self.fiber_km, self.group_index)
    }

    /// Access-chain std implied by independent hops: `√hop_count · hop_jitter_std`.
    pub fn chain_jitter_std(&self) -> SimTime {
        SimTime::from_ps_f64(libm::sqrt(self.hop_count as f64) * self.hop_jitter_std.as_ps_f64())
    }

    /// Switch serialization, mean hop latencies and propagation, without queuing.
    pub fn nominal_delay(&self, wire_bits: u64) -> SimTime {
        serialization_delay(wire_bits, self.line_rate_bps)
            + self.hop_latency.mul_u64(self.hop_count as u64)
            + self.propagation()
    }

    /// The uplink bypasses the PAM4 bench: propagation only.
    pub fn uplink_delay(&self) -> SimTime {
        self.propagation()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ArrivalProcess {
    #[default]
    Poisson,
    Deterministic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverloadSpec {
    /// Overload share of the line rate; `None` fills up to `fill_to`.
    pub target_utilization: Option<f64>,
    /// Total utilization (V1 + overload) reached when no explicit target is set.
    pub fill_to: f64,
    pub frame_bytes: u32,
    pub vlan: VlanTag,
    pub arrivals: ArrivalProcess,
}

impl Default for OverloadSpec {
    fn default() -> Self {
        OverloadSpec {
            target_utilization: None,
            fill_to: 0.95,
            frame_bytes: 1500,
            vlan: VlanTag::OVERLOAD_DEFAULT,
            arrivals: ArrivalProcess::Poisson,
        }
    }
}

impl OverloadSpec {
    pub fn disabled() -> Self {
        OverloadSpec {
            target_utilization: Some(0.0),
            ..Default::default()
        }
    }

    pub fn utilization(&self, v1_utilization: f64) -> f64 {
        match self.target_utilization {
            Some(u) => u,
            None => (self.fill_to - v1_utilization).max(0.0),
        }
    }

    pub fn validate(&self, v1_utilization: f64, v1_vlan: VlanTag) -> Result<(), SimError> {
        if self.vlan == v1_vlan {
            return Err(SimError::invalid("overload.vlan", "must differ from the V1 tag"));
        }
        if !(0.0..=1.0).contains(&self.fill_to) {
            return Err(SimError::invalid("overload.fill_to", "must lie in [0, 1]"));
        }
        let u = self.utilization(v1_utilization);
        if !(0.0..=1.0).contains(&u) {
            return Err(SimError::invalid("overload.target_utilization", "must lie in [0, 1]"));
        }
        if u + v1_utilization > 1.0 {
            return Err(SimError::invalid("overload", "V1 plus overload exceeds the line rate"));
        }
        if self.frame_bytes == 0 {
            return Err(SimError::invalid("overload.frame_bytes", "must be at least 1"));
        }
        Ok(())
    }
}

/// Background traffic competing for the switch port, generated lazily.
#[derive(Clone, Debug)]
pub struct OverloadSource {
    rng: RngStream,
    arrivals: ArrivalProcess,
    wire_bits: u64,
    mean_gap_ps: f64,
    next_ps: f64,
}

impl OverloadSource {
    /// `None` when the utilization is zero.
    pub fn new(spec: &OverloadSpec, utilization: f64, line_rate_bps: f64, seed: u64) -> Option<Self> {
        if utilization <= 0.0 {
            return None;
        }
        let wire_bits = wire_bits_for(spec.frame_bytes);
        let frames_per_s = utilization * line_rate_bps / wire_bits as f64;
        let mean_gap_ps = 1.0e12 / frames_per_s;
        let mut rng = RngStream::new(seed, streams::ACCESS_OVERLOAD);
        let next_ps = match spec.arrivals {
            ArrivalProcess::Poisson => rng.exponential(1.0) * mean_gap_ps,
            ArrivalProcess::Deterministic => rng.next_f64() * mean_gap_ps,
        };
        Some(OverloadSource {
            rng,
            arrivals: spec.arrivals,
            wire_bits,
            mean_gap_ps,
            next_ps,
        })
    }

    fn peek(&self) -> SimTime {
        SimTime::from_ps_f64(self.next_ps)
    }

    fn advance(&mut self) {
        self.next_ps += match self.arrivals {
            ArrivalProcess::Poisson => self.rng.exponential(1.0) * self.mean_gap_ps,
            ArrivalProcess::Deterministic => self.mean_gap_ps,
        };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub arrival: SimTime,
    pub start: SimTime,
    pub end: SimTime,
    pub wire_bits: u64,
    pub is_v1: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SwitchStats {
    pub v1_frames: u64,
    pub v1_overflow: u64,
    pub overload_frames: u64,
    pub overload_overflow: u64,
    pub busy: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Overflow;

/// Single-output store-and-forward FIFO port.
#[derive(Clone, Debug)]
pub struct Switch {
    line_rate_bps: f64,
    capacity_bits: u64,
    busy_until: SimTime,
    overload: Option<OverloadSource>,
    stats: SwitchStats,
    trace: Option<Vec<Transmission>>,
}

impl Switch {
    pub fn new(line_rate_bps: f64, capacity_bytes: u64, overload: Option<OverloadSource>) -> Self {
        Switch {
            line_rate_bps,
            capacity_bits: capacity_bytes.saturating_mul(8),
            busy_until: SimTime::ZERO,
            overload,
            stats: SwitchStats::default(),
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn stats(&self) -> SwitchStats {
        self.stats
    }

    pub fn trace(&self) -> Option<&[Transmission]> {
        self.trace.as_deref()
    }

    fn enqueue(&mut self, wire_bits: u64, arrival: SimTime, is_v1: bool) -> Result<SimTime, Overflow> {
        let backlog = self.busy_until.saturating_sub(arrival);
        let backlog_bits = libm::round(backlog.as_secs_f64() * self.line_rate_bps) as u64;
        if backlog_bits + wire_bits > self.capacity_bits {
            return Err(Overflow);
        }
        let start = arrival.max(self.busy_until);
        let end = start + serialization_delay(wire_bits, self.line_rate_bps);
        self.stats.busy += end - start;
        self.busy_until = end;
        if let Some(t) = self.trace.as_mut() {
            t.push(Transmission {
                arrival,
                start,
                end,
                wire_bits,
                is_v1,
            });
        }
        Ok(end)
    }

    /// Admits all overload frames that arrived up to and including `t`.
    pub fn advance_overload(&mut self, t: SimTime) {
        while let Some(src) = self.overload.as_mut() {
            let at = src.peek();
            if at > t {
                break;
            }
            let bits = src.wire_bits;
            src.advance();
            match self.enqueue(bits, at, false) {
                Ok(_) => self.stats.overload_frames += 1,
                Err(Overflow) => self.stats.overload_overflow += 1,
            }
        }
    }

    /// Egress time of a V1 frame arriving at `arrival`: after everything
    /// queued ahead of it, plus its own serialization.
    pub fn transit(&mut self, wire_bits: u64, arrival: SimTime) -> Result<SimTime, Overflow> {
        self.advance_overload(arrival);
        match self.enqueue(wire_bits, arrival, true) {
            Ok(end) => {
                self.stats.v1_frames += 1;
                Ok(end)
            }
            Err(Overflow) => {
                self.stats.v1_overflow += 1;
                Err(Overflow)
            }
        }
    }
}

/// The chain of equipment hops (evaluation boards, switch traversals).
#[derive(Clone, Debug)]
pub struct HopChain {
    latency_ps: f64,
    std_ps: f64,
    correlation_ps: f64,
    discipline: HopDiscipline,
    hops: Vec<HopState>,
    rng: RngStream,
}

#[derive(Clone, Copy, Debug, Default)]
struct HopState {
    last_entry: Option<SimTime>,
    last_egress: SimTime,
    /// Current latency deviation from the mean, correlated discipline only.
    deviation_ps: f64,
}

impl HopChain {
    pub fn new(cfg: &LinkConfig, seed: u64) -> Self {
        HopChain {
            latency_ps: cfg.hop_latency.as_ps_f64(),
            std_ps: cfg.hop_jitter_std.as_ps_f64(),
            correlation_ps: cfg.hop_correlation_time.as_ps_f64(),
            discipline: cfg.hop_discipline,
            hops: alloc::vec![HopState::default(); cfg.hop_count as usize],
            rng: RngStream::new(seed, streams::ACCESS_HOP),
        }
    }

    /// One independent hop latency, `N(latency, std²)` truncated at zero by
    /// rejection.
    fn independent_delay(&mut self) -> f64 {
        if self.std_ps == 0.0 {
            return self.latency_ps;
        }
        loop {
            let d = self.latency_ps + self.std_ps * self.rng.standard_normal();
            if d >= 0.0 {
                return d;
            }
        }
    }

    /// Advances hop `i`'s Gauss-Markov deviation to time `t` and returns the
    /// latency, clamped at zero.
    fn correlated_delay(&mut self, i: usize, t: SimTime) -> f64 {
        if self.std_ps == 0.0 {
            return self.latency_ps;
        }
        let z = self.rng.standard_normal();
        let h = &mut self.hops[i];
        h.deviation_ps = match h.last_entry {
            None => self.std_ps * z,
            Some(prev) => {
                let rho = libm::exp(-(t - prev).as_ps_f64() / self.correlation_ps);
                rho * h.deviation_ps + self.std_ps * libm::sqrt(1.0 - rho * rho) * z
            }
        };
        h.last_entry = Some(t);
        (self.latency_ps + h.deviation_ps).max(0.0)
    }

    /// Exit time from the last hop for a frame entering the first at `arrival`.
    /// Frames must be passed in the order they enter the chain.
    pub fn traverse(&mut self, arrival: SimTime) -> SimTime {
        let mut t = arrival;
        for i in 0..self.hops.len() {
            let d = match self.discipline {
                HopDiscipline::Correlated => self.correlated_delay(i, t),
                HopDiscipline::Fifo | HopDiscipline::Iid => self.independent_delay(),
            };
            let mut out = t + SimTime::from_ps_f64(d);
            if self.discipline != HopDiscipline::Iid {
                out = out.max(self.hops[i].last_egress);
                self.hops[i].last_egress = out;
            }
            t = out;
        }
        t
    }
}

/// PAM4 optical segment as seen by packets: the calibrated MSB BER kills a
/// V1 frame with probability `per_from_ber(ber, payload bits)`.
#[derive(Clone, Debug)]
pub struct OpticalSegment {
    ber: f64,
    rng: RngStream,
}

impl OpticalSegment {
    pub fn new(ber: f64, seed: u64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&ber) {
            return Err(SimError::invalid("optical_ber", "must lie in [0, 1]"));
        }
        Ok(OpticalSegment {
            ber,
            rng: RngStream::new(seed, streams::OPTICAL_CORRUPTION),
        })
    }

    pub fn ber(&self) -> f64 {
        self.ber
    }

    pub fn corrupts(&mut self, payload_bits: u64) -> bool {
        if self.ber == 0.0 {
            return false;
        }
        self.rng.bernoulli(per_from_ber(self.ber, payload_bits))
    }
}
