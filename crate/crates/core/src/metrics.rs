//! Per-scenario counters and the packet jitter estimator.

use crate::error::SimError;
use crate::math::Welford;
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DropReason {
    /// Any bit error in the frame (aggregation BER or optical link).
    Corruption,
    /// One-way delay above the DU delivery deadline.
    Deadline,
    /// Arrived after a higher SN was already released to the UE.
    Stale,
    /// Switch queue full.
    Overflow,
}

impl DropReason {
    pub const ALL: [DropReason; 4] = [
        DropReason::Corruption,
        DropReason::Deadline,
        DropReason::Stale,
        DropReason::Overflow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Corruption => "corruption",
            DropReason::Deadline => "deadline",
            DropReason::Stale => "stale",
            DropReason::Overflow => "overflow",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DropCounts {
    pub corruption: u64,
    pub deadline: u64,
    pub stale: u64,
    pub overflow: u64,
}

impl DropCounts {
    pub fn record(&mut self, reason: DropReason) {
        *self.get_mut(reason) += 1;
    }

    pub fn get(&self, reason: DropReason) -> u64 {
        match reason {
            DropReason::Corruption => self.corruption,
            DropReason::Deadline => self.deadline,
            DropReason::Stale => self.stale,
            DropReason::Overflow => self.overflow,
        }
    }

    fn get_mut(&mut self, reason: DropReason) -> &mut u64 {
        match reason {
            DropReason::Corruption => &mut self.corruption,
            DropReason::Deadline => &mut self.deadline,
            DropReason::Stale => &mut self.stale,
            DropReason::Overflow => &mut self.overflow,
        }
    }

    pub fn total(&self) -> u64 {
        self.corruption + self.deadline + self.stale + self.overflow
    }
}

/// Outcome of one scenario run.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub root_seed: u64,
    pub sent: u64,
    pub delivered: u64,
    pub drops: DropCounts,
    /// `(sent − delivered) / sent`, 0 when nothing was sent.
    pub per: f64,
    /// Mean CU→DU delay over frames that reached the DU.
    pub delay_mean: Option<SimTime>,
    /// Sample standard deviation of the CU→DU delay (packet jitter).
    pub delay_std: Option<SimTime>,
    pub delay_samples: u64,
    pub goodput_bps: f64,
    /// BER applied by the optical segment to V1 frames.
    pub optical_ber: f64,
    pub duration: SimTime,
    pub events_fired: u64,
    pub overload_frames: u64,
    pub overload_drops: u64,
}

impl MetricsReport {
    pub fn errored(&self) -> u64 {
        self.sent - self.delivered
    }

    /// `sent = delivered + Σ drops` exactly.
    pub fn is_conserved(&self) -> bool {
        self.sent == self.delivered + self.drops.total()
    }
}

/// Sample standard deviation of one-way delays.
pub fn measure_jitter(delays: &[SimTime]) -> Result<SimTime, SimError> {
    if delays.len() < 2 {
        return Err(SimError::invalid("delays", "need at least two samples"));
    }
    let mut w = Welford::new();
    for d in delays {
        w.push(d.as_ps_f64());
    }
    Ok(SimTime::from_ps_f64(w.std().unwrap_or(0.0)))
}

/// Incremental delay statistics in picoseconds.
#[derive(Clone, Copy, Debug, Default)]
pub struct DelayStats {
    acc: Welford,
}

impl DelayStats {
    pub fn push(&mut self, d: SimTime) {
        self.acc.push(d.as_ps_f64());
    }

    pub fn count(&self) -> u64 {
        self.acc.count()
    }

    pub fn mean(&self) -> Option<SimTime> {
        (self.acc.count() > 0).then(|| SimTime::from_ps_f64(self.acc.mean()))
    }

    pub fn std(&self) -> Option<SimTime> {
        self.acc.std().map(SimTime::from_ps_f64)
    }
}
