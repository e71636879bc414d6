//! Aggregation-network impairment engine: mean latency, Gaussian jitter and
//! BER-induced frame corruption applied to V1 frames.

use crate::error::SimError;
use crate::rng::{streams, RngStream};
use crate::stack::Frame;
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpairmentProfile {
    pub mean_latency: SimTime,
    /// Standard deviation of the one-way latency.
    pub jitter_std: SimTime,
    pub injected_ber: f64,
    /// Fraction of bit-errored frames that are actually lost. 1.0 is the
    /// independent-bit-error model.
    pub effective_kill_fraction: f64,
}

impl Default for ImpairmentProfile {
    fn default() -> Self {
        ImpairmentProfile {
            mean_latency: SimTime::from_ms(2),
            jitter_std: SimTime::ZERO,
            injected_ber: 0.0,
            effective_kill_fraction: 1.0,
        }
    }
}

impl ImpairmentProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.injected_ber) {
            return Err(SimError::invalid("injected_ber", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.effective_kill_fraction) {
            return Err(SimError::invalid("effective_kill_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Probability that at least one of `bits` independent bits is in error:
/// `1 − (1 − ber)^bits`.
pub fn per_from_ber(ber: f64, bits: u64) -> f64 {
    if bits == 0 || ber <= 0.0 {
        return 0.0;
    }
    if ber >= 1.0 {
        return 1.0;
    }
    -libm::expm1(bits as f64 * libm::log1p(-ber))
}

/// Inverse of [`per_from_ber`]: the BER at which `bits`-bit frames fail
/// with probability `per`.
pub fn ber_from_per(per: f64, bits: u64) -> f64 {
    if bits == 0 || per <= 0.0 {
        return 0.0;
    }
    if per >= 1.0 {
        return 1.0;
    }
    -libm::expm1(libm::log1p(-per) / bits as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImpairOutcome {
    pub exit_time: SimTime,
    pub corrupted: bool,
}

/// Applies an [`ImpairmentProfile`] using two independent substreams, one
/// for delays and one for corruption decisions.
#[derive(Clone, Debug)]
pub struct Impairer {
    profile: ImpairmentProfile,
    delay_rng: RngStream,
    corruption_rng: RngStream,
}

impl Impairer {
    pub fn new(profile: ImpairmentProfile, root_seed: u64) -> Result<Self, SimError> {
        Self::with_seeds(profile, root_seed, root_seed)
    }

    /// Separate seeds per substream, so one can be varied alone.
    pub fn with_seeds(
        profile: ImpairmentProfile,
        delay_seed: u64,
        corruption_seed: u64,
    ) -> Result<Self, SimError> {
        profile.validate()?;
        Ok(Impairer {
            profile,
            delay_rng: RngStream::new(delay_seed, streams::IMPAIR_DELAY),
            corruption_rng: RngStream::new(corruption_seed, streams::IMPAIR_CORRUPTION),
        })
    }

    pub fn profile(&self) -> &ImpairmentProfile {
        &self.profile
    }

    /// Latency drawn from `N(mean, std²)` truncated to non-negative values by
    /// rejection; this keeps the distribution free of an atom at zero.
    pub fn draw_delay(&mut self) -> SimTime {
        let mean = self.profile.mean_latency.as_ps_f64();
        let std = self.profile.jitter_std.as_ps_f64();
        if std == 0.0 {
            return self.profile.mean_latency;
        }
        loop {
            let d = self
                .delay_rng
                .draw_normal(mean, std)
                .expect("std is non-negative by construction");
            if d >= 0.0 {
                return SimTime::from_ps_f64(d);
            }
        }
    }

    /// Frame-level corruption: one Bernoulli draw with the probability that
    /// any payload bit is hit.
    pub fn draw_corruption(&mut self, payload_bits: u64) -> bool {
        let p = per_from_ber(self.profile.injected_ber, payload_bits)
            * self.profile.effective_kill_fraction;
        self.corruption_rng.bernoulli(p)
    }

    pub fn apply(&mut self, frame: &Frame, now: SimTime) -> ImpairOutcome {
        let delay = self.draw_delay();
        let corrupted = self.draw_corruption(frame.payload_bits());
        ImpairOutcome {
            exit_time: now + delay,
            corrupted,
        }
    }
}
