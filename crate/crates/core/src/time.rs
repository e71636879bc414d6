//! Simulation time base.

use core::fmt;
use core::ops::{Add, AddAssign, Sub};

const PS_PER_NS: u64 = 1_000;
const PS_PER_US: u64 = 1_000_000;
const PS_PER_MS: u64 = 1_000_000_000;
const PS_PER_S: u64 = 1_000_000_000_000;

/// Integer picoseconds since scenario start.
///
/// A `u64` covers about 1.8·10^7 s, far beyond any scenario length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * PS_PER_NS)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * PS_PER_US)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * PS_PER_MS)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * PS_PER_S)
    }

    /// Rounds to the nearest picosecond. Returns `None` for negative,
    /// non-finite or out-of-range input.
    pub fn try_from_ps_f64(ps: f64) -> Option<Self> {
        if !ps.is_finite() || ps < 0.0 || ps >= u64::MAX as f64 {
            return None;
        }
        Some(SimTime(libm::round(ps) as u64))
    }

    /// # Panics
    /// On negative or non-finite input.
    pub fn from_ps_f64(ps: f64) -> Self {
        match Self::try_from_ps_f64(ps) {
            Some(t) => t,
            None => panic!("invalid simulation time {ps} ps"),
        }
    }

    pub fn from_secs_f64(s: f64) -> Self {
        Self::from_ps_f64(s * PS_PER_S as f64)
    }

    pub fn from_ms_f64(ms: f64) -> Self {
        Self::from_ps_f64(ms * PS_PER_MS as f64)
    }

    pub fn from_us_f64(us: f64) -> Self {
        Self::from_ps_f64(us * PS_PER_US as f64)
    }

    pub fn from_ns_f64(ns: f64) -> Self {
        Self::from_ps_f64(ns * PS_PER_NS as f64)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_ps_f64(self) -> f64 {
        self.0 as f64
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / PS_PER_S as f64
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / PS_PER_MS as f64
    }

    pub fn as_us_f64(self) -> f64 {
        self.0 as f64 / PS_PER_US as f64
    }

    pub fn as_ns_f64(self) -> f64 {
        self.0 as f64 / PS_PER_NS as f64
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn saturating_add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }

    pub fn mul_u64(self, k: u64) -> SimTime {
        SimTime(self.0 * k)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    /// # Panics
    /// On underflow; use [`SimTime::checked_sub`] where the order is not known.
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps = self.0;
        if ps >= PS_PER_S {
            write!(f, "{:.6} s", self.as_secs_f64())
        } else if ps >= PS_PER_MS {
            write!(f, "{:.6} ms", self.as_ms_f64())
        } else if ps >= PS_PER_US {
            write!(f, "{:.3} us", self.as_us_f64())
        } else {
            write!(f, "{:.3} ns", self.as_ns_f64())
        }
    }
}
