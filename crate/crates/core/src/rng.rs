//! Counter-based, stream-partitioned random numbers.
//!
//! Every draw is a pure function of `(root_seed, stream_id, counter)`, so a
//! component's sequence does not depend on how many draws other components
//! have made. Streams are keyed by hashing a textual label.

use core::f64::consts::TAU;

use crate::error::SimError;

/// Label of an independent random stream, usually the FNV-1a hash of a
/// component name such as `"impair.delay"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamId(pub u64);

impl StreamId {
    pub const fn named(label: &str) -> Self {
        StreamId(fnv1a64(label.as_bytes()))
    }
}

pub mod streams {
    use super::StreamId;

    pub const IMPAIR_DELAY: StreamId = StreamId::named("impair.delay");
    pub const IMPAIR_CORRUPTION: StreamId = StreamId::named("impair.corruption");
    pub const ACCESS_HOP: StreamId = StreamId::named("access.hop");
    pub const ACCESS_OVERLOAD: StreamId = StreamId::named("access.overload");
    pub const OPTICAL_CORRUPTION: StreamId = StreamId::named("access.optical");
    pub const PAM4_CALIBRATION: StreamId = StreamId::named("pam4.calibration");
    pub const PAM4_NOISE: StreamId = StreamId::named("pam4.noise");
    pub const PAM4_BITS: StreamId = StreamId::named("pam4.bits");
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    root_seed: u64,
    stream: StreamId,
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(root_seed: u64, stream: StreamId) -> Self {
        let key = mix64(mix64(root_seed ^ 0x6A09_E667_F3BC_C908) ^ stream.0);
        RngStream {
            root_seed,
            stream,
            key,
            counter: 0,
        }
    }

    /// A child stream, e.g. one per Monte Carlo chunk or sweep point.
    pub fn substream(&self, index: u64) -> Self {
        let key = mix64(self.key ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        RngStream {
            root_seed: self.root_seed,
            stream: self.stream,
            key,
            counter: 0,
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_id(&self) -> StreamId {
        self.stream
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// The raw output at `counter`, without advancing.
    pub fn peek_at(&self, counter: u64) -> u64 {
        let x = mix64(counter.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ self.key);
        mix64(x.wrapping_add(self.key.rotate_left(29)) ^ counter)
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = self.peek_at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`, safe for `ln`.
    fn next_f64_open_low(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normals from one Box-Muller transform.
    /// Always consumes exactly two counters.
    pub fn standard_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_f64_open_low();
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(TAU * u2);
        (r * c, r * s)
    }

    /// A standard normal sample; consumes exactly two counters.
    pub fn standard_normal(&mut self) -> f64 {
        self.standard_normal_pair().0
    }

    /// Sample from `N(mean, std²)`, consuming exactly two counters.
    /// `std = 0` returns `mean` exactly.
    pub fn draw_normal(&mut self, mean: f64, std: f64) -> Result<f64, SimError> {
        if !(std >= 0.0) {
            return Err(SimError::invalid("std", "must be non-negative"));
        }
        let z = self.standard_normal();
        if std == 0.0 {
            return Ok(mean);
        }
        Ok(mean + std * z)
    }

    /// Exponential with the given rate (mean `1/rate`); consumes one counter.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -libm::log(self.next_f64_open_low()) / rate
    }

    /// Consumes one counter regardless of `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with an index, e.g. to derive per-point sweep seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index ^ 0xD134_2543_DE82_EF95))
}

const fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let mut i = 0;
    while i < bytes.len() {
        hash ^= bytes[i] as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        i += 1;
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure_in_seed_stream_counter() {
        let mut a = RngStream::new(7, streams::IMPAIR_DELAY);
        let b = RngStream::new(7, streams::IMPAIR_DELAY);
        for i in 0..100 {
            assert_eq!(a.next_u64(), b.peek_at(i));
        }
        let mut c = b.clone();
        let mut d = b.clone();
        assert_eq!(c.draw_normal(1.0, 2.0), d.draw_normal(1.0, 2.0));
    }

    #[test]
    fn zero_std_returns_mean_and_advances_fixed_count() {
        let mut s = RngStream::new(1, streams::IMPAIR_DELAY);
        assert_eq!(s.draw_normal(2.0e-3, 0.0).unwrap(), 2.0e-3);
        assert_eq!(s.counter(), 2);
        s.draw_normal(0.0, 1.0).unwrap();
        assert_eq!(s.counter(), 4);
    }

    #[test]
    fn negative_std_rejected() {
        let mut s = RngStream::new(1, streams::IMPAIR_DELAY);
        assert!(s.draw_normal(0.0, -1.0).is_err());
        assert!(s.draw_normal(0.0, f64::NAN).is_err());
    }

    #[test]
    fn labels_and_seeds_separate_streams() {
        let mut a = RngStream::new(1, streams::IMPAIR_DELAY);
        let mut b = RngStream::new(1, streams::IMPAIR_CORRUPTION);
        let mut c = RngStream::new(2, streams::IMPAIR_DELAY);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_ne!(x, y);
        assert_ne!(x, z);
        assert_ne!(
            a.substream(0).next_u64(),
            a.substream(1).next_u64()
        );
    }

    #[test]
    fn normal_moments_large_sample() {
        // 10^6 draws of N(2 ms, 0.66 ms): mean within 3 standard errors,
        // std within 1 %.
        let mut s = RngStream::new(99, streams::IMPAIR_DELAY);
        let (mean, std) = (2.0e-3, 0.66e-3);
        let n = 1_000_000;
        let mut acc = crate::math::Welford::new();
        for _ in 0..n {
            acc.push(s.draw_normal(mean, std).unwrap());
        }
        assert!((acc.mean() - mean).abs() < 3.0 * std / 1000.0);
        assert!((acc.std().unwrap() / std - 1.0).abs() < 0.01);
    }

    #[test]
    fn substreams_are_uncorrelated() {
        let mut a = RngStream::new(5, streams::PAM4_NOISE);
        let mut b = RngStream::new(5, streams::PAM4_BITS);
        let n = 100_000;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.next_f64();
            let y = b.next_f64();
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - (sa / nf) * (sb / nf);
        let va = saa / nf - (sa / nf) * (sa / nf);
        let vb = sbb / nf - (sb / nf) * (sb / nf);
        let rho = cov / libm::sqrt(va * vb);
        assert!(rho.abs() < 0.01, "rho = {rho}");
    }
}
