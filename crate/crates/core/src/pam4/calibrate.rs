//! Waveform Monte Carlo that measures per-stream BERs for the packet chain.
//!
//! Work is split into fixed-size chunks, each with its own bit and noise
//! substreams, so chunks can be run in any order or in parallel and summed.
//! Noise only affects decisions through the decision sample, so the Monte
//! Carlo draws noise for that sample alone.

use core::ops::{Add, AddAssign};

use super::channel::LowPass;
use super::{
    decode_symbol, encode_symbol, isi_ber, resolve_thresholds, slice, transmit, ThresholdMode,
    Pam4ChannelModel, Pam4Error,
};
use crate::math::{wilson_interval, Z_95};
use crate::rng::{streams, RngStream};

pub const CALIBRATION_CHUNK_SYMBOLS: u64 = 1 << 20;

/// Below this many expected errors per stream the interval is widened.
const MIN_EXPECTED_ERRORS: f64 = 100.0;
const WARMUP_SYMBOLS: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BerCounts {
    pub symbols: u64,
    pub msb_errors: u64,
    pub lsb_errors: u64,
    pub symbol_errors: u64,
}

impl Add for BerCounts {
    type Output = BerCounts;
    fn add(self, o: BerCounts) -> BerCounts {
        BerCounts {
            symbols: self.symbols + o.symbols,
            msb_errors: self.msb_errors + o.msb_errors,
            lsb_errors: self.lsb_errors + o.lsb_errors,
            symbol_errors: self.symbol_errors + o.symbol_errors,
        }
    }
}

impl AddAssign for BerCounts {
    fn add_assign(&mut self, o: BerCounts) {
        *self = *self + o;
    }
}

impl BerCounts {
    pub fn report(&self) -> super::BerReport {
        let n = self.symbols.max(1) as f64;
        super::BerReport {
            msb_ber: self.msb_errors as f64 / n,
            lsb_ber: self.lsb_errors as f64 / n,
            symbol_error_rate: self.symbol_errors as f64 / n,
            bits_tested: self.symbols,
        }
    }
}

/// A measured rate with its confidence interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    /// Point estimate; the interval's upper bound when no errors were seen.
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub errors: u64,
    pub trials: u64,
}

impl RateEstimate {
    fn from_counts(errors: u64, trials: u64, z: f64) -> Self {
        let (ci_low, ci_high) = wilson_interval(errors, trials, z);
        let rate = if errors == 0 {
            ci_high
        } else {
            errors as f64 / trials as f64
        };
        RateEstimate {
            rate,
            ci_low,
            ci_high,
            errors,
            trials,
        }
    }

    fn exact_zero() -> Self {
        RateEstimate {
            rate: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            errors: 0,
            trials: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub msb: RateEstimate,
    pub lsb: RateEstimate,
    pub symbol: RateEstimate,
    /// Noise-free and ISI-free eye: the rates are exactly zero, no Monte Carlo ran.
    pub exact: bool,
    /// Some stream saw no errors; its rate is an upper bound.
    pub zero_errors: bool,
    /// Fewer than 100 errors were expected per stream; the interval uses z = 3.
    pub low_count: bool,
    pub counts: BerCounts,
}

pub fn calibration_chunks(symbols: u64) -> u64 {
    symbols.div_ceil(CALIBRATION_CHUNK_SYMBOLS)
}

/// Symbols processed by chunk `index` of a run of `total` symbols.
fn chunk_len(total: u64, index: u64) -> u64 {
    let start = index * CALIBRATION_CHUNK_SYMBOLS;
    total.saturating_sub(start).min(CALIBRATION_CHUNK_SYMBOLS)
}

fn thresholds_for(model: &Pam4ChannelModel, seed: u64) -> [f64; 3] {
    match model.thresholds {
        ThresholdMode::Midpoint => model.midpoint_thresholds(),
        ThresholdMode::Adaptive => {
            // Pilot sequence, shared by every chunk.
            let mut bits = RngStream::new(seed, streams::PAM4_BITS).substream(u64::MAX);
            let mut noise = RngStream::new(seed, streams::PAM4_NOISE).substream(u64::MAX);
            let levels: alloc::vec::Vec<u8> = (0..1usize << 16)
                .map(|_| (bits.next_u64() & 3) as u8)
                .collect();
            resolve_thresholds(&transmit(&levels, model, &mut noise), model)
        }
    }
}

/// Runs chunk `index` of a `total`-symbol calibration.
pub fn run_calibration_chunk(model: &Pam4ChannelModel, seed: u64, index: u64, total: u64) -> BerCounts {
    let thresholds = thresholds_for(model, seed);
    run_chunk_with(model, &thresholds, seed, index, chunk_len(total, index))
}

fn run_chunk_with(
    model: &Pam4ChannelModel,
    thresholds: &[f64; 3],
    seed: u64,
    index: u64,
    symbols: u64,
) -> BerCounts {
    let mut bits = RngStream::new(seed, streams::PAM4_BITS).substream(index);
    let mut noise = RngStream::new(seed, streams::PAM4_NOISE).substream(index);
    let sigma = model.noise_sigma;
    let sps = model.samples_per_symbol;
    let mapping = model.mapping;
    let mut filter = LowPass::new(model, model.amplitude(0));
    let mut counts = BerCounts::default();
    let mut word = 0u64;
    let mut left_in_word = 0;
    let mut spare: Option<f64> = None;
    let total = symbols as usize + WARMUP_SYMBOLS;
    for k in 0..total {
        if left_in_word == 0 {
            word = bits.next_u64();
            left_in_word = 32;
        }
        let msb = word & 1 == 1;
        let lsb = word & 2 == 2;
        word >>= 2;
        left_in_word -= 1;
        let level = encode_symbol(msb, lsb, mapping);
        let a = model.amplitude(level);
        let mut sample = 0.0;
        for _ in 0..sps {
            sample = filter.step(a);
        }
        if k < WARMUP_SYMBOLS {
            continue;
        }
        if sigma > 0.0 {
            let z = match spare.take() {
                Some(z) => z,
                None => {
                    let (z0, z1) = noise.standard_normal_pair();
                    spare = Some(z1);
                    z0
                }
            };
            sample += sigma * z;
        }
        let decided = slice(sample, thresholds);
        counts.symbols += 1;
        if decided != level {
            let (m, l) = decode_symbol(decided, mapping);
            counts.symbol_errors += 1;
            counts.msb_errors += (m != msb) as u64;
            counts.lsb_errors += (l != lsb) as u64;
        }
    }
    counts
}

/// Turns summed chunk counts into a [`Calibration`].
pub fn finish_calibration(model: &Pam4ChannelModel, counts: BerCounts) -> Result<Calibration, Pam4Error> {
    let predicted = isi_ber(model)?;
    let expected_errors = predicted.msb_ber.min(predicted.lsb_ber) * counts.symbols as f64;
    let low_count = expected_errors < MIN_EXPECTED_ERRORS;
    let z = if low_count { 3.0 } else { Z_95 };
    let msb = RateEstimate::from_counts(counts.msb_errors, counts.symbols, z);
    let lsb = RateEstimate::from_counts(counts.lsb_errors, counts.symbols, z);
    let symbol = RateEstimate::from_counts(counts.symbol_errors, counts.symbols, z);
    Ok(Calibration {
        zero_errors: counts.msb_errors == 0 || counts.lsb_errors == 0,
        msb,
        lsb,
        symbol,
        exact: false,
        low_count,
        counts,
    })
}

/// True when no Monte Carlo is needed: no noise and an eye that ISI alone
/// cannot close.
fn is_exactly_error_free(model: &Pam4ChannelModel) -> Result<bool, Pam4Error> {
    if model.noise_sigma != 0.0 {
        return Ok(false);
    }
    let r = isi_ber(model)?;
    Ok(r.symbol_error_rate == 0.0)
}

/// Sequential calibration over `symbols` symbols.
pub fn calibrate(model: &Pam4ChannelModel, symbols: u64, seed: u64) -> Result<Calibration, Pam4Error> {
    model.validate()?;
    if is_exactly_error_free(model)? {
        return Ok(exact_calibration());
    }
    let thresholds = thresholds_for(model, seed);
    let mut counts = BerCounts::default();
    for index in 0..calibration_chunks(symbols) {
        counts += run_chunk_with(model, &thresholds, seed, index, chunk_len(symbols, index));
    }
    finish_calibration(model, counts)
}

/// Result for a noise-free channel.
pub fn exact_calibration() -> Calibration {
    Calibration {
        msb: RateEstimate::exact_zero(),
        lsb: RateEstimate::exact_zero(),
        symbol: RateEstimate::exact_zero(),
        exact: true,
        zero_errors: false,
        low_count: false,
        counts: BerCounts::default(),
    }
}

impl Calibration {
    /// Shortcut used by callers that parallelise the chunks themselves.
    pub fn needs_monte_carlo(model: &Pam4ChannelModel) -> Result<bool, Pam4Error> {
        model.validate()?;
        Ok(!is_exactly_error_free(model)?)
    }
}
