//! PAM4 physical layer of the optical access link.
//!
//! Two bit streams (MSB carrying the live 10 GbE traffic, LSB a decorrelated
//! copy) are mapped onto four amplitude levels, passed through a
//! bandwidth-limited AWGN channel that stands in for the DML → SSMF → APD
//! path, and sliced back. The waveform model is used to calibrate effective
//! per-stream BERs which the packet-level chain then applies per frame.

mod analytic;
mod calibrate;
mod channel;
mod eye;

use alloc::vec::Vec;
use core::fmt;

pub use analytic::{analytic_ber, isi_ber, solve_noise_sigma};
pub use calibrate::{
    calibrate, calibration_chunks, exact_calibration, finish_calibration, run_calibration_chunk,
    BerCounts, Calibration, RateEstimate, CALIBRATION_CHUNK_SYMBOLS,
};
pub use channel::{decision_samples, transmit};
pub use eye::{eye_export, eye_export_with_bins, EyeHistogram, DEFAULT_AMPLITUDE_BINS};

use crate::time::SimTime;

/// 10GBASE-R line rate used as the PAM4 symbol rate.
pub const SYMBOL_RATE_BAUD: f64 = 10.3125e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mapping {
    /// `level = 2·msb + lsb`; the MSB decision has the wider margin.
    #[default]
    Natural,
    /// 00→0, 01→1, 11→2, 10→3.
    Gray,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ThresholdMode {
    /// Midpoints between adjacent level amplitudes.
    #[default]
    Midpoint,
    /// Derived from the quartiles of the received decision samples.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pam4Error {
    LengthMismatch { msb: usize, lsb: usize },
    InvalidModel(&'static str),
    /// Closed-form BER needs equally spaced levels.
    UnequalSpacing,
    InvalidLevel(u8),
}

impl fmt::Display for Pam4Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pam4Error::LengthMismatch { msb, lsb } => {
                write!(f, "MSB stream has {msb} bits but LSB stream has {lsb}")
            }
            Pam4Error::InvalidModel(why) => write!(f, "invalid PAM4 channel model: {why}"),
            Pam4Error::UnequalSpacing => {
                f.write_str("closed-form BER requires equally spaced levels")
            }
            Pam4Error::InvalidLevel(l) => write!(f, "PAM4 level {l} out of range"),
        }
    }
}

impl core::error::Error for Pam4Error {}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BitStreamPair {
    msb: Vec<bool>,
    lsb: Vec<bool>,
}

impl BitStreamPair {
    pub fn new(msb: Vec<bool>, lsb: Vec<bool>) -> Result<Self, Pam4Error> {
        if msb.len() != lsb.len() {
            return Err(Pam4Error::LengthMismatch {
                msb: msb.len(),
                lsb: lsb.len(),
            });
        }
        Ok(BitStreamPair { msb, lsb })
    }

    pub fn msb(&self) -> &[bool] {
        &self.msb
    }

    pub fn lsb(&self) -> &[bool] {
        &self.lsb
    }

    pub fn len(&self) -> usize {
        self.msb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.msb.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pam4ChannelModel {
    /// Strictly increasing amplitudes of levels 0..3, unit spacing by default.
    pub level_amplitudes: [f64; 4],
    /// Per-sample AWGN standard deviation, in the same units as the levels.
    pub noise_sigma: f64,
    /// Analog 3 dB cutoff over symbol rate; `f64::INFINITY` disables the filter.
    pub filter_cutoff_ratio: f64,
    /// Number of cascaded single-pole sections.
    pub filter_order: u32,
    pub samples_per_symbol: usize,
    pub mapping: Mapping,
    pub thresholds: ThresholdMode,
}

impl Default for Pam4ChannelModel {
    fn default() -> Self {
        Pam4ChannelModel {
            level_amplitudes: [0.0, 1.0, 2.0, 3.0],
            noise_sigma: 0.0,
            filter_cutoff_ratio: 10.0e9 / SYMBOL_RATE_BAUD,
            filter_order: 1,
            samples_per_symbol: 2,
            mapping: Mapping::Natural,
            thresholds: ThresholdMode::Midpoint,
        }
    }
}

impl Pam4ChannelModel {
    /// Unfiltered AWGN channel with unit level spacing.
    pub fn awgn(noise_sigma: f64) -> Self {
        Pam4ChannelModel {
            noise_sigma,
            filter_cutoff_ratio: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), Pam4Error> {
        let l = &self.level_amplitudes;
        if !l.iter().all(|x| x.is_finite()) || !(l[0] < l[1] && l[1] < l[2] && l[2] < l[3]) {
            return Err(Pam4Error::InvalidModel("level amplitudes must be strictly increasing"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Pam4Error::InvalidModel("noise_sigma must be finite and non-negative"));
        }
        if !(self.filter_cutoff_ratio > 0.0) {
            return Err(Pam4Error::InvalidModel("filter_cutoff_ratio must be positive"));
        }
        if self.filter_order == 0 {
            return Err(Pam4Error::InvalidModel("filter_order must be at least 1"));
        }
        if self.samples_per_symbol == 0 {
            return Err(Pam4Error::InvalidModel("samples_per_symbol must be at least 1"));
        }
        Ok(())
    }

    pub fn is_filtered(&self) -> bool {
        self.filter_cutoff_ratio.is_finite()
    }

    /// Per-sample decay of each filter section: `exp(−2π·fc·Ts / sps)`.
    pub fn filter_decay(&self) -> f64 {
        if !self.is_filtered() {
            return 0.0;
        }
        libm::exp(-core::f64::consts::TAU * self.filter_cutoff_ratio / self.samples_per_symbol as f64)
    }

    pub fn amplitude(&self, level: u8) -> f64 {
        self.level_amplitudes[level as usize]
    }

    pub fn midpoint_thresholds(&self) -> [f64; 3] {
        let l = &self.level_amplitudes;
        [0.5 * (l[0] + l[1]), 0.5 * (l[1] + l[2]), 0.5 * (l[2] + l[3])]
    }

    /// Index of the sample within each symbol used for decisions: the last
    /// one, where the causal channel response has settled the most.
    pub fn decision_index(&self) -> usize {
        self.samples_per_symbol - 1
    }

    pub fn symbol_period(&self) -> SimTime {
        SimTime::from_secs_f64(1.0 / SYMBOL_RATE_BAUD)
    }

    /// Equal spacing between levels, if any.
    pub fn uniform_spacing(&self) -> Option<f64> {
        let l = &self.level_amplitudes;
        let d = l[1] - l[0];
        let tol = 1e-9 * d.abs().max(1.0);
        ((l[2] - l[1] - d).abs() <= tol && (l[3] - l[2] - d).abs() <= tol).then_some(d)
    }
}

/// Predicted or measured error rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerReport {
    pub msb_ber: f64,
    pub lsb_ber: f64,
    pub symbol_error_rate: f64,
    /// Bits per stream; 0 for closed-form predictions.
    pub bits_tested: u64,
}

pub fn encode_symbol(msb: bool, lsb: bool, mapping: Mapping) -> u8 {
    let (m, l) = (msb as u8, lsb as u8);
    match mapping {
        Mapping::Natural => 2 * m + l,
        Mapping::Gray => 2 * m + (m ^ l),
    }
}

pub fn decode_symbol(level: u8, mapping: Mapping) -> (bool, bool) {
    let msb = level >= 2;
    let low = level & 1 == 1;
    match mapping {
        Mapping::Natural => (msb, low),
        Mapping::Gray => (msb, low ^ msb),
    }
}

pub fn encode(pair: &BitStreamPair, mapping: Mapping) -> Vec<u8> {
    pair.msb
        .iter()
        .zip(&pair.lsb)
        .map(|(&m, &l)| encode_symbol(m, l, mapping))
        .collect()
}

/// Length-checked variant of [`encode`] for raw slices.
pub fn encode_bits(msb: &[bool], lsb: &[bool], mapping: Mapping) -> Result<Vec<u8>, Pam4Error> {
    if msb.len() != lsb.len() {
        return Err(Pam4Error::LengthMismatch {
            msb: msb.len(),
            lsb: lsb.len(),
        });
    }
    Ok(msb.iter().zip(lsb).map(|(&m, &l)| encode_symbol(m, l, mapping)).collect())
}

/// Nearest-level slicing against three increasing thresholds.
pub fn slice(sample: f64, thresholds: &[f64; 3]) -> u8 {
    (sample > thresholds[0]) as u8 + (sample > thresholds[1]) as u8 + (sample > thresholds[2]) as u8
}

/// Thresholds the decoder will use for `samples`.
pub fn resolve_thresholds(samples: &[f64], model: &Pam4ChannelModel) -> [f64; 3] {
    match model.thresholds {
        ThresholdMode::Midpoint => model.midpoint_thresholds(),
        ThresholdMode::Adaptive => {
            let mut d: Vec<f64> = decision_samples(samples, model).collect();
            if d.len() < 4 {
                return model.midpoint_thresholds();
            }
            // Quartiles split the samples into one group per level; each
            // threshold sits halfway between the medians of adjacent groups.
            d.sort_by(f64::total_cmp);
            let q = |p: f64| d[((d.len() - 1) as f64 * p) as usize];
            let centres = [q(0.125), q(0.375), q(0.625), q(0.875)];
            [
                0.5 * (centres[0] + centres[1]),
                0.5 * (centres[1] + centres[2]),
                0.5 * (centres[2] + centres[3]),
            ]
        }
    }
}

/// Slices the decision sample of every symbol and demaps it.
pub fn decode(samples: &[f64], model: &Pam4ChannelModel) -> BitStreamPair {
    let thresholds = resolve_thresholds(samples, model);
    let (msb, lsb) = decision_samples(samples, model)
        .map(|s| decode_symbol(slice(s, &thresholds), model.mapping))
        .unzip();
    BitStreamPair { msb, lsb }
}

/// Two-point, linear-in-dB map from received optical power to noise sigma:
/// the sigma in dB drops by `slope_db_per_db` for every dB of extra power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityCurve {
    pub reference_power_dbm: f64,
    pub sigma_at_reference: f64,
    pub slope_db_per_db: f64,
}

impl SensitivityCurve {
    pub fn sigma_at(&self, power_dbm: f64) -> f64 {
        let db = 20.0 * libm::log10(self.sigma_at_reference)
            - self.slope_db_per_db * (power_dbm - self.reference_power_dbm);
        libm::pow(10.0, db / 20.0)
    }
}
