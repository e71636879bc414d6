//! Bit-rate sweeps: PER under BER degradation and under induced jitter.
//!
//! Every (bit-rate, replication) point gets a seed derived from the root
//! seed. Variants at the same point share it, so differences between
//! variants are not blurred by independent sampling noise.

use splitsim_core::math::{wilson_interval, Z_95};
use splitsim_core::pam4::{
    eye_export, finish_calibration, run_calibration_chunk, transmit, BerCounts, Calibration, EyeHistogram,
    Pam4ChannelModel,
};
use splitsim_core::rng::{derive_seed, streams};
use splitsim_core::scenario::{simulate, Pam4Phy, PhyConfig, ScenarioConfig, TrafficLength};
use splitsim_core::{RngStream, SimError, SimTime};

use crate::config::Config;
use crate::parallel::parallel_map;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fig3Variant {
    NrzRef,
    NrzRefBer,
    Pam4Msb,
    Pam4MsbBer,
}

impl Fig3Variant {
    pub const ALL: [Fig3Variant; 4] = [
        Fig3Variant::NrzRef,
        Fig3Variant::NrzRefBer,
        Fig3Variant::Pam4Msb,
        Fig3Variant::Pam4MsbBer,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Fig3Variant::NrzRef => "nrz-ref",
            Fig3Variant::NrzRefBer => "nrz-ref+ber1e-6",
            Fig3Variant::Pam4Msb => "pam4-msb",
            Fig3Variant::Pam4MsbBer => "pam4-msb+ber1e-6",
        }
    }

    pub fn is_pam4(self) -> bool {
        matches!(self, Fig3Variant::Pam4Msb | Fig3Variant::Pam4MsbBer)
    }

    pub fn injects_ber(self) -> bool {
        matches!(self, Fig3Variant::NrzRefBer | Fig3Variant::Pam4MsbBer)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub bitrates_bps: Vec<f64>,
    pub packets: u64,
    pub replications: u32,
    pub jitter_std: Vec<SimTime>,
    /// BER of the "+ber" variants.
    pub injected_ber: f64,
    pub eye_symbols: usize,
    pub workers: usize,
}

impl SweepSpec {
    pub fn from_config(cfg: &Config, workers: usize) -> Self {
        let s = &cfg.sweep;
        SweepSpec {
            bitrates_bps: s.bitrates_mbps.iter().map(|r| r * 1e6).collect(),
            packets: s.packets,
            replications: s.replications,
            jitter_std: s.jitter_ms.iter().map(|&j| SimTime::from_ms_f64(j)).collect(),
            injected_ber: s.injected_ber,
            eye_symbols: s.eye_symbols,
            workers,
        }
    }

    fn point_seed(&self, root: u64, rate_index: usize, replication: u32) -> u64 {
        derive_seed(root, ((rate_index as u64) << 32) | replication as u64)
    }
}

/// Pooled result of all replications of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointStats {
    pub bitrate_bps: f64,
    pub sent: u64,
    pub errored: u64,
}

impl PointStats {
    pub fn per(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.errored as f64 / self.sent as f64
        }
    }

    /// Wilson 95 % interval on the pooled counts.
    pub fn ci(&self) -> (f64, f64) {
        wilson_interval(self.errored, self.sent, Z_95)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Row {
    pub variant: Fig3Variant,
    pub stats: PointStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig4Row {
    pub jitter_std: SimTime,
    pub stats: PointStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhyCalibration {
    pub model: Pam4ChannelModel,
    pub calibration: Calibration,
}

/// Waveform calibration with the chunks spread over `workers` threads.
pub fn calibrate_phy(phy: &Pam4Phy, payload_bits: u64, seed: u64, workers: usize) -> Result<PhyCalibration, SimError> {
    let model = PhyConfig::Pam4(phy.clone())
        .resolved_model(payload_bits)?
        .expect("PAM4 config resolves to a model");
    let calibration = if Calibration::needs_monte_carlo(&model)? {
        let total = phy.calibration_symbols;
        let chunks: Vec<u64> = (0..splitsim_core::pam4::calibration_chunks(total)).collect();
        let counts = parallel_map(&chunks, workers, |&i| run_calibration_chunk(&model, seed, i, total))
            .into_iter()
            .fold(BerCounts::default(), |a, b| a + b);
        finish_calibration(&model, counts)?
    } else {
        splitsim_core::pam4::exact_calibration()
    };
    Ok(PhyCalibration { model, calibration })
}

/// Seed for the PHY calibration: the explicit override or the root seed.
pub fn calibration_seed(base: &ScenarioConfig) -> u64 {
    base.seeds.phy_calibration.unwrap_or(base.root_seed)
}

struct Job {
    cfg: ScenarioConfig,
    optical_ber: f64,
    group: usize,
}

fn run_jobs(jobs: &[Job], groups: usize, bitrates: &[f64], workers: usize) -> Result<Vec<PointStats>, SimError> {
    let results = parallel_map(jobs, workers, |j| simulate(&j.cfg, j.optical_ber).map(|o| o.report));
    let mut pooled: Vec<Option<PointStats>> = vec![None; groups];
    for (job, r) in jobs.iter().zip(results) {
        let r = r?;
        let p = pooled[job.group].get_or_insert(PointStats {
            bitrate_bps: bitrates[job.group % bitrates.len()],
            sent: 0,
            errored: 0,
        });
        p.sent += r.sent;
        p.errored += r.errored();
    }
    Ok(pooled.into_iter().map(|p| p.expect("every group has a job")).collect())
}

fn point_config(base: &ScenarioConfig, spec: &SweepSpec, rate_index: usize, rep: u32) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.traffic.rate_bps = spec.bitrates_bps[rate_index];
    cfg.traffic.length = TrafficLength::Packets(spec.packets);
    cfg.root_seed = spec.point_seed(base.root_seed, rate_index, rep);
    // Calibration happens once per sweep, outside the point runs.
    cfg.phy = PhyConfig::NrzReference;
    cfg.record_trace = false;
    cfg
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Output {
    /// Bit-rate major, variants in [`Fig3Variant::ALL`] order.
    pub rows: Vec<Fig3Row>,
    pub phy: PhyCalibration,
}

/// PER versus bit-rate for the NRZ reference and the PAM4 MSB link, each
/// with and without the extra injected BER.
pub fn run_fig3(base: &ScenarioConfig, pam4: &Pam4Phy, spec: &SweepSpec) -> Result<Fig3Output, SimError> {
    let phy = calibrate_phy(pam4, base.traffic.payload_bits(), calibration_seed(base), spec.workers)?;
    let msb_ber = phy.calibration.msb.rate;
    let n_rates = spec.bitrates_bps.len();
    let mut jobs = Vec::new();
    for (v, variant) in Fig3Variant::ALL.into_iter().enumerate() {
        for ri in 0..n_rates {
            for rep in 0..spec.replications {
                let mut cfg = point_config(base, spec, ri, rep);
                cfg.impairment.injected_ber = if variant.injects_ber() { spec.injected_ber } else { 0.0 };
                jobs.push(Job {
                    cfg,
                    optical_ber: if variant.is_pam4() { msb_ber } else { 0.0 },
                    group: v * n_rates + ri,
                });
            }
        }
    }
    let stats = run_jobs(&jobs, 4 * n_rates, &spec.bitrates_bps, spec.workers)?;
    let mut rows = Vec::with_capacity(stats.len());
    for ri in 0..n_rates {
        for (v, variant) in Fig3Variant::ALL.into_iter().enumerate() {
            rows.push(Fig3Row {
                variant,
                stats: stats[v * n_rates + ri].clone(),
            });
        }
    }
    Ok(Fig3Output { rows, phy })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig4Output {
    /// Bit-rate major, jitter values in `SweepSpec` order.
    pub rows: Vec<Fig4Row>,
    /// `None` when the configured PHY is the NRZ reference.
    pub phy: Option<PhyCalibration>,
    pub eye: EyeHistogram,
}

/// PER versus bit-rate for each induced jitter, over the configured PHY.
pub fn run_fig4(base: &ScenarioConfig, pam4: &Pam4Phy, spec: &SweepSpec) -> Result<Fig4Output, SimError> {
    let bits = base.traffic.payload_bits();
    let phy = match &base.phy {
        PhyConfig::Pam4(p) => Some(calibrate_phy(p, bits, calibration_seed(base), spec.workers)?),
        PhyConfig::NrzReference => None,
    };
    let eye_model = match &phy {
        Some(p) => p.model.clone(),
        None => PhyConfig::Pam4(pam4.clone()).resolved_model(bits)?.expect("PAM4 model"),
    };
    run_fig4_calibrated(base, phy, &eye_model, spec)
}

/// [`run_fig4`] with an existing calibration; `None` runs the NRZ reference.
/// `base.phy` is ignored.
pub fn run_fig4_calibrated(
    base: &ScenarioConfig,
    phy: Option<PhyCalibration>,
    eye_model: &Pam4ChannelModel,
    spec: &SweepSpec,
) -> Result<Fig4Output, SimError> {
    let optical_ber = phy.as_ref().map_or(0.0, |p| p.calibration.msb.rate);
    let n_rates = spec.bitrates_bps.len();
    let mut jobs = Vec::new();
    for (ji, &sigma) in spec.jitter_std.iter().enumerate() {
        for ri in 0..n_rates {
            for rep in 0..spec.replications {
                let mut cfg = point_config(base, spec, ri, rep);
                cfg.impairment.jitter_std = sigma;
                jobs.push(Job {
                    cfg,
                    optical_ber,
                    group: ji * n_rates + ri,
                });
            }
        }
    }
    let stats = run_jobs(&jobs, spec.jitter_std.len() * n_rates, &spec.bitrates_bps, spec.workers)?;
    let mut rows = Vec::with_capacity(stats.len());
    for ri in 0..n_rates {
        for (ji, &jitter_std) in spec.jitter_std.iter().enumerate() {
            rows.push(Fig4Row {
                jitter_std,
                stats: stats[ji * n_rates + ri].clone(),
            });
        }
    }
    let eye = eye_diagram(eye_model, spec.eye_symbols, calibration_seed(base))?;
    Ok(Fig4Output { rows, phy, eye })
}

/// Eye histogram of `symbols` random symbols through `model`.
pub fn eye_diagram(model: &Pam4ChannelModel, symbols: usize, seed: u64) -> Result<EyeHistogram, SimError> {
    const EYE_SUBSTREAM: u64 = u64::MAX - 1;
    let mut bits = RngStream::new(seed, streams::PAM4_BITS).substream(EYE_SUBSTREAM);
    let mut noise = RngStream::new(seed, streams::PAM4_NOISE).substream(EYE_SUBSTREAM);
    let levels: Vec<u8> = (0..symbols).map(|_| (bits.next_u64() & 3) as u8).collect();
    Ok(eye_export(&transmit(&levels, model, &mut noise), model)?)
}
