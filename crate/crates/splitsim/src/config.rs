//! TOML scenario files.
//!
//! Every section and key is optional; missing values take the model
//! defaults. Unknown keys are collected and reported together.

use std::path::Path;

use serde::{Deserialize, Serialize};
use splitsim_core::access::{ArrivalProcess, HopDiscipline, LinkConfig, OverloadSpec};
use splitsim_core::impair::ImpairmentProfile;
use splitsim_core::pam4::{Mapping, Pam4ChannelModel, ThresholdMode};
use splitsim_core::scenario::{Pam4Phy, PhyConfig, ScenarioConfig, SeedOverrides, TrafficConfig, TrafficLength};
use splitsim_core::stack::{Deadline, ReorderPolicy, VlanTag};
use splitsim_core::SimTime;

#[derive(Debug)]
pub enum ConfigError {
    Io { path: String, source: std::io::Error },
    Parse(String),
    UnknownKeys(Vec<String>),
    Invalid(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {path}: {source}"),
            ConfigError::Parse(m) => write!(f, "malformed config: {m}"),
            ConfigError::UnknownKeys(keys) => write!(f, "unknown config keys: {}", keys.join(", ")),
            ConfigError::Invalid(errs) => write!(f, "invalid config: {}", errs.join("; ")),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct Config {
    pub seed: Option<u64>,
    pub traffic: TrafficSection,
    pub impairment: ImpairmentSection,
    pub link: LinkSection,
    pub overload: OverloadSection,
    pub phy: PhySection,
    pub policy: PolicySection,
    pub seeds: SeedSection,
    pub sweep: SweepSection,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct TrafficSection {
    pub rate_mbps: f64,
    pub payload_bytes: u32,
    /// Packet count; takes precedence over `duration_s`.
    pub packets: Option<u64>,
    pub duration_s: Option<f64>,
    pub vlan: u16,
}

impl Default for TrafficSection {
    fn default() -> Self {
        let t = TrafficConfig::default();
        TrafficSection {
            rate_mbps: t.rate_bps / 1e6,
            payload_bytes: t.payload_bytes,
            packets: None,
            duration_s: None,
            vlan: VlanTag::V1_DEFAULT.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct ImpairmentSection {
    pub mean_latency_ms: f64,
    pub jitter_std_ms: f64,
    pub injected_ber: f64,
    pub effective_kill_fraction: f64,
}

impl Default for ImpairmentSection {
    fn default() -> Self {
        let p = ImpairmentProfile::default();
        ImpairmentSection {
            mean_latency_ms: p.mean_latency.as_ms_f64(),
            jitter_std_ms: p.jitter_std.as_ms_f64(),
            injected_ber: p.injected_ber,
            effective_kill_fraction: p.effective_kill_fraction,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum HopDisciplineName {
    Correlated,
    Fifo,
    Iid,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct LinkSection {
    pub fiber_km: f64,
    pub group_index: f64,
    pub line_rate_bps: f64,
    pub hop_latency_us: f64,
    pub hop_jitter_std_us: f64,
    pub hop_count: u32,
    pub hop_discipline: HopDisciplineName,
    pub hop_correlation_ms: f64,
    pub queue_capacity_bytes: u64,
}

impl Default for LinkSection {
    fn default() -> Self {
        let l = LinkConfig::default();
        LinkSection {
            fiber_km: l.fiber_km,
            group_index: l.group_index,
            line_rate_bps: l.line_rate_bps,
            hop_latency_us: l.hop_latency.as_us_f64(),
            hop_jitter_std_us: l.hop_jitter_std.as_us_f64(),
            hop_count: l.hop_count,
            hop_discipline: HopDisciplineName::Correlated,
            hop_correlation_ms: l.hop_correlation_time.as_ms_f64(),
            queue_capacity_bytes: l.queue_capacity_bytes,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalName {
    Poisson,
    Deterministic,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct OverloadSection {
    /// Overload share of the line rate; absent means fill up to `fill_to`.
    pub target_utilization: Option<f64>,
    pub fill_to: f64,
    pub frame_bytes: u32,
    pub vlan: u16,
    pub arrivals: ArrivalName,
}

impl Default for OverloadSection {
    fn default() -> Self {
        let o = OverloadSpec::default();
        OverloadSection {
            target_utilization: o.target_utilization,
            fill_to: o.fill_to,
            frame_bytes: o.frame_bytes,
            vlan: o.vlan.0,
            arrivals: ArrivalName::Poisson,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PhyMode {
    Pam4,
    NrzReference,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MappingName {
    Natural,
    Gray,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdName {
    Midpoint,
    Adaptive,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct PhySection {
    pub mode: PhyMode,
    pub level_amplitudes: [f64; 4],
    /// Explicit noise sigma. Mutually exclusive with `fit_penalty_pp`; when
    /// neither is given the default penalty fit applies.
    pub noise_sigma: Option<f64>,
    pub fit_penalty_pp: Option<f64>,
    /// `inf` disables the filter.
    pub filter_cutoff_ratio: f64,
    pub filter_order: u32,
    pub samples_per_symbol: usize,
    pub mapping: MappingName,
    pub thresholds: ThresholdName,
    pub calibration_symbols: u64,
}

impl Default for PhySection {
    fn default() -> Self {
        let m = Pam4ChannelModel::default();
        let p = Pam4Phy::default();
        PhySection {
            mode: PhyMode::Pam4,
            level_amplitudes: m.level_amplitudes,
            noise_sigma: None,
            fit_penalty_pp: None,
            filter_cutoff_ratio: m.filter_cutoff_ratio,
            filter_order: m.filter_order,
            samples_per_symbol: m.samples_per_symbol,
            mapping: MappingName::Natural,
            thresholds: ThresholdName::Midpoint,
            calibration_symbols: p.calibration_symbols,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DeadlineMode {
    AfterNominal,
    Fixed,
    Disabled,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct PolicySection {
    pub window_ms: f64,
    pub deadline: DeadlineMode,
    /// Slack over the nominal delay, or the absolute bound when `fixed`.
    pub deadline_ms: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            window_ms: 1.0,
            deadline: DeadlineMode::AfterNominal,
            deadline_ms: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(default)]
pub struct SeedSection {
    pub impair_delay: Option<u64>,
    pub impair_corruption: Option<u64>,
    pub access_hop: Option<u64>,
    pub access_overload: Option<u64>,
    pub optical: Option<u64>,
    pub phy_calibration: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default)]
pub struct SweepSection {
    pub bitrates_mbps: Vec<f64>,
    pub packets: u64,
    pub replications: u32,
    pub jitter_ms: Vec<f64>,
    pub injected_ber: f64,
    pub eye_symbols: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            bitrates_mbps: (0..7).map(|i| 20.0 + i as f64 * 130.0 / 6.0).collect(),
            packets: 100_000,
            replications: 1,
            jitter_ms: vec![0.10, 0.66],
            injected_ber: 1e-6,
            eye_symbols: 20_000,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let mut unknown = Vec::new();
        let cfg: Config = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
            .map_err(|e| ConfigError::Parse(e.to_string()))?;
        if !unknown.is_empty() {
            return Err(ConfigError::UnknownKeys(unknown));
        }
        cfg.scenario()?;
        cfg.validate_sweep()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn validate_sweep(&self) -> Result<(), ConfigError> {
        let s = &self.sweep;
        let mut errs = Vec::new();
        if s.bitrates_mbps.is_empty() || s.bitrates_mbps.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            errs.push("sweep.bitrates_mbps must be a non-empty list of positive rates".to_string());
        }
        if s.jitter_ms.is_empty() || s.jitter_ms.iter().any(|j| !(*j >= 0.0) || !j.is_finite()) {
            errs.push("sweep.jitter_ms must be a non-empty list of non-negative values".to_string());
        }
        if s.packets == 0 {
            errs.push("sweep.packets must be at least 1".to_string());
        }
        if s.replications == 0 {
            errs.push("sweep.replications must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&s.injected_ber) {
            errs.push("sweep.injected_ber must lie in [0, 1]".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// Builds and validates the core scenario.
    pub fn scenario(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut errs = Vec::new();
        let mut time = |name: &str, value: f64, scale: f64| -> SimTime {
            match SimTime::try_from_ps_f64(value * scale) {
                Some(t) => t,
                None => {
                    errs.push(format!("{name} must be finite and non-negative"));
                    SimTime::ZERO
                }
            }
        };
        const MS: f64 = 1e9;
        const US: f64 = 1e6;
        let t = &self.traffic;
        let length = match (t.packets, t.duration_s) {
            (Some(n), _) => TrafficLength::Packets(n),
            (None, Some(d)) => TrafficLength::Duration(time("traffic.duration_s", d, 1e12)),
            (None, None) => TrafficConfig::default().length,
        };
        let i = &self.impairment;
        let impairment = ImpairmentProfile {
            mean_latency: time("impairment.mean_latency_ms", i.mean_latency_ms, MS),
            jitter_std: time("impairment.jitter_std_ms", i.jitter_std_ms, MS),
            injected_ber: i.injected_ber,
            effective_kill_fraction: i.effective_kill_fraction,
        };
        let l = &self.link;
        let link = LinkConfig {
            fiber_km: l.fiber_km,
            group_index: l.group_index,
            line_rate_bps: l.line_rate_bps,
            hop_latency: time("link.hop_latency_us", l.hop_latency_us, US),
            hop_jitter_std: time("link.hop_jitter_std_us", l.hop_jitter_std_us, US),
            hop_count: l.hop_count,
            hop_discipline: match l.hop_discipline {
                HopDisciplineName::Correlated => HopDiscipline::Correlated,
                HopDisciplineName::Fifo => HopDiscipline::Fifo,
                HopDisciplineName::Iid => HopDiscipline::Iid,
            },
            hop_correlation_time: time("link.hop_correlation_ms", l.hop_correlation_ms, MS),
            queue_capacity_bytes: l.queue_capacity_bytes,
        };
        let o = &self.overload;
        let overload = OverloadSpec {
            target_utilization: o.target_utilization,
            fill_to: o.fill_to,
            frame_bytes: o.frame_bytes,
            vlan: VlanTag(o.vlan),
            arrivals: match o.arrivals {
                ArrivalName::Poisson => ArrivalProcess::Poisson,
                ArrivalName::Deterministic => ArrivalProcess::Deterministic,
            },
        };
        let p = &self.policy;
        let window = time("policy.window_ms", p.window_ms, MS);
        let bound = time("policy.deadline_ms", p.deadline_ms, MS);
        let policy = ReorderPolicy {
            window,
            deadline: match p.deadline {
                DeadlineMode::AfterNominal => Deadline::AfterNominal(bound),
                DeadlineMode::Fixed => Deadline::Fixed(bound),
                DeadlineMode::Disabled => Deadline::Disabled,
            },
        };
        let phy = match self.phy_config() {
            Ok(phy) => phy,
            Err(e) => {
                errs.push(e);
                PhyConfig::NrzReference
            }
        };
        let s = &self.seeds;
        let cfg = ScenarioConfig {
            traffic: TrafficConfig {
                rate_bps: t.rate_mbps * 1e6,
                payload_bytes: t.payload_bytes,
                length,
            },
            impairment,
            link,
            overload,
            phy,
            policy,
            v1_vlan: VlanTag(t.vlan),
            root_seed: self.seed.unwrap_or(ScenarioConfig::default().root_seed),
            seeds: SeedOverrides {
                impair_delay: s.impair_delay,
                impair_corruption: s.impair_corruption,
                access_hop: s.access_hop,
                access_overload: s.access_overload,
                optical: s.optical,
                phy_calibration: s.phy_calibration,
            },
            record_trace: false,
        };
        if errs.is_empty() {
            if let Err(e) = cfg.validate() {
                errs.push(e.to_string());
            }
        }
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// The PAM4 settings even when `mode` is the NRZ reference, for sweeps
    /// that compare both.
    pub fn pam4_phy(&self) -> Result<Pam4Phy, String> {
        let p = &self.phy;
        let model = Pam4ChannelModel {
            level_amplitudes: p.level_amplitudes,
            noise_sigma: p.noise_sigma.unwrap_or(0.0),
            filter_cutoff_ratio: p.filter_cutoff_ratio,
            filter_order: p.filter_order,
            samples_per_symbol: p.samples_per_symbol,
            mapping: match p.mapping {
                MappingName::Natural => Mapping::Natural,
                MappingName::Gray => Mapping::Gray,
            },
            thresholds: match p.thresholds {
                ThresholdName::Midpoint => ThresholdMode::Midpoint,
                ThresholdName::Adaptive => ThresholdMode::Adaptive,
            },
        };
        model.validate().map_err(|e| format!("phy: {e}"))?;
        let fit_penalty_pp = match (p.noise_sigma, p.fit_penalty_pp) {
            (Some(_), Some(_)) => {
                return Err("phy.noise_sigma and phy.fit_penalty_pp are mutually exclusive".into())
            }
            (Some(_), None) => None,
            (None, Some(pp)) => Some(pp),
            (None, None) => Pam4Phy::default().fit_penalty_pp,
        };
        Ok(Pam4Phy {
            model,
            fit_penalty_pp,
            calibration_symbols: p.calibration_symbols,
        })
    }

    fn phy_config(&self) -> Result<PhyConfig, String> {
        let pam4 = self.pam4_phy()?;
        Ok(match self.phy.mode {
            PhyMode::Pam4 => PhyConfig::Pam4(pam4),
            PhyMode::NrzReference => PhyConfig::NrzReference,
        })
    }
}
