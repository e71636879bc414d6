//! One experiment run: EPC source → CU → impairment → access switch → hops
//! and optical link → DU reordering → UE sink, on the event engine.

use alloc::vec::Vec;

use crate::access::{HopChain, LinkConfig, OpticalSegment, OverloadSource, OverloadSpec, Switch, SwitchStats};
use crate::engine::Engine;
use crate::error::SimError;
use crate::impair::{ber_from_per, Impairer, ImpairmentProfile};
use crate::metrics::{DelayStats, DropCounts, DropReason, MetricsReport};
use crate::pam4::{calibrate, solve_noise_sigma, Calibration, Pam4ChannelModel};
use crate::stack::{
    frame_v1, wire_bits_for, CbrSchedule, DuReceiver, FlowId, Frame, PdcpEntity, ReorderPolicy,
    RxOutcome, UeSink, VlanTag, DEFAULT_PAYLOAD_BYTES,
};
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrafficLength {
    Duration(SimTime),
    Packets(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrafficConfig {
    pub rate_bps: f64,
    pub payload_bytes: u32,
    pub length: TrafficLength,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            rate_bps: 50.0e6,
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
            length: TrafficLength::Packets(100_000),
        }
    }
}

impl TrafficConfig {
    pub fn schedule(&self) -> Result<CbrSchedule, SimError> {
        match self.length {
            TrafficLength::Duration(d) => CbrSchedule::new(FlowId(0), self.rate_bps, self.payload_bytes, d),
            TrafficLength::Packets(n) => {
                CbrSchedule::with_packet_count(FlowId(0), self.rate_bps, self.payload_bytes, n)
            }
        }
    }

    pub fn payload_bits(&self) -> u64 {
        8 * self.payload_bytes as u64
    }
}

/// PAM4 optical link settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Pam4Phy {
    pub model: Pam4ChannelModel,
    /// When set, `model.noise_sigma` is replaced by the sigma whose MSB BER
    /// costs this many percentage points of PER on the configured payload.
    pub fit_penalty_pp: Option<f64>,
    pub calibration_symbols: u64,
}

impl Default for Pam4Phy {
    fn default() -> Self {
        Pam4Phy {
            model: Pam4ChannelModel::default(),
            fit_penalty_pp: Some(0.8),
            calibration_symbols: 1 << 29,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhyConfig {
    /// Ideal optical back-to-back NRZ link: no PAM4 segment at all.
    NrzReference,
    Pam4(Pam4Phy),
}

impl Default for PhyConfig {
    fn default() -> Self {
        PhyConfig::Pam4(Pam4Phy::default())
    }
}

impl PhyConfig {
    /// The channel model with the fitted noise sigma applied, or `None` for
    /// the NRZ reference.
    pub fn resolved_model(&self, payload_bits: u64) -> Result<Option<Pam4ChannelModel>, SimError> {
        let PhyConfig::Pam4(p) = self else {
            return Ok(None);
        };
        p.model.validate()?;
        let mut model = p.model.clone();
        if let Some(pp) = p.fit_penalty_pp {
            if !(pp > 0.0 && pp < 100.0) {
                return Err(SimError::invalid("phy.fit_penalty_pp", "must lie in (0, 100)"));
            }
            model.noise_sigma = solve_noise_sigma(&model, ber_from_per(pp / 100.0, payload_bits))?;
        }
        Ok(Some(model))
    }

    /// Runs the waveform calibration; `None` for the NRZ reference.
    pub fn calibrate(&self, payload_bits: u64, seed: u64) -> Result<Option<Calibration>, SimError> {
        let Some(model) = self.resolved_model(payload_bits)? else {
            return Ok(None);
        };
        let PhyConfig::Pam4(p) = self else { unreachable!() };
        Ok(Some(calibrate(&model, p.calibration_symbols, seed)?))
    }
}

/// Per-component seed overrides; unset components use the root seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SeedOverrides {
    pub impair_delay: Option<u64>,
    pub impair_corruption: Option<u64>,
    pub access_hop: Option<u64>,
    pub access_overload: Option<u64>,
    pub optical: Option<u64>,
    pub phy_calibration: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub traffic: TrafficConfig,
    pub impairment: ImpairmentProfile,
    pub link: LinkConfig,
    pub overload: OverloadSpec,
    pub phy: PhyConfig,
    pub policy: ReorderPolicy,
    pub v1_vlan: VlanTag,
    pub root_seed: u64,
    pub seeds: SeedOverrides,
    /// Keep the per-frame CU→DU delay trace in the output.
    pub record_trace: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            traffic: TrafficConfig::default(),
            impairment: ImpairmentProfile::default(),
            link: LinkConfig::default(),
            overload: OverloadSpec::default(),
            phy: PhyConfig::default(),
            policy: ReorderPolicy::default(),
            v1_vlan: VlanTag::V1_DEFAULT,
            root_seed: 1,
            seeds: SeedOverrides::default(),
            record_trace: false,
        }
    }
}

impl ScenarioConfig {
    /// Share of the line rate used by V1 frames, overhead included.
    pub fn v1_utilization(&self) -> f64 {
        let t = &self.traffic;
        t.rate_bps * wire_bits_for(t.payload_bytes) as f64 / t.payload_bits() as f64 / self.link.line_rate_bps
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.traffic.schedule()?;
        self.impairment.validate()?;
        self.link.validate()?;
        self.overload.validate(self.v1_utilization(), self.v1_vlan)?;
        if let PhyConfig::Pam4(p) = &self.phy {
            p.model.validate()?;
        }
        Ok(())
    }

    /// Delay from EPC emission to DU ingress with no jitter and no queuing.
    pub fn nominal_delay(&self) -> SimTime {
        self.impairment.mean_latency + self.link.nominal_delay(wire_bits_for(self.traffic.payload_bytes))
    }

    fn seed(&self, o: Option<u64>) -> u64 {
        o.unwrap_or(self.root_seed)
    }
}

/// One frame reaching the DU.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DelayRecord {
    pub user_seq: u64,
    pub du_ingress: SimTime,
    pub cu_du_delay: SimTime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    pub report: MetricsReport,
    pub switch: SwitchStats,
    pub deadline: Option<SimTime>,
    pub nominal_delay: SimTime,
    /// In DU arrival order; only when `record_trace` is set.
    pub trace: Option<Vec<DelayRecord>>,
}

#[derive(Clone, Copy, Debug)]
enum Action {
    Generate(u64),
    SwitchArrival(Frame),
    DuArrival(Frame),
    ReorderTimeout(u64),
}

/// Calibrates the PHY (if any) and runs the scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput, SimError> {
    cfg.validate()?;
    let seed = cfg.seed(cfg.seeds.phy_calibration);
    let ber = match cfg.phy.calibrate(cfg.traffic.payload_bits(), seed)? {
        Some(c) => c.msb.rate,
        None => 0.0,
    };
    simulate(cfg, ber)
}

/// Runs the scenario with the optical segment applying `optical_ber` to V1
/// frames. `cfg.phy` is not consulted, so one calibration can serve many runs.
pub fn simulate(cfg: &ScenarioConfig, optical_ber: f64) -> Result<ScenarioOutput, SimError> {
    cfg.validate()?;
    let schedule = cfg.traffic.schedule()?;
    let s = &cfg.seeds;
    let mut impairer = Impairer::with_seeds(
        cfg.impairment,
        cfg.seed(s.impair_delay),
        cfg.seed(s.impair_corruption),
    )?;
    let overload = OverloadSource::new(
        &cfg.overload,
        cfg.overload.utilization(cfg.v1_utilization()),
        cfg.link.line_rate_bps,
        cfg.seed(s.access_overload),
    );
    let mut switch = Switch::new(cfg.link.line_rate_bps, cfg.link.queue_capacity_bytes, overload);
    let mut hops = HopChain::new(&cfg.link, cfg.seed(s.access_hop));
    let mut optical = OpticalSegment::new(optical_ber, cfg.seed(s.optical))?;
    let propagation = cfg.link.propagation();
    let nominal = cfg.nominal_delay();
    let deadline = cfg.policy.resolve_deadline(nominal);
    let mut du = DuReceiver::new(&cfg.policy, deadline);
    let mut sink = UeSink::new();
    let mut pdcp = PdcpEntity::new();
    let mut drops = DropCounts::default();
    let mut delays = DelayStats::default();
    let mut trace = cfg.record_trace.then(Vec::new);

    let mut engine = Engine::new();
    if schedule.packet_count() > 0 {
        engine.schedule(SimTime::ZERO, Action::Generate(0))?;
    }
    let stats = engine.run_to_completion(|eng, _, action| {
        let now = eng.now();
        match action {
            Action::Generate(k) => {
                let pdu = pdcp.encapsulate(schedule.packet(k))?;
                let mut frame = frame_v1(pdu, cfg.v1_vlan);
                frame.sent_at = Some(now);
                frame.cu_egress_at = Some(now);
                let out = impairer.apply(&frame, now);
                frame.corrupted = out.corrupted;
                eng.schedule(out.exit_time, Action::SwitchArrival(frame))?;
                if k + 1 < schedule.packet_count() {
                    eng.schedule(schedule.departure(k + 1), Action::Generate(k + 1))?;
                }
            }
            Action::SwitchArrival(mut frame) => match switch.transit(frame.wire_bits, now) {
                Err(_) => drops.record(DropReason::Overflow),
                Ok(egress) => {
                    let exit = hops.traverse(egress);
                    if optical.corrupts(frame.payload_bits()) {
                        frame.corrupted = true;
                    }
                    let at = exit + propagation;
                    frame.du_ingress_at = Some(at);
                    eng.schedule(at, Action::DuArrival(frame))?;
                }
            },
            Action::DuArrival(frame) => {
                let d = frame.cu_du_delay().expect("timestamps set on the way");
                delays.push(d);
                if let Some(t) = trace.as_mut() {
                    t.push(DelayRecord {
                        user_seq: frame.pdu().map_or(0, |p| p.inner.user_seq),
                        du_ingress: now,
                        cu_du_delay: d,
                    });
                }
                match du.receive(frame, &mut sink)? {
                    RxOutcome::Delivered => {}
                    RxOutcome::Buffered { key, release_at } => {
                        eng.schedule(release_at, Action::ReorderTimeout(key))?;
                    }
                    RxOutcome::Dropped(reason) => drops.record(reason),
                }
            }
            Action::ReorderTimeout(key) => {
                du.expire(key, &mut sink)?;
            }
        }
        Ok(())
    })?;
    if du.buffered() != 0 {
        return Err(SimError::invalid("scenario", "frames left in the DU buffer"));
    }

    let sent = schedule.packet_count();
    let delivered = sink.delivered();
    if sent != delivered + drops.total() {
        return Err(SimError::invalid("scenario", "packet conservation violated"));
    }
    let span = schedule.span();
    let sw = switch.stats();
    let report = MetricsReport {
        root_seed: cfg.root_seed,
        sent,
        delivered,
        drops,
        per: if sent == 0 { 0.0 } else { (sent - delivered) as f64 / sent as f64 },
        delay_mean: delays.mean(),
        delay_std: delays.std(),
        delay_samples: delays.count(),
        goodput_bps: if span == SimTime::ZERO {
            0.0
        } else {
            sink.delivered_payload_bits() as f64 / span.as_secs_f64()
        },
        optical_ber,
        duration: span,
        events_fired: stats.events_fired,
        overload_frames: sw.overload_frames,
        overload_drops: sw.overload_overflow,
    };
    Ok(ScenarioOutput {
        report,
        switch: sw,
        deadline,
        nominal_delay: nominal,
        trace,
    })
}
