//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, RngAlgorithm, TestRng, TestRunner};
use splitsim::config::Config;
use splitsim::csvio::write_fig3;
use splitsim::parallel::default_workers;
use splitsim::sweep::{self, Fig3Variant, PhyCalibration, SweepSpec};
use splitsim_core::access::{propagation_delay, serialization_delay, ArrivalProcess, HopDiscipline};
use splitsim_core::pam4::{calibrate, Pam4ChannelModel};
use splitsim_core::scenario::{simulate, PhyConfig, ScenarioConfig, TrafficLength};
use splitsim_core::stack::Deadline;
use splitsim_core::SimTime;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- oracles

/// Complementary error function, Chebyshev fit with relative error below
/// 1.2e-7 everywhere.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// MSB and LSB error rates of natural-mapped PAM4 with unit level spacing
/// and midpoint slicing, by direct summation over the four levels.
fn pam4_oracle(sigma: f64) -> (f64, f64) {
    let thresholds = [0.5, 1.5, 2.5];
    let bits = |l: usize| ((l >> 1) & 1, l & 1);
    let (mut msb, mut lsb) = (0.0, 0.0);
    for sent in 0..4usize {
        let a = sent as f64;
        for got in 0..4usize {
            if got == sent {
                continue;
            }
            let lo = if got == 0 { f64::NEG_INFINITY } else { thresholds[got - 1] };
            let hi = if got == 3 { f64::INFINITY } else { thresholds[got] };
            // P(lo < a + n < hi)
            let p = q((lo - a) / sigma) - q((hi - a) / sigma);
            let (s, g) = (bits(sent), bits(got));
            if s.0 != g.0 {
                msb += p / 4.0;
            }
            if s.1 != g.1 {
                lsb += p / 4.0;
            }
        }
    }
    (msb, lsb)
}

fn binomial_sd(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One-sided two-proportion z statistic for `a/n < b/n`.
fn two_proportion_z(a: u64, b: u64, n: u64) -> f64 {
    let pooled = (a + b) as f64 / (2 * n) as f64;
    let sd = (pooled * (1.0 - pooled) * 2.0 / n as f64).sqrt();
    (b as f64 - a as f64) / n as f64 / sd
}

const Z_ONE_SIDED_95: f64 = 1.644_853_626_951_472_2;
/// 95th percentile of chi-square with 6 degrees of freedom.
const CHI2_95_DF6: f64 = 12.591_587_243_743_977;

// ---------------------------------------------------------------- helpers

fn nrz_base() -> ScenarioConfig {
    ScenarioConfig {
        phy: PhyConfig::NrzReference,
        ..ScenarioConfig::default()
    }
}

fn default_spec() -> SweepSpec {
    SweepSpec::from_config(&Config::default(), default_workers())
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// ---------------------------------------------------------------- criteria

fn ber_to_per() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for ber in [1e-7, 1e-6, 1e-5] {
        let t0 = Instant::now();
        let mut cfg = nrz_base();
        cfg.traffic.rate_bps = 150e6;
        cfg.traffic.length = TrafficLength::Packets(1_000_000);
        cfg.impairment.injected_ber = ber;
        cfg.root_seed = 101;
        let out = simulate(&cfg, 0.0).expect("run");
        let elapsed = t0.elapsed();
        let n = out.report.sent;
        let expected = 1.0 - (1.0 - ber).powi(9600);
        let frac = out.report.drops.corruption as f64 / n as f64;
        let ok = n == 1_000_000
            && (frac - expected).abs() <= 3.0 * binomial_sd(expected, n)
            && out.report.errored() == out.report.drops.corruption
            && elapsed < Duration::from_secs(30);
        pass &= ok;
        parts.push(format!(
            "ber {ber:.0e}: {:.4}% vs {:.4}% in {:.1}s",
            100.0 * frac,
            100.0 * expected,
            secs(elapsed)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn pam4_closed_form() -> (Outcome, Vec<(f64, u64, u64, u64)>) {
    let t0 = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut counts = Vec::new();
    for (i, sigma) in [0.10, 0.1344, 0.18].into_iter().enumerate() {
        let c = calibrate(&Pam4ChannelModel::awgn(sigma), 10_000_000, 200 + i as u64).expect("calibrate");
        let n = c.counts.symbols;
        let (msb, lsb) = pam4_oracle(sigma);
        let fm = c.counts.msb_errors as f64 / n as f64;
        let fl = c.counts.lsb_errors as f64 / n as f64;
        let ok_m = (fm - msb).abs() <= 3.0 * binomial_sd(msb, n);
        let ok_l = (fl - lsb).abs() <= 3.0 * binomial_sd(lsb, n);
        let ratio = lsb / msb;
        // At σ = 0.10 only a handful of errors occur in 10^7 symbols, so the
        // ratio there is taken from the rates the Monte Carlo was checked against.
        let in_range = |r: f64| (2.5..=3.5).contains(&r);
        let ok_r = sigma > 0.15 || (in_range(ratio) && (sigma < 0.12 || in_range(fl / fm)));
        pass &= ok_m && ok_l && ok_r;
        parts.push(format!(
            "σ={sigma}: msb {fm:.3e}/{msb:.3e} lsb {fl:.3e}/{lsb:.3e} ratio {ratio:.3} (measured {})",
            if c.counts.msb_errors > 0 {
                format!("{:.2}", fl / fm)
            } else {
                "n/a".into()
            }
        ));
        counts.push((sigma, n, c.counts.msb_errors, c.counts.lsb_errors));
    }
    let elapsed = t0.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    parts.push(format!("{:.1}s", secs(elapsed)));
    (outcome(pass, parts.join("; ")), counts)
}

fn protection_ordering(awgn: &[(f64, u64, u64, u64)], fitted: &PhyCalibration) -> Outcome {
    let mut cases: Vec<(String, u64, u64, u64)> = Vec::new();
    for &(sigma, n, m, l) in awgn {
        if sigma < 0.12 {
            continue;
        }
        cases.push((format!("awgn σ={sigma}"), n, m, l));
    }
    // Too few errors at σ = 0.10 in 10^7 symbols; rerun with 10^8.
    let c = calibrate(&Pam4ChannelModel::awgn(0.10), 100_000_000, 300).expect("calibrate");
    cases.push(("awgn σ=0.1".into(), c.counts.symbols, c.counts.msb_errors, c.counts.lsb_errors));
    for (i, sigma) in [0.13, 0.16, 0.2, 0.3].into_iter().enumerate() {
        let model = Pam4ChannelModel {
            noise_sigma: sigma,
            ..Pam4ChannelModel::default()
        };
        let c = calibrate(&model, 10_000_000, 310 + i as u64).expect("calibrate");
        cases.push((format!("filtered σ={sigma}"), c.counts.symbols, c.counts.msb_errors, c.counts.lsb_errors));
    }
    let k = &fitted.calibration.counts;
    cases.push((
        format!("fitted σ={:.5}", fitted.model.noise_sigma),
        k.symbols,
        k.msb_errors,
        k.lsb_errors,
    ));
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, n, m, l) in cases {
        let z = two_proportion_z(m, l, n);
        pass &= z > Z_ONE_SIDED_95;
        parts.push(format!("{name}: {m} < {l} (z={z:.1})"));
    }
    outcome(pass, parts.join("; "))
}

fn jitter_composition() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma_ms in [0.10, 0.66] {
        let mut cfg = nrz_base();
        cfg.impairment.jitter_std = SimTime::from_ms_f64(sigma_ms);
        cfg.root_seed = 401;
        let out = simulate(&cfg, 0.0).expect("run");
        let measured = out.report.delay_std.expect("delays").as_ms_f64();
        let target = (sigma_ms * sigma_ms + 0.120f64 * 0.120).sqrt();
        let rel = measured / target - 1.0;
        pass &= rel.abs() <= 0.03 && out.report.sent == 100_000;
        parts.push(format!(
            "σi={sigma_ms} ms: {:.1} µs vs {:.1} µs ({:+.2}%)",
            measured * 1e3,
            target * 1e3,
            100.0 * rel
        ));
    }
    outcome(pass, parts.join("; "))
}

struct Fig3Result {
    outcome: Outcome,
    csv: Vec<u8>,
    phy: PhyCalibration,
}

fn fig3_shape() -> Fig3Result {
    let mut cfg = Config::default();
    cfg.seed = Some(42);
    let base = cfg.scenario().expect("default config");
    let pam4 = cfg.pam4_phy().expect("default phy");
    let spec = default_spec();
    let t0 = Instant::now();
    let out = sweep::run_fig3(&base, &pam4, &spec).expect("fig3");
    let elapsed = t0.elapsed();
    let mut csv = Vec::new();
    write_fig3(&mut csv, &out.rows).expect("csv");

    let per = |v: Fig3Variant, r: f64| {
        out.rows
            .iter()
            .find(|row| row.variant == v && row.stats.bitrate_bps == r)
            .expect("row")
            .stats
            .clone()
    };
    let mut pass = elapsed < Duration::from_secs(300) && out.rows.len() == 28;
    pass &= out.rows.iter().all(|r| r.stats.sent >= 100_000);
    let max_per = out.rows.iter().map(|r| r.stats.per()).fold(0.0, f64::max);
    pass &= out.rows.iter().all(|r| r.stats.bitrate_bps > 150e6 || r.stats.per() < 0.05);

    let mut offsets = Vec::new();
    for &r in &spec.bitrates_bps {
        offsets.push(per(Fig3Variant::Pam4Msb, r).per() - per(Fig3Variant::NrzRef, r).per());
    }
    let (lo, hi) = offsets.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    pass &= offsets.iter().all(|o| (o * 100.0 - 0.8).abs() <= 0.15);

    // Homogeneity of the +BER offset across bit-rates: chi-square of the
    // per-rate offsets around their weighted mean, with the unpaired
    // standard error (conservative under common random numbers).
    let mut chi = Vec::new();
    for (with, without) in [
        (Fig3Variant::NrzRefBer, Fig3Variant::NrzRef),
        (Fig3Variant::Pam4MsbBer, Fig3Variant::Pam4Msb),
    ] {
        let mut d = Vec::new();
        for &r in &spec.bitrates_bps {
            let (a, b) = (per(with, r), per(without, r));
            let var = (a.per() * (1.0 - a.per())) / a.sent as f64 + (b.per() * (1.0 - b.per())) / b.sent as f64;
            d.push((a.per() - b.per(), var));
        }
        let w: f64 = d.iter().map(|(_, v)| 1.0 / v).sum();
        let mean = d.iter().map(|(x, v)| x / v).sum::<f64>() / w;
        let stat: f64 = d.iter().map(|(x, v)| (x - mean).powi(2) / v).sum();
        pass &= stat <= CHI2_95_DF6 && spec.bitrates_bps.len() == 7;
        chi.push(format!("{}: mean {:.3} pp, χ²={stat:.2}", with.label(), 100.0 * mean));
    }
    let detail = format!(
        "{:.1}s; max PER {:.3}%; PAM4−NRZ {:.3}..{:.3} pp; {}",
        secs(elapsed),
        100.0 * max_per,
        100.0 * lo,
        100.0 * hi,
        chi.join("; ")
    );
    Fig3Result {
        outcome: outcome(pass, detail),
        csv,
        phy: out.phy,
    }
}

fn fig4_shape(phy: &PhyCalibration) -> Outcome {
    let cfg = Config::default();
    let base = cfg.scenario().expect("default config");
    let mut spec = default_spec();
    spec.bitrates_bps.push(50e6);
    spec.bitrates_bps.sort_by(f64::total_cmp);
    let out = sweep::run_fig4_calibrated(&base, Some(phy.clone()), &phy.model, &spec).expect("fig4");
    let per = |j: usize, r: f64| {
        out.rows
            .iter()
            .find(|row| row.jitter_std == spec.jitter_std[j] && row.stats.bitrate_bps == r)
            .expect("row")
            .stats
            .per()
    };
    let mut pass = true;
    for &r in &spec.bitrates_bps {
        pass &= per(1, r) >= per(0, r);
    }
    let gap20 = per(1, 20e6) - per(0, 20e6);
    let gap50 = per(1, 50e6) - per(0, 50e6);
    pass &= gap50 > gap20 && gap50 >= 0.02;
    let curve: Vec<String> = spec
        .bitrates_bps
        .iter()
        .map(|&r| format!("{:.0}:{:.2}/{:.2}", r / 1e6, 100.0 * per(0, r), 100.0 * per(1, r)))
        .collect();
    outcome(
        pass,
        format!(
            "gap at 20 Mb/s {:.2} pp, at 50 Mb/s {:.2} pp (reference measurement about 4 and 6 pp, not asserted); PER% σ0.10/σ0.66 by Mb/s {}",
            100.0 * gap20,
            100.0 * gap50,
            curve.join(" ")
        ),
    )
}

fn constants() -> Outcome {
    let p = propagation_delay(20.0, 1.468).as_us_f64();
    let s = serialization_delay(9904, 10.3125e9).as_ns_f64();
    outcome(
        (p - 97.93).abs() <= 0.01 && (s - 960.4).abs() <= 0.1,
        format!("propagation {p:.4} µs; serialization {s:.3} ns"),
    )
}

fn determinism(in_process_csv: &[u8]) -> Outcome {
    let root = std::env::temp_dir().join(format!("splitsim-acceptance-{}", std::process::id()));
    let mut csvs = Vec::new();
    let mut ok = true;
    for run in ["a", "b"] {
        let dir: PathBuf = root.join(run);
        let _ = std::fs::remove_dir_all(&dir);
        let status = Command::new(env!("CARGO_BIN_EXE_splitsim"))
            .args(["sweep", "fig3", "--seed", "42", "--out"])
            .arg(&dir)
            .env_remove("SPLITSIM_SEED")
            .output()
            .expect("spawn splitsim");
        ok &= status.status.success();
        csvs.push(std::fs::read(dir.join("fig3.csv")).unwrap_or_default());
    }
    let _ = std::fs::remove_dir_all(&root);
    let cli_equal = ok && !csvs[0].is_empty() && csvs[0] == csvs[1];
    let matches_library = csvs[0] == in_process_csv;

    let mut cfg = ScenarioConfig::default();
    cfg.impairment.jitter_std = SimTime::from_us(660);
    cfg.impairment.injected_ber = 1e-5;
    cfg.traffic.length = TrafficLength::Packets(20_000);
    cfg.record_trace = true;
    let a = simulate(&cfg, 1e-6).expect("run");
    cfg.seeds.impair_corruption = Some(0xdead_beef);
    cfg.seeds.optical = Some(0xfeed_f00d);
    let b = simulate(&cfg, 1e-6).expect("run");
    let trace_equal = a.trace == b.trace && a.trace.as_ref().is_some_and(|t| t.len() == 20_000);
    let corruption_moved = a.report.drops.corruption != b.report.drops.corruption;
    outcome(
        cli_equal && matches_library && trace_equal && corruption_moved,
        format!(
            "CLI runs identical: {cli_equal} ({} bytes); matches in-process sweep: {matches_library}; \
             trace identical under new corruption seeds: {trace_equal}; corruption drops {} -> {}",
            csvs[0].len(),
            a.report.drops.corruption,
            b.report.drops.corruption
        ),
    )
}

/// Random scenarios paired with an optical BER.
fn scenario_strategy() -> impl Strategy<Value = (ScenarioConfig, f64)> {
    (
        (1.0f64..200.0, 64u32..1500, 50u64..3000, 0.0f64..1.5, 0.0f64..3.0),
        (prop_oneof![Just(0.0), 1e-7f64..1e-4], 0.0f64..=1.0, prop_oneof![Just(0.0), 1e-7f64..1e-4]),
        (0u32..8, 0.0f64..150.0, 0usize..3, prop_oneof![Just(2_000_000u64), 2_000u64..50_000]),
        (prop_oneof![Just(None), (0.0f64..0.9).prop_map(Some)], any::<bool>()),
        (0.0f64..2.0, 0usize..3, 0.0f64..2.0, any::<u64>()),
    )
        .prop_map(|(traffic, ber, link, overload, policy)| {
            let (rate, payload, packets, jitter_ms, mean_ms) = traffic;
            let (injected, kill, optical) = ber;
            let (hops, hop_jitter_us, discipline, cap) = link;
            let (target, poisson) = overload;
            let (window_ms, deadline, bound_ms, seed) = policy;
            let mut cfg = nrz_base();
            cfg.traffic.rate_bps = rate * 1e6;
            cfg.traffic.payload_bytes = payload;
            cfg.traffic.length = TrafficLength::Packets(packets);
            cfg.impairment.mean_latency = SimTime::from_ms_f64(mean_ms);
            cfg.impairment.jitter_std = SimTime::from_ms_f64(jitter_ms);
            cfg.impairment.injected_ber = injected;
            cfg.impairment.effective_kill_fraction = kill;
            cfg.link.hop_count = hops;
            cfg.link.hop_jitter_std = SimTime::from_us_f64(hop_jitter_us);
            cfg.link.hop_discipline = [HopDiscipline::Correlated, HopDiscipline::Fifo, HopDiscipline::Iid][discipline];
            cfg.link.queue_capacity_bytes = cap;
            cfg.overload.target_utilization = target;
            cfg.overload.arrivals = if poisson {
                ArrivalProcess::Poisson
            } else {
                ArrivalProcess::Deterministic
            };
            cfg.policy.window = SimTime::from_ms_f64(window_ms);
            let bound = SimTime::from_ms_f64(bound_ms);
            cfg.policy.deadline = [Deadline::Disabled, Deadline::Fixed(bound), Deadline::AfterNominal(bound)][deadline];
            cfg.root_seed = seed;
            cfg.seeds.optical = Some(seed ^ 1);
            (cfg, optical)
        })
        .prop_filter("valid config", |(cfg, _)| cfg.validate().is_ok())
}

fn conservation() -> Outcome {
    let mut runner = TestRunner::new_with_rng(
        PtConfig {
            cases: 100,
            failure_persistence: None,
            ..PtConfig::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let seen = std::cell::RefCell::new([0u64; 5]);
    let result = runner.run(&scenario_strategy(), |(cfg, optical)| {
        let out = simulate(&cfg, optical).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let r = &out.report;
        let TrafficLength::Packets(n) = cfg.traffic.length else {
            unreachable!()
        };
        prop_assert_eq!(r.sent, n);
        prop_assert_eq!(r.sent, r.delivered + r.drops.corruption + r.drops.deadline + r.drops.stale + r.drops.overflow);
        let mut s = seen.borrow_mut();
        s[0] += 1;
        for (i, c) in [r.drops.corruption, r.drops.deadline, r.drops.stale, r.drops.overflow].into_iter().enumerate() {
            s[i + 1] += u64::from(c > 0);
        }
        Ok(())
    });
    let s = seen.into_inner();
    let detail = format!(
        "{} configs; with corruption {}, deadline {}, stale {}, overflow drops {}",
        s[0], s[1], s[2], s[3], s[4]
    );
    match result {
        Ok(()) => outcome(s[0] >= 100, detail),
        Err(e) => outcome(false, format!("{detail}; {e}")),
    }
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "BER to PER", ber_to_per()));
    let (c2, awgn_counts) = pam4_closed_form();
    results.push((2, "PAM4 closed form vs Monte Carlo", c2));
    let fig3 = fig3_shape();
    results.push((3, "MSB protection ordering", protection_ordering(&awgn_counts, &fig3.phy)));
    results.push((4, "jitter composition", jitter_composition()));
    let c6 = fig4_shape(&fig3.phy);
    results.push((5, "BER sweep shape", fig3.outcome));
    results.push((6, "jitter sweep shape", c6));
    results.push((7, "physical constants", constants()));
    results.push((8, "determinism", determinism(&fig3.csv)));
    results.push((9, "conservation", conservation()));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("{} criterion {n} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s",
        results.len() - failed,
        results.len(),
        secs(t0.elapsed())
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
