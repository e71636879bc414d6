//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use splitsim_core::scenario::{simulate, PhyConfig, ScenarioConfig, ScenarioOutput, TrafficLength};
use splitsim_core::SimError;

use crate::config::{Config, ConfigError};
use crate::csvio::{self, read_table};
use crate::parallel::default_workers;
use crate::plot::{self, PlotKind};
use crate::sweep::{self, calibration_seed, PhyCalibration, SweepSpec};

#[derive(Parser, Debug)]
#[command(name = "splitsim", version, about = "Discrete-event simulator of a split RAN fronthaul chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Root seed; overrides `seed` in the config.
    #[arg(long, env = "SPLITSIM_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    pub parallel: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one scenario and write report.json.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Packets to send; overrides the traffic length.
        #[arg(long)]
        packets: Option<u64>,
        /// Also write trace.csv with the per-frame CU to DU delay.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep PER against bit-rate and write the CSV and SVG.
    Sweep {
        figure: Figure,
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Replications per point; overrides `sweep.replications`.
        #[arg(long)]
        replications: Option<u32>,
        /// Packets per point; overrides `sweep.packets`.
        #[arg(long)]
        packets: Option<u64>,
    },
    /// Calibrate the PAM4 link and write ber.csv.
    CalibratePhy {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Render a CSV written by `sweep` as SVG.
    Plot {
        csv: PathBuf,
        /// Output file; defaults to the CSV path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Expected plot kind; detected from the header when omitted.
        #[arg(long)]
        kind: Option<KindArg>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig3,
    Fig4,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindArg {
    Fig3,
    Fig4,
    Eye,
}

/// Exit status 1 for bad inputs and IO, 2 for failures inside a run.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        if e.is_config_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Parses `args` and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, common, packets, trace } => run(&config, &common, packets, trace),
        Command::Sweep { figure, config, common, replications, packets } => {
            let mut cfg = load(config.as_deref(), &common)?;
            if let Some(r) = replications {
                cfg.sweep.replications = r;
            }
            if let Some(p) = packets {
                cfg.sweep.packets = p;
            }
            revalidate(&cfg)?;
            match figure {
                Figure::Fig3 => sweep_fig3(&cfg, &common),
                Figure::Fig4 => sweep_fig4(&cfg, &common),
            }
        }
        Command::CalibratePhy { config, common } => calibrate(&load(config.as_deref(), &common)?, &common),
        Command::Plot { csv, out, kind } => {
            let out = out.unwrap_or_else(|| csv.with_extension("svg"));
            let kind = kind.map(|k| match k {
                KindArg::Fig3 => PlotKind::Fig3,
                KindArg::Fig4 => PlotKind::Fig4,
                KindArg::Eye => PlotKind::Eye,
            });
            plot_file(&csv, &out, kind)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn load(path: Option<&Path>, common: &Common) -> Result<Config, CliError> {
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    Ok(cfg)
}

fn revalidate(cfg: &Config) -> Result<(), CliError> {
    let text = toml::to_string(cfg).map_err(|e| CliError::Input(e.to_string()))?;
    Config::from_toml_str(&text)?;
    Ok(())
}

fn workers(common: &Common) -> usize {
    common.parallel.unwrap_or_else(default_workers).max(1)
}

fn out_dir(common: &Common) -> Result<&Path, CliError> {
    fs::create_dir_all(&common.out).map_err(|e| io_error(&common.out, e))?;
    Ok(&common.out)
}

fn write_csv<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    csvio::write_file(path, body).map_err(|e| io_error(path, e))
}

fn plot_file(csv: &Path, out: &Path, kind: Option<PlotKind>) -> Result<(), CliError> {
    let table = read_table(csv).map_err(|e| io_error(csv, e))?;
    let svg = plot::render(&table, kind).map_err(|e| io_error(csv, e))?;
    fs::write(out, svg).map_err(|e| io_error(out, e))
}

#[derive(Serialize)]
struct Drops {
    corruption: u64,
    deadline: u64,
    stale: u64,
    overflow: u64,
}

#[derive(Serialize)]
struct Report<'a> {
    seed: u64,
    config: &'a Config,
    sent: u64,
    delivered: u64,
    errored: u64,
    per: f64,
    drops: Drops,
    delay_mean_ms: Option<f64>,
    delay_std_ms: Option<f64>,
    delay_samples: u64,
    goodput_bps: f64,
    optical_ber: f64,
    nominal_delay_ms: f64,
    deadline_ms: Option<f64>,
    duration_s: f64,
    events_fired: u64,
    overload_frames: u64,
    overload_drops: u64,
}

fn run(path: &Path, common: &Common, packets: Option<u64>, trace: bool) -> Result<(), CliError> {
    let mut cfg = load(Some(path), common)?;
    if let Some(n) = packets {
        cfg.traffic.packets = Some(n);
        cfg.traffic.duration_s = None;
    }
    let mut scenario = cfg.scenario()?;
    scenario.record_trace = trace;
    let optical_ber = match &scenario.phy {
        PhyConfig::Pam4(p) => {
            let cal = sweep::calibrate_phy(p, scenario.traffic.payload_bits(), calibration_seed(&scenario), workers(common))?;
            cal.calibration.msb.rate
        }
        PhyConfig::NrzReference => 0.0,
    };
    let out = simulate(&scenario, optical_ber)?;
    let dir = out_dir(common)?;
    let report = report(&cfg, &scenario, &out);
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
    let file = dir.join("report.json");
    fs::write(&file, json).map_err(|e| io_error(&file, e))?;
    if let Some(records) = &out.trace {
        let file = dir.join("trace.csv");
        write_csv(&file, |buf| {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
            w.write_record(["user_seq", "du_ingress_ps", "cu_du_delay_ps"])?;
            for r in records {
                w.write_record([r.user_seq.to_string(), r.du_ingress.as_ps().to_string(), r.cu_du_delay.as_ps().to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    let r = &out.report;
    println!(
        "sent {} delivered {} PER {:.4}% (corruption {}, deadline {}, stale {}, overflow {})",
        r.sent,
        r.delivered,
        100.0 * r.per,
        r.drops.corruption,
        r.drops.deadline,
        r.drops.stale,
        r.drops.overflow
    );
    println!("wrote {}", file.display());
    Ok(())
}

fn report<'a>(cfg: &'a Config, scenario: &ScenarioConfig, out: &ScenarioOutput) -> Report<'a> {
    let r = &out.report;
    Report {
        seed: scenario.root_seed,
        config: cfg,
        sent: r.sent,
        delivered: r.delivered,
        errored: r.errored(),
        per: r.per,
        drops: Drops {
            corruption: r.drops.corruption,
            deadline: r.drops.deadline,
            stale: r.drops.stale,
            overflow: r.drops.overflow,
        },
        delay_mean_ms: r.delay_mean.map(|t| t.as_ms_f64()),
        delay_std_ms: r.delay_std.map(|t| t.as_ms_f64()),
        delay_samples: r.delay_samples,
        goodput_bps: r.goodput_bps,
        optical_ber: r.optical_ber,
        nominal_delay_ms: out.nominal_delay.as_ms_f64(),
        deadline_ms: out.deadline.map(|t| t.as_ms_f64()),
        duration_s: r.duration.as_secs_f64(),
        events_fired: r.events_fired,
        overload_frames: r.overload_frames,
        overload_drops: r.overload_drops,
    }
}

fn print_phy(phy: &PhyCalibration) {
    let c = &phy.calibration;
    println!(
        "PHY noise sigma {:.5}: MSB BER {:.3e} [{:.3e}, {:.3e}], LSB BER {:.3e}",
        phy.model.noise_sigma, c.msb.rate, c.msb.ci_low, c.msb.ci_high, c.lsb.rate
    );
}

fn sweep_base(cfg: &Config) -> Result<ScenarioConfig, CliError> {
    let mut base = cfg.scenario()?;
    base.traffic.length = TrafficLength::Packets(cfg.sweep.packets);
    Ok(base)
}

fn sweep_fig3(cfg: &Config, common: &Common) -> Result<(), CliError> {
    let base = sweep_base(cfg)?;
    let pam4 = cfg.pam4_phy().map_err(CliError::Input)?;
    let spec = SweepSpec::from_config(cfg, workers(common));
    let out = sweep::run_fig3(&base, &pam4, &spec)?;
    let dir = out_dir(common)?;
    let csv_path = dir.join("fig3.csv");
    write_csv(&csv_path, |buf| csvio::write_fig3(buf, &out.rows))?;
    plot_file(&csv_path, &dir.join("fig3.svg"), Some(PlotKind::Fig3))?;
    print_phy(&out.phy);
    for r in &out.rows {
        println!("{:>8.2} Mb/s  {:<18} PER {:.4}%", r.stats.bitrate_bps / 1e6, r.variant.label(), 100.0 * r.stats.per());
    }
    println!("wrote {} and fig3.svg", csv_path.display());
    Ok(())
}

fn sweep_fig4(cfg: &Config, common: &Common) -> Result<(), CliError> {
    let base = sweep_base(cfg)?;
    let pam4 = cfg.pam4_phy().map_err(CliError::Input)?;
    let spec = SweepSpec::from_config(cfg, workers(common));
    let out = sweep::run_fig4(&base, &pam4, &spec)?;
    let dir = out_dir(common)?;
    let csv_path = dir.join("fig4.csv");
    write_csv(&csv_path, |buf| csvio::write_fig4(buf, &out.rows))?;
    plot_file(&csv_path, &dir.join("fig4.svg"), Some(PlotKind::Fig4))?;
    let eye_path = dir.join("eye.csv");
    write_csv(&eye_path, |buf| csvio::write_eye(buf, &out.eye))?;
    plot_file(&eye_path, &dir.join("eye.svg"), Some(PlotKind::Eye))?;
    if let Some(phy) = &out.phy {
        print_phy(phy);
    }
    for r in &out.rows {
        println!(
            "{:>8.2} Mb/s  jitter {:.2} ms  PER {:.4}%",
            r.stats.bitrate_bps / 1e6,
            r.jitter_std.as_ms_f64(),
            100.0 * r.stats.per()
        );
    }
    println!("wrote {}, fig4.svg, eye.csv and eye.svg", csv_path.display());
    Ok(())
}

fn calibrate(cfg: &Config, common: &Common) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let pam4 = cfg.pam4_phy().map_err(CliError::Input)?;
    let phy = sweep::calibrate_phy(&pam4, scenario.traffic.payload_bits(), calibration_seed(&scenario), workers(common))?;
    let dir = out_dir(common)?;
    let path = dir.join("ber.csv");
    write_csv(&path, |buf| csvio::write_ber(buf, &phy.calibration))?;
    print_phy(&phy);
    println!("wrote {}", path.display());
    Ok(())
}
