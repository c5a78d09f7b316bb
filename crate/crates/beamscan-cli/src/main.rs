//! Command-line driver: each subcommand runs one study end to end and drops
//! CSV results plus a manifest (config, seed, code version) into --out, so a
//! result set can always be rerun or audited. Identical config + seed gives
//! byte-identical outputs.

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamscan::calibration::ThresholdCache;
use beamscan::channel::db_to_lin;
use beamscan::delay::{sync_delay_bound_analog, sync_delay_bound_digital, DelayBoundParams};
use beamscan::experiments::{
    min_cycles, reference_operating_points, run_delay_curve, run_pmd, run_snr_distribution,
    write_bounds_csv, write_delay_csv, write_manifest, write_min_cycles_csv, write_pmd_csv,
    write_snr_csv, BoundRow, ChannelModel, ExperimentConfig, MinCyclesRow, PercentileTag,
    RunManifest, HIGH_SNR_DEFINITION,
};
use beamscan::{DesignOption, Phase};

#[derive(Parser)]
#[command(
    name = "beamscan",
    version,
    about = "Link-level studies of directional initial access: scanning, detection, delay"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Omni-SNR distribution of UEs dropped over the cell, both directions
    SnrDist {
        #[command(flatten)]
        common: CommonArgs,
        /// UE drops (default: percentile_drops from the config)
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Calibrate detection thresholds for one option, phase and T_sig
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Noise-only draws per threshold (default: calibration_trials)
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Misdetection Monte Carlo over an SNR grid around the 1% point
    Pmd {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Trials per (SNR, K) estimate (default: trials from the config)
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Smallest cycle count meeting the misdetection target at the
    /// 1% / 5% / high operating points
    MinCycles {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Trials per probe (default: trials from the config)
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Detection delay versus overhead share φ at each operating point
    DelayCurve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Trials per probe (default: trials from the config)
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Fundamental sync-delay lower bounds over φ
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
        /// Shortest usable signal duration, microseconds
        #[arg(long = "tsig-us", value_name = "US", default_value_t = 10.0)]
        tsig_us: f64,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; omitted fields keep their defaults
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed; every per-trial RNG stream derives from it
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory receiving CSV results and the run manifest
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PointArgs {
    /// Design option: ddo | ddd | odd | oddig | odigdig
    #[arg(long, value_parser = parse_option)]
    option: DesignOption,
    /// Initial-access phase: sync | ra
    #[arg(long, value_parser = parse_phase)]
    phase: Phase,
    /// Subsignal duration in microseconds (the tables use 10, 50, 100)
    #[arg(long = "tsig-us", value_name = "US", default_value_t = 10.0)]
    tsig_us: f64,
    /// Channel model override: ideal | cluster
    #[arg(long)]
    channel: Option<ChannelModel>,
}

fn parse_option(s: &str) -> Result<DesignOption, String> {
    DesignOption::parse(s)
        .ok_or_else(|| format!("unknown design option '{s}' (ddo|ddd|odd|oddig|odigdig)"))
}

fn parse_phase(s: &str) -> Result<Phase, String> {
    match s {
        "sync" => Ok(Phase::Sync),
        "ra" => Ok(Phase::Ra),
        other => Err(format!("unknown phase '{other}' (sync|ra)")),
    }
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig, Box<dyn Error>> {
        let cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        std::fs::create_dir_all(&self.out)
            .map_err(|e| format!("creating {}: {e}", self.out.display()))?;
        Ok(cfg)
    }

    fn manifest(
        &self,
        cfg: &ExperimentConfig,
        subcommand: &str,
        ops: Option<beamscan::experiments::OperatingPoints>,
    ) -> Result<(), Box<dyn Error>> {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed: self.seed,
            high_snr: HIGH_SNR_DEFINITION,
            operating_points: ops,
            config: cfg,
        };
        // one manifest per subcommand, so results from different runs can
        // share an output directory without misattributing each other
        write_manifest(&self.out.join(format!("{subcommand}.manifest.toml")), &manifest)?;
        Ok(())
    }

    fn cache(&self) -> Result<ThresholdCache, Box<dyn Error>> {
        Ok(ThresholdCache::open(&self.out.join("thresholds.toml"))?)
    }
}

impl PointArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(channel) = self.channel {
            cfg.channel = channel;
        }
    }

    fn t_sig_s(&self) -> f64 {
        self.tsig_us * 1e-6
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.cmd {
        Cmd::SnrDist { common, trials } => cmd_snr_dist(&common, trials),
        Cmd::Calibrate { common, point, trials } => cmd_calibrate(&common, &point, trials),
        Cmd::Pmd { common, point, trials } => cmd_pmd(&common, &point, trials),
        Cmd::MinCycles { common, point, trials } => cmd_min_cycles(&common, &point, trials),
        Cmd::DelayCurve { common, point, trials } => cmd_delay_curve(&common, &point, trials),
        Cmd::Bounds { common, tsig_us } => cmd_bounds(&common, tsig_us),
    }
}

fn cmd_snr_dist(common: &CommonArgs, trials: Option<usize>) -> Result<(), Box<dyn Error>> {
    let cfg = common.load()?;
    let drops = trials.unwrap_or(cfg.percentile_drops);
    let dist = run_snr_distribution(&cfg, drops, common.seed)?;
    let ops = dist.operating_points();
    write_snr_csv(&common.out.join("snr_cdf.csv"), &dist)?;
    common.manifest(&cfg, "snr-dist", Some(ops))?;
    println!("{drops} drops, seed {}", common.seed);
    println!(
        "downlink γ₀ percentiles (dB): 1% {:+.3}  5% {:+.3}  50% {:+.3}  95% {:+.3}",
        ops.dl_p1_db, ops.dl_p5_db, ops.dl_p50_db, ops.dl_p95_db
    );
    println!(
        "uplink  γ₀ percentiles (dB): 1% {:+.3}  5% {:+.3}  50% {:+.3}  95% {:+.3}",
        ops.ul_p1_db, ops.ul_p5_db, ops.ul_p50_db, ops.ul_p95_db
    );
    println!("wrote {}", common.out.join("snr_cdf.csv").display());
    Ok(())
}

fn cmd_calibrate(
    common: &CommonArgs,
    point: &PointArgs,
    trials: Option<usize>,
) -> Result<(), Box<dyn Error>> {
    let mut cfg = common.load()?;
    point.apply(&mut cfg);
    let schedule = cfg.schedule(point.option, point.phase);
    let m = cfg.subsignal_samples(point.t_sig_s())?;
    let budget = cfg.budget(point.phase);
    let trials = trials.unwrap_or(cfg.calibration_trials);
    let mut cache = common.cache()?;
    println!(
        "{} {}: M = {m}, L = {} hypotheses, per-direction P_FA = {:.4e}",
        point.option, point.phase, schedule.hypotheses, budget.p_fa
    );
    for k in 1..=5usize {
        let t = cache.threshold(
            m,
            k,
            schedule.hypotheses,
            cfg.n_div,
            budget.p_fa,
            trials,
            common.seed,
        )?;
        println!("  K = {k}: threshold {t:.3}");
    }
    cache.save()?;
    common.manifest(&cfg, "calibrate", None)?;
    println!("cached in {}", common.out.join("thresholds.toml").display());
    Ok(())
}

fn cmd_pmd(
    common: &CommonArgs,
    point: &PointArgs,
    trials: Option<usize>,
) -> Result<(), Box<dyn Error>> {
    let mut cfg = common.load()?;
    point.apply(&mut cfg);
    let trials = trials.unwrap_or(cfg.trials);
    let ops = reference_operating_points(&cfg)?;
    let p1 = ops.gamma0_db(point.phase, PercentileTag::P1);
    let k_list = [1usize, 2, 3, 5];
    let mut cache = common.cache()?;
    let mut rows = Vec::new();
    for offset in [-4.0, -2.0, 0.0, 2.0, 4.0, 6.0] {
        let snr = p1 + offset;
        let points = run_pmd(
            &cfg,
            point.option,
            point.phase,
            snr,
            point.t_sig_s(),
            &k_list,
            trials,
            common.seed,
            &mut cache,
        )?;
        for p in &points {
            println!(
                "γ₀ = {:+8.3} dB  K = {:3}: PMD {:.4} ± {:.4}",
                p.snr_omni_db, p.k, p.pmd, p.ci95
            );
        }
        rows.extend(points.into_iter().map(|p| (point.option, point.phase, p)));
    }
    cache.save()?;
    write_pmd_csv(&common.out.join("pmd.csv"), &rows)?;
    common.manifest(&cfg, "pmd", Some(ops))?;
    println!("wrote {}", common.out.join("pmd.csv").display());
    Ok(())
}

fn cmd_min_cycles(
    common: &CommonArgs,
    point: &PointArgs,
    trials: Option<usize>,
) -> Result<(), Box<dyn Error>> {
    let mut cfg = common.load()?;
    point.apply(&mut cfg);
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let ops = reference_operating_points(&cfg)?;
    let l = cfg.schedule(point.option, point.phase).len;
    let mut cache = common.cache()?;
    let mut rows = Vec::new();
    for tag in PercentileTag::ALL {
        let snr = ops.gamma0_db(point.phase, tag);
        match min_cycles(
            &cfg,
            point.option,
            point.phase,
            snr,
            point.t_sig_s(),
            cfg.pmd_target,
            common.seed,
            &mut cache,
        ) {
            Ok(k_star) => {
                println!(
                    "{tag:>4} point (γ₀ = {snr:+.3} dB): K* = {k_star}  (L = {l}, delay at φ = {} → {:.4} ms)",
                    cfg.phi,
                    beamscan::delay::detection_delay_s(k_star, l, point.t_sig_s(), cfg.phi) * 1e3
                );
                rows.push(MinCyclesRow {
                    option: point.option,
                    phase: point.phase,
                    percentile: tag,
                    t_sig_s: point.t_sig_s(),
                    snr_omni_db: snr,
                    k_star,
                    l,
                });
            }
            Err(e) => println!("{tag:>4} point (γ₀ = {snr:+.3} dB): {e}"),
        }
    }
    cache.save()?;
    write_min_cycles_csv(&common.out.join("min_cycles.csv"), &rows)?;
    common.manifest(&cfg, "min-cycles", Some(ops))?;
    println!("wrote {}", common.out.join("min_cycles.csv").display());
    Ok(())
}

fn cmd_delay_curve(
    common: &CommonArgs,
    point: &PointArgs,
    trials: Option<usize>,
) -> Result<(), Box<dyn Error>> {
    let mut cfg = common.load()?;
    point.apply(&mut cfg);
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let phi_grid = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5];
    let ops = reference_operating_points(&cfg)?;
    let mut cache = common.cache()?;
    let mut curves = Vec::new();
    for tag in PercentileTag::ALL {
        match run_delay_curve(
            &cfg,
            point.option,
            point.phase,
            tag,
            point.t_sig_s(),
            &phi_grid,
            common.seed,
            &mut cache,
        ) {
            Ok(curve) => {
                println!(
                    "{tag:>4} point: K* = {}, delay at φ = 0.05 → {:.4} ms",
                    curve.k_star,
                    beamscan::delay::detection_delay_s(curve.k_star, curve.l, curve.t_sig_s, 0.05)
                        * 1e3
                );
                curves.push(curve);
            }
            Err(e) => println!("{tag:>4} point: {e}"),
        }
    }
    cache.save()?;
    write_delay_csv(&common.out.join("delay.csv"), &curves)?;
    common.manifest(&cfg, "delay-curve", Some(ops))?;
    println!("wrote {}", common.out.join("delay.csv").display());
    Ok(())
}

fn cmd_bounds(common: &CommonArgs, tsig_us: f64) -> Result<(), Box<dyn Error>> {
    let cfg = common.load()?;
    let ops = reference_operating_points(&cfg)?;
    let g_tx = (cfg.bs_rows * cfg.bs_cols) as f64;
    let g_rx = (cfg.ue_rows * cfg.ue_cols) as f64;
    let gamma_sig = db_to_lin(cfg.bound_gamma_sig_db);
    let phi_grid = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5];
    let mut rows = Vec::new();
    for tag in PercentileTag::ALL {
        let gamma_tgt = db_to_lin(ops.gamma0_db(Phase::Sync, tag));
        for &phi in &phi_grid {
            for (sync_tx, g_tx_sync) in [("omni", 1.0), ("directional", g_tx)] {
                let p = DelayBoundParams {
                    g_rx,
                    g_tx,
                    g_tx_sync,
                    gamma_sig,
                    gamma_tgt,
                    w_tot_hz: cfg.w_tot_hz,
                    t_sig_min_s: tsig_us * 1e-6,
                    phi,
                };
                rows.push(BoundRow {
                    percentile: tag,
                    arch: "analog",
                    sync_tx,
                    phi,
                    bound_s: sync_delay_bound_analog(&p),
                });
                rows.push(BoundRow {
                    percentile: tag,
                    arch: "digital",
                    sync_tx,
                    phi,
                    bound_s: sync_delay_bound_digital(&p),
                });
            }
        }
    }
    let path: &Path = &common.out.join("bounds.csv");
    write_bounds_csv(path, &rows)?;
    common.manifest(&cfg, "bounds", Some(ops))?;
    println!(
        "sync-delay bounds for γ_sig = {:.1} dB, T_min = {tsig_us} µs over {} φ points",
        cfg.bound_gamma_sig_db,
        phi_grid.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}
