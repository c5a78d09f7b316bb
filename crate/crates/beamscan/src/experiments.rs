//! End-to-end experiment drivers.
//!
//! Everything below stitches the other modules into reproducible studies:
//! drop UEs and report the cell's SNR distribution, run misdetection Monte
//! Carlo for a design option at an operating point, search for the smallest
//! cycle count meeting a misdetection target, and turn that into
//! delay-versus-overhead curves. Results land in CSV files next to a
//! manifest recording the exact configuration and seed, and reruns with the
//! same inputs produce byte-identical outputs: every trial derives its RNG
//! from (master seed, point id, trial index), so results do not depend on
//! thread scheduling or on which points share a run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamspace::{scan_schedule, ArrayGeometry, DesignOption, Phase, ScanSchedule};
use crate::calibration::{BudgetInputs, CalibrationError, HypothesisBudget, ThresholdCache};
use crate::channel::{
    cluster_channel, db_to_lin, drop_distance, fading_process, ideal_beamspace_channel,
    link_budget, ChannelError, ClusterConfig, ClusterPort, LinkDirection, SystemParams,
};
use crate::delay::detection_delay_s;
use crate::detector::{correlate_batch, decide, DetectionOutcome, DetectorError};
use crate::quantization::QuantizerModel;
use crate::waveform::{make_subsignals, synthesize_received, WaveformError};

/// Seed used whenever operating points must be self-consistent across runs
/// (percentile SNRs feeding cycle counts and delay curves).
pub const REFERENCE_SEED: u64 = 0x0bea_5ca4;

/// The scanning waveforms themselves are public knowledge shared by
/// transmitter and detector, so they come from a fixed seed, not the run's.
const WAVEFORM_SEED: u64 = 0x7761_7665;

/// Salt separating the UE-drop stream from everything else under one seed.
const SNR_SALT: u64 = 0x736e_722d;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(
        "misdetection {pmd:.4} at the cycle cap K = {k_max} still above target {target}; \
         the operating point is not achievable"
    )]
    NotAchievable { target: f64, k_max: usize, pmd: f64 },
    #[error("serializing results: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

/// Which propagation model the Monte Carlo uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    /// Single beamspace path at a uniformly drawn direction pair.
    Ideal,
    /// Poisson-cluster multipath projected onto the scan hypotheses.
    Cluster,
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelModel::Ideal => "ideal",
            ChannelModel::Cluster => "cluster",
        })
    }
}

impl FromStr for ChannelModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideal" => Ok(ChannelModel::Ideal),
            "cluster" => Ok(ChannelModel::Cluster),
            other => Err(format!("unknown channel model '{other}' (ideal|cluster)")),
        }
    }
}

/// Full description of one simulated system. Defaults reproduce the baseline
/// setup: 28 GHz carrier, 1 GHz band, 8×8 BS and 4×4 UE arrays, 1 MHz
/// subsignals on N_div = 4 bands, 3 sync / 64 RA waveforms, 100 m cell.
/// Unknown keys in a config file are rejected rather than ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub carrier_hz: f64,
    pub w_tot_hz: f64,
    pub w_sig_hz: f64,
    /// Frequency-diversity branches per signal.
    pub n_div: usize,
    /// Distinct sync waveforms (cell identities) searched in parallel.
    pub sync_waveforms: usize,
    /// Distinct RA waveforms (preambles) searched in parallel.
    pub ra_waveforms: usize,
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub ue_rows: usize,
    pub ue_cols: usize,
    /// ADC resolution of fully digital receive front ends.
    pub adc_bits: u32,
    pub dl_tx_power_dbm: f64,
    pub dl_noise_figure_db: f64,
    pub ul_tx_power_dbm: f64,
    pub ul_noise_figure_db: f64,
    pub kt_dbm_hz: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    /// Probability of any false alarm tolerated over one scan.
    pub fa_budget: f64,
    /// Timing uncertainty of the sync delay search (one period).
    pub sync_delay_window_s: f64,
    pub osc_ppm: f64,
    pub ue_speed_kmh: f64,
    /// Longest subsignal the system may configure; sets the FO bin width.
    pub t_sig_max_s: f64,
    /// Link-budget margin between the raw budget and the SNR the detector
    /// actually sees (implementation losses, channel estimation, beam
    /// misalignment). One global knob, calibrated end to end.
    pub margin_db: f64,
    pub pmd_target: f64,
    /// Monte Carlo trials per misdetection estimate.
    pub trials: usize,
    /// Largest cycle count the search will consider.
    pub k_max: usize,
    /// Noise-only draws per threshold calibration.
    pub calibration_trials: usize,
    /// UE drops behind the reference percentile operating points.
    pub percentile_drops: usize,
    /// Default air-interface fraction granted to scanning.
    pub phi: f64,
    /// RA period for overhead accounting.
    pub ra_period_s: f64,
    /// Required accumulated SNR assumed by the fundamental delay bound, dB.
    pub bound_gamma_sig_db: f64,
    pub channel: ChannelModel,
    pub cluster: ClusterConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            carrier_hz: 28e9,
            w_tot_hz: 1e9,
            w_sig_hz: 1e6,
            n_div: 4,
            sync_waveforms: 3,
            ra_waveforms: 64,
            bs_rows: 8,
            bs_cols: 8,
            ue_rows: 4,
            ue_cols: 4,
            adc_bits: 3,
            dl_tx_power_dbm: 30.0,
            dl_noise_figure_db: 7.0,
            ul_tx_power_dbm: 20.0,
            ul_noise_figure_db: 4.0,
            kt_dbm_hz: -174.0,
            cell_radius_m: 100.0,
            min_distance_m: 1.0,
            fa_budget: 0.01,
            sync_delay_window_s: 10e-3,
            osc_ppm: 1.0,
            ue_speed_kmh: 30.0,
            t_sig_max_s: 100e-6,
            margin_db: 8.40,
            pmd_target: 0.01,
            trials: 10_000,
            k_max: 10_000,
            calibration_trials: 200_000,
            percentile_drops: 500_000,
            phi: 0.05,
            ra_period_s: 0.2e-3,
            bound_gamma_sig_db: 20.0,
            channel: ChannelModel::Ideal,
            cluster: ClusterConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ExperimentError::Config(msg) => {
                ExperimentError::Config(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: &str| Err(ExperimentError::Config(msg.to_string()));
        if !(self.carrier_hz > 0.0 && self.w_tot_hz > 0.0 && self.w_sig_hz > 0.0) {
            return fail("frequencies must be positive");
        }
        if self.n_div < 1 || self.n_div as f64 * self.w_sig_hz > self.w_tot_hz {
            return fail("N_div subsignal bands must fit inside W_tot");
        }
        if self.sync_waveforms < 1 || self.ra_waveforms < 1 {
            return fail("waveform counts must be at least 1");
        }
        if self.bs_rows * self.bs_cols < 1 || self.ue_rows * self.ue_cols < 1 {
            return fail("arrays need at least one element");
        }
        if !(1..=16).contains(&self.adc_bits) {
            return fail("adc_bits must lie in 1..=16");
        }
        if !(self.min_distance_m >= 1.0 && self.cell_radius_m > self.min_distance_m) {
            return fail("cell_radius_m must exceed min_distance_m >= 1 (pathloss model floor)");
        }
        if !(self.fa_budget > 0.0 && self.fa_budget < 1.0) {
            return fail("fa_budget must lie in (0,1)");
        }
        if !(self.pmd_target > 0.0 && self.pmd_target < 1.0) {
            return fail("pmd_target must lie in (0,1)");
        }
        if !(self.sync_delay_window_s > 0.0 && self.t_sig_max_s > 0.0) {
            return fail("timing windows must be positive");
        }
        if self.osc_ppm < 0.0 || self.ue_speed_kmh < 0.0 || self.margin_db < 0.0 {
            return fail("osc_ppm, ue_speed_kmh and margin_db must be nonnegative");
        }
        if self.trials < 1 || self.k_max < 1 {
            return fail("trials and k_max must be at least 1");
        }
        if self.calibration_trials < 1000 {
            return fail("calibration_trials must be at least 1000");
        }
        if self.percentile_drops < 1000 {
            return fail("percentile_drops must be at least 1000");
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return fail("phi must lie in (0,1]");
        }
        if self.ra_period_s <= 0.0 {
            return fail("ra_period_s must be positive");
        }
        if self.cluster.paths_per_cluster < 1
            || self.cluster.mean_clusters <= 0.0
            || self.cluster.angular_spread_deg < 0.0
        {
            return fail("cluster model needs paths_per_cluster >= 1, mean_clusters > 0");
        }
        Ok(())
    }

    pub fn bs_array(&self) -> ArrayGeometry {
        ArrayGeometry::new(self.bs_rows, self.bs_cols)
    }

    pub fn ue_array(&self) -> ArrayGeometry {
        ArrayGeometry::new(self.ue_rows, self.ue_cols)
    }

    /// Link parameters of the transmitting side of a phase: the BS transmits
    /// sync, the UE transmits RA.
    pub fn system(&self, phase: Phase) -> SystemParams {
        match phase {
            Phase::Sync => SystemParams {
                tx_power_dbm: self.dl_tx_power_dbm,
                noise_figure_db: self.dl_noise_figure_db,
                kt_dbm_hz: self.kt_dbm_hz,
                w_tot_hz: self.w_tot_hz,
            },
            Phase::Ra => SystemParams {
                tx_power_dbm: self.ul_tx_power_dbm,
                noise_figure_db: self.ul_noise_figure_db,
                kt_dbm_hz: self.kt_dbm_hz,
                w_tot_hz: self.w_tot_hz,
            },
        }
    }

    /// Per-direction false-alarm share of a phase. Sync searches a full
    /// period of delays; RA only the round-trip spread of the cell.
    pub fn budget(&self, phase: Phase) -> HypothesisBudget {
        let (n_sig, delay_window_s) = match phase {
            Phase::Sync => (self.sync_waveforms, self.sync_delay_window_s),
            Phase::Ra => (
                self.ra_waveforms,
                2.0 * (2.0 * self.cell_radius_m) / crate::channel::SPEED_OF_LIGHT,
            ),
        };
        HypothesisBudget::new(&BudgetInputs {
            fa_budget: self.fa_budget,
            w_sig_hz: self.w_sig_hz,
            n_sig,
            delay_window_s,
            carrier_hz: self.carrier_hz,
            osc_ppm: self.osc_ppm,
            ue_speed_mps: self.ue_speed_kmh / 3.6,
            t_sig_max_s: self.t_sig_max_s,
        })
    }

    pub fn quantizer(&self) -> QuantizerModel {
        QuantizerModel::new(self.adc_bits)
    }

    pub fn schedule(&self, option: DesignOption, phase: Phase) -> ScanSchedule {
        scan_schedule(option, phase, &self.bs_array(), &self.ue_array())
    }

    /// Samples per subsignal, M = T_sig·W_sig. The detector needs M ≥ 2.
    pub fn subsignal_samples(&self, t_sig_s: f64) -> Result<usize, ExperimentError> {
        let m_f = t_sig_s * self.w_sig_hz;
        let m = m_f.round();
        if (m_f - m).abs() > 1e-6 * m_f.max(1.0) || m < 2.0 {
            return Err(ExperimentError::Config(format!(
                "T_sig = {t_sig_s} s gives M = {m_f} samples per subsignal; need an integer >= 2"
            )));
        }
        Ok(m as usize)
    }

    /// Nominal (TX, RX) array gains of a phase under a design option. Sync:
    /// the BS only contributes gain when it sweeps directionally, the UE
    /// always combines over its array. RA: the UE transmits on its learned
    /// beam; the BS contributes nothing only when it listens omni (DDO).
    pub fn array_gains(&self, option: DesignOption, phase: Phase) -> (f64, f64) {
        let n_bs = self.bs_array().elements() as f64;
        let n_ue = self.ue_array().elements() as f64;
        match phase {
            Phase::Sync => {
                let g_tx = if option.sync_tx_directional() { n_bs } else { 1.0 };
                (g_tx, n_ue)
            }
            Phase::Ra => {
                let g_rx = if option == DesignOption::DDO { 1.0 } else { n_bs };
                (n_ue, g_rx)
            }
        }
    }

    /// Whether the receiving side of a phase runs a fully digital, coarsely
    /// quantized front end under this option.
    pub fn rx_quantized(&self, option: DesignOption, phase: Phase) -> bool {
        match phase {
            Phase::Sync => option.ue_digital(),
            Phase::Ra => option.bs_digital_ra(),
        }
    }
}

/// Per-subsignal per-sample SNR handed to the synthesis step.
///
/// Chain: the omni SNR γ₀ (over W_tot) accumulates over T_sig·W_tot samples,
/// splits across N_div diversity branches, pays the global margin, picks up
/// the nominal array gains, and — on coarsely quantized front ends — passes
/// through the quantization transform at the nominal post-beamforming
/// per-sample SNR. `gains_in_channel` drops the array-gain factor from the
/// result for channel models (the cluster model) whose hypothesis
/// projections already carry the directionality.
pub fn synthesis_snr(
    cfg: &ExperimentConfig,
    option: DesignOption,
    phase: Phase,
    snr_omni_db: f64,
    t_sig_s: f64,
    gains_in_channel: bool,
) -> Result<f64, ExperimentError> {
    let m = cfg.subsignal_samples(t_sig_s)? as f64;
    let (g_tx, g_rx) = cfg.array_gains(option, phase);
    let base = db_to_lin(snr_omni_db) * t_sig_s * cfg.w_tot_hz
        / (cfg.n_div as f64 * db_to_lin(cfg.margin_db))
        / m;
    let nominal = base * g_tx * g_rx;
    let ratio = if cfg.rx_quantized(option, phase) {
        let sigma = cfg.quantizer().sigma;
        // effective_snr(γ)/γ, written to stay finite as γ → 0
        (1.0 - sigma) / (1.0 + sigma * nominal)
    } else {
        1.0
    };
    Ok(if gains_in_channel { base * ratio } else { nominal * ratio })
}

// ---------------------------------------------------------------------------
// SNR distribution and operating points

/// Sorted γ₀ samples of a population of dropped UEs. Uplink and downlink
/// differ per drop only by the constant TX-power/noise-figure offset, so one
/// sorted array serves both directions.
#[derive(Debug, Clone)]
pub struct SnrDistribution {
    pub drops: usize,
    pub seed: u64,
    dl_sorted_db: Vec<f64>,
    ul_offset_db: f64,
}

/// The named percentile operating points studies run at. "High" is the 95th
/// percentile of the link's own γ₀ distribution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OperatingPoints {
    pub drops: usize,
    pub seed: u64,
    pub dl_p1_db: f64,
    pub dl_p5_db: f64,
    pub dl_p50_db: f64,
    pub dl_p95_db: f64,
    pub ul_p1_db: f64,
    pub ul_p5_db: f64,
    pub ul_p50_db: f64,
    pub ul_p95_db: f64,
}

/// Which operating point of the SNR distribution a study runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PercentileTag {
    P1,
    P5,
    High,
}

impl PercentileTag {
    pub const ALL: [PercentileTag; 3] = [PercentileTag::P1, PercentileTag::P5, PercentileTag::High];
}

impl fmt::Display for PercentileTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PercentileTag::P1 => "1%",
            PercentileTag::P5 => "5%",
            PercentileTag::High => "high",
        })
    }
}

impl OperatingPoints {
    /// γ₀ (dB over W_tot) of the link a phase detects: sync listens to the
    /// downlink, RA to the uplink.
    pub fn gamma0_db(&self, phase: Phase, tag: PercentileTag) -> f64 {
        let (p1, p5, p95) = match phase {
            Phase::Sync => (self.dl_p1_db, self.dl_p5_db, self.dl_p95_db),
            Phase::Ra => (self.ul_p1_db, self.ul_p5_db, self.ul_p95_db),
        };
        match tag {
            PercentileTag::P1 => p1,
            PercentileTag::P5 => p5,
            PercentileTag::High => p95,
        }
    }
}

impl SnrDistribution {
    /// Nearest-rank percentile, `pct` in (0, 100].
    pub fn percentile_db(&self, dir: LinkDirection, pct: f64) -> f64 {
        assert!(pct > 0.0 && pct <= 100.0, "percentile must lie in (0,100]");
        let n = self.dl_sorted_db.len();
        let rank = (pct / 100.0 * n as f64).ceil() as usize;
        let dl = self.dl_sorted_db[rank.clamp(1, n) - 1];
        match dir {
            LinkDirection::Downlink => dl,
            LinkDirection::Uplink => dl + self.ul_offset_db,
        }
    }

    /// The sorted γ₀ samples (dB) — the empirical CDF support.
    pub fn samples_db(&self, dir: LinkDirection) -> Vec<f64> {
        match dir {
            LinkDirection::Downlink => self.dl_sorted_db.clone(),
            LinkDirection::Uplink => {
                self.dl_sorted_db.iter().map(|v| v + self.ul_offset_db).collect()
            }
        }
    }

    pub fn operating_points(&self) -> OperatingPoints {
        let p = |pct| self.percentile_db(LinkDirection::Downlink, pct);
        let off = self.ul_offset_db;
        OperatingPoints {
            drops: self.drops,
            seed: self.seed,
            dl_p1_db: p(1.0),
            dl_p5_db: p(5.0),
            dl_p50_db: p(50.0),
            dl_p95_db: p(95.0),
            ul_p1_db: p(1.0) + off,
            ul_p5_db: p(5.0) + off,
            ul_p50_db: p(50.0) + off,
            ul_p95_db: p(95.0) + off,
        }
    }
}

/// Drop `n_ues` UEs uniformly over the cell area and collect their omni SNR
/// distribution. Uplink and downlink are evaluated on identical drops.
pub fn run_snr_distribution(
    cfg: &ExperimentConfig,
    n_ues: usize,
    seed: u64,
) -> Result<SnrDistribution, ExperimentError> {
    cfg.validate()?;
    if n_ues < 1000 {
        return Err(ExperimentError::Config(format!(
            "SNR distribution needs at least 1000 drops, got {n_ues}"
        )));
    }
    let dl = cfg.system(Phase::Sync);
    let ul = cfg.system(Phase::Ra);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SNR_SALT);
    let mut dl_db = Vec::with_capacity(n_ues);
    for _ in 0..n_ues {
        let d = drop_distance(cfg.cell_radius_m, cfg.min_distance_m, &mut rng);
        dl_db.push(link_budget(d, &dl, &mut rng)?.gamma0_db());
    }
    dl_db.sort_by(f64::total_cmp);
    let ul_offset_db = (ul.tx_power_dbm - dl.tx_power_dbm)
        - (ul.noise_figure_db - dl.noise_figure_db);
    Ok(SnrDistribution { drops: n_ues, seed, dl_sorted_db: dl_db, ul_offset_db })
}

/// The operating points all cycle-count and delay studies refer to:
/// percentiles of the reference-seed distribution, so independent runs (and
/// reruns) agree on what "the 1% UE" means.
pub fn reference_operating_points(
    cfg: &ExperimentConfig,
) -> Result<OperatingPoints, ExperimentError> {
    Ok(run_snr_distribution(cfg, cfg.percentile_drops, REFERENCE_SEED)?.operating_points())
}

// ---------------------------------------------------------------------------
// Misdetection Monte Carlo

/// One misdetection estimate.
#[derive(Debug, Clone, Copy)]
pub struct PmdPoint {
    /// Omni SNR over W_tot at the UE drop, dB.
    pub snr_omni_db: f64,
    /// Scan cycles accumulated before deciding.
    pub k: usize,
    pub trials: usize,
    /// Fraction of signal-present trials declared absent or resolved to the
    /// wrong direction.
    pub pmd: f64,
    /// 95% normal-approximation half-width of `pmd`.
    pub ci95: f64,
}

fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable identifier of one Monte Carlo point; part of every trial's RNG
/// seed so points are statistically independent and order-insensitive.
fn point_key(
    option: DesignOption,
    phase: Phase,
    channel: ChannelModel,
    t_sig_s: f64,
    k: usize,
    snr_omni_db: f64,
) -> u64 {
    let t_ns = (t_sig_s * 1e9).round() as u64;
    let snr_tenth_mdb = (snr_omni_db * 1e4).round() as i64;
    fnv1a64(&format!("{option}|{phase}|{channel}|{t_ns}|{k}|{snr_tenth_mdb}"))
}

fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ point);
    rng.set_stream(trial);
    rng
}

/// The (RX, TX) cluster-channel ports behind each hypothesis of a schedule.
/// RA always transmits on the UE's learned beam.
fn cluster_ports(
    option: DesignOption,
    phase: Phase,
    n_bs: usize,
    n_ue: usize,
) -> Vec<(ClusterPort, ClusterPort)> {
    use ClusterPort::{Bin, Learned, Omni};
    match phase {
        Phase::Sync => {
            if option.sync_tx_directional() {
                (0..n_bs)
                    .flat_map(|t| (0..n_ue).map(move |r| (Bin(r), Bin(t))))
                    .collect()
            } else {
                (0..n_ue).map(|r| (Bin(r), Omni)).collect()
            }
        }
        Phase::Ra => match option {
            DesignOption::DDO => vec![(Omni, Learned)],
            _ => (0..n_bs).map(|p| (Bin(p), Learned)).collect(),
        },
    }
}

/// Estimate misdetection for one design option and phase at one operating
/// point, for each cycle count in `k_list`. A trial synthesizes a present
/// signal through the configured channel model, runs the full correlation +
/// GLRT pipeline against the phase's calibrated threshold, and counts as
/// misdetected when the decision is "absent" or names the wrong direction.
#[allow(clippy::too_many_arguments)]
pub fn run_pmd(
    cfg: &ExperimentConfig,
    option: DesignOption,
    phase: Phase,
    snr_omni_db: f64,
    t_sig_s: f64,
    k_list: &[usize],
    trials: usize,
    seed: u64,
    cache: &mut ThresholdCache,
) -> Result<Vec<PmdPoint>, ExperimentError> {
    cfg.validate()?;
    if trials < 1 || k_list.is_empty() || k_list.contains(&0) {
        return Err(ExperimentError::Config(
            "PMD runs need trials >= 1 and nonzero cycle counts".into(),
        ));
    }
    let schedule = cfg.schedule(option, phase);
    let m = cfg.subsignal_samples(t_sig_s)?;
    let signals = make_subsignals(m, cfg.n_div, 0, WAVEFORM_SEED)?;
    let p_fa = cfg.budget(phase).p_fa;
    let snr_sub = synthesis_snr(
        cfg,
        option,
        phase,
        snr_omni_db,
        t_sig_s,
        cfg.channel == ChannelModel::Cluster,
    )?;
    let (bs, ue) = (cfg.bs_array(), cfg.ue_array());
    // RX/TX geometry by phase: the UE receives sync, the BS receives RA
    let (rx_geom, tx_geom) = match phase {
        Phase::Sync => (ue, bs),
        Phase::Ra => (bs, ue),
    };
    let ports = cluster_ports(option, phase, bs.elements(), ue.elements());
    debug_assert_eq!(ports.len(), schedule.hypotheses);

    let mut out = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let threshold = cache.threshold(
            m,
            k,
            schedule.hypotheses,
            cfg.n_div,
            p_fa,
            cfg.calibration_trials,
            seed,
        )?;
        let point = point_key(option, phase, cfg.channel, t_sig_s, k, snr_omni_db);
        let misses = (0..trials)
            .into_par_iter()
            .map(|trial| -> Result<bool, ExperimentError> {
                let mut rng = trial_rng(seed, point, trial as u64);
                let ch = match cfg.channel {
                    ChannelModel::Ideal => {
                        let l0 = rng.random_range(0..schedule.hypotheses);
                        ideal_beamspace_channel(l0, fading_process(k, cfg.n_div, &mut rng))
                    }
                    ChannelModel::Cluster => cluster_channel(
                        &cfg.cluster,
                        &rx_geom,
                        &tx_geom,
                        k,
                        cfg.n_div,
                        &ports,
                        &mut rng,
                    )?,
                };
                let batch = synthesize_received(
                    &signals,
                    &ch,
                    schedule.hypotheses,
                    k,
                    snr_sub,
                    true,
                    &mut rng,
                );
                let corr = correlate_batch(&signals, &batch)?;
                let outcome = DetectionOutcome::score(decide(&corr, threshold), Some(ch.l0()));
                Ok(outcome.is_misdetection())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n_miss = misses.iter().filter(|&&b| b).count();
        let pmd = n_miss as f64 / trials as f64;
        let ci95 = 1.96 * (pmd * (1.0 - pmd) / trials as f64).sqrt();
        out.push(PmdPoint { snr_omni_db, k, trials, pmd, ci95 });
    }
    Ok(out)
}

/// Smallest cycle count whose estimated misdetection meets `pmd_target`,
/// found by doubling then bisecting with `cfg.trials` trials per probe
/// (misdetection is monotone nonincreasing in K). Errors with a
/// not-achievable diagnostic if even `cfg.k_max` cycles stay above target.
#[allow(clippy::too_many_arguments)]
pub fn min_cycles(
    cfg: &ExperimentConfig,
    option: DesignOption,
    phase: Phase,
    snr_omni_db: f64,
    t_sig_s: f64,
    pmd_target: f64,
    seed: u64,
    cache: &mut ThresholdCache,
) -> Result<usize, ExperimentError> {
    if !(pmd_target > 0.0 && pmd_target < 1.0) {
        return Err(ExperimentError::Config("pmd_target must lie in (0,1)".into()));
    }
    let mut probed: BTreeMap<usize, f64> = BTreeMap::new();
    let mut probe = |k: usize, cache: &mut ThresholdCache| -> Result<f64, ExperimentError> {
        if let Some(&pmd) = probed.get(&k) {
            return Ok(pmd);
        }
        let pmd =
            run_pmd(cfg, option, phase, snr_omni_db, t_sig_s, &[k], cfg.trials, seed, cache)?[0]
                .pmd;
        probed.insert(k, pmd);
        Ok(pmd)
    };

    let mut lo = 0usize; // largest known-failing K
    let mut hi = 1usize;
    loop {
        let pmd = probe(hi, cache)?;
        if pmd <= pmd_target {
            break;
        }
        if hi >= cfg.k_max {
            return Err(ExperimentError::NotAchievable {
                target: pmd_target,
                k_max: cfg.k_max,
                pmd,
            });
        }
        lo = hi;
        hi = (hi * 2).min(cfg.k_max);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid, cache)? <= pmd_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

// ---------------------------------------------------------------------------
// Delay curves

/// Delay at one overhead share.
#[derive(Debug, Clone, Copy)]
pub struct DelayPoint {
    pub phi: f64,
    pub delay_s: f64,
    pub k_star: usize,
}

/// Detection delay versus overhead for one design option, phase, and
/// percentile operating point. The cycle count K* is a property of the
/// operating point alone; φ only stretches the schedule, so
/// delay = K*·L·T_sig/φ exactly at every grid point.
#[derive(Debug, Clone)]
pub struct DelayCurve {
    pub option: DesignOption,
    pub phase: Phase,
    pub percentile: PercentileTag,
    pub snr_omni_db: f64,
    pub t_sig_s: f64,
    /// Physical transmissions per scan cycle.
    pub l: usize,
    pub k_star: usize,
    pub points: Vec<DelayPoint>,
}

/// Compute a delay-versus-overhead curve at a named percentile of the
/// reference SNR distribution.
#[allow(clippy::too_many_arguments)]
pub fn run_delay_curve(
    cfg: &ExperimentConfig,
    option: DesignOption,
    phase: Phase,
    percentile: PercentileTag,
    t_sig_s: f64,
    phi_grid: &[f64],
    seed: u64,
    cache: &mut ThresholdCache,
) -> Result<DelayCurve, ExperimentError> {
    if phi_grid.is_empty() || phi_grid.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(ExperimentError::Config("phi grid values must lie in (0,1]".into()));
    }
    let ops = reference_operating_points(cfg)?;
    let snr_omni_db = ops.gamma0_db(phase, percentile);
    let k_star =
        min_cycles(cfg, option, phase, snr_omni_db, t_sig_s, cfg.pmd_target, seed, cache)?;
    let l = cfg.schedule(option, phase).len;
    let points = phi_grid
        .iter()
        .map(|&phi| DelayPoint { phi, delay_s: detection_delay_s(k_star, l, t_sig_s, phi), k_star })
        .collect();
    Ok(DelayCurve {
        option,
        phase,
        percentile,
        snr_omni_db,
        t_sig_s,
        l,
        k_star,
        points,
    })
}

// ---------------------------------------------------------------------------
// Result emission

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ExperimentError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => ExperimentError::Io { path: path.to_path_buf(), source },
            other => ExperimentError::Config(format!("{}: {other:?}", path.display())),
        })
}

fn csv_row(
    w: &mut csv::Writer<std::fs::File>,
    path: &Path,
    row: &[String],
) -> Result<(), ExperimentError> {
    w.write_record(row).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

/// Write misdetection estimates as RFC 4180 CSV (UTF-8, '.' decimals, CRLF).
pub fn write_pmd_csv(
    path: &Path,
    rows: &[(DesignOption, Phase, PmdPoint)],
) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path)?;
    csv_row(
        &mut w,
        path,
        &["option", "phase", "snr_db", "K", "trials", "pmd", "ci95"].map(String::from),
    )?;
    for (option, phase, p) in rows {
        csv_row(
            &mut w,
            path,
            &[
                option.to_string(),
                phase.to_string(),
                format!("{:.4}", p.snr_omni_db),
                p.k.to_string(),
                p.trials.to_string(),
                format!("{:.6}", p.pmd),
                format!("{:.6}", p.ci95),
            ],
        )?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Write delay curves as RFC 4180 CSV, one row per (curve, φ) point.
pub fn write_delay_csv(path: &Path, curves: &[DelayCurve]) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path)?;
    csv_row(
        &mut w,
        path,
        &["option", "phase", "percentile", "T_sig_us", "phi", "K_star", "L", "delay_ms"]
            .map(String::from),
    )?;
    for c in curves {
        for p in &c.points {
            csv_row(
                &mut w,
                path,
                &[
                    c.option.to_string(),
                    c.phase.to_string(),
                    c.percentile.to_string(),
                    format!("{:.1}", c.t_sig_s * 1e6),
                    format!("{:.4}", p.phi),
                    p.k_star.to_string(),
                    c.l.to_string(),
                    format!("{:.4}", p.delay_s * 1e3),
                ],
            )?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Write an SNR distribution as RFC 4180 CSV: the empirical CDF of both link
/// directions on a 0.05%-quantile grid.
pub fn write_snr_csv(path: &Path, dist: &SnrDistribution) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path)?;
    csv_row(&mut w, path, &["direction", "cdf", "gamma0_db"].map(String::from))?;
    for (dir, label) in [(LinkDirection::Downlink, "dl"), (LinkDirection::Uplink, "ul")] {
        for i in 1..=2000u32 {
            let pct = i as f64 * 0.05;
            csv_row(
                &mut w,
                path,
                &[
                    label.to_string(),
                    format!("{:.4}", pct / 100.0),
                    format!("{:.4}", dist.percentile_db(dir, pct)),
                ],
            )?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// One minimum-cycle-count result, as written to min_cycles.csv.
#[derive(Debug, Clone, Copy)]
pub struct MinCyclesRow {
    pub option: DesignOption,
    pub phase: Phase,
    pub percentile: PercentileTag,
    pub t_sig_s: f64,
    pub snr_omni_db: f64,
    pub k_star: usize,
    /// Physical transmissions per scan cycle.
    pub l: usize,
}

pub fn write_min_cycles_csv(path: &Path, rows: &[MinCyclesRow]) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path)?;
    csv_row(
        &mut w,
        path,
        &["option", "phase", "percentile", "T_sig_us", "snr_db", "K_star", "L"].map(String::from),
    )?;
    for r in rows {
        csv_row(
            &mut w,
            path,
            &[
                r.option.to_string(),
                r.phase.to_string(),
                r.percentile.to_string(),
                format!("{:.1}", r.t_sig_s * 1e6),
                format!("{:.4}", r.snr_omni_db),
                r.k_star.to_string(),
                r.l.to_string(),
            ],
        )?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// One evaluation of the fundamental sync-delay bound at an overhead share.
#[derive(Debug, Clone, Copy)]
pub struct BoundRow {
    pub percentile: PercentileTag,
    /// UE front end: "analog" or "digital".
    pub arch: &'static str,
    /// Sync transmission: "omni" or "directional".
    pub sync_tx: &'static str,
    pub phi: f64,
    pub bound_s: f64,
}

pub fn write_bounds_csv(path: &Path, rows: &[BoundRow]) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path)?;
    csv_row(
        &mut w,
        path,
        &["percentile", "arch", "sync_tx", "phi", "bound_ms"].map(String::from),
    )?;
    for r in rows {
        csv_row(
            &mut w,
            path,
            &[
                r.percentile.to_string(),
                r.arch.to_string(),
                r.sync_tx.to_string(),
                format!("{:.4}", r.phi),
                format!("{:.4}", r.bound_s * 1e3),
            ],
        )?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Everything needed to rerun or audit a result set. Serialized as TOML next
/// to the CSVs; contains no timestamps so identical runs stay byte-identical.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub version: &'a str,
    pub subcommand: &'a str,
    pub seed: u64,
    /// How the "high" operating point is defined.
    pub high_snr: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operating_points: Option<OperatingPoints>,
    pub config: &'a ExperimentConfig,
}

pub const HIGH_SNR_DEFINITION: &str =
    "95th percentile of the reference-seed omni SNR distribution (per link direction)";

pub fn write_manifest(path: &Path, manifest: &RunManifest<'_>) -> Result<(), ExperimentError> {
    let text = toml::to_string_pretty(manifest)?;
    std::fs::write(path, text).map_err(io_err(path))?;
    Ok(())
}
