//! Link statistics and channel realizations.
//!
//! A dropped UE is in LOS with probability exp(−d/67.1 m) and NLOS otherwise
//! (outage ignored). Pathloss is α + 10β·log10(d) + ξ with lognormal
//! shadowing ξ, using the 28 GHz urban fits: LOS (61.4, 2.0, σ 5.8 dB),
//! NLOS (72.0, 2.92, σ 8.7 dB). The omni-directional wideband SNR is
//!
//! γ₀ = P_rx / (N₀ W_tot),
//!
//! the link-level operating metric from which the per-signal SNRs are
//! derived: γ_sig = γ₀·T_sig·W_tot accumulated over a whole transmission and
//! γ_sig,dir = γ_sig·G_tx·G_rx with beamforming.
//!
//! Two channel shapes feed the detector: the idealized single-beamspace-path
//! model (all energy in one TX/RX direction pair, scalar gain ψ_{kd}), and a
//! configurable multi-cluster model for evaluating the same detector against
//! spatially rich propagation.

use crate::beamspace::ArrayGeometry;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("pathloss model requires distance >= 1 m, got {0}")]
    DistanceBelowModelFloor(f64),
    #[error("cluster channel requires at least one cluster")]
    NoClusters,
}

/// Convert dB to linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert linear power ratio to dB.
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
}

/// Pathloss fit for one link state: PL = alpha + 10·beta·log10(d) + ξ,
/// ξ ~ N(0, sigma²), all in dB.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathlossParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl PathlossParams {
    pub const LOS: PathlossParams = PathlossParams { alpha: 61.4, beta: 2.0, sigma: 5.8 };
    pub const NLOS: PathlossParams = PathlossParams { alpha: 72.0, beta: 2.92, sigma: 8.7 };
}

/// LOS decay length in meters: P_LOS(d) = exp(−d/67.1).
pub const LOS_DECAY_M: f64 = 67.1;

/// Draw the LOS/NLOS state at distance `d` meters.
pub fn link_state<R: Rng + ?Sized>(d: f64, rng: &mut R) -> LinkState {
    assert!(d >= 0.0);
    if rng.random::<f64>() < (-d / LOS_DECAY_M).exp() {
        LinkState::Los
    } else {
        LinkState::Nlos
    }
}

/// Pathloss in dB at distance `d` with the given shadowing realization.
pub fn pathloss_db(d: f64, state: LinkState, xi: f64) -> Result<f64, ChannelError> {
    if d < 1.0 {
        return Err(ChannelError::DistanceBelowModelFloor(d));
    }
    let p = match state {
        LinkState::Los => PathlossParams::LOS,
        LinkState::Nlos => PathlossParams::NLOS,
    };
    Ok(p.alpha + 10.0 * p.beta * d.log10() + xi)
}

/// Which end transmits: downlink (BS → UE) or uplink (UE → BS).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkDirection {
    Downlink,
    Uplink,
}

/// Power/noise bookkeeping for one direction of a link.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SystemParams {
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    /// Thermal noise density, dBm/Hz.
    pub kt_dbm_hz: f64,
    pub w_tot_hz: f64,
}

impl SystemParams {
    pub fn downlink_default() -> Self {
        SystemParams { tx_power_dbm: 30.0, noise_figure_db: 7.0, kt_dbm_hz: -174.0, w_tot_hz: 1e9 }
    }

    pub fn uplink_default() -> Self {
        SystemParams { tx_power_dbm: 20.0, noise_figure_db: 4.0, kt_dbm_hz: -174.0, w_tot_hz: 1e9 }
    }
}

/// A resolved link: distance, state, pathloss (shadowing included), and the
/// omni-directional SNR over the full system bandwidth.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub state: LinkState,
    pub pathloss_db: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    /// γ₀, linear.
    pub gamma0: f64,
}

impl LinkBudget {
    pub fn gamma0_db(&self) -> f64 {
        lin_to_db(self.gamma0)
    }

    /// Accumulated per-transmission SNR γ_sig = γ₀·T_sig·W_tot.
    pub fn gamma_sig(&self, t_sig_s: f64, w_tot_hz: f64) -> f64 {
        self.gamma0 * t_sig_s * w_tot_hz
    }

    /// Beamformed accumulated SNR γ_sig,dir = γ_sig·G_tx·G_rx.
    pub fn gamma_sig_dir(&self, t_sig_s: f64, w_tot_hz: f64, g_tx: f64, g_rx: f64) -> f64 {
        self.gamma_sig(t_sig_s, w_tot_hz) * g_tx * g_rx
    }
}

/// Assemble the link budget at a fixed pathloss.
pub fn link_budget_at(
    distance_m: f64,
    state: LinkState,
    pathloss: f64,
    sys: &SystemParams,
) -> LinkBudget {
    let noise_dbm = sys.kt_dbm_hz + 10.0 * sys.w_tot_hz.log10() + sys.noise_figure_db;
    let gamma0_db = sys.tx_power_dbm - pathloss - noise_dbm;
    LinkBudget {
        distance_m,
        state,
        pathloss_db: pathloss,
        tx_power_dbm: sys.tx_power_dbm,
        noise_figure_db: sys.noise_figure_db,
        gamma0: db_to_lin(gamma0_db),
    }
}

/// Draw state and shadowing at `distance_m` and assemble the link budget.
pub fn link_budget<R: Rng + ?Sized>(
    distance_m: f64,
    sys: &SystemParams,
    rng: &mut R,
) -> Result<LinkBudget, ChannelError> {
    let state = link_state(distance_m, rng);
    let sigma = match state {
        LinkState::Los => PathlossParams::LOS.sigma,
        LinkState::Nlos => PathlossParams::NLOS.sigma,
    };
    let xi: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
    let pl = pathloss_db(distance_m, state, xi)?;
    Ok(link_budget_at(distance_m, state, pl, sys))
}

/// Uniform drop over the disc: radius r ≤ `radius_m`, at least `min_m`.
pub fn drop_distance<R: Rng + ?Sized>(radius_m: f64, min_m: f64, rng: &mut R) -> f64 {
    // area-uniform: r = sqrt(u·(R² − r₀²) + r₀²)
    let u = rng.random::<f64>();
    (u * (radius_m * radius_m - min_m * min_m) + min_m * min_m).sqrt()
}

/// One complex Gaussian CN(0, 1) draw.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Small-scale fading ψ_{kd}: i.i.d. CN(0, 1) across scan cycles and
/// subsignals (the subsignals sit on well-separated frequencies, so their
/// fades decorrelate).
pub fn fading_process<R: Rng + ?Sized>(k: usize, n_div: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    assert!(k >= 1 && n_div >= 1);
    (0..k).map(|_| (0..n_div).map(|_| cn01(rng)).collect()).collect()
}

/// A channel in the shape the synthesis step consumes: per-hypothesis
/// post-beamforming gains. The idealized single-beamspace-path form keeps
/// its sparse δ structure; anything else (the cluster model) is projected
/// onto the scan hypotheses first.
#[derive(Debug, Clone)]
pub enum ChannelRealization {
    /// Post-beamforming gain is ψ_{kd}·δ_{ℓ,ℓ₀}.
    Ideal {
        l0: usize,
        /// ψ indexed [cycle][subsignal].
        psi: Vec<Vec<Complex64>>,
    },
    /// Dense per-hypothesis gains, indexed [cycle][hypothesis][subsignal].
    /// `l0` marks the dominant direction used for misdetection accounting.
    Projected { l0: usize, gains: Vec<Vec<Vec<Complex64>>> },
}

impl ChannelRealization {
    /// True/dominant direction index.
    pub fn l0(&self) -> usize {
        match self {
            ChannelRealization::Ideal { l0, .. } => *l0,
            ChannelRealization::Projected { l0, .. } => *l0,
        }
    }

    /// Post-beamforming gain of hypothesis `l` in cycle `k`, subsignal `d`.
    pub fn gain(&self, k: usize, l: usize, d: usize) -> Complex64 {
        match self {
            ChannelRealization::Ideal { l0, psi } => {
                if l == *l0 {
                    psi[k][d]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            ChannelRealization::Projected { gains, .. } => gains[k][l][d],
        }
    }
}

/// Idealized single-beamspace-path channel: all energy confined to direction
/// pair `l0` with per-(k, d) gain ψ.
pub fn ideal_beamspace_channel(l0: usize, psi: Vec<Vec<Complex64>>) -> ChannelRealization {
    ChannelRealization::Ideal { l0, psi }
}

/// Multi-cluster channel configuration. Cluster central angles are uniform
/// over the sector, paths scatter around them with the given angular spread,
/// per-path gains are complex Gaussian, and cluster powers are normalized so
/// that E‖H‖²_F = N_rx·N_tx.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    /// Mean of the Poisson cluster count (clipped to ≥ 1).
    pub mean_clusters: f64,
    pub paths_per_cluster: usize,
    /// RMS angular spread around the cluster center, degrees.
    pub angular_spread_deg: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        // Placeholder statistics standing in for the measurement-fit model;
        // adjust via config for serious cluster-channel studies.
        ClusterConfig { mean_clusters: 2.0, paths_per_cluster: 10, angular_spread_deg: 4.0 }
    }
}

fn poisson_clipped<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    // Knuth's method; mean is small (~2) so this is cheap.
    let limit = (-mean).exp();
    let mut n = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= limit {
            break;
        }
        n += 1;
    }
    n.max(1)
}

/// Draw one H matrix (N_rx × N_tx, row-major) from the cluster model.
pub fn cluster_matrix<R: Rng + ?Sized>(
    cfg: &ClusterConfig,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    rng: &mut R,
) -> Result<Vec<Complex64>, ChannelError> {
    if cfg.paths_per_cluster == 0 {
        return Err(ChannelError::NoClusters);
    }
    let n_rx = rx.elements();
    let n_tx = tx.elements();
    let n_clusters = poisson_clipped(cfg.mean_clusters, rng);
    let spread = cfg.angular_spread_deg.to_radians();
    let n_paths = n_clusters * cfg.paths_per_cluster;
    // per-path variance so that E‖H‖²_F = N_rx·N_tx given unit-norm steering
    let path_var = (n_rx * n_tx) as f64 / n_paths as f64;
    let mut h = vec![Complex64::new(0.0, 0.0); n_rx * n_tx];
    for _ in 0..n_clusters {
        // cluster centers uniform over a ±60° azimuth sector, ±30° elevation
        let az0 = (rng.random::<f64>() - 0.5) * (2.0 * PI / 3.0);
        let el0 = (rng.random::<f64>() - 0.5) * (PI / 3.0);
        let az0_tx = (rng.random::<f64>() - 0.5) * (2.0 * PI / 3.0);
        let el0_tx = (rng.random::<f64>() - 0.5) * (PI / 3.0);
        for _ in 0..cfg.paths_per_cluster {
            let g = cn01(rng) * path_var.sqrt();
            let (daz, del) = (
                rng.sample::<f64, _>(StandardNormal) * spread,
                rng.sample::<f64, _>(StandardNormal) * spread,
            );
            let (daz_t, del_t) = (
                rng.sample::<f64, _>(StandardNormal) * spread,
                rng.sample::<f64, _>(StandardNormal) * spread,
            );
            let a_rx = crate::beamspace::upa_steering(rx, az0 + daz, el0 + del);
            let a_tx = crate::beamspace::upa_steering(tx, az0_tx + daz_t, el0_tx + del_t);
            for (i, ari) in a_rx.iter().enumerate() {
                for (j, atj) in a_tx.iter().enumerate() {
                    h[i * n_tx + j] += g * ari * atj.conj();
                }
            }
        }
    }
    Ok(h)
}

/// One end of a cluster-channel hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterPort {
    /// A beamspace bin of that end's codebook.
    Bin(usize),
    /// The omnidirectional reference-element port.
    Omni,
    /// The best transmit beam of each realization — ideal beam learning, for
    /// the RA transmit side where the UE aims the beam acquired during sync.
    Learned,
}

/// Cluster-channel realization projected onto a scan's direction hypotheses.
///
/// Independent H per (cycle, subsignal), constant across the transmissions
/// of a cycle. The full beamspace transform B = U^*·H·V is computed once per
/// matrix; a hypothesis then reads one entry of B (a directional pair), one
/// entry of a row/column (an omni end), or the reference-element projection
/// for omni at both ends. `hypothesis_pairs` maps each hypothesis index to
/// its (rx port, tx port) coordinates; the experiment layer derives it from
/// the scan schedule. [`ClusterPort::Learned`] is only meaningful on the
/// transmit side.
#[allow(clippy::needless_range_loop)] // (ki, d) loop order is the RNG draw-order contract
pub fn cluster_channel<R: Rng + ?Sized>(
    cfg: &ClusterConfig,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    k: usize,
    n_div: usize,
    hypothesis_pairs: &[(ClusterPort, ClusterPort)],
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    assert!(
        hypothesis_pairs.iter().all(|(r, _)| *r != ClusterPort::Learned),
        "beam learning applies to the transmit side only"
    );
    let u = crate::beamspace::beamspace_codebook(rx);
    let v = crate::beamspace::beamspace_codebook(tx);
    let n_rx = rx.elements();
    let n_tx = tx.elements();
    let n_hyp = hypothesis_pairs.len();
    let wants_learned = hypothesis_pairs.iter().any(|(_, t)| *t == ClusterPort::Learned);
    let mut gains: Vec<Vec<Vec<Complex64>>> = vec![vec![vec![Complex64::default(); n_div]; n_hyp]; k];
    let mut power = vec![0.0f64; n_hyp];
    for ki in 0..k {
        for d in 0..n_div {
            let h = cluster_matrix(cfg, rx, tx, rng)?;
            // beamspace transform: b[p][q] = u_p^* H v_q
            let mut hv = vec![Complex64::default(); n_rx * n_tx]; // H·v_q stacked by q
            for q in 0..n_tx {
                for i in 0..n_rx {
                    let mut acc = Complex64::default();
                    for j in 0..n_tx {
                        acc += h[i * n_tx + j] * v.vectors[q][j];
                    }
                    hv[q * n_rx + i] = acc;
                }
            }
            let learned_tx = if wants_learned {
                // the beam a perfectly informed UE would aim: the codebook
                // column delivering the most energy through this realization
                (0..n_tx)
                    .max_by(|&a, &b| {
                        let pa: f64 = hv[a * n_rx..(a + 1) * n_rx].iter().map(|x| x.norm_sqr()).sum();
                        let pb: f64 = hv[b * n_rx..(b + 1) * n_rx].iter().map(|x| x.norm_sqr()).sum();
                        pa.total_cmp(&pb)
                    })
                    .unwrap_or(0)
            } else {
                0
            };
            let tx_bin = |port: ClusterPort| match port {
                ClusterPort::Bin(q) => Some(q),
                ClusterPort::Omni => None,
                ClusterPort::Learned => Some(learned_tx),
            };
            let project = |rx_port: ClusterPort, tx_port: ClusterPort| -> Complex64 {
                let rx_bin = match rx_port {
                    ClusterPort::Bin(p) => Some(p),
                    _ => None,
                };
                match (rx_bin, tx_bin(tx_port)) {
                    (Some(p), Some(q)) => {
                        let col = &hv[q * n_rx..(q + 1) * n_rx];
                        u.vectors[p].iter().zip(col).map(|(a, b)| a.conj() * b).sum()
                    }
                    // omni TX: reference-element column of H seen through u_p
                    (Some(p), None) => u.vectors[p]
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a.conj() * h[i * n_tx])
                        .sum(),
                    // omni RX: reference-element row of H·v_q
                    (None, Some(q)) => hv[q * n_rx],
                    (None, None) => h[0],
                }
            };
            for (li, (rx_port, tx_port)) in hypothesis_pairs.iter().enumerate() {
                let g = project(*rx_port, *tx_port);
                power[li] += g.norm_sqr();
                gains[ki][li][d] = g;
            }
        }
    }
    let l0 = power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(ChannelRealization::Projected { l0, gains })
}
