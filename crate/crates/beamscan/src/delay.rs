//! Access-delay and overhead accounting.
//!
//! Detection performance alone does not rank the design options; what the
//! system experiences is delay: how long until a cell is found (sync) or a
//! connection request is heard (RA), given that scanning may only consume a
//! fraction φ of the air interface. A design needing K cycles of an L-slot
//! scan at subsignal duration T_sig occupies K·L·T_sig of signal time and
//! therefore K·L·T_sig/φ of wall-clock time.
//!
//! The module also carries the fundamental floor on sync delay — what no
//! codebook redesign can beat — and the uplink resource overhead of RA
//! reception, where fully digital BS processing shrinks the reserved band
//! from W_tot to the N_div subsignal bands actually used.

/// Wall-clock detection delay in seconds for K cycles of `slots` scan slots
/// of duration `t_sig_s`, when scanning may use a fraction `phi` of the air
/// interface.
pub fn detection_delay_s(k: usize, slots: usize, t_sig_s: f64, phi: f64) -> f64 {
    assert!(k >= 1 && slots >= 1);
    assert!(t_sig_s > 0.0);
    assert!(phi > 0.0 && phi <= 1.0, "resource fraction must lie in (0,1]");
    k as f64 * slots as f64 * t_sig_s / phi
}

/// A signaling duty cycle: φ = T_sig/T_per.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadPoint {
    pub phi: f64,
    pub t_sig_s: f64,
    pub t_per_s: f64,
}

impl OverheadPoint {
    pub fn new(t_sig_s: f64, t_per_s: f64) -> Self {
        assert!(t_sig_s > 0.0 && t_per_s >= t_sig_s, "period must hold the signal");
        OverheadPoint { phi: t_sig_s / t_per_s, t_sig_s, t_per_s }
    }
}

/// Uplink overhead of RA reception with an analog BS front end: the whole
/// band is reserved during the RA slot, so only the time share matters.
pub fn ra_overhead_analog(t_sig_s: f64, t_per_s: f64) -> f64 {
    OverheadPoint::new(t_sig_s, t_per_s).phi
}

/// Uplink overhead of RA reception with a fully digital BS front end: the RA
/// signals occupy N_div subsignal bands totalling N_div·W_sig, so the time
/// share is scaled by that fraction of W_tot.
pub fn ra_overhead_digital(
    t_sig_s: f64,
    t_per_s: f64,
    n_div: usize,
    w_sig_hz: f64,
    w_tot_hz: f64,
) -> f64 {
    assert!(n_div >= 1 && w_sig_hz > 0.0);
    assert!(w_tot_hz >= n_div as f64 * w_sig_hz, "subsignals must fit in the band");
    (n_div as f64 * w_sig_hz / w_tot_hz) * ra_overhead_analog(t_sig_s, t_per_s)
}

/// The digital RA overhead counting a single subsignal band instead of all
/// N_div of them. Kept alongside [`ra_overhead_digital`] because the
/// single-band form appears in print even where the setup places the RA
/// signal on N_div bands; use this to reproduce that accounting.
pub fn ra_overhead_digital_single_band(
    t_sig_s: f64,
    t_per_s: f64,
    w_sig_hz: f64,
    w_tot_hz: f64,
) -> f64 {
    ra_overhead_digital(t_sig_s, t_per_s, 1, w_sig_hz, w_tot_hz)
}

/// Inputs to the sync-delay lower bound.
#[derive(Debug, Clone, Copy)]
pub struct DelayBoundParams {
    /// UE array gain (and sweep length, when its front end is analog).
    pub g_rx: f64,
    /// BS array gain available to the link budget.
    pub g_tx: f64,
    /// BS gain actually used by the sync transmission: 1 when the BS sends
    /// omnidirectionally, `g_tx` when it sweeps directionally.
    pub g_tx_sync: f64,
    /// Accumulated post-combining SNR the detector needs (linear).
    pub gamma_sig: f64,
    /// Omnidirectional per-sample SNR at the operating point (linear).
    pub gamma_tgt: f64,
    pub w_tot_hz: f64,
    /// Shortest usable signal duration per direction.
    pub t_sig_min_s: f64,
    /// Air-interface fraction granted to scanning.
    pub phi: f64,
}

impl DelayBoundParams {
    fn validate(&self) {
        assert!(self.g_rx >= 1.0 && self.g_tx >= 1.0);
        assert!(
            self.g_tx_sync == 1.0 || self.g_tx_sync == self.g_tx,
            "sync TX gain is either omni (1) or the full array ({})",
            self.g_tx
        );
        assert!(self.gamma_sig > 0.0 && self.gamma_tgt > 0.0);
        assert!(self.w_tot_hz > 0.0 && self.t_sig_min_s > 0.0);
        assert!(self.phi > 0.0 && self.phi <= 1.0);
    }
}

/// Lower bound on sync delay with an analog UE front end:
///
/// D ≥ (G_rx/φ) · max{ γ_sig·G_tx/(γ_tgt·W_tot), G_tx^sync·T_sig_min }.
///
/// The first term is the energy-limited regime, linear in the combined gain
/// G_rx·G_tx — narrower beams mean proportionally longer scans, and because
/// directional transmission trades its gain against sweep count one-for-one,
/// the bound is the same whether the BS sweeps or sends omni. The second
/// term is the duration floor: each of the G_tx^sync·G_rx dwells must last a
/// usable signal length, so there omni transmission *does* win.
pub fn sync_delay_bound_analog(p: &DelayBoundParams) -> f64 {
    p.validate();
    let energy = p.gamma_sig * p.g_tx / (p.gamma_tgt * p.w_tot_hz);
    p.g_rx / p.phi * energy.max(p.g_tx_sync * p.t_sig_min_s)
}

/// Lower bound on sync delay with a fully digital UE front end: all RX
/// directions are formed from one capture, removing the G_rx sweep factor —
/// exactly a factor G_rx below the analog bound in both regimes.
pub fn sync_delay_bound_digital(p: &DelayBoundParams) -> f64 {
    p.validate();
    sync_delay_bound_analog(p) / p.g_rx
}
