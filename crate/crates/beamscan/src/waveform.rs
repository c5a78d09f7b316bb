//! Subsignal generation and received-signal synthesis.
//!
//! Each sync/RA transmission carries N_div narrowband subsignals on separate
//! frequencies; a subsignal occupies M ≈ T_sig·W_sig orthogonal degrees of
//! freedom and is represented directly as a complex M-vector (the OFDM
//! mapping underneath is irrelevant to detection performance). Waveforms are
//! unit-modulus pseudo-random phase sequences known to the receiver, keyed by
//! (waveform index, subsignal), so ‖s‖² = M exactly.
//!
//! The post-beamforming observation in cycle k, transmission ℓ, subsignal d
//! is r = ψ_{kd}·δ_{ℓ,ℓ₀}·s_{d} + w with white complex Gaussian noise w of
//! per-sample variance τ. The per-subsignal SNR handed to synthesis is
//! E|ψ|²/τ; the matched filter later concentrates M·SNR of it.

use crate::channel::{cn01, ChannelRealization};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WaveformError {
    #[error("a subsignal needs M >= 2 degrees of freedom (one for noise estimation), got {0}")]
    TooFewDof(usize),
}

/// The known transmit subsignals of one waveform index.
#[derive(Debug, Clone)]
pub struct SubsignalSet {
    pub m: usize,
    pub n_div: usize,
    pub waveform_index: usize,
    /// s indexed [subsignal][sample]; identical across transmissions ℓ.
    pub s: Vec<Vec<Complex64>>,
}

/// Deterministic unit-modulus subsignals for one waveform index.
///
/// Phases come from a ChaCha stream keyed by (seed, waveform index, d), so
/// the same key always yields the same vectors and distinct keys decorrelate.
pub fn make_subsignals(
    m: usize,
    n_div: usize,
    waveform_index: usize,
    seed: u64,
) -> Result<SubsignalSet, WaveformError> {
    if m < 2 {
        return Err(WaveformError::TooFewDof(m));
    }
    let mut s = Vec::with_capacity(n_div);
    for d in 0..n_div {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5761_7665_666f_726d);
        rng.set_stream(((waveform_index as u64) << 32) | d as u64);
        let v = (0..m)
            .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
            .collect();
        s.push(v);
    }
    Ok(SubsignalSet { m, n_div, waveform_index, s })
}

/// Received observations for K cycles × `hypotheses` directions × N_div
/// subsignals, each an M-vector, plus the noise variance used in synthesis.
#[derive(Debug, Clone)]
pub struct ReceivedBatch {
    pub k: usize,
    pub l: usize,
    pub n_div: usize,
    pub m: usize,
    /// r indexed [cycle][direction][subsignal][sample].
    pub r: Vec<Vec<Vec<Vec<Complex64>>>>,
    pub tau: f64,
}

/// Synthesize a received batch over `l` direction hypotheses.
///
/// `snr_per_subsignal` sets E|gain|²/τ on the aligned hypothesis (τ is fixed
/// at 1; the detector is scale-invariant anyway). `signal_present = false`
/// forces the gain to zero everywhere — the H₀ batch.
pub fn synthesize_received<R: Rng + ?Sized>(
    signals: &SubsignalSet,
    channel: &ChannelRealization,
    l: usize,
    k: usize,
    snr_per_subsignal: f64,
    signal_present: bool,
    rng: &mut R,
) -> ReceivedBatch {
    assert!(snr_per_subsignal >= 0.0);
    let m = signals.m;
    let n_div = signals.n_div;
    let tau = 1.0;
    let amp = (snr_per_subsignal * tau).sqrt();
    let mut r = Vec::with_capacity(k);
    for ki in 0..k {
        let mut per_l = Vec::with_capacity(l);
        for li in 0..l {
            let mut per_d = Vec::with_capacity(n_div);
            for d in 0..n_div {
                let gain = if signal_present {
                    channel.gain(ki, li, d) * amp
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let s = &signals.s[d];
                let v: Vec<Complex64> = (0..m)
                    .map(|i| {
                        let noise = cn01(rng) * tau.sqrt();
                        gain * s[i] + noise
                    })
                    .collect();
                per_d.push(v);
            }
            per_l.push(per_d);
        }
        r.push(per_l);
    }
    ReceivedBatch { k, l, n_div, m, r, tau }
}
