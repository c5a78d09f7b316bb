//! GLRT detection over a scanned set of direction hypotheses.
//!
//! For each cycle k, hypothesis ℓ, subsignal d the detector forms the cosine
//! correlation ρ = |s*r|²/(‖s‖²‖r‖²) between the known subsignal and the
//! observation. Directions collapse to ℓ̂₀ = argmin_ℓ Σ_{k,d} ln(1−ρ_{kℓd}),
//! and the accumulated statistic
//!
//! T = −M · Σ_{k,d} ln(1 − ρ_{k ℓ̂₀ d})
//!
//! is compared against a calibrated threshold: the signal is declared present
//! iff T ≥ t. ρ is noncentral-Beta distributed; under noise alone
//! ρ ~ Beta(1, M−1) per branch, which is what threshold calibration exploits.
//!
//! T is invariant to scaling of r (receivers need no AGC-accurate absolute
//! level) and ≥ 0 by construction. Ties in the argmin resolve to the lowest
//! index so reruns are bit-stable.

use crate::waveform::{ReceivedBatch, SubsignalSet};
use num_complex::Complex64;
use thiserror::Error;

/// ρ is clamped below 1 by this margin so ln(1−ρ) stays finite even for a
/// noiseless aligned observation.
const RHO_CEIL: f64 = 1.0 - 1e-12;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("cosine correlation against a zero-norm vector")]
    ZeroNorm,
}

/// Normalized matched-filter output ρ = |s*r|² / (‖s‖²‖r‖²) ∈ [0, 1−1e-12].
pub fn correlation(s: &[Complex64], r: &[Complex64]) -> Result<f64, DetectorError> {
    assert_eq!(s.len(), r.len(), "correlation needs equal-length vectors");
    let mut inner = Complex64::new(0.0, 0.0);
    let mut s2 = 0.0;
    let mut r2 = 0.0;
    for (si, ri) in s.iter().zip(r) {
        inner += si.conj() * ri;
        s2 += si.norm_sqr();
        r2 += ri.norm_sqr();
    }
    if s2 == 0.0 || r2 == 0.0 {
        return Err(DetectorError::ZeroNorm);
    }
    Ok((inner.norm_sqr() / (s2 * r2)).min(RHO_CEIL))
}

/// All per-(cycle, hypothesis, subsignal) correlations of a received batch,
/// plus the per-subsignal dimension M that scales the GLRT statistic.
#[derive(Debug, Clone)]
pub struct CorrelationTensor {
    pub k: usize,
    pub l: usize,
    pub n_div: usize,
    pub m: usize,
    /// ρ indexed [cycle][hypothesis][subsignal].
    pub rho: Vec<Vec<Vec<f64>>>,
}

/// Correlate a received batch against the known subsignals.
pub fn correlate_batch(
    signals: &SubsignalSet,
    batch: &ReceivedBatch,
) -> Result<CorrelationTensor, DetectorError> {
    assert_eq!(signals.m, batch.m, "subsignal/batch dimension mismatch");
    assert_eq!(signals.n_div, batch.n_div, "subsignal/batch diversity mismatch");
    let mut rho = Vec::with_capacity(batch.k);
    for per_l in &batch.r {
        let mut rk = Vec::with_capacity(batch.l);
        for per_d in per_l {
            let mut rl = Vec::with_capacity(batch.n_div);
            for (d, r) in per_d.iter().enumerate() {
                rl.push(correlation(&signals.s[d], r)?);
            }
            rk.push(rl);
        }
        rho.push(rk);
    }
    Ok(CorrelationTensor { k: batch.k, l: batch.l, n_div: batch.n_div, m: batch.m, rho })
}

/// Per-hypothesis statistics g_ℓ = −M · Σ_{k,d} ln(1−ρ_{kℓd}).
pub fn direction_statistics(corr: &CorrelationTensor) -> Vec<f64> {
    let m = corr.m as f64;
    (0..corr.l)
        .map(|l| {
            let mut sum = 0.0;
            for k in 0..corr.k {
                for d in 0..corr.n_div {
                    sum += (-corr.rho[k][l][d]).ln_1p();
                }
            }
            -m * sum
        })
        .collect()
}

/// Direction estimate and its GLRT statistic: ℓ̂₀ maximizes g_ℓ (equivalently
/// minimizes Σ ln(1−ρ)), ties going to the lowest index.
pub fn glrt(corr: &CorrelationTensor) -> (usize, f64) {
    assert!(corr.l > 0, "GLRT needs at least one hypothesis");
    let g = direction_statistics(corr);
    let mut l_hat = 0;
    for (l, &gl) in g.iter().enumerate() {
        if gl > g[l_hat] {
            l_hat = l;
        }
    }
    (l_hat, g[l_hat])
}

/// Presence decision with the direction estimate that produced it. The
/// estimate is reported even on `Absent` — it is what the receiver would have
/// used, and misdetection accounting needs it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Present { l_hat: usize, statistic: f64 },
    Absent { l_hat: usize, statistic: f64 },
}

impl Decision {
    pub fn is_present(&self) -> bool {
        matches!(self, Decision::Present { .. })
    }

    pub fn l_hat(&self) -> usize {
        match self {
            Decision::Present { l_hat, .. } | Decision::Absent { l_hat, .. } => *l_hat,
        }
    }

    pub fn statistic(&self) -> f64 {
        match self {
            Decision::Present { statistic, .. } | Decision::Absent { statistic, .. } => *statistic,
        }
    }
}

/// Threshold test, boundary inclusive: present iff T ≥ t.
pub fn decide(corr: &CorrelationTensor, threshold: f64) -> Decision {
    let (l_hat, statistic) = glrt(corr);
    if statistic >= threshold {
        Decision::Present { l_hat, statistic }
    } else {
        Decision::Absent { l_hat, statistic }
    }
}

/// A decision scored against ground truth. A trial counts as misdetected when
/// the signal was there but the receiver either declared absence or locked
/// onto the wrong direction — both leave the link unusable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOutcome {
    /// Present declared, direction correct.
    Detected,
    /// Present declared, direction wrong.
    WrongDirection,
    /// Signal was there, declared absent.
    Missed,
    /// Nothing was there, declared present.
    FalseAlarm,
    /// Nothing was there, declared absent.
    Rejected,
}

impl DetectionOutcome {
    /// Score `decision` against the true direction (`None` = no signal).
    pub fn score(decision: Decision, truth: Option<usize>) -> Self {
        match (truth, decision) {
            (Some(l0), Decision::Present { l_hat, .. }) if l_hat == l0 => Self::Detected,
            (Some(_), Decision::Present { .. }) => Self::WrongDirection,
            (Some(_), Decision::Absent { .. }) => Self::Missed,
            (None, Decision::Present { .. }) => Self::FalseAlarm,
            (None, Decision::Absent { .. }) => Self::Rejected,
        }
    }

    pub fn is_misdetection(&self) -> bool {
        matches!(self, Self::WrongDirection | Self::Missed)
    }

    pub fn is_false_alarm(&self) -> bool {
        matches!(self, Self::FalseAlarm)
    }
}
