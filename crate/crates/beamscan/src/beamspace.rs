//! Uniform planar array geometry, beamspace codebooks, and scan schedules.
//!
//! Both ends of the link use 2D uniform planar arrays (UPAs). Scanning works
//! over the *beamspace*: the N orthogonal directions of an N-element array,
//! realized here as the 2D-DFT basis (Kronecker product of the row and column
//! Fourier bases). Each design option and phase determines how many
//! transmissions L one scan cycle needs and which TX/RX beam pair each
//! transmission uses; a fully digital receiver observes all of its beamspace
//! directions in every transmission, so its side contributes a factor 1 to L.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Rows × cols uniform planar array with element spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths (default one half).
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "array needs at least one element");
        ArrayGeometry { rows, cols, spacing: 0.5 }
    }

    /// Total element count N = rows · cols.
    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// Array response for a plane wave from (azimuth, elevation), unit norm,
/// reference element at phase zero.
///
/// Element (r, c) sits at (r, c)·spacing wavelengths; its phase is
/// 2π·spacing·(r·sin(el) + c·cos(el)·sin(az)).
pub fn upa_steering(geom: &ArrayGeometry, azimuth: f64, elevation: f64) -> Vec<Complex64> {
    let n = geom.elements();
    let scale = 1.0 / (n as f64).sqrt();
    let kr = 2.0 * PI * geom.spacing * elevation.sin();
    let kc = 2.0 * PI * geom.spacing * elevation.cos() * azimuth.sin();
    let mut v = Vec::with_capacity(n);
    for r in 0..geom.rows {
        for c in 0..geom.cols {
            let phase = kr * r as f64 + kc * c as f64;
            v.push(Complex64::from_polar(scale, phase));
        }
    }
    v
}

/// Orthonormal beamspace codebook for a UPA: the N Kronecker-DFT vectors.
#[derive(Debug, Clone)]
pub struct BeamCodebook {
    pub geometry: ArrayGeometry,
    /// N unit-norm vectors of length N, row-major over (row bin, col bin).
    pub vectors: Vec<Vec<Complex64>>,
}

/// 2D-DFT beamspace codebook of `geom`: vector (p, q) has element (r, c)
/// value exp(2πi(rp/R + cq/C))/√N. The stacked matrix is unitary.
pub fn beamspace_codebook(geom: &ArrayGeometry) -> BeamCodebook {
    let (rows, cols) = (geom.rows, geom.cols);
    let n = geom.elements();
    let scale = 1.0 / (n as f64).sqrt();
    let mut vectors = Vec::with_capacity(n);
    for p in 0..rows {
        for q in 0..cols {
            let mut v = Vec::with_capacity(n);
            for r in 0..rows {
                for c in 0..cols {
                    let phase = 2.0 * PI
                        * (r as f64 * p as f64 / rows as f64
                            + c as f64 * q as f64 / cols as f64);
                    v.push(Complex64::from_polar(scale, phase));
                }
            }
            vectors.push(v);
        }
    }
    BeamCodebook { geometry: *geom, vectors }
}

/// The five TX/RX architecture combinations for the two access phases.
///
/// First letter: BS sync transmission (Directional sweep or Omni). Second:
/// UE sync reception (Directional analog sweep or fully Digital). Third: BS
/// random-access reception (Omni, Directional analog sweep, or fully
/// Digital).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DesignOption {
    /// Directional sync TX, analog UE scan, omni RA reception.
    DDO,
    /// Directional sync TX, analog UE scan, analog BS RA scan.
    DDD,
    /// Omni sync TX, analog UE scan, analog BS RA scan.
    ODD,
    /// Omni sync TX, analog UE scan, digital BS RA reception.
    ODDig,
    /// Omni sync TX, digital UE reception, digital BS RA reception.
    ODigDig,
}

impl DesignOption {
    pub const ALL: [DesignOption; 5] = [
        DesignOption::DDO,
        DesignOption::DDD,
        DesignOption::ODD,
        DesignOption::ODDig,
        DesignOption::ODigDig,
    ];

    pub fn parse(tag: &str) -> Option<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "ddo" => Some(DesignOption::DDO),
            "ddd" => Some(DesignOption::DDD),
            "odd" => Some(DesignOption::ODD),
            "oddig" => Some(DesignOption::ODDig),
            "odigdig" => Some(DesignOption::ODigDig),
            _ => None,
        }
    }

    /// Directional sync transmission at the BS (the "D" first letter)?
    pub fn sync_tx_directional(&self) -> bool {
        matches!(self, DesignOption::DDO | DesignOption::DDD)
    }

    /// Fully digital UE front end during sync?
    pub fn ue_digital(&self) -> bool {
        matches!(self, DesignOption::ODigDig)
    }

    /// Fully digital BS front end during random access?
    pub fn bs_digital_ra(&self) -> bool {
        matches!(self, DesignOption::ODDig | DesignOption::ODigDig)
    }
}

impl fmt::Display for DesignOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            DesignOption::DDO => "DDO",
            DesignOption::DDD => "DDD",
            DesignOption::ODD => "ODD",
            DesignOption::ODDig => "ODDig",
            DesignOption::ODigDig => "ODigDig",
        };
        f.write_str(tag)
    }
}

/// Initial-access phase: downlink synchronization or uplink random access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Sync,
    Ra,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Sync => "sync",
            Phase::Ra => "ra",
        })
    }
}

/// One end of a scan-slot beam assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamUse {
    /// A specific beamspace index.
    Index(usize),
    /// No beamforming (single-element / isotropic port).
    Omni,
    /// Digital reception: all beamspace directions observed at once.
    All,
}

/// The L transmissions of one scan cycle with their TX/RX beam assignments.
#[derive(Debug, Clone)]
pub struct ScanSchedule {
    pub option: DesignOption,
    pub phase: Phase,
    /// Physical transmissions per scan cycle.
    pub len: usize,
    /// (tx, rx) assignment per transmission, row-major over (tx idx, rx idx).
    pub pairs: Vec<(BeamUse, BeamUse)>,
    /// Direction hypotheses the detector distinguishes per transmission set:
    /// `len` for analog sweeps, N_rx for a digital receiver, 1 for omni
    /// reception.
    pub hypotheses: usize,
}

impl ScanSchedule {
    /// Slots needed to cover all pairs with S parallel RF chains (a hybrid
    /// receiver sweeps ⌈L/S⌉ slots per cycle).
    pub fn slots_with_chains(&self, s: usize) -> usize {
        assert!(s >= 1);
        self.len.div_ceil(s)
    }
}

/// Build the scan schedule of a design option for one phase.
///
/// Sync: DDO/DDD sweep all N_bs·N_ue TX/RX pairs; ODD/ODDig sweep the N_ue
/// UE beams under omni TX; ODigDig needs a single omni transmission that the
/// digital UE observes through all its beams. RA: the UE transmits on its
/// learned beam; DDO listens omni (L = 1), DDD/ODD sweep the N_bs beams, and
/// the digital-BS options observe all N_bs directions in one slot.
pub fn scan_schedule(
    option: DesignOption,
    phase: Phase,
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
) -> ScanSchedule {
    let n_bs = bs.elements();
    let n_ue = ue.elements();
    let mut pairs = Vec::new();
    let hypotheses = match (phase, option) {
        (Phase::Sync, DesignOption::DDO | DesignOption::DDD) => {
            for t in 0..n_bs {
                for r in 0..n_ue {
                    pairs.push((BeamUse::Index(t), BeamUse::Index(r)));
                }
            }
            n_bs * n_ue
        }
        (Phase::Sync, DesignOption::ODD | DesignOption::ODDig) => {
            for r in 0..n_ue {
                pairs.push((BeamUse::Omni, BeamUse::Index(r)));
            }
            n_ue
        }
        (Phase::Sync, DesignOption::ODigDig) => {
            pairs.push((BeamUse::Omni, BeamUse::All));
            n_ue
        }
        (Phase::Ra, DesignOption::DDO) => {
            pairs.push((BeamUse::Index(0), BeamUse::Omni));
            1
        }
        (Phase::Ra, DesignOption::DDD | DesignOption::ODD) => {
            for r in 0..n_bs {
                pairs.push((BeamUse::Index(0), BeamUse::Index(r)));
            }
            n_bs
        }
        (Phase::Ra, DesignOption::ODDig | DesignOption::ODigDig) => {
            pairs.push((BeamUse::Index(0), BeamUse::All));
            n_bs
        }
    };
    ScanSchedule { option, phase, len: pairs.len(), pairs, hypotheses }
}
