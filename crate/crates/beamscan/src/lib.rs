//! Link-level simulator and analysis toolkit for directional initial access
//! in millimeter-wave cellular systems.
//!
//! The crate models the two first steps of initial access — downlink
//! synchronization and uplink random access — for five beamforming design
//! options (DDO, DDD, ODD, ODDig, ODigDig) that combine omni/directional
//! transmission with analog or fully digital reception. It provides:
//!
//! * uniform planar array codebooks and per-option scan schedules ([`beamspace`]),
//! * pathloss/shadowing link budgets and channel realizations ([`channel`]),
//! * subsignal generation and received-batch synthesis ([`waveform`]),
//! * the GLRT matched-filter detector ([`detector`]),
//! * low-resolution ADC effective-SNR modeling ([`quantization`]),
//! * false-alarm budgeting and Monte Carlo threshold calibration ([`calibration`]),
//! * overhead/delay relations and delay lower bounds ([`delay`]),
//! * and Monte Carlo experiment drivers with CSV output ([`experiments`]).
//!
//! Everything is deterministic given a master seed: per-trial RNG streams are
//! derived from (seed, point, trial), so parallel and serial runs agree bit
//! for bit.

pub mod beamspace;
pub mod calibration;
pub mod channel;
pub mod delay;
pub mod detector;
pub mod experiments;
pub mod quantization;
pub mod waveform;

pub use beamspace::{ArrayGeometry, BeamCodebook, DesignOption, Phase, ScanSchedule};
pub use calibration::{HypothesisBudget, ThresholdCache, ThresholdFit};
pub use channel::{ChannelRealization, LinkBudget, LinkDirection, LinkState, PathlossParams};
pub use detector::{CorrelationTensor, Decision, DetectionOutcome};
pub use experiments::{DelayCurve, ExperimentConfig, PmdPoint};
pub use quantization::QuantizerModel;
pub use waveform::{ReceivedBatch, SubsignalSet};
