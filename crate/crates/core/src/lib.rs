//! Outage and diversity-multiplexing tradeoff (DMT) simulation for a
//! two-source, N-relay, two-destination Rayleigh-fading network.
//!
//! The crate compares *active* physical-layer network coding, where relays
//! always amplify-and-forward the superposed source signals and each
//! destination cancels whatever interference it overheard correctly,
//! against multihop routing, digital network coding and conventional PNC.
//!
//! - [`fading`]: channel realizations and exponential-order diagnostics
//! - [`strategy`]: per-realization outage predicates
//! - [`analytic`]: closed-form DMT lines
//! - [`montecarlo`]: reproducible outage estimation over SNR sweeps
//! - [`estimator`]: slope fits that recover diversity orders

pub mod analytic;
pub mod error;
pub mod estimator;
pub mod fading;
pub mod montecarlo;
pub mod strategy;

pub use analytic::{
    combine_dmt, dmt_active_pnc, dmt_baseline, dmt_known_event, dmt_known_part, dmt_unknown_part, BaselineKind,
    DmtLine,
};
pub use error::{ApncError, Result};
pub use estimator::{compare_to_line, fit_diversity, DiversityEstimate, FitOptions, LineComparison};
pub use fading::{
    empirical_exponential_order, order_statistics, sample_realization, sample_realization_with_variance,
    ChannelRealization, ComplexGain, ExponentialOrderSample, LinkLabel, SnrPoint, Terminal, TrialStream,
};
pub use montecarlo::{
    derive_point_seed, estimate_outage, snr_grid_db, sweep, OutageEstimate, OutageEvent, RateLaw, Scenario,
    SeedRecord, StopRule, SweepRow, SweepSpec, BLOCK_TRIALS,
};
pub use strategy::{
    cross_mi_treating_interference_as_noise, evaluate, evaluate_active_pnc, evaluate_dnc, evaluate_multihop,
    evaluate_pnc, evaluate_single_link, known_part_mi, normalization_factors, CombinerModel, ModelOptions,
    MultiplexingPoint, NoiseModel, NormalizationFactors, OutageVerdict, RatePartition, Strategy, Targets,
};
