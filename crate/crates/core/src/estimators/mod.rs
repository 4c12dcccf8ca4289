//! Monte Carlo studies built on the passage and circuit machinery.

mod arms;
mod char_sums;
mod circuit_study;
mod martingale;
mod passage_studies;
mod report;
pub mod stats;

pub use arms::{arm_event, arm_ordering, arm_report, arm_sample, arm_samples, parse_sigma, ArmEventSpec, Geometry};
pub use char_sums::{char_sums, CharSums};
pub use circuit_study::{
    annulus_count_tail, hierarchy_report, hierarchy_sample, hierarchy_samples, open_circuit_probability, proximity_report,
    proximity_sample, square_count_sample, square_count_samples, tail_fit, HierarchySample, ProximitySample, SquareSample,
};
pub use martingale::{
    fourth_moment_ratio, martingale_estimate, martingale_report, martingale_sample, martingale_samples, outer_chain,
    y_tilde_report, y_tilde_sample, y_tilde_samples, ChainOptions, MartingaleEstimate, MartingaleSample, YTildeSample,
    DEFAULT_MAX_RADIUS,
};
pub use passage_studies::{
    check_ladder, coupling_gap_report, duality_report, duality_sample, duality_samples, passage_sample, passage_samples,
    slope_agreement, time_constant_report, variance_constant_report, DualitySample, LadderOptions, PassageSample,
    TIME_CONSTANT_FACTOR, VARIANCE_FACTOR,
};
pub use report::{Check, EstimatorReport, Regression, ScaleRecord, Target};
