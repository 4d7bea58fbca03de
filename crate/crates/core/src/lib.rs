//! Dynamic-path mediation analysis for survival outcomes with a repeatedly
//! measured mediator, under Aalen's additive hazards model.
//!
//! The pipeline is: ingest a cohort ([`ingest`]), fit the additive hazard
//! ([`aalen`]) and the per-visit mediator regressions ([`mediator`]), combine
//! them into cumulative direct/indirect/total effects ([`effects`]) and attach
//! percentile bands ([`bootstrap`]). [`simulate`] provides the generative
//! model and exact/Monte-Carlo oracles used for validation.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aalen;
pub mod bootstrap;
pub mod data;
pub mod effects;
pub mod error;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod mediator;
pub mod simulate;
pub mod step;

pub use aalen::{fit_additive, fit_additive_with, nelson_aalen, CumulativeCoefficients, Terms};
pub use bootstrap::{bootstrap_bands, Band, BootstrapBands, BootstrapConfig};
pub use data::{mediator_index, risk_set, Cohort, Dataset, Schedule, SubjectRecord};
pub use effects::{
    correct_measurement_error, cumulative_effects, survival_effects, Contrast, EffectCurves,
    SurvivalEffects,
};
pub use error::{Error, Result};
pub use ingest::{load_dataset, load_dir, write_dataset, GapMode, IngestConfig};
pub use mediator::{
    fit_marginal, fit_sequential, gamma_from_structural, MediatorCoefficients,
    StructuralCoefficients,
};
pub use simulate::{
    add_noise, closed_form_effects, mc_effects, mc_survival, simulate_cohort, Regime,
    SimulationParams,
};
pub use step::{eval_step, StepFunction};
