//! Worked applications of the welfare criteria and the impossibility
//! demonstrations, each a thin layer over the library modules.

pub mod demos;
pub mod ellsberg;
pub mod estimation;
pub mod james_stein;
pub mod pricing;
pub mod treatment;

pub use demos::{demo_dictator, demo_invariance, monotone_acts, DictatorReport, InvarianceReport};
pub use ellsberg::{ellsberg_run, EllsbergReport};
pub use estimation::{
    estimate_curvature, estimate_parameters, forward_model, Estimates, EstimationInput, TrueParameters,
};
pub use james_stein::{james_stein_closed_form, james_stein_weights, james_stein_wle};
pub use pricing::{asdf, sdf_project, AsdfResult, SdfProjection};
pub use treatment::{treatment_foc_root, treatment_solve, TreatmentResult, WelfareTable, BASELINE_WELFARE};
