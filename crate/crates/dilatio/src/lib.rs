//! Numerical toolkit for dilation-type functional inequalities on
//! symmetric convex sets: bodies with gauges, measures with densities,
//! quasi-convex test functions with their dilation derivative, and
//! estimators/verifiers for entropy, isoperimetric, moment, and
//! transport-style bounds.

pub mod budget;
pub mod error;
pub mod estimators;
pub mod functions;
pub mod geometry;
pub mod measures;
pub mod quad;
pub mod verifiers;

pub use budget::{Estimate, EstimationBudget, Method};
pub use error::{DilatioError, Result};
pub use estimators::{
    coarea_integral, dilation_area, dilation_ladder, entropy, entropy_dual_lower_bound,
    fisher_information, levy_mean, lp_norm, one_sided_interval_dilation_area, orlicz_norm,
    perimeter, surface_moment_integral, w2_distance_1d, CoareaSign, OrliczEstimate,
};
pub use functions::{
    default_ladder, qc_membership_check, quasiconvexity_audit, AuditReport, AuditWitness,
    EvalGrad, MembershipReport, QcFunction, QcKind, Smoothness, VectorField,
};
pub use geometry::{BoundaryElement, SymmetricConvexBody};
pub use measures::{
    normal_cdf, normal_pdf, normal_quantile, KappaClaim, Measure, MeasureKind, ScalarField,
};
pub use verifiers::{
    check_coarea, check_dilation, check_entropy_bounds, check_gaussian_suite, check_isoperimetry,
    check_lsi, check_moment_suite, check_negative_suite, check_stability, reconstruct_dilation,
    sharpness_probes, CheckResult, CheckStatus, EntropyVariant, LsiVariant, ReconstructionRow,
    StabilityMode,
};
