//! Symbolic and numeric engine for scaling-and-mass expansions of
//! propagator-type distributions.
//!
//! The core objects are exact expressions in rotation/Lorentz invariants
//! `X_g` of variable groups, logs, mass factors and delta counterterms
//! ([`expr`]), the expansion tables built from them ([`smx`]), the extension
//! methods that renormalize singular coefficients ([`extension`]), an
//! analytically regularized variant ([`dimreg`]), ready-made model pipelines
//! ([`models`]) and a quadrature backend that cross-checks the symbolic
//! results ([`numeric`]).

pub mod coeff;
pub mod dimreg;
pub mod error;
pub mod expr;
pub mod extension;
pub mod json;
pub mod linform;
pub mod models;
pub mod numeric;
pub mod poly;
pub mod rat;
pub mod scaling;
pub mod smx;

pub use coeff::Coeff;
pub use dimreg::{
    reg_box, reg_check, reg_product_sm, reg_project_coeff, reg_propagator, LineIndexing,
    LineSlot, RegBinKey, RegCheckReport, RegFactor, RegSmExpansion,
};
pub use error::{Error, Result};
pub use expr::calculus::{
    apply_box, apply_box_pow, apply_euler, euler_shift_pow, mass_dimension, moment_div_reduce,
    restrict_away,
};
pub use expr::fields::{pairing_count, submonomials, FieldKey, FieldMonomial};
pub use extension::{
    counterterm_basis, diff_renorm_extend, direct_extend, extend_row, extend_sm,
    homogeneous_extend, invariant_delta_ops, laurent_expand, minimal_subtract,
    moment_certificate, moment_solver, regularized_extend, specialize_moments, CtFlags,
    ExtendedSm, ExtensionMethod, ExtensionResult, LaurentSeries, MomentSolution, RowExtension,
};
pub use expr::{DeltaOp, Expr, Factor, Group, GroupPows, MetricConvention, Monomial, Term};
pub use linform::LinForm;
pub use models::{
    hadamard_split_check, propagator_sm, renorm_freedom_scan, setting_sun_hat_pipeline,
    setting_sun_pipeline, setting_sun_pipeline_at, table_mu_to_mass, two_vertex_vev,
    two_vertex_vev_table, with_symbolic_constants, FreedomEntry, FreedomReport,
    HadamardSplitReport, HatPipeline, HatRow, Normalization, PropagatorKind, PropagatorModel,
    SettingSunPipeline,
};
pub use numeric::{
    direct_limit_check, mass_grid, pair_numeric, scaling_fit, sm_extract_from_samples,
    DirectLimitReport, PairingReport, ScalingFitReport, SmExtractReport, SmFitEntry, TestFamily,
    TestFunction,
};
pub use poly::CoeffPoly;
pub use rat::Rat;
pub use scaling::{
    extension_markers_wellformed, homogeneity_analyze, homogeneity_analyze_capped, scaling_degree,
    HomogeneityReport, ScalingDegree,
};
pub use smx::{
    propagator_table, sm_check, sm_derivative_box, sm_joint_scaling_order, sm_power, sm_product,
    sm_remainder_bound, RemainderMeta, SmCheckReport, SmExpansion, SmRow,
};
