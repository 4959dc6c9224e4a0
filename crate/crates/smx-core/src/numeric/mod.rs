//! Numeric backend in the Euclidean convention X = |x|^2, M = 1.
//!
//! Pairs expressions against radial test functions by quadrature, moving
//! markers onto the test side by parts, and drives three protocols on top:
//! infrared cutoff limits, scaling-profile fits, and recovery of expansion
//! coefficients from mass samples. Everything is deterministic: the same
//! inputs produce byte-identical reports.

pub mod jet;
pub mod pairing;
pub mod protocols;
pub mod quad;
pub mod testfn;

pub use pairing::{pair_numeric, sphere_area, PairingReport};
pub use protocols::{
    direct_limit_check, mass_grid, scaling_fit, sm_extract_from_samples, DirectLimitReport,
    ScalingFitReport, SmExtractReport, SmFitEntry,
};
pub use quad::{integrate, QuadResult};
pub use testfn::{TestFamily, TestFunction};
