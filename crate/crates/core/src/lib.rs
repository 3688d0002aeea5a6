//! Capacities, bounds and degradability certificates for the flagged
//! depolarizing channel.
//!
//! Conventions used throughout:
//! - logarithms are base 2 (bits/qubits);
//! - tensor factors are ordered with the first listed factor varying slowest;
//! - Choi matrices are normalized, `J = (ch (x) id)(|Phi><Phi|)` with unit trace,
//!   output factor first.

pub mod bounds;
pub mod capacity;
pub mod certify;
pub mod channel;
pub mod error;
pub mod linalg;

pub use bounds::{
    bounds_table, composite_bound, convex_envelope, gap_table, sample_bounds, uniform_grid,
    BoundCurve, BoundsRow, Envelope, GapRow,
};
pub use capacity::{
    c1_capacity, c_threshold, ce_capacity, degrading_params, delta_gap, f1_bound, f2_bound,
    q_fdc, q_fdc_via_t, q_lower, q_pure_flag, t_entropy, BoundName, BoundValue, DegradingParams,
    FlagPair,
};
pub use certify::{
    coherent_information, cross_check_t, haar_ensemble, holevo_chi, maximize_coherent_info,
    maximize_mutual_info, mutual_information, verify_covariance, verify_degradability,
    verify_degradability_capped, DegradabilityCertificate, OptimizationReport,
};
pub use channel::{
    degrading_map, fdc_complementary_explicit, is_cptp, make_depolarizing, make_fdc,
    make_pure_flag_fdc, ChoiMatrix, CptpReport, Factor, FdcParams, KrausChannel,
};
pub use error::{Error, Result};
pub use linalg::{von_neumann_entropy, DensityOperator, Tolerances};
