//! Correlator estimates to entanglement statements: pair moments, error-rate
//! fits, entanglement-length bounds and experiment planning.

pub mod bounds;
pub mod decay;
pub mod moments;
pub mod planner;

use thiserror::Error;

use crate::template::{Family, TemplateError};

pub use bounds::{direct_bounds, indirect_bounds, BoundMethod, LeBoundRow, LeBoundTable, CONSERVATIVE_Z};
pub use decay::{
    decay_exponents, fit_error_model, predict_gamma, predict_gamma_with, xi_curve, xi_e, xi_e_with, xi_from_rates,
    DecayModel, DecayPoint, DropReason, DroppedPoint, ErrorModelFit, XiEstimate, XiGrid,
};
pub use moments::{
    binary_entropy, concurrence, eof, eof_from_concurrence, rho_tilde_eigenvalues, BellSpectrum, TwoQubitMoments,
    POSITIVITY_TOLERANCE,
};
pub use planner::{
    compact_instance_probability, instance_probability, max_direct_length, naive_tomography_k,
    optimal_instance_probability, optimal_pp, optimal_routing, Layout, DEFAULT_PHOTON_BUDGET,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("moment {0} outside [-1, 1]")]
    MomentOutOfRange(f64),
    #[error("no estimate for {family} at l = {l}")]
    MissingEstimate { family: Family, l: u32 },
    #[error("no instances of {family} at l = {l}")]
    NoInstances { family: Family, l: u32 },
    #[error("fit is rank deficient ({usable} usable points)")]
    RankDeficient { usable: usize },
    #[error("error rates p_sigma = {p_sigma}, p_zz = {p_zz} outside [0, 3/4] x [0, 1/2]")]
    InvalidRates { p_sigma: f64, p_zz: f64 },
    #[error("{name} = {value} is not a valid probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{family} cannot be measured with the {layout} layout")]
    InvalidLayout { family: Family, layout: planner::Layout },
    #[error(transparent)]
    Template(#[from] TemplateError),
}
