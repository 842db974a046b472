//! Integrators for the full KSBM and its reduced models, plus regime detection.

mod ksbm;
mod ode;
mod reduced;
mod regimes;

pub use ksbm::{
    community_stats, integrate_full, integrate_stochastic, sample_frequencies, uniform_phases, GaussianState,
    KsbmParams, Trajectory,
};
pub use ode::TimeGrid;
pub use reduced::{
    dominated_fixed_point, epsilon_bound, integrate_gaussian_full, integrate_mean_field,
    integrate_variance_dominated, integrate_variance_dominated_identical, VarianceCurve,
};
pub use regimes::{
    detect_steady_state, predicted_transition_time, steady_state_deviation, transition_time, RegimeBoundaries,
};
