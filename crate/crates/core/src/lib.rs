//! Numerics for a one-dimensional diffusion whose drift and volatility switch
//! at a fixed threshold `a`.
//!
//! Covered: exit-time Laplace transforms, resolvent (potential) densities,
//! transition densities, the stationary law, numerical Laplace inversion,
//! Monte Carlo simulation, the bang-bang survival control problem, and a
//! built-in validation battery.

pub mod control;
pub mod density;
pub mod error;
pub mod exit;
pub mod format;
pub mod laplace;
pub mod params;
pub mod potential;
pub mod quad;
pub mod sim;
pub mod validation;

pub use error::{Error, Result};
pub use params::{h_kernel, h_laplace, DeltaSet, DiffusionParams, HArgs};
pub use quad::{convolve_h_pair, integrate_finite, integrate_semi_infinite, Estimate, QuadSettings};
pub use density::{
    density_jump_at_threshold, equal_sigma_density, is_time_reversible, oscillating_bm_density,
    stationary_density, threshold_limits, time_reversal_gap, transition_density, DensityQuery,
};
pub use exit::{g_minus, g_pair, g_plus, one_sided_down, one_sided_up, two_sided_exit, ExitQuery, GPair};
pub use potential::{potential_density, potential_q_to_zero_limit, PotentialQuery};
pub use laplace::{invert, invert_checked, Inversion, InversionSettings, Method, Transform};
pub use control::{
    alpha, optimal_threshold, optimal_volatility, value_function, Choice, ConstantPolicy,
    ControlProblem, OptimalPolicy, Policy, Switching,
};
pub use sim::{
    empirical_hitting_transform, simulate_coupled_halving, simulate_paths, simulate_policy, Bin,
    PathEnsemble, Scheme, SimConfig, Stat,
};
pub use validation::{run_validation, ValidationOptions, ValidationReport};
