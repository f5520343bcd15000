//! Synthetic data generation and theory diagnostics.

mod design;
mod poisson;
mod theory;

pub use design::{
    generate_beta, generate_beta_placed, generate_design, generate_problem, poisson_rates,
    sample_counts, standardize, SupportPlacement,
};
pub use poisson::{sample_poisson, MAX_RATE};
pub use theory::{
    cone_constant, restricted_eigenvalue_estimate, verify_error_bound, BoundReport,
    TheoryConstants, CONE_SLACK,
};
