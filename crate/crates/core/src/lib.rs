//! Bregman distances, Bregman projections onto affine subspaces, Bregman
//! (pseudo-)circumcenters and the forward Bregman circumcenter method.
//!
//! Everything is finite dimensional. Points are [`nalgebra::DVector<f64>`]
//! values and the three supported Legendre functions are separable, so
//! Hessians are diagonal and domains are products of intervals.
//!
//! The crate is organised bottom-up:
//!
//! - [`legendre`]: Legendre functions, the Bregman distance and its
//!   extended-real value type.
//! - [`affine`]: affine hulls, orthogonal projections onto affine subspaces.
//! - [`projections`]: backward and forward Bregman projections onto affine
//!   subspaces (damped Newton).
//! - [`circumcenter`]: equidistance sets, the four (pseudo-)circumcenter
//!   operators and the circumcenter mapping induced by an operator family.
//! - [`operators`]: concrete operator families with analytic fixed sets,
//!   isometry and demiclosedness diagnostics.
//! - [`method`]: the iteration `x_{k+1} = CC_S(x_k)` and its convergence
//!   diagnostics.
//! - [`suite`]: a seeded, deterministic invariant suite over all of the above.

pub mod affine;
pub mod circumcenter;
pub mod error;
pub mod extended;
pub mod legendre;
pub mod method;
pub mod operators;
pub mod projections;
mod solver;
pub mod suite;

pub use affine::{affine_hull, euclidean_project, is_affinely_independent, AffineSubspace, PointSet};
pub use circumcenter::{
    backward_circumcenter, backward_circumcenter_via_projection, backward_pseudo_circumcenter,
    circumcenter_mapping, equidistance_residual_forward, forward_circumcenter,
    forward_circumcenter_via_projection, forward_pseudo_circumcenter, in_backward_equidistance_set,
    in_forward_equidistance_set, CircumcenterConfig, CircumcenterResult, CircumcenterStatus,
    EquidistanceSystem,
};
pub use error::{Error, Result};
pub use extended::ExtendedReal;
pub use legendre::{bregman_distance, gradient_monotonicity_gap, LegendreFunction, LegendreKind};
pub use method::{
    check_forward_monotone, check_inner_product_limit, check_step_summable, run, IterationTrace,
    MethodConfig, TraceStatus,
};
pub use operators::{
    demiclosedness_profile, isometry_gap, FixedSet, OperatorFamily, OperatorKind, OperatorSpec,
};
pub use projections::{
    backward_project_affine, forward_project_affine, pythagoras_residual, ProjectionResult,
    ProjectionStatus, SolverConfig,
};

/// A point of `R^n`.
pub type Point = nalgebra::DVector<f64>;

/// Default interior margin used for `int dom f` membership.
pub const DEFAULT_MARGIN: f64 = 1e-12;

/// Max norm that is zero for empty vectors.
pub(crate) fn inf_norm(v: &nalgebra::DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
