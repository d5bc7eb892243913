//! Damped Gauss-Newton over an affine parametrization `u = u_0 + B·α`,
//! shared by the projection and circumcenter solvers.

use nalgebra::{DMatrix, DVector};

use crate::affine::{least_squares_min_norm, numerical_rank};
use crate::legendre::LegendreFunction;
use crate::projections::SolverConfig;
use crate::{inf_norm, Point};

/// Square systems in `α` with `m` equations; `jacobian` is `m × d`.
pub(crate) trait AffineEquations {
    fn residual(&self, u: &Point) -> DVector<f64>;
    fn jacobian(&self, u: &Point) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Termination {
    Converged,
    /// `r` is numerically orthogonal to the range of `J` while still above
    /// tolerance.
    Stationary,
    /// No step length satisfied the sufficient-decrease test.
    LineSearch,
    MaxIters,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub point: Point,
    pub iterations: usize,
    pub termination: Termination,
}

/// Relative to `max|J| · ‖r‖∞`.
const STATIONARITY_TOL: f64 = 1e-13;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

pub(crate) fn damped_gauss_newton<E: AffineEquations>(
    f: &LegendreFunction,
    basis: &DMatrix<f64>,
    start: Point,
    eqs: &E,
    cfg: &SolverConfig,
) -> Outcome {
    let mut u = start;
    let mut r = eqs.residual(&u);
    let mut k = 0;
    loop {
        let res_inf = inf_norm(&r);
        if res_inf <= cfg.tol_residual {
            return Outcome {
                point: u,
                iterations: k,
                termination: Termination::Converged,
            };
        }
        if k >= cfg.max_iters {
            return Outcome {
                point: u,
                iterations: k,
                termination: Termination::MaxIters,
            };
        }
        let jac = eqs.jacobian(&u);
        let grad = jac.transpose() * &r;
        if inf_norm(&grad) <= STATIONARITY_TOL * jac.amax() * res_inf {
            return Outcome {
                point: u,
                iterations: k,
                termination: Termination::Stationary,
            };
        }
        let step = match least_squares_min_norm(&jac, &(-&r), 1e-13) {
            Some(s) => s,
            None => {
                return Outcome {
                    point: u,
                    iterations: k,
                    termination: Termination::LineSearch,
                }
            }
        };
        let dx = basis * &step;
        let merit = r.norm_squared();
        // d/dτ ‖r(u + τ dx)‖² at τ = 0
        let slope = 2.0 * r.dot(&(&jac * &step));
        let mut tau = (cfg.boundary_fraction * f.max_feasible_step(&u, &dx)).min(1.0);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &u + &dx * tau;
            if f.in_interior(&trial, cfg.margin) {
                let r_trial = eqs.residual(&trial);
                let m_trial = r_trial.norm_squared();
                if m_trial.is_finite() && m_trial <= merit + ARMIJO_C * tau * slope.min(0.0) && m_trial < merit {
                    accepted = Some((trial, r_trial));
                    break;
                }
            }
            tau *= cfg.armijo_shrink;
        }
        match accepted {
            Some((trial, r_trial)) => {
                u = trial;
                r = r_trial;
                k += 1;
            }
            None => {
                return Outcome {
                    point: u,
                    iterations: k,
                    termination: Termination::LineSearch,
                }
            }
        }
    }
}

/// Whether the Jacobian at `u` has full column rank.
pub(crate) fn full_column_rank<E: AffineEquations>(eqs: &E, u: &Point, d: usize) -> bool {
    if d == 0 {
        return true;
    }
    numerical_rank(&eqs.jacobian(u), 1e-10) == d
}
