//! Backward and forward Bregman projections onto affine subspaces.
//!
//! With `u = base + B·α` the backward projection `←P(y) = argmin D_f(·, y)`
//! is characterised by `Bᵀ(∇f(u) − ∇f(y)) = 0` and the forward projection
//! `→P(x) = argmin D_f(x, ·)` by `Bᵀ∇²f(v)(v − x) = 0`. Both are solved by
//! damped Newton steps that never leave `int dom f` (fraction-to-boundary on
//! the box domain) and that decrease the residual norm (backtracking).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{AffineSubspace, DEFAULT_HULL_TOL};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::legendre::{bregman_distance, LegendreFunction};
use crate::solver::{damped_gauss_newton, AffineEquations, Termination};
use crate::{Point, DEFAULT_MARGIN};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Fraction of the distance to the domain boundary a step may cover.
    pub boundary_fraction: f64,
    /// Step shrink factor during backtracking.
    pub armijo_shrink: f64,
    /// Interior margin ε iterates keep from the boundary.
    pub margin: f64,
    /// Relative rank tolerance for affine hulls.
    pub hull_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-12,
            max_iters: 100,
            boundary_fraction: 0.99,
            armijo_shrink: 0.5,
            margin: DEFAULT_MARGIN,
            hull_tol: DEFAULT_HULL_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.tol_residual > 0.0 && self.max_iters > 0 && self.hull_tol > 0.0;
        let fractions = self.boundary_fraction > 0.0
            && self.boundary_fraction < 1.0
            && self.armijo_shrink > 0.0
            && self.armijo_shrink < 1.0;
        if positive && fractions && self.margin >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid solver configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionStatus {
    Converged,
    NotConverged,
    InfeasibleDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Point,
    /// Achieved `D_f(u, y)` (backward) or `D_f(x, v)` (forward).
    pub divergence: ExtendedReal,
    pub iterations: usize,
    pub status: ProjectionStatus,
}

impl ProjectionResult {
    pub fn is_converged(&self) -> bool {
        self.status == ProjectionStatus::Converged
    }

    /// The projected point, or an error describing why there is none.
    pub fn into_point(self, what: &'static str) -> Result<Point> {
        match self.status {
            ProjectionStatus::Converged => Ok(self.point),
            ProjectionStatus::NotConverged => Err(Error::NotConverged {
                what,
                iterations: self.iterations,
            }),
            ProjectionStatus::InfeasibleDomain => Err(Error::InfeasibleDomain),
        }
    }
}

const PROBE_SAMPLES: usize = 32;
const PROBE_SEED: u64 = 0x5eed_b4e6;

/// A point of `A ∩ int dom f` with margin, if one is found among the base,
/// the projections of `hints` and of the domain centre, and a fixed-seed
/// batch of random basis-coefficient samples scaled by `A.extent()`.
pub(crate) fn interior_probe(f: &LegendreFunction, a: &AffineSubspace, hints: &[&Point], margin: f64) -> Option<Point> {
    let mut candidates = vec![a.base().clone()];
    candidates.extend(hints.iter().map(|h| a.project(h)));
    candidates.push(a.project(&f.interior_center()));
    if let Some(p) = candidates.into_iter().find(|c| f.in_interior(c, margin)) {
        return Some(p);
    }
    let d = a.dim();
    if d == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let scale = a.extent();
    (0..PROBE_SAMPLES)
        .map(|_| {
            let alpha = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..=1.0) * scale);
            a.point_at(&alpha)
        })
        .find(|c| f.in_interior(c, margin))
}

/// Pulls `guess` (a point of A) toward the interior point `anchor` until it
/// is interior with the given margin.
pub(crate) fn pull_to_interior(f: &LegendreFunction, guess: &Point, anchor: &Point, margin: f64) -> Point {
    if f.in_interior(guess, margin) {
        return guess.clone();
    }
    let mut theta = 0.5;
    for _ in 0..64 {
        let c = anchor + (guess - anchor) * theta;
        if f.in_interior(&c, margin) {
            return c;
        }
        theta *= 0.5;
    }
    anchor.clone()
}

fn check_subspace(f: &LegendreFunction, a: &AffineSubspace) -> Result<()> {
    if a.ambient_dim() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            found: a.ambient_dim(),
        });
    }
    Ok(())
}

struct BackwardEquations<'a> {
    f: &'a LegendreFunction,
    basis: &'a DMatrix<f64>,
    grad_target: Point,
}

impl AffineEquations for BackwardEquations<'_> {
    fn residual(&self, u: &Point) -> DVector<f64> {
        let g = self.f.gradient(u).expect("iterates stay interior");
        self.basis.transpose() * (g - &self.grad_target)
    }

    fn jacobian(&self, u: &Point) -> DMatrix<f64> {
        let h = self.f.hessian_diag(u).expect("iterates stay interior");
        weighted_gram(self.basis, &h)
    }
}

struct ForwardEquations<'a> {
    f: &'a LegendreFunction,
    basis: &'a DMatrix<f64>,
    source: Point,
}

impl AffineEquations for ForwardEquations<'_> {
    fn residual(&self, v: &Point) -> DVector<f64> {
        let h = self.f.hessian_diag(v).expect("iterates stay interior");
        self.basis.transpose() * h.component_mul(&(v - &self.source))
    }

    fn jacobian(&self, v: &Point) -> DMatrix<f64> {
        let h = self.f.hessian_diag(v).expect("iterates stay interior");
        let t = self.f.third_derivative_diag(v).expect("iterates stay interior");
        let w = h + t.component_mul(&(v - &self.source));
        weighted_gram(self.basis, &w)
    }
}

/// `Bᵀ diag(w) B`.
pub(crate) fn weighted_gram(basis: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = basis.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= w[i];
    }
    basis.transpose() * scaled
}

fn solve_on_subspace<E: AffineEquations>(
    f: &LegendreFunction,
    a: &AffineSubspace,
    target: &Point,
    eqs: &E,
    cfg: &SolverConfig,
    divergence: impl Fn(&Point) -> ExtendedReal,
) -> ProjectionResult {
    let guess = a.project(target);
    let Some(anchor) = interior_probe(f, a, &[target], cfg.margin) else {
        return ProjectionResult {
            divergence: ExtendedReal::Infinity,
            point: guess,
            iterations: 0,
            status: ProjectionStatus::InfeasibleDomain,
        };
    };
    let start = pull_to_interior(f, &guess, &anchor, cfg.margin);
    if a.dim() == 0 {
        return ProjectionResult {
            divergence: divergence(&start),
            point: start,
            iterations: 0,
            status: ProjectionStatus::Converged,
        };
    }
    let out = damped_gauss_newton(f, a.basis(), start, eqs, cfg);
    let status = if out.termination == Termination::Converged {
        ProjectionStatus::Converged
    } else {
        ProjectionStatus::NotConverged
    };
    ProjectionResult {
        divergence: divergence(&out.point),
        point: out.point,
        iterations: out.iterations,
        status,
    }
}

/// `←P^f_A(y) = argmin_{u ∈ A} D_f(u, y)`.
pub fn backward_project_affine(
    f: &LegendreFunction,
    a: &AffineSubspace,
    y: &Point,
    cfg: &SolverConfig,
) -> Result<ProjectionResult> {
    cfg.validate()?;
    check_subspace(f, a)?;
    f.check_dim(y)?;
    if !f.in_interior(y, 0.0) {
        return Err(Error::domain("y", format!("not in int dom {}", f.name())));
    }
    let eqs = BackwardEquations {
        f,
        basis: a.basis(),
        grad_target: f.gradient(y)?,
    };
    Ok(solve_on_subspace(f, a, y, &eqs, cfg, |u| bregman_distance(f, u, y)))
}

/// `→P^f_A(x) = argmin_{v ∈ A} D_f(x, v)`.
///
/// Requires `f.allows_forward_projections()`; use
/// [`LegendreFunction::with_forward_projections`] to override.
pub fn forward_project_affine(
    f: &LegendreFunction,
    a: &AffineSubspace,
    x: &Point,
    cfg: &SolverConfig,
) -> Result<ProjectionResult> {
    if !f.allows_forward_projections() {
        return Err(Error::Capability(format!(
            "{} is not known to allow forward Bregman projections",
            f.name()
        )));
    }
    cfg.validate()?;
    check_subspace(f, a)?;
    f.check_dim(x)?;
    if !f.in_interior(x, 0.0) {
        return Err(Error::domain("x", format!("not in int dom {}", f.name())));
    }
    let eqs = ForwardEquations {
        f,
        basis: a.basis(),
        source: x.clone(),
    };
    Ok(solve_on_subspace(f, a, x, &eqs, cfg, |v| bregman_distance(f, x, v)))
}

/// Defect of the three-point identity `D_f(z, y) = D_f(z, u) + D_f(u, y)`,
/// where `u = ←P^f_A(y)` and `z ∈ A ∩ int dom f`.
pub fn pythagoras_residual(
    f: &LegendreFunction,
    y: &Point,
    a: &AffineSubspace,
    z: &Point,
    cfg: &SolverConfig,
) -> Result<f64> {
    f.check_dim(z)?;
    if !f.in_interior(z, 0.0) {
        return Err(Error::domain("z", format!("not in int dom {}", f.name())));
    }
    if !a.contains(z, 1e-8 * (1.0 + z.amax())) {
        return Err(Error::domain("z", "not on the affine subspace"));
    }
    let u = backward_project_affine(f, a, y, cfg)?.into_point("backward projection")?;
    let lhs = bregman_distance(f, z, y).to_f64();
    let rhs = bregman_distance(f, z, &u).to_f64() + bregman_distance(f, &u, y).to_f64();
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{affine_hull, PointSet};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn x_axis() -> AffineSubspace {
        AffineSubspace::from_directions(p(&[0.0, 0.0]), &[p(&[1.0, 0.0])], DEFAULT_HULL_TOL)
    }

    fn diagonal_through(t: f64) -> AffineSubspace {
        AffineSubspace::from_directions(p(&[t, t]), &[p(&[1.0, 1.0])], DEFAULT_HULL_TOL)
    }

    #[test]
    fn euclidean_backward_is_orthogonal_projection() {
        let f = LegendreFunction::euclidean(2);
        let r = backward_project_affine(&f, &x_axis(), &p(&[0.0, 1.0]), &SolverConfig::default()).unwrap();
        assert!(r.is_converged());
        assert_abs_diff_eq!((r.point - p(&[0.0, 0.0])).amax(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.divergence.to_f64(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fermi_dirac_backward_on_diagonal() {
        let f = LegendreFunction::fermi_dirac(2);
        let r = backward_project_affine(&f, &diagonal_through(0.5), &p(&[0.2, 0.6]), &SolverConfig::default()).unwrap();
        assert!(r.is_converged());
        // t/(1−t) = sqrt((0.2/0.8)(0.6/0.4))
        let ratio = (0.25f64 * 1.5).sqrt();
        let t = ratio / (1.0 + ratio);
        assert_abs_diff_eq!(t, 0.379796, epsilon = 1e-6);
        assert_abs_diff_eq!(r.point[0], t, epsilon = 1e-12);
        assert_abs_diff_eq!(r.point[1], t, epsilon = 1e-12);
    }

    #[test]
    fn projecting_a_member_is_identity() {
        let f = LegendreFunction::fermi_dirac(2);
        let a = diagonal_through(0.1);
        let y = p(&[0.3, 0.3]);
        let cfg = SolverConfig::default();
        let b = backward_project_affine(&f, &a, &y, &cfg).unwrap();
        assert_abs_diff_eq!((b.point - &y).amax(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.divergence.to_f64(), 0.0, epsilon = 1e-20);
        let fw = forward_project_affine(&f, &a, &y, &cfg).unwrap();
        assert_abs_diff_eq!((fw.point - &y).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_forward_matches_backward() {
        let f = LegendreFunction::euclidean(2);
        let r = forward_project_affine(&f, &x_axis(), &p(&[0.0, 1.0]), &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!((r.point - p(&[0.0, 0.0])).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fermi_dirac_forward_on_diagonal_against_grid_search() {
        let f = LegendreFunction::fermi_dirac(2);
        let x = p(&[0.2, 0.6]);
        let r = forward_project_affine(&f, &diagonal_through(0.5), &x, &SolverConfig::default()).unwrap();
        assert!(r.is_converged());
        assert_abs_diff_eq!(r.point[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(r.point[1], 0.4, epsilon = 1e-12);
        // dense grid oracle over the diagonal
        let (mut best_t, mut best) = (0.0, f64::INFINITY);
        for i in 1..100_000 {
            let t = i as f64 / 100_000.0;
            let d = bregman_distance(&f, &x, &p(&[t, t])).to_f64();
            if d < best {
                best = d;
                best_t = t;
            }
        }
        assert_abs_diff_eq!(best_t, 0.4, epsilon = 2e-5);
        assert!(r.divergence.to_f64() <= best + 1e-15);
    }

    #[test]
    fn burg_forward_requires_override() {
        let f = LegendreFunction::burg(2);
        let a = diagonal_through(1.0);
        let x = p(&[1.0, 2.0]);
        assert!(matches!(
            forward_project_affine(&f, &a, &x, &SolverConfig::default()),
            Err(Error::Capability(_))
        ));
        let g = f.with_forward_projections(true);
        let r = forward_project_affine(&g, &a, &x, &SolverConfig::default()).unwrap();
        assert!(r.is_converged());
    }

    #[test]
    fn infeasible_subspace_is_reported() {
        let f = LegendreFunction::fermi_dirac(2);
        // the line x_1 = 2 never meets ]0,1[^2
        let a = AffineSubspace::from_directions(p(&[2.0, 0.5]), &[p(&[0.0, 1.0])], DEFAULT_HULL_TOL);
        let r = backward_project_affine(&f, &a, &p(&[0.5, 0.5]), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, ProjectionStatus::InfeasibleDomain);
        assert!(r.divergence.is_infinite());
    }

    #[test]
    fn base_outside_domain_is_pulled_inside() {
        let f = LegendreFunction::fermi_dirac(2);
        let a = AffineSubspace::from_directions(p(&[-3.0, -3.0]), &[p(&[1.0, 1.0])], DEFAULT_HULL_TOL);
        let r = backward_project_affine(&f, &a, &p(&[0.2, 0.6]), &SolverConfig::default()).unwrap();
        assert!(r.is_converged());
        assert_abs_diff_eq!(r.point[0], 0.379795897113271, epsilon = 1e-12);
    }

    #[test]
    fn domain_errors() {
        let f = LegendreFunction::burg(2);
        let r = backward_project_affine(&f, &diagonal_through(1.0), &p(&[0.0, 1.0]), &SolverConfig::default());
        assert!(matches!(r, Err(Error::Domain { arg: "y", .. })));
        let bad = SolverConfig {
            boundary_fraction: 1.0,
            ..SolverConfig::default()
        };
        assert!(backward_project_affine(&f, &diagonal_through(1.0), &p(&[1.0, 1.0]), &bad).is_err());
    }

    #[test]
    fn pythagoras_examples() {
        let cfg = SolverConfig::default();
        let e = LegendreFunction::euclidean(2);
        let r = pythagoras_residual(&e, &p(&[0.0, 1.0]), &x_axis(), &p(&[3.0, 0.0]), &cfg).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        let y = p(&[0.0, 0.0]);
        assert_abs_diff_eq!(pythagoras_residual(&e, &y, &x_axis(), &y, &cfg).unwrap(), 0.0, epsilon = 1e-15);
        let fd = LegendreFunction::fermi_dirac(2);
        let r = pythagoras_residual(&fd, &p(&[0.2, 0.6]), &diagonal_through(0.5), &p(&[0.5, 0.5]), &cfg).unwrap();
        assert!(r <= 1e-8, "{r}");
    }

    fn instance() -> impl Strategy<Value = (bool, usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (any::<bool>(), 2usize..=6).prop_flat_map(|(fd, n)| (Just(fd), Just(n), 1..n)).prop_flat_map(|(fd, n, d)| {
            (
                Just(fd),
                Just(n),
                proptest::collection::vec(0.05..0.95f64, n),
                proptest::collection::vec(-0.3..0.3f64, n * d),
                proptest::collection::vec(0.05..0.95f64, n),
                proptest::collection::vec(-1.0..1.0f64, n),
            )
        })
    }

    fn build(fd: bool, n: usize, anchor: &[f64], dirs: &[f64]) -> (LegendreFunction, AffineSubspace) {
        let f = if fd { LegendreFunction::fermi_dirac(n) } else { LegendreFunction::euclidean(n) };
        let d = dirs.len() / n;
        let base = p(anchor);
        let mut pts = vec![base.clone()];
        for j in 0..d {
            pts.push(&base + DVector::from_fn(n, |i, _| dirs[j * n + i]));
        }
        (f, affine_hull(&PointSet::new(pts).unwrap(), DEFAULT_HULL_TOL))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn backward_projection_is_minimal_and_idempotent((fd, n, anchor, dirs, y, coeffs) in instance()) {
            let (f, a) = build(fd, n, &anchor, &dirs);
            let y = p(&y);
            let cfg = SolverConfig::default();
            let r = backward_project_affine(&f, &a, &y, &cfg).unwrap();
            prop_assert!(r.is_converged());
            prop_assert!(a.contains(&r.point, 1e-8));
            let again = backward_project_affine(&f, &a, &r.point, &cfg).unwrap();
            prop_assert!((again.point - &r.point).amax() <= 1e-10);
            // compare with a competitor on A
            let alpha = DVector::from_fn(a.dim(), |i, _| coeffs[i] * 0.2);
            let other = a.point_at(&alpha) + (&r.point - a.base());
            if f.in_interior(&other, 0.0) {
                prop_assert!(r.divergence.to_f64() <= bregman_distance(&f, &other, &y).to_f64() + 1e-10);
            }
            // three-point identity with the anchor of A
            let z = p(&anchor);
            prop_assert!(pythagoras_residual(&f, &y, &a, &z, &cfg).unwrap() <= 1e-8);
        }

        #[test]
        fn forward_projection_is_minimal((fd, n, anchor, dirs, x, coeffs) in instance()) {
            let (f, a) = build(fd, n, &anchor, &dirs);
            let x = p(&x);
            let r = forward_project_affine(&f, &a, &x, &SolverConfig::default()).unwrap();
            prop_assert!(r.is_converged());
            let alpha = DVector::from_fn(a.dim(), |i, _| coeffs[i] * 0.2);
            let other = a.point_at(&alpha) + (&r.point - a.base());
            if f.in_interior(&other, 0.0) {
                prop_assert!(r.divergence.to_f64() <= bregman_distance(&f, &x, &other).to_f64() + 1e-10);
            }
        }
    }
}
