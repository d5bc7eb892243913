//! Equidistance sets, the four Bregman (pseudo-)circumcenter operators and
//! the circumcenter mapping `CC_S(x) = →CC(S(x))`.
//!
//! For `K = {q_0, …, q_m}` the forward conditions `D_f(q_i, q) = D_f(q_0, q)`
//! reduce to `⟨∇f(q), q_i − q_0⟩ = f(q_i) − f(q_0)`, which is linear in
//! `∇f(q)`. The backward conditions `D_f(p, q_i) = D_f(p, q_0)` are affine
//! in `p` itself.

use nalgebra::{DMatrix, DVector};

use crate::affine::{affine_hull, least_squares_min_norm, numerical_rank, AffineSubspace, PointSet};
use crate::error::{Error, Result};
use crate::legendre::{bregman_distance, LegendreFunction};
use crate::operators::OperatorFamily;
use crate::projections::{
    backward_project_affine, forward_project_affine, interior_probe, SolverConfig,
};
use crate::solver::{damped_gauss_newton, full_column_rank, AffineEquations, Termination};
use crate::{inf_norm, Point};

/// `A·∇f(q) = b` with rows `(q_i − q_0)ᵀ` and `b_i = f(q_i) − f(q_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquidistanceSystem {
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl EquidistanceSystem {
    pub fn new(f: &LegendreFunction, k: &PointSet) -> Result<Self> {
        require_in_domain(f, k)?;
        let q0 = k.first();
        let f0 = f.value(q0).to_f64();
        let diffs = k.differences();
        let rows = DMatrix::from_fn(diffs.len(), k.dim(), |i, j| diffs[i][j]);
        let rhs = DVector::from_iterator(
            diffs.len(),
            k.points()[1..].iter().map(|q| f.value(q).to_f64() - f0),
        );
        Ok(Self { rows, rhs })
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// Number of equations `m = |K| − 1`.
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    /// `b − A·u`, the equidistance residual at a point with gradient `u`.
    pub fn residual_at_gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.rhs - &self.rows * u
    }
}

fn require_in_domain(f: &LegendreFunction, k: &PointSet) -> Result<()> {
    if k.dim() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            found: k.dim(),
        });
    }
    if k.points().iter().all(|q| f.in_domain(q)) {
        Ok(())
    } else {
        Err(Error::domain("K", format!("not contained in dom {}", f.name())))
    }
}

fn require_in_interior(f: &LegendreFunction, k: &PointSet) -> Result<()> {
    require_in_domain(f, k)?;
    if k.points().iter().all(|q| f.in_interior(q, 0.0)) {
        Ok(())
    } else {
        Err(Error::domain("K", format!("not contained in int dom {}", f.name())))
    }
}

/// `r_i = D_f(q_i, q) − D_f(q_0, q)`, evaluated through the simplified form
/// `f(q_i) − f(q_0) − ⟨∇f(q), q_i − q_0⟩`.
pub fn equidistance_residual_forward(f: &LegendreFunction, k: &PointSet, q: &Point) -> Result<DVector<f64>> {
    f.require_interior(q, "q")?;
    let sys = EquidistanceSystem::new(f, k)?;
    let r = sys.residual_at_gradient(&f.gradient(q)?);
    #[cfg(debug_assertions)]
    {
        let direct = equidistance_residual_direct(f, k, q);
        let scale = 1.0 + inf_norm(&direct) + inf_norm(sys.rhs());
        debug_assert!(
            inf_norm(&(&direct - &r)) <= 1e-9 * scale,
            "equidistance residual forms disagree: {direct} vs {r}"
        );
    }
    Ok(r)
}

/// `D_f(q_i, q) − D_f(q_0, q)` from the distance itself.
pub(crate) fn equidistance_residual_direct(f: &LegendreFunction, k: &PointSet, q: &Point) -> DVector<f64> {
    let d0 = bregman_distance(f, k.first(), q).to_f64();
    DVector::from_iterator(
        k.len() - 1,
        k.points()[1..].iter().map(|qi| bregman_distance(f, qi, q).to_f64() - d0),
    )
}

/// `q ∈ E→_f(K)` up to `tol`; false on any domain or dimension violation.
pub fn in_forward_equidistance_set(f: &LegendreFunction, k: &PointSet, q: &Point, tol: f64) -> bool {
    if q.len() != f.dim() || k.dim() != f.dim() || !f.in_interior(q, 0.0) {
        return false;
    }
    match equidistance_residual_forward(f, k, q) {
        Ok(r) => inf_norm(&r) <= tol,
        Err(_) => false,
    }
}

/// `p ∈ E←_f(K)` up to `tol`: `p ∈ dom f`, `K ⊆ int dom f` and the values
/// `D_f(p, q_i)` spread by at most `tol`.
pub fn in_backward_equidistance_set(f: &LegendreFunction, k: &PointSet, p: &Point, tol: f64) -> bool {
    if p.len() != f.dim() || k.dim() != f.dim() || !f.in_domain(p) {
        return false;
    }
    if !k.points().iter().all(|q| f.in_interior(q, 0.0)) {
        return false;
    }
    let (lo, hi) = k
        .points()
        .iter()
        .map(|q| bregman_distance(f, p, q).to_f64())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo <= tol
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircumcenterConfig {
    pub solver: SolverConfig,
    /// Recompute the mapping through a known common fixed point and fail on
    /// disagreement.
    pub cross_check: bool,
    /// Tolerance for equidistance-set membership preconditions.
    pub membership_tol: f64,
}

impl Default for CircumcenterConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            cross_check: false,
            membership_tol: 1e-8,
        }
    }
}

/// Agreement required between the two routes of [`circumcenter_mapping`].
pub const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircumcenterStatus {
    /// Isolated solution.
    Unique,
    /// One point of a positive-dimensional solution set.
    Representative,
    /// The solver stalled at a stationary point of the residual norm with
    /// the residual above tolerance.
    Empty,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircumcenterResult {
    pub point: Option<Point>,
    /// Max norm of the equidistance residual at the returned point (or at
    /// the last iterate when there is none).
    pub residual: f64,
    pub status: CircumcenterStatus,
    pub iterations: usize,
}

impl CircumcenterResult {
    pub fn is_solved(&self) -> bool {
        matches!(self.status, CircumcenterStatus::Unique | CircumcenterStatus::Representative)
    }

    /// The point on success, otherwise an error naming the failure.
    pub fn into_point(self) -> Result<Point> {
        match (self.status, self.point) {
            (CircumcenterStatus::Unique | CircumcenterStatus::Representative, Some(p)) => Ok(p),
            (CircumcenterStatus::Empty, _) => Err(Error::NotConverged {
                what: "circumcenter (empty equidistance intersection)",
                iterations: self.iterations,
            }),
            _ => Err(Error::NotConverged {
                what: "circumcenter",
                iterations: self.iterations,
            }),
        }
    }
}

/// The equidistance equations with row `i` divided by
/// `min(1, ‖q_i − q_0‖)`, so the residual tolerance keeps its meaning as
/// `S(x)` contracts toward a fixed point while still bounding the raw
/// residual.
struct ForwardEquidistance<'a> {
    f: &'a LegendreFunction,
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
    basis: &'a DMatrix<f64>,
}

impl<'a> ForwardEquidistance<'a> {
    fn new(f: &'a LegendreFunction, sys: &EquidistanceSystem, basis: &'a DMatrix<f64>, negligible: f64) -> Self {
        let mut rows = sys.rows().clone();
        let mut rhs = sys.rhs().clone();
        for i in 0..rhs.len() {
            let len = rows.row(i).norm();
            if len > negligible && len < 1.0 {
                rows.row_mut(i).unscale_mut(len);
                rhs[i] /= len;
            }
        }
        Self { f, rows, rhs, basis }
    }
}

impl AffineEquations for ForwardEquidistance<'_> {
    fn residual(&self, u: &Point) -> DVector<f64> {
        let g = self.f.gradient(u).expect("iterates stay interior");
        &self.rows * g - &self.rhs
    }

    fn jacobian(&self, u: &Point) -> DMatrix<f64> {
        let h = self.f.hessian_diag(u).expect("iterates stay interior");
        let mut scaled = self.basis.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= h[i];
        }
        &self.rows * scaled
    }
}

/// `aff(K)` with rank decided relative to the spread of `K` rather than to
/// its distance from the origin, floored at a few ulps of the point scale:
/// along the method `S(x)` contracts to a point and its genuine directions
/// must survive.
fn hull_of(k: &PointSet, cfg: &CircumcenterConfig) -> AffineSubspace {
    affine_hull(k, hull_rel_tol(k, cfg))
}

fn hull_rel_tol(k: &PointSet, cfg: &CircumcenterConfig) -> f64 {
    let scale = k.scale();
    if scale == 0.0 {
        return cfg.solver.hull_tol;
    }
    let absolute = (cfg.solver.hull_tol * k.diameter_from_first()).max(64.0 * f64::EPSILON * scale);
    absolute / scale
}

/// Interior starting point on `aff(K)`: the centroid (or `q_0` for a
/// zero-dimensional hull), falling back to an interior probe.
fn interior_start(f: &LegendreFunction, k: &PointSet, a: &AffineSubspace, margin: f64) -> Option<Point> {
    let preferred = if a.dim() == 0 { k.first().clone() } else { k.centroid() };
    if f.in_interior(&preferred, margin) {
        return Some(preferred);
    }
    interior_probe(f, a, &[&preferred], margin)
}

fn stalled_at_stationary_point<E: AffineEquations>(eqs: &E, u: &Point) -> bool {
    let r = eqs.residual(u);
    let j = eqs.jacobian(u);
    inf_norm(&(j.transpose() * &r)) <= 1e-10 * (1.0 + j.amax() * inf_norm(&r))
}

/// `→CC(K) = aff(K) ∩ E→_f(K)` by damped Gauss-Newton in hull coordinates.
pub fn forward_circumcenter(f: &LegendreFunction, k: &PointSet, cfg: &CircumcenterConfig) -> Result<CircumcenterResult> {
    cfg.solver.validate()?;
    let sys = EquidistanceSystem::new(f, k)?;
    let a = hull_of(k, cfg);
    let start = interior_start(f, k, &a, cfg.solver.margin).ok_or(Error::InfeasibleDomain)?;
    if a.dim() == 0 {
        let residual = inf_norm(&equidistance_residual_forward(f, k, &start)?);
        return Ok(CircumcenterResult {
            point: Some(start),
            residual,
            status: CircumcenterStatus::Unique,
            iterations: 0,
        });
    }
    let negligible = hull_rel_tol(k, cfg) * k.scale();
    let eqs = ForwardEquidistance::new(f, &sys, a.basis(), negligible);
    let out = damped_gauss_newton(f, a.basis(), start, &eqs, &cfg.solver);
    let residual = inf_norm(&equidistance_residual_forward(f, k, &out.point)?);
    let status = match out.termination {
        Termination::Converged if full_column_rank(&eqs, &out.point, a.dim()) => CircumcenterStatus::Unique,
        Termination::Converged => CircumcenterStatus::Representative,
        Termination::Stationary => CircumcenterStatus::Empty,
        Termination::LineSearch if stalled_at_stationary_point(&eqs, &out.point) => CircumcenterStatus::Empty,
        Termination::LineSearch | Termination::MaxIters => CircumcenterStatus::NotConverged,
    };
    let point = matches!(status, CircumcenterStatus::Unique | CircumcenterStatus::Representative).then_some(out.point);
    Ok(CircumcenterResult {
        point,
        residual,
        status,
        iterations: out.iterations,
    })
}

/// `←P^f_{aff(K)}(z)` for `z ∈ E→_f(K)`, which lands in `→CC(K)`.
pub fn forward_circumcenter_via_projection(
    f: &LegendreFunction,
    k: &PointSet,
    z: &Point,
    cfg: &CircumcenterConfig,
) -> Result<Point> {
    require_in_domain(f, k)?;
    f.check_dim(z)?;
    if !in_forward_equidistance_set(f, k, z, cfg.membership_tol) {
        return Err(Error::Precondition("z is not in the forward equidistance set of K".into()));
    }
    let a = hull_of(k, cfg);
    backward_project_affine(f, &a, z, &cfg.solver)?.into_point("backward projection onto aff(K)")
}

/// `∇f*(P_{aff(K)}(∇f(z)))` for `z ∈ E→_f(K)`; needs `aff(K) ⊆ int dom f*`.
pub fn forward_pseudo_circumcenter(
    f: &LegendreFunction,
    k: &PointSet,
    z: &Point,
    cfg: &CircumcenterConfig,
) -> Result<Point> {
    require_in_domain(f, k)?;
    f.check_dim(z)?;
    if !in_forward_equidistance_set(f, k, z, cfg.membership_tol) {
        return Err(Error::Precondition("z is not in the forward equidistance set of K".into()));
    }
    let a = hull_of(k, cfg);
    if !f.conj_interior_contains_affine(&a) {
        return Err(Error::Precondition(format!("aff(K) is not contained in int dom {}*", f.name())));
    }
    f.conj_gradient(&a.project(&f.gradient(z)?))
}

/// `←CC(K) = aff(K) ∩ E←_f(K)`, one linear least-squares solve.
///
/// With `p = q_0 + Bα` the conditions read
/// `⟨∇f(q_i) − ∇f(q_0), Bα⟩ = D_f(q_0, q_i)`.
pub fn backward_circumcenter(f: &LegendreFunction, k: &PointSet, cfg: &CircumcenterConfig) -> Result<CircumcenterResult> {
    cfg.solver.validate()?;
    require_in_interior(f, k)?;
    let a = hull_of(k, cfg);
    let q0 = k.first();
    let g0 = f.gradient(q0)?;
    let grads = k.points()[1..]
        .iter()
        .map(|q| f.gradient(q))
        .collect::<Result<Vec<_>>>()?;
    let g = DMatrix::from_fn(grads.len(), f.dim(), |i, j| grads[i][j] - g0[j]);
    let m = &g * a.basis();
    let rhs = DVector::from_iterator(
        grads.len(),
        k.points()[1..].iter().map(|q| bregman_distance(f, q0, q).to_f64()),
    );
    let Some(alpha) = least_squares_min_norm(&m, &rhs, 1e-13) else {
        return Ok(CircumcenterResult {
            point: None,
            residual: f64::INFINITY,
            status: CircumcenterStatus::NotConverged,
            iterations: 0,
        });
    };
    let linear_residual = inf_norm(&(&m * &alpha - &rhs));
    let scale = 1.0f64.max(m.amax() * inf_norm(&alpha)).max(inf_norm(&rhs));
    if linear_residual > cfg.solver.tol_residual * scale {
        return Ok(CircumcenterResult {
            point: None,
            residual: linear_residual,
            status: CircumcenterStatus::Empty,
            iterations: 1,
        });
    }
    let p = a.point_at(&alpha);
    if !f.in_interior(&p, cfg.solver.margin) {
        return Err(Error::InfeasibleDomain);
    }
    let status = if numerical_rank(&m, 1e-10) == a.dim() {
        CircumcenterStatus::Unique
    } else {
        CircumcenterStatus::Representative
    };
    Ok(CircumcenterResult {
        point: Some(p),
        residual: linear_residual,
        status,
        iterations: 1,
    })
}

/// `→P^f_{aff(K)}(z)` for `z ∈ E←_f(K)`, which lands in `←CC(K)` when `f`
/// allows forward projections, `aff(K) ⊆ int dom f` and `∇f(aff(K))` is a
/// closed affine subspace. The last condition is not checked.
pub fn backward_circumcenter_via_projection(
    f: &LegendreFunction,
    k: &PointSet,
    z: &Point,
    cfg: &CircumcenterConfig,
) -> Result<Point> {
    require_in_interior(f, k)?;
    f.check_dim(z)?;
    if !f.allows_forward_projections() {
        return Err(Error::Capability(format!(
            "{} is not known to allow forward Bregman projections",
            f.name()
        )));
    }
    if !in_backward_equidistance_set(f, k, z, cfg.membership_tol) {
        return Err(Error::Precondition("z is not in the backward equidistance set of K".into()));
    }
    let a = hull_of(k, cfg);
    let inside = f.is_full_domain() || (a.dim() == 0 && f.in_interior(a.base(), 0.0));
    if !inside {
        return Err(Error::Precondition(format!("aff(K) is not contained in int dom {}", f.name())));
    }
    if !f.in_interior(z, 0.0) {
        return Err(Error::domain("z", format!("not in int dom {}", f.name())));
    }
    forward_project_affine(f, &a, z, &cfg.solver)?.into_point("forward projection onto aff(K)")
}

/// `P_{aff(∇f(K))}(z)` for `z ∈ E←_f(K)`; needs `aff(∇f(K)) ⊆ dom f`.
pub fn backward_pseudo_circumcenter(
    f: &LegendreFunction,
    k: &PointSet,
    z: &Point,
    cfg: &CircumcenterConfig,
) -> Result<Point> {
    require_in_interior(f, k)?;
    f.check_dim(z)?;
    if !in_backward_equidistance_set(f, k, z, cfg.membership_tol) {
        return Err(Error::Precondition("z is not in the backward equidistance set of K".into()));
    }
    let gk = k.map(|q| f.gradient(q).expect("K is interior"))?;
    let hull = hull_of(&gk, cfg);
    if !f.domain_contains_affine(&hull) {
        return Err(Error::Precondition(format!("aff(∇f(K)) is not contained in dom {}", f.name())));
    }
    Ok(hull.project(z))
}

/// `CC_S(x) = →CC(S(x))` with `S(x) = {x, T_1x, …, T_mx}`.
///
/// With `cfg.cross_check`, a known common fixed point `z` of the family that
/// lies in `E→_f(S(x))` is pushed through
/// [`forward_circumcenter_via_projection`]; disagreement beyond
/// [`CROSS_CHECK_TOL`] is an [`Error::CrossCheck`].
pub fn circumcenter_mapping(
    f: &LegendreFunction,
    s: &OperatorFamily,
    x: &Point,
    cfg: &CircumcenterConfig,
) -> Result<CircumcenterResult> {
    f.require_interior(x, "x")?;
    let k = s.evaluate(x)?;
    if !k.points().iter().all(|q| f.in_domain(q)) {
        return Err(Error::domain("S(x)", format!("not contained in dom {}", f.name())));
    }
    let result = forward_circumcenter(f, &k, cfg)?;
    if cfg.cross_check && result.is_solved() {
        if let Some(z) = s.common_fixed_point(f) {
            if in_forward_equidistance_set(f, &k, &z, cfg.membership_tol) {
                let other = forward_circumcenter_via_projection(f, &k, &z, cfg)?;
                let point = result.point.as_ref().expect("solved results carry a point");
                let distance = inf_norm(&(other - point));
                if distance > CROSS_CHECK_TOL {
                    return Err(Error::CrossCheck { distance });
                }
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::is_affinely_independent;
    use crate::operators::OperatorSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn triangle() -> PointSet {
        PointSet::from_slices(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap()
    }

    fn cfg() -> CircumcenterConfig {
        CircumcenterConfig::default()
    }

    #[test]
    fn residual_examples() {
        let e = LegendreFunction::euclidean(2);
        let r = equidistance_residual_forward(&e, &triangle(), &p(&[0.5, 0.5])).unwrap();
        assert_eq!(r, p(&[0.0, 0.0]));
        let single = PointSet::from_slices(&[&[0.2, 0.3]]).unwrap();
        assert_eq!(equidistance_residual_forward(&e, &single, &p(&[1.0, 1.0])).unwrap().len(), 0);
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[0.7]]).unwrap();
        let r = equidistance_residual_forward(&fd, &k, &p(&[0.5])).unwrap();
        assert_abs_diff_eq!(r[0], 0.0, epsilon = 1e-15);
        assert!(matches!(
            equidistance_residual_forward(&fd, &k, &p(&[1.0])),
            Err(Error::Domain { arg: "q", .. })
        ));
    }

    #[test]
    fn forward_membership_along_vertical_line() {
        let fd = LegendreFunction::fermi_dirac(2);
        let k = PointSet::from_slices(&[&[0.3, 0.4], &[0.7, 0.4]]).unwrap();
        for t in [1e-6, 0.1, 0.4, 0.77, 1.0 - 1e-6] {
            assert!(in_forward_equidistance_set(&fd, &k, &p(&[0.5, t]), 1e-12));
        }
        assert!(!in_forward_equidistance_set(&fd, &k, &p(&[0.6, 0.4]), 1e-8));
        assert!(!in_forward_equidistance_set(&fd, &k, &p(&[0.5, 1.0]), 1e-8));
        assert!(!in_forward_equidistance_set(&fd, &k, &p(&[0.5]), 1e-8));
    }

    #[test]
    fn backward_membership() {
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[0.7]]).unwrap();
        assert!(in_backward_equidistance_set(&fd, &k, &p(&[0.5]), 1e-14));
        assert!(!in_backward_equidistance_set(&fd, &k, &p(&[0.4]), 1e-8));
        let boundary = PointSet::from_slices(&[&[0.0], &[0.7]]).unwrap();
        assert!(!in_backward_equidistance_set(&fd, &boundary, &p(&[0.5]), 1e-8));
    }

    #[test]
    fn forward_examples() {
        let e = LegendreFunction::euclidean(2);
        let r = forward_circumcenter(&e, &triangle(), &cfg()).unwrap();
        assert_eq!(r.status, CircumcenterStatus::Unique);
        assert_abs_diff_eq!((r.point.unwrap() - p(&[0.5, 0.5])).amax(), 0.0, epsilon = 1e-12);

        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[0.7]]).unwrap();
        let r = forward_circumcenter(&fd, &k, &cfg()).unwrap();
        assert_eq!(r.status, CircumcenterStatus::Unique);
        assert_abs_diff_eq!(r.point.unwrap()[0], 0.5, epsilon = 1e-12);

        let single = PointSet::from_slices(&[&[0.3, 0.6]]).unwrap();
        let r = forward_circumcenter(&LegendreFunction::fermi_dirac(2), &single, &cfg()).unwrap();
        assert_eq!(r.status, CircumcenterStatus::Unique);
        assert_eq!(r.point.unwrap(), p(&[0.3, 0.6]));
        assert_eq!(r.iterations, 0);

        let fd2 = LegendreFunction::fermi_dirac(2);
        let k = PointSet::from_slices(&[&[0.3, 0.4], &[0.7, 0.4]]).unwrap();
        let r = forward_circumcenter(&fd2, &k, &cfg()).unwrap();
        assert_eq!(r.status, CircumcenterStatus::Unique);
        assert_abs_diff_eq!((r.point.unwrap() - p(&[0.5, 0.4])).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn overdetermined_collinear_set_is_empty() {
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.2], &[0.5], &[0.6]]).unwrap();
        let r = forward_circumcenter(&fd, &k, &cfg()).unwrap();
        assert_eq!(r.status, CircumcenterStatus::Empty);
        assert!(r.point.is_none());
        assert!(r.residual > 1e-6);
    }

    #[test]
    fn forward_outside_domain() {
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[1.2]]).unwrap();
        assert!(matches!(forward_circumcenter(&fd, &k, &cfg()), Err(Error::Domain { arg: "K", .. })));
        let boundary = PointSet::from_slices(&[&[1.0]]).unwrap();
        assert!(matches!(forward_circumcenter(&fd, &boundary, &cfg()), Err(Error::InfeasibleDomain)));
    }

    #[test]
    fn via_projection_examples() {
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[0.7]]).unwrap();
        let v = forward_circumcenter_via_projection(&fd, &k, &p(&[0.5]), &cfg()).unwrap();
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-14);

        let e = LegendreFunction::euclidean(2);
        let v = forward_circumcenter_via_projection(&e, &triangle(), &p(&[0.5, 0.5]), &cfg()).unwrap();
        assert_abs_diff_eq!((v - p(&[0.5, 0.5])).amax(), 0.0, epsilon = 1e-14);

        let fd2 = LegendreFunction::fermi_dirac(2);
        let k = PointSet::from_slices(&[&[0.3, 0.3], &[0.7, 0.7]]).unwrap();
        let v = forward_circumcenter_via_projection(&fd2, &k, &p(&[0.5, 0.5]), &cfg()).unwrap();
        assert_abs_diff_eq!((&v - p(&[0.5, 0.5])).amax(), 0.0, epsilon = 1e-12);
        let direct = forward_circumcenter(&fd2, &k, &cfg()).unwrap().point.unwrap();
        assert_abs_diff_eq!((v - direct).amax(), 0.0, epsilon = 1e-8);

        assert!(matches!(
            forward_circumcenter_via_projection(&fd2, &k, &p(&[0.5, 0.6]), &cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn forward_pseudo_examples() {
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[0.7]]).unwrap();
        let v = forward_pseudo_circumcenter(&fd, &k, &p(&[0.5]), &cfg()).unwrap();
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
        assert!(in_forward_equidistance_set(&fd, &k, &v, 1e-12));

        let burg = LegendreFunction::burg(1);
        let k = PointSet::from_slices(&[&[1.0], &[2.0]]).unwrap();
        let z = forward_circumcenter(&burg, &k, &cfg()).unwrap().point.unwrap();
        assert!(matches!(
            forward_pseudo_circumcenter(&burg, &k, &z, &cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn backward_examples() {
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[0.7]]).unwrap();
        let r = backward_circumcenter(&fd, &k, &cfg()).unwrap();
        assert_eq!(r.status, CircumcenterStatus::Unique);
        assert_abs_diff_eq!(r.point.unwrap()[0], 0.5, epsilon = 1e-14);

        let single = PointSet::from_slices(&[&[0.3, 0.6]]).unwrap();
        let r = backward_circumcenter(&LegendreFunction::fermi_dirac(2), &single, &cfg()).unwrap();
        assert_eq!(r.point.unwrap(), p(&[0.3, 0.6]));

        let e = LegendreFunction::euclidean(2);
        let r = backward_circumcenter(&e, &triangle(), &cfg()).unwrap();
        assert_abs_diff_eq!((r.point.unwrap() - p(&[0.5, 0.5])).amax(), 0.0, epsilon = 1e-14);

        let boundary = PointSet::from_slices(&[&[0.0], &[0.7]]).unwrap();
        assert!(matches!(backward_circumcenter(&fd, &boundary, &cfg()), Err(Error::Domain { .. })));
        let collinear = PointSet::from_slices(&[&[0.2], &[0.5], &[0.6]]).unwrap();
        assert_eq!(backward_circumcenter(&fd, &collinear, &cfg()).unwrap().status, CircumcenterStatus::Empty);
    }

    #[test]
    fn backward_pseudo_examples() {
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.4], &[0.6]]).unwrap();
        assert!(matches!(
            backward_pseudo_circumcenter(&fd, &k, &p(&[0.5]), &cfg()),
            Err(Error::Precondition(_))
        ));
        let single = PointSet::from_slices(&[&[0.4]]).unwrap();
        let v = backward_pseudo_circumcenter(&fd, &single, &p(&[0.3]), &cfg());
        // ∇f(0.4) = ln(2/3) < 0 lies outside [0, 1]
        assert!(matches!(v, Err(Error::Precondition(_))));
        let single = PointSet::from_slices(&[&[0.7]]).unwrap();
        let v = backward_pseudo_circumcenter(&fd, &single, &p(&[0.3]), &cfg()).unwrap();
        assert_abs_diff_eq!(v[0], (0.7f64 / 0.3).ln(), epsilon = 1e-15);
    }

    #[test]
    fn backward_via_projection_needs_flag() {
        let burg = LegendreFunction::burg(1);
        let k = PointSet::from_slices(&[&[1.0]]).unwrap();
        assert!(matches!(
            backward_circumcenter_via_projection(&burg, &k, &p(&[2.0]), &cfg()),
            Err(Error::Capability(_))
        ));
        let e = LegendreFunction::euclidean(2);
        let z = p(&[0.5, 0.5]);
        let v = backward_circumcenter_via_projection(&e, &triangle(), &z, &cfg()).unwrap();
        assert_abs_diff_eq!((v - z).amax(), 0.0, epsilon = 1e-12);
        let fd = LegendreFunction::fermi_dirac(1);
        let k = PointSet::from_slices(&[&[0.3], &[0.7]]).unwrap();
        assert!(matches!(
            backward_circumcenter_via_projection(&fd, &k, &p(&[0.5]), &cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mapping_examples() {
        let fd = LegendreFunction::fermi_dirac(1);
        let s = OperatorFamily::parse(&["flip:1"], 1).unwrap();
        let cc = CircumcenterConfig {
            cross_check: true,
            ..cfg()
        };
        let r = circumcenter_mapping(&fd, &s, &p(&[0.3]), &cc).unwrap();
        assert_abs_diff_eq!(r.point.unwrap()[0], 0.5, epsilon = 1e-12);
        let r = circumcenter_mapping(&fd, &s, &p(&[0.5]), &cc).unwrap();
        assert_eq!(r.point.unwrap(), p(&[0.5]));
        assert_eq!(r.residual, 0.0);

        // linear isometries in the euclidean case give P_{aff(S(x))}(0)
        let e = LegendreFunction::euclidean(2);
        let s = OperatorFamily::parse(&["orth:0,1;1,0"], 2).unwrap();
        let x = p(&[1.0, 0.0]);
        let r = circumcenter_mapping(&e, &s, &x, &cc).unwrap();
        let hull = affine_hull(&s.evaluate(&x).unwrap(), 1e-10);
        assert_abs_diff_eq!((r.point.unwrap() - hull.project(&p(&[0.0, 0.0]))).amax(), 0.0, epsilon = 1e-12);

        let s = OperatorFamily::parse(&["scale:3"], 1).unwrap();
        assert!(matches!(
            circumcenter_mapping(&fd, &s, &p(&[0.5]), &cfg()),
            Err(Error::Domain { arg: "S(x)", .. })
        ));
        assert!(matches!(
            circumcenter_mapping(&fd, &s, &p(&[1.0]), &cfg()),
            Err(Error::Domain { arg: "x", .. })
        ));
    }

    #[test]
    fn chained_flip_mapping_is_equidistant() {
        let fd = LegendreFunction::fermi_dirac(3);
        let s = OperatorFamily::new(vec![
            OperatorSpec::flip(3, [0, 1]).unwrap(),
            OperatorSpec::flip(3, [1, 2]).unwrap(),
        ])
        .unwrap();
        let x = p(&[0.2, 0.35, 0.9]);
        let cc = CircumcenterConfig {
            cross_check: true,
            ..cfg()
        };
        let r = circumcenter_mapping(&fd, &s, &x, &cc).unwrap();
        assert!(r.is_solved());
        let k = s.evaluate(&x).unwrap();
        assert!(in_forward_equidistance_set(&fd, &k, &r.point.unwrap(), 1e-8));
    }

    fn interior_set(n: usize, m: usize) -> impl Strategy<Value = (bool, Vec<Vec<f64>>)> {
        (any::<bool>(), proptest::collection::vec(proptest::collection::vec(0.02..0.98f64, n), m))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residual_forms_agree((fd, pts) in interior_set(3, 4), q in proptest::collection::vec(0.02..0.98f64, 3)) {
            let f = if fd { LegendreFunction::fermi_dirac(3) } else { LegendreFunction::euclidean(3) };
            let k = PointSet::new(pts.iter().map(|v| p(v)).collect()).unwrap();
            let q = p(&q);
            let a = equidistance_residual_forward(&f, &k, &q).unwrap();
            let b = equidistance_residual_direct(&f, &k, &q);
            prop_assert!((a - b).amax() <= 1e-12);
        }

        #[test]
        fn euclidean_operators_agree(pts in proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, 4), 1..=4),
                                     offset in proptest::collection::vec(-1.0..1.0f64, 4)) {
            let f = LegendreFunction::euclidean(4);
            let k = PointSet::new(pts.iter().map(|v| p(v)).collect()).unwrap();
            prop_assume!(is_affinely_independent(&k, 1e-6));
            let a = affine_hull(&k, 1e-10);
            let fwd = forward_circumcenter(&f, &k, &cfg()).unwrap();
            prop_assert_eq!(fwd.status, CircumcenterStatus::Unique);
            let c = fwd.point.unwrap();
            // points of the equidistance set off aff(K)
            let z = &c + (p(&offset) - a.project(&p(&offset)));
            let bwd = backward_circumcenter(&f, &k, &cfg()).unwrap().point.unwrap();
            let fps = forward_pseudo_circumcenter(&f, &k, &z, &cfg()).unwrap();
            let bps = backward_pseudo_circumcenter(&f, &k, &z, &cfg()).unwrap();
            let via = forward_circumcenter_via_projection(&f, &k, &z, &cfg()).unwrap();
            for other in [&bwd, &fps, &bps, &via] {
                prop_assert!((other - &c).amax() <= 1e-10);
            }
        }

        #[test]
        fn flip_family_routes_agree(x in proptest::collection::vec(0.02..0.98f64, 4),
                                    masks in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 4), 1..=3)) {
            let f = LegendreFunction::fermi_dirac(4);
            let members = masks
                .iter()
                .map(|m| OperatorSpec::flip(4, (0..4).filter(|&i| m[i])).unwrap())
                .collect();
            let s = OperatorFamily::new(members).unwrap();
            let x = p(&x);
            let k = s.evaluate(&x).unwrap();
            let r = forward_circumcenter(&f, &k, &cfg()).unwrap();
            prop_assert!(r.is_solved());
            let c = r.point.unwrap();
            prop_assert!(in_forward_equidistance_set(&f, &k, &c, 1e-8));
            prop_assert!(affine_hull(&k, 1e-10).contains(&c, 1e-8));
            let z = s.common_fixed_point(&f).unwrap();
            let via = forward_circumcenter_via_projection(&f, &k, &z, &cfg()).unwrap();
            prop_assert!((via - &c).amax() <= 1e-8);
        }
    }
}
