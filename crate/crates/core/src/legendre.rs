//! Separable Legendre functions and the Bregman distance they induce.
//!
//! Three instances are provided:
//!
//! | name          | f(x)                                   | dom f       | int dom f* |
//! |---------------|----------------------------------------|-------------|------------|
//! | `euclidean`   | ½‖x‖²                                  | R^n         | R^n        |
//! | `burg`        | −Σ ln x_i                              | ]0,∞[^n     | ]−∞,0[^n   |
//! | `fermi_dirac` | Σ x_i ln x_i + (1−x_i) ln(1−x_i)       | [0,1]^n     | R^n        |
//!
//! Each is a sum of identical one-dimensional kernels, so gradients act
//! coordinatewise, Hessians are diagonal and every domain is a box.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::affine::AffineSubspace;
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LegendreKind {
    Euclidean,
    Burg,
    FermiDirac,
}

impl LegendreKind {
    pub const ALL: [LegendreKind; 3] = [LegendreKind::Euclidean, LegendreKind::Burg, LegendreKind::FermiDirac];

    pub fn name(self) -> &'static str {
        match self {
            LegendreKind::Euclidean => "euclidean",
            LegendreKind::Burg => "burg",
            LegendreKind::FermiDirac => "fermi_dirac",
        }
    }

    /// Open interval `int dom` of the one-dimensional kernel.
    pub fn interior_bounds(self) -> (f64, f64) {
        match self {
            LegendreKind::Euclidean => (f64::NEG_INFINITY, f64::INFINITY),
            LegendreKind::Burg => (0.0, f64::INFINITY),
            LegendreKind::FermiDirac => (0.0, 1.0),
        }
    }

    /// Open interval `int dom` of the conjugate kernel.
    pub fn conj_interior_bounds(self) -> (f64, f64) {
        match self {
            LegendreKind::Euclidean | LegendreKind::FermiDirac => (f64::NEG_INFINITY, f64::INFINITY),
            LegendreKind::Burg => (f64::NEG_INFINITY, 0.0),
        }
    }

    fn in_dom1(self, t: f64) -> bool {
        match self {
            LegendreKind::Euclidean => t.is_finite(),
            LegendreKind::Burg => t > 0.0 && t.is_finite(),
            LegendreKind::FermiDirac => (0.0..=1.0).contains(&t),
        }
    }

    fn in_int_dom1(self, t: f64, margin: f64) -> bool {
        let (lo, hi) = self.interior_bounds();
        t.is_finite() && t > lo + margin && t < hi - margin
    }

    fn value1(self, t: f64) -> f64 {
        match self {
            LegendreKind::Euclidean => 0.5 * t * t,
            LegendreKind::Burg => -t.ln(),
            LegendreKind::FermiDirac => xlogx(t) + xlogx(1.0 - t),
        }
    }

    fn grad1(self, t: f64) -> f64 {
        match self {
            LegendreKind::Euclidean => t,
            LegendreKind::Burg => -1.0 / t,
            LegendreKind::FermiDirac => t.ln() - (-t).ln_1p(),
        }
    }

    fn hess1(self, t: f64) -> f64 {
        match self {
            LegendreKind::Euclidean => 1.0,
            LegendreKind::Burg => 1.0 / (t * t),
            LegendreKind::FermiDirac => 1.0 / (t * (1.0 - t)),
        }
    }

    fn third1(self, t: f64) -> f64 {
        match self {
            LegendreKind::Euclidean => 0.0,
            LegendreKind::Burg => -2.0 / (t * t * t),
            LegendreKind::FermiDirac => {
                let s = t * (1.0 - t);
                (2.0 * t - 1.0) / (s * s)
            }
        }
    }

    fn conj_grad1(self, s: f64) -> f64 {
        match self {
            LegendreKind::Euclidean => s,
            LegendreKind::Burg => -1.0 / s,
            LegendreKind::FermiDirac => {
                if s >= 0.0 {
                    1.0 / (1.0 + (-s).exp())
                } else {
                    let e = s.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// One-dimensional Bregman distance for `x ∈ dom`, `y ∈ int dom`.
    ///
    /// Written in a form without first-order cancellation, so tiny distances
    /// keep their relative accuracy.
    fn distance1(self, x: f64, y: f64) -> f64 {
        let d = match self {
            LegendreKind::Euclidean => 0.5 * (x - y) * (x - y),
            LegendreKind::Burg => {
                let u = (x - y) / y;
                u - u.ln_1p()
            }
            LegendreKind::FermiDirac => {
                let head = if x == 0.0 { 0.0 } else { x * ((x - y) / y).ln_1p() };
                let tail = if x == 1.0 { 0.0 } else { (1.0 - x) * ((y - x) / (1.0 - y)).ln_1p() };
                head + tail
            }
        };
        d.max(0.0)
    }
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

impl fmt::Display for LegendreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LegendreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "euclidean" => Ok(LegendreKind::Euclidean),
            "burg" => Ok(LegendreKind::Burg),
            "fermi_dirac" | "fermi-dirac" => Ok(LegendreKind::FermiDirac),
            other => Err(Error::Parse(format!(
                "unknown function `{other}` (expected euclidean | burg | fermi_dirac)"
            ))),
        }
    }
}

/// A separable Legendre function on `R^n`.
///
/// Immutable after construction; cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreFunction {
    kind: LegendreKind,
    dim: usize,
    forward_override: Option<bool>,
}

impl LegendreFunction {
    pub fn new(kind: LegendreKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            kind,
            dim,
            forward_override: None,
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(LegendreKind::Euclidean, dim).expect("positive dimension")
    }

    pub fn burg(dim: usize) -> Self {
        Self::new(LegendreKind::Burg, dim).expect("positive dimension")
    }

    pub fn fermi_dirac(dim: usize) -> Self {
        Self::new(LegendreKind::FermiDirac, dim).expect("positive dimension")
    }

    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        Self::new(name.parse()?, dim)
    }

    /// Overrides the forward-projection capability flag.
    pub fn with_forward_projections(mut self, allow: bool) -> Self {
        self.forward_override = Some(allow);
        self
    }

    pub fn kind(&self) -> LegendreKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether forward Bregman projections onto closed convex sets meeting
    /// `int dom f` are known to exist. Burg defaults to `false`.
    pub fn allows_forward_projections(&self) -> bool {
        self.forward_override.unwrap_or(match self.kind {
            LegendreKind::Euclidean | LegendreKind::FermiDirac => true,
            LegendreKind::Burg => false,
        })
    }

    /// `dom f` and `dom f*` are both all of R^n.
    pub fn is_full_domain(&self) -> bool {
        self.kind == LegendreKind::Euclidean
    }

    pub fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            })
        }
    }

    pub fn in_domain(&self, x: &Point) -> bool {
        x.len() == self.dim && x.iter().all(|&t| self.kind.in_dom1(t))
    }

    /// `x ∈ int dom f` with every coordinate at least `margin` away from the
    /// boundary.
    pub fn in_interior(&self, x: &Point, margin: f64) -> bool {
        x.len() == self.dim && x.iter().all(|&t| self.kind.in_int_dom1(t, margin))
    }

    pub fn in_conj_interior(&self, u: &Point) -> bool {
        let (lo, hi) = self.kind.conj_interior_bounds();
        u.len() == self.dim && u.iter().all(|&s| s.is_finite() && s > lo && s < hi)
    }

    /// `f(x)`, or `+inf` outside `dom f`.
    pub fn value(&self, x: &Point) -> ExtendedReal {
        if !self.in_domain(x) {
            return ExtendedReal::Infinity;
        }
        ExtendedReal::Finite(x.iter().map(|&t| self.kind.value1(t)).sum())
    }

    pub(crate) fn require_interior(&self, x: &Point, arg: &'static str) -> Result<()> {
        self.check_dim(x)?;
        if self.in_interior(x, 0.0) {
            Ok(())
        } else {
            Err(Error::domain(arg, format!("not in int dom {}", self.name())))
        }
    }

    pub fn gradient(&self, x: &Point) -> Result<Point> {
        self.require_interior(x, "x")?;
        Ok(x.map(|t| self.kind.grad1(t)))
    }

    /// Diagonal of `∇²f(x)`.
    pub fn hessian_diag(&self, x: &Point) -> Result<Point> {
        self.require_interior(x, "x")?;
        Ok(x.map(|t| self.kind.hess1(t)))
    }

    pub fn hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_diagonal(&self.hessian_diag(x)?))
    }

    /// Diagonal of the third derivative tensor (only the `iii` entries are
    /// nonzero for a separable function).
    pub fn third_derivative_diag(&self, x: &Point) -> Result<Point> {
        self.require_interior(x, "x")?;
        Ok(x.map(|t| self.kind.third1(t)))
    }

    /// `∇f*(u)`, the inverse of `∇f` on `int dom f*`.
    pub fn conj_gradient(&self, u: &Point) -> Result<Point> {
        self.check_dim(u)?;
        if !self.in_conj_interior(u) {
            return Err(Error::domain("u", format!("not in int dom {}*", self.name())));
        }
        Ok(u.map(|s| self.kind.conj_grad1(s)))
    }

    /// Largest `τ ≥ 0` such that `x + t·dir` stays in the open domain for
    /// every `t < τ` (`+inf` if the ray never leaves it).
    pub fn max_feasible_step(&self, x: &Point, dir: &Point) -> f64 {
        let (lo, hi) = self.kind.interior_bounds();
        x.iter()
            .zip(dir.iter())
            .map(|(&xi, &di)| {
                if di < 0.0 && lo.is_finite() {
                    (xi - lo) / -di
                } else if di > 0.0 && hi.is_finite() {
                    (hi - xi) / di
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// A canonical interior point: the origin, the all-ones vector, or the
    /// centre of the unit box.
    pub fn interior_center(&self) -> Point {
        let c = match self.kind {
            LegendreKind::Euclidean => 0.0,
            LegendreKind::Burg => 1.0,
            LegendreKind::FermiDirac => 0.5,
        };
        DVector::from_element(self.dim, c)
    }

    /// Whether the whole affine subspace lies in `dom f`. Proper box domains
    /// contain no line, so only full-space domains or single points qualify.
    pub fn domain_contains_affine(&self, a: &AffineSubspace) -> bool {
        if self.is_full_domain() {
            return true;
        }
        a.dim() == 0 && self.in_domain(a.base())
    }

    /// Whether the whole affine subspace lies in `int dom f*`.
    pub fn conj_interior_contains_affine(&self, a: &AffineSubspace) -> bool {
        match self.kind {
            LegendreKind::Euclidean | LegendreKind::FermiDirac => true,
            LegendreKind::Burg => a.dim() == 0 && self.in_conj_interior(a.base()),
        }
    }

    /// One-dimensional distance of coordinate pairs; exposed for the
    /// separable-sum identity and for sublevel-set bounds.
    pub fn coordinate_distance(&self, x: f64, y: f64) -> ExtendedReal {
        if !self.kind.in_int_dom1(y, 0.0) || !self.kind.in_dom1(x) {
            ExtendedReal::Infinity
        } else {
            ExtendedReal::Finite(self.kind.distance1(x, y))
        }
    }
}

/// The Bregman distance `D_f(x, y) = f(x) − f(y) − ⟨∇f(y), x − y⟩`.
///
/// Returns `+inf` when `x ∉ dom f` or `y ∉ int dom f`. Never negative.
///
/// # Panics
///
/// If `x` and `y` do not both have dimension `f.dim()`.
pub fn bregman_distance(f: &LegendreFunction, x: &Point, y: &Point) -> ExtendedReal {
    assert!(
        x.len() == f.dim() && y.len() == f.dim(),
        "bregman_distance: dimension mismatch ({} / {} vs {})",
        x.len(),
        y.len(),
        f.dim()
    );
    if !f.in_domain(x) || !f.in_interior(y, 0.0) {
        return ExtendedReal::Infinity;
    }
    ExtendedReal::Finite(
        x.iter()
            .zip(y.iter())
            .map(|(&xi, &yi)| f.kind.distance1(xi, yi))
            .sum(),
    )
}

/// `⟨x − y, ∇f(x) − ∇f(y)⟩`, strictly positive for `x ≠ y`.
pub fn gradient_monotonicity_gap(f: &LegendreFunction, x: &Point, y: &Point) -> Result<f64> {
    f.require_interior(x, "x")?;
    f.require_interior(y, "y")?;
    let gx = f.gradient(x)?;
    let gy = f.gradient(y)?;
    Ok((x - y).dot(&(gx - gy)))
}
