//! Affine hulls of finite point sets and orthogonal projection onto affine
//! subspaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::Point;

/// Relative rank tolerance used when orthonormalizing generating directions.
pub const DEFAULT_HULL_TOL: f64 = 1e-10;

/// `base + span(basis)` with orthonormal basis columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    base: Point,
    basis: DMatrix<f64>,
    extent: f64,
}

impl AffineSubspace {
    /// Builds a subspace from a base point and an orthonormal basis.
    pub fn new(base: Point, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != base.len() {
            return Err(Error::Dimension {
                expected: base.len(),
                found: basis.nrows(),
            });
        }
        let d = basis.ncols();
        let gram = basis.transpose() * &basis;
        if (gram - DMatrix::identity(d, d)).amax() > 1e-12 {
            return Err(Error::InvalidArgument("basis columns are not orthonormal".into()));
        }
        Ok(Self {
            base,
            basis,
            extent: 1.0,
        })
    }

    /// `base + span(directions)`; the directions need not be independent.
    pub fn from_directions(base: Point, directions: &[Point], tol: f64) -> Self {
        let n = base.len();
        let m = DMatrix::from_fn(n, directions.len(), |i, j| directions[j][i]);
        let scale = directions.iter().map(|d| d.norm()).fold(0.0, f64::max);
        Self {
            basis: orthonormal_range(&m, tol * scale),
            base,
            extent: if scale > 0.0 { scale } else { 1.0 },
        }
    }

    pub fn point(base: Point) -> Self {
        let n = base.len();
        Self {
            base,
            basis: DMatrix::zeros(n, 0),
            extent: 1.0,
        }
    }

    pub fn whole_space(n: usize) -> Self {
        Self {
            base: DVector::zeros(n),
            basis: DMatrix::identity(n, n),
            extent: 1.0,
        }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    /// Diameter-like length scale of the generating set (1 when unknown).
    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn point_at(&self, coords: &DVector<f64>) -> Point {
        &self.base + &self.basis * coords
    }

    /// Basis coordinates of the orthogonal projection of `x`.
    pub fn coordinates(&self, x: &Point) -> DVector<f64> {
        self.basis.transpose() * (x - &self.base)
    }

    pub fn project(&self, z: &Point) -> Point {
        self.point_at(&self.coordinates(z))
    }

    /// Residual of the projection is at most `tol` in the max norm.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        x.len() == self.ambient_dim() && (x - self.project(x)).amax() <= tol
    }

    /// Rebases the subspace at (the projection of) another point.
    pub fn rebased(&self, base: &Point) -> Self {
        Self {
            base: self.project(base),
            basis: self.basis.clone(),
            extent: self.extent,
        }
    }

    /// Orthonormal basis of the orthogonal complement of the direction space.
    pub fn normal_basis(&self) -> DMatrix<f64> {
        let n = self.ambient_dim();
        let complement = DMatrix::identity(n, n) - &self.basis * self.basis.transpose();
        let eig = SymmetricEigen::new(complement);
        let cols: Vec<DVector<f64>> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.5)
            .map(|(j, _)| eig.eigenvectors.column(j).into_owned())
            .collect();
        columns_to_matrix(n, &cols)
    }

    /// Intersection with another subspace, or `None` when they are disjoint.
    pub fn intersect(&self, other: &AffineSubspace, tol: f64) -> Option<AffineSubspace> {
        let n = self.ambient_dim();
        let n1 = self.normal_basis();
        let n2 = other.normal_basis();
        let k1 = n1.ncols();
        let k2 = n2.ncols();
        if k1 + k2 == 0 {
            return Some(self.clone());
        }
        // constraints Nᵀx = Nᵀb stacked
        let mut m = DMatrix::zeros(k1 + k2, n);
        let mut r = DVector::zeros(k1 + k2);
        for j in 0..k1 {
            m.row_mut(j).copy_from(&n1.column(j).transpose());
            r[j] = n1.column(j).dot(&self.base);
        }
        for j in 0..k2 {
            m.row_mut(k1 + j).copy_from(&n2.column(j).transpose());
            r[k1 + j] = n2.column(j).dot(&other.base);
        }
        let x = least_squares_min_norm(&m, &r, 1e-12)?;
        let scale = 1.0 + self.base.amax().max(other.base.amax());
        if (&m * &x - &r).amax() > tol * scale {
            return None;
        }
        let gram = m.transpose() * &m;
        let eig = SymmetricEigen::new(gram);
        let cols: Vec<DVector<f64>> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &v)| v.abs() < 1e-10)
            .map(|(j, _)| eig.eigenvectors.column(j).into_owned())
            .collect();
        Some(AffineSubspace {
            base: x,
            basis: columns_to_matrix(n, &cols),
            extent: self.extent.max(other.extent),
        })
    }
}

fn columns_to_matrix(n: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Orthonormal basis of the column space of `m`, keeping singular
/// directions strictly above `abs_tol`.
pub(crate) fn orthonormal_range(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 || m.amax() == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > abs_tol)
        .map(|(j, _)| u.column(j).into_owned())
        .collect();
    columns_to_matrix(n, &cols)
}

/// Minimum-norm least-squares solution of `m x = r`, with singular values
/// below `rel_tol · σ_max` treated as zero. `None` only if the SVD fails.
pub(crate) fn least_squares_min_norm(m: &DMatrix<f64>, r: &DVector<f64>, rel_tol: f64) -> Option<DVector<f64>> {
    if m.ncols() == 0 {
        return Some(DVector::zeros(0));
    }
    if m.nrows() == 0 || m.amax() == 0.0 {
        return Some(DVector::zeros(m.ncols()));
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.max();
    svd.solve(r, rel_tol * smax).ok()
}

/// Numerical rank with singular values above `rel_tol · σ_max`.
pub(crate) fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 || m.amax() == 0.0 {
        return 0;
    }
    let s = SVD::new(m.clone(), false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// The ordered set `K = {q_0, …, q_m}`; `q_0` is the base of its hull.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("point set must be nonempty".into()))?;
        let n = first.len();
        for p in &points {
            if p.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: p.len(),
                });
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument("point set contains a non-finite coordinate".into()));
            }
        }
        Ok(Self { points })
    }

    /// Convenience constructor from coordinate slices.
    pub fn from_slices(points: &[&[f64]]) -> Result<Self> {
        Self::new(points.iter().map(|p| DVector::from_column_slice(p)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn first(&self) -> &Point {
        &self.points[0]
    }

    pub fn centroid(&self) -> Point {
        let sum = self
            .points
            .iter()
            .fold(DVector::zeros(self.dim()), |acc, p| acc + p);
        sum / self.points.len() as f64
    }

    /// Largest point norm.
    pub fn scale(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Largest distance from `q_0`.
    pub fn diameter_from_first(&self) -> f64 {
        let q0 = self.first();
        self.points.iter().map(|p| (p - q0).norm()).fold(0.0, f64::max)
    }

    /// Image of the set under a point map, keeping order.
    pub fn map<F: FnMut(&Point) -> Point>(&self, f: F) -> Result<PointSet> {
        PointSet::new(self.points.iter().map(f).collect())
    }

    /// Difference vectors `q_i − q_0`, `i ≥ 1`.
    pub fn differences(&self) -> Vec<Point> {
        let q0 = self.first();
        self.points[1..].iter().map(|p| p - q0).collect()
    }
}

/// `aff(K)` based at `q_0`. Singular directions below `tol · scale`, with
/// `scale` the largest point norm, are discarded.
pub fn affine_hull(k: &PointSet, tol: f64) -> AffineSubspace {
    let n = k.dim();
    let diffs = k.differences();
    let m = DMatrix::from_fn(n, diffs.len(), |i, j| diffs[j][i]);
    let scale = k.scale();
    let diameter = k.diameter_from_first();
    AffineSubspace {
        base: k.first().clone(),
        basis: orthonormal_range(&m, tol * scale),
        extent: if diameter > 0.0 { diameter } else { 1.0 },
    }
}

pub fn euclidean_project(a: &AffineSubspace, z: &Point) -> Point {
    a.project(z)
}

pub fn is_affinely_independent(k: &PointSet, tol: f64) -> bool {
    affine_hull(k, tol).dim() + 1 == k.len()
}
