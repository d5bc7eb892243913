//! Concrete operator families `S = {Id, T_1, …, T_m}` with analytic fixed
//! sets, plus Bregman-isometry and demiclosedness diagnostics.
//!
//! Operator strings (indices are 1-based):
//!
//! ```text
//! id                 identity
//! flip:1,3           y_i = 1 − x_i on Λ = {1,3}, y_i = x_i elsewhere
//! scale:2.0,3.0      y_i = c_i x_i
//! power:2.0,2.0      y = c·x^μ (dimension 1)
//! orth:0,1;1,0       y = Qx, rows separated by ';' (or a path to a matrix file)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::affine::{AffineSubspace, PointSet};
use crate::error::{Error, Result};
use crate::legendre::{bregman_distance, LegendreFunction};
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    LinearOrthogonal(DMatrix<f64>),
    CoordinateScaling(DVector<f64>),
    /// Sorted 0-based index set Λ.
    CoordinateFlip(Vec<usize>),
    ScalarPower { c: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    dim: usize,
}

/// Analytic description of a fixed-point set.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedSet {
    /// `x_i = v` for every pinned `(i, v)`, all other coordinates free.
    Coordinates { dim: usize, pinned: BTreeMap<usize, f64> },
    Affine(AffineSubspace),
    Finite(Vec<Point>),
    Empty,
}

const FIXED_TOL: f64 = 1e-10;

impl FixedSet {
    pub fn whole_space(dim: usize) -> Self {
        FixedSet::Coordinates {
            dim,
            pinned: BTreeMap::new(),
        }
    }

    fn pinned(dim: usize, pins: impl IntoIterator<Item = (usize, f64)>) -> Self {
        FixedSet::Coordinates {
            dim,
            pinned: pins.into_iter().collect(),
        }
    }

    /// The set as an affine subspace, when it is one.
    pub fn to_affine(&self) -> Option<AffineSubspace> {
        match self {
            FixedSet::Coordinates { dim, pinned } => {
                let mut base = DVector::zeros(*dim);
                pinned.iter().for_each(|(&i, &v)| base[i] = v);
                let free: Vec<Point> = (0..*dim)
                    .filter(|i| !pinned.contains_key(i))
                    .map(|i| unit(*dim, i))
                    .collect();
                Some(AffineSubspace::from_directions(base, &free, FIXED_TOL))
            }
            FixedSet::Affine(a) => Some(a.clone()),
            FixedSet::Finite(pts) if pts.len() == 1 => Some(AffineSubspace::point(pts[0].clone())),
            _ => None,
        }
    }

    pub fn intersect(&self, other: &FixedSet) -> FixedSet {
        match (self, other) {
            (FixedSet::Empty, _) | (_, FixedSet::Empty) => FixedSet::Empty,
            (FixedSet::Finite(pts), other) | (other, FixedSet::Finite(pts)) => {
                let kept: Vec<Point> = pts.iter().filter(|p| other.contains(p)).cloned().collect();
                if kept.is_empty() {
                    FixedSet::Empty
                } else {
                    FixedSet::Finite(kept)
                }
            }
            (FixedSet::Coordinates { dim, pinned: a }, FixedSet::Coordinates { pinned: b, .. }) => {
                let mut merged = a.clone();
                for (&i, &v) in b {
                    match merged.insert(i, v) {
                        Some(old) if old != v => return FixedSet::Empty,
                        _ => {}
                    }
                }
                FixedSet::Coordinates {
                    dim: *dim,
                    pinned: merged,
                }
            }
            (a, b) => {
                let (a, b) = (a.to_affine().expect("affine"), b.to_affine().expect("affine"));
                match a.intersect(&b, FIXED_TOL) {
                    Some(c) => FixedSet::Affine(c),
                    None => FixedSet::Empty,
                }
            }
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        let tol = FIXED_TOL * (1.0 + x.amax());
        match self {
            FixedSet::Empty => false,
            FixedSet::Coordinates { dim, pinned } => {
                x.len() == *dim && pinned.iter().all(|(&i, &v)| (x[i] - v).abs() <= tol)
            }
            FixedSet::Affine(a) => a.contains(x, tol),
            FixedSet::Finite(pts) => pts.iter().any(|p| p.len() == x.len() && (p - x).amax() <= tol),
        }
    }

    /// Euclidean-nearest point of the set.
    pub fn nearest(&self, x: &Point) -> Option<Point> {
        match self {
            FixedSet::Empty => None,
            FixedSet::Coordinates { pinned, .. } => {
                let mut y = x.clone();
                pinned.iter().for_each(|(&i, &v)| y[i] = v);
                Some(y)
            }
            FixedSet::Affine(a) => Some(a.project(x)),
            FixedSet::Finite(pts) => pts
                .iter()
                .min_by(|p, q| (*p - x).norm().total_cmp(&(*q - x).norm()))
                .cloned(),
        }
    }

    /// A point of the set inside `int dom f` (with margin), preferring the
    /// one nearest the centre of the domain.
    pub fn interior_point(&self, f: &LegendreFunction, margin: f64) -> Option<Point> {
        match self {
            FixedSet::Empty => None,
            FixedSet::Coordinates { .. } => self
                .nearest(&f.interior_center())
                .filter(|c| f.in_interior(c, margin)),
            FixedSet::Affine(a) => {
                let c = a.project(&f.interior_center());
                if f.in_interior(&c, margin) {
                    Some(c)
                } else {
                    crate::projections::interior_probe(f, a, &[], margin)
                }
            }
            FixedSet::Finite(pts) => pts.iter().find(|p| f.in_interior(p, margin)).cloned(),
        }
    }
}

impl OperatorSpec {
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: OperatorKind::Identity,
            dim,
        }
    }

    pub fn orthogonal(q: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n || n == 0 {
            return Err(Error::InvalidArgument("orthogonal matrix must be square and nonempty".into()));
        }
        if (q.transpose() * &q - DMatrix::identity(n, n)).amax() > 1e-10 {
            return Err(Error::InvalidArgument("matrix is not orthogonal (QᵀQ ≠ I)".into()));
        }
        Ok(Self {
            kind: OperatorKind::LinearOrthogonal(q),
            dim: n,
        })
    }

    pub fn scaling(c: DVector<f64>) -> Result<Self> {
        if c.is_empty() || !c.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument("scaling factors must be positive".into()));
        }
        let dim = c.len();
        Ok(Self {
            kind: OperatorKind::CoordinateScaling(c),
            dim,
        })
    }

    /// Flip on the 0-based index set `indices`.
    pub fn flip(dim: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidArgument(format!("flip index {} out of range 1..={dim}", bad + 1)));
        }
        Ok(Self {
            kind: OperatorKind::CoordinateFlip(set.into_iter().collect()),
            dim,
        })
    }

    pub fn power(c: f64, mu: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument("power map needs c > 0".into()));
        }
        if !(mu > 0.0 && mu.is_finite()) || mu == 1.0 {
            return Err(Error::InvalidArgument("power map needs μ > 0, μ ≠ 1".into()));
        }
        Ok(Self {
            kind: OperatorKind::ScalarPower { c, mu },
            dim: 1,
        })
    }

    /// Parses an operator string for ambient dimension `dim`.
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), a.trim()),
            None => (s, ""),
        };
        let op = match head {
            "id" | "identity" => Self::identity(dim),
            "flip" => {
                let idx = parse_list(args)?
                    .into_iter()
                    .map(|v| {
                        if v >= 1.0 && v.fract() == 0.0 {
                            Ok(v as usize - 1)
                        } else {
                            Err(Error::Parse(format!("flip index `{v}` must be a positive integer")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::flip(dim, idx)?
            }
            "scale" => Self::scaling(DVector::from_vec(parse_list(args)?))?,
            "power" => match parse_list(args)?.as_slice() {
                [c, mu] => Self::power(*c, *mu)?,
                _ => return Err(Error::Parse("power expects `power:c,mu`".into())),
            },
            "orth" => Self::orthogonal(parse_matrix_arg(args)?)?,
            other => return Err(Error::Parse(format!("unknown operator `{other}`"))),
        };
        if op.dim != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: op.dim,
            });
        }
        Ok(op)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(match &self.kind {
            OperatorKind::Identity => x.clone(),
            OperatorKind::LinearOrthogonal(q) => q * x,
            OperatorKind::CoordinateScaling(c) => x.component_mul(c),
            OperatorKind::CoordinateFlip(idx) => {
                let mut y = x.clone();
                for &i in idx {
                    y[i] = 1.0 - y[i];
                }
                y
            }
            OperatorKind::ScalarPower { c, mu } => {
                let t = x[0];
                if t < 0.0 {
                    return Err(Error::domain("x", "power map is defined on [0, ∞[ only"));
                }
                DVector::from_element(1, c * t.powf(*mu))
            }
        })
    }

    pub fn fixed_set(&self) -> FixedSet {
        let n = self.dim;
        match &self.kind {
            OperatorKind::Identity => FixedSet::whole_space(n),
            OperatorKind::CoordinateFlip(idx) => FixedSet::pinned(n, idx.iter().map(|&i| (i, 0.5))),
            OperatorKind::CoordinateScaling(c) => {
                FixedSet::pinned(n, (0..n).filter(|&i| c[i] != 1.0).map(|i| (i, 0.0)))
            }
            OperatorKind::LinearOrthogonal(q) => {
                let m = q - DMatrix::identity(n, n);
                let eig = SymmetricEigen::new(m.transpose() * m);
                let free: Vec<Point> = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v.abs() < 1e-10)
                    .map(|(j, _)| eig.eigenvectors.column(j).into_owned())
                    .collect();
                FixedSet::Affine(AffineSubspace::from_directions(DVector::zeros(n), &free, 1e-10))
            }
            OperatorKind::ScalarPower { c, mu } => {
                let star = c.powf(-1.0 / (mu - 1.0));
                FixedSet::Finite(vec![DVector::from_element(1, 0.0), DVector::from_element(1, star)])
            }
        }
    }

    /// Euclidean-nearest fixed point of the operator.
    pub fn fixed_set_project(&self, x: &Point) -> Option<Point> {
        if x.len() != self.dim {
            return None;
        }
        self.fixed_set().nearest(x)
    }
}

fn unit(n: usize, i: usize) -> Point {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Err(Error::Parse("missing operator arguments".into()));
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{}`: {e}", t.trim())))
        })
        .collect()
}

/// Inline `a,b;c,d` rows or a path to a file with one row per line
/// (comma or whitespace separated).
fn parse_matrix_arg(s: &str) -> Result<DMatrix<f64>> {
    let text = if Path::new(s).is_file() {
        std::fs::read_to_string(s).map_err(|e| Error::Parse(format!("reading `{s}`: {e}")))?
    } else {
        s.replace(';', "\n")
    };
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::Parse("matrix rows must be nonempty and of equal length".into()));
    }
    Ok(DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
}

/// The members `T_1, …, T_m`; the identity is implicit when forming `S(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFamily {
    members: Vec<OperatorSpec>,
    dim: usize,
}

impl OperatorFamily {
    pub fn new(members: Vec<OperatorSpec>) -> Result<Self> {
        let dim = members
            .first()
            .map(OperatorSpec::dim)
            .ok_or_else(|| Error::InvalidArgument("operator family must have at least one member".into()))?;
        if let Some(op) = members.iter().find(|op| op.dim != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: op.dim,
            });
        }
        Ok(Self { members, dim })
    }

    pub fn parse<S: AsRef<str>>(specs: &[S], dim: usize) -> Result<Self> {
        Self::new(
            specs
                .iter()
                .map(|s| OperatorSpec::parse(s.as_ref(), dim))
                .collect::<Result<_>>()?,
        )
    }

    pub fn members(&self) -> &[OperatorSpec] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `S(x) = {x, T_1x, …, T_mx}` in that order.
    pub fn evaluate(&self, x: &Point) -> Result<PointSet> {
        let mut pts = Vec::with_capacity(self.members.len() + 1);
        pts.push(x.clone());
        for op in &self.members {
            pts.push(op.apply(x)?);
        }
        PointSet::new(pts)
    }

    /// `∩ Fix T_i`, as far as the analytic descriptors determine it.
    pub fn common_fixed_set(&self) -> FixedSet {
        self.members
            .iter()
            .map(OperatorSpec::fixed_set)
            .fold(FixedSet::whole_space(self.dim), |acc, s| acc.intersect(&s))
    }

    /// A point of `int dom f ∩ (∩ Fix T_i)`, if one is derivable.
    pub fn common_fixed_point(&self, f: &LegendreFunction) -> Option<Point> {
        if f.dim() != self.dim {
            return None;
        }
        self.common_fixed_set().interior_point(f, crate::DEFAULT_MARGIN)
    }

    /// `max_i ‖T_i x − x‖∞`.
    pub fn fixed_point_residual(&self, x: &Point) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for op in &self.members {
            worst = worst.max((op.apply(x)? - x).amax());
        }
        Ok(worst)
    }
}

/// `|D_f(Tx, Ty) − D_f(x, y)|`, with two infinities agreeing and a single
/// infinity giving `+inf`.
pub fn isometry_gap(f: &LegendreFunction, t: &OperatorSpec, x: &Point, y: &Point) -> Result<f64> {
    f.check_dim(x)?;
    f.check_dim(y)?;
    let (tx, ty) = (t.apply(x)?, t.apply(y)?);
    Ok(bregman_distance(f, &tx, &ty).abs_diff(bregman_distance(f, x, y)).to_f64())
}

/// `φ(x) = D_f(x, Tx)`.
pub fn demiclosedness_profile(f: &LegendreFunction, t: &OperatorSpec, x: &Point) -> Result<f64> {
    f.check_dim(x)?;
    if !f.in_interior(x, 0.0) {
        return Err(Error::domain("x", format!("not in int dom {}", f.name())));
    }
    let tx = t.apply(x)?;
    if !f.in_interior(&tx, 0.0) {
        return Err(Error::domain("Tx", format!("not in int dom {}", f.name())));
    }
    Ok(bregman_distance(f, x, &tx).to_f64())
}
