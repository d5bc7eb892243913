//! Seeded, deterministic invariant suite over every module.
//!
//! Each property draws from its own ChaCha stream of the suite seed, so the
//! report for a given seed is byte-identical across runs and adding a
//! property does not perturb the others.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{affine_hull, is_affinely_independent, AffineSubspace, PointSet};
use crate::circumcenter::{
    backward_circumcenter, backward_pseudo_circumcenter, circumcenter_mapping, equidistance_residual_direct,
    equidistance_residual_forward, forward_circumcenter, forward_circumcenter_via_projection,
    forward_pseudo_circumcenter, in_forward_equidistance_set, CircumcenterConfig, CircumcenterStatus,
};
use crate::error::Result;
use crate::legendre::{bregman_distance, LegendreFunction, LegendreKind};
use crate::method::{check_forward_monotone, run, MethodConfig, TraceStatus};
use crate::operators::{demiclosedness_profile, isometry_gap, OperatorFamily, OperatorSpec};
use crate::projections::{backward_project_affine, forward_project_affine, pythagoras_residual, SolverConfig};
use crate::{inf_norm, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    pub fn holds(self, value: f64) -> bool {
        match self {
            Bound::AtMost(t) => value <= t,
            Bound::AtLeast(t) => value >= t,
        }
    }

    fn unattainable(self) -> Bound {
        match self {
            Bound::AtMost(_) => Bound::AtMost(f64::NEG_INFINITY),
            Bound::AtLeast(_) => Bound::AtLeast(f64::INFINITY),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(t) => write!(f, "<= {t:e}"),
            Bound::AtLeast(t) => write!(f, ">= {t:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    /// Worst observed value of the property's metric.
    pub value: f64,
    pub bound: Bound,
    pub samples: usize,
    /// Set when a sample raised an error instead of producing a value.
    pub error: Option<String>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.bound.holds(self.value)
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {:<44} value={:e} bound {} samples={}",
            self.name, self.value, self.bound, self.samples
        )?;
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replace every bound with an unattainable one (exercises the failure
    /// path of callers).
    pub inject_failure: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub outcomes: Vec<PropertyOutcome>,
    inject_failure: bool,
}

impl SuiteReport {
    pub fn new(options: &SuiteOptions) -> Self {
        Self {
            seed: options.seed,
            outcomes: Vec::new(),
            inject_failure: options.inject_failure,
        }
    }

    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(PropertyOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyOutcome> {
        self.outcomes.iter().filter(|o| !o.passed())
    }

    /// Records a measured property, applying failure injection if enabled.
    pub fn record(&mut self, name: &'static str, bound: Bound, measured: Result<Measured>) {
        let bound = if self.inject_failure { bound.unattainable() } else { bound };
        let outcome = match measured {
            Ok(m) => PropertyOutcome {
                name,
                value: m.value,
                bound,
                samples: m.samples,
                error: None,
            },
            Err(e) => PropertyOutcome {
                name,
                value: f64::NAN,
                bound,
                samples: 0,
                error: Some(e.to_string()),
            },
        };
        self.outcomes.push(outcome);
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invariant suite, seed {}", self.seed)?;
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        let passed = self.outcomes.iter().filter(|o| o.passed()).count();
        write!(f, "{passed}/{} properties passed", self.outcomes.len())
    }
}

/// Worst metric value over `samples` draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub samples: usize,
}

/// Running maximum (or minimum) of a metric.
struct Worst {
    value: f64,
    samples: usize,
    lowest: bool,
}

impl Worst {
    fn max() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            samples: 0,
            lowest: false,
        }
    }

    fn min() -> Self {
        Self {
            value: f64::INFINITY,
            samples: 0,
            lowest: true,
        }
    }

    fn push(&mut self, v: f64) {
        self.samples += 1;
        // NaN must poison the result rather than vanish in max/min
        self.value = if v.is_nan() || self.value.is_nan() {
            f64::NAN
        } else if self.lowest {
            self.value.min(v)
        } else {
            self.value.max(v)
        };
    }

    fn count(&mut self, violated: bool) {
        self.push(if violated { 1.0 } else { 0.0 });
    }

    fn done(self) -> Result<Measured> {
        Ok(Measured {
            value: self.value,
            samples: self.samples,
        })
    }
}

type Property = fn(&mut ChaCha8Rng) -> Result<Measured>;

fn properties() -> Vec<(&'static str, Bound, Property)> {
    vec![
        ("legendre::nonnegativity", Bound::AtMost(0.0), legendre_nonnegativity),
        ("legendre::inverse_gradient_round_trip", Bound::AtMost(1e-10), legendre_round_trip),
        ("legendre::hessian_consistency", Bound::AtMost(1e-6), legendre_hessian),
        ("legendre::fermi_dirac_separable", Bound::AtMost(1e-14), legendre_separable),
        ("affine::projection_contraction", Bound::AtMost(1e-12), affine_contraction),
        ("affine::projection_minimizes_distance", Bound::AtMost(1e-12), affine_minimality),
        ("projections::minimality", Bound::AtMost(1e-10), projection_minimality),
        ("projections::pythagoras", Bound::AtMost(1e-8), projection_pythagoras),
        ("projections::idempotence", Bound::AtMost(1e-10), projection_idempotence),
        ("circumcenter::algebraic_identity", Bound::AtMost(1e-12), circ_identity),
        ("circumcenter::cross_operator_consistency", Bound::AtMost(1e-8), circ_cross_operator),
        ("circumcenter::euclidean_operators_agree", Bound::AtMost(1e-10), circ_euclidean_agree),
        ("circumcenter::fixed_points_are_kept", Bound::AtMost(1e-12), circ_fixed_kept),
        ("circumcenter::non_fixed_points_move", Bound::AtLeast(1e-6), circ_non_fixed_move),
        ("circumcenter::output_is_equidistant", Bound::AtMost(0.0), circ_output_equidistant),
        ("operators::isometry", Bound::AtMost(1e-10), op_isometry),
        ("operators::burg_profile_variance", Bound::AtMost(1e-12), op_burg_variance),
        ("operators::burg_profile_positive", Bound::AtLeast(f64::MIN_POSITIVE), op_burg_positive),
        ("operators::fermi_dirac_profile_zero_set", Bound::AtMost(0.0), op_fd_profile),
        ("operators::flip_involution", Bound::AtMost(f64::EPSILON), op_flip_involution),
        ("method::well_defined", Bound::AtMost(0.0), method_well_defined),
        ("method::monotone_reference_divergence", Bound::AtMost(1e-12), method_monotone),
        ("method::bounded", Bound::AtMost(0.0), method_bounded),
        ("method::limit_point_is_fixed", Bound::AtMost(1e-6), method_limit_point),
    ]
}

/// Runs every property with its own stream of `options.seed`.
pub fn run_suite(options: &SuiteOptions) -> SuiteReport {
    let mut report = SuiteReport::new(options);
    for (stream, (name, bound, property)) in properties().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(stream as u64);
        report.record(name, bound, property(&mut rng));
    }
    report
}

// ---------------------------------------------------------------------------
// samplers

fn uniform_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Point {
    DVector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

/// Interior point at distance at least `margin` from the boundary (Burg
/// coordinates capped at 10, Euclidean coordinates in `[-5, 5]`).
fn interior_point(rng: &mut ChaCha8Rng, kind: LegendreKind, n: usize, margin: f64) -> Point {
    match kind {
        LegendreKind::Euclidean => uniform_point(rng, n, -5.0, 5.0),
        LegendreKind::Burg => uniform_point(rng, n, margin, 10.0),
        LegendreKind::FermiDirac => uniform_point(rng, n, margin, 1.0 - margin),
    }
}

fn random_kind(rng: &mut ChaCha8Rng) -> LegendreKind {
    LegendreKind::ALL[rng.gen_range(0..LegendreKind::ALL.len())]
}

fn random_subspace(rng: &mut ChaCha8Rng, anchor: Point, d: usize) -> AffineSubspace {
    let n = anchor.len();
    let dirs: Vec<Point> = (0..d).map(|_| uniform_point(rng, n, -1.0, 1.0)).collect();
    AffineSubspace::from_directions(anchor, &dirs, 1e-10)
}

/// A point of `A ∩ int dom f` near `anchor` (an interior point of A).
fn point_on(rng: &mut ChaCha8Rng, f: &LegendreFunction, a: &AffineSubspace, anchor: &Point, radius: f64) -> Point {
    for _ in 0..50 {
        let alpha = DVector::from_fn(a.dim(), |_, _| rng.gen_range(-radius..radius));
        let c = anchor + a.basis() * alpha;
        if f.in_interior(&c, 1e-6) {
            return c;
        }
    }
    anchor.clone()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

/// 1 to 3 flips on random nonempty index sets.
fn random_flip_family(rng: &mut ChaCha8Rng, n: usize) -> OperatorFamily {
    let m = rng.gen_range(1..=3);
    let members = (0..m)
        .map(|_| {
            let mut idx: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            if idx.is_empty() {
                idx.push(rng.gen_range(0..n));
            }
            OperatorSpec::flip(n, idx).expect("indices in range")
        })
        .collect();
    OperatorFamily::new(members).expect("uniform dimension")
}

/// A random point of the family's common fixed set inside `]0,1[^n`.
fn sample_fixed_point(rng: &mut ChaCha8Rng, s: &OperatorFamily) -> Point {
    let fixed = s.common_fixed_set();
    let target = uniform_point(rng, s.dim(), 0.05, 0.95);
    fixed.nearest(&target).expect("flip families share the centre")
}

/// Interior point with every flipped coordinate away from 1/2.
fn non_fixed_point(rng: &mut ChaCha8Rng, s: &OperatorFamily) -> Point {
    let n = s.dim();
    let mut x = uniform_point(rng, n, 0.02, 0.98);
    let i = rng.gen_range(0..n);
    let shift: f64 = rng.gen_range(0.05..0.45);
    x[i] = if rng.gen_bool(0.5) { 0.5 + shift } else { 0.5 - shift };
    x
}

// ---------------------------------------------------------------------------
// legendre

fn legendre_nonnegativity(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..600 {
        let kind = random_kind(rng);
        let n = rng.gen_range(1..=8);
        let f = LegendreFunction::new(kind, n)?;
        let x = interior_point(rng, kind, n, 1e-3);
        let y = interior_point(rng, kind, n, 1e-3);
        let dxy = bregman_distance(&f, &x, &y).to_f64();
        let dxx = bregman_distance(&f, &x, &x).to_f64();
        let separated = inf_norm(&(&x - &y)) > 1e-3;
        w.count(dxy < 0.0 || dxx != 0.0 || (separated && dxy <= 1e-12));
    }
    w.done()
}

fn legendre_round_trip(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for kind in LegendreKind::ALL {
        let f = LegendreFunction::new(kind, 4)?;
        for _ in 0..1000 / 3 + 1 {
            let x = interior_point(rng, kind, 4, 1e-3);
            let back = f.conj_gradient(&f.gradient(&x)?)?;
            w.push(inf_norm(&(back - &x)));
        }
    }
    w.done()
}

fn legendre_hessian(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for kind in LegendreKind::ALL {
        let f = LegendreFunction::new(kind, 3)?;
        for _ in 0..100 {
            let x = interior_point(rng, kind, 3, 1e-3);
            let h = f.hessian_diag(&x)?;
            for i in 0..3 {
                // step 1e-5 relative to the distance from the boundary
                let room = match kind {
                    LegendreKind::Euclidean => 1.0,
                    LegendreKind::Burg => x[i],
                    LegendreKind::FermiDirac => x[i].min(1.0 - x[i]),
                };
                let s = 1e-5 * room;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += s;
                xm[i] -= s;
                let fd = (f.gradient(&xp)?[i] - f.gradient(&xm)?[i]) / (2.0 * s);
                w.push((fd - h[i]).abs() / h[i].abs().max(1.0));
            }
        }
    }
    w.done()
}

fn legendre_separable(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    let f1 = LegendreFunction::fermi_dirac(1);
    for _ in 0..300 {
        let n = rng.gen_range(1..=8);
        let f = LegendreFunction::fermi_dirac(n);
        let x = interior_point(rng, LegendreKind::FermiDirac, n, 1e-3);
        let y = interior_point(rng, LegendreKind::FermiDirac, n, 1e-3);
        let total = bregman_distance(&f, &x, &y).to_f64();
        let parts: f64 = (0..n)
            .map(|i| {
                bregman_distance(&f1, &DVector::from_element(1, x[i]), &DVector::from_element(1, y[i])).to_f64()
            })
            .sum();
        w.push((total - parts).abs() / (1.0 + total));
    }
    w.done()
}

// ---------------------------------------------------------------------------
// affine

fn random_affine_instance(rng: &mut ChaCha8Rng) -> (usize, AffineSubspace) {
    let n = rng.gen_range(2..=8);
    let d = rng.gen_range(0..=n);
    let base = uniform_point(rng, n, -3.0, 3.0);
    (n, random_subspace(rng, base, d))
}

fn affine_contraction(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..300 {
        let (n, a) = random_affine_instance(rng);
        let z = uniform_point(rng, n, -5.0, 5.0);
        let v = uniform_point(rng, n, -5.0, 5.0);
        w.push((a.project(&z) - a.project(&v)).norm() - (z - v).norm());
    }
    w.done()
}

fn affine_minimality(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..30 {
        let (n, a) = random_affine_instance(rng);
        let z = uniform_point(rng, n, -5.0, 5.0);
        let pz = a.project(&z);
        let best = (&z - &pz).norm();
        for _ in 0..100 {
            let alpha = DVector::from_fn(a.dim(), |_, _| rng.gen_range(-2.0..2.0));
            let other = &pz + a.basis() * alpha;
            w.push(best - (&z - other).norm());
        }
    }
    w.done()
}

// ---------------------------------------------------------------------------
// projections

struct ProjectionInstance {
    f: LegendreFunction,
    a: AffineSubspace,
    anchor: Point,
    y: Point,
}

fn random_projection_instance(rng: &mut ChaCha8Rng) -> ProjectionInstance {
    let kind = if rng.gen_bool(0.5) {
        LegendreKind::Euclidean
    } else {
        LegendreKind::FermiDirac
    };
    let n = rng.gen_range(2..=8);
    let d = rng.gen_range(1..n);
    let f = LegendreFunction::new(kind, n).expect("n ≥ 2");
    let anchor = match kind {
        LegendreKind::FermiDirac => uniform_point(rng, n, 0.1, 0.9),
        _ => uniform_point(rng, n, -3.0, 3.0),
    };
    let a = random_subspace(rng, anchor.clone(), d);
    let y = interior_point(rng, kind, n, 1e-2);
    ProjectionInstance { f, a, anchor, y }
}

fn projection_minimality(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = SolverConfig::default();
    let mut w = Worst::max();
    for _ in 0..20 {
        let inst = random_projection_instance(rng);
        let (f, a, y) = (&inst.f, &inst.a, &inst.y);
        let u = backward_project_affine(f, a, y, &cfg)?.into_point("backward projection")?;
        let v = forward_project_affine(f, a, y, &cfg)?.into_point("forward projection")?;
        let du = bregman_distance(f, &u, y).to_f64();
        let dv = bregman_distance(f, y, &v).to_f64();
        for _ in 0..200 {
            let c = point_on(rng, f, a, &inst.anchor, 0.5);
            w.push(du - bregman_distance(f, &c, y).to_f64());
            w.push(dv - bregman_distance(f, y, &c).to_f64());
        }
    }
    w.done()
}

fn projection_pythagoras(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = SolverConfig::default();
    let mut w = Worst::max();
    for _ in 0..200 {
        let inst = random_projection_instance(rng);
        let z = point_on(rng, &inst.f, &inst.a, &inst.anchor, 0.5);
        w.push(pythagoras_residual(&inst.f, &inst.y, &inst.a, &z, &cfg)?);
    }
    w.done()
}

fn projection_idempotence(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = SolverConfig::default();
    let mut w = Worst::max();
    for _ in 0..100 {
        let inst = random_projection_instance(rng);
        let (f, a, y) = (&inst.f, &inst.a, &inst.y);
        let u = backward_project_affine(f, a, y, &cfg)?.into_point("backward projection")?;
        let uu = backward_project_affine(f, a, &u, &cfg)?.into_point("backward projection")?;
        w.push(inf_norm(&(uu - &u)));
        let v = forward_project_affine(f, a, y, &cfg)?.into_point("forward projection")?;
        let vv = forward_project_affine(f, a, &v, &cfg)?.into_point("forward projection")?;
        w.push(inf_norm(&(vv - &v)));
    }
    w.done()
}

// ---------------------------------------------------------------------------
// circumcenter

fn circ_identity(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..400 {
        let kind = random_kind(rng);
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=5);
        let f = LegendreFunction::new(kind, n)?;
        let k = PointSet::new((0..m).map(|_| interior_point(rng, kind, n, 1e-2)).collect())?;
        let q = interior_point(rng, kind, n, 1e-2);
        let simplified = equidistance_residual_forward(&f, &k, &q)?;
        let direct = equidistance_residual_direct(&f, &k, &q);
        w.push(inf_norm(&(simplified - direct)));
    }
    w.done()
}

/// A flip family on `]0,1[^n` or a random orthogonal family in `R^n`,
/// together with a known common fixed point.
fn random_isometric_family(rng: &mut ChaCha8Rng) -> (LegendreFunction, OperatorFamily, Point) {
    let n = rng.gen_range(1..=8);
    if rng.gen_bool(0.7) {
        let s = random_flip_family(rng, n);
        let z = sample_fixed_point(rng, &s);
        (LegendreFunction::fermi_dirac(n), s, z)
    } else {
        let m = rng.gen_range(1..=2);
        let members = (0..m)
            .map(|_| OperatorSpec::orthogonal(random_orthogonal(rng, n)).expect("QR factor is orthogonal"))
            .collect();
        let s = OperatorFamily::new(members).expect("uniform dimension");
        (LegendreFunction::euclidean(n), s, DVector::zeros(n))
    }
}

fn circ_cross_operator(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = CircumcenterConfig::default();
    let mut w = Worst::max();
    for _ in 0..150 {
        let (f, s, z) = random_isometric_family(rng);
        let x = match f.kind() {
            LegendreKind::FermiDirac => uniform_point(rng, f.dim(), 0.02, 0.98),
            _ => uniform_point(rng, f.dim(), -3.0, 3.0),
        };
        let k = s.evaluate(&x)?;
        let r = forward_circumcenter(&f, &k, &cfg)?;
        if r.status != CircumcenterStatus::Unique {
            continue;
        }
        let via = forward_circumcenter_via_projection(&f, &k, &z, &cfg)?;
        w.push(inf_norm(&(via - r.point.expect("unique results carry a point"))));
    }
    w.done()
}

fn circ_euclidean_agree(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = CircumcenterConfig::default();
    let mut w = Worst::max();
    while w.samples < 200 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=n + 1);
        let f = LegendreFunction::euclidean(n);
        let k = PointSet::new((0..m).map(|_| uniform_point(rng, n, -3.0, 3.0)).collect())?;
        if !is_affinely_independent(&k, 1e-6) {
            continue;
        }
        let c = forward_circumcenter(&f, &k, &cfg)?.into_point()?;
        let a = affine_hull(&k, cfg.solver.hull_tol);
        let offset = uniform_point(rng, n, -2.0, 2.0);
        let z = &c + (&offset - a.project(&offset));
        let others = [
            backward_circumcenter(&f, &k, &cfg)?.into_point()?,
            forward_pseudo_circumcenter(&f, &k, &z, &cfg)?,
            backward_pseudo_circumcenter(&f, &k, &z, &cfg)?,
        ];
        w.push(others.iter().map(|o| inf_norm(&(o - &c))).fold(0.0, f64::max));
    }
    w.done()
}

fn circ_fixed_kept(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = CircumcenterConfig::default();
    let mut w = Worst::max();
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let s = random_flip_family(rng, n);
        let f = LegendreFunction::fermi_dirac(n);
        let z = sample_fixed_point(rng, &s);
        let r = circumcenter_mapping(&f, &s, &z, &cfg)?;
        w.push(inf_norm(&(r.into_point()? - &z)));
    }
    w.done()
}

fn circ_non_fixed_move(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = CircumcenterConfig::default();
    let mut w = Worst::min();
    while w.samples < 100 {
        let n = rng.gen_range(1..=8);
        let s = random_flip_family(rng, n);
        let f = LegendreFunction::fermi_dirac(n);
        let x = non_fixed_point(rng, &s);
        if s.fixed_point_residual(&x)? < 1e-2 {
            continue;
        }
        let r = circumcenter_mapping(&f, &s, &x, &cfg)?;
        w.push(inf_norm(&(r.into_point()? - &x)));
    }
    w.done()
}

fn circ_output_equidistant(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let cfg = CircumcenterConfig::default();
    let mut w = Worst::max();
    for _ in 0..150 {
        let (f, s, x) = match rng.gen_range(0..3) {
            0 => {
                let (f, s, _) = random_isometric_family(rng);
                let x = match f.kind() {
                    LegendreKind::FermiDirac => uniform_point(rng, f.dim(), 0.02, 0.98),
                    _ => uniform_point(rng, f.dim(), -3.0, 3.0),
                };
                (f, s, x)
            }
            _ => {
                let n = rng.gen_range(1..=6);
                let c = uniform_point(rng, n, 0.2, 5.0);
                let s = OperatorFamily::new(vec![OperatorSpec::scaling(c)?])?;
                (LegendreFunction::burg(n), s, uniform_point(rng, n, 0.05, 5.0))
            }
        };
        let r = circumcenter_mapping(&f, &s, &x, &cfg)?;
        if let (true, Some(p)) = (r.is_solved(), r.point.as_ref()) {
            w.count(!in_forward_equidistance_set(&f, &s.evaluate(&x)?, p, 1e-8));
        }
    }
    w.done()
}

// ---------------------------------------------------------------------------
// operators

fn op_isometry(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let c = uniform_point(rng, n, 0.1, 5.0);
        let t = OperatorSpec::scaling(c)?;
        let f = LegendreFunction::burg(n);
        let (x, y) = (uniform_point(rng, n, 0.01, 10.0), uniform_point(rng, n, 0.01, 10.0));
        w.push(isometry_gap(&f, &t, &x, &y)?);

        let t = OperatorSpec::flip(n, (0..n).filter(|_| rng.gen_bool(0.5)))?;
        let f = LegendreFunction::fermi_dirac(n);
        let (x, y) = (uniform_point(rng, n, 1e-3, 1.0 - 1e-3), uniform_point(rng, n, 1e-3, 1.0 - 1e-3));
        w.push(isometry_gap(&f, &t, &x, &y)?);

        let t = OperatorSpec::orthogonal(random_orthogonal(rng, n))?;
        let f = LegendreFunction::euclidean(n);
        let (x, y) = (uniform_point(rng, n, -5.0, 5.0), uniform_point(rng, n, -5.0, 5.0));
        w.push(isometry_gap(&f, &t, &x, &y)?);
    }
    w.done()
}

fn burg_profiles(rng: &mut ChaCha8Rng, c: &Point) -> Result<Vec<f64>> {
    let n = c.len();
    let f = LegendreFunction::burg(n);
    let t = OperatorSpec::scaling(c.clone())?;
    (0..100)
        .map(|_| demiclosedness_profile(&f, &t, &uniform_point(rng, n, 0.01, 20.0)))
        .collect()
}

fn op_burg_variance(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..10 {
        let n = rng.gen_range(1..=5);
        let c = uniform_point(rng, n, 0.2, 5.0);
        let phi = burg_profiles(rng, &c)?;
        let mean = phi.iter().sum::<f64>() / phi.len() as f64;
        let var = phi.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / phi.len() as f64;
        w.push(var);
    }
    w.done()
}

fn op_burg_positive(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::min();
    for _ in 0..10 {
        let n = rng.gen_range(1..=5);
        let mut c = uniform_point(rng, n, 0.2, 5.0);
        // keep one factor clearly away from 1
        c[0] = if rng.gen_bool(0.5) { 2.0 } else { 0.5 };
        for v in burg_profiles(rng, &c)? {
            w.push(v);
        }
    }
    w.done()
}

fn op_fd_profile(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..300 {
        let n = rng.gen_range(1..=6);
        let f = LegendreFunction::fermi_dirac(n);
        let idx: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let t = OperatorSpec::flip(n, idx.clone())?;
        let x = uniform_point(rng, n, 1e-3, 1.0 - 1e-3);
        let phi = demiclosedness_profile(&f, &t, &x)?;
        let analytic: f64 = idx
            .iter()
            .map(|&i| -(2.0 * x[i] - 1.0) * ((1.0 - x[i]) / x[i]).ln())
            .sum();
        let off_centre = idx.iter().any(|&i| (x[i] - 0.5).abs() > 1e-3);
        let mut centred = x.clone();
        idx.iter().for_each(|&i| centred[i] = 0.5);
        let phi_centred = demiclosedness_profile(&f, &t, &centred)?;
        w.count(
            phi < 0.0
                || (phi - analytic).abs() > 1e-12 * (1.0 + analytic)
                || (off_centre && phi <= 0.0)
                || phi_centred != 0.0,
        );
    }
    w.done()
}

fn op_flip_involution(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let t = OperatorSpec::flip(n, (0..n).filter(|_| rng.gen_bool(0.5)))?;
        let x = uniform_point(rng, n, 0.0, 1.0);
        w.push(inf_norm(&(t.apply(&t.apply(&x)?)? - &x)));
    }
    w.done()
}

// ---------------------------------------------------------------------------
// method

struct TraceInstance {
    f: LegendreFunction,
    s: OperatorFamily,
    trace: crate::method::IterationTrace,
    fixed: Vec<Point>,
}

/// Flip families (with 10 sampled common fixed points each) and euclidean
/// orthogonal families (fixed point 0).
fn random_traces(rng: &mut ChaCha8Rng, count: usize, cfg: &MethodConfig) -> Result<Vec<TraceInstance>> {
    (0..count)
        .map(|_| {
            let (f, s, z) = random_isometric_family(rng);
            let (x0, fixed) = match f.kind() {
                LegendreKind::FermiDirac => {
                    let fixed = (0..10).map(|_| sample_fixed_point(rng, &s)).collect();
                    (uniform_point(rng, f.dim(), 0.02, 0.98), fixed)
                }
                _ => (uniform_point(rng, f.dim(), -3.0, 3.0), vec![z]),
            };
            let trace = run(&f, &s, &x0, cfg)?;
            Ok(TraceInstance { f, s, trace, fixed })
        })
        .collect()
}

fn method_well_defined(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for inst in random_traces(rng, 60, &MethodConfig::default())? {
        let margin = MethodConfig::default().circumcenter.solver.margin;
        w.count(inst.trace.points.iter().any(|x| !inst.f.in_interior(x, margin)));
        w.count(inst.trace.step_div.len() + 1 != inst.trace.points.len());
        w.count(matches!(inst.trace.status, TraceStatus::SolverFailure(_)));
    }
    w.done()
}

fn method_monotone(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for inst in random_traces(rng, 60, &MethodConfig::default())? {
        for z in &inst.fixed {
            w.push(check_forward_monotone(&inst.f, &inst.trace, z)?);
        }
    }
    w.done()
}

/// `[lo, hi]` with `D_f(t, z) ≤ r` on it, by bisection on each side of `z`.
fn sublevel_interval(f: &LegendreFunction, z: f64, r: f64) -> (f64, f64) {
    let d = |t: f64| f.coordinate_distance(t, z).to_f64();
    let (lo_end, hi_end) = f.kind().interior_bounds();
    let side = |end: f64| -> f64 {
        let mut far = if end.is_finite() { end } else { z + (end.signum()) * 1.0 };
        if !end.is_finite() {
            while d(far) <= r {
                far = z + (far - z) * 2.0;
            }
        } else if d(far) <= r {
            return far;
        }
        let mut near = z;
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if d(mid) <= r {
                near = mid;
            } else {
                far = mid;
            }
        }
        far
    };
    (side(lo_end), side(hi_end))
}

fn method_bounded(rng: &mut ChaCha8Rng) -> Result<Measured> {
    let mut w = Worst::max();
    for inst in random_traces(rng, 60, &MethodConfig::default())? {
        let z = &inst.fixed[0];
        let r = bregman_distance(&inst.f, &inst.trace.points[0], z).to_f64();
        let boxes: Vec<(f64, f64)> = z.iter().map(|&zi| sublevel_interval(&inst.f, zi, r * (1.0 + 1e-9) + 1e-12)).collect();
        let outside = inst
            .trace
            .points
            .iter()
            .any(|x| x.iter().zip(&boxes).any(|(&xi, &(lo, hi))| xi < lo || xi > hi));
        w.count(outside);
    }
    w.done()
}

fn method_limit_point(rng: &mut ChaCha8Rng) -> Result<Measured> {
    // the defaults stop at D_f(x_k, x_{k+1}) ≤ 1e-10, i.e. max-norm steps of
    // order 1e-5 on the linearly converging chained flips; a tighter step
    // tolerance lets the max-norm guard decide instead
    let cfg = MethodConfig {
        tol_step: 1e-20,
        ..MethodConfig::default()
    };
    let mut w = Worst::max();
    for inst in random_traces(rng, 60, &cfg)? {
        if inst.trace.status == TraceStatus::ConvergedStep || inst.trace.status == TraceStatus::FixedPointReached {
            w.push(inst.s.fixed_point_residual(inst.trace.last())?);
        }
    }
    w.done()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::FixedSet;

    #[test]
    fn default_seed_passes() {
        let report = run_suite(&SuiteOptions::default());
        assert!(report.passed(), "{report}");
        assert_eq!(report.outcomes.len(), properties().len());
    }

    #[test]
    fn injected_failure_fails_everything() {
        let report = run_suite(&SuiteOptions {
            seed: 3,
            inject_failure: true,
        });
        assert_eq!(report.failures().count(), report.outcomes.len());
    }

    #[test]
    fn report_is_deterministic() {
        let a = run_suite(&SuiteOptions { seed: 11, ..Default::default() }).to_string();
        let b = run_suite(&SuiteOptions { seed: 11, ..Default::default() }).to_string();
        assert_eq!(a, b);
    }

    #[test]
    fn sublevel_interval_matches_closed_forms() {
        let e = LegendreFunction::euclidean(1);
        let (lo, hi) = sublevel_interval(&e, 1.0, 2.0);
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        let fd = LegendreFunction::fermi_dirac(1);
        assert_eq!(sublevel_interval(&fd, 0.5, 10.0), (0.0, 1.0));
    }

    #[test]
    fn fixed_set_sampler_hits_fixed_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = random_flip_family(&mut rng, 5);
            let z = sample_fixed_point(&mut rng, &s);
            assert!(matches!(s.common_fixed_set(), FixedSet::Coordinates { .. }));
            assert_eq!(s.fixed_point_residual(&z).unwrap(), 0.0);
        }
    }
}
