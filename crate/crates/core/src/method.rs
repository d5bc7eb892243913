//! The forward Bregman circumcenter method `x_{k+1} = CC_S(x_k)` and the
//! diagnostics used to check its convergence behaviour along a trace.

use std::fmt;

use crate::circumcenter::{circumcenter_mapping, CircumcenterConfig, CircumcenterStatus};
use crate::error::{Error, Result};
use crate::legendre::{bregman_distance, LegendreFunction};
use crate::operators::OperatorFamily;
use crate::{inf_norm, Point};

/// Iterates closer than this in the max norm count as equal.
pub const FIXED_POINT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    /// Stop once `D_f(x_k, x_{k+1}) ≤ tol_step`.
    pub tol_step: f64,
    pub max_iters: usize,
    /// Secondary stop on `‖x_{k+1} − x_k‖∞`.
    pub norm_step_tol: f64,
    /// Records `D_f(x_k, c)` when set.
    pub reference_point: Option<Point>,
    /// Records `⟨∇f(y) − ∇f(z), x_k⟩` when set.
    pub record_inner_products: Option<(Point, Point)>,
    pub circumcenter: CircumcenterConfig,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            tol_step: 1e-10,
            max_iters: 200,
            norm_step_tol: 1e-12,
            reference_point: None,
            record_inner_products: None,
            circumcenter: CircumcenterConfig::default(),
        }
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol_step.is_nan() || self.tol_step <= 0.0 || self.norm_step_tol.is_nan() || self.norm_step_tol <= 0.0 {
            return Err(Error::InvalidArgument("method tolerances must be positive".into()));
        }
        self.circumcenter.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    ConvergedStep,
    FixedPointReached,
    MaxIters,
    /// The circumcenter solve at step `k` had no usable point.
    SolverFailure(usize),
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceStatus::ConvergedStep => f.write_str("ConvergedStep"),
            TraceStatus::FixedPointReached => f.write_str("FixedPointReached"),
            TraceStatus::MaxIters => f.write_str("MaxIters"),
            TraceStatus::SolverFailure(k) => write!(f, "SolverFailure({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// `x_0, …, x_K`.
    pub points: Vec<Point>,
    /// `D_f(x_k, x_{k+1})` for `k < K`.
    pub step_div: Vec<f64>,
    /// `D_f(x_k, c)` for every point, if a reference point was given.
    pub ref_div: Option<Vec<f64>>,
    /// `⟨∇f(y) − ∇f(z), x_k⟩` for every point, if requested.
    pub inner_products: Option<Vec<f64>>,
    pub status: TraceStatus,
    /// Steps whose circumcenter was a representative of a larger set.
    pub representative_steps: Vec<usize>,
}

impl IterationTrace {
    /// Number of steps `K`.
    pub fn steps(&self) -> usize {
        self.step_div.len()
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("a trace holds at least x_0")
    }
}

struct Recorder<'a> {
    f: &'a LegendreFunction,
    reference: Option<&'a Point>,
    direction: Option<Point>,
}

impl Recorder<'_> {
    fn ref_div(&self, x: &Point) -> Option<f64> {
        self.reference.map(|c| bregman_distance(self.f, x, c).to_f64())
    }

    fn inner(&self, x: &Point) -> Option<f64> {
        self.direction.as_ref().map(|d| d.dot(x))
    }
}

/// Runs the method from `x0` until a stopping rule fires.
pub fn run(f: &LegendreFunction, s: &OperatorFamily, x0: &Point, cfg: &MethodConfig) -> Result<IterationTrace> {
    cfg.validate()?;
    f.require_interior(x0, "x0")?;
    if s.dim() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            found: s.dim(),
        });
    }
    if let Some(c) = &cfg.reference_point {
        f.require_interior(c, "reference")?;
    }
    let direction = match &cfg.record_inner_products {
        Some((y, z)) => {
            f.require_interior(y, "y")?;
            f.require_interior(z, "z")?;
            Some(f.gradient(y)? - f.gradient(z)?)
        }
        None => None,
    };
    let rec = Recorder {
        f,
        reference: cfg.reference_point.as_ref(),
        direction,
    };

    let mut trace = IterationTrace {
        points: vec![x0.clone()],
        step_div: Vec::new(),
        ref_div: rec.ref_div(x0).map(|v| vec![v]),
        inner_products: rec.inner(x0).map(|v| vec![v]),
        status: TraceStatus::MaxIters,
        representative_steps: Vec::new(),
    };

    for k in 0..cfg.max_iters {
        let x = trace.last().clone();
        let result = match circumcenter_mapping(f, s, &x, &cfg.circumcenter) {
            Ok(r) => r,
            Err(Error::InfeasibleDomain) => {
                trace.status = TraceStatus::SolverFailure(k);
                return Ok(trace);
            }
            Err(e) => return Err(e),
        };
        if result.status == CircumcenterStatus::Representative {
            trace.representative_steps.push(k);
        }
        let Some(next) = result.point else {
            trace.status = TraceStatus::SolverFailure(k);
            return Ok(trace);
        };
        if inf_norm(&(&next - &x)) <= FIXED_POINT_TOL {
            trace.status = if k == 0 {
                TraceStatus::FixedPointReached
            } else {
                TraceStatus::ConvergedStep
            };
            return Ok(trace);
        }
        let d = bregman_distance(f, &x, &next).to_f64();
        let moved = inf_norm(&(&next - &x));
        if let (Some(v), Some(list)) = (rec.ref_div(&next), trace.ref_div.as_mut()) {
            list.push(v);
        }
        if let (Some(v), Some(list)) = (rec.inner(&next), trace.inner_products.as_mut()) {
            list.push(v);
        }
        trace.points.push(next);
        trace.step_div.push(d);
        if d <= cfg.tol_step || moved <= cfg.norm_step_tol {
            trace.status = TraceStatus::ConvergedStep;
            return Ok(trace);
        }
    }
    Ok(trace)
}

/// `max_k D_f(x_{k+1}, c) − D_f(x_k, c)`; nonpositive for a trace that is
/// forward Bregman monotone with respect to `c`. Zero for a single point.
pub fn check_forward_monotone(f: &LegendreFunction, trace: &IterationTrace, c: &Point) -> Result<f64> {
    f.require_interior(c, "c")?;
    let d: Vec<f64> = trace
        .points
        .iter()
        .map(|x| bregman_distance(f, x, c).to_f64())
        .collect();
    Ok(d.windows(2).map(|w| w[1] - w[0]).reduce(f64::max).unwrap_or(0.0))
}

/// Whether every partial sum of the step divergences stays below
/// `D_f(x_0, z) + 1e-10`.
pub fn check_step_summable(f: &LegendreFunction, trace: &IterationTrace, z: &Point) -> Result<bool> {
    f.require_interior(z, "z")?;
    let bound = bregman_distance(f, &trace.points[0], z).to_f64() + 1e-10;
    let mut sum = 0.0;
    for d in &trace.step_div {
        sum += d;
        if sum > bound {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Oscillation `max − min` of `s_k = ⟨∇f(y) − ∇f(z), x_k⟩` over the trailing
/// half of the trace.
pub fn check_inner_product_limit(f: &LegendreFunction, trace: &IterationTrace, y: &Point, z: &Point) -> Result<f64> {
    f.require_interior(y, "y")?;
    f.require_interior(z, "z")?;
    let dir = f.gradient(y)? - f.gradient(z)?;
    let tail = &trace.points[trace.points.len() / 2..];
    let (lo, hi) = tail
        .iter()
        .map(|x| dir.dot(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorSpec;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn flip_run(x0: f64) -> IterationTrace {
        let f = LegendreFunction::fermi_dirac(1);
        let s = OperatorFamily::parse(&["flip:1"], 1).unwrap();
        run(&f, &s, &p(&[x0]), &MethodConfig::default()).unwrap()
    }

    #[test]
    fn one_step_in_one_dimension() {
        let t = flip_run(0.3);
        assert_eq!(t.status, TraceStatus::ConvergedStep);
        assert_eq!(t.steps(), 1);
        assert_eq!(t.points.len(), 2);
        assert_abs_diff_eq!(t.points[1][0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fixed_start() {
        let t = flip_run(0.5);
        assert_eq!(t.status, TraceStatus::FixedPointReached);
        assert_eq!(t.steps(), 0);
        assert_eq!(t.points, vec![p(&[0.5])]);
    }

    #[test]
    fn one_step_in_the_plane() {
        let f = LegendreFunction::fermi_dirac(2);
        let s = OperatorFamily::parse(&["flip:1"], 2).unwrap();
        let cfg = MethodConfig {
            reference_point: Some(p(&[0.5, 0.5])),
            ..MethodConfig::default()
        };
        let t = run(&f, &s, &p(&[0.3, 0.4]), &cfg).unwrap();
        assert_eq!(t.steps(), 1);
        assert_abs_diff_eq!((t.last() - p(&[0.5, 0.4])).amax(), 0.0, epsilon = 1e-12);
        assert_eq!(t.ref_div.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn domain_errors() {
        let f = LegendreFunction::fermi_dirac(1);
        let s = OperatorFamily::parse(&["flip:1"], 1).unwrap();
        assert!(matches!(
            run(&f, &s, &p(&[1.0]), &MethodConfig::default()),
            Err(Error::Domain { arg: "x0", .. })
        ));
        let t = flip_run(0.3);
        assert!(check_forward_monotone(&f, &t, &p(&[0.0])).is_err());
        assert!(check_step_summable(&f, &t, &p(&[1.0])).is_err());
    }

    #[test]
    fn diagnostics_on_one_step_trace() {
        let f = LegendreFunction::fermi_dirac(1);
        let t = flip_run(0.3);
        let z = p(&[0.5]);
        let drop = check_forward_monotone(&f, &t, &z).unwrap();
        let d0 = bregman_distance(&f, &p(&[0.3]), &z).to_f64();
        assert_abs_diff_eq!(d0, 0.082282, epsilon = 1e-6);
        assert_abs_diff_eq!(drop, -d0, epsilon = 1e-12);
        assert!(check_step_summable(&f, &t, &z).unwrap());
        assert_abs_diff_eq!(t.step_div[0], bregman_distance(&f, &p(&[0.3]), &p(&[0.5])).to_f64(), epsilon = 1e-12);
        assert_eq!(check_inner_product_limit(&f, &t, &z, &z).unwrap(), 0.0);
        let y = p(&[0.2]);
        assert_eq!(check_inner_product_limit(&f, &t, &y, &z).unwrap(), 0.0);

        let fixed = flip_run(0.5);
        assert_eq!(check_forward_monotone(&f, &fixed, &z).unwrap(), 0.0);
        assert!(check_step_summable(&f, &fixed, &z).unwrap());
    }

    #[test]
    fn chained_flips_take_several_steps() {
        let f = LegendreFunction::fermi_dirac(3);
        let s = OperatorFamily::new(vec![
            OperatorSpec::flip(3, [0, 1]).unwrap(),
            OperatorSpec::flip(3, [1, 2]).unwrap(),
        ])
        .unwrap();
        let z = s.common_fixed_point(&f).unwrap();
        let cfg = MethodConfig {
            reference_point: Some(z.clone()),
            ..MethodConfig::default()
        };
        let t = run(&f, &s, &p(&[0.1, 0.8, 0.3]), &cfg).unwrap();
        assert_eq!(t.status, TraceStatus::ConvergedStep);
        assert!(t.steps() > 1);
        assert!(check_forward_monotone(&f, &t, &z).unwrap() <= 1e-12);
        assert!(check_step_summable(&f, &t, &z).unwrap());
        assert!(s.fixed_point_residual(t.last()).unwrap() <= 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn flip_traces_are_monotone_and_summable(x in proptest::collection::vec(0.02..0.98f64, 4),
                                                 masks in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 4), 1..=3),
                                                 free in proptest::collection::vec(0.05..0.95f64, 4)) {
            let f = LegendreFunction::fermi_dirac(4);
            let members = masks
                .iter()
                .map(|m| OperatorSpec::flip(4, (0..4).filter(|&i| m[i])).unwrap())
                .collect();
            let s = OperatorFamily::new(members).unwrap();
            let fixed = s.common_fixed_set();
            // a sampled common fixed point: free coordinates off the flipped set
            let z = fixed.nearest(&p(&free)).unwrap();
            prop_assert!(fixed.contains(&z));
            let t = run(&f, &s, &p(&x), &MethodConfig::default()).unwrap();
            prop_assert!(t.points.iter().all(|q| f.in_interior(q, 1e-12)));
            prop_assert!(check_forward_monotone(&f, &t, &z).unwrap() <= 1e-12);
            prop_assert!(check_step_summable(&f, &t, &z).unwrap());
            prop_assert_eq!(t.step_div.len() + 1, t.points.len());
        }
    }
}
