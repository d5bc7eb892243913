//! Command-line front end: argument definitions, experiment configuration,
//! trace CSV output and the subcommand implementations.
//!
//! Exit codes are 0 on success, 1 on numerical failure and 2 on usage or
//! configuration errors.

pub mod config;
pub mod error;
pub mod format;
pub mod trace;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use bregcirc::suite::{run_suite, Bound, Measured, SuiteOptions, SuiteReport};
use bregcirc::{
    affine_hull, backward_project_affine, bregman_distance, circumcenter_mapping, forward_project_affine, run,
    CircumcenterStatus, LegendreFunction, MethodConfig, OperatorFamily, Point, PointSet, ProjectionStatus,
    SolverConfig, TraceStatus,
};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
use format::{fmt_extended, fmt_f64, fmt_point, parse_points, parse_vector};
pub use trace::{TraceRow, TraceTable};

const AFFINE_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "bregcirc", version, about = "Bregman circumcenters and the forward Bregman circumcenter method")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Bregman distance D_f(x, y).
    Distance(DistanceArgs),
    /// Project a point onto the affine hull of a point set.
    Project(ProjectArgs),
    /// Print the circumcenter of S(x0).
    Circumcenter(ExperimentArgs),
    /// Run the method and write the trace as CSV.
    Iterate(ExperimentArgs),
    /// Run the invariant suite.
    Suite(SuiteArgs),
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub function: String,
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, allow_hyphen_values = true)]
    pub y: String,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub function: String,
    /// Points spanning the subspace, as `a,b;c,d`.
    #[arg(long, allow_hyphen_values = true)]
    pub points: String,
    /// Point to project.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Forward projection instead of backward.
    #[arg(long)]
    pub forward: bool,
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Operator (repeatable): id, flip:1,3, scale:2,3, power:c,mu, orth:ROWS|FILE.
    #[arg(long = "operators", allow_hyphen_values = true)]
    pub operators: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Step divergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Reference point for the d_ref column.
    #[arg(long, allow_hyphen_values = true)]
    pub reference: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compare the circumcenter against the projection route when a common
    /// fixed point is known.
    #[arg(long)]
    pub cross_check: bool,
}

impl ExperimentArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = ExperimentConfig {
            function: self.function.clone(),
            dim: self.dim,
            operators: self.operators.clone(),
            x0: config::vector_flag(self.x0.as_deref())?,
            tol_step: self.tol,
            max_iters: self.max_iter,
            reference: config::vector_flag(self.reference.as_deref())?,
            output_path: self.output.clone(),
            seed: self.seed,
            cross_check: self.cross_check.then_some(true),
        };
        Ok(base.overridden_by(flags))
    }
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replace every bound with an unattainable one.
    #[arg(long, hide = true)]
    pub inject_failure: bool,
}

/// Result of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NumericalFailure,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::NumericalFailure => 1,
        }
    }
}

/// Runs a parsed command line, printing results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Distance(a) => cmd_distance(a, out),
        Command::Project(a) => cmd_project(a, out),
        Command::Circumcenter(a) => cmd_circumcenter(&a.to_config()?.resolve()?, out),
        Command::Iterate(a) => cmd_iterate(&a.to_config()?.resolve()?, out),
        Command::Suite(a) => cmd_suite(a, out),
    }
}

fn point_arg(s: &str) -> Result<Point, CliError> {
    Ok(Point::from_vec(parse_vector(s)?))
}

pub fn cmd_distance(a: &DistanceArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let x = point_arg(&a.x)?;
    let y = point_arg(&a.y)?;
    if x.len() != y.len() {
        return Err(CliError::usage(format!("x has {} entries, y has {}", x.len(), y.len())));
    }
    let f = LegendreFunction::from_name(&a.function, x.len())?;
    writeln!(out, "{}", fmt_extended(bregman_distance(&f, &x, &y), 15))?;
    Ok(Outcome::Success)
}

pub fn cmd_project(a: &ProjectArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let k = PointSet::new(parse_points(&a.points)?)?;
    let x = point_arg(&a.x)?;
    if x.len() != k.dim() {
        return Err(CliError::usage(format!("x has {} entries, the points have {}", x.len(), k.dim())));
    }
    let f = LegendreFunction::from_name(&a.function, x.len())?;
    let hull = affine_hull(&k, AFFINE_TOL);
    let cfg = SolverConfig::default();
    let r = if a.forward {
        forward_project_affine(&f, &hull, &x, &cfg)?
    } else {
        backward_project_affine(&f, &hull, &x, &cfg)?
    };
    writeln!(
        out,
        "{} {:?} divergence={} iterations={}",
        fmt_point(&r.point),
        r.status,
        fmt_extended(r.divergence, 15),
        r.iterations
    )?;
    Ok(match r.status {
        ProjectionStatus::Converged => Outcome::Success,
        _ => Outcome::NumericalFailure,
    })
}

pub fn cmd_circumcenter(e: &Experiment, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let r = circumcenter_mapping(&e.f, &e.family, &e.x0, &e.method.circumcenter)?;
    let point = r.point.as_ref().map(fmt_point).unwrap_or_else(|| "-".into());
    writeln!(
        out,
        "{point} {:?} residual={} iterations={}",
        r.status,
        fmt_f64(r.residual),
        r.iterations
    )?;
    Ok(match r.status {
        CircumcenterStatus::Unique | CircumcenterStatus::Representative => Outcome::Success,
        CircumcenterStatus::Empty | CircumcenterStatus::NotConverged => Outcome::NumericalFailure,
    })
}

/// Writes the trace to the configured output (or `out`), then the summary
/// line `status iterations x=final fixed_point_residual=r`.
pub fn cmd_iterate(e: &Experiment, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let trace = run(&e.f, &e.family, &e.x0, &e.method)?;
    let table = TraceTable::from_trace(&trace);
    match &e.output {
        Some(path) => {
            let file = File::create(path).map_err(CliError::Write)?;
            table.write(BufWriter::new(file))?;
        }
        None => table.write(&mut *out)?,
    }
    let residual = e.family.fixed_point_residual(trace.last())?;
    writeln!(
        out,
        "{} {} x={} fixed_point_residual={}",
        trace.status,
        trace.steps(),
        fmt_point(trace.last()),
        fmt_f64(residual)
    )?;
    Ok(match trace.status {
        TraceStatus::SolverFailure(_) => Outcome::NumericalFailure,
        _ => Outcome::Success,
    })
}

pub fn cmd_suite(a: &SuiteArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let options = SuiteOptions {
        seed: a.seed,
        inject_failure: a.inject_failure,
    };
    let report = full_suite(&options);
    writeln!(out, "{report}")?;
    Ok(if report.passed() { Outcome::Success } else { Outcome::NumericalFailure })
}

/// The library suite plus the trace serialization properties.
pub fn full_suite(options: &SuiteOptions) -> SuiteReport {
    let mut report = run_suite(options);
    let experiments = sample_experiments(options.seed, 12);
    report.record("cli::csv_determinism", Bound::AtMost(0.0), csv_determinism(&experiments));
    report.record("cli::csv_round_trip", Bound::AtMost(0.0), csv_round_trip(&experiments));
    report
}

/// Random flip experiments with Fermi-Dirac entropy and a reference point.
fn sample_experiments(seed: u64, count: usize) -> Vec<Experiment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 << 32);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            let operators: Vec<String> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let idx: Vec<String> = (1..=n).filter(|_| rng.gen_bool(0.5)).map(|i| i.to_string()).collect();
                    if idx.is_empty() {
                        format!("flip:{}", rng.gen_range(1..=n))
                    } else {
                        format!("flip:{}", idx.join(","))
                    }
                })
                .collect();
            let point = |rng: &mut ChaCha8Rng| Point::from_fn(n, |_, _| rng.gen_range(0.02..0.98));
            let method = MethodConfig {
                reference_point: Some(point(&mut rng)),
                ..Default::default()
            };
            Experiment {
                f: LegendreFunction::fermi_dirac(n),
                family: OperatorFamily::parse(&operators, n).expect("well-formed flip specs"),
                x0: point(&mut rng),
                method,
                output: None,
            }
        })
        .collect()
}

fn trace_csv(e: &Experiment) -> Result<(TraceTable, String), CliError> {
    let table = TraceTable::from_trace(&run(&e.f, &e.family, &e.x0, &e.method)?);
    let csv = table.to_csv_string()?;
    Ok((table, csv))
}

fn csv_determinism(experiments: &[Experiment]) -> bregcirc::Result<Measured> {
    let mut mismatches = 0.0;
    for e in experiments {
        let (_, first) = trace_csv(e).map_err(to_core)?;
        let (_, second) = trace_csv(e).map_err(to_core)?;
        if first != second {
            mismatches += 1.0;
        }
    }
    Ok(Measured {
        value: mismatches,
        samples: experiments.len(),
    })
}

fn csv_round_trip(experiments: &[Experiment]) -> bregcirc::Result<Measured> {
    let mut mismatches = 0.0;
    for e in experiments {
        let (table, csv) = trace_csv(e).map_err(to_core)?;
        if TraceTable::read(csv.as_bytes()).map_err(to_core)? != table {
            mismatches += 1.0;
        }
    }
    Ok(Measured {
        value: mismatches,
        samples: experiments.len(),
    })
}

fn to_core(e: CliError) -> bregcirc::Error {
    match e {
        CliError::Core(e) => e,
        other => bregcirc::Error::InvalidArgument(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (Result<Outcome, CliError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("bregcirc").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = execute(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn distance_examples() {
        let (r, out) = exec(&["distance", "--function", "euclidean", "--x", "1,2", "--y", "0,0"]);
        assert_eq!((r.unwrap(), out.trim()), (Outcome::Success, "2.5"));
        let (_, out) = exec(&["distance", "--function", "burg", "--x", "1", "--y", "2"]);
        assert_eq!(out.trim(), "0.193147180559945");
        let (_, out) = exec(&["distance", "--function", "fermi_dirac", "--x", "0.3", "--y", "1"]);
        assert_eq!(out.trim(), "inf");
        let (r, _) = exec(&["distance", "--function", "euclidean", "--x", "1,2", "--y", "0"]);
        assert_eq!(r.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn circumcenter_examples() {
        let (r, out) = exec(&["circumcenter", "--function", "fermi_dirac", "--operators", "flip:1", "--x0", "0.3"]);
        assert_eq!(r.unwrap(), Outcome::Success);
        assert!(out.starts_with("0.5 Unique "), "{out}");
        let (_, out) = exec(&["circumcenter", "--function", "fermi_dirac", "--operators", "flip:1", "--x0", "0.5"]);
        assert!(out.starts_with("0.5 Unique "), "{out}");
    }

    #[test]
    fn iterate_to_stdout() {
        let (r, out) = exec(&["iterate", "--function", "fermi_dirac", "--dim", "2", "--operators", "flip:1", "--x0", "0.3,0.4"]);
        assert_eq!(r.unwrap(), Outcome::Success);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "iter,x_0,x_1,d_step,d_ref");
        assert_eq!(lines[2], "1,0.5,0.4,,");
        assert!(lines[3].starts_with("ConvergedStep 1 x=0.5,0.4 "), "{}", lines[3]);
    }

    #[test]
    fn project_backward_and_forward() {
        let (r, out) = exec(&["project", "--function", "euclidean", "--points", "0,0;1,0", "--x", "0,1"]);
        assert_eq!(r.unwrap(), Outcome::Success);
        assert!(out.starts_with("0,0 Converged "), "{out}");
        let (r, _) = exec(&["project", "--function", "burg", "--points", "1,1;2,1", "--x", "1,2", "--forward"]);
        assert_eq!(r.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn suite_extension_passes() {
        let experiments = sample_experiments(3, 4);
        assert_eq!(csv_determinism(&experiments).unwrap().value, 0.0);
        assert_eq!(csv_round_trip(&experiments).unwrap().value, 0.0);
    }
}
