//! The four subcommands. Each returns the process outcome; output is
//! written through a single writer after all rows are computed.

use metric_constraints::constraints::gram_covariance_check;
use metric_constraints::dynamics::{constrained_field, integrate, Flow, IntegrateOptions};
use metric_constraints::equivalence::{equivalence_report, EquivalenceReport, EQUIVALENCE_TOLERANCE};
use metric_constraints::geometry::nijenhuis_residual;
use metric_constraints::systems::{angular_pushforward, product_surface_sample, sample_interior_points};
use metric_constraints::{geometry_at, ChartPoint, SystemDefinition, Verdict};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Coordinates, RunConfig};
use crate::output::{number, sink, write_csv, write_json};
use crate::{CliError, Outcome};

/// Grid nodes closer than this (max chart-coordinate distance) to a
/// singular point are not evaluated.
pub const SINGULAR_EXCLUSION: f64 = 1e-3;

/// Tolerance for the algebraic geometry identities in `validate`.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-8;
/// Tolerance for the finite-difference Nijenhuis residual in `validate`.
pub const NIJENHUIS_TOLERANCE: f64 = 1e-4;
pub const NIJENHUIS_STEP: f64 = 1e-5;

pub fn simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    config.check_times()?;
    let system = config.system.build()?;
    let x0 = config
        .initial_point
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs `initial_point`".into()))?
        .to_chart(&system)?;
    let options = IntegrateOptions { projection: config.projection, ..Default::default() };
    let traj = integrate(&system, Flow::Constrained, &x0, config.t_end, config.dt, &options)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let k = x0.pairs();
    let mut header = vec!["t".to_string()];
    header.extend((1..=k).map(|i| format!("q_{i}")));
    header.extend((1..=k).map(|i| format!("p_{i}")));
    header.extend((1..=system.constraints().len()).map(|i| format!("phi_{i}")));
    header.extend(["H".to_string(), "exit_flag".to_string()]);

    let last = traj.samples.len() - 1;
    let rows: Vec<Vec<String>> = traj
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let point = s.point.wrapped();
            let mut row = vec![number(s.t)];
            row.extend(point.q().iter().chain(point.p()).map(|x| number(*x)));
            row.extend(s.constraint_values.iter().map(|x| number(*x)));
            row.push(number(s.energy));
            let flag = if i == last { traj.exit.code() } else { 0 };
            row.push(flag.to_string());
            row
        })
        .collect();
    write_csv(sink(config.output.as_deref())?, &header, &rows)?;

    if let Some(message) = &traj.message {
        eprintln!("trajectory truncated: {message}");
    }
    Ok(if traj.is_truncated() { Outcome::Truncated } else { Outcome::Success })
}

/// Flag column values of the field scan.
const FLAG_OK: u8 = 0;
const FLAG_EXCLUDED: u8 = 1;
const FLAG_SINGULAR: u8 = 2;

pub fn field(config: &RunConfig) -> Result<Outcome, CliError> {
    let system = config.system.build()?;
    if system.n() != 2 {
        return Err(CliError::Config("field scans need a two-level system".into()));
    }
    let grid = config.grid.as_ref().ok_or_else(|| CliError::Config("field needs `grid`".into()))?;
    let nodes = grid.points()?;
    let header: Vec<String> = match grid.coordinates {
        Coordinates::Angular => ["theta", "phi", "theta_dot", "phi_dot", "flag"],
        Coordinates::Chart => ["q", "p", "q_dot", "p_dot", "flag"],
    }
    .iter()
    .map(|s| s.to_string())
    .collect();

    let rows: Vec<Vec<String>> = nodes
        .par_iter()
        .map(|(u, v, x)| {
            let (du, dv, flag) = field_row(&system, grid.coordinates, x);
            vec![number(*u), number(*v), number(du), number(dv), flag.to_string()]
        })
        .collect();
    write_csv(sink(config.output.as_deref())?, &header, &rows)?;
    Ok(Outcome::Success)
}

fn field_row(system: &SystemDefinition, coordinates: Coordinates, x: &ChartPoint) -> (f64, f64, u8) {
    if system.near_singular_point(x, SINGULAR_EXCLUSION) {
        return (f64::NAN, f64::NAN, FLAG_EXCLUDED);
    }
    let velocity = match constrained_field(system, x) {
        Ok(v) => v,
        Err(_) => return (f64::NAN, f64::NAN, FLAG_SINGULAR),
    };
    match coordinates {
        Coordinates::Chart => (velocity[0], velocity[1], FLAG_OK),
        Coordinates::Angular => match angular_pushforward(x, &velocity) {
            Ok((td, pd)) => (td, pd, FLAG_OK),
            Err(_) => (f64::NAN, f64::NAN, FLAG_SINGULAR),
        },
    }
}

/// Points for `check`: explicit ones, or seeded samples (on the product
/// surface for the two-spin system).
fn check_points(config: &RunConfig, system: &SystemDefinition) -> Result<Vec<ChartPoint>, CliError> {
    if !config.points.is_empty() {
        return config.points.iter().map(|p| p.to_chart(system)).collect();
    }
    config.check_samples()?;
    Ok(if system.name() == "two-qubit-product" {
        (0..config.samples as u64).map(|k| product_surface_sample(config.seed.wrapping_add(k))).collect()
    } else {
        sample_interior_points(system.n(), config.samples, config.seed)
    })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum PointStatus {
    Ok,
    Singular,
}

#[derive(Debug, Serialize)]
struct CheckEntry {
    q: Vec<f64>,
    p: Vec<f64>,
    status: PointStatus,
    #[serde(flatten)]
    report: Option<EquivalenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum AggregateVerdict {
    Equivalent,
    NotEquivalent,
    /// Every requested point was excluded.
    Undetermined,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    system: String,
    tolerance: f64,
    evaluated: usize,
    excluded: usize,
    verdict: AggregateVerdict,
    points: Vec<CheckEntry>,
}

pub fn check(config: &RunConfig) -> Result<Outcome, CliError> {
    let system = config.system.build()?;
    let points = check_points(config, &system)?;
    let entries: Vec<CheckEntry> = points
        .par_iter()
        .map(|x| {
            let (report, message) = match equivalence_report(&system, x) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            CheckEntry {
                q: x.q().to_vec(),
                p: x.p().to_vec(),
                status: if report.is_some() { PointStatus::Ok } else { PointStatus::Singular },
                report,
                message,
            }
        })
        .collect();
    let reports: Vec<&EquivalenceReport> = entries.iter().filter_map(|e| e.report.as_ref()).collect();
    let verdict = if reports.is_empty() {
        AggregateVerdict::Undetermined
    } else if reports.iter().all(|r| r.verdict == Verdict::Equivalent) {
        AggregateVerdict::Equivalent
    } else {
        AggregateVerdict::NotEquivalent
    };
    let report = CheckReport {
        system: system.name().to_string(),
        tolerance: EQUIVALENCE_TOLERANCE,
        evaluated: reports.len(),
        excluded: entries.len() - reports.len(),
        verdict,
        points: entries,
    };
    write_json(sink(config.output.as_deref())?, &report)?;
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum InvariantStatus {
    Pass,
    Fail,
    /// Not applicable to this system.
    Skipped,
}

#[derive(Debug, Serialize)]
struct Invariant {
    name: &'static str,
    tolerance: f64,
    max_residual: Option<f64>,
    status: InvariantStatus,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    system: String,
    samples: usize,
    seed: u64,
    pass: bool,
    invariants: Vec<Invariant>,
}

/// Residuals at one point, in the order of `INVARIANT_NAMES`.
fn point_residuals(system: &SystemDefinition, x: &ChartPoint) -> Result<[Option<f64>; 8], CliError> {
    let geom = geometry_at(x).map_err(|e| CliError::Runtime(e.to_string()))?;
    let c = geom.compatibility();
    let observables = system.constraints().iter().all(|k| k.is_observable()) && !system.constraints().is_empty();
    let gram = if observables {
        Some(gram_covariance_check(system.constraints(), x, &geom).map_err(|e| CliError::Runtime(e.to_string()))?)
    } else {
        None
    };
    let nijenhuis = nijenhuis_residual(x, NIJENHUIS_STEP).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok([
        Some(c.j_squared),
        Some(c.hermitian_metric),
        Some(c.kahler_form),
        Some(c.form_inverse),
        Some(c.symplectic_inverse),
        Some(c.canonical_form),
        Some(nijenhuis),
        gram,
    ])
}

const INVARIANT_NAMES: [&str; 8] = [
    "j_squared",
    "hermitian_metric",
    "kahler_form",
    "form_inverse",
    "symplectic_inverse",
    "canonical_form",
    "nijenhuis",
    "gram_covariance",
];

pub fn validate(config: &RunConfig) -> Result<Outcome, CliError> {
    let system = config.system.build()?;
    config.check_samples()?;
    let points = sample_interior_points(system.n(), config.samples, config.seed);
    let per_point: Vec<[Option<f64>; 8]> =
        points.par_iter().map(|x| point_residuals(&system, x)).collect::<Result<_, _>>()?;
    let invariants: Vec<Invariant> = INVARIANT_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let tolerance = if *name == "nijenhuis" { NIJENHUIS_TOLERANCE } else { ALGEBRAIC_TOLERANCE };
            let worst = per_point.iter().filter_map(|r| r[k]).reduce(f64::max);
            let status = match worst {
                None => InvariantStatus::Skipped,
                Some(w) if w < tolerance => InvariantStatus::Pass,
                Some(_) => InvariantStatus::Fail,
            };
            Invariant { name, tolerance, max_residual: worst, status }
        })
        .collect();
    let pass = !invariants.iter().any(|i| matches!(i.status, InvariantStatus::Fail));
    let report = ValidateReport {
        system: system.name().to_string(),
        samples: config.samples,
        seed: config.seed,
        pass,
        invariants,
    };
    write_json(sink(config.output.as_deref())?, &report)?;
    Ok(if pass { Outcome::Success } else { Outcome::InvariantFailure })
}
