//! Schrödinger flow, the metric-projected constrained flow and a fixed-step
//! RK4 integrator with optional projection back onto the constraint surface.
//!
//! The constrained velocity is
//!
//! ```text
//! xdot^a = omega^ab d_b H - lambda_i g^ab d_b Phi^i,
//! lambda_i = M_ij omega^cd d_c Phi^j d_d H,
//! ```
//!
//! which removes the `g`-normal part of the Hamiltonian vector field so that
//! `xdot^a d_a Phi^j = 0` for every constraint.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::{embed, ChartPoint, StateVector};
use crate::constraints::{Constraint, ConstraintFrame, GramMatrix};
use crate::error::{Error, Result};
use crate::geometry::geometry_at;
use crate::linalg::{canonical_symplectic, ComplexMatrix, RealVector};
use crate::systems::SystemDefinition;

/// Energies `E_1..E_n` of a Hamiltonian diagonal in the chart basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumData {
    energies: Vec<f64>,
}

impl SpectrumData {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::Domain(format!(
                "need at least two energies, got {}",
                energies.len()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("energies must be finite".into()));
        }
        Ok(Self { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn n(&self) -> usize {
        self.energies.len()
    }

    /// Gaps `Omega_k = E_k - E_n`, `k < n`.
    pub fn gaps(&self) -> Vec<f64> {
        let last = self.energies[self.energies.len() - 1];
        self.energies[..self.energies.len() - 1].iter().map(|e| e - last).collect()
    }
}

/// `H(x) = <psi|H|psi>/<psi|psi> = E_n + sum_k Omega_k p_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianFunction {
    spectrum: SpectrumData,
}

impl HamiltonianFunction {
    pub fn new(spectrum: SpectrumData) -> Self {
        Self { spectrum }
    }

    pub fn spectrum(&self) -> &SpectrumData {
        &self.spectrum
    }

    pub fn value(&self, x: &ChartPoint) -> f64 {
        let e = self.spectrum.energies();
        e[e.len() - 1]
            + self
                .spectrum
                .gaps()
                .iter()
                .zip(x.p())
                .map(|(w, p)| w * p)
                .sum::<f64>()
    }

    /// `(0.., Omega..)`: the energy depends on the actions only.
    pub fn gradient(&self, x: &ChartPoint) -> RealVector {
        let k = x.pairs();
        let gaps = self.spectrum.gaps();
        RealVector::from_fn(2 * k, |a, _| if a < k { 0.0 } else { gaps[a - k] })
    }

    /// The operator `diag(E)`.
    pub fn operator(&self) -> ComplexMatrix {
        let e = self.spectrum.energies();
        ComplexMatrix::from_fn(e.len(), e.len(), |i, j| {
            if i == j {
                Complex64::new(e[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// Lagrange multipliers `lambda_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierVector(pub RealVector);

/// `omega^ab d_b H`.
pub fn schrodinger_field(system: &SystemDefinition, point: &ChartPoint) -> Result<RealVector> {
    system.check_point(point)?;
    Ok(hamiltonian_flow(system.hamiltonian(), point))
}

/// `omega^ab d_b H`; the symplectic form is canonical in this chart, so no
/// metric is needed.
fn hamiltonian_flow(hamiltonian: &HamiltonianFunction, point: &ChartPoint) -> RealVector {
    canonical_symplectic(point.dim()) * hamiltonian.gradient(point)
}

fn multipliers_in(frame: &ConstraintFrame, hamiltonian_flow: &RealVector) -> RealVector {
    // omega^cd d_c Phi^j d_d H = d_c Phi^j (omega^cd d_d H)
    let rates = RealVector::from_iterator(
        frame.gradients.len(),
        frame.gradients.iter().map(|v| v.dot(hamiltonian_flow)),
    );
    frame.m_inv() * rates
}

/// Multipliers for an explicit constraint list.
pub fn multipliers_with(
    hamiltonian: &HamiltonianFunction,
    constraints: &[Constraint],
    point: &ChartPoint,
) -> Result<MultiplierVector> {
    let frame = ConstraintFrame::new(constraints, point)?;
    let flow = hamiltonian_flow(hamiltonian, point);
    Ok(MultiplierVector(multipliers_in(&frame, &flow)))
}

/// Lagrange multipliers for the system's constraints.
pub fn multipliers(system: &SystemDefinition, point: &ChartPoint) -> Result<MultiplierVector> {
    system.check_point(point)?;
    multipliers_with(system.hamiltonian(), system.constraints(), point)
}

/// Constrained velocity for an explicit constraint list. With no
/// constraints this is the Schrödinger field.
pub fn constrained_field_with(
    hamiltonian: &HamiltonianFunction,
    constraints: &[Constraint],
    point: &ChartPoint,
) -> Result<RealVector> {
    let frame = ConstraintFrame::new(constraints, point)?;
    let mut velocity = hamiltonian_flow(hamiltonian, point);
    let lambda = multipliers_in(&frame, &velocity);
    for (l, normal) in lambda.iter().zip(frame.normals()) {
        velocity -= normal * *l;
    }
    Ok(velocity)
}

/// Constrained velocity for the system's constraints.
pub fn constrained_field(system: &SystemDefinition, point: &ChartPoint) -> Result<RealVector> {
    system.check_point(point)?;
    constrained_field_with(system.hamiltonian(), system.constraints(), point)
}

/// Largest `|xdot^a d_a Phi^j|` over the constraints.
pub fn tangency_residual(constraints: &[Constraint], point: &ChartPoint, velocity: &RealVector) -> f64 {
    constraints
        .iter()
        .map(|c| c.gradient(point).dot(velocity).abs())
        .fold(0.0, f64::max)
}

/// Which vector field to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    Schrodinger,
    Constrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    /// Newton projection onto the constraint surface after every step.
    /// Ignored for the Schrödinger flow.
    pub projection: bool,
    pub newton_iterations: usize,
    pub projection_tolerance: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { projection: true, newton_iterations: 5, projection_tolerance: 1e-10 }
    }
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitFlag {
    Completed,
    LeftChart,
    SingularGram,
}

impl ExitFlag {
    /// Numeric code used in CSV output.
    pub fn code(self) -> u8 {
        match self {
            ExitFlag::Completed => 0,
            ExitFlag::LeftChart => 1,
            ExitFlag::SingularGram => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    /// Angles are kept unwrapped; see [`ChartPoint::wrapped`].
    pub point: ChartPoint,
    pub constraint_values: Vec<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub exit: ExitFlag,
    pub message: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }

    pub fn is_truncated(&self) -> bool {
        self.exit != ExitFlag::Completed
    }

    /// `max_t |Phi^i(t) - Phi^i(0)|` over all constraints.
    pub fn constraint_drift(&self) -> f64 {
        let first = &self.samples[0].constraint_values;
        self.samples
            .iter()
            .flat_map(|s| s.constraint_values.iter().zip(first).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max)
    }
}

/// One classical RK4 step of `field` from `x`.
pub fn rk4_step<F>(field: &F, x: &RealVector, dt: f64) -> Result<RealVector>
where
    F: Fn(&RealVector) -> Result<RealVector>,
{
    let k1 = field(x)?;
    let k2 = field(&(x + &k1 * (0.5 * dt)))?;
    let k3 = field(&(x + &k2 * (0.5 * dt)))?;
    let k4 = field(&(x + &k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

fn truncation_flag(err: &Error) -> ExitFlag {
    match err {
        Error::SingularGram { .. } => ExitFlag::SingularGram,
        _ => ExitFlag::LeftChart,
    }
}

/// Newton iterations along `g^-1 d Phi` restoring `Phi^i = target_i`.
fn project(
    constraints: &[Constraint],
    targets: &[f64],
    x: RealVector,
    options: &IntegrateOptions,
) -> Result<RealVector> {
    let mut x = x;
    for _ in 0..options.newton_iterations {
        let point = ChartPoint::from_coords(x.as_slice())?;
        let residual = RealVector::from_iterator(
            constraints.len(),
            constraints.iter().zip(targets).map(|(c, t)| c.value(&point) - t),
        );
        if residual.amax() < options.projection_tolerance {
            break;
        }
        let frame = ConstraintFrame::new(constraints, &point)?;
        let weights = frame.m_inv() * residual;
        for (w, normal) in weights.iter().zip(frame.normals()) {
            x -= normal * *w;
        }
    }
    Ok(x)
}

/// Integrate `flow` from `x0` to `t_end` with fixed step `dt`.
///
/// Samples are taken at `t = k dt`; when `t_end` is not a multiple of `dt`
/// the final step is shortened to land on `t_end`. Observable constraints
/// are held at their initial values, algebraic ones must vanish at `x0`.
/// Leaving the chart or meeting a singular Gram matrix truncates the
/// trajectory and sets its exit flag.
pub fn integrate(
    system: &SystemDefinition,
    flow: Flow,
    x0: &ChartPoint,
    t_end: f64,
    dt: f64,
    options: &IntegrateOptions,
) -> Result<Trajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::Domain(format!("end time {t_end} must be non-negative")));
    }
    system.check_point(x0)?;
    let constraints = system.constraints();
    let initial_values: Vec<f64> = constraints.iter().map(|c| c.value(x0)).collect();
    if flow == Flow::Constrained {
        for (c, v) in constraints.iter().zip(&initial_values) {
            if !c.is_observable() && v.abs() > 1e-10 {
                return Err(Error::OffSurface(v.abs()));
            }
        }
    }
    let targets: Vec<f64> = constraints
        .iter()
        .zip(&initial_values)
        .map(|(c, v)| if c.is_observable() { *v } else { 0.0 })
        .collect();

    let hamiltonian = system.hamiltonian();
    let sample = |t: f64, point: ChartPoint| TrajectorySample {
        t,
        constraint_values: constraints.iter().map(|c| c.value(&point)).collect(),
        energy: hamiltonian.value(&point),
        point,
    };

    let field = |x: &RealVector| -> Result<RealVector> {
        let point = ChartPoint::from_coords(x.as_slice())?;
        match flow {
            Flow::Schrodinger => Ok(hamiltonian_flow(hamiltonian, &point)),
            Flow::Constrained => constrained_field_with(hamiltonian, constraints, &point),
        }
    };

    let mut samples = vec![sample(0.0, x0.clone())];
    if flow == Flow::Constrained {
        if let Err(err) = ConstraintFrame::new(constraints, x0) {
            return Ok(Trajectory { samples, exit: truncation_flag(&err), message: Some(err.to_string()) });
        }
    }

    let full_steps = (t_end / dt + 1e-9).floor() as usize;
    let remainder = t_end - full_steps as f64 * dt;
    let extra = remainder > 1e-12 * dt.max(t_end);
    let total = full_steps + usize::from(extra);

    let project_steps = options.projection && flow == Flow::Constrained && !constraints.is_empty();
    let mut x = x0.coords();
    for k in 1..=total {
        let (h, t) = if k <= full_steps { (dt, k as f64 * dt) } else { (remainder, t_end) };
        let step = rk4_step(&field, &x, h).and_then(|next| {
            if project_steps {
                project(constraints, &targets, next, options)
            } else {
                Ok(next)
            }
        });
        let next = match step.and_then(|next| ChartPoint::from_coords(next.as_slice()).map(|p| (next, p))) {
            Ok(ok) => ok,
            Err(err) => {
                return Ok(Trajectory {
                    samples,
                    exit: truncation_flag(&err),
                    message: Some(format!("stopped after t = {:.6}: {err}", t - h)),
                })
            }
        };
        x = next.0;
        samples.push(sample(t, next.1));
    }
    Ok(Trajectory { samples, exit: ExitFlag::Completed, message: None })
}

/// Exact evolution under a Hamiltonian diagonal in the chart basis: phases
/// `exp(-i E t)` on the amplitudes, then back to chart coordinates (angles
/// in `[0, 2pi)`).
pub fn exact_unitary_oracle(spectrum: &SpectrumData, x0: &ChartPoint, t: f64) -> Result<ChartPoint> {
    if spectrum.n() != x0.hilbert_dim() {
        return Err(Error::DimensionMismatch { expected: spectrum.n(), found: x0.hilbert_dim() });
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    let psi = embed(x0);
    let evolved = psi
        .amplitudes()
        .iter()
        .zip(spectrum.energies())
        .map(|(a, e)| a * Complex64::from_polar(1.0, -(e * t).rem_euclid(TAU)))
        .collect::<Vec<_>>();
    StateVector::from_slice(&evolved)?.to_chart()
}

/// Smallest angular distance between two angles.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `max` coordinate difference with angles compared modulo `2pi`.
pub fn chart_distance(a: &ChartPoint, b: &ChartPoint) -> f64 {
    let dq = a.q().iter().zip(b.q()).map(|(x, y)| angle_difference(*x, *y));
    let dp = a.p().iter().zip(b.p()).map(|(x, y)| (x - y).abs());
    dq.chain(dp).fold(0.0, f64::max)
}

/// The Gram matrix of the system's constraints at `point` without requiring
/// invertibility.
pub fn system_gram(system: &SystemDefinition, point: &ChartPoint) -> Result<GramMatrix> {
    system.check_point(point)?;
    let geom = geometry_at(point)?;
    let gradients: Vec<RealVector> = system.constraints().iter().map(|c| c.gradient(point)).collect();
    Ok(GramMatrix::assemble(&gradients, &geom))
}
