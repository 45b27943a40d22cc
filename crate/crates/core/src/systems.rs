//! Ready-made systems: a pair of spins constrained to product states, a
//! single spin with conserved `sigma_x`, and a generic builder for
//! Hamiltonians diagonal in the chart basis.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{embed, ChartPoint, StateVector, BOUNDARY_GUARD};
use crate::constraints::{Constraint, GRAM_EIGENVALUE_FLOOR};
use crate::dynamics::{angle_difference, HamiltonianFunction, SpectrumData};
use crate::error::{Error, Result};
use crate::geometry::{geometry_at, PointGeometry};
use crate::linalg::{ComplexMatrix, RealVector};

/// Closed-form velocity field.
pub type FieldFn = Arc<dyn Fn(&ChartPoint) -> Result<RealVector> + Send + Sync>;

/// Tolerance of the on-surface check made by closed-form oracles.
pub const SURFACE_TOLERANCE: f64 = 1e-10;

/// A Hamiltonian diagonal in the chart basis together with its constraints.
#[derive(Clone)]
pub struct SystemDefinition {
    name: String,
    hamiltonian: HamiltonianFunction,
    constraints: Vec<Constraint>,
    oracle: Option<FieldFn>,
    singular_points: Vec<RealVector>,
}

impl fmt::Debug for SystemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDefinition")
            .field("name", &self.name)
            .field("energies", &self.hamiltonian.spectrum().energies())
            .field("constraints", &self.constraints)
            .field("oracle", &self.oracle.is_some())
            .finish()
    }
}

impl SystemDefinition {
    pub fn new(name: impl Into<String>, spectrum: SpectrumData, constraints: Vec<Constraint>) -> Self {
        Self {
            name: name.into(),
            hamiltonian: HamiltonianFunction::new(spectrum),
            constraints,
            oracle: None,
            singular_points: Vec::new(),
        }
    }

    pub fn with_oracle(mut self, oracle: FieldFn) -> Self {
        self.oracle = Some(oracle);
        self
    }

    /// Points where the constrained flow is undefined, as chart coordinates.
    pub fn with_singular_points(mut self, points: Vec<RealVector>) -> Self {
        self.singular_points = points;
        self
    }

    /// Same Hamiltonian with a different constraint set. The closed-form
    /// oracle and singular points no longer apply and are dropped.
    pub fn with_constraints(&self, constraints: Vec<Constraint>) -> Self {
        Self {
            name: self.name.clone(),
            hamiltonian: self.hamiltonian.clone(),
            constraints,
            oracle: None,
            singular_points: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Hilbert-space dimension.
    pub fn n(&self) -> usize {
        self.hamiltonian.spectrum().n()
    }

    pub fn chart_dim(&self) -> usize {
        2 * (self.n() - 1)
    }

    pub fn hamiltonian(&self) -> &HamiltonianFunction {
        &self.hamiltonian
    }

    pub fn spectrum(&self) -> &SpectrumData {
        self.hamiltonian.spectrum()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn oracle(&self) -> Option<&FieldFn> {
        self.oracle.as_ref()
    }

    pub fn singular_points(&self) -> &[RealVector] {
        &self.singular_points
    }

    /// Dimension and chart-interior check.
    pub fn check_point(&self, point: &ChartPoint) -> Result<()> {
        if point.hilbert_dim() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: point.hilbert_dim() });
        }
        if !point.is_interior() {
            return Err(Error::OutOfChart(format!(
                "boundary distance {:.3e}",
                point.boundary_distance()
            )));
        }
        Ok(())
    }

    pub fn embed(&self, point: &ChartPoint) -> Result<StateVector> {
        self.check_point(point)?;
        Ok(embed(point))
    }

    pub fn geometry_at(&self, point: &ChartPoint) -> Result<PointGeometry> {
        self.check_point(point)?;
        geometry_at(point)
    }

    pub fn constraint_values(&self, point: &ChartPoint) -> Vec<f64> {
        self.constraints.iter().map(|c| c.value(point)).collect()
    }

    /// Whether `point` lies within `radius` (max-coordinate distance, angles
    /// modulo `2pi`) of a declared singular point.
    pub fn near_singular_point(&self, point: &ChartPoint, radius: f64) -> bool {
        let k = point.pairs();
        let x = point.coords();
        self.singular_points.iter().any(|s| {
            s.len() == x.len()
                && (0..x.len())
                    .map(|a| if a < k { angle_difference(x[a], s[a]) } else { (x[a] - s[a]).abs() })
                    .fold(0.0, f64::max)
                    < radius
        })
    }
}

/// Hamiltonian `diag(E)` with arbitrary constraints and no oracle.
pub fn diagonal_system(energies: Vec<f64>, constraints: Vec<Constraint>) -> Result<SystemDefinition> {
    let spectrum = SpectrumData::new(energies)?;
    Ok(SystemDefinition::new("diagonal", spectrum, constraints))
}

/// Reproducible interior points of the `n`-level chart: angles uniform in
/// `[0, 2pi)`, actions from normalised weights uniform in `[0.05, 1)`.
pub fn sample_interior_points(n: usize, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q = (0..n - 1).map(|_| rng.gen_range(0.0..TAU)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            let p = w[..n - 1].iter().map(|x| x / total).collect();
            ChartPoint::new(q, p).expect("weights keep every action interior")
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Two spins restricted to product states.

/// Two spins, energies `E_1..E_4`, restricted to product states through the
/// separable pair `q_1 - q_2 - q_3 = 0 (mod 2pi)` and `p_1 p_4 - p_2 p_3 = 0`.
pub fn two_qubit_product_system(energies: [f64; 4]) -> SystemDefinition {
    let spectrum = SpectrumData::new(energies.to_vec()).expect("four finite energies");
    let gaps = spectrum.gaps();
    SystemDefinition::new("two-qubit-product", spectrum, product_constraints())
        .with_oracle(Arc::new(move |x: &ChartPoint| product_eom(x, &gaps)))
}

/// The separable product-state constraints with analytic gradients.
pub fn product_constraints() -> Vec<Constraint> {
    // Angles are only defined modulo 2pi, so the phase relation is measured
    // as the nearest representative of q1 - q2 - q3.
    let phase = Constraint::algebraic("phase", |x| {
        let d = x.q()[0] - x.q()[1] - x.q()[2];
        d - TAU * (d / TAU).round()
    })
        .with_gradient(|_| RealVector::from_row_slice(&[1.0, -1.0, -1.0, 0.0, 0.0, 0.0]));
    let amplitude = Constraint::algebraic("amplitude", |x| {
        let p = x.p();
        p[0] * (1.0 - p[0] - p[1] - p[2]) - p[1] * p[2]
    })
    .with_gradient(|x| {
        let p = x.p();
        RealVector::from_row_slice(&[
            0.0,
            0.0,
            0.0,
            1.0 - 2.0 * p[0] - p[1] - p[2],
            -p[0] - p[2],
            -p[0] - p[1],
        ])
    });
    vec![phase, amplitude]
}

/// The product condition `psi^1 psi^4 = psi^2 psi^3` written as the real
/// trigonometric pair. Gradients are finite-difference.
pub fn product_trig_constraints() -> Vec<Constraint> {
    let split = |x: &ChartPoint| {
        let p = x.p();
        let q = x.q();
        let p4 = x.residual();
        ((p[0] * p4).sqrt(), q[0], (p[1] * p[2]).sqrt(), q[1] + q[2])
    };
    vec![
        Constraint::algebraic("product_cos", move |x| {
            let (a, qa, b, qb) = split(x);
            a * qa.cos() - b * qb.cos()
        }),
        Constraint::algebraic("product_sin", move |x| {
            let (a, qa, b, qb) = split(x);
            a * qa.sin() - b * qb.sin()
        }),
    ]
}

/// Closed-form constrained velocity on the product surface. Refuses points
/// with `|p_1 p_4 - p_2 p_3| > SURFACE_TOLERANCE`.
pub fn product_eom(x: &ChartPoint, gaps: &[f64]) -> Result<RealVector> {
    if x.pairs() != 3 || gaps.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: x.pairs() });
    }
    let p = x.p();
    let off = (p[0] * x.residual() - p[1] * p[2]).abs();
    if off > SURFACE_TOLERANCE {
        return Err(Error::OffSurface(off));
    }
    let k = gaps[0] - gaps[1] - gaps[2];
    Ok(RealVector::from_row_slice(&[
        gaps[0] - (1.0 - 2.0 * p[0] - p[1] - p[2]) * k,
        gaps[1] + (p[0] + p[2]) * k,
        gaps[2] + (p[0] + p[1]) * k,
        0.0,
        0.0,
        0.0,
    ]))
}

/// The same velocity before `p_1 p_4 = p_2 p_3` is used to simplify it.
pub fn product_eom_unsimplified(x: &ChartPoint, gaps: &[f64]) -> RealVector {
    let p = x.p();
    let (p1, p2, p3) = (p[0], p[1], p[2]);
    let k = gaps[0] - gaps[1] - gaps[2];
    let denominator = p2 * p3 * (1.0 - p2 - p3) - p1 * p1 * (p2 + p3) + p1 * (1.0 - p2 - p3) * (p2 + p3);
    RealVector::from_row_slice(&[
        gaps[0] - p2 * p3 * (1.0 - 2.0 * p1 - p2 - p3) * k / denominator,
        gaps[1] + p1 * p3 * (1.0 - p1 - p3) * k / denominator,
        gaps[2] + p1 * p2 * (1.0 - p1 - p2) * k / denominator,
        0.0,
        0.0,
        0.0,
    ])
}

/// Reproducible interior point on the product surface: draw `p_2, p_3`,
/// solve `p_1 (1 - p_1 - p_2 - p_3) = p_2 p_3` for `p_1`, draw `q_2, q_3`
/// and set `q_1 = q_2 + q_3`.
pub fn product_surface_sample(seed: u64) -> ChartPoint {
    const MIN_ACTION: f64 = 0.02;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p2: f64 = rng.gen_range(0.05..0.45);
        let p3: f64 = rng.gen_range(0.05..0.45);
        let upper_root: bool = rng.gen();
        let q2: f64 = rng.gen_range(0.0..TAU);
        let q3: f64 = rng.gen_range(0.0..TAU);
        let c = 1.0 - p2 - p3;
        let disc = c * c - 4.0 * p2 * p3;
        if disc <= 0.0 {
            continue;
        }
        let root = disc.sqrt();
        // Product of the roots is p2 p3; use it for the smaller one to
        // avoid cancellation.
        let big = 0.5 * (c + root);
        let small = p2 * p3 / big;
        let p1 = if upper_root { big } else { small };
        let p4 = c - p1;
        if p1.min(p4) < MIN_ACTION {
            continue;
        }
        return ChartPoint::new(vec![q2 + q3, q2, q3], vec![p1, p2, p3]).expect("interior by construction");
    }
}

// ---------------------------------------------------------------------------
// Single spin with conserved sigma_x.

fn pauli_x() -> ComplexMatrix {
    let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    ComplexMatrix::from_row_slice(2, 2, &[o, l, l, o])
}

/// Spin-1/2 in a unit `z` field with `<sigma_x>` conserved.
///
/// The chart's first basis vector carries the phased amplitude, so the
/// energies in chart order are `(-1, 1)` and `H = 1 - 2p`. The constraint is
/// `Phi = 2 sqrt(p(1-p)) cos q`.
pub fn single_spin_conserved_sx() -> SystemDefinition {
    let spectrum = SpectrumData::new(vec![-1.0, 1.0]).expect("finite energies");
    let sx = Constraint::observable("sigma_x", pauli_x())
        .expect("sigma_x is Hermitian")
        .with_value(|x| {
            let (q, p) = (x.q()[0], x.p()[0]);
            2.0 * (p * (1.0 - p)).sqrt() * q.cos()
        })
        .with_gradient(|x| {
            let (q, p) = (x.q()[0], x.p()[0]);
            let root = (p * (1.0 - p)).sqrt();
            RealVector::from_row_slice(&[-2.0 * root * q.sin(), (1.0 - 2.0 * p) * q.cos() / root])
        });
    SystemDefinition::new("spin-half-sx", spectrum, vec![sx])
        .with_oracle(Arc::new(spin_eom))
        .with_singular_points(vec![
            RealVector::from_row_slice(&[0.0, 0.5]),
            RealVector::from_row_slice(&[PI, 0.5]),
        ])
}

/// Closed-form `(qdot, pdot)` for the conserved-`sigma_x` spin.
pub fn spin_eom(x: &ChartPoint) -> Result<RealVector> {
    if x.pairs() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: x.pairs() });
    }
    let (q, p) = (x.q()[0], x.p()[0]);
    let a = 1.0 - 2.0 * p;
    let (s, c) = q.sin_cos();
    let m = a * a * c * c + s * s;
    if m <= GRAM_EIGENVALUE_FLOOR {
        return Err(Error::SingularGram { condition: f64::INFINITY, combination: "+1.000*sigma_x".into() });
    }
    Ok(RealVector::from_row_slice(&[-2.0 * a * a * c * c / m, 4.0 * a * (p - 1.0) * p * s * c / m]))
}

/// Bloch-sphere angles with `p = sin^2(theta/2)` and `q = -phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularPoint {
    pub theta: f64,
    pub phi: f64,
}

impl AngularPoint {
    /// `theta` must avoid the poles; `phi` is reduced to `[0, 2pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::OutOfChart("non-finite angle".into()));
        }
        let p = (0.5 * theta).sin().powi(2);
        if !(theta > 0.0 && theta < PI) || p < BOUNDARY_GUARD || 1.0 - p < BOUNDARY_GUARD {
            return Err(Error::OutOfChart(format!("polar angle {theta} is at or beyond a pole")));
        }
        Ok(Self { theta, phi: phi.rem_euclid(TAU) })
    }
}

pub fn to_angular(point: &ChartPoint) -> Result<AngularPoint> {
    if point.pairs() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: point.pairs() });
    }
    if !point.is_interior() {
        return Err(Error::OutOfChart("pole".into()));
    }
    let p = point.p()[0];
    let theta = 2.0 * p.sqrt().atan2((1.0 - p).sqrt());
    AngularPoint::new(theta, -point.q()[0])
}

/// Inverse of [`to_angular`], with `q` in `[0, 2pi)`.
pub fn from_angular(a: &AngularPoint) -> Result<ChartPoint> {
    let a = AngularPoint::new(a.theta, a.phi)?;
    let p = (0.5 * a.theta).sin().powi(2);
    ChartPoint::new(vec![(-a.phi).rem_euclid(TAU)], vec![p])
}

/// Push a chart velocity `(qdot, pdot)` to `(theta_dot, phi_dot)`.
pub fn angular_pushforward(point: &ChartPoint, velocity: &RealVector) -> Result<(f64, f64)> {
    if point.pairs() != 1 || velocity.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: velocity.len() });
    }
    let p = point.p()[0];
    Ok((velocity[1] / (p * (1.0 - p)).sqrt(), -velocity[0]))
}

/// Closed-form angular field of the conserved-`sigma_x` spin:
/// `theta_dot = sin 2theta sin 2phi / (2D)`, `phi_dot = 2 cos^2 theta cos^2 phi / D`
/// with `D = 1 - sin^2 theta cos^2 phi`.
pub fn angular_field(a: &AngularPoint) -> Result<(f64, f64)> {
    let (st, ct) = a.theta.sin_cos();
    let (sp, cp) = a.phi.sin_cos();
    // D written as cos^2 theta cos^2 phi + sin^2 phi to avoid cancellation.
    let d = ct * ct * cp * cp + sp * sp;
    if d <= GRAM_EIGENVALUE_FLOOR {
        return Err(Error::SingularGram { condition: f64::INFINITY, combination: "+1.000*sigma_x".into() });
    }
    Ok((0.5 * (2.0 * st * ct) * (2.0 * sp * cp) / d, 2.0 * ct * ct * cp * cp / d))
}
