//! Constraint functions on state space and their Gram matrix
//! `M^ij = g^ab d_a Phi^i d_b Phi^j`.

use std::fmt;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::chart::{embed, embed_raw, embedding_jacobian, ChartPoint, StateVector};
use crate::error::{Error, Result};
use crate::geometry::PointGeometry;
use crate::linalg::{max_abs, max_abs_complex, ComplexMatrix, RealMatrix, RealVector};

/// Gram matrices with a larger condition number are singular.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Smallest Gram eigenvalue accepted regardless of conditioning. A single
/// constraint always has condition number one, so vanishing gradients are
/// caught here instead.
pub const GRAM_EIGENVALUE_FLOOR: f64 = 1e-24;

/// Base step of central-difference gradients, scaled by `max(1, |x|)`.
pub const FD_STEP: f64 = 1e-6;

pub type ScalarFn = Arc<dyn Fn(&ChartPoint) -> f64 + Send + Sync>;
pub type CovectorFn = Arc<dyn Fn(&ChartPoint) -> RealVector + Send + Sync>;

/// How a constraint is specified.
#[derive(Clone)]
pub enum ConstraintKind {
    /// Expectation value of a fixed Hermitian operator. Along the flow it is
    /// held at its initial value.
    Observable(ComplexMatrix),
    /// Arbitrary real function of the chart point. The flow is restricted
    /// to its zero set.
    Algebraic,
}

/// A real constraint function `Phi(x)` with its gradient.
#[derive(Clone)]
pub struct Constraint {
    name: String,
    kind: ConstraintKind,
    value: ScalarFn,
    gradient: Option<CovectorFn>,
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Constraint")
            .field("name", &self.name)
            .field("observable", &self.is_observable())
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl Constraint {
    /// `Phi(x) = <psi|A|psi>/<psi|psi>` for a Hermitian `A`, with an
    /// analytic gradient through the embedding.
    pub fn observable(name: impl Into<String>, operator: ComplexMatrix) -> Result<Self> {
        check_hermitian(&operator)?;
        let op_value = operator.clone();
        let op_grad = operator.clone();
        let value: ScalarFn = Arc::new(move |x: &ChartPoint| expectation(&op_value, &embed_raw(x)));
        let gradient: CovectorFn = Arc::new(move |x: &ChartPoint| observable_gradient(&op_grad, x));
        Ok(Self {
            name: name.into(),
            kind: ConstraintKind::Observable(operator),
            value,
            gradient: Some(gradient),
        })
    }

    /// Algebraic constraint with finite-difference gradient.
    pub fn algebraic(
        name: impl Into<String>,
        value: impl Fn(&ChartPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), kind: ConstraintKind::Algebraic, value: Arc::new(value), gradient: None }
    }

    /// Replace the gradient with an analytic one.
    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&ChartPoint) -> RealVector + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// Replace the value function, keeping kind and gradient.
    pub fn with_value(mut self, value: impl Fn(&ChartPoint) -> f64 + Send + Sync + 'static) -> Self {
        self.value = Arc::new(value);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn is_observable(&self) -> bool {
        matches!(self.kind, ConstraintKind::Observable(_))
    }

    pub fn operator(&self) -> Option<&ComplexMatrix> {
        match &self.kind {
            ConstraintKind::Observable(op) => Some(op),
            ConstraintKind::Algebraic => None,
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, x: &ChartPoint) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &ChartPoint) -> RealVector {
        match &self.gradient {
            Some(g) => g(x),
            None => self.fd_gradient(x),
        }
    }

    /// Central-difference gradient, independent of any analytic gradient.
    pub fn fd_gradient(&self, x: &ChartPoint) -> RealVector {
        central_difference(|y| (self.value)(y), x)
    }

    /// `c * Phi`. Observables keep their kind with the scaled operator.
    pub fn scaled(&self, c: f64) -> Constraint {
        let value = self.value.clone();
        let gradient = self.gradient.clone();
        let kind = match &self.kind {
            ConstraintKind::Observable(op) => ConstraintKind::Observable(op * Complex64::new(c, 0.0)),
            ConstraintKind::Algebraic => ConstraintKind::Algebraic,
        };
        Constraint {
            name: format!("{}*{}", c, self.name),
            kind,
            value: Arc::new(move |x| c * value(x)),
            gradient: gradient.map(|g| -> CovectorFn { Arc::new(move |x| g(x) * c) }),
        }
    }
}

/// Central differences with step `FD_STEP * max(1, |x_a|)`, shortened so
/// the stencil stays inside the chart.
pub fn central_difference(f: impl Fn(&ChartPoint) -> f64, x: &ChartPoint) -> RealVector {
    let coords = x.coords();
    let limit = 0.25 * x.boundary_distance();
    RealVector::from_fn(coords.len(), |a, _| {
        let h = (FD_STEP * coords[a].abs().max(1.0)).min(limit);
        let mut plus = coords.clone();
        let mut minus = coords.clone();
        plus[a] += h;
        minus[a] -= h;
        let fp = f(&ChartPoint::from_coords_unchecked(plus.as_slice()).expect("finite coords"));
        let fm = f(&ChartPoint::from_coords_unchecked(minus.as_slice()).expect("finite coords"));
        (fp - fm) / (2.0 * h)
    })
}

pub(crate) fn check_hermitian(op: &ComplexMatrix) -> Result<()> {
    if op.nrows() != op.ncols() {
        return Err(Error::Domain(format!("operator is {}x{}, not square", op.nrows(), op.ncols())));
    }
    let deviation = max_abs_complex(&(op - op.adjoint()));
    let scale = max_abs_complex(op).max(1.0);
    if deviation > 1e-12 * scale {
        return Err(Error::NotHermitian(deviation));
    }
    Ok(())
}

fn expectation(op: &ComplexMatrix, psi: &crate::linalg::ComplexVector) -> f64 {
    (psi.dotc(&(op * psi))).re / psi.dotc(psi).re
}

/// `<psi|A|psi>/<psi|psi>` for a state vector.
pub fn observable_expectation(op: &ComplexMatrix, state: &StateVector) -> Result<f64> {
    if op.nrows() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: op.nrows() });
    }
    Ok(expectation(op, state.amplitudes()))
}

/// Analytic chart gradient of an expectation value:
/// `d_a f = 2 Re(<d_a psi|A|psi> - f <d_a psi|psi>) / <psi|psi>`.
pub fn observable_gradient(op: &ComplexMatrix, x: &ChartPoint) -> RealVector {
    let psi = embed_raw(x);
    let a_psi = op * &psi;
    let norm = psi.dotc(&psi).re;
    let f = psi.dotc(&a_psi).re / norm;
    let d_psi = embedding_jacobian(x);
    RealVector::from_iterator(
        d_psi.len(),
        d_psi.iter().map(|d| 2.0 * (d.dotc(&a_psi) - d.dotc(&psi) * f).re / norm),
    )
}

/// Gram matrix `M^ij` and, when it is well conditioned, its inverse `M_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub m: RealMatrix,
    pub m_inv: Option<RealMatrix>,
    pub condition_number: f64,
    /// Eigenvector of the smallest eigenvalue, used to name the redundant
    /// combination when the matrix is singular.
    null_direction: Option<RealVector>,
}

impl GramMatrix {
    /// Assemble `M^ij = g^ab grad_i_a grad_j_b` without requiring
    /// invertibility.
    pub fn assemble(gradients: &[RealVector], geom: &PointGeometry) -> Self {
        let n = gradients.len();
        let lifted: Vec<RealVector> = gradients.iter().map(|v| &geom.g_inv * v).collect();
        let mut m = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let entry = gradients[i].dot(&lifted[j]);
                m[(i, j)] = entry;
                m[(j, i)] = entry;
            }
        }
        if n == 0 {
            return Self { m, m_inv: Some(RealMatrix::zeros(0, 0)), condition_number: 1.0, null_direction: None };
        }
        let eig = SymmetricEigen::new(m.clone());
        let (mut lo, mut hi) = (0usize, 0usize);
        for k in 0..n {
            if eig.eigenvalues[k] < eig.eigenvalues[lo] {
                lo = k;
            }
            if eig.eigenvalues[k].abs() > eig.eigenvalues[hi].abs() {
                hi = k;
            }
        }
        let smallest = eig.eigenvalues[lo];
        let largest = eig.eigenvalues[hi].abs();
        let condition_number = if smallest <= GRAM_EIGENVALUE_FLOOR || !smallest.is_finite() {
            f64::INFINITY
        } else {
            largest / smallest
        };
        let m_inv = if condition_number <= GRAM_CONDITION_LIMIT {
            m.clone().lu().try_inverse().map(|inv| (&inv + inv.transpose()) * 0.5)
        } else {
            None
        };
        Self {
            m,
            m_inv,
            condition_number,
            null_direction: Some(eig.eigenvectors.column(lo).into_owned()),
        }
    }

    pub fn len(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.m.nrows() == 0
    }

    pub fn is_invertible(&self) -> bool {
        self.m_inv.is_some()
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    /// Describe the near-null combination of constraints, e.g.
    /// `0.707*a - 0.707*b`.
    pub fn null_combination(&self, names: &[&str]) -> String {
        let Some(v) = &self.null_direction else {
            return String::new();
        };
        let scale = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let mut terms = Vec::new();
        for (k, c) in v.iter().enumerate() {
            if c.abs() > 1e-6 * scale {
                let name = names.get(k).copied().unwrap_or("?");
                terms.push(format!("{c:+.3}*{name}"));
            }
        }
        terms.join(" ")
    }
}

/// Gram matrix of `constraints` at `point`; fails when it is singular.
pub fn gram_matrix(constraints: &[Constraint], point: &ChartPoint, geom: &PointGeometry) -> Result<GramMatrix> {
    let gradients: Vec<RealVector> = constraints.iter().map(|c| c.gradient(point)).collect();
    let gram = GramMatrix::assemble(&gradients, geom);
    require_invertible(gram, constraints)
}

pub(crate) fn require_invertible(gram: GramMatrix, constraints: &[Constraint]) -> Result<GramMatrix> {
    if gram.is_invertible() {
        return Ok(gram);
    }
    let names: Vec<&str> = constraints.iter().map(|c| c.name()).collect();
    Err(Error::SingularGram {
        condition: gram.condition_number,
        combination: gram.null_combination(&names),
    })
}

/// Symmetrised covariance matrix
/// `(<A_i A_j> + <A_j A_i>)/2 - <A_i><A_j>` in the normalised state.
pub fn covariance_matrix(observables: &[ComplexMatrix], state: &StateVector) -> Result<RealMatrix> {
    for op in observables {
        check_hermitian(op)?;
        if op.nrows() != state.dim() {
            return Err(Error::DimensionMismatch { expected: state.dim(), found: op.nrows() });
        }
    }
    let psi = state.normalized();
    let psi = psi.amplitudes();
    let applied: Vec<_> = observables.iter().map(|op| op * psi).collect();
    let means: Vec<f64> = applied.iter().map(|a| psi.dotc(a).re).collect();
    let n = observables.len();
    let mut cov = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            // <A_i A_j> = <A_i psi | A_j psi>; the symmetrised part is its real part.
            let second = applied[i].dotc(&applied[j]).re;
            let entry = second - means[i] * means[j];
            cov[(i, j)] = entry;
            cov[(j, i)] = entry;
        }
    }
    Ok(cov)
}

/// Max-entry difference between the metric-side Gram matrix and the
/// Hilbert-space covariance matrix for observable constraints.
pub fn gram_covariance_check(constraints: &[Constraint], point: &ChartPoint, geom: &PointGeometry) -> Result<f64> {
    let mut ops = Vec::with_capacity(constraints.len());
    for c in constraints {
        match c.operator() {
            Some(op) => ops.push(op.clone()),
            None => {
                return Err(Error::Domain(format!(
                    "constraint {} is algebraic; the covariance identity needs observables",
                    c.name()
                )))
            }
        }
    }
    let gradients: Vec<RealVector> = constraints.iter().map(|c| c.gradient(point)).collect();
    let gram = GramMatrix::assemble(&gradients, geom);
    let cov = covariance_matrix(&ops, &embed(point))?;
    Ok(max_abs(&(gram.m - cov)))
}

/// Determinant of a two-constraint Gram matrix written as
/// `(1 - rho^2) var(A) var(B)`, together with the correlation `rho`.
pub fn two_constraint_determinant(gram: &GramMatrix) -> Result<(f64, f64)> {
    if gram.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: gram.len() });
    }
    let var_a = gram.m[(0, 0)];
    let var_b = gram.m[(1, 1)];
    let cov = gram.m[(0, 1)];
    if var_a <= 0.0 {
        return Err(Error::EigenstateDegenerate(0));
    }
    if var_b <= 0.0 {
        return Err(Error::EigenstateDegenerate(1));
    }
    let rho = (cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0);
    Ok(((1.0 - rho * rho) * var_a * var_b, rho))
}

/// Geometry, constraint gradients and Gram matrix at one point: the shared
/// ingredients of the projected flow and the equivalence diagnostics.
#[derive(Debug, Clone)]
pub struct ConstraintFrame {
    pub geometry: PointGeometry,
    pub gradients: Vec<RealVector>,
    pub gram: GramMatrix,
}

impl ConstraintFrame {
    /// Fails with a singular-Gram error unless `M^ij` is invertible.
    pub fn new(constraints: &[Constraint], point: &ChartPoint) -> Result<Self> {
        let geometry = crate::geometry::geometry_at(point)?;
        let gradients: Vec<RealVector> = constraints.iter().map(|c| c.gradient(point)).collect();
        let gram = require_invertible(GramMatrix::assemble(&gradients, &geometry), constraints)?;
        Ok(Self { geometry, gradients, gram })
    }

    pub fn m_inv(&self) -> &RealMatrix {
        self.gram.m_inv.as_ref().expect("frame is only built from invertible Gram matrices")
    }

    /// `g^ab d_b Phi^i` for every constraint.
    pub fn normals(&self) -> Vec<RealVector> {
        self.gradients.iter().map(|v| &self.geometry.g_inv * v).collect()
    }
}
