//! Kähler structures of projective Hilbert space evaluated in the
//! action-angle chart.
//!
//! The metric and the Kähler form are obtained together by pulling back the
//! Hermitian form
//!
//! ```text
//! h_ab = <d_a psi|d_b psi>/<psi|psi> - <d_a psi|psi><psi|d_b psi>/<psi|psi>^2
//! ```
//!
//! through the embedding: `g = 4 Re h` and `Omega = 4 Im h`. The symplectic
//! form is `omega = Omega / 2`, which is the canonical block matrix in this
//! chart, and the complex structure is `J = g^-1 Omega` (so that
//! `Omega_ab = g_ac J^c_b`). Matrices store the upper index as the row.

use num_complex::Complex64;

use crate::chart::{embed_raw, embedding_jacobian, ChartPoint, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{
    canonical_symplectic, invert_with_condition, max_abs, ComplexVector, RealMatrix, RealVector,
};

/// Metric inversions above this condition number are treated as degenerate.
pub const GEOMETRY_CONDITION_LIMIT: f64 = 1e14;

/// Every tensor needed by the flow, evaluated at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    /// `g_ab`
    pub g: RealMatrix,
    /// `g^ab`
    pub g_inv: RealMatrix,
    /// `omega_ab = Omega_ab / 2`
    pub omega: RealMatrix,
    /// `omega^ab`, with `omega^ac omega_bc = delta^a_b`
    pub omega_inv: RealMatrix,
    /// Kähler form `Omega_ab`
    pub big_omega: RealMatrix,
    /// `J^a_b`
    pub j: RealMatrix,
    /// Condition number of `g`.
    pub condition_number: f64,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `Omega^ab = g^ac g^db Omega_cd`.
    pub fn big_omega_raised(&self) -> RealMatrix {
        &self.g_inv * &self.big_omega * &self.g_inv
    }

    /// Residuals of the algebraic Kähler compatibility conditions.
    pub fn compatibility(&self) -> Compatibility {
        let n = self.dim();
        let id = RealMatrix::identity(n, n);
        let j = &self.j;
        let jt = j.transpose();
        Compatibility {
            j_squared: max_abs(&(j * j + &id)),
            hermitian_metric: max_abs(&(&jt * &self.g * j - &self.g)),
            kahler_form: max_abs(&(&self.g * j - &self.big_omega)),
            form_inverse: max_abs(&(self.big_omega_raised() * self.big_omega.transpose() - &id)),
            form_antisymmetry: max_abs(&(&self.omega + self.omega.transpose())),
            hermitian_form: max_abs(&(&jt * &self.big_omega * j - &self.big_omega)),
            symplectic_inverse: max_abs(&(&self.omega_inv * self.omega.transpose() - &id)),
            canonical_form: max_abs(&(&self.omega - canonical_symplectic(n))),
        }
    }
}

/// Max-entry residuals of the compatibility identities. All vanish
/// analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compatibility {
    /// `J J + I`
    pub j_squared: f64,
    /// `J^T g J - g`
    pub hermitian_metric: f64,
    /// `g J - Omega`
    pub kahler_form: f64,
    /// `Omega^ac Omega_bc - delta`
    pub form_inverse: f64,
    /// `omega + omega^T`
    pub form_antisymmetry: f64,
    /// `J^T Omega J - Omega`
    pub hermitian_form: f64,
    /// `omega^ac omega_bc - delta`
    pub symplectic_inverse: f64,
    /// `omega` minus the canonical block matrix
    pub canonical_form: f64,
}

impl Compatibility {
    pub fn max(&self) -> f64 {
        [
            self.j_squared,
            self.hermitian_metric,
            self.kahler_form,
            self.form_inverse,
            self.form_antisymmetry,
            self.hermitian_form,
            self.symplectic_inverse,
            self.canonical_form,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Pull back the Fubini–Study Hermitian form. Returns `(g, Omega)`.
fn pulled_back_forms(psi: &ComplexVector, d_psi: &[ComplexVector]) -> (RealMatrix, RealMatrix) {
    let dim = d_psi.len();
    let norm = psi.dotc(psi).re;
    let overlaps: Vec<Complex64> = d_psi.iter().map(|d| d.dotc(psi)).collect();
    let mut g = RealMatrix::zeros(dim, dim);
    let mut big_omega = RealMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let h = d_psi[a].dotc(&d_psi[b]) / norm
                - overlaps[a] * overlaps[b].conj() / (norm * norm);
            g[(a, b)] = 4.0 * h.re;
            big_omega[(a, b)] = 4.0 * h.im;
        }
    }
    // Enforce the exact (anti)symmetry the Hermitian form guarantees.
    let g = (&g + g.transpose()) * 0.5;
    let big_omega = (&big_omega - big_omega.transpose()) * 0.5;
    (g, big_omega)
}

/// Kähler structures at `point`.
pub fn geometry_at(point: &ChartPoint) -> Result<PointGeometry> {
    if !point.is_interior() {
        return Err(Error::OutOfChart(format!(
            "boundary distance {:.3e}",
            point.boundary_distance()
        )));
    }
    let psi = embed_raw(point);
    let d_psi = embedding_jacobian(point);
    let (g, big_omega) = pulled_back_forms(&psi, &d_psi);
    let (g_inv, condition_number) = invert_with_condition(&g);
    let g_inv = match g_inv {
        Some(inv) if condition_number <= GEOMETRY_CONDITION_LIMIT => inv,
        _ => {
            return Err(Error::DegenerateGeometry(format!(
                "metric condition number {condition_number:.3e}"
            )))
        }
    };
    let g_inv = (&g_inv + g_inv.transpose()) * 0.5;
    let omega = &big_omega * 0.5;
    let omega_inv = &g_inv * &big_omega * &g_inv * 2.0;
    let j = &g_inv * &big_omega;
    Ok(PointGeometry { g, g_inv, omega, omega_inv, big_omega, j, condition_number })
}

/// Fubini–Study angle `theta` in `[0, pi]` with
/// `(1 + cos theta) / 2 = |<a|b>|^2 / (<a|a><b|b>)`.
pub fn fubini_study_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let overlap = a.inner(b).norm_sqr() / (a.norm_sqr() * b.norm_sqr());
    Ok((2.0 * overlap - 1.0).clamp(-1.0, 1.0).acos())
}

/// Nijenhuis tensor with coordinate derivatives of `J` taken by central
/// differences. Entry `[c][(a, b)]` holds `N^c_ab`.
pub fn nijenhuis_tensor(point: &ChartPoint, step: f64) -> Result<Vec<RealMatrix>> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Domain(format!("finite-difference step {step} must be positive")));
    }
    let x = point.coords();
    let dim = x.len();
    let j = geometry_at(point)?.j;
    let mut dj = Vec::with_capacity(dim);
    for e in 0..dim {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[e] += step;
        minus[e] -= step;
        let stencil = |coords: &RealVector| -> Result<RealMatrix> {
            let y = ChartPoint::from_coords(coords.as_slice()).map_err(|_| {
                Error::OutOfChart(format!("finite-difference stencil leaves the chart along axis {e}"))
            })?;
            Ok(geometry_at(&y)?.j)
        };
        dj.push((stencil(&plus)? - stencil(&minus)?) / (2.0 * step));
    }

    // X^c_ab = 1/2 (J^c_d d_a J^d_b - J^d_a d_d J^c_b); N^c_ab = X^c_ab - X^c_ba.
    let mut x_tensor = vec![RealMatrix::zeros(dim, dim); dim];
    for a in 0..dim {
        let j_da = &j * &dj[a];
        for c in 0..dim {
            for b in 0..dim {
                let mut second = 0.0;
                for d in 0..dim {
                    second += j[(d, a)] * dj[d][(c, b)];
                }
                x_tensor[c][(a, b)] = 0.5 * (j_da[(c, b)] - second);
            }
        }
    }
    Ok(x_tensor.iter().map(|xc| xc - xc.transpose()).collect())
}

/// Max-entry norm of [`nijenhuis_tensor`].
pub fn nijenhuis_residual(point: &ChartPoint, step: f64) -> Result<f64> {
    Ok(nijenhuis_tensor(point, step)?
        .iter()
        .map(max_abs)
        .fold(0.0, f64::max))
}

/// Split a real covector into its positive and negative type parts,
/// `(v - i J^T v)/2` and `(v + i J^T v)/2`.
pub fn type_decompose(v: &RealVector, geom: &PointGeometry) -> Result<(ComplexVector, ComplexVector)> {
    if v.len() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), found: v.len() });
    }
    let jv = geom.j.transpose() * v;
    let half_i = Complex64::new(0.0, 0.5);
    let positive = ComplexVector::from_fn(v.len(), |k, _| 0.5 * v[k] - half_i * jv[k]);
    let negative = ComplexVector::from_fn(v.len(), |k, _| 0.5 * v[k] + half_i * jv[k]);
    Ok((positive, negative))
}
