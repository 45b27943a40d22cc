//! Diagnostics deciding whether the metric-projected flow is a Hamiltonian
//! flow for a modified symplectic structure.
//!
//! With `mu_bc = M_ij d_b Phi^i d_c Phi^j` the projected field is
//! `omega~^ab d_b H` where `omega~ = omega^ - g^-1 mu omega^`. That matrix is
//! antisymmetric, and hence a Poisson structure candidate, exactly when `mu`
//! is invariant under the complex structure: `J^T mu J = mu`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::ChartPoint;
use crate::constraints::{Constraint, ConstraintFrame};
use crate::error::{Error, Result};
use crate::geometry::PointGeometry;
use crate::linalg::{complexify, max_abs, max_abs_complex, max_abs_vec, ComplexMatrix, RealMatrix};
use crate::systems::SystemDefinition;

/// Residuals below this count as exact zeros.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;

/// The symmetric tensor `mu_bc`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuTensor {
    pub mu: RealMatrix,
}

/// `tau_ab = d_a A d_b B - d_a B d_b A` for a pair of constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct TauTensor {
    pub tau: RealMatrix,
}

/// Which type blocks of `tau` survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSign {
    /// Only the mixed blocks are nonzero, as for the real and imaginary
    /// parts of a holomorphic constraint.
    Plus,
    /// Only the pure blocks are nonzero.
    Minus,
    Neither,
}

/// Max-entry norms of the type blocks of `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauBlocks {
    /// `tau` with both indices of positive type.
    pub plus_plus: f64,
    pub minus_minus: f64,
    pub plus_minus: f64,
    pub minus_plus: f64,
    /// `max |tau_ab|`
    pub scale: f64,
}

impl TauBlocks {
    pub fn pure(&self) -> f64 {
        self.plus_plus.max(self.minus_minus)
    }

    pub fn mixed(&self) -> f64 {
        self.plus_minus.max(self.minus_plus)
    }

    /// A vanishing `tau` has both structures and is reported as `Plus`.
    pub fn sign(&self) -> TauSign {
        if self.scale == 0.0 || self.pure() < EQUIVALENCE_TOLERANCE * self.scale {
            TauSign::Plus
        } else if self.mixed() < EQUIVALENCE_TOLERANCE * self.scale {
            TauSign::Minus
        } else {
            TauSign::Neither
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
}

/// Flat per-point summary of the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub j_invariance_residual: f64,
    pub right_annihilation_residual: f64,
    pub left_annihilation_residual: f64,
    /// `max |omega~ + omega~^T|`
    pub antisymmetry_residual: f64,
    /// Present only for exactly two constraints.
    pub tau_sign: Option<TauSign>,
    pub verdict: Verdict,
}

fn mu_in(frame: &ConstraintFrame) -> RealMatrix {
    let dim = frame.geometry.dim();
    let m_inv = frame.m_inv();
    let mut mu = RealMatrix::zeros(dim, dim);
    for (i, gi) in frame.gradients.iter().enumerate() {
        for (j, gj) in frame.gradients.iter().enumerate() {
            mu += gi * gj.transpose() * m_inv[(i, j)];
        }
    }
    (&mu + mu.transpose()) * 0.5
}

fn omega_tilde_in(frame: &ConstraintFrame, mu: &RealMatrix) -> RealMatrix {
    let geom = &frame.geometry;
    &geom.omega_inv - &geom.g_inv * mu * &geom.omega_inv
}

fn j_residual_in(geom: &PointGeometry, mu: &RealMatrix) -> f64 {
    max_abs(&(geom.j.transpose() * mu * &geom.j - mu))
}

fn annihilation_in(frame: &ConstraintFrame, omega_tilde: &RealMatrix) -> (f64, f64) {
    let transposed = omega_tilde.transpose();
    frame.gradients.iter().fold((0.0, 0.0), |(right, left), v| {
        (
            f64::max(right, max_abs_vec(&(&transposed * v))),
            f64::max(left, max_abs_vec(&(omega_tilde * v))),
        )
    })
}

/// `mu_bc`. Fails on a singular Gram matrix.
pub fn mu_tensor(constraints: &[Constraint], point: &ChartPoint) -> Result<MuTensor> {
    let frame = ConstraintFrame::new(constraints, point)?;
    Ok(MuTensor { mu: mu_in(&frame) })
}

/// `omega~^ab = omega^ab - g^ad omega^cb mu_dc`.
pub fn modified_symplectic(constraints: &[Constraint], point: &ChartPoint) -> Result<RealMatrix> {
    let frame = ConstraintFrame::new(constraints, point)?;
    let mu = mu_in(&frame);
    Ok(omega_tilde_in(&frame, &mu))
}

/// `max |J^c_a J^d_b mu_cd - mu_ab|`.
pub fn j_invariance_residual(constraints: &[Constraint], point: &ChartPoint) -> Result<f64> {
    let frame = ConstraintFrame::new(constraints, point)?;
    Ok(j_residual_in(&frame.geometry, &mu_in(&frame)))
}

/// `|g^ab (J^T dPhi)_a dPhi_b|`: the rotated gradient is always orthogonal
/// to the gradient, which is why one constraint can never be J-invariant.
pub fn single_constraint_orthogonality(constraint: &Constraint, point: &ChartPoint, geom: &PointGeometry) -> f64 {
    let v = constraint.gradient(point);
    (geom.j.transpose() * &v).dot(&(&geom.g_inv * &v)).abs()
}

fn type_projectors(geom: &PointGeometry) -> (ComplexMatrix, ComplexMatrix) {
    let dim = geom.dim();
    let id = ComplexMatrix::identity(dim, dim);
    let ijt = complexify(&geom.j.transpose()) * Complex64::new(0.0, 1.0);
    ((&id - &ijt) * Complex64::new(0.5, 0.0), (&id + &ijt) * Complex64::new(0.5, 0.0))
}

/// Build `tau` for exactly two constraints and split it into type blocks
/// with the projectors `(I -/+ i J^T)/2` on both indices.
pub fn tau_analysis(
    constraints: &[Constraint],
    point: &ChartPoint,
    geom: &PointGeometry,
) -> Result<(TauTensor, TauSign, TauBlocks)> {
    if constraints.len() != 2 {
        return Err(Error::Domain(format!(
            "tau analysis needs exactly two constraints, got {}",
            constraints.len()
        )));
    }
    let a = constraints[0].gradient(point);
    let b = constraints[1].gradient(point);
    if a.len() != geom.dim() || b.len() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), found: a.len() });
    }
    let tau = &a * b.transpose() - &b * a.transpose();
    let (plus, minus) = type_projectors(geom);
    let t = complexify(&tau);
    let block = |l: &ComplexMatrix, r: &ComplexMatrix| max_abs_complex(&(l * &t * r.transpose()));
    let blocks = TauBlocks {
        plus_plus: block(&plus, &plus),
        minus_minus: block(&minus, &minus),
        plus_minus: block(&plus, &minus),
        minus_plus: block(&minus, &plus),
        scale: max_abs(&tau),
    };
    Ok((TauTensor { tau }, blocks.sign(), blocks))
}

/// `(max_k |omega~^ad d_a Phi^k|, max_k |omega~^ad d_d Phi^k|)`. The first
/// vanishes identically; the second vanishes iff J-invariance holds.
pub fn annihilation_check(constraints: &[Constraint], point: &ChartPoint) -> Result<(f64, f64)> {
    if constraints.is_empty() {
        return Ok((0.0, 0.0));
    }
    let frame = ConstraintFrame::new(constraints, point)?;
    let mu = mu_in(&frame);
    Ok(annihilation_in(&frame, &omega_tilde_in(&frame, &mu)))
}

/// Every diagnostic for the system's constraints at `point`.
pub fn equivalence_report(system: &SystemDefinition, point: &ChartPoint) -> Result<EquivalenceReport> {
    system.check_point(point)?;
    equivalence_report_with(system.constraints(), point)
}

/// Every diagnostic for an explicit constraint list.
pub fn equivalence_report_with(constraints: &[Constraint], point: &ChartPoint) -> Result<EquivalenceReport> {
    let frame = ConstraintFrame::new(constraints, point)?;
    let mu = mu_in(&frame);
    let omega_tilde = omega_tilde_in(&frame, &mu);
    let (right, left) = annihilation_in(&frame, &omega_tilde);
    let j_residual = j_residual_in(&frame.geometry, &mu);
    let tau_sign = if constraints.len() == 2 {
        Some(tau_analysis(constraints, point, &frame.geometry)?.1)
    } else {
        None
    };
    Ok(EquivalenceReport {
        j_invariance_residual: j_residual,
        right_annihilation_residual: right,
        left_annihilation_residual: left,
        antisymmetry_residual: max_abs(&(&omega_tilde + omega_tilde.transpose())),
        tau_sign,
        verdict: if j_residual < EQUIVALENCE_TOLERANCE { Verdict::Equivalent } else { Verdict::NotEquivalent },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::constrained_field;
    use crate::geometry::geometry_at;
    use crate::linalg::RealVector;
    use crate::systems::{
        product_surface_sample, product_trig_constraints, single_spin_conserved_sx, two_qubit_product_system,
    };

    fn p_coordinate(k: usize) -> Constraint {
        Constraint::algebraic(format!("p{}", k + 1), move |x| x.p()[k]).with_gradient(move |x| {
            let mut v = RealVector::zeros(x.dim());
            v[x.pairs() + k] = 1.0;
            v
        })
    }

    #[test]
    fn no_constraints_leave_omega_untouched() {
        let x = ChartPoint::new(vec![0.2, 0.4], vec![0.3, 0.3]).unwrap();
        let geom = geometry_at(&x).unwrap();
        assert_eq!(modified_symplectic(&[], &x).unwrap(), geom.omega_inv);
        assert_eq!(annihilation_check(&[], &x).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn single_constraint_mu_is_rank_one() {
        let sys = single_spin_conserved_sx();
        let x = ChartPoint::new(vec![0.7], vec![0.3]).unwrap();
        let c = &sys.constraints()[0];
        let geom = geometry_at(&x).unwrap();
        let v = c.gradient(&x);
        let m = v.dot(&(&geom.g_inv * &v));
        let expected = &v * v.transpose() / m;
        assert!(max_abs(&(mu_tensor(sys.constraints(), &x).unwrap().mu - expected)) < 1e-12);
        let scaled = [c.scaled(2.0)];
        let diff = mu_tensor(&scaled, &x).unwrap().mu - mu_tensor(sys.constraints(), &x).unwrap().mu;
        assert!(max_abs(&diff) < 1e-12);
    }

    #[test]
    fn product_example_mu_by_hand() {
        let sys = two_qubit_product_system([1.0, 2.0, 3.0, 4.0]);
        let x = ChartPoint::new(vec![0.0; 3], vec![0.25; 3]).unwrap();
        let a = RealVector::from_row_slice(&[1.0, -1.0, -1.0, 0.0, 0.0, 0.0]);
        let b = RealVector::from_row_slice(&[0.0, 0.0, 0.0, 0.0, -0.5, -0.5]);
        let expected = &a * a.transpose() * 0.25 + &b * b.transpose() * 16.0;
        assert!(max_abs(&(mu_tensor(sys.constraints(), &x).unwrap().mu - expected)) < 1e-12);
    }

    #[test]
    fn product_example_is_equivalent() {
        let sys = two_qubit_product_system([0.3, -1.0, 2.0, 0.5]);
        for seed in 0..20 {
            let x = product_surface_sample(seed);
            let report = equivalence_report(&sys, &x).unwrap();
            assert_eq!(report.verdict, Verdict::Equivalent, "{report:?}");
            assert!(report.right_annihilation_residual < 1e-10);
            assert!(report.left_annihilation_residual < EQUIVALENCE_TOLERANCE);
            assert!(report.antisymmetry_residual < EQUIVALENCE_TOLERANCE);
            assert_eq!(report.tau_sign, Some(TauSign::Plus));
        }
    }

    #[test]
    fn spin_example_is_not_equivalent() {
        let sys = single_spin_conserved_sx();
        let x = ChartPoint::new(vec![0.9], vec![0.3]).unwrap();
        let report = equivalence_report(&sys, &x).unwrap();
        assert_eq!(report.verdict, Verdict::NotEquivalent);
        assert!(report.right_annihilation_residual < 1e-10);
        assert!(report.left_annihilation_residual > 0.01);
        assert!(report.antisymmetry_residual > 0.01);
        assert_eq!(report.tau_sign, None);
        let geom = geometry_at(&x).unwrap();
        assert!(single_constraint_orthogonality(&sys.constraints()[0], &x, &geom) < 1e-12);
    }

    #[test]
    fn omega_tilde_reproduces_field() {
        let sys = single_spin_conserved_sx();
        let x = ChartPoint::new(vec![2.0], vec![0.6]).unwrap();
        let w = modified_symplectic(sys.constraints(), &x).unwrap();
        let v = w * sys.hamiltonian().gradient(&x);
        assert!((v - constrained_field(&sys, &x).unwrap()).amax() < 1e-10);
    }

    #[test]
    fn trig_pair_has_holomorphic_tau() {
        let x = product_surface_sample(3);
        let geom = geometry_at(&x).unwrap();
        let (_, sign, blocks) = tau_analysis(&product_trig_constraints(), &x, &geom).unwrap();
        assert_eq!(sign, TauSign::Plus, "{blocks:?}");
    }

    #[test]
    fn degenerate_pair_has_zero_tau() {
        let x = ChartPoint::new(vec![0.1, 0.2, 0.3], vec![0.1, 0.2, 0.3]).unwrap();
        let geom = geometry_at(&x).unwrap();
        let pair = [p_coordinate(0), p_coordinate(0)];
        let (tau, sign, _) = tau_analysis(&pair, &x, &geom).unwrap();
        assert!(tau.tau.iter().all(|t| *t == 0.0));
        assert_eq!(sign, TauSign::Plus);
        assert!(matches!(tau_analysis(&pair[..1], &x, &geom), Err(Error::Domain(_))));
    }

    #[test]
    fn action_pair_blocks_match_brute_force() {
        let x = ChartPoint::new(vec![0.1, 0.2, 0.3], vec![0.1, 0.2, 0.3]).unwrap();
        let geom = geometry_at(&x).unwrap();
        let pair = [p_coordinate(0), p_coordinate(1)];
        let (tau, _, blocks) = tau_analysis(&pair, &x, &geom).unwrap();
        // Entry-by-entry contraction of the projectors.
        let dim = geom.dim();
        let i = Complex64::new(0.0, 1.0);
        let proj = |s: f64, a: usize, c: usize| {
            let delta = if a == c { 1.0 } else { 0.0 };
            0.5 * (Complex64::new(delta, 0.0) - s * i * geom.j[(c, a)])
        };
        let block = |s: f64, r: f64| {
            let mut worst: f64 = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    let mut sum = Complex64::new(0.0, 0.0);
                    for c in 0..dim {
                        for d in 0..dim {
                            sum += proj(s, a, c) * proj(r, b, d) * tau.tau[(c, d)];
                        }
                    }
                    worst = worst.max(sum.norm());
                }
            }
            worst
        };
        assert!((blocks.plus_plus - block(1.0, 1.0)).abs() < 1e-12);
        assert!((blocks.minus_minus - block(-1.0, -1.0)).abs() < 1e-12);
        assert!((blocks.plus_minus - block(1.0, -1.0)).abs() < 1e-12);
        assert!((blocks.minus_plus - block(-1.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn single_action_constraint_is_orthogonal() {
        let x = ChartPoint::new(vec![0.1, 0.2, 0.3], vec![0.1, 0.2, 0.3]).unwrap();
        let geom = geometry_at(&x).unwrap();
        assert!(single_constraint_orthogonality(&p_coordinate(0), &x, &geom) < 1e-12);
        let constant = Constraint::algebraic("one", |_| 1.0).with_gradient(|x| RealVector::zeros(x.dim()));
        assert_eq!(single_constraint_orthogonality(&constant, &x, &geom), 0.0);
    }
}
