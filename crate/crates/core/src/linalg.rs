//! Small dense helpers shared by the tensor code. All matrices here are at
//! most a few dozen entries wide, so everything is direct.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type RealMatrix = DMatrix<f64>;
pub type RealVector = DVector<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Largest absolute entry.
pub fn max_abs(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_vec(v: &RealVector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_complex(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// 2-norm condition number from the singular values. Infinite when the
/// smallest singular value is zero.
pub fn condition_number(m: &RealMatrix) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse by LU together with the condition number. `None` if the LU
/// factorisation is singular.
pub fn invert_with_condition(m: &RealMatrix) -> (Option<RealMatrix>, f64) {
    let cond = condition_number(m);
    let inv = m.clone().lu().try_inverse();
    (inv.filter(|inv| inv.iter().all(|x| x.is_finite())), cond)
}

pub fn complexify(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn complexify_vec(v: &RealVector) -> ComplexVector {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Block matrix `[[0, I], [-I, 0]]` of size `2k`.
pub fn canonical_symplectic(dim: usize) -> RealMatrix {
    let k = dim / 2;
    let mut m = RealMatrix::zeros(dim, dim);
    for i in 0..k {
        m[(i, k + i)] = 1.0;
        m[(k + i, i)] = -1.0;
    }
    m
}
