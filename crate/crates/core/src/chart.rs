//! Action-angle chart on projective Hilbert space.
//!
//! A ray of an `n`-dimensional Hilbert space is labelled by `n - 1` angles
//! `q` and `n - 1` actions `p`. The representative vector has components
//! `sqrt(p_k) * exp(-i q_k)` for `k < n` and a real positive last component
//! `sqrt(1 - sum p)`. Coordinates are always ordered `(q_1..q_{n-1},
//! p_1..p_{n-1})`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, RealVector};

/// Minimum allowed value of every action and of the residual amplitude.
pub const BOUNDARY_GUARD: f64 = 1e-9;

/// Real coordinates `(q, p)` of a pure state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl ChartPoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let point = Self::new_unchecked(q, p)?;
        point.check_interior()?;
        Ok(point)
    }

    /// Builds a point without the interior test. Lengths and finiteness
    /// are still checked.
    pub(crate) fn new_unchecked(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        if q.is_empty() {
            return Err(Error::Domain("chart point needs at least one (q, p) pair".into()));
        }
        if q.iter().chain(p.iter()).any(|x| !x.is_finite()) {
            return Err(Error::OutOfChart("non-finite coordinate".into()));
        }
        Ok(Self { q, p })
    }

    /// From a flat coordinate slice `(q.., p..)`.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        let point = Self::from_coords_unchecked(coords)?;
        point.check_interior()?;
        Ok(point)
    }

    pub(crate) fn from_coords_unchecked(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "coordinate count {} is odd",
                coords.len()
            )));
        }
        let k = coords.len() / 2;
        Self::new_unchecked(coords[..k].to_vec(), coords[k..].to_vec())
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Number of angle (equivalently action) coordinates, `n - 1`.
    pub fn pairs(&self) -> usize {
        self.q.len()
    }

    /// Real dimension of the chart, `2n - 2`.
    pub fn dim(&self) -> usize {
        2 * self.q.len()
    }

    /// Hilbert-space dimension `n`.
    pub fn hilbert_dim(&self) -> usize {
        self.q.len() + 1
    }

    /// Squared modulus of the last amplitude, `1 - sum p`.
    pub fn residual(&self) -> f64 {
        1.0 - self.p.iter().sum::<f64>()
    }

    /// Distance to the chart boundary: `min(p_k, 1 - sum p)`.
    pub fn boundary_distance(&self) -> f64 {
        self.p.iter().cloned().fold(self.residual(), f64::min)
    }

    pub fn is_interior(&self) -> bool {
        self.boundary_distance() >= BOUNDARY_GUARD
    }

    fn check_interior(&self) -> Result<()> {
        let d = self.boundary_distance();
        if d < BOUNDARY_GUARD {
            return Err(Error::OutOfChart(format!(
                "min(p, 1 - sum p) = {d:.3e} is below the guard {BOUNDARY_GUARD:e}"
            )));
        }
        Ok(())
    }

    pub fn coords(&self) -> RealVector {
        RealVector::from_iterator(self.dim(), self.q.iter().chain(self.p.iter()).cloned())
    }

    /// Same point with every angle reduced to `[0, 2pi)`.
    pub fn wrapped(&self) -> ChartPoint {
        ChartPoint {
            q: self.q.iter().map(|q| q.rem_euclid(TAU)).collect(),
            p: self.p.clone(),
        }
    }
}

/// Complex amplitudes representing a ray. Never the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(ComplexVector);

impl StateVector {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.iter().all(|a| a.norm_sqr() == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(Self(amplitudes))
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(ComplexVector::from_column_slice(amplitudes))
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn normalized(&self) -> StateVector {
        let n = self.norm_sqr().sqrt();
        StateVector(self.0.map(|a| a / n))
    }

    /// Chart coordinates of this ray. Fails when the last amplitude
    /// vanishes or the ray lies outside the chart guard.
    pub fn to_chart(&self) -> Result<ChartPoint> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::Domain("state dimension must be at least 2".into()));
        }
        let norm = self.norm_sqr();
        let last = self.0[n - 1];
        if last.norm_sqr() == 0.0 {
            return Err(Error::OutOfChart("last amplitude vanishes".into()));
        }
        let mut q = Vec::with_capacity(n - 1);
        let mut p = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            let a = self.0[k];
            p.push(a.norm_sqr() / norm);
            q.push((-(a / last).arg()).rem_euclid(TAU));
        }
        ChartPoint::new(q, p)
    }
}

/// Representative vector of a chart point (unit norm).
pub fn embed(point: &ChartPoint) -> StateVector {
    StateVector(embed_raw(point))
}

pub(crate) fn embed_raw(point: &ChartPoint) -> ComplexVector {
    let k = point.pairs();
    let mut psi = ComplexVector::zeros(k + 1);
    for i in 0..k {
        psi[i] = Complex64::from_polar(point.p[i].sqrt(), -point.q[i]);
    }
    psi[k] = Complex64::new(point.residual().sqrt(), 0.0);
    psi
}

/// Analytic partial derivatives of the embedding, one vector per chart
/// coordinate in `(q.., p..)` order.
pub fn embedding_jacobian(point: &ChartPoint) -> Vec<ComplexVector> {
    let k = point.pairs();
    let n = k + 1;
    let psi = embed_raw(point);
    let last = point.residual().sqrt();
    let mut out = Vec::with_capacity(2 * k);
    for i in 0..k {
        let mut d = ComplexVector::zeros(n);
        d[i] = psi[i] * Complex64::new(0.0, -1.0);
        out.push(d);
    }
    for i in 0..k {
        let mut d = ComplexVector::zeros(n);
        d[i] = psi[i] / (2.0 * point.p[i]);
        d[k] = Complex64::new(-0.5 / last, 0.0);
        out.push(d);
    }
    out
}

/// Central-difference cross-check of [`embedding_jacobian`].
pub fn embedding_jacobian_fd(point: &ChartPoint, step: f64) -> Result<Vec<ComplexVector>> {
    let x = point.coords();
    let mut out = Vec::with_capacity(x.len());
    for a in 0..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[a] += step;
        minus[a] -= step;
        let fp = ChartPoint::from_coords(plus.as_slice())?;
        let fm = ChartPoint::from_coords(minus.as_slice())?;
        out.push((embed_raw(&fp) - embed_raw(&fm)) / Complex64::new(2.0 * step, 0.0));
    }
    Ok(out)
}
