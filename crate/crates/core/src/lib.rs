//! Constrained quantum dynamics on projective Hilbert space, with the
//! constraint imposed by projecting the Schrödinger flow orthogonally (in
//! the Fubini–Study metric) onto the constraint surface.
//!
//! ```
//! use metric_constraints::{constrained_field, single_spin_conserved_sx, ChartPoint};
//!
//! let spin = single_spin_conserved_sx();
//! let x = ChartPoint::new(vec![0.0], vec![0.25]).unwrap();
//! let v = constrained_field(&spin, &x).unwrap();
//! assert!((v[0] + 2.0).abs() < 1e-12 && v[1].abs() < 1e-12);
//! ```

pub mod chart;
pub mod constraints;
pub mod dynamics;
pub mod equivalence;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod systems;

pub use chart::{embed, ChartPoint, StateVector};
pub use constraints::{Constraint, ConstraintKind, GramMatrix};
pub use dynamics::{
    constrained_field, exact_unitary_oracle, integrate, multipliers, schrodinger_field, ExitFlag, Flow,
    HamiltonianFunction, IntegrateOptions, SpectrumData, Trajectory, TrajectorySample,
};
pub use equivalence::{equivalence_report, EquivalenceReport, TauSign, Verdict};
pub use error::{Error, Result};
pub use geometry::{geometry_at, PointGeometry};
pub use systems::{
    diagonal_system, single_spin_conserved_sx, two_qubit_product_system, AngularPoint, SystemDefinition,
};
