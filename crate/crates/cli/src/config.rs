//! Run configuration: a single JSON document plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use metric_constraints::constraints::Constraint;
use metric_constraints::linalg::{ComplexMatrix, RealVector};
use metric_constraints::systems::{from_angular, AngularPoint};
use metric_constraints::{diagonal_system, single_spin_conserved_sx, two_qubit_product_system, ChartPoint, SystemDefinition};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Energies used for the two-spin system when none are given.
pub const DEFAULT_PRODUCT_ENERGIES: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub initial_point: Option<PointConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Explicit points for `check`.
    #[serde(default)]
    pub points: Vec<PointConfig>,
    /// Number of seeded points for `check` (when `points` is empty) and
    /// `validate`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_true")]
    pub projection: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    50
}

fn default_t_end() -> f64 {
    10.0
}

fn default_dt() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `two-qubit-product`, `spin-half-sx` or `diagonal`.
    pub name: String,
    #[serde(default)]
    pub energies: Option<Vec<f64>>,
    /// Only for `diagonal`.
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintConfig {
    /// Conserve `<A>` for the Hermitian matrix `re + i im` (row-major rows).
    Observable {
        #[serde(default)]
        name: Option<String>,
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Option<Vec<Vec<f64>>>,
    },
    /// `p_index - level = 0`, with `index` counted from 1.
    Action {
        index: usize,
        #[serde(default)]
        level: f64,
    },
    /// `coefficients . (q, p) + offset = 0`.
    Linear {
        coefficients: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointConfig {
    Chart { q: Vec<f64>, p: Vec<f64> },
    Angular { theta: f64, phi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinates {
    Angular,
    Chart,
}

/// Inclusive, evenly spaced axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + step * i as f64).collect()
    }

    fn check(&self, label: &str) -> Result<(), CliError> {
        if self.count == 0 || !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return Err(CliError::Config(format!("grid axis {label} needs finite min <= max and count >= 1")));
        }
        Ok(())
    }
}

/// A two-dimensional grid: `theta`/`phi` for angular coordinates, `q`/`p`
/// for chart coordinates. Rows run over the first axis, columns over the
/// second.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub coordinates: Coordinates,
    #[serde(default)]
    pub theta: Option<Axis>,
    #[serde(default)]
    pub phi: Option<Axis>,
    #[serde(default)]
    pub q: Option<Axis>,
    #[serde(default)]
    pub p: Option<Axis>,
}

impl GridConfig {
    /// The two axes in row-major order.
    pub fn axes(&self) -> Result<(Axis, Axis), CliError> {
        let (a, b, names) = match self.coordinates {
            Coordinates::Angular => (self.theta, self.phi, ("theta", "phi")),
            Coordinates::Chart => (self.q, self.p, ("q", "p")),
        };
        let stray = match self.coordinates {
            Coordinates::Angular => self.q.is_some() || self.p.is_some(),
            Coordinates::Chart => self.theta.is_some() || self.phi.is_some(),
        };
        if stray {
            return Err(CliError::Config("grid mixes angular and chart axes".into()));
        }
        let a = a.ok_or_else(|| CliError::Config(format!("grid needs a `{}` axis", names.0)))?;
        let b = b.ok_or_else(|| CliError::Config(format!("grid needs a `{}` axis", names.1)))?;
        a.check(names.0)?;
        b.check(names.1)?;
        Ok((a, b))
    }

    /// Every grid node as an interior chart point, row-major.
    pub fn points(&self) -> Result<Vec<(f64, f64, ChartPoint)>, CliError> {
        let (a, b) = self.axes()?;
        let mut out = Vec::with_capacity(a.count * b.count);
        for &u in &a.values() {
            for &v in &b.values() {
                let point = match self.coordinates {
                    Coordinates::Angular => AngularPoint::new(u, v).and_then(|x| from_angular(&x)),
                    Coordinates::Chart => ChartPoint::new(vec![u], vec![v]),
                }
                .map_err(|e| CliError::Config(format!("grid node ({u}, {v}) is outside the chart: {e}")))?;
                out.push((u, v, point));
            }
        }
        Ok(out)
    }
}

/// Command-line overrides of configuration fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub no_projection: bool,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.apply(overrides);
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(t) = overrides.t_end {
            self.t_end = t;
        }
        if let Some(dt) = overrides.dt {
            self.dt = dt;
        }
        if let Some(out) = &overrides.output {
            self.output = Some(out.clone());
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if overrides.no_projection {
            self.projection = false;
        }
    }

    pub fn check_times(&self) -> Result<(), CliError> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(CliError::Config(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(CliError::Config(format!("t_end must be non-negative and finite, got {}", self.t_end)));
        }
        Ok(())
    }

    pub fn check_samples(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        Ok(())
    }
}

impl PointConfig {
    pub fn to_chart(&self, system: &SystemDefinition) -> Result<ChartPoint, CliError> {
        let point = match self {
            PointConfig::Chart { q, p } => ChartPoint::new(q.clone(), p.clone()),
            PointConfig::Angular { theta, phi } => {
                if system.n() != 2 {
                    return Err(CliError::Config("angular points need a two-level system".into()));
                }
                AngularPoint::new(*theta, *phi).and_then(|a| from_angular(&a))
            }
        }
        .map_err(|e| CliError::Config(format!("invalid point: {e}")))?;
        system.check_point(&point).map_err(|e| CliError::Config(format!("invalid point: {e}")))?;
        Ok(point)
    }
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{what} must be {n}x{n}")));
    }
    Ok(rows.iter().flatten().copied().collect())
}

fn build_constraint(spec: &ConstraintConfig, n: usize, k: usize) -> Result<Constraint, CliError> {
    let dim = 2 * (n - 1);
    match spec {
        ConstraintConfig::Observable { name, re, im } => {
            let re = matrix(re, n, "observable real part")?;
            let im = match im {
                Some(im) => matrix(im, n, "observable imaginary part")?,
                None => vec![0.0; n * n],
            };
            let op = ComplexMatrix::from_row_iterator(n, n, re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)));
            let name = name.clone().unwrap_or_else(|| format!("A{}", k + 1));
            Constraint::observable(name, op).map_err(|e| CliError::Config(format!("constraint {}: {e}", k + 1)))
        }
        ConstraintConfig::Action { index, level } => {
            if *index == 0 || *index >= n {
                return Err(CliError::Config(format!("action index {index} must lie in 1..={}", n - 1)));
            }
            let (i, level) = (*index - 1, *level);
            Ok(Constraint::algebraic(format!("p{index}"), move |x| x.p()[i] - level).with_gradient(move |x| {
                let mut v = RealVector::zeros(x.dim());
                v[x.pairs() + i] = 1.0;
                v
            }))
        }
        ConstraintConfig::Linear { coefficients, offset } => {
            if coefficients.len() != dim {
                return Err(CliError::Config(format!(
                    "linear constraint needs {dim} coefficients, got {}",
                    coefficients.len()
                )));
            }
            let c = RealVector::from_column_slice(coefficients);
            let gradient = c.clone();
            let offset = *offset;
            Ok(Constraint::algebraic(format!("linear{}", k + 1), move |x| c.dot(&x.coords()) + offset)
                .with_gradient(move |_| gradient.clone()))
        }
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemDefinition, CliError> {
        let extra_constraints = || {
            if self.constraints.is_empty() {
                Ok(())
            } else {
                Err(CliError::Config(format!("system `{}` has fixed constraints", self.name)))
            }
        };
        match self.name.as_str() {
            "two-qubit-product" => {
                extra_constraints()?;
                let e = self.energies.clone().unwrap_or(DEFAULT_PRODUCT_ENERGIES.to_vec());
                let e: [f64; 4] = e
                    .try_into()
                    .map_err(|_| CliError::Config("two-qubit-product needs exactly four energies".into()))?;
                if e.iter().any(|x| !x.is_finite()) {
                    return Err(CliError::Config("energies must be finite".into()));
                }
                Ok(two_qubit_product_system(e))
            }
            "spin-half-sx" => {
                extra_constraints()?;
                if self.energies.is_some() {
                    return Err(CliError::Config("spin-half-sx has fixed energies".into()));
                }
                Ok(single_spin_conserved_sx())
            }
            "diagonal" => {
                let energies = self
                    .energies
                    .clone()
                    .ok_or_else(|| CliError::Config("diagonal system needs `energies`".into()))?;
                let n = energies.len();
                if n < 2 {
                    return Err(CliError::Config("diagonal system needs at least two energies".into()));
                }
                let constraints = self
                    .constraints
                    .iter()
                    .enumerate()
                    .map(|(k, c)| build_constraint(c, n, k))
                    .collect::<Result<Vec<_>, _>>()?;
                diagonal_system(energies, constraints).map_err(|e| CliError::Config(e.to_string()))
            }
            other => Err(CliError::Config(format!(
                "unknown system `{other}` (expected two-qubit-product, spin-half-sx or diagonal)"
            ))),
        }
    }
}
