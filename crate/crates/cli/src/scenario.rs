//! Scenario files: a TOML document naming the pre/post-selection, the
//! observable, the meter, the coupling sweep and optional shot sampling.
//!
//! ```toml
//! name = "spin-y"
//! sweep = [0.1, 0.01, 0.001]
//!
//! [system]
//! kind = "pure_qubit"
//! pre = [0, 0, 1]
//! post = [1, 0, 0]
//!
//! [observable]
//! kind = "axis"
//! axis = [0, 1, 0]
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use weakmeter::meter_sim::MAX_ESTIMATOR_COUPLING;
use weakmeter::particle_meter::{Grid, PacketSpec};
use weakmeter::qops::{BlochVector, ComplexMatrix, C64};
use weakmeter::tol;

/// Axes whose norm is off by at most this much are rescaled silently.
pub const AXIS_NORMALIZATION_TOLERANCE: f64 = 1e-3;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub sweep: Vec<f64>,
    pub system: System,
    pub observable: Observable,
    #[serde(default)]
    pub meter: Meter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<Shots>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum System {
    /// Pure qubit selections given by unit Bloch vectors.
    PureQubit { pre: Vec3, post: Vec3 },
    /// Explicit 2×2 or 4×4 densities; `post` doubles as the post-selection operator.
    Density { pre: MatrixSpec, post: MatrixSpec },
    Werner { lambda_pre: f64, lambda_post: f64 },
    /// Two-qubit product of pure states, qubit `a` first.
    Product { a_pre: Vec3, a_post: Vec3, b_pre: Vec3, b_post: Vec3 },
}

impl System {
    pub fn dim(&self) -> usize {
        match self {
            System::PureQubit { .. } => 2,
            System::Density { pre, .. } => pre.re.len(),
            System::Werner { .. } | System::Product { .. } => 4,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, System::PureQubit { .. } | System::Product { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    /// `n̂·σ` on a single qubit.
    Axis { axis: Vec3 },
    /// `(a·σ)⊗(b·σ)` on two qubits.
    AxisPair { a: Vec3, b: Vec3 },
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
}

/// Real and (optional) imaginary parts of a square matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    /// Builds the matrix; `None` if the entries are not square with dimension 2, 4 or 8.
    pub fn to_matrix(&self) -> Option<ComplexMatrix> {
        matrix_from_parts(&self.re, self.im.as_deref())
    }
}

/// Square matrix of dimension 2, 4 or 8 from row-major parts.
pub fn matrix_from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Option<ComplexMatrix> {
    let dim = re.len();
    if ![2, 4, 8].contains(&dim) || re.iter().any(|row| row.len() != dim) {
        return None;
    }
    if let Some(im) = im {
        if im.len() != dim || im.iter().any(|row| row.len() != dim) {
            return None;
        }
    }
    Some(ComplexMatrix::from_fn(dim, |i, j| {
        C64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

fn default_m() -> Vec3 {
    [1.0, 0.0, 0.0]
}

fn default_n() -> Vec3 {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Meter {
    /// Qubit meter prepared along `m`, coupled through `n·σ`.
    Qubit {
        #[serde(default = "default_m")]
        m: Vec3,
        #[serde(default = "default_n")]
        n: Vec3,
    },
    Particle(ParticleMeter),
}

impl Default for Meter {
    fn default() -> Self {
        Meter::Qubit { m: default_m(), n: default_n() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleMeter {
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub chirp: f64,
    pub mass: f64,
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for ParticleMeter {
    fn default() -> Self {
        let (p, g) = (PacketSpec::default(), Grid::default());
        Self {
            x0: p.x0,
            p0: p.p0,
            sigma: p.sigma,
            chirp: p.chirp,
            mass: p.mass,
            n_points: g.n_points,
            x_min: g.x_min,
            x_max: g.x_max,
        }
    }
}

impl ParticleMeter {
    pub fn packet(&self) -> PacketSpec {
        PacketSpec { x0: self.x0, p0: self.p0, sigma: self.sigma, chirp: self.chirp, mass: self.mass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shots {
    pub n_total: u64,
    #[serde(default)]
    pub seed: u64,
}

/// One validation problem, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<FieldError>),
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    raw.validated()
}

pub fn to_toml(scenario: &Scenario) -> String {
    toml::to_string(scenario).expect("scenario fields are all TOML-representable")
}

struct Validator {
    errors: Vec<FieldError>,
}

impl Validator {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(FieldError { path: path.into(), message: message.into() });
    }

    /// Rescales a nearly-unit axis in place; rejects anything further off.
    fn unit_axis(&mut self, path: &str, v: &mut Vec3) {
        let norm = BlochVector::from_array(*v).norm();
        if !norm.is_finite() || (norm - 1.0).abs() > AXIS_NORMALIZATION_TOLERANCE {
            self.fail(path, format!("not a unit vector (norm {norm}, tolerance {AXIS_NORMALIZATION_TOLERANCE})"));
        } else if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
            v.iter_mut().for_each(|c| *c /= norm);
        }
    }

    fn matrix(&mut self, path: &str, re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Option<ComplexMatrix> {
        let m = matrix_from_parts(re, im);
        if m.is_none() {
            self.fail(path, "entries must form a square matrix of dimension 2, 4 or 8");
        }
        m
    }

    fn density(&mut self, path: &str, spec: &MatrixSpec) -> Option<usize> {
        let m = self.matrix(path, &spec.re, spec.im.as_deref())?;
        if !m.is_density(tol::STRUCTURAL) {
            self.fail(path, "not a density matrix (Hermitian, positive, unit trace)");
        }
        Some(m.dim())
    }

    fn lambda(&mut self, path: &str, lambda: f64) {
        if !(-1.0..=1.0 / 3.0).contains(&lambda) {
            self.fail(path, format!("{lambda} outside the Werner range [-1, 1/3]"));
        }
    }
}

impl Scenario {
    /// Normalizes axes and checks every field, reporting all problems at once.
    pub fn validated(mut self) -> Result<Self, ScenarioError> {
        let mut v = Validator { errors: Vec::new() };
        if self.name.trim().is_empty() {
            v.fail("name", "must not be empty");
        }

        let system_dim = match &mut self.system {
            System::PureQubit { pre, post } => {
                v.unit_axis("system.pre", pre);
                v.unit_axis("system.post", post);
                Some(2)
            }
            System::Density { pre, post } => {
                let a = v.density("system.pre", pre);
                let b = v.density("system.post", post);
                match (a, b) {
                    (Some(a), Some(b)) if a == b && a <= 4 => Some(a),
                    (Some(a), Some(b)) if a != b => {
                        v.fail("system", format!("pre ({a}×{a}) and post ({b}×{b}) dimensions differ"));
                        None
                    }
                    (Some(a), Some(_)) => {
                        v.fail("system", format!("dimension {a} unsupported (one or two qubits)"));
                        None
                    }
                    _ => None,
                }
            }
            System::Werner { lambda_pre, lambda_post } => {
                v.lambda("system.lambda_pre", *lambda_pre);
                v.lambda("system.lambda_post", *lambda_post);
                Some(4)
            }
            System::Product { a_pre, a_post, b_pre, b_post } => {
                v.unit_axis("system.a_pre", a_pre);
                v.unit_axis("system.a_post", a_post);
                v.unit_axis("system.b_pre", b_pre);
                v.unit_axis("system.b_post", b_post);
                Some(4)
            }
        };

        let observable_dim = match &mut self.observable {
            Observable::Axis { axis } => {
                v.unit_axis("observable.axis", axis);
                Some(2)
            }
            Observable::AxisPair { a, b } => {
                v.unit_axis("observable.a", a);
                v.unit_axis("observable.b", b);
                Some(4)
            }
            Observable::Matrix { re, im } => v.matrix("observable", re, im.as_deref()).map(|m| {
                if !m.is_hermitian(tol::STRUCTURAL) {
                    v.fail("observable", "matrix is not Hermitian");
                }
                m.dim()
            }),
        };
        if let (Some(s), Some(o)) = (system_dim, observable_dim) {
            if s != o {
                v.fail("observable", format!("acts on dimension {o} but the system has dimension {s}"));
            }
        }

        let g_limit = match &mut self.meter {
            Meter::Qubit { m, n } => {
                v.unit_axis("meter.m", m);
                v.unit_axis("meter.n", n);
                let dot = BlochVector::from_array(*m).dot(BlochVector::from_array(*n));
                if dot.abs() > tol::STRUCTURAL {
                    v.fail("meter", format!("m and n must be perpendicular (m·n = {dot})"));
                }
                MAX_ESTIMATOR_COUPLING
            }
            Meter::Particle(p) => {
                if !self.system.is_pure() {
                    v.fail("meter", "the particle meter needs a pure system (pure_qubit or product)");
                }
                if self.shots.is_some() {
                    v.fail("shots", "shot sampling is only available with the qubit meter");
                }
                if !(p.sigma > 0.0) {
                    v.fail("meter.sigma", "must be positive");
                }
                if !(p.mass > 0.0) {
                    v.fail("meter.mass", "must be positive");
                }
                if let Err(e) = Grid::new(p.n_points, p.x_min, p.x_max) {
                    v.fail("meter", e.to_string());
                }
                f64::INFINITY
            }
        };

        for (i, &g) in self.sweep.iter().enumerate() {
            if !(g > 0.0 && g <= g_limit) {
                v.fail(format!("sweep[{i}]"), format!("coupling {g} outside (0, {g_limit}]"));
            }
        }
        if let Some(shots) = &self.shots {
            if shots.n_total == 0 {
                v.fail("shots.n_total", "must be positive");
            }
        }

        if v.errors.is_empty() {
            Ok(self)
        } else {
            Err(ScenarioError::Invalid(v.errors))
        }
    }
}
