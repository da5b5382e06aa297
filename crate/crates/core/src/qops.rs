//! Dense complex linear algebra for few-qubit registers.
//!
//! Everything here works on dimensions 2, 4 and 8. Tensor products put the
//! first operand in the most significant position, so in `a ⊗ b` the index
//! of `b` varies fastest. Every module in the crate builds joint
//! system–meter objects as `system ⊗ meter`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn check_dim(dim: usize) -> Result<()> {
    if matches!(dim, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(Error::InvalidDimension(dim))
    }
}

/// Real 3-vector on (or inside) the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const X: Self = Self::new(1.0, 0.0, 0.0);
    pub const Y: Self = Self::new(0.0, 1.0, 0.0);
    pub const Z: Self = Self::new(0.0, 0.0, 1.0);
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    /// Returns `self` if it is a unit vector within `tolerance`.
    pub fn require_unit(self, tolerance: f64) -> Result<Self> {
        let norm = self.norm();
        if (norm - 1.0).abs() > tolerance {
            return Err(Error::NonUnitAxis { norm });
        }
        Ok(self)
    }

    pub fn is_unit(self, tolerance: f64) -> bool {
        (self.norm() - 1.0).abs() <= tolerance
    }

    /// Angle between two non-zero vectors, in `[0, π]`.
    pub fn angle_to(self, other: Self) -> f64 {
        self.cross(other).norm().atan2(self.dot(other))
    }

    /// Some unit vector orthogonal to `self` (which must be non-zero).
    pub fn any_orthogonal(self) -> Self {
        let trial = if self.x.abs() < 0.9 { Self::X } else { Self::Y };
        self.cross(trial)
            .normalized()
            .expect("cross product with a non-parallel axis is non-zero")
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        let d = self - other;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Square complex matrix of dimension 2, 4 or 8.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { inner: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: DMatrix::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { inner: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    /// Builds a matrix from rows, validating squareness and dimension.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner[(row, col)]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { inner: &self.inner * factor }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { inner: self.inner.kronecker(&other.inner) }
    }

    /// `self · v` for a raw amplitude vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim(), "matrix/vector dimension mismatch");
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.inner[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.hermiticity_deviation() <= tolerance
    }

    pub fn is_unitary(&self, tolerance: f64) -> bool {
        let product = &self.adjoint() * self;
        product.max_abs_diff(&Self::identity(self.dim())) <= tolerance
    }

    /// Hermitian, positive semi-definite and unit trace, all within `tolerance`.
    pub fn is_density(&self, tolerance: f64) -> bool {
        self.density_violation(tolerance).is_none()
    }

    fn density_violation(&self, tolerance: f64) -> Option<String> {
        let dev = self.hermiticity_deviation();
        if dev > tolerance {
            return Some(format!("not Hermitian (deviation {dev:.3e})"));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tolerance {
            return Some(format!("trace {tr} differs from 1"));
        }
        let (eigenvalues, _) = self.hermitian_part().eigh_unchecked();
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tolerance {
            return Some(format!("negative eigenvalue {min:.3e}"));
        }
        None
    }

    /// Errors with [`Error::NotDensity`] unless `is_density(tolerance)`.
    pub fn require_density(&self, tolerance: f64) -> Result<()> {
        match self.density_violation(tolerance) {
            None => Ok(()),
            Some(reason) => Err(Error::NotDensity(reason)),
        }
    }

    pub fn require_hermitian(&self, tolerance: f64) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > tolerance {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    fn hermitian_part(&self) -> Self {
        Self { inner: (&self.inner + self.inner.adjoint()) * C64::new(0.5, 0.0) }
    }

    fn eigh_unchecked(&self) -> (Vec<f64>, Self) {
        let eig = SymmetricEigen::new(self.inner.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
        (values, Self { inner: vectors })
    }

    /// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix.
    pub fn eigh(&self) -> Result<(Vec<f64>, Self)> {
        self.require_hermitian(tol::STRUCTURAL)?;
        Ok(self.hermitian_part().eigh_unchecked())
    }

    /// Largest eigenvalue magnitude of a Hermitian matrix.
    pub fn max_abs_eigenvalue(&self) -> Result<f64> {
        let (values, _) = self.eigh()?;
        Ok(values.iter().map(|v| v.abs()).fold(0.0, f64::max))
    }

    /// Column `k` as an amplitude vector.
    pub fn column(&self, k: usize) -> Vec<C64> {
        self.inner.column(k).iter().copied().collect()
    }

    /// Traces out the leading factor of a `lead ⊗ keep` operator, returning the
    /// `keep_dim × keep_dim` remainder.
    pub fn partial_trace_leading(&self, keep_dim: usize) -> Self {
        assert!(keep_dim > 0 && self.dim().is_multiple_of(keep_dim));
        let lead = self.dim() / keep_dim;
        Self::from_fn(keep_dim, |i, j| (0..lead).map(|s| self.get(s * keep_dim + i, s * keep_dim + j)).sum())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner * &rhs.inner }
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

/// Normalized state vector of a qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Accepts amplitudes whose squared norm is 1 within 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm_sq = norm_sq(&amplitudes);
        if (norm_sq - 1.0).abs() > tol::EQUALITY {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let n = norm_sq(&amplitudes).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sq: n * n });
        }
        Ok(Self { amplitudes: amplitudes.into_iter().map(|a| a / n).collect() })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes })
    }

    /// Qubit state whose Bloch vector is the unit vector `r`.
    pub fn from_bloch(r: BlochVector) -> Result<Self> {
        let r = r.require_unit(tol::STRUCTURAL)?;
        let r = r * (1.0 / r.norm());
        // cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩, written without trigonometry
        let amplitudes = if r.z > -1.0 + 1e-300 {
            let c = ((1.0 + r.z) / 2.0).sqrt();
            let s = C64::new(r.x, r.y) / (2.0 * (1.0 + r.z)).sqrt();
            vec![C64::new(c, 0.0), s]
        } else {
            vec![ZERO, ONE]
        };
        Self::normalized(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "state dimension mismatch");
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// ⟨self|op|other⟩
    pub fn matrix_element(&self, op: &ComplexMatrix, other: &Self) -> C64 {
        let applied = op.apply(&other.amplitudes);
        self.amplitudes.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        self.matrix_element(op, self)
    }

    /// |ψ⟩⟨ψ|
    pub fn projector(&self) -> ComplexMatrix {
        let a = &self.amplitudes;
        ComplexMatrix::from_fn(self.dim(), |i, j| a[i] * a[j].conj())
    }

    /// Bloch vector of a single-qubit state.
    pub fn bloch(&self) -> Result<BlochVector> {
        density_to_bloch(&self.projector())
    }
}

fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Kronecker product, first operand most significant.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for ComplexMatrix {
    fn tensor(&self, other: &Self) -> Self {
        self.kron(other)
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        PureState { amplitudes }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    })
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[ONE, -ONE])
}

/// The three Pauli matrices in x, y, z order.
pub fn paulis() -> [ComplexMatrix; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

fn bloch_combination(r: BlochVector) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => C64::new(r.z, 0.0),
        (1, 1) => C64::new(-r.z, 0.0),
        (0, 1) => C64::new(r.x, -r.y),
        _ => C64::new(r.x, r.y),
    })
}

/// `axis · σ` for a unit axis.
pub fn pauli_axis(axis: BlochVector) -> Result<ComplexMatrix> {
    axis.require_unit(tol::STRUCTURAL)?;
    Ok(bloch_combination(axis))
}

/// `(I + r·σ)/2`
pub fn bloch_to_density(r: BlochVector) -> Result<ComplexMatrix> {
    let norm = r.norm();
    if norm > 1.0 + tol::EQUALITY {
        return Err(Error::BlochNormExceeded { norm });
    }
    let rs = bloch_combination(r);
    Ok((&ComplexMatrix::identity(2) + &rs).scale(C64::new(0.5, 0.0)))
}

/// Inverse of [`bloch_to_density`]: `r_k = Tr{ρ σ_k}`.
pub fn density_to_bloch(rho: &ComplexMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: rho.dim() });
    }
    rho.require_density(tol::STRUCTURAL)?;
    let [sx, sy, sz] = paulis();
    let component = |s: &ComplexMatrix| (rho * s).trace().re;
    Ok(BlochVector::new(component(&sx), component(&sy), component(&sz)))
}

/// `exp(θ·H)` for Hermitian `H`, through its eigendecomposition.
pub fn hermitian_exp(h: &ComplexMatrix, theta: C64) -> Result<ComplexMatrix> {
    let (values, vectors) = h.eigh()?;
    let phases: Vec<C64> = values.iter().map(|&v| (theta * v).exp()).collect();
    let d = ComplexMatrix::from_diagonal(&phases);
    Ok(&(&vectors * &d) * &vectors.adjoint())
}

/// Haar-random pure state; the same `(dim, seed)` always gives the same state.
pub fn haar_random_pure(dim: usize, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure(dim, &mut rng)
}

/// Haar-random pure state drawn from `rng` (normalized complex Gaussian vector).
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    check_dim(dim)?;
    let amplitudes = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amplitudes)
}

/// Uniformly distributed unit 3-vector.
pub fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = BlochVector::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// Full-rank random density matrix `G G† / Tr(G G†)` with Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    let g = ComplexMatrix::from_fn(dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let gg = &g * &g.adjoint();
    let tr = gg.trace();
    Ok(gg.scale(tr.inv()))
}
