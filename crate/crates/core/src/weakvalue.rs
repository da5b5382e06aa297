//! Analytic weak values.
//!
//! The general entry points are [`weak_value_pure`] and [`weak_value_mixed`],
//! which evaluate `⟨ψ_f|A|ψ_i⟩/⟨ψ_f|ψ_i⟩` and `Tr{ρ_f Ω ρ_i}/Tr{ρ_f ρ_i}`
//! directly. The remaining functions are closed forms for traceless qubit
//! observables `n̂·σ`, written in terms of Bloch vectors.

use crate::error::{Error, Result};
use crate::qops::{paulis, pauli_axis, BlochVector, ComplexMatrix, PureState, Tensor, C64};
use crate::tol;

/// A weak value together with the selection overlap and the magnitude bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValueResult {
    pub value: C64,
    /// `|⟨ψ_f|ψ_i⟩|²` for pure selections, `Tr{ρ_f ρ_i}` for mixed ones.
    pub overlap_sq: f64,
    /// Upper bound on `|value|` (and on its real and imaginary parts).
    pub bound: f64,
    pub diverged: bool,
}

impl WeakValueResult {
    fn pure(value: C64, overlap_sq: f64, max_eigenvalue: f64) -> Self {
        Self { value, overlap_sq, bound: max_eigenvalue / overlap_sq.sqrt(), diverged: false }
    }

    fn mixed(value: C64, overlap_sq: f64, max_eigenvalue: f64) -> Self {
        Self { value, overlap_sq, bound: max_eigenvalue / overlap_sq, diverged: false }
    }

    /// True when real part, imaginary part and modulus all respect `bound`.
    pub fn within_bound(&self, slack: f64) -> bool {
        let limit = self.bound + slack;
        self.value.re.abs() <= limit && self.value.im.abs() <= limit && self.value.norm() <= limit
    }
}

fn require_same_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `⟨ψ_f|A|ψ_i⟩ / ⟨ψ_f|ψ_i⟩` for Hermitian `A`.
pub fn weak_value_pure(a: &ComplexMatrix, psi_i: &PureState, psi_f: &PureState) -> Result<WeakValueResult> {
    require_same_dim(a.dim(), psi_i.dim())?;
    require_same_dim(a.dim(), psi_f.dim())?;
    let e_max = a.max_abs_eigenvalue()?;
    let overlap = psi_f.inner(psi_i);
    let overlap_sq = overlap.norm_sqr();
    if overlap_sq < tol::DIVERGENCE {
        return Err(Error::OrthogonalSelection { overlap: overlap_sq });
    }
    let value = psi_f.matrix_element(a, psi_i) / overlap;
    Ok(WeakValueResult::pure(value, overlap_sq, e_max))
}

/// Normalizes a positive post-selection operator `P_f` into the state `P_f / Tr P_f`.
pub fn post_selection_state(p_f: &ComplexMatrix) -> Result<ComplexMatrix> {
    let tr = p_f.trace();
    if !(tr.re > tol::DIVERGENCE) {
        return Err(Error::NotDensity(format!("post-selection operator has trace {tr}")));
    }
    let rho_f = p_f.scale(C64::new(1.0 / tr.re, 0.0));
    rho_f.require_density(tol::STRUCTURAL)?;
    Ok(rho_f)
}

/// `Tr{ρ_f Ω ρ_i} / Tr{ρ_f ρ_i}` for a density `ρ_i` and a normalized post-selection state `ρ_f`.
pub fn weak_value_mixed(
    omega: &ComplexMatrix,
    rho_i: &ComplexMatrix,
    rho_f: &ComplexMatrix,
) -> Result<WeakValueResult> {
    require_same_dim(omega.dim(), rho_i.dim())?;
    require_same_dim(omega.dim(), rho_f.dim())?;
    rho_i.require_density(tol::STRUCTURAL)?;
    rho_f.require_density(tol::STRUCTURAL)?;
    let e_max = omega.max_abs_eigenvalue()?;
    let denominator = (rho_f * rho_i).trace().re;
    if denominator < tol::DIVERGENCE {
        return Err(Error::OrthogonalSelection { overlap: denominator });
    }
    let numerator = (&(rho_f * omega) * rho_i).trace();
    Ok(WeakValueResult::mixed(numerator / denominator, denominator, e_max))
}

/// Complex 3-vector `w⃗` with `⟨n̂·σ⟩_w = n̂·w⃗`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WVector {
    pub wx: C64,
    pub wy: C64,
    pub wz: C64,
}

impl WVector {
    pub fn from_parts(re: BlochVector, im: BlochVector) -> Self {
        Self { wx: C64::new(re.x, im.x), wy: C64::new(re.y, im.y), wz: C64::new(re.z, im.z) }
    }

    pub fn components(&self) -> [C64; 3] {
        [self.wx, self.wy, self.wz]
    }

    pub fn re(&self) -> BlochVector {
        BlochVector::new(self.wx.re, self.wy.re, self.wz.re)
    }

    pub fn im(&self) -> BlochVector {
        BlochVector::new(self.wx.im, self.wy.im, self.wz.im)
    }

    /// `n̂·w⃗`, the weak value of `n̂·σ`.
    pub fn project(&self, n: BlochVector) -> C64 {
        self.wx * n.x + self.wy * n.y + self.wz * n.z
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { wx: self.wx * factor, wy: self.wy * factor, wz: self.wz * factor }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn require_pure_pair(ri: BlochVector, rf: BlochVector) -> Result<f64> {
    ri.require_unit(tol::STRUCTURAL)?;
    rf.require_unit(tol::STRUCTURAL)?;
    let denominator = 1.0 + ri.dot(rf);
    if denominator < tol::DIVERGENCE {
        return Err(Error::AntiParallel { denominator });
    }
    Ok(denominator)
}

/// `w⃗ = (r̂_i + r̂_f + i r̂_i×r̂_f) / (1 + r̂_i·r̂_f)` for pure selections.
///
/// For parallel selections this is the real vector `r̂_i`.
pub fn w_vector(ri: BlochVector, rf: BlochVector) -> Result<WVector> {
    let denominator = require_pure_pair(ri, rf)?;
    let scale = 1.0 / denominator;
    Ok(WVector::from_parts((ri + rf) * scale, ri.cross(rf) * scale))
}

/// Weak value of `n̂·σ` between pure qubit selections, from [`w_vector`].
pub fn weak_value_bloch(n: BlochVector, ri: BlochVector, rf: BlochVector) -> Result<WeakValueResult> {
    n.require_unit(tol::STRUCTURAL)?;
    let w = w_vector(ri, rf)?;
    let overlap_sq = (1.0 + ri.dot(rf)) / 2.0;
    Ok(WeakValueResult::pure(w.project(n), overlap_sq, 1.0))
}

/// Polar form of `w⃗`: `w⃗ = r̂/cos θ + i tan θ ŝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarForm {
    /// Bisector of `r̂_i` and `r̂_f`.
    pub r_hat: BlochVector,
    /// Unit normal `r̂_i × r̂_f / |r̂_i × r̂_f|`.
    pub s_hat: BlochVector,
    /// Half the angle between `r̂_i` and `r̂_f`, in `[0, π/2)`.
    pub theta: f64,
}

impl PolarForm {
    pub fn to_w_vector(&self) -> WVector {
        WVector::from_parts(self.r_hat * (1.0 / self.theta.cos()), self.s_hat * self.theta.tan())
    }

    pub fn re_weak_value(&self, n: BlochVector) -> f64 {
        n.dot(self.r_hat) / self.theta.cos()
    }

    pub fn im_weak_value(&self, n: BlochVector) -> f64 {
        self.theta.tan() * n.dot(self.s_hat)
    }
}

pub fn polar_decompose(ri: BlochVector, rf: BlochVector) -> Result<PolarForm> {
    require_pure_pair(ri, rf)?;
    let cross = ri.cross(rf);
    let s_hat = match cross.normalized() {
        Some(s) if cross.norm() > tol::STRUCTURAL => s,
        _ => return Err(Error::ParallelStates),
    };
    let r_hat = (ri + rf).normalized().ok_or(Error::AntiParallel { denominator: 0.0 })?;
    let theta = 0.5 * ri.angle_to(rf);
    Ok(PolarForm { r_hat, s_hat, theta })
}

/// `|⟨ψ_f|ψ_i⟩|·w⃗ = r̂ + i sin θ ŝ` and the outcome of the bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedW {
    pub vector: WVector,
    /// `|⟨ψ_f|ψ_i⟩|`
    pub overlap: f64,
    /// Re, Im and modulus of `n̂·w⃗` stayed below `1/|⟨ψ_f|ψ_i⟩|` on every sampled axis.
    pub bound_check: bool,
}

impl BoundedW {
    /// Checks the bound on caller-chosen axes.
    pub fn holds_on(&self, axes: &[BlochVector]) -> bool {
        let w = self.vector.scaled(1.0 / self.overlap);
        let limit = 1.0 / self.overlap + tol::STRUCTURAL;
        axes.iter().all(|&n| {
            let v = w.project(n);
            v.re.abs() <= limit && v.im.abs() <= limit && v.norm() <= limit
        })
    }
}

/// Near-uniform set of `count` unit axes (Fibonacci lattice).
pub fn sample_axes(count: usize) -> Vec<BlochVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            BlochVector::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

const BOUND_CHECK_AXES: usize = 200;

pub fn bounded_w(ri: BlochVector, rf: BlochVector) -> Result<BoundedW> {
    let w = w_vector(ri, rf)?;
    let overlap = ((1.0 + ri.dot(rf)) / 2.0).sqrt();
    let mut out = BoundedW { vector: w.scaled(overlap), overlap, bound_check: false };
    let mut axes = sample_axes(BOUND_CHECK_AXES);
    // The extremal axes for Re and Im are r̂ and ŝ themselves.
    axes.extend(out.vector.re().normalized());
    axes.extend(out.vector.im().normalized());
    out.bound_check = out.holds_on(&axes);
    Ok(out)
}

/// Pre- and post-selected Bloch vectors of two qubits in product states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductSelection {
    pub a_pre: BlochVector,
    pub a_post: BlochVector,
    pub b_pre: BlochVector,
    pub b_post: BlochVector,
}

impl ProductSelection {
    pub fn pre_state(&self) -> Result<PureState> {
        Ok(PureState::from_bloch(self.a_pre)?.tensor(&PureState::from_bloch(self.b_pre)?))
    }

    pub fn post_state(&self) -> Result<PureState> {
        Ok(PureState::from_bloch(self.a_post)?.tensor(&PureState::from_bloch(self.b_post)?))
    }
}

/// Weak value of `(n̂_a·σ)⊗(n̂_b·σ)` with the two single-qubit factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductWeakValue {
    pub result: WeakValueResult,
    pub factor_a: C64,
    pub factor_b: C64,
}

impl ProductWeakValue {
    /// Real part assembled from four separate single-qubit readouts:
    /// `Re a · Re b − Im a · Im b`.
    pub fn re_from_parts(&self) -> f64 {
        self.factor_a.re * self.factor_b.re - self.factor_a.im * self.factor_b.im
    }
}

pub fn product_weak_value(na: BlochVector, nb: BlochVector, sel: &ProductSelection) -> Result<ProductWeakValue> {
    let a = weak_value_bloch(na, sel.a_pre, sel.a_post)?;
    let b = weak_value_bloch(nb, sel.b_pre, sel.b_post)?;
    let overlap_sq = a.overlap_sq * b.overlap_sq;
    let result = WeakValueResult::pure(a.value * b.value, overlap_sq, 1.0);
    Ok(ProductWeakValue { result, factor_a: a.value, factor_b: b.value })
}

/// `(n̂_a·σ) ⊗ (n̂_b·σ)`
pub fn product_observable(na: BlochVector, nb: BlochVector) -> Result<ComplexMatrix> {
    Ok(pauli_axis(na)?.kron(&pauli_axis(nb)?))
}

/// Two-qubit state in local Bloch vectors plus the correlation block:
/// `ρ = (I⊗I + r_a·σ⊗I + I⊗r_b·σ + Σ ω_mn σ_m⊗σ_n)/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitBloch {
    pub ra: BlochVector,
    pub rb: BlochVector,
    pub omega: [[f64; 3]; 3],
}

impl TwoQubitBloch {
    pub fn maximally_mixed() -> Self {
        Self { ra: BlochVector::ZERO, rb: BlochVector::ZERO, omega: [[0.0; 3]; 3] }
    }

    /// `ω_mn = λ δ_mn`, no local polarization.
    pub fn werner(lambda: f64) -> Self {
        let mut omega = [[0.0; 3]; 3];
        for (m, row) in omega.iter_mut().enumerate() {
            row[m] = lambda;
        }
        Self { ra: BlochVector::ZERO, rb: BlochVector::ZERO, omega }
    }

    /// Product of two single-qubit states: `ω_mn = r_a,m r_b,n`.
    pub fn product(ra: BlochVector, rb: BlochVector) -> Self {
        let (a, b) = (ra.to_array(), rb.to_array());
        let omega = std::array::from_fn(|m| std::array::from_fn(|n| a[m] * b[n]));
        Self { ra, rb, omega }
    }

    pub fn to_density(&self) -> ComplexMatrix {
        let s = paulis();
        let id = ComplexMatrix::identity(2);
        let (a, b) = (self.ra.to_array(), self.rb.to_array());
        let mut rho = ComplexMatrix::identity(4);
        for k in 0..3 {
            rho = &rho + &s[k].kron(&id).scale(C64::new(a[k], 0.0));
            rho = &rho + &id.kron(&s[k]).scale(C64::new(b[k], 0.0));
            for n in 0..3 {
                rho = &rho + &s[k].kron(&s[n]).scale(C64::new(self.omega[k][n], 0.0));
            }
        }
        rho.scale(C64::new(0.25, 0.0))
    }

    /// Errors unless the reconstructed matrix is a valid density.
    pub fn validate(&self) -> Result<ComplexMatrix> {
        let rho = self.to_density();
        rho.require_density(tol::STRUCTURAL)?;
        Ok(rho)
    }

    pub fn from_density(rho: &ComplexMatrix) -> Result<Self> {
        require_same_dim(4, rho.dim())?;
        rho.require_density(tol::STRUCTURAL)?;
        let s = paulis();
        let id = ComplexMatrix::identity(2);
        let expect = |op: &ComplexMatrix| (rho * op).trace().re;
        let ra = BlochVector::from_array(std::array::from_fn(|k| expect(&s[k].kron(&id))));
        let rb = BlochVector::from_array(std::array::from_fn(|k| expect(&id.kron(&s[k]))));
        let omega = std::array::from_fn(|m| std::array::from_fn(|n| expect(&s[m].kron(&s[n]))));
        Ok(Self { ra, rb, omega })
    }
}

/// Levi-Civita symbol on indices `0..3`.
fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Weak value of `(n̂_a·σ)⊗(n̂_b·σ)` between general two-qubit states, from the
/// component expression in local Bloch vectors and correlation blocks.
pub fn two_qubit_mixed_weak_value(
    na: BlochVector,
    nb: BlochVector,
    pre: &TwoQubitBloch,
    post: &TwoQubitBloch,
) -> Result<WeakValueResult> {
    na.require_unit(tol::STRUCTURAL)?;
    nb.require_unit(tol::STRUCTURAL)?;
    pre.validate()?;
    post.validate()?;

    let (wi, wf) = (&pre.omega, &post.omega);
    let (rai, raf) = (pre.ra.to_array(), post.ra.to_array());
    let (rbi, rbf) = (pre.rb.to_array(), post.rb.to_array());
    let (a, b) = (na.to_array(), nb.to_array());

    let mut correlation_overlap = 0.0;
    for m in 0..3 {
        for n in 0..3 {
            correlation_overlap += wf[m][n] * wi[m][n];
        }
    }
    let denominator = 1.0 + post.ra.dot(pre.ra) + post.rb.dot(pre.rb) + correlation_overlap;
    if denominator < tol::DIVERGENCE {
        return Err(Error::OrthogonalSelection { overlap: denominator / 4.0 });
    }

    let mut direct = 0.0;
    for al in 0..3 {
        for be in 0..3 {
            direct += a[al] * (wf[al][be] + wi[al][be] + raf[al] * rbi[be] + rai[al] * rbf[be]) * b[be];
        }
    }

    // Σ n_α n_β ε_{α m m'} ε_{β n n'} ω^i_{mn} ω^f_{m'n'}
    let mut crossed = 0.0;
    for al in 0..3 {
        for be in 0..3 {
            let nn = a[al] * b[be];
            if nn == 0.0 {
                continue;
            }
            for m in 0..3 {
                for mp in 0..3 {
                    let e1 = levi_civita(al, m, mp);
                    if e1 == 0.0 {
                        continue;
                    }
                    for n in 0..3 {
                        for np in 0..3 {
                            crossed += nn * e1 * levi_civita(be, n, np) * wi[m][n] * wf[mp][np];
                        }
                    }
                }
            }
        }
    }

    // Σ n_α n_β ε_{αγm} (ω^f_{mβ} r^a_{iγ} − ω^i_{mβ} r^a_{fγ})
    //   + Σ n_α n_β ε_{βγn} (ω^f_{αn} r^b_{iγ} − ω^i_{αn} r^b_{fγ})
    let mut imaginary = 0.0;
    for al in 0..3 {
        for be in 0..3 {
            let nn = a[al] * b[be];
            for g in 0..3 {
                for k in 0..3 {
                    imaginary += nn * levi_civita(al, g, k) * (wf[k][be] * rai[g] - wi[k][be] * raf[g]);
                    imaginary += nn * levi_civita(be, g, k) * (wf[al][k] * rbi[g] - wi[al][k] * rbf[g]);
                }
            }
        }
    }

    let value = C64::new(direct - crossed, imaginary) / denominator;
    Ok(WeakValueResult::mixed(value, denominator / 4.0, 1.0))
}

fn require_werner_lambda(lambda: f64) -> Result<()> {
    if !(-1.0 - tol::EQUALITY..=1.0 / 3.0 + tol::EQUALITY).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(())
}

/// `(I⊗I + λ Σ σ_m⊗σ_m)/4`
pub fn werner_density(lambda: f64) -> Result<ComplexMatrix> {
    require_werner_lambda(lambda)?;
    Ok(TwoQubitBloch::werner(lambda).to_density())
}

/// Weak value of `(n̂_a·σ)⊗(n̂_b·σ)` between Werner states,
/// `(λ_f + λ_i − 2 λ_f λ_i)/(1 + 3 λ_f λ_i) · n̂_a·n̂_b`.
///
/// This is the component formula of [`two_qubit_mixed_weak_value`] at
/// `ω_mn = λ δ_mn`; the `−2 λ_f λ_i` term is the ε-contraction
/// `Σ ε_{αmm'} ε_{βmm'} = 2 δ_αβ`.
pub fn werner_weak_value(lambda_i: f64, lambda_f: f64, na: BlochVector, nb: BlochVector) -> Result<WeakValueResult> {
    require_werner_lambda(lambda_i)?;
    require_werner_lambda(lambda_f)?;
    na.require_unit(tol::STRUCTURAL)?;
    nb.require_unit(tol::STRUCTURAL)?;
    let denominator = 1.0 + 3.0 * lambda_f * lambda_i;
    if denominator < tol::DIVERGENCE {
        return Err(Error::OrthogonalSelection { overlap: denominator / 4.0 });
    }
    let value = (lambda_f + lambda_i - 2.0 * lambda_f * lambda_i) / denominator * na.dot(nb);
    Ok(WeakValueResult::mixed(C64::new(value, 0.0), denominator / 4.0, 1.0))
}
