//! Exact simulation of a system coupled to a qubit meter.
//!
//! The impulsive interaction `g δ(t−t₀) A⊗(n̂·σ)` is applied as the single
//! unitary `exp(−i g A⊗(n̂·σ))`. The system is then projected on the
//! post-selected state and the meter is read out along `q̂`. Nothing is
//! expanded in `g`; the first-order readout formula is provided separately
//! so that the two can be compared.

use log::warn;

use crate::error::{Error, Result};
use crate::qops::{hermitian_exp, pauli_axis, BlochVector, ComplexMatrix, PureState, Tensor, C64};
use crate::tol;
use crate::weakvalue::{post_selection_state, weak_value_mixed, weak_value_pure};

/// Above this `|g·⟨A⟩_w|` the first-order picture is no longer trustworthy.
pub const WEAK_REGIME_LIMIT: f64 = 0.2;

/// Largest coupling accepted by the estimators.
pub const MAX_ESTIMATOR_COUPLING: f64 = 0.2;

/// Meter preparation `m̂`, coupling axis `n̂`, readout axis `q̂` and strength `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterSetup {
    pub m_axis: BlochVector,
    pub n_axis: BlochVector,
    pub q_axis: BlochVector,
    pub g: f64,
}

impl MeterSetup {
    pub fn new(m_axis: BlochVector, n_axis: BlochVector, q_axis: BlochVector, g: f64) -> Result<Self> {
        for axis in [m_axis, n_axis, q_axis] {
            axis.require_unit(tol::STRUCTURAL)?;
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidCoupling(g));
        }
        Ok(Self { m_axis, n_axis, q_axis, g })
    }

    /// `m̂ = x̂`, `n̂ = ẑ`.
    pub fn default_axes() -> (BlochVector, BlochVector) {
        (BlochVector::X, BlochVector::Z)
    }

    /// Readout along `q̂ = n̂ × m̂`, the direction the real part rotates the meter into.
    pub fn re_mode(m_axis: BlochVector, n_axis: BlochVector, g: f64) -> Result<Self> {
        Self::new(m_axis, n_axis, n_axis.cross(m_axis), g)
    }

    /// Readout along the precession axis `q̂ = n̂`.
    pub fn im_mode(m_axis: BlochVector, n_axis: BlochVector, g: f64) -> Result<Self> {
        Self::new(m_axis, n_axis, n_axis, g)
    }

    pub fn is_re_mode(&self) -> bool {
        self.m_axis.dot(self.n_axis).abs() <= tol::STRUCTURAL
            && self.q_axis.max_abs_diff(self.n_axis.cross(self.m_axis)) <= tol::STRUCTURAL
    }

    pub fn is_im_mode(&self) -> bool {
        self.m_axis.dot(self.n_axis).abs() <= tol::STRUCTURAL
            && self.q_axis.max_abs_diff(self.n_axis) <= tol::STRUCTURAL
    }

    pub fn with_q(&self, q_axis: BlochVector) -> Result<Self> {
        Self::new(self.m_axis, self.n_axis, q_axis, self.g)
    }

    pub fn initial_meter(&self) -> Result<PureState> {
        PureState::from_bloch(self.m_axis)
    }
}

/// Unnormalized meter after the system has been post-selected.
#[derive(Debug, Clone, PartialEq)]
pub enum MeterState {
    Pure([C64; 2]),
    Mixed(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectedMeter {
    pub meter: MeterState,
    /// Probability that the post-selection succeeds.
    pub acceptance: f64,
}

impl PostSelectedMeter {
    /// Meter density normalized to unit trace.
    pub fn normalized_density(&self) -> Result<ComplexMatrix> {
        self.require_acceptance()?;
        let rho = match &self.meter {
            MeterState::Pure(v) => ComplexMatrix::from_fn(2, |i, j| v[i] * v[j].conj()),
            MeterState::Mixed(rho) => rho.clone(),
        };
        Ok(rho.scale(C64::new(1.0 / self.acceptance, 0.0)))
    }

    fn require_acceptance(&self) -> Result<()> {
        if self.acceptance < tol::DIVERGENCE {
            return Err(Error::PostSelectionImpossible { acceptance: self.acceptance });
        }
        Ok(())
    }
}

/// `exp(−i g A⊗(n̂·σ))`
pub fn coupling_unitary(a: &ComplexMatrix, n_axis: BlochVector, g: f64) -> Result<ComplexMatrix> {
    let generator = a.kron(&pauli_axis(n_axis)?);
    hermitian_exp(&generator, C64::new(0.0, -g))
}

fn require_system_dim(a: &ComplexMatrix, dim: usize) -> Result<()> {
    if a.dim() != dim {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: dim });
    }
    Ok(())
}

/// Couples `|ψ_i⟩⊗|m̂⟩` exactly, projects the system on `|ψ_f⟩` and returns the meter.
pub fn couple_and_postselect(
    psi_i: &PureState,
    a: &ComplexMatrix,
    meter: &MeterSetup,
    psi_f: &PureState,
) -> Result<PostSelectedMeter> {
    require_system_dim(a, psi_i.dim())?;
    require_system_dim(a, psi_f.dim())?;
    let u = coupling_unitary(a, meter.n_axis, meter.g)?;
    let joint = u.apply(psi_i.tensor(&meter.initial_meter()?).amplitudes());
    let post = psi_f.amplitudes();
    let mut out = [C64::new(0.0, 0.0); 2];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = post.iter().enumerate().map(|(j, f)| f.conj() * joint[2 * j + k]).sum();
    }
    let acceptance = out.iter().map(|c| c.norm_sqr()).sum();
    Ok(PostSelectedMeter { meter: MeterState::Pure(out), acceptance })
}

/// Density-matrix version: `Tr_sys{(P_f⊗I) U (ρ_i⊗|m̂⟩⟨m̂|) U†}` for a positive
/// post-selection operator `P_f` (a POVM element, not necessarily normalized).
pub fn couple_and_postselect_mixed(
    rho_i: &ComplexMatrix,
    a: &ComplexMatrix,
    meter: &MeterSetup,
    p_f: &ComplexMatrix,
) -> Result<PostSelectedMeter> {
    require_system_dim(a, rho_i.dim())?;
    require_system_dim(a, p_f.dim())?;
    rho_i.require_density(tol::STRUCTURAL)?;
    p_f.require_hermitian(tol::STRUCTURAL)?;
    let u = coupling_unitary(a, meter.n_axis, meter.g)?;
    let start = rho_i.kron(&meter.initial_meter()?.projector());
    let evolved = &(&u * &start) * &u.adjoint();
    let projected = &p_f.kron(&ComplexMatrix::identity(2)) * &evolved;
    let meter_rho = projected.partial_trace_leading(2);
    let acceptance = meter_rho.trace().re;
    Ok(PostSelectedMeter { meter: MeterState::Mixed(meter_rho), acceptance })
}

/// `⟨Φ_f|q̂·σ|Φ_f⟩ / ⟨Φ_f|Φ_f⟩` on the exact post-selected meter.
pub fn conditional_expectation(ps: &PostSelectedMeter, q_axis: BlochVector) -> Result<f64> {
    let q = pauli_axis(q_axis)?;
    let rho = ps.normalized_density()?;
    Ok((&rho * &q).trace().re)
}

/// First-order readout prediction
/// `q̂·m̂ + 2g (q̂×n̂)·m̂ Re⟨A⟩_w + 2g (n̂·q̂ − (n̂·m̂)(q̂·m̂)) Im⟨A⟩_w`.
pub fn first_order_readout(meter: &MeterSetup, weak_value: C64) -> f64 {
    let (m, n, q, g) = (meter.m_axis, meter.n_axis, meter.q_axis, meter.g);
    q.dot(m)
        + 2.0 * g * q.cross(n).dot(m) * weak_value.re
        + 2.0 * g * (n.dot(q) - n.dot(m) * q.dot(m)) * weak_value.im
}

/// Weak value read off two meter experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterEstimate {
    /// `(readout_re + i·readout_im) / 2g`
    pub value: C64,
    /// Conditional `q̂·σ` expectation with `q̂ = n̂×m̂`.
    pub readout_re: f64,
    /// Conditional `q̂·σ` expectation with `q̂ = n̂`.
    pub readout_im: f64,
    /// Post-selection probability (the same in both experiments).
    pub acceptance: f64,
}

fn require_estimator_coupling(g: f64) -> Result<()> {
    if !(g > 0.0 && g <= MAX_ESTIMATOR_COUPLING) {
        return Err(Error::InvalidCoupling(g));
    }
    Ok(())
}

fn require_perpendicular(m_axis: BlochVector, n_axis: BlochVector) -> Result<()> {
    if m_axis.dot(n_axis).abs() > tol::STRUCTURAL {
        return Err(Error::InvalidArgument(format!(
            "meter preparation {m_axis} must be perpendicular to the coupling axis {n_axis}"
        )));
    }
    Ok(())
}

fn warn_if_strong(g: f64, weak_value: C64) {
    if g * weak_value.norm() > WEAK_REGIME_LIMIT {
        warn!(
            "g·|⟨A⟩_w| = {:.3} exceeds {WEAK_REGIME_LIMIT}; first-order readout formulas are unreliable",
            g * weak_value.norm()
        );
    }
}

/// Estimates `⟨A⟩_w` with the default meter axes `m̂ = x̂`, `n̂ = ẑ`.
pub fn estimate_weak_value(psi_i: &PureState, a: &ComplexMatrix, psi_f: &PureState, g: f64) -> Result<MeterEstimate> {
    let (m, n) = MeterSetup::default_axes();
    estimate_weak_value_with(psi_i, a, psi_f, m, n, g)
}

/// Runs the real-part (`q̂ = n̂×m̂`) and imaginary-part (`q̂ = n̂`) experiments
/// for a meter prepared along `m̂ ⊥ n̂`.
pub fn estimate_weak_value_with(
    psi_i: &PureState,
    a: &ComplexMatrix,
    psi_f: &PureState,
    m_axis: BlochVector,
    n_axis: BlochVector,
    g: f64,
) -> Result<MeterEstimate> {
    require_estimator_coupling(g)?;
    require_perpendicular(m_axis, n_axis)?;
    warn_if_strong(g, weak_value_pure(a, psi_i, psi_f)?.value);
    let re_setup = MeterSetup::re_mode(m_axis, n_axis, g)?;
    let im_setup = MeterSetup::im_mode(m_axis, n_axis, g)?;
    let re_run = couple_and_postselect(psi_i, a, &re_setup, psi_f)?;
    let im_run = couple_and_postselect(psi_i, a, &im_setup, psi_f)?;
    finish_estimate(&re_run, &re_setup, &im_run, &im_setup)
}

/// Mixed-state counterpart of [`estimate_weak_value_with`] with a post-selection operator `P_f`.
pub fn estimate_weak_value_mixed(
    rho_i: &ComplexMatrix,
    a: &ComplexMatrix,
    p_f: &ComplexMatrix,
    m_axis: BlochVector,
    n_axis: BlochVector,
    g: f64,
) -> Result<MeterEstimate> {
    require_estimator_coupling(g)?;
    require_perpendicular(m_axis, n_axis)?;
    warn_if_strong(g, weak_value_mixed(a, rho_i, &post_selection_state(p_f)?)?.value);
    let re_setup = MeterSetup::re_mode(m_axis, n_axis, g)?;
    let im_setup = MeterSetup::im_mode(m_axis, n_axis, g)?;
    let re_run = couple_and_postselect_mixed(rho_i, a, &re_setup, p_f)?;
    let im_run = couple_and_postselect_mixed(rho_i, a, &im_setup, p_f)?;
    finish_estimate(&re_run, &re_setup, &im_run, &im_setup)
}

fn finish_estimate(
    re_run: &PostSelectedMeter,
    re_setup: &MeterSetup,
    im_run: &PostSelectedMeter,
    im_setup: &MeterSetup,
) -> Result<MeterEstimate> {
    let readout_re = conditional_expectation(re_run, re_setup.q_axis)?;
    let readout_im = conditional_expectation(im_run, im_setup.q_axis)?;
    Ok(MeterEstimate {
        value: C64::new(readout_re, readout_im) / (2.0 * re_setup.g),
        readout_re,
        readout_im,
        acceptance: re_run.acceptance,
    })
}

/// The meter operator `exp(−i g ⟨A⟩_w n̂·σ)` split into its rotation and its
/// Hermitian, non-unitary factor.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveMeterOperator {
    /// `exp(−i g Re⟨A⟩_w n̂·σ)`
    pub unitary_part: ComplexMatrix,
    /// `exp(g Im⟨A⟩_w n̂·σ)`
    pub nonunitary_part: ComplexMatrix,
}

impl EffectiveMeterOperator {
    /// Product of both parts (they commute).
    pub fn combined(&self) -> ComplexMatrix {
        &self.unitary_part * &self.nonunitary_part
    }

    /// Applies the operator to a meter state and renormalizes.
    pub fn act_on(&self, meter: &PureState) -> Result<PureState> {
        PureState::normalized(self.combined().apply(meter.amplitudes()))
    }
}

pub fn effective_meter_operator(weak_value: C64, n_axis: BlochVector, g: f64) -> Result<EffectiveMeterOperator> {
    warn_if_strong(g, weak_value);
    let n_sigma = pauli_axis(n_axis)?;
    Ok(EffectiveMeterOperator {
        unitary_part: hermitian_exp(&n_sigma, C64::new(0.0, -g * weak_value.re))?,
        nonunitary_part: hermitian_exp(&n_sigma, C64::new(g * weak_value.im, 0.0))?,
    })
}

/// Concurrence of `a|00⟩ + b|11⟩` before and after `exp(g·Im⟨A⟩_w σz)` acts on
/// the first qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementShift {
    pub concurrence_before: f64,
    pub concurrence_after: f64,
}

/// Inputs are rescaled to `|a|² + |b|² = 1` before use.
pub fn entanglement_shift(a: C64, b: C64, wv_im: f64, g: f64) -> Result<EntanglementShift> {
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument("Schmidt amplitudes must not both vanish".into()));
    }
    let (a, b) = (a / norm, b / norm);
    let boost = (g * wv_im).exp();
    let (a2, b2) = (a * boost, b / boost);
    let norm2 = (a2.norm_sqr() + b2.norm_sqr()).sqrt();
    Ok(EntanglementShift {
        concurrence_before: 2.0 * (a * b).norm(),
        concurrence_after: 2.0 * (a2 * b2).norm() / (norm2 * norm2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{sigma_y, sigma_z};

    fn ket(r: BlochVector) -> PureState {
        PureState::from_bloch(r).unwrap()
    }

    fn default_re(g: f64) -> MeterSetup {
        MeterSetup::re_mode(BlochVector::X, BlochVector::Z, g).unwrap()
    }

    #[test]
    fn mode_predicates() {
        let re = default_re(0.1);
        assert_eq!(re.q_axis, BlochVector::Y);
        assert!(re.is_re_mode() && !re.is_im_mode());
        let im = MeterSetup::im_mode(BlochVector::X, BlochVector::Z, 0.1).unwrap();
        assert!(im.is_im_mode() && !im.is_re_mode());
        assert!(MeterSetup::new(BlochVector::X, BlochVector::Z, BlochVector::Y, -0.1).is_err());
    }

    #[test]
    fn zero_coupling_leaves_meter_alone() {
        let (psi_i, psi_f) = (ket(BlochVector::new(0.6, 0.0, 0.8)), ket(BlochVector::new(0.0, 0.6, -0.8)));
        let setup = MeterSetup::re_mode(BlochVector::X, BlochVector::Z, 0.0).unwrap();
        let ps = couple_and_postselect(&psi_i, &sigma_y(), &setup, &psi_f).unwrap();
        assert!((ps.acceptance - psi_f.inner(&psi_i).norm_sqr()).abs() < 1e-14);
        for q in [BlochVector::X, BlochVector::Y, BlochVector::Z] {
            let r = conditional_expectation(&ps, q).unwrap();
            assert!((r - q.dot(BlochVector::X)).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenstate_selection_precesses_by_two_g() {
        let z = ket(BlochVector::Z);
        let g = 0.3;
        let ps = couple_and_postselect(&z, &sigma_z(), &default_re(g), &z).unwrap();
        assert!((ps.acceptance - 1.0).abs() < 1e-14);
        let bloch = [BlochVector::X, BlochVector::Y, BlochVector::Z]
            .map(|q| conditional_expectation(&ps, q).unwrap());
        let expected = [(2.0 * g).cos(), (2.0 * g).sin(), 0.0];
        for (got, want) in bloch.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "{bloch:?}");
        }
    }

    #[test]
    fn acceptance_for_z_to_x_selection() {
        // Meter operator ⟨+|0⟩(cos g + sin g σz); ⟨σz⟩ = 0 on x̂, so acceptance is exactly 1/2.
        let g = 1e-3;
        let ps = couple_and_postselect(&ket(BlochVector::Z), &sigma_y(), &default_re(g), &ket(BlochVector::X)).unwrap();
        assert!((ps.acceptance - 0.5).abs() < 1e-12, "{}", ps.acceptance);
    }

    #[test]
    fn readouts_match_closed_forms() {
        let z = ket(BlochVector::Z);
        let g = 0.05;
        let ps = couple_and_postselect(&z, &sigma_z(), &default_re(g), &z).unwrap();
        assert!((conditional_expectation(&ps, BlochVector::Y).unwrap() - (2.0 * g).sin()).abs() < 1e-14);

        // ⟨A⟩_w = i: meter operator ∝ cos g + sin g σz, so ⟨σz⟩ = sin 2g.
        let g = 1e-3;
        let im = MeterSetup::im_mode(BlochVector::X, BlochVector::Z, g).unwrap();
        let ps = couple_and_postselect(&z, &sigma_y(), &im, &ket(BlochVector::X)).unwrap();
        let r = conditional_expectation(&ps, BlochVector::Z).unwrap();
        assert!((r - (2.0 * g).sin()).abs() < 1e-14, "{r}");
        assert!(((r - 2e-3) / 2e-3).abs() < 10.0 * g);
    }

    #[test]
    fn impossible_post_selection_reports_error() {
        let ps = couple_and_postselect(
            &ket(BlochVector::Z),
            &sigma_z(),
            &default_re(0.1),
            &ket(-BlochVector::Z),
        )
        .unwrap();
        assert!(matches!(conditional_expectation(&ps, BlochVector::Y), Err(Error::PostSelectionImpossible { .. })));
    }

    #[test]
    fn estimate_examples() {
        let z = ket(BlochVector::Z);
        let est = estimate_weak_value(&z, &sigma_z(), &z, 0.01).unwrap();
        assert!((est.value.re - 0.02f64.sin() / 0.02).abs() < 1e-13);
        assert!(est.value.im.abs() < 1e-14);

        let est = estimate_weak_value(&z, &sigma_y(), &ket(BlochVector::X), 1e-3).unwrap();
        assert!(est.value.re.abs() < 1e-2);
        assert!((est.value.im - 1.0).abs() < 1e-2);
    }

    #[test]
    fn estimate_error_shrinks_quadratically_on_halving() {
        // For ⟨A⟩_w = i the estimate is exactly sin(2g)/2g · i, so the error
        // is 1 − sin(2g)/2g ≈ 2g²/3 and halving g divides it by ≈ 4.
        let (z, x) = (ket(BlochVector::Z), ket(BlochVector::X));
        let err = |g: f64| {
            let est = estimate_weak_value(&z, &sigma_y(), &x, g).unwrap();
            (est.value - C64::new(0.0, 1.0)).norm()
        };
        let closed = |g: f64| 1.0 - (2.0 * g).sin() / (2.0 * g);
        assert!((err(1e-2) - closed(1e-2)).abs() < 1e-12);
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn estimator_rejects_bad_coupling() {
        let z = ket(BlochVector::Z);
        assert!(matches!(estimate_weak_value(&z, &sigma_z(), &z, 0.0), Err(Error::InvalidCoupling(_))));
        assert!(matches!(estimate_weak_value(&z, &sigma_z(), &z, 0.5), Err(Error::InvalidCoupling(_))));
    }

    #[test]
    fn effective_operator_examples() {
        let op = effective_meter_operator(C64::new(1.7, 0.0), BlochVector::Z, 0.1).unwrap();
        assert!(op.nonunitary_part.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(op.unitary_part.is_unitary(1e-12));

        let op = effective_meter_operator(C64::new(0.0, 1.0), BlochVector::Z, 0.1).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[C64::new(0.1f64.exp(), 0.0), C64::new((-0.1f64).exp(), 0.0)]);
        assert!(op.nonunitary_part.max_abs_diff(&expected) < 1e-15);
        assert!(!op.nonunitary_part.is_unitary(1e-3));
    }

    #[test]
    fn imaginary_weak_value_bends_equator_towards_one_pole() {
        let op = effective_meter_operator(C64::new(0.0, 1.0), BlochVector::Z, 0.05).unwrap();
        for k in 0..12 {
            let phi = k as f64 * std::f64::consts::PI / 6.0;
            let start = ket(BlochVector::new(phi.cos(), phi.sin(), 0.0));
            let bent = op.act_on(&start).unwrap().bloch().unwrap();
            assert!(bent.z > 0.09, "φ={phi}: z={}", bent.z);
        }
    }

    #[test]
    fn effective_operator_reproduces_exact_meter_to_first_order() {
        let (psi_i, psi_f) = (ket(BlochVector::new(0.0, 0.6, 0.8)), ket(BlochVector::new(0.8, 0.0, 0.6)));
        let a = pauli_axis(BlochVector::new(0.48, 0.6, 0.64)).unwrap();
        let wv = weak_value_pure(&a, &psi_i, &psi_f).unwrap().value;
        let residual = |g: f64| {
            let setup = default_re(g);
            let exact = couple_and_postselect(&psi_i, &a, &setup, &psi_f).unwrap().normalized_density().unwrap();
            let op = effective_meter_operator(wv, BlochVector::Z, g).unwrap();
            let approx = op.act_on(&setup.initial_meter().unwrap()).unwrap().projector();
            exact.max_abs_diff(&approx)
        };
        let (r1, r2) = (residual(1e-2), residual(5e-3));
        assert!(r1 < 1e-3, "{r1}");
        assert!(r1 / r2 > 3.0, "ratio {}", r1 / r2);
    }

    #[test]
    fn entanglement_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e = entanglement_shift(C64::new(h, 0.0), C64::new(h, 0.0), 1.0, 1e-4).unwrap();
        assert!((e.concurrence_before - 1.0).abs() < 1e-15);
        assert!((e.concurrence_after - 1.0).abs() < 1e-7);

        let e = entanglement_shift(C64::new(0.9487, 0.0), C64::new(0.3162, 0.0), 1.0, -0.1).unwrap();
        assert!(e.concurrence_after > e.concurrence_before, "{e:?}");

        let e = entanglement_shift(C64::new(0.9487, 0.0), C64::new(0.3162, 0.0), 1.0, 0.0).unwrap();
        assert_eq!(e.concurrence_after, e.concurrence_before);
    }

    #[test]
    fn mixed_flow_matches_pure_flow_on_rank_one_inputs() {
        let (psi_i, psi_f) = (ket(BlochVector::new(0.0, 0.6, 0.8)), ket(BlochVector::new(0.8, 0.0, 0.6)));
        let a = pauli_axis(BlochVector::new(0.48, 0.6, 0.64)).unwrap();
        let setup = default_re(0.07);
        let pure = couple_and_postselect(&psi_i, &a, &setup, &psi_f).unwrap();
        let mixed = couple_and_postselect_mixed(&psi_i.projector(), &a, &setup, &psi_f.projector()).unwrap();
        assert!((pure.acceptance - mixed.acceptance).abs() < 1e-14);
        assert!(pure.normalized_density().unwrap().max_abs_diff(&mixed.normalized_density().unwrap()) < 1e-13);
    }
}
