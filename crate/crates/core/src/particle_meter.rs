//! Free-particle meter on a uniform periodic grid.
//!
//! The meter is a wavepacket `ψ(x)` coupled to the system through
//! `g δ(t−t₀) A·p`. In the eigenbasis of `A` the coupling translates the
//! packet by `g·a_k`, which is applied exactly as the phase `e^{−i g a_k p}`
//! in momentum space. Momentum moments and derivatives are spectral.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::qops::{ComplexMatrix, PureState, C64};
use crate::tol;

/// Points checked at each end of the grid for leftover amplitude.
const EDGE_POINTS: usize = 8;
const EDGE_LIMIT: f64 = 1e-8;

/// Uniform periodic grid `x_j = x_min + j·Δx`, `Δx = (x_max − x_min)/n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { n_points: 4096, x_min: -40.0, x_max: 40.0 }
    }
}

impl Grid {
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if !n_points.is_power_of_two() || n_points < 16 {
            return Err(Error::InvalidGrid(format!("{n_points} points is not a power of two ≥ 16")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!("empty interval [{x_min}, {x_max}]")));
        }
        Ok(Self { n_points, x_min, x_max })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    /// Momentum of FFT bin `k` (ħ = 1), negative frequencies in the upper half.
    pub fn p(&self, k: usize) -> f64 {
        let n = self.n_points as i64;
        let k = k as i64;
        let signed = if k < n / 2 { k } else { k - n };
        2.0 * std::f64::consts::PI * signed as f64 / (self.x_max - self.x_min)
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.p(k)).collect()
    }

    /// Same interval with twice the points.
    pub fn refined(&self) -> Self {
        Self { n_points: self.n_points * 2, ..*self }
    }
}

struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl Transforms {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), n }
    }

    fn to_momentum(&self, psi: &[C64]) -> Vec<C64> {
        let mut buf = psi.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    fn to_position(&self, phi: &[C64]) -> Vec<C64> {
        let mut buf = phi.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }
}

/// Meter wavefunction sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub grid: Grid,
    pub amplitudes: Vec<C64>,
    pub mass: f64,
}

/// Initial Gaussian packet parameters. `chirp` adds the phase `c·(x − x0)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub chirp: f64,
    pub mass: f64,
}

impl Default for PacketSpec {
    fn default() -> Self {
        Self { x0: 0.0, p0: 0.0, sigma: 1.0, chirp: 0.0, mass: 1.0 }
    }
}

/// Normalized Gaussian with position variance `σ²` centred at `(x0, p0)`.
pub fn gaussian_packet(grid: Grid, spec: PacketSpec) -> Result<GridWavefunction> {
    let dx = grid.dx();
    if !(spec.sigma > 4.0 * dx) {
        return Err(Error::GridTooCoarse { sigma: spec.sigma, dx });
    }
    if !(spec.mass > 0.0) {
        return Err(Error::InvalidArgument(format!("mass {} must be positive", spec.mass)));
    }
    let margin = 6.0 * spec.sigma;
    if spec.x0 - margin < grid.x_min || spec.x0 + margin > grid.x_max {
        return Err(Error::PacketClipped { edge: f64::NAN });
    }
    let amplitudes: Vec<C64> = grid
        .positions()
        .into_iter()
        .map(|x| {
            let u = x - spec.x0;
            let envelope = (-u * u / (4.0 * spec.sigma * spec.sigma)).exp();
            C64::from_polar(envelope, spec.p0 * x + spec.chirp * u * u)
        })
        .collect();
    let mut psi = GridWavefunction { grid, amplitudes, mass: spec.mass };
    psi.normalize()?;
    psi.require_inside()?;
    Ok(psi)
}

impl GridWavefunction {
    /// `Σ |ψ(x_j)|² Δx`
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Norm computed in the momentum representation (discrete Parseval).
    pub fn momentum_norm_sq(&self) -> f64 {
        let phi = Transforms::new(self.grid.n_points).to_momentum(&self.amplitudes);
        phi.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx() / self.grid.n_points as f64
    }

    fn normalize(&mut self) -> Result<f64> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("wavefunction vanishes on the grid".into()));
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(n)
    }

    /// Largest `|ψ|` among the outermost grid points.
    pub fn edge_amplitude(&self) -> f64 {
        let n = self.amplitudes.len();
        let k = EDGE_POINTS.min(n / 2);
        self.amplitudes[..k]
            .iter()
            .chain(&self.amplitudes[n - k..])
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    fn require_inside(&self) -> Result<()> {
        let edge = self.edge_amplitude();
        if edge > EDGE_LIMIT {
            return Err(Error::PacketClipped { edge });
        }
        Ok(())
    }

    /// Exact free evolution over `t` (kinetic phase `e^{−i p² t / 2m}`).
    pub fn free_evolve(&self, t: f64) -> Self {
        let ft = Transforms::new(self.grid.n_points);
        let mut phi = ft.to_momentum(&self.amplitudes);
        for (k, c) in phi.iter_mut().enumerate() {
            let p = self.grid.p(k);
            *c *= C64::from_polar(1.0, -p * p * t / (2.0 * self.mass));
        }
        Self { amplitudes: ft.to_position(&phi), ..self.clone() }
    }
}

/// Position and momentum moments of the meter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterMoments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    /// `d/dt Var(q)` from the probability current.
    pub dvar_q_dt: f64,
    /// The same rate from a central difference over exact free evolution.
    pub dvar_q_dt_fd: f64,
}

/// Step used for the free-evolution cross-check of `d/dt Var(q)`.
pub const FD_STEP: f64 = 1e-3;

fn position_moments(psi: &GridWavefunction) -> (f64, f64) {
    let dx = psi.grid.dx();
    let (mut norm, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (j, a) in psi.amplitudes.iter().enumerate() {
        let w = a.norm_sqr() * dx;
        let x = psi.grid.x(j);
        norm += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    let mean = m1 / norm;
    (mean, m2 / norm - mean * mean)
}

pub fn moments(psi: &GridWavefunction) -> MeterMoments {
    let grid = psi.grid;
    let ft = Transforms::new(grid.n_points);
    let phi = ft.to_momentum(&psi.amplitudes);

    let (mut norm_p, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for (k, c) in phi.iter().enumerate() {
        let w = c.norm_sqr();
        let p = grid.p(k);
        norm_p += w;
        p1 += w * p;
        p2 += w * p * p;
    }
    let mean_p = p1 / norm_p;
    let var_p = p2 / norm_p - mean_p * mean_p;

    let (mean_q, var_q) = position_moments(psi);

    // j(x) = Im(ψ* ∂ψ)/m, d/dt Var(q) = 2∫(x − ⟨q⟩) j dx
    let dphi: Vec<C64> = phi.iter().enumerate().map(|(k, c)| c * C64::new(0.0, grid.p(k))).collect();
    let dpsi = ft.to_position(&dphi);
    let dx = grid.dx();
    let norm = psi.norm_sq();
    let rate = psi
        .amplitudes
        .iter()
        .zip(&dpsi)
        .enumerate()
        .map(|(j, (a, d))| (grid.x(j) - mean_q) * (a.conj() * d).im)
        .sum::<f64>()
        * 2.0
        * dx
        / (psi.mass * norm);

    let (_, var_plus) = position_moments(&psi.free_evolve(FD_STEP));
    let (_, var_minus) = position_moments(&psi.free_evolve(-FD_STEP));
    let dvar_q_dt_fd = (var_plus - var_minus) / (2.0 * FD_STEP);

    MeterMoments { mean_q, mean_p, var_q, var_p, dvar_q_dt: rate, dvar_q_dt_fd }
}

/// Meter shifts produced by one coupling + post-selection cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleShifts {
    pub dq: f64,
    pub dp: f64,
    pub acceptance: f64,
    pub before: MeterMoments,
    pub after: MeterMoments,
}

impl ParticleShifts {
    /// Weak value read back from the shifts, removing the variance-rate term
    /// from `Δ⟨q⟩` with the measured imaginary part.
    pub fn weak_value_estimate(&self, g: f64, mass: f64) -> C64 {
        let im = self.dp / (2.0 * g * self.before.var_p);
        let re = (self.dq - g * im * mass * self.before.dvar_q_dt) / g;
        C64::new(re, im)
    }
}

/// First-order shifts: `Δ⟨q⟩ = g Re⟨A⟩_w + g Im⟨A⟩_w · m · d/dt Var(q)` and
/// `Δ⟨p⟩ = 2 g Im⟨A⟩_w Var(p)`.
pub fn predicted_shifts(weak_value: C64, g: f64, before: &MeterMoments, mass: f64) -> (f64, f64) {
    let dq = g * weak_value.re + g * weak_value.im * mass * before.dvar_q_dt;
    let dp = 2.0 * g * weak_value.im * before.var_p;
    (dq, dp)
}

/// Couples the system to the packet through `exp(−i g A p)`, post-selects
/// `|ψ_f⟩` and reports the change of the meter's mean position and momentum.
pub fn particle_weak_protocol(
    psi_i: &PureState,
    a: &ComplexMatrix,
    psi_f: &PureState,
    g: f64,
    packet: &GridWavefunction,
) -> Result<ParticleShifts> {
    if a.dim() != psi_i.dim() || a.dim() != psi_f.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: psi_i.dim().max(psi_f.dim()) });
    }
    if !g.is_finite() {
        return Err(Error::InvalidCoupling(g));
    }
    let (eigenvalues, eigenvectors) = a.eigh()?;
    let grid = packet.grid;
    let ft = Transforms::new(grid.n_points);
    let phi = ft.to_momentum(&packet.amplitudes);

    let mut out = vec![C64::new(0.0, 0.0); grid.n_points];
    for (k, &a_k) in eigenvalues.iter().enumerate() {
        let v = PureState::normalized(eigenvectors.column(k))?;
        let weight = psi_f.inner(&v) * v.inner(psi_i);
        let shift = g * a_k;
        for (slot, (j, c)) in out.iter_mut().zip(phi.iter().enumerate()) {
            *slot += weight * c * C64::from_polar(1.0, -grid.p(j) * shift);
        }
    }
    let mut meter = GridWavefunction { grid, amplitudes: ft.to_position(&out), mass: packet.mass };
    let acceptance = meter.norm_sq() / packet.norm_sq();
    if acceptance < tol::DIVERGENCE {
        return Err(Error::PostSelectionImpossible { acceptance });
    }
    meter.normalize()?;
    meter.require_inside()?;

    let before = moments(packet);
    let after = moments(&meter);
    Ok(ParticleShifts {
        dq: after.mean_q - before.mean_q,
        dp: after.mean_p - before.mean_p,
        acceptance,
        before,
        after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{sigma_y, sigma_z, BlochVector};
    use crate::weakvalue::weak_value_pure;

    fn ket(r: BlochVector) -> PureState {
        PureState::from_bloch(r).unwrap()
    }

    fn packet(chirp: f64) -> GridWavefunction {
        gaussian_packet(Grid::default(), PacketSpec { chirp, ..PacketSpec::default() }).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1000, -1.0, 1.0).is_err());
        assert!(Grid::new(1024, 1.0, -1.0).is_err());
        let g = Grid::new(8, -1.0, 1.0);
        assert!(g.is_err());
    }

    #[test]
    fn packet_rejects_coarse_or_clipped() {
        let coarse = Grid::new(64, -40.0, 40.0).unwrap();
        assert!(matches!(gaussian_packet(coarse, PacketSpec::default()), Err(Error::GridTooCoarse { .. })));
        let spec = PacketSpec { x0: 36.0, ..PacketSpec::default() };
        assert!(matches!(gaussian_packet(Grid::default(), spec), Err(Error::PacketClipped { .. })));
    }

    #[test]
    fn unchirped_packet_moments() {
        let psi = packet(0.0);
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        let m = moments(&psi);
        assert!(m.mean_p.abs() < 1e-10);
        assert!((m.var_q - 1.0).abs() < 1e-6);
        assert!((m.var_p - 0.25).abs() < 1e-6);
        assert!(m.dvar_q_dt.abs() < 1e-8);
        assert!(m.dvar_q_dt_fd.abs() < 1e-8);
        assert!(m.var_q * m.var_p >= 0.25 - 1e-6);
    }

    #[test]
    fn boosted_packet_mean_momentum() {
        let psi = gaussian_packet(Grid::default(), PacketSpec { p0: 0.5, ..PacketSpec::default() }).unwrap();
        assert!((moments(&psi).mean_p - 0.5).abs() < 1e-6);
    }

    #[test]
    fn chirp_sets_variance_rate() {
        // Local momentum 2c(x − x0) gives ⟨{q, p}⟩ = 4cσ², so d/dt Var(q) = 4cσ²/m.
        let c = 0.1;
        let m = moments(&packet(c));
        assert!((m.dvar_q_dt - 4.0 * c).abs() < 1e-8, "{}", m.dvar_q_dt);
        assert!(((m.dvar_q_dt - m.dvar_q_dt_fd) / m.dvar_q_dt).abs() < 1e-5);
    }

    #[test]
    fn free_evolution_of_focused_packet_spreads() {
        let psi = packet(0.0);
        let later = moments(&psi.free_evolve(0.5));
        assert!(later.var_q > 1.0);
        // Var(q)(t) = σ² + t² Var(p)/m² for an unchirped packet.
        assert!((later.var_q - (1.0 + 0.25 * 0.25)).abs() < 1e-8);
    }

    #[test]
    fn parseval() {
        let psi = packet(0.3);
        assert!((psi.norm_sq() - psi.momentum_norm_sq()).abs() < 1e-10);
    }

    #[test]
    fn eigenstate_selection_translates_classically() {
        let z = ket(BlochVector::Z);
        let s = particle_weak_protocol(&z, &sigma_z(), &z, 1e-3, &packet(0.0)).unwrap();
        assert!((s.dq - 1e-3).abs() < 1e-6);
        assert!(s.dp.abs() < 1e-8);
        assert!((s.acceptance - 1.0).abs() < 1e-12);
        assert!((s.after.var_p - s.before.var_p).abs() < 1e-10);
    }

    #[test]
    fn imaginary_weak_value_shifts_momentum() {
        let g = 1e-3;
        let s = particle_weak_protocol(&ket(BlochVector::Z), &sigma_y(), &ket(BlochVector::X), g, &packet(0.0)).unwrap();
        assert!(((s.dp - 5e-4) / 5e-4).abs() < 1e-4, "{}", s.dp);
        assert!(s.dq.abs() < 1e-6);
    }

    #[test]
    fn chirped_packet_picks_up_variance_rate_term() {
        let (psi_i, psi_f) = (ket(BlochVector::Z), ket(BlochVector::X));
        let g = 1e-3;
        let meter = packet(0.1);
        let s = particle_weak_protocol(&psi_i, &sigma_y(), &psi_f, g, &meter).unwrap();
        let wv = weak_value_pure(&sigma_y(), &psi_i, &psi_f).unwrap().value;
        let (dq, dp) = predicted_shifts(wv, g, &s.before, meter.mass);
        assert!((dq - 4e-4).abs() < 1e-12);
        assert!(((s.dq - dq) / dq).abs() < 1e-4, "{} vs {dq}", s.dq);
        assert!(((s.dp - dp) / dp).abs() < 1e-4);
    }

    #[test]
    fn residual_shrinks_quadratically_for_boosted_packet() {
        let psi_i = ket(BlochVector::new(0.3, -0.4, 0.866_025_403_784_438_6));
        let psi_f = ket(BlochVector::new(0.8, 0.6, 0.0));
        let a = crate::qops::pauli_axis(BlochVector::new(0.48, 0.6, 0.64)).unwrap();
        let wv = weak_value_pure(&a, &psi_i, &psi_f).unwrap().value;
        // A qubit observable has a spectrum symmetric about its mean, so a
        // parity-even packet makes the shifts odd in g. The boost breaks that.
        let spec = PacketSpec { p0: 0.5, chirp: 0.1, ..PacketSpec::default() };
        let meter = gaussian_packet(Grid::default(), spec).unwrap();
        let residual = |g: f64| {
            let s = particle_weak_protocol(&psi_i, &a, &psi_f, g, &meter).unwrap();
            let (dq, dp) = predicted_shifts(wv, g, &s.before, meter.mass);
            (s.dq - dq).abs() + (s.dp - dp).abs()
        };
        let (r1, r2) = (residual(2e-3), residual(1e-3));
        assert!((r1 / r2 - 4.0).abs() < 1.0, "ratio {}", r1 / r2);
    }

    #[test]
    fn shifts_are_stable_under_grid_refinement() {
        let spec = PacketSpec { p0: 0.5, chirp: 0.1, ..PacketSpec::default() };
        let (psi_i, psi_f) = (ket(BlochVector::Z), ket(BlochVector::X));
        let run = |grid: Grid| {
            let meter = gaussian_packet(grid, spec).unwrap();
            particle_weak_protocol(&psi_i, &sigma_y(), &psi_f, 1e-3, &meter).unwrap()
        };
        let (coarse, fine) = (run(Grid::default()), run(Grid::default().refined()));
        assert!((coarse.dq - fine.dq).abs() < 1e-10);
        assert!((coarse.dp - fine.dp).abs() < 1e-10);
    }

    #[test]
    fn translation_too_large_is_clipped() {
        let spec = PacketSpec { x0: 30.0, ..PacketSpec::default() };
        let psi = gaussian_packet(Grid::default(), spec).unwrap();
        let z = ket(BlochVector::Z);
        assert!(matches!(
            particle_weak_protocol(&z, &sigma_z(), &z, 5.0, &psi),
            Err(Error::PacketClipped { .. })
        ));
    }

    #[test]
    fn orthogonal_selection_is_impossible() {
        let z = ket(BlochVector::Z);
        let down = ket(-BlochVector::Z);
        assert!(matches!(
            particle_weak_protocol(&z, &sigma_z(), &down, 1e-3, &packet(0.0)),
            Err(Error::PostSelectionImpossible { .. })
        ));
    }
}
