//! Finite-shot sampling of the post-selected qubit-meter experiment.
//!
//! Each trial first samples whether the system passes post-selection, then,
//! if it does, a `±1` outcome of `q̂·σ` on the meter. Both probabilities come
//! from the exact joint evolution in [`crate::meter_sim`].
//!
//! Trials are grouped into fixed-size chunks. Chunk `c` draws from the ChaCha
//! stream `c` of the generator seeded by `seed`, so the outcome of a trial
//! depends only on `(seed, index)` and chunks can run in any order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::meter_sim::{conditional_expectation, couple_and_postselect, couple_and_postselect_mixed, MeterSetup};
use crate::meter_sim::PostSelectedMeter;
use crate::qops::{ComplexMatrix, PureState};
use crate::tol;

/// Trials per RNG stream.
pub const CHUNK_SIZE: u64 = 1 << 16;

/// Aggregated outcome of a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub n_total: u64,
    pub n_accepted: u64,
    /// Accepted trials with meter outcome `+1`.
    pub n_plus: u64,
    /// `(2·n_plus/n_accepted − 1) / 2g`
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl TrialStats {
    pub fn acceptance_fraction(&self) -> f64 {
        self.n_accepted as f64 / self.n_total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Rejected,
    Plus,
    Minus,
}

/// Exact per-trial probabilities of one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotScenario {
    pub acceptance: f64,
    /// Probability of `+1` given acceptance.
    pub p_plus: f64,
    pub g: f64,
}

impl ShotScenario {
    pub fn new(acceptance: f64, p_plus: f64, g: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&acceptance) || !(0.0..=1.0).contains(&p_plus) {
            return Err(Error::InvalidArgument(format!(
                "probabilities out of range (acceptance {acceptance}, p_plus {p_plus})"
            )));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidCoupling(g));
        }
        Ok(Self { acceptance, p_plus, g })
    }

    pub fn pure(psi_i: &PureState, a: &ComplexMatrix, psi_f: &PureState, meter: &MeterSetup) -> Result<Self> {
        Self::from_run(&couple_and_postselect(psi_i, a, meter, psi_f)?, meter)
    }

    pub fn mixed(rho_i: &ComplexMatrix, a: &ComplexMatrix, p_f: &ComplexMatrix, meter: &MeterSetup) -> Result<Self> {
        Self::from_run(&couple_and_postselect_mixed(rho_i, a, meter, p_f)?, meter)
    }

    fn from_run(run: &PostSelectedMeter, meter: &MeterSetup) -> Result<Self> {
        if run.acceptance < tol::DIVERGENCE {
            // Nothing is ever accepted; the outcome distribution is irrelevant.
            return Self::new(0.0, 0.5, meter.g);
        }
        let readout = conditional_expectation(run, meter.q_axis)?;
        Self::new(run.acceptance.min(1.0), ((1.0 + readout) / 2.0).clamp(0.0, 1.0), meter.g)
    }

    /// Infinite-shot limit of [`TrialStats::estimate`].
    pub fn exact_estimate(&self) -> f64 {
        (2.0 * self.p_plus - 1.0) / (2.0 * self.g)
    }

    fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        rng
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> TrialOutcome {
        let accept: f64 = rng.random();
        let outcome: f64 = rng.random();
        if accept >= self.acceptance {
            TrialOutcome::Rejected
        } else if outcome < self.p_plus {
            TrialOutcome::Plus
        } else {
            TrialOutcome::Minus
        }
    }

    fn chunks(n_total: u64) -> impl ParallelIterator<Item = (u64, u64)> {
        let n_chunks = n_total.div_ceil(CHUNK_SIZE);
        (0..n_chunks).into_par_iter().map(move |c| (c, CHUNK_SIZE.min(n_total - c * CHUNK_SIZE)))
    }

    /// Individual outcomes of trials `0..n_total`, in index order.
    pub fn outcomes(&self, n_total: u64, seed: u64) -> Vec<TrialOutcome> {
        Self::chunks(n_total)
            .flat_map_iter(|(c, len)| {
                let mut rng = Self::chunk_rng(seed, c);
                (0..len).map(move |_| self.draw(&mut rng))
            })
            .collect()
    }

    pub fn sample(&self, n_total: u64, seed: u64) -> Result<TrialStats> {
        let (n_accepted, n_plus) = Self::chunks(n_total)
            .map(|(c, len)| {
                let mut rng = Self::chunk_rng(seed, c);
                let (mut acc, mut plus) = (0u64, 0u64);
                for _ in 0..len {
                    match self.draw(&mut rng) {
                        TrialOutcome::Rejected => {}
                        TrialOutcome::Plus => {
                            acc += 1;
                            plus += 1;
                        }
                        TrialOutcome::Minus => acc += 1,
                    }
                }
                (acc, plus)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        if n_accepted == 0 {
            return Err(Error::NoAcceptedTrials { n_total });
        }
        let p_hat = n_plus as f64 / n_accepted as f64;
        Ok(TrialStats {
            n_total,
            n_accepted,
            n_plus,
            estimate: (2.0 * p_hat - 1.0) / (2.0 * self.g),
            std_error: (p_hat * (1.0 - p_hat) / n_accepted as f64).sqrt() / self.g,
            seed,
        })
    }
}

pub fn run_trials(
    psi_i: &PureState,
    a: &ComplexMatrix,
    psi_f: &PureState,
    meter: &MeterSetup,
    n_total: u64,
    seed: u64,
) -> Result<TrialStats> {
    ShotScenario::pure(psi_i, a, psi_f, meter)?.sample(n_total, seed)
}

pub fn run_trials_mixed(
    rho_i: &ComplexMatrix,
    a: &ComplexMatrix,
    p_f: &ComplexMatrix,
    meter: &MeterSetup,
    n_total: u64,
    seed: u64,
) -> Result<TrialStats> {
    ShotScenario::mixed(rho_i, a, p_f, meter)?.sample(n_total, seed)
}

/// One batch per entry of `n_list`, all drawn with the same seed.
pub fn convergence_curve(scenario: &ShotScenario, n_list: &[u64], seed: u64) -> Result<Vec<TrialStats>> {
    n_list.iter().map(|&n| scenario.sample(n, seed)).collect()
}
