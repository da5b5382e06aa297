//! Reproduction checks, one per acceptance criterion. Each returns a report
//! made of named sub-checks; `weakmeter check` and the `acceptance` test
//! target both print one line per criterion.
//!
//! Every check draws from its own fixed seed, so the lines are reproducible.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weakmeter::meter_sim::{
    conditional_expectation, couple_and_postselect, estimate_weak_value_with, first_order_readout, MeterSetup,
};
use weakmeter::particle_meter::{
    gaussian_packet, particle_weak_protocol, predicted_shifts, Grid, GridWavefunction, PacketSpec,
};
use weakmeter::qops::{
    pauli_axis, random_axis, random_density, random_pure, BlochVector, ComplexMatrix, PureState, C64,
};
use weakmeter::shots::{convergence_curve, ShotScenario};
use weakmeter::weakvalue::{
    polar_decompose, product_observable, product_weak_value, two_qubit_mixed_weak_value, w_vector,
    weak_value_bloch, weak_value_mixed, weak_value_pure, werner_density, werner_weak_value, ProductSelection,
    TwoQubitBloch,
};
use weakmeter::Error;

/// Pinned tolerances and sample sizes.
pub mod limits {
    pub const CLOSED_FORM: f64 = 1e-12;
    pub const FACTORIZATION: f64 = 1e-12;
    pub const TWO_QUBIT_COMPONENT: f64 = 1e-10;
    pub const WERNER: f64 = 1e-12;
    /// Log-log slope window for an estimator error that is first order in g.
    pub const SLOPE: (f64, f64) = (0.7, 1.3);
    /// Halving g must divide a second-order residual by 4 ± 1.
    pub const HALVING: (f64, f64) = (3.0, 5.0);
    pub const BOUND_SLACK: f64 = 1e-9;
    pub const PARTICLE_DP_RELATIVE: f64 = 1e-4;
    pub const PARTICLE_DQ_ABSOLUTE: f64 = 1e-6;
    pub const PARTICLE_CHIRP_RELATIVE: f64 = 1e-3;
    pub const SHOT_SIGMAS: f64 = 4.0;
    pub const SHOT_COVERAGE: usize = 95;
    pub const SHOT_SCALING: f64 = 0.10;
    /// Random qubit selections with smaller `|⟨ψ_f|ψ_i⟩|²` are skipped;
    /// near-orthogonal pairs inflate absolute errors.
    pub const MIN_OVERLAP: f64 = 0.05;
    /// Readout axes with smaller `|q̂·m̂|` are skipped by the residual-order check.
    pub const MIN_READOUT_PROJECTION: f64 = 0.1;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Set when the failure is understood and documented rather than a defect.
    pub known_deviation: Option<String>,
}

impl SubCheck {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail, known_deviation: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<SubCheck>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Failures without a documented explanation.
    pub fn unexplained_failures(&self) -> Vec<&SubCheck> {
        self.checks.iter().filter(|c| !c.passed && c.known_deviation.is_none()).collect()
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "criterion {} {status}: {}", self.id, self.title)?;
        for c in &self.checks {
            write!(f, " | {} {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail)?;
            if let Some(why) = &c.known_deviation {
                write!(f, " (known deviation: {why})")?;
            }
        }
        Ok(())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ket(r: BlochVector) -> PureState {
    PureState::from_bloch(r).expect("unit Bloch vector")
}

/// Pure-state overlap `(1 + r_i·r_f)/2`.
fn overlap(ri: BlochVector, rf: BlochVector) -> f64 {
    (1.0 + ri.dot(rf)) / 2.0
}

fn perpendicular_to<R: Rng>(n: BlochVector, r: &mut R) -> BlochVector {
    loop {
        let v = random_axis(r);
        if let Some(u) = (v - n * v.dot(n)).normalized() {
            if (v - n * v.dot(n)).norm() > 0.1 {
                return u;
            }
        }
    }
}

fn random_hermitian<R: Rng>(dim: usize, r: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    &g + &g.adjoint()
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn in_window(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

pub fn criterion_1() -> CriterionReport {
    let mut r = rng(101);
    let (mut direct_err, mut polar_err, mut n) = (0.0f64, 0.0f64, 0);
    while n < 1000 {
        let (ri, rf, axis) = (random_axis(&mut r), random_axis(&mut r), random_axis(&mut r));
        if overlap(ri, rf) < limits::MIN_OVERLAP {
            continue;
        }
        n += 1;
        let closed = weak_value_bloch(axis, ri, rf).expect("non-orthogonal selection").value;
        let direct = weak_value_pure(&pauli_axis(axis).unwrap(), &ket(ri), &ket(rf)).unwrap().value;
        direct_err = direct_err.max((closed - direct).norm());
        let w = w_vector(ri, rf).unwrap();
        polar_err = polar_err.max(polar_decompose(ri, rf).unwrap().to_w_vector().max_abs_diff(&w));
    }
    CriterionReport {
        id: 1,
        title: "closed-form equivalence",
        checks: vec![
            SubCheck::new(
                "n·w vs direct",
                direct_err < limits::CLOSED_FORM,
                format!("max error {direct_err:.2e} over {n} selections (limit {:.0e})", limits::CLOSED_FORM),
            ),
            SubCheck::new(
                "polar reconstruction",
                polar_err < limits::CLOSED_FORM,
                format!("max error {polar_err:.2e} (limit {:.0e})", limits::CLOSED_FORM),
            ),
        ],
    }
}

pub fn criterion_2() -> CriterionReport {
    let mut r = rng(202);
    let (mut product_err, mut re_err, mut n) = (0.0f64, 0.0f64, 0);
    while n < 1000 {
        let sel = ProductSelection {
            a_pre: random_axis(&mut r),
            a_post: random_axis(&mut r),
            b_pre: random_axis(&mut r),
            b_post: random_axis(&mut r),
        };
        if overlap(sel.a_pre, sel.a_post) < limits::MIN_OVERLAP || overlap(sel.b_pre, sel.b_post) < limits::MIN_OVERLAP {
            continue;
        }
        n += 1;
        let (na, nb) = (random_axis(&mut r), random_axis(&mut r));
        let product = product_weak_value(na, nb, &sel).unwrap();
        let direct = weak_value_pure(
            &product_observable(na, nb).unwrap(),
            &sel.pre_state().unwrap(),
            &sel.post_state().unwrap(),
        )
        .unwrap()
        .value;
        product_err = product_err.max((product.result.value - direct).norm());
        re_err = re_err.max((product.re_from_parts() - direct.re).abs());
    }
    CriterionReport {
        id: 2,
        title: "factorization",
        checks: vec![
            SubCheck::new(
                "product vs 4x4",
                product_err < limits::FACTORIZATION,
                format!("max error {product_err:.2e} over {n} selections (limit {:.0e})", limits::FACTORIZATION),
            ),
            SubCheck::new(
                "Re decomposition",
                re_err < limits::FACTORIZATION,
                format!("max error {re_err:.2e} (limit {:.0e})", limits::FACTORIZATION),
            ),
        ],
    }
}

pub fn criterion_3() -> CriterionReport {
    let mut r = rng(303);
    let mut component_err = 0.0f64;
    for _ in 0..500 {
        let pre = TwoQubitBloch::from_density(&random_density(4, &mut r).unwrap()).unwrap();
        let post = TwoQubitBloch::from_density(&random_density(4, &mut r).unwrap()).unwrap();
        let (na, nb) = (random_axis(&mut r), random_axis(&mut r));
        let component = two_qubit_mixed_weak_value(na, nb, &pre, &post).unwrap().value;
        let trace = weak_value_mixed(&product_observable(na, nb).unwrap(), &pre.to_density(), &post.to_density())
            .unwrap()
            .value;
        component_err = component_err.max((component - trace).norm());
    }

    let lambdas = [-1.0, -0.6, -0.2, 0.0, 0.15, 0.3, 1.0 / 3.0];
    let (mut werner_err, mut pairs, mut divergent_ok) = (0.0f64, 0, true);
    for &li in &lambdas {
        for &lf in &lambdas {
            let (na, nb) = (random_axis(&mut r), random_axis(&mut r));
            let closed = werner_weak_value(li, lf, na, nb);
            let trace = weak_value_mixed(
                &product_observable(na, nb).unwrap(),
                &werner_density(li).unwrap(),
                &werner_density(lf).unwrap(),
            );
            match (closed, trace) {
                (Ok(c), Ok(t)) => {
                    werner_err = werner_err.max((c.value - t.value).norm());
                    pairs += 1;
                }
                (Err(Error::OrthogonalSelection { .. }), Err(Error::OrthogonalSelection { .. })) => {}
                _ => divergent_ok = false,
            }
        }
    }

    let third = 1.0 / 3.0;
    let aligned = werner_weak_value(third, third, BlochVector::Z, BlochVector::Z).unwrap().value;
    let mut literal = SubCheck::new(
        "re_value 0.5 at λi=λf=1/3",
        (aligned.re - 0.5).abs() < limits::WERNER,
        format!("closed form and trace oracle both give {:.15}", aligned.re),
    );
    if !literal.passed {
        literal.known_deviation = Some(
            "Tr{ρ_f (σ_z⊗σ_z) ρ_i}/Tr{ρ_f ρ_i} = (1/12)/(1/4) = 1/3 for these Werner states; 0.5 is \
             what the Werner expression gives when the −2λfλi ε-contraction term is dropped"
                .into(),
        );
    }

    CriterionReport {
        id: 3,
        title: "mixed-state consistency",
        checks: vec![
            SubCheck::new(
                "component vs trace",
                component_err < limits::TWO_QUBIT_COMPONENT,
                format!("max error {component_err:.2e} over 500 pairs (limit {:.0e})", limits::TWO_QUBIT_COMPONENT),
            ),
            SubCheck::new(
                "Werner vs trace",
                werner_err < limits::WERNER && divergent_ok,
                format!(
                    "max error {werner_err:.2e} over {pairs} λ pairs, orthogonal pairs diverge in both: {divergent_ok} \
                     (limit {:.0e})",
                    limits::WERNER
                ),
            ),
            literal,
        ],
    }
}

/// A random qubit scenario `(ψ_i, ψ_f, n̂_A, m̂, n̂)` with `m̂ ⊥ n̂`.
struct QubitInstance {
    ri: BlochVector,
    rf: BlochVector,
    a: ComplexMatrix,
    wv: C64,
    m: BlochVector,
    n: BlochVector,
}

fn qubit_instance<R: Rng>(r: &mut R, max_weak_value: f64) -> QubitInstance {
    loop {
        let (ri, rf, axis) = (random_axis(r), random_axis(r), random_axis(r));
        if overlap(ri, rf) < limits::MIN_OVERLAP {
            continue;
        }
        let wv = weak_value_bloch(axis, ri, rf).unwrap().value;
        if wv.norm() > max_weak_value {
            continue;
        }
        let n = random_axis(r);
        let m = perpendicular_to(n, r);
        return QubitInstance { ri, rf, a: pauli_axis(axis).unwrap(), wv, m, n };
    }
}

pub fn criterion_4() -> CriterionReport {
    let mut r = rng(404);
    let gs: Vec<f64> = (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    let (mut first_order, mut vanishing, mut slope_ok) = (0, 0, 0);
    let (mut min_slope, mut max_slope) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..200 {
        // g_max·|⟨A⟩_w| ≤ 0.2 keeps every point inside the weak regime.
        let inst = qubit_instance(&mut r, 2.0);
        let errors: Vec<f64> = gs
            .iter()
            .map(|&g| {
                let est = estimate_weak_value_with(&ket(inst.ri), &inst.a, &ket(inst.rf), inst.m, inst.n, g).unwrap();
                (est.value - inst.wv).norm()
            })
            .collect();
        let slope = log_log_slope(&gs, &errors);
        min_slope = min_slope.min(slope);
        max_slope = max_slope.max(slope);
        // error/g tends to a constant when the O(g) coefficient is non-zero and
        // halves with g when it vanishes.
        let ratio = (errors[0] / gs[0]) / (errors[1] / gs[1]);
        let has_first_order = ratio > (gs[0] / gs[1] + 1.0) / 2.0;
        if has_first_order {
            first_order += 1;
            slope_ok += in_window(slope, limits::SLOPE) as usize;
        } else {
            vanishing += 1;
            slope_ok += (slope >= limits::SLOPE.0) as usize;
        }
    }

    let mut r = rng(405);
    let halvings = [1e-2, 5e-3, 2.5e-3];
    let (mut residual_ok, mut min_ratio, mut max_ratio) = (0, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..200 {
        let inst = qubit_instance(&mut r, 5.0);
        // The leading residual is proportional to q̂·m̂; near-zero values leave
        // the g³ term dominant at g = 1e-2.
        let q = loop {
            let q = random_axis(&mut r);
            if q.dot(inst.m).abs() >= limits::MIN_READOUT_PROJECTION {
                break q;
            }
        };
        let residuals: Vec<f64> = halvings
            .iter()
            .map(|&g| {
                let setup = MeterSetup::new(inst.m, inst.n, q, g).unwrap();
                let run = couple_and_postselect(&ket(inst.ri), &inst.a, &setup, &ket(inst.rf)).unwrap();
                (conditional_expectation(&run, q).unwrap() - first_order_readout(&setup, inst.wv)).abs()
            })
            .collect();
        let ratios = [residuals[0] / residuals[1], residuals[1] / residuals[2]];
        min_ratio = min_ratio.min(ratios[0].min(ratios[1]));
        max_ratio = max_ratio.max(ratios[0].max(ratios[1]));
        residual_ok += ratios.iter().all(|&x| in_window(x, limits::HALVING)) as usize;
    }

    CriterionReport {
        id: 4,
        title: "meter-protocol convergence",
        checks: vec![
            SubCheck::new(
                "estimator slope",
                slope_ok == 200,
                format!(
                    "{slope_ok}/200 in range; {first_order} instances with an O(g) error term need slope in \
                     [{}, {}], {vanishing} with a vanishing O(g) term need slope ≥ {}; observed slopes \
                     [{min_slope:.3}, {max_slope:.3}]",
                    limits::SLOPE.0,
                    limits::SLOPE.1,
                    limits::SLOPE.0
                ),
            ),
            SubCheck::new(
                "readout residual order",
                residual_ok == 200,
                format!(
                    "{residual_ok}/200 instances with both halving ratios in [{}, {}]; observed [{min_ratio:.3}, \
                     {max_ratio:.3}]",
                    limits::HALVING.0,
                    limits::HALVING.1
                ),
            ),
        ],
    }
}

pub fn criterion_5() -> CriterionReport {
    let mut r = rng(505);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for k in 0..10_000 {
        let dim = if k % 2 == 0 { 2 } else { 4 };
        let a = random_hermitian(dim, &mut r);
        let result = if k % 4 < 2 {
            let (i, f) = (random_pure(dim, &mut r).unwrap(), random_pure(dim, &mut r).unwrap());
            weak_value_pure(&a, &i, &f)
        } else {
            let (ri, rf) = (random_density(dim, &mut r).unwrap(), random_density(dim, &mut r).unwrap());
            weak_value_mixed(&a, &ri, &rf)
        };
        match result {
            Ok(wv) => {
                worst = worst.max(wv.value.norm() / wv.bound);
                violations += !wv.within_bound(limits::BOUND_SLACK) as usize;
            }
            Err(Error::OrthogonalSelection { .. }) => {}
            Err(e) => panic!("unexpected error in bound sweep: {e}"),
        }
    }

    let z = BlochVector::Z;
    let orthogonal_pure = weak_value_pure(&pauli_axis(BlochVector::X).unwrap(), &ket(z), &ket(-z));
    let anti_parallel = weak_value_bloch(BlochVector::X, z, -z);
    let orthogonal_mixed = weak_value_mixed(
        &pauli_axis(BlochVector::X).unwrap(),
        &ket(z).projector(),
        &ket(-z).projector(),
    );
    let werner = werner_weak_value(1.0 / 3.0, -1.0, z, z);
    let raised = [
        matches!(orthogonal_pure, Err(Error::OrthogonalSelection { .. })),
        matches!(anti_parallel, Err(Error::AntiParallel { .. })),
        matches!(orthogonal_mixed, Err(Error::OrthogonalSelection { .. })),
        matches!(werner, Err(Error::OrthogonalSelection { .. })),
    ];

    CriterionReport {
        id: 5,
        title: "bounds",
        checks: vec![
            SubCheck::new(
                "no violations",
                violations == 0,
                format!("{violations} violations over 10000 pure/mixed sweeps; max |value|/bound {worst:.4}"),
            ),
            SubCheck::new(
                "divergence raised",
                raised.iter().all(|&b| b),
                format!("orthogonal pure/anti-parallel Bloch/orthogonal mixed/Werner singular: {raised:?}"),
            ),
        ],
    }
}

fn particle_instances<R: Rng>(r: &mut R, count: usize) -> Vec<(PureState, ComplexMatrix, PureState, C64)> {
    let mut out = Vec::new();
    while out.len() < count {
        let (ri, rf, axis) = (random_axis(r), random_axis(r), random_axis(r));
        if overlap(ri, rf) < 0.1 {
            continue;
        }
        let wv = weak_value_bloch(axis, ri, rf).unwrap().value;
        if wv.im.abs() < 0.1 || wv.norm() > 5.0 {
            continue;
        }
        out.push((ket(ri), pauli_axis(axis).unwrap(), ket(rf), wv));
    }
    out
}

pub fn criterion_6() -> CriterionReport {
    let g = 1e-3;
    let mut r = rng(606);
    let instances = particle_instances(&mut r, 8);
    let plain = gaussian_packet(Grid::default(), PacketSpec::default()).unwrap();

    let (mut dp_err, mut dq_err) = (0.0f64, 0.0f64);
    for (i, a, f, wv) in &instances {
        let s = particle_weak_protocol(i, a, f, g, &plain).unwrap();
        let (_, dp) = predicted_shifts(*wv, g, &s.before, plain.mass);
        dp_err = dp_err.max(((s.dp - dp) / dp).abs());
        dq_err = dq_err.max((s.dq - g * wv.re).abs());
    }

    // With mass 2 the candidate coefficients m, 1 and 1/m of the variance-rate
    // term all differ; only one can match the simulated shift.
    let mass = 2.0;
    let chirped = gaussian_packet(Grid::default(), PacketSpec { chirp: 0.1, mass, ..PacketSpec::default() }).unwrap();
    let mut fit = [0.0f64; 3];
    for (i, a, f, wv) in &instances {
        let s = particle_weak_protocol(i, a, f, g, &chirped).unwrap();
        let term = g * wv.im * s.before.dvar_q_dt;
        for (slot, coefficient) in fit.iter_mut().zip([mass, 1.0, 1.0 / mass]) {
            let predicted = g * wv.re + coefficient * term;
            *slot = slot.max(((s.dq - predicted) / (mass * term)).abs());
        }
    }
    let chirp_ok = fit[0] < limits::PARTICLE_CHIRP_RELATIVE && fit[1] > 0.1 && fit[2] > 0.1;

    // A boost breaks the parity that otherwise removes the O(g²) residual.
    let boosted = gaussian_packet(Grid::default(), PacketSpec { p0: 0.5, chirp: 0.1, ..PacketSpec::default() }).unwrap();
    let residual = |packet: &GridWavefunction, i: &PureState, a: &ComplexMatrix, f: &PureState, wv: C64, g: f64| {
        let s = particle_weak_protocol(i, a, f, g, packet).unwrap();
        let (dq, dp) = predicted_shifts(wv, g, &s.before, packet.mass);
        (s.dq - dq).abs() + (s.dp - dp).abs()
    };
    let ratios: Vec<f64> = instances
        .iter()
        .map(|(i, a, f, wv)| residual(&boosted, i, a, f, *wv, 2e-3) / residual(&boosted, i, a, f, *wv, 1e-3))
        .collect();
    let ratios_ok = ratios.iter().all(|&x| in_window(x, limits::HALVING));

    CriterionReport {
        id: 6,
        title: "free-particle meter",
        checks: vec![
            SubCheck::new(
                "Δp = 2g Im Var(p)",
                dp_err < limits::PARTICLE_DP_RELATIVE,
                format!("max relative error {dp_err:.2e} (limit {:.0e})", limits::PARTICLE_DP_RELATIVE),
            ),
            SubCheck::new(
                "unchirped Δq = g Re",
                dq_err < limits::PARTICLE_DQ_ABSOLUTE,
                format!("max error {dq_err:.2e} (limit {:.0e})", limits::PARTICLE_DQ_ABSOLUTE),
            ),
            SubCheck::new(
                "variance-rate coefficient",
                chirp_ok,
                format!(
                    "relative misfit with coefficient m {:.2e}, 1 {:.2e}, 1/m {:.2e} (mass {mass})",
                    fit[0], fit[1], fit[2]
                ),
            ),
            SubCheck::new(
                "residual order",
                ratios_ok,
                format!(
                    "halving ratios [{:.3}, {:.3}] on a boosted packet",
                    ratios.iter().cloned().fold(f64::INFINITY, f64::min),
                    max(ratios.iter().cloned())
                ),
            ),
        ],
    }
}

pub fn criterion_7() -> CriterionReport {
    let psi_i = ket(BlochVector::Z);
    let psi_f = ket(BlochVector::new(0.6, 0.8, 0.0));
    let a = pauli_axis(BlochVector::new(0.48, 0.6, 0.64)).unwrap();
    let (m, n) = MeterSetup::default_axes();
    let g = 0.05;
    let mut checks = Vec::new();
    for (label, setup) in [("re", MeterSetup::re_mode(m, n, g).unwrap()), ("im", MeterSetup::im_mode(m, n, g).unwrap())] {
        let scenario = ShotScenario::pure(&psi_i, &a, &psi_f, &setup).unwrap();
        let exact = scenario.exact_estimate();
        let covered = (0..100u64)
            .filter(|&seed| {
                let s = scenario.sample(100_000, 7000 + seed).unwrap();
                (s.estimate - exact).abs() <= limits::SHOT_SIGMAS * s.std_error
            })
            .count();
        checks.push(SubCheck::new(
            &format!("{label} coverage"),
            covered >= limits::SHOT_COVERAGE,
            format!("{covered}/100 batches within {}σ of {exact:.6}", limits::SHOT_SIGMAS),
        ));
        let curve = convergence_curve(&scenario, &[1_000, 10_000, 100_000], 77).unwrap();
        let ratios: Vec<f64> = curve.windows(2).map(|w| w[0].std_error / w[1].std_error).collect();
        let scaling_ok =
            ratios.iter().all(|&x| ((x - 10f64.sqrt()) / 10f64.sqrt()).abs() <= limits::SHOT_SCALING);
        checks.push(SubCheck::new(
            &format!("{label} 1/√n"),
            scaling_ok,
            format!("std_error ratios {:.3}, {:.3} (expected √10 ± 10%)", ratios[0], ratios[1]),
        ));
    }
    CriterionReport { id: 7, title: "shot layer", checks }
}

pub fn criterion_8() -> CriterionReport {
    let mut r = rng(808);
    let readout_change = |ri: BlochVector, a: &ComplexMatrix, rf: BlochVector, m: BlochVector, n: BlochVector, g: f64| {
        let setup = MeterSetup::new(m, n, n, g).unwrap();
        let run = couple_and_postselect(&ket(ri), a, &setup, &ket(rf)).unwrap();
        conditional_expectation(&run, n).unwrap() - n.dot(m)
    };

    // Real weak values: the observable axis lies in the plane of r̂_i and r̂_f.
    let (g0, mut real_ok, mut real_worst) = (5e-3, 0, 0.0f64);
    let mut count = 0;
    while count < 50 {
        let (ri, rf) = (random_axis(&mut r), random_axis(&mut r));
        if overlap(ri, rf) < limits::MIN_OVERLAP || ri.cross(rf).norm() < 0.1 {
            continue;
        }
        let Some(axis) = (ri * r.random_range(-1.0..1.0) + rf * r.random_range(-1.0..1.0)).normalized() else {
            continue;
        };
        count += 1;
        let a = pauli_axis(axis).unwrap();
        let wv = weak_value_pure(&a, &ket(ri), &ket(rf)).unwrap().value;
        let (m, n) = (random_axis(&mut r), random_axis(&mut r));
        let (c1, c2) = (readout_change(ri, &a, rf, m, n, g0), readout_change(ri, &a, rf, m, n, 2.0 * g0));
        real_worst = real_worst.max(c1.abs() / g0);
        let second_order = c1.abs() < 1e-13 || (c2 / c1).abs() >= limits::HALVING.0;
        real_ok += (wv.im.abs() < 1e-12 && second_order) as usize;
    }

    // Im⟨A⟩_w = 1: perpendicular r̂_i, r̂_f with A along r̂_i × r̂_f.
    let (mut imag_ok, mut imag_worst) = (0, 0.0f64);
    for _ in 0..50 {
        let ri = random_axis(&mut r);
        let rf = perpendicular_to(ri, &mut r);
        let a = pauli_axis(ri.cross(rf)).unwrap();
        let wv = weak_value_pure(&a, &ket(ri), &ket(rf)).unwrap().value;
        let n = random_axis(&mut r);
        let m = perpendicular_to(n, &mut r);
        let g = 1e-3;
        let (d1, d2) = (readout_change(ri, &a, rf, m, n, g) - 2.0 * g, readout_change(ri, &a, rf, m, n, 2.0 * g) - 4.0 * g);
        imag_worst = imag_worst.max(d1.abs() / (2.0 * g));
        let second_order = d1.abs() < 1e-13 || (d2 / d1).abs() >= limits::HALVING.0;
        imag_ok += ((wv - C64::new(0.0, 1.0)).norm() < 1e-12 && second_order && d1.abs() < 1e-2 * 2.0 * g) as usize;
    }

    CriterionReport {
        id: 8,
        title: "QND anomaly",
        checks: vec![
            SubCheck::new(
                "real weak value",
                real_ok == 50,
                format!("{real_ok}/50 with readout change O(g²); max |change|/g at g={g0}: {real_worst:.2e}"),
            ),
            SubCheck::new(
                "Im = 1",
                imag_ok == 50,
                format!("{imag_ok}/50 with change 2g + O(g²); max relative deviation at g=1e-3: {imag_worst:.2e}"),
            ),
        ],
    }
}

pub fn all() -> Vec<CriterionReport> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ]
}
