//! Evaluates a scenario into result rows.
//!
//! The analytic weak value is reported once (with an empty `g`), then each
//! coupling in the sweep gets an `exact` row from the qubit-meter simulation
//! (or a `particle` row for the particle meter) and, if requested, a `shots`
//! row. Couplings are evaluated in parallel and merged in sweep order.

use rayon::prelude::*;
use serde::Serialize;
use weakmeter::meter_sim::{estimate_weak_value_mixed, estimate_weak_value_with, MeterSetup};
use weakmeter::particle_meter::{gaussian_packet, particle_weak_protocol, Grid, GridWavefunction};
use weakmeter::qops::{pauli_axis, BlochVector, ComplexMatrix, PureState};
use weakmeter::shots::ShotScenario;
use weakmeter::weakvalue::{
    post_selection_state, product_observable, product_weak_value, two_qubit_mixed_weak_value, weak_value_bloch,
    weak_value_mixed, weak_value_pure, werner_density, werner_weak_value, ProductSelection, TwoQubitBloch,
    WeakValueResult,
};
use weakmeter::Error;

use crate::scenario::{matrix_from_parts, Meter, Observable, Scenario, Shots, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Exact,
    Shots,
    Particle,
}

/// One output row. `None` fields are written empty (CSV) or `null` (JSON).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub g: Option<f64>,
    pub method: Method,
    pub re_value: Option<f64>,
    pub im_value: Option<f64>,
    pub acceptance: Option<f64>,
    pub std_error: Option<f64>,
    pub bound: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<Row>,
    /// The selections are orthogonal; only the analytic row is present.
    pub diverged: bool,
}

#[derive(Debug, thiserror::Error)]
#[error("{context}: {source}")]
pub struct RunError {
    pub context: String,
    #[source]
    pub source: Error,
}

impl RunError {
    fn wrap(context: impl Into<String>) -> impl FnOnce(Error) -> Self {
        let context = context.into();
        move |source| Self { context, source }
    }

    /// Post-selection failures map to exit status 3, numerical trouble to 4.
    pub fn exit_code(&self) -> u8 {
        match self.source {
            Error::OrthogonalSelection { .. }
            | Error::AntiParallel { .. }
            | Error::PostSelectionImpossible { .. }
            | Error::NoAcceptedTrials { .. } => 3,
            _ => 4,
        }
    }
}

enum Selection {
    Pure(PureState, PureState),
    /// Initial density and post-selection operator.
    Mixed(ComplexMatrix, ComplexMatrix),
}

fn vec3(v: [f64; 3]) -> BlochVector {
    BlochVector::from_array(v)
}

fn observable_matrix(obs: &Observable) -> Result<ComplexMatrix, Error> {
    match obs {
        Observable::Axis { axis } => pauli_axis(vec3(*axis)),
        Observable::AxisPair { a, b } => product_observable(vec3(*a), vec3(*b)),
        Observable::Matrix { re, im } => matrix_from_parts(re, im.as_deref())
            .ok_or_else(|| Error::InvalidArgument("observable entries are not a square matrix".into())),
    }
}

fn product_selection(system: &System) -> Option<ProductSelection> {
    match system {
        System::Product { a_pre, a_post, b_pre, b_post } => Some(ProductSelection {
            a_pre: vec3(*a_pre),
            a_post: vec3(*a_post),
            b_pre: vec3(*b_pre),
            b_post: vec3(*b_post),
        }),
        _ => None,
    }
}

fn selection(system: &System) -> Result<Selection, Error> {
    Ok(match system {
        System::PureQubit { pre, post } => {
            Selection::Pure(PureState::from_bloch(vec3(*pre))?, PureState::from_bloch(vec3(*post))?)
        }
        System::Product { .. } => {
            let sel = product_selection(system).expect("product system");
            Selection::Pure(sel.pre_state()?, sel.post_state()?)
        }
        System::Density { pre, post } => {
            let bad = || Error::InvalidArgument("density entries are not a square matrix".into());
            Selection::Mixed(pre.to_matrix().ok_or_else(bad)?, post.to_matrix().ok_or_else(bad)?)
        }
        System::Werner { lambda_pre, lambda_post } => {
            Selection::Mixed(werner_density(*lambda_pre)?, werner_density(*lambda_post)?)
        }
    })
}

/// Closed forms where the scenario has one, the defining formula otherwise.
fn analytic(scenario: &Scenario, a: &ComplexMatrix, sel: &Selection) -> Result<WeakValueResult, Error> {
    match (&scenario.system, &scenario.observable) {
        (System::PureQubit { pre, post }, Observable::Axis { axis }) => {
            weak_value_bloch(vec3(*axis), vec3(*pre), vec3(*post))
        }
        (System::Product { .. }, Observable::AxisPair { a: na, b: nb }) => {
            let sel = product_selection(&scenario.system).expect("product system");
            Ok(product_weak_value(vec3(*na), vec3(*nb), &sel)?.result)
        }
        (System::Werner { lambda_pre, lambda_post }, Observable::AxisPair { a: na, b: nb }) => {
            werner_weak_value(*lambda_pre, *lambda_post, vec3(*na), vec3(*nb))
        }
        (System::Density { .. }, Observable::AxisPair { a: na, b: nb }) => {
            let Selection::Mixed(rho_i, p_f) = sel else { unreachable!("density system") };
            let pre = TwoQubitBloch::from_density(rho_i)?;
            let post = TwoQubitBloch::from_density(&post_selection_state(p_f)?)?;
            two_qubit_mixed_weak_value(vec3(*na), vec3(*nb), &pre, &post)
        }
        _ => match sel {
            Selection::Pure(i, f) => weak_value_pure(a, i, f),
            Selection::Mixed(rho_i, p_f) => weak_value_mixed(a, rho_i, &post_selection_state(p_f)?),
        },
    }
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::OrthogonalSelection { .. } | Error::AntiParallel { .. })
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

struct Context<'a> {
    scenario: &'a Scenario,
    a: ComplexMatrix,
    sel: Selection,
    bound: Option<f64>,
    shots: Option<Shots>,
    packet: Option<GridWavefunction>,
}

impl Context<'_> {
    fn row(&self, g: Option<f64>, method: Method) -> Row {
        Row {
            scenario: self.scenario.name.clone(),
            g,
            method,
            re_value: None,
            im_value: None,
            acceptance: None,
            std_error: None,
            bound: self.bound,
            diverged: false,
        }
    }

    fn rows_for(&self, index: usize, g: f64) -> Result<Vec<Row>, RunError> {
        let at = |what: &str| format!("scenario '{}', g = {g}, {what}", self.scenario.name);
        let mut rows = Vec::new();
        match &self.scenario.meter {
            Meter::Qubit { m, n } => {
                let (m, n) = (vec3(*m), vec3(*n));
                let est = match &self.sel {
                    Selection::Pure(i, f) => estimate_weak_value_with(i, &self.a, f, m, n, g),
                    Selection::Mixed(rho, p) => estimate_weak_value_mixed(rho, &self.a, p, m, n, g),
                }
                .map_err(RunError::wrap(at("exact meter")))?;
                rows.push(Row {
                    re_value: Some(est.value.re),
                    im_value: Some(est.value.im),
                    acceptance: Some(est.acceptance),
                    ..self.row(Some(g), Method::Exact)
                });
                if let Some(shots) = self.shots {
                    rows.push(self.shot_row(index, g, m, n, shots).map_err(RunError::wrap(at("shots")))?);
                }
            }
            Meter::Particle(p) => {
                let Selection::Pure(i, f) = &self.sel else { unreachable!("validated pure system") };
                let packet = self.packet.as_ref().expect("packet prepared for particle meter");
                let shifts =
                    particle_weak_protocol(i, &self.a, f, g, packet).map_err(RunError::wrap(at("particle meter")))?;
                let wv = shifts.weak_value_estimate(g, p.mass);
                rows.push(Row {
                    re_value: Some(wv.re),
                    im_value: Some(wv.im),
                    acceptance: Some(shifts.acceptance),
                    ..self.row(Some(g), Method::Particle)
                });
            }
        }
        Ok(rows)
    }

    /// Real and imaginary parts come from two independent experiments; their
    /// seeds are offset by the sweep index so every batch is distinct.
    fn shot_row(&self, index: usize, g: f64, m: BlochVector, n: BlochVector, shots: Shots) -> Result<Row, Error> {
        let experiment = |setup: MeterSetup| match &self.sel {
            Selection::Pure(i, f) => ShotScenario::pure(i, &self.a, f, &setup),
            Selection::Mixed(rho, p) => ShotScenario::mixed(rho, &self.a, p, &setup),
        };
        let seed = shots.seed.wrapping_add(2 * index as u64);
        let re = experiment(MeterSetup::re_mode(m, n, g)?)?.sample(shots.n_total, seed)?;
        let im = experiment(MeterSetup::im_mode(m, n, g)?)?.sample(shots.n_total, seed.wrapping_add(1))?;
        Ok(Row {
            re_value: Some(re.estimate),
            im_value: Some(im.estimate),
            acceptance: Some((re.n_accepted + im.n_accepted) as f64 / (2 * shots.n_total) as f64),
            std_error: Some(re.std_error.hypot(im.std_error)),
            ..self.row(Some(g), Method::Shots)
        })
    }
}

pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<RunReport, RunError> {
    let setup = |e: Error| RunError { context: format!("scenario '{}'", scenario.name), source: e };
    let a = observable_matrix(&scenario.observable).map_err(setup)?;
    let sel = selection(&scenario.system).map_err(setup)?;

    let mut analytic_row = Row {
        scenario: scenario.name.clone(),
        g: None,
        method: Method::Analytic,
        re_value: None,
        im_value: None,
        acceptance: None,
        std_error: None,
        bound: None,
        diverged: false,
    };
    let wv = match analytic(scenario, &a, &sel) {
        Ok(wv) => wv,
        Err(e) if is_divergence(&e) => {
            analytic_row.diverged = true;
            return Ok(RunReport { rows: vec![analytic_row], diverged: true });
        }
        Err(e) => return Err(setup(e)),
    };
    analytic_row.re_value = Some(wv.value.re);
    analytic_row.im_value = Some(wv.value.im);
    analytic_row.acceptance = Some(wv.overlap_sq);
    analytic_row.bound = finite(wv.bound);

    let shots = match (scenario.shots, options.shots, options.seed) {
        (base, Some(n), seed) => Some(Shots { n_total: n, seed: seed.or(base.map(|s| s.seed)).unwrap_or(0) }),
        (Some(base), None, seed) => Some(Shots { seed: seed.unwrap_or(base.seed), ..base }),
        (None, None, _) => None,
    };
    if shots.is_some() && matches!(scenario.meter, Meter::Particle(_)) {
        return Err(setup(Error::InvalidArgument("shot sampling needs the qubit meter".into())));
    }
    let packet = match &scenario.meter {
        Meter::Particle(p) => {
            let grid = Grid::new(p.n_points, p.x_min, p.x_max).map_err(setup)?;
            Some(gaussian_packet(grid, p.packet()).map_err(setup)?)
        }
        Meter::Qubit { .. } => None,
    };

    let ctx = Context { scenario, a, sel, bound: analytic_row.bound, shots, packet };
    let sweep = options.sweep.as_deref().unwrap_or(&scenario.sweep);
    let per_g: Vec<Vec<Row>> =
        sweep.par_iter().enumerate().map(|(i, &g)| ctx.rows_for(i, g)).collect::<Result<_, _>>()?;

    let mut rows = vec![analytic_row];
    rows.extend(per_g.into_iter().flatten());
    Ok(RunReport { rows, diverged: false })
}
