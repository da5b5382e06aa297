use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weakmeter::meter_sim::{conditional_expectation, couple_and_postselect, first_order_readout, MeterSetup};
use weakmeter::qops::{
    bloch_to_density, density_to_bloch, hermitian_exp, pauli_axis, random_axis, random_density, random_pure,
    tensor, BlochVector, ComplexMatrix, PureState, C64,
};
use weakmeter::weakvalue::{
    polar_decompose, product_observable, product_weak_value, w_vector, weak_value_bloch, weak_value_mixed,
    weak_value_pure, ProductSelection,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_hermitian(dim: usize, r: &mut ChaCha8Rng) -> ComplexMatrix {
    let rho = random_density(dim, r).unwrap();
    let sigma = random_density(dim, r).unwrap();
    &rho.scale(C64::new(3.0, 0.0)) - &sigma
}

/// A selection pair whose overlap is not close to zero.
fn selection(dim: usize, r: &mut ChaCha8Rng) -> (PureState, PureState) {
    loop {
        let i = random_pure(dim, r).unwrap();
        let f = random_pure(dim, r).unwrap();
        if f.inner(&i).norm_sqr() > 1e-3 {
            return (i, f);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pauli_axis_squares_to_identity(seed: u64) {
        let p = pauli_axis(random_axis(&mut rng(seed))).unwrap();
        prop_assert!((&p * &p).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn density_bloch_round_trip(seed: u64) {
        let rho = random_density(2, &mut rng(seed)).unwrap();
        let back = bloch_to_density(density_to_bloch(&rho).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn hermitian_exp_is_unitary(seed: u64, g in -1.0f64..1.0, dim in prop::sample::select(vec![2usize, 4, 8])) {
        let h = random_hermitian(dim, &mut rng(seed));
        let u = hermitian_exp(&h, C64::new(0.0, -g)).unwrap();
        prop_assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn tensor_is_associative(seed: u64) {
        let mut r = rng(seed);
        let (a, b, c) = (random_hermitian(2, &mut r), random_hermitian(2, &mut r), random_hermitian(2, &mut r));
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn eigenstate_reduction(seed: u64) {
        let mut r = rng(seed);
        let a = random_hermitian(2, &mut r);
        let (values, vectors) = a.eigh().unwrap();
        let psi_i = PureState::normalized(vectors.column(1)).unwrap();
        let psi_f = loop {
            let f = random_pure(2, &mut r).unwrap();
            if f.inner(&psi_i).norm_sqr() > 1e-3 { break f; }
        };
        let wv = weak_value_pure(&a, &psi_i, &psi_f).unwrap().value;
        prop_assert!((wv - C64::new(values[1], 0.0)).norm() < 1e-12 * values[1].abs().max(1.0) * 10.0);
    }

    #[test]
    fn linearity_and_identity(seed: u64, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut r = rng(seed);
        let (a, b) = (random_hermitian(2, &mut r), random_hermitian(2, &mut r));
        let (psi_i, psi_f) = selection(2, &mut r);
        let combo = &a.scale(C64::new(alpha, 0.0)) + &b.scale(C64::new(beta, 0.0));
        let wv = |op: &ComplexMatrix| weak_value_pure(op, &psi_i, &psi_f).unwrap().value;
        let lhs = wv(&combo);
        let rhs = wv(&a) * alpha + wv(&b) * beta;
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        prop_assert!((wv(&ComplexMatrix::identity(2)) - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn swapping_selections_conjugates(seed: u64, dim in prop::sample::select(vec![2usize, 4])) {
        let mut r = rng(seed);
        let a = random_hermitian(dim, &mut r);
        let (psi_i, psi_f) = selection(dim, &mut r);
        let forward = weak_value_pure(&a, &psi_i, &psi_f).unwrap().value;
        let backward = weak_value_pure(&a, &psi_f, &psi_i).unwrap().value;
        prop_assert!((forward - backward.conj()).norm() < 1e-12 * (1.0 + forward.norm()));
    }

    #[test]
    fn weak_value_within_bound(seed: u64) {
        let mut r = rng(seed);
        let a = random_hermitian(2, &mut r);
        let (psi_i, psi_f) = selection(2, &mut r);
        prop_assert!(weak_value_pure(&a, &psi_i, &psi_f).unwrap().within_bound(1e-9));
        let (rho_i, rho_f) = (random_density(2, &mut r).unwrap(), random_density(2, &mut r).unwrap());
        prop_assert!(weak_value_mixed(&a, &rho_i, &rho_f).unwrap().within_bound(1e-9));
    }

    #[test]
    fn bloch_forms_agree_with_direct_formula(seed: u64) {
        let mut r = rng(seed);
        let (ri, rf, n) = (random_axis(&mut r), random_axis(&mut r), random_axis(&mut r));
        prop_assume!(1.0 + ri.dot(rf) > 1e-3);
        let direct = weak_value_pure(
            &pauli_axis(n).unwrap(),
            &PureState::from_bloch(ri).unwrap(),
            &PureState::from_bloch(rf).unwrap(),
        ).unwrap().value;
        prop_assert!((weak_value_bloch(n, ri, rf).unwrap().value - direct).norm() < 1e-12 * (1.0 + direct.norm()));

        let w = w_vector(ri, rf).unwrap();
        prop_assert!(w.im().dot(ri).abs() < 1e-9);
        prop_assert!(w.im().dot(rf).abs() < 1e-9);
        if ri.cross(rf).norm() > 1e-6 {
            let polar = polar_decompose(ri, rf).unwrap();
            prop_assert!(polar.to_w_vector().max_abs_diff(&w) < 1e-12 * (1.0 + w.re().norm() + w.im().norm()));
        }
    }

    #[test]
    fn product_selection_factorizes(seed: u64) {
        let mut r = rng(seed);
        let sel = ProductSelection {
            a_pre: random_axis(&mut r),
            a_post: random_axis(&mut r),
            b_pre: random_axis(&mut r),
            b_post: random_axis(&mut r),
        };
        prop_assume!(1.0 + sel.a_pre.dot(sel.a_post) > 1e-3 && 1.0 + sel.b_pre.dot(sel.b_post) > 1e-3);
        let (na, nb) = (random_axis(&mut r), random_axis(&mut r));
        let product = product_weak_value(na, nb, &sel).unwrap();
        let direct = weak_value_pure(
            &product_observable(na, nb).unwrap(),
            &sel.pre_state().unwrap(),
            &sel.post_state().unwrap(),
        ).unwrap().value;
        prop_assert!((product.result.value - direct).norm() < 1e-12 * (1.0 + direct.norm()));
    }

    #[test]
    fn readout_without_im_part_is_quadratic(seed: u64) {
        // A real weak value leaves the n̂·σ readout unchanged at first order.
        let mut r = rng(seed);
        let (ri, rf) = (random_axis(&mut r), random_axis(&mut r));
        prop_assume!(1.0 + ri.dot(rf) > 0.1 && ri.cross(rf).norm() > 0.1);
        // Any axis in the plane of r̂_i and r̂_f gives a real weak value.
        let n_obs = (ri + rf).normalized().unwrap();
        let (psi_i, psi_f) = (PureState::from_bloch(ri).unwrap(), PureState::from_bloch(rf).unwrap());
        let a = pauli_axis(n_obs).unwrap();
        let wv = weak_value_pure(&a, &psi_i, &psi_f).unwrap().value;
        prop_assert!(wv.im.abs() < 1e-12);
        let (m, n) = (random_axis(&mut r), random_axis(&mut r));
        let change = |g: f64| {
            let meter = MeterSetup::new(m, n, n, g).unwrap();
            let run = couple_and_postselect(&psi_i, &a, &meter, &psi_f).unwrap();
            (conditional_expectation(&run, n).unwrap() - first_order_readout(&meter, wv)).abs()
        };
        let g = 1e-3;
        prop_assert!(change(g) < 50.0 * g * g, "{}", change(g));
    }
}

#[test]
fn unit_axes_only() {
    assert!(pauli_axis(BlochVector::new(0.5, 0.0, 0.0)).is_err());
}
