use cohft::correlator::{build_cohft, gl_twist, CorrelatorTable, TableBounds, trivial_theory};
use cohft::frobenius::{presets, FrobeniusAlgebra};
use cohft::matrix::Matrix;
use cohft::nodal::{check_symplectic, random_symplectic, W_from_E, Pairing};
use cohft::oracle::{self, wk};
use cohft::reconstruction::{hodge_ambiguity_apply, qh_p1_euler, solve_rmatrix, HodgeTwist};
use cohft::scalar::{Rational, Scalar};
use cohft::series::{divided_difference, BiSeries, EndSeries};
use cohft::tft::{propagator, SurfaceSignature};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(p: i64, d: i64) -> Rational {
    Rational::from_ratio(p, d)
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(p, d)| q(p, d))
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (prop_oneof![-6i64..=-1, 1i64..=6], 1i64..=4).prop_map(|(p, d)| q(p, d))
}

fn matrix(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
    proptest::collection::vec(small_rational(), n * n).prop_map(move |v| Matrix::from_fn(n, n, |r, c| v[r * n + c].clone()))
}

fn series(n: usize, order: usize) -> impl Strategy<Value = EndSeries<Rational>> {
    proptest::collection::vec(matrix(n), order + 1).prop_map(|cs| EndSeries::from_coeffs(cs).unwrap())
}

fn unipotent(n: usize, order: usize) -> impl Strategy<Value = EndSeries<Rational>> {
    series(n, order).prop_map(move |mut e| {
        e.set_coeff(0, Matrix::identity(n));
        e
    })
}

fn pairing2() -> Pairing<Rational> {
    Pairing::from_algebra(&presets::qh_p1(q(3, 1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn series_product_is_associative(a in series(2, 3), b in series(2, 3), c in series(2, 3)) {
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let r = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn series_product_distributes(a in series(2, 3), b in series(2, 3), c in series(2, 3)) {
        let l = a.mul(&b.add(&c).unwrap()).unwrap();
        let r = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn unipotent_series_invert(e in unipotent(2, 4)) {
        let inv = e.inverse().unwrap();
        prop_assert!(e.mul(&inv).unwrap().is_identity());
        prop_assert!(inv.mul(&e).unwrap().is_identity());
    }

    #[test]
    fn matrix_inverse_roundtrip(m in matrix(3)) {
        if let Ok(inv) = m.inverse() {
            prop_assert_eq!(&m * &inv, Matrix::identity(3));
        } else {
            prop_assert!(m.determinant().unwrap().is_zero());
        }
    }

    #[test]
    fn divided_difference_inverts_sum_multiplication(seed in 0u64..1000) {
        // f = Id + (z1 + z2) w for a random w; the quotient must return w
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let w = BiSeries::from_fn(2, 3, |_, _| Matrix::from_fn(2, 2, |_, _| q(rng.gen_range(-3..=3), rng.gen_range(1..=3))));
        let f = BiSeries::identity(2, 4).add(&w.with_order(4).times_sum()).unwrap();
        prop_assert_eq!(divided_difference(&f).unwrap(), w);
    }

    #[test]
    fn random_symplectic_elements_form_a_group(s1 in 0u64..1000, s2 in 0u64..1000) {
        let p = pairing2();
        let a = random_symplectic(&p, 5, &mut ChaCha8Rng::seed_from_u64(s1));
        let b = random_symplectic(&p, 5, &mut ChaCha8Rng::seed_from_u64(s2));
        prop_assert!(check_symplectic(&p, &a));
        prop_assert!(check_symplectic(&p, &a.mul(&b).unwrap()));
        prop_assert!(check_symplectic(&p, &a.inverse().unwrap()));
        prop_assert!(W_from_E(&p, &a).is_ok());
    }

    #[test]
    fn hodge_twist_preserves_symplecticity(seed in 0u64..1000, h1 in small_rational(), h3 in small_rational()) {
        let p = pairing2();
        let e = random_symplectic(&p, 5, &mut ChaCha8Rng::seed_from_u64(seed));
        let t = hodge_ambiguity_apply(&e, &HodgeTwist::new(vec![h1, h3]));
        prop_assert!(check_symplectic(&p, &t));
    }

    #[test]
    fn wk_is_symmetric_and_satisfies_string_and_dilaton(g in 0usize..=2, raw in proptest::collection::vec(0usize..5, 1..5)) {
        let n = raw.len();
        prop_assume!(oracle::is_stable(g, n));
        let mut key = raw.clone();
        let v = wk(g, &key);
        key.reverse();
        prop_assert_eq!(wk(g, &key), v.clone());
        // string
        let mut with0 = raw.clone();
        with0.push(0);
        let mut s = Rational::zero();
        for j in 0..n {
            if raw[j] > 0 {
                let mut e = raw.clone();
                e[j] -= 1;
                s += &wk(g, &e);
            }
        }
        prop_assert_eq!(wk(g, &with0), s);
        // dilaton
        let mut with1 = raw.clone();
        with1.push(1);
        prop_assert_eq!(wk(g, &with1), Rational::from_i64(2 * g as i64 - 2 + n as i64) * v);
    }

    #[test]
    fn algebra_rebuilds_from_its_frame(t1 in nonzero_rational(), t2 in nonzero_rational(), t3 in nonzero_rational(), shear in small_rational()) {
        let qm = Matrix::from_rows(vec![
            vec![q(1, 1), shear.clone(), q(0, 1)],
            vec![q(0, 1), q(1, 1), q(0, 1)],
            vec![q(1, 1), q(0, 1), q(1, 1)],
        ]).unwrap();
        let alg = FrobeniusAlgebra::from_idempotents(&qm, &[t1, t2, t3]).unwrap();
        prop_assert!(alg.validate().is_valid());
        let frame = alg.idempotent_decomposition().unwrap();
        let rebuilt = FrobeniusAlgebra::from_frame(&frame).unwrap();
        prop_assert_eq!(rebuilt.pairing(), alg.pairing());
        for a in 0..3 {
            for b in 0..3 {
                prop_assert_eq!(rebuilt.product_of_basis(a, b), alg.product_of_basis(a, b));
            }
        }
    }

    #[test]
    fn sewing_matches_the_propagator(g1 in 0usize..=2, g2 in 0usize..=2, m in 0usize..=2, k in 0usize..=2, t1 in nonzero_rational(), t2 in nonzero_rational()) {
        let alg = presets::diagonal(&[t1, t2]);
        let frame = alg.idempotent_decomposition().unwrap();
        let a = propagator(&frame, SurfaceSignature::new(g1, m, 1));
        let b = propagator(&frame, SurfaceSignature::new(g2, 1, k));
        let sewn = a.sew(&b, &[(0, 0)]).unwrap();
        let direct = propagator(&frame, SurfaceSignature::new(g1 + g2, m, k));
        prop_assert_eq!(sewn.matrix(), direct.matrix());
    }

    #[test]
    fn gl_twists_compose(s1 in 0u64..1000, s2 in 0u64..1000) {
        let alg = presets::diagonal(&[q(1, 1), q(2, 1)]);
        let frame = alg.idempotent_decomposition().unwrap();
        let p = Pairing::from_algebra(&alg);
        let bounds = TableBounds { max_genus: 1, max_points: 2 };
        let a = random_symplectic(&p, 4, &mut ChaCha8Rng::seed_from_u64(s1));
        let b = random_symplectic(&p, 4, &mut ChaCha8Rng::seed_from_u64(s2));
        let t = trivial_theory(&frame);
        let twice = gl_twist(gl_twist(t.clone(), &a).unwrap(), &b).unwrap();
        let once = gl_twist(t, &b.mul(&a).unwrap()).unwrap();
        let l = CorrelatorTable::materialize(twice.as_ref(), bounds).unwrap();
        let r = CorrelatorTable::materialize(once.as_ref(), bounds).unwrap();
        prop_assert_eq!(l, r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rmatrix_independent_of_idempotent_order(flip in any::<bool>(), qv in nonzero_rational()) {
        let q2 = qv.clone() * &qv;
        let alg = presets::qh_p1(q2);
        let frame = alg.idempotent_decomposition().unwrap();
        let data = qh_p1_euler::<Rational>();
        let e = solve_rmatrix(&frame, &data, 5).unwrap();
        let other = if flip { frame.permuted(&[1, 0]).unwrap() } else { frame.clone() };
        prop_assert_eq!(solve_rmatrix(&other, &data, 5).unwrap(), e);
    }

    #[test]
    fn cohft_from_symplectic_element_is_symmetric_in_legs(seed in 0u64..1000) {
        let alg = presets::qh_p1(q(1, 1));
        let frame = alg.idempotent_decomposition().unwrap();
        let p = Pairing::from_algebra(&alg);
        let e = random_symplectic(&p, 4, &mut ChaCha8Rng::seed_from_u64(seed));
        let t = build_cohft(&alg, &frame, &e).unwrap();
        use cohft::correlator::Insertion;
        let a = [Insertion::new(0, 1), Insertion::new(1, 0), Insertion::new(1, 2)];
        let b = [Insertion::new(1, 2), Insertion::new(0, 1), Insertion::new(1, 0)];
        prop_assert_eq!(t.correlator(1, &a).unwrap(), t.correlator(1, &b).unwrap());
    }
}
