use cohft::correlator::{Insertion, TableBounds};
use cohft::frobenius::presets;
use cohft::reconstruction::{qh_p1_euler, reconstruct_gw, check_homogeneity};
use cohft::scalar::{Rational, Scalar};

fn q(p: i64, d: i64) -> Rational {
    Rational::from_ratio(p, d)
}

fn ins(b: usize, a: usize) -> Insertion {
    Insertion::new(b, a)
}

#[test]
fn projective_line_low_genus() {
    let alg = presets::qh_p1(q(1, 1));
    let frame = alg.idempotent_decomposition().unwrap();
    let bounds = TableBounds { max_genus: 1, max_points: 4 };
    let (_, t) = reconstruct_gw(&alg, &frame, &qh_p1_euler(), bounds, None).unwrap();
    assert_eq!(t.correlator(0, &[ins(1, 0); 3]).unwrap(), q(1, 1));
    assert_eq!(t.correlator(0, &[ins(1, 0); 4]).unwrap(), q(1, 1));
    assert_eq!(t.correlator(1, &[ins(1, 0)]).unwrap(), q(-1, 24));
    assert_eq!(t.correlator(1, &[ins(0, 1)]).unwrap(), q(1, 12));
}

#[test]
fn projective_line_is_homogeneous() {
    let alg = presets::qh_p1(q(1, 1));
    let frame = alg.idempotent_decomposition().unwrap();
    let bounds = TableBounds { max_genus: 1, max_points: 3 };
    let (_, t) = reconstruct_gw(&alg, &frame, &qh_p1_euler(), bounds, None).unwrap();
    let rep = check_homogeneity(t.as_ref(), &alg, &qh_p1_euler(), bounds).unwrap();
    assert!(rep.passed(), "{:?}", rep);
}

#[test]
fn symmetric_perturbation_breaks_homogeneity() {
    use cohft::correlator::build_cohft;
    use cohft::matrix::Matrix;
    use cohft::nodal::{check_symplectic, Pairing};
    use cohft::reconstruction::solve_rmatrix;
    use cohft::series::EndSeries;
    let alg = presets::qh_p1(q(1, 1));
    let frame = alg.idempotent_decomposition().unwrap();
    let bounds = TableBounds { max_genus: 1, max_points: 3 };
    let e = solve_rmatrix(&frame, &qh_p1_euler(), 4).unwrap();
    // a non-scalar self-adjoint S keeps E exp(S z) symplectic but breaks the grading
    let p = Pairing::from_algebra(&alg);
    let s = p.self_adjoint_part(&Matrix::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(2, 1)]]).unwrap());
    let mut gen = EndSeries::zero(2, 4);
    gen.set_coeff(1, s);
    let perturbed = e.mul(&gen.exp().unwrap()).unwrap();
    assert!(check_symplectic(&p, &perturbed));
    let t = build_cohft(&alg, &frame, &perturbed).unwrap();
    let rep = check_homogeneity(t.as_ref(), &alg, &qh_p1_euler(), bounds).unwrap();
    assert!(!rep.passed());
}

#[test]
fn hodge_twist_keeps_the_ode_system() {
    use cohft::reconstruction::{verify_ode_u, HodgeTwist, P1Family};
    use cohft::scalar::Complex;
    let fam = P1Family { sign: -1.0 };
    let h = HodgeTwist::new(vec![Complex::from_f64(0.7, 0.0), Complex::from_f64(-1.3, 0.0)]);
    let a = verify_ode_u(&fam, &qh_p1_euler(), 0.1, 1e-3, 3, Some(&h)).unwrap();
    let b = verify_ode_u(&fam, &qh_p1_euler(), 0.1, 1e-4, 3, Some(&h)).unwrap();
    let ratio = a.max_residual() / b.max_residual();
    assert!((8.0..=12.0).contains(&ratio), "ratio {ratio}");
    let zero = verify_ode_u(&fam, &qh_p1_euler(), 0.1, 0.0, 3, None).unwrap();
    assert_eq!(zero.max_residual(), 0.0);
}

#[test]
fn wrong_family_sign_does_not_converge() {
    use cohft::reconstruction::{verify_ode_u, P1Family};
    let fam = P1Family { sign: 1.0 };
    let a = verify_ode_u(&fam, &qh_p1_euler(), 0.3, 1e-3, 2, None).unwrap();
    let b = verify_ode_u(&fam, &qh_p1_euler(), 0.3, 1e-4, 2, None).unwrap();
    assert!(a.max_residual() / b.max_residual() < 2.0);
}

#[test]
fn rank_one_reconstruction_is_witten_kontsevich() {
    use cohft::correlator::{cell_keys, CorrelatorTable};
    use cohft::oracle::wk;
    use cohft::reconstruction::rank_one_euler;
    let alg = presets::rank_one(q(1, 1));
    let frame = alg.idempotent_decomposition().unwrap();
    let bounds = TableBounds { max_genus: 2, max_points: 3 };
    let (_, t) = reconstruct_gw(&alg, &frame, &rank_one_euler(q(0, 1)), bounds, None).unwrap();
    let table = CorrelatorTable::materialize(t.as_ref(), bounds).unwrap();
    for g in 0..=2 {
        for n in 1..=3 {
            for key in cell_keys(1, g, n) {
                let psis: Vec<usize> = key.iter().map(|i| i.psi).collect();
                assert_eq!(t.correlator(g, &key).unwrap(), wk(g, &psis));
            }
        }
    }
    assert!(table.len() > 0);
}

#[test]
fn genus_zero_data_fixes_the_table() {
    use cohft::reconstruction::{algebra_from_theory, reconstruct_table};
    let alg = presets::qh_p1(q(4, 1));
    let frame = alg.idempotent_decomposition().unwrap();
    let bounds = TableBounds { max_genus: 1, max_points: 3 };
    let (_, table) = reconstruct_table(&alg, &frame, &qh_p1_euler(), bounds, None).unwrap();
    let rebuilt = algebra_from_theory(&table, &alg).unwrap();
    let frame2 = rebuilt.idempotent_decomposition().unwrap();
    let (_, again) = reconstruct_table(&rebuilt, &frame2, &qh_p1_euler(), bounds, None).unwrap();
    assert_eq!(table, again);
}
