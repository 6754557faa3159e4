//! Acceptance criteria AC-1 .. AC-10, one line each.
//!
//! Every criterion is evaluated even when an earlier one fails; the test
//! fails at the end if any line reads FAIL.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cohft::correlator::*;
use cohft::frobenius::{presets, FrobeniusAlgebra};
use cohft::matrix::Matrix;
use cohft::nodal::*;
use cohft::oracle::{self, kappa_to_psi, wk};
use cohft::reconstruction::*;
use cohft::scalar::{Complex, Rational, Scalar};
use cohft::series::{scalar_series, BiSeries, EndSeries, VecSeries};
use cohft::tft::{elementary, propagator, SurfaceSignature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod tolerances {
    /// float-backend agreement for nodal identities and the symplectic condition
    pub const FLOAT_IDENTITY: f64 = 1e-30;
    /// accepted band for the residual ratio between eps = 1e-3 and 1e-4
    pub const ODE_RATIO_MIN: f64 = 8.0;
    pub const ODE_RATIO_MAX: f64 = 12.0;
    pub const AC1_TABLE_SECS: u64 = 5;
    pub const AC4_SECS: u64 = 60;
    pub const AC8_SECS: u64 = 1;
    pub const AC10_WDVV_SECS: u64 = 1;
}

type Outcome = Result<String, String>;

fn q(p: i64, d: i64) -> Rational {
    Rational::from_ratio(p, d)
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(t: Duration, secs: u64, what: &str) -> Result<(), String> {
    ensure(t <= Duration::from_secs(secs), format!("{what} took {t:?} (limit {secs} s)"))
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn ac1() -> Outcome {
    ensure(wk(0, &[0, 0, 0]) == q(1, 1), "<tau_0^3>_0")?;
    ensure(wk(1, &[1]) == q(1, 24), "<tau_1>_1")?;
    ensure(wk(0, &[0, 0, 0, 0]) == Rational::zero(), "<tau_0^4>_0 is off-dimension")?;
    ensure(wk(0, &[1, 0, 0, 0]) == q(1, 1), "<tau_1 tau_0^3>_0")?;
    ensure(wk(2, &[4]) == q(1, 1152), "<tau_4>_2")?;
    let start = Instant::now();
    let mut count = 0usize;
    for g in 0..=4 {
        let max_n = 12 - 3 * g.min(4);
        for key in oracle::all_keys(g, max_n) {
            if oracle::dimension(g, key.len()) > 9 {
                continue;
            }
            let v = wk(g, &key);
            count += 1;
            // independent re-derivation: string and dilaton on the same key
            if let Some(pos) = key.iter().position(|&a| a == 0) {
                let mut rest = key.clone();
                rest.remove(pos);
                if oracle::is_stable(g, rest.len()) {
                    let mut acc = Rational::zero();
                    for j in 0..rest.len() {
                        if rest[j] > 0 {
                            let mut e = rest.clone();
                            e[j] -= 1;
                            acc += &wk(g, &e);
                        }
                    }
                    ensure(v == acc, format!("string fails at g={g} {key:?}"))?;
                }
            }
            if let Some(pos) = key.iter().position(|&a| a == 1) {
                let mut rest = key.clone();
                rest.remove(pos);
                if oracle::is_stable(g, rest.len()) {
                    let w = Rational::from_i64(2 * g as i64 - 2 + rest.len() as i64);
                    ensure(v == w * wk(g, &rest), format!("dilaton fails at g={g} {key:?}"))?;
                }
            }
        }
    }
    let t = start.elapsed();
    within(t, tolerances::AC1_TABLE_SECS, "table 3g-3+n <= 9")?;
    Ok(format!("base values exact; {count} keys with dim <= 9 in {t:.2?}, string/dilaton consistent"))
}

fn ac2() -> Outcome {
    let alg = presets::diagonal(&[q(2, 1), q(3, 1)]);
    let frame = alg.idempotent_decomposition().map_err(err)?;
    let mut checked = 0;
    for g in 0..=3 {
        for total in 0..=4 {
            for m in 0..=total {
                let sig = SurfaceSignature::new(g, m, total - m);
                let p = propagator(&frame, sig);
                let b = elementary::brute_force(&alg, sig);
                ensure(p.matrix() == b.matrix(), format!("mismatch at {sig:?}"))?;
                checked += 1;
            }
        }
    }
    ensure(elementary::snake(&alg).matrix() == &Matrix::identity(2), "S-diagram")?;
    Ok(format!("{checked} signatures agree exactly with sewing; S-diagram = Id"))
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let alg = presets::qh_p1(q(3, 1));
    let p = Pairing::from_algebra(&alg);
    let order = 6;
    for i in 0..20 {
        let e = random_symplectic(&p, order, &mut rng);
        let id = BiSeries::identity(2, order);
        ensure(B_from_ED(&p, &e, &id).map_err(err)?.is_identity(), format!("B' != Id for sample {i}"))?;
        ensure(C_from_ED(&p, &e, &id).map_err(err)?.is_identity(), format!("C' != Id for sample {i}"))?;
        let d = admissible_propagator(&p, &e, &mut rng).map_err(err)?;
        let b = B_from_ED(&p, &e, &d).map_err(err)?;
        let c = C_from_ED(&p, &e, &d).map_err(err)?;
        let r = consistency_4way(&p, &e, &b, &c, &d).map_err(err)?;
        ensure(r.all_hold() && r.max_deviation == 0.0, format!("four-way chain fails for sample {i}: {r:?}"))?;
    }
    // float backend
    let algc = presets::qh_p1(Complex::from_f64(3.0, 0.0));
    let pc = Pairing::from_algebra(&algc);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let e: EndSeries<Complex> = random_symplectic(&pc, order, &mut rng);
        let id = BiSeries::identity(2, order);
        let b = B_from_ED(&pc, &e, &id).map_err(err)?;
        let c = C_from_ED(&pc, &e, &id).map_err(err)?;
        worst = worst.max(b.max_abs_diff(&id)).max(c.max_abs_diff(&id));
        let d = admissible_propagator(&pc, &e, &mut rng).map_err(err)?;
        let b = B_from_ED(&pc, &e, &d).map_err(err)?;
        let c = C_from_ED(&pc, &e, &d).map_err(err)?;
        let r = consistency_4way(&pc, &e, &b, &c, &d).map_err(err)?;
        ensure(r.all_hold(), format!("float four-way chain fails for sample {i}"))?;
        worst = worst.max(r.max_deviation);
    }
    ensure(worst <= tolerances::FLOAT_IDENTITY, format!("float deviation {worst:e}"))?;
    Ok(format!("20 rational samples exact; 20 float samples within {worst:.1e}"))
}

fn random_zeta(rng: &mut impl Rng, dim: usize, order: usize) -> VecSeries<Rational> {
    let coeffs = (0..=order)
        .map(|k| (0..dim).map(|_| if k < 2 { q(0, 1) } else { q(rng.gen_range(-3..=3), rng.gen_range(1..=4)) }).collect())
        .collect();
    VecSeries::from_coeffs(coeffs).unwrap()
}

fn random_bivector(rng: &mut impl Rng, order: usize) -> BiSeries<Rational> {
    // beta = Id, so symmetry means V_{pq} = V_{qp}^T
    let mut v = BiSeries::zero(2, order);
    for n in 0..=order {
        for p in 0..=n {
            let qd = n - p;
            if p > qd {
                continue;
            }
            let m = Matrix::from_fn(2, 2, |_, _| q(rng.gen_range(-2..=2), rng.gen_range(1..=3)));
            let m = if p == qd { (&m + &m.transpose()).scale(&q(1, 2)) } else { m };
            v.set(p, qd, m.transpose());
            v.set(qd, p, m);
        }
    }
    v
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let alg = presets::diagonal(&[q(1, 1), q(1, 1)]);
    let frame = alg.idempotent_decomposition().map_err(err)?;
    let p = Pairing::from_algebra(&alg);
    let bounds = TableBounds { max_genus: 2, max_points: 3 };
    let order = required_order(bounds);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let table = |t: Arc<dyn Theory<Rational>>| CorrelatorTable::materialize(t.as_ref(), bounds).map_err(err);

    let base = trivial_theory(&frame);
    let a = random_zeta(&mut rng, 2, order + 1);
    let b = random_zeta(&mut rng, 2, order + 1);
    let lhs = table(translate(translate(base.clone(), &b).map_err(err)?, &a).map_err(err)?)?;
    let rhs = table(translate(base.clone(), &a.add(&b)).map_err(err)?)?;
    ensure(lhs == rhs, "translation additivity")?;

    let z = translate(base.clone(), &a).map_err(err)?;
    let v = random_bivector(&mut rng, order);
    let w = random_bivector(&mut rng, order);
    let vw = table(exp_delta(exp_delta(z.clone(), &p, &v), &p, &w))?;
    let wv = table(exp_delta(exp_delta(z.clone(), &p, &w), &p, &v))?;
    let sum = table(exp_delta(z.clone(), &p, &v.add(&w).map_err(err)?))?;
    ensure(vw == wv, "delta flows do not commute")?;
    ensure(vw == sum, "delta flows do not add")?;

    let g = random_symplectic(&p, order, &mut rng);
    let lhs = table(gl_twist(exp_delta(z.clone(), &p, &v), &g).map_err(err)?)?;
    let adv = conjugate_bivector(&p, &g, &v).map_err(err)?;
    let rhs = table(exp_delta(gl_twist(z, &g).map_err(err)?, &p, &adv))?;
    ensure(lhs == rhs, "GL covariance of the delta flow")?;
    let t = start.elapsed();
    within(t, tolerances::AC4_SECS, "group laws")?;
    Ok(format!("additivity, commutativity, covariance exact on G=2,N=3 ({} entries) in {t:.2?}", lhs.len()))
}

/// `theta^{1-g} int exp(sum c_j kappa_j) psi^a`, expanded into kappa monomials.
fn kappa_closed_form(g: usize, psis: &[usize], c: &[Rational], theta: &Rational) -> Rational {
    let top = oracle::dimension(g, psis.len());
    let budget = top - psis.iter().sum::<usize>();
    // exp(sum c_j kappa_j) restricted to kappa-degree `budget`
    fn rec(j: usize, left: usize, c: &[Rational], kappas: &mut Vec<usize>, w: Rational, g: usize, psis: &[usize], acc: &mut Rational) {
        if left == 0 {
            *acc += &(w * kappa_to_psi(g, kappas, psis).value);
            return;
        }
        if j > left || j >= c.len() {
            return;
        }
        // multiplicity m of kappa_j
        let mut wm = w.clone();
        let mut m = 0;
        loop {
            rec(j + 1, left - m * j, c, kappas, wm.clone(), g, psis, acc);
            m += 1;
            if m * j > left {
                break;
            }
            wm = wm * &c[j] / Rational::from_i64(m as i64);
            kappas.push(j);
        }
        for _ in 1..m {
            kappas.pop();
        }
    }
    let mut acc = Rational::zero();
    rec(1, budget, c, &mut Vec::new(), Rational::one(), g, psis, &mut acc);
    theta.powi(1 - g as i64) * acc
}

fn ac5() -> Outcome {
    let theta = q(3, 1);
    let alg = presets::rank_one(theta.clone());
    let frame = alg.idempotent_decomposition().map_err(err)?;
    let (c2, c3) = (q(2, 3), q(-5, 4));
    let order = 8;
    let mut zc = vec![vec![q(0, 1)]; order + 1];
    zc[2] = vec![c2.clone()];
    zc[3] = vec![c3.clone()];
    let zeta = VecSeries::from_coeffs(zc).unwrap();
    let t = translate(trivial_theory(&frame), &zeta).map_err(err)?;
    // exp(sum c_j z^j) = 1 / (1 + zeta(z)/z)
    let mut den = vec![q(0, 1); order];
    den[0] = q(1, 1);
    den[1] = c2;
    den[2] = c3;
    let s = scalar_series::inverse(&den);
    let c = scalar_series::log(&s);
    let mut checked = 0;
    for g in 0..=2 {
        for n in 1..=3 {
            if !oracle::is_stable(g, n) {
                continue;
            }
            for key in cell_keys(1, g, n) {
                let psis: Vec<usize> = key.iter().map(|i| i.psi).collect();
                let engine = t.correlator(g, &key).map_err(err)?;
                let closed = kappa_closed_form(g, &psis, &c, &theta);
                ensure(engine == closed, format!("g={g} psi={psis:?}: {} vs {}", engine.to_json(), closed.to_json()))?;
                checked += 1;
            }
        }
    }
    // zeta_1 rescaling against the binomial series, through order 3
    let z1 = q(1, 5);
    for g in 1..=2usize {
        let fib = oracle::fiber_product_check(g, 3);
        ensure(fib.passed(), format!("fiber coefficients g={g}"))?;
        let mut zc = vec![vec![q(0, 1)]; 2];
        zc[1] = vec![z1.clone()];
        let t1 = translate_trivial(&frame, &VecSeries::from_coeffs(zc).unwrap()).map_err(err)?;
        let key = [Insertion::new(0, 3 * g - 2)];
        let engine = t1.correlator(g, &key).map_err(err)?;
        let base = theta.powi(1 - g as i64) * wk(g, &[3 * g - 2]);
        let closed = base.clone() * (q(1, 1) + &z1).powi(1 - 2 * g as i64);
        ensure(engine == closed, format!("zeta_1 rescaling g={g}"))?;
        // truncated series through order 3 agrees with the binomial expansion
        let series: Rational = fib.coefficients.iter().enumerate().map(|(m, cf)| cf.clone() * z1.powi(m as i64)).fold(q(0, 1), |a, b| a + b);
        let expected: Rational = fib.expected.iter().enumerate().map(|(m, cf)| cf.clone() * z1.powi(m as i64)).fold(q(0, 1), |a, b| a + b);
        ensure(series == expected, "binomial series")?;
    }
    Ok(format!("{checked} rank-one keys (g <= 2) match the kappa closed form; zeta_1 rescaling exact for g = 1, 2"))
}

fn ac6() -> Outcome {
    let bounds = TableBounds { max_genus: 2, max_points: 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let algs: Vec<FrobeniusAlgebra<Rational>> = vec![presets::diagonal(&[q(2, 1), q(3, 1)]), presets::qh_p1(q(1, 1))];
    let mut checked = 0;
    for alg in &algs {
        let frame = alg.idempotent_decomposition().map_err(err)?;
        let p = Pairing::from_algebra(alg);
        let e = random_symplectic(&p, required_order(bounds), &mut rng);
        let t = build_cohft(alg, &frame, &e).map_err(err)?;
        let rep = string_dilaton_check(t.as_ref(), alg.unit(), alg.pairing(), bounds).map_err(err)?;
        ensure(rep.passed(), format!("string/dilaton: {:?} {:?}", rep.string_failures, rep.dilaton_failures))?;
        checked += rep.string_checked + rep.dilaton_checked;
        // negative control: drop the translation
        let elem = GroupElement::from_symplectic(alg, &frame, &e).map_err(err)?;
        let no_zeta = gl_twist(exp_delta(trivial_theory(&frame), &p, &elem.v), &e).map_err(err)?;
        let neg = string_dilaton_check(no_zeta.as_ref(), alg.unit(), alg.pairing(), bounds).map_err(err)?;
        ensure(!neg.passed(), "negative control unexpectedly passes")?;
    }
    Ok(format!("{checked} string/dilaton identities exact on two algebras; control without zeta fails"))
}

fn ac7() -> Outcome {
    let alg = presets::rank_one(q(1, 1));
    let frame = alg.idempotent_decomposition().map_err(err)?;
    let data = rank_one_euler(q(0, 1));
    let bounds = TableBounds { max_genus: 1, max_points: 4 };
    // oracle on M_{1,1}: lambda_1 = psi_1, so int ch_1 = <tau_1>_1; exponent factor (2)!/B_2
    let b2 = q(1, 6);
    let factor = Rational::from_i64(2) / b2;
    let int_ch1 = wk(1, &[1]);
    let entry = |h1: &Rational| -> Result<(Rational, Rational, Arc<dyn Theory<Rational>>), String> {
        let twist = HodgeTwist::new(vec![h1.clone()]);
        let (_, t) = reconstruct_gw(&alg, &frame, &data, bounds, Some(&twist)).map_err(err)?;
        let p0 = t.correlator(1, &[Insertion::new(0, 0)]).map_err(err)?;
        let p1 = t.correlator(1, &[Insertion::new(0, 1)]).map_err(err)?;
        Ok((p0, p1, t))
    };
    let (base0, base1, _) = entry(&q(0, 1))?;
    ensure(base1 == q(1, 24), "untwisted <tau_1>_1")?;
    for h1 in [q(1, 7), q(-3, 5)] {
        let (p0, p1, t) = entry(&h1)?;
        let oracle_shift = factor.clone() * &h1 * &int_ch1;
        // first order: the psi^0 entry moves by h1/2 and nothing else at (1,1)
        let shift = p0 - &base0;
        ensure(shift == oracle_shift, format!("psi^0 shift {} vs {}", shift.to_json(), oracle_shift.to_json()))?;
        ensure(shift == h1.clone() / Rational::from_i64(2), "shift != h1/2")?;
        ensure(p1 == base1, "psi^1 entry moved")?;
        for n in 3..=4 {
            for key in cell_keys(1, 0, n) {
                let psis: Vec<usize> = key.iter().map(|i| i.psi).collect();
                ensure(t.correlator(0, &key).map_err(err)? == wk(0, &psis), "genus-0 slice differs from WK")?;
            }
        }
    }
    Ok("genus-0 slice equals WK; genus-1 one-point psi^0 entry shifts by 12 h1 (1/24) = h1/2, psi^1 entry stays 1/24".into())
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let alg = presets::qh_p1(q(1, 1));
    let frame = alg.idempotent_decomposition().map_err(err)?;
    let data = qh_p1_euler::<Rational>();
    let e = solve_rmatrix(&frame, &data, 8).map_err(err)?;
    ensure(satisfies_recursion(&alg, &data, &e), "rational residual is not zero")?;
    ensure(rmatrix_residual(&alg, &data, &e) == 0.0, "rational residual is not zero")?;
    ensure(check_symplectic(&Pairing::from_algebra(&alg), &e), "rational E not symplectic")?;

    let algc = presets::qh_p1(Complex::one());
    let framec = algc.idempotent_decomposition().map_err(err)?;
    let datac = qh_p1_euler::<Complex>();
    let ec = solve_rmatrix(&framec, &datac, 8).map_err(err)?;
    let defect = symplectic_defect(&Pairing::from_algebra(&algc), &ec).map_err(err)?;
    let worst = defect.coeffs().iter().map(Matrix::max_abs).fold(0.0, f64::max);
    ensure(worst <= tolerances::FLOAT_IDENTITY, format!("symplectic defect {worst:e}"))?;
    let t = start.elapsed();
    within(t, tolerances::AC8_SECS, "R-matrix solve")?;

    let r1 = presets::rank_one(q(5, 2));
    let f1 = r1.idempotent_decomposition().map_err(err)?;
    ensure(solve_rmatrix(&f1, &rank_one_euler(q(7, 3)), 8).map_err(err)?.is_identity(), "rank one E != Id")?;
    Ok(format!("K=8 recursion residual 0, symplectic exactly (rational) and to {worst:.1e} (256 bit) in {t:.2?}; rank one E = Id"))
}

fn ac9() -> Outcome {
    let family = P1Family { sign: -1.0 };
    let data = qh_p1_euler::<Complex>();
    let coarse = verify_ode_u(&family, &data, 0.3, 1e-3, 4, None).map_err(err)?;
    let fine = verify_ode_u(&family, &data, 0.3, 1e-4, 4, None).map_err(err)?;
    let ratio = coarse.max_residual() / fine.max_residual();
    ensure(
        (tolerances::ODE_RATIO_MIN..=tolerances::ODE_RATIO_MAX).contains(&ratio),
        format!("residual ratio {ratio:.3}"),
    )?;
    let z0 = coarse.residuals[0] / fine.residuals[0];
    ensure((tolerances::ODE_RATIO_MIN..=tolerances::ODE_RATIO_MAX).contains(&z0), format!("z^0 ratio {z0:.3}"))?;
    Ok(format!(
        "residuals {:.2e} -> {:.2e}, ratio {ratio:.3} (z^0 order alone {z0:.3})",
        coarse.max_residual(),
        fine.max_residual()
    ))
}

fn ac10() -> Outcome {
    let alg = presets::qh_p1(q(1, 1));
    let frame = alg.idempotent_decomposition().map_err(err)?;
    let bounds = TableBounds { max_genus: 1, max_points: 3 };
    let (_, t) = reconstruct_gw(&alg, &frame, &qh_p1_euler(), bounds, None).map_err(err)?;
    let qp = quantum_product(t.clone(), &Pairing::from_algebra(&alg), &[q(0, 1), q(1, 1)], 0).map_err(err)?;
    for a in 0..2 {
        for b in 0..2 {
            ensure(qp.coeffs[0][a][b] == alg.product_of_basis(a, b), format!("product e{a} e{b}"))?;
        }
    }
    let rebuilt = algebra_from_theory(t.as_ref(), &alg).map_err(err)?;
    ensure(rebuilt == alg, "rebuilt algebra differs")?;
    let start = Instant::now();
    let n = wdvv_genus0_oracle(4);
    let dt = start.elapsed();
    ensure(n == vec![q(1, 1), q(1, 1), q(12, 1), q(620, 1)], "N_1..N_4")?;
    within(dt, tolerances::AC10_WDVV_SECS, "WDVV")?;
    Ok(format!("quantum product at u = 0 equals the input algebra; N_1..N_4 = 1, 1, 12, 620 in {dt:.2?}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC-1 oracle base", ac1),
        ("AC-2 closed TFT", ac2),
        ("AC-3 nodal identities", ac3),
        ("AC-4 group action laws", ac4),
        ("AC-5 kappa cross-check", ac5),
        ("AC-6 flat identity", ac6),
        ("AC-7 Hodge calibration", ac7),
        ("AC-8 R-matrix", ac8),
        ("AC-9 ODE consistency", ac9),
        ("AC-10 genus-0 round trip", ac10),
    ];
    // straight to the handle: the lines should show up even without --nocapture
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let line = match f() {
            Ok(detail) => format!("PASS {name}: {detail}"),
            Err(why) => {
                failed.push(name);
                format!("FAIL {name}: {why}")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
