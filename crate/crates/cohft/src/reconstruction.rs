//! Reconstruction of a homogeneous semi-simple CohFT from its genus-zero data.
//!
//! Given Euler data `(xi_0, mu, d)` at a semi-simple point, the R-matrix
//! `E(z) = sum E_k z^k` solves `[(xi_0 .), E_{k+1}] + (mu + k) E_k = 0`.
//! Work happens in the idempotent frame where `(xi_0 .)` is `diag(u_i)`;
//! the result is returned in the user basis and is rational whenever the
//! frame is.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::correlator::{build_cohft, required_order, CorrelatorTable, EngineError, Insertion, TableBounds, Theory};
use crate::frobenius::{FrobeniusAlgebra, FrobeniusError, SemisimpleFrame};
use crate::matrix::{vec_ops, Matrix};
use crate::nodal::Pairing;
use crate::oracle;
use crate::scalar::{Complex, Rational, Scalar};
use crate::series::EndSeries;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReconstructionError {
    #[error("invalid Euler data: {0}")]
    EulerData(String),
    #[error("diagonal block {block:?} of the conjugated grading is nonzero; the recursion has no solution")]
    UnsolvableBlock { block: Vec<usize> },
    #[error("Hodge twist coefficients must sit at odd powers")]
    EvenHodgeTerm,
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Euler vector `xi_0`, grading operator `mu`, conformal weight `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerData<S: Scalar> {
    pub xi0: Vec<S>,
    pub mu: Matrix<S>,
    pub d: S,
}

impl<S: Scalar> EulerData<S> {
    /// Checks `mu(1) = -(d/2) 1` and that `mu` is skew for the pairing.
    pub fn validate(&self, alg: &FrobeniusAlgebra<S>) -> Result<(), ReconstructionError> {
        let n = alg.dim();
        if self.xi0.len() != n || self.mu.rows() != n || self.mu.cols() != n {
            return Err(ReconstructionError::EulerData("dimensions differ from the algebra".into()));
        }
        let mu1 = self.mu.mul_vec(alg.unit());
        let expect = vec_ops::scale(alg.unit(), &(-self.d.clone() / S::from_i64(2)));
        if !vec_ops::approx_eq(&mu1, &expect) {
            return Err(ReconstructionError::EulerData("mu(1) != -(d/2) 1".into()));
        }
        let b = alg.pairing();
        let sym = &(&self.mu.transpose() * b) + &(b * &self.mu);
        if !sym.is_zero() && !sym.approx_eq(&Matrix::zeros(n, n)) {
            return Err(ReconstructionError::EulerData("mu is not skew for the pairing".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "xi0": self.xi0.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "mu": self.mu.to_json(),
            "d": self.d.to_json(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, ReconstructionError> {
        let bad = |s: &str| ReconstructionError::EulerData(s.to_string());
        let obj = v.as_object().ok_or_else(|| bad("expected object"))?;
        for k in obj.keys() {
            if !["xi0", "mu", "d"].contains(&k.as_str()) {
                return Err(bad(&format!("unknown field '{k}'")));
            }
        }
        let xi0 = obj
            .get("xi0")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("xi0"))?
            .iter()
            .map(|x| S::from_json(x).map_err(|e| bad(&e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let mu = Matrix::from_json(obj.get("mu").ok_or_else(|| bad("mu"))?).map_err(|e| bad(&e.to_string()))?;
        let d = S::from_json(obj.get("d").ok_or_else(|| bad("d"))?).map_err(|e| bad(&e.to_string()))?;
        Ok(EulerData { xi0, mu, d })
    }

    /// Grading `deg = mu + d/2` (the half-cohomological degree).
    pub fn degree_operator(&self) -> Matrix<S> {
        let n = self.mu.rows();
        &self.mu + &Matrix::identity(n).scale(&(self.d.clone() / S::from_i64(2)))
    }
}

/// Standard data for the projective line at `q`: basis `(1, h)`,
/// `xi_0 = 2h`, `mu = diag(-1/2, 1/2)`, `d = 1`.
pub fn qh_p1_euler<S: Scalar>() -> EulerData<S> {
    EulerData {
        xi0: vec![S::zero(), S::from_i64(2)],
        mu: Matrix::diagonal(&[S::from_ratio(-1, 2), S::from_ratio(1, 2)]),
        d: S::one(),
    }
}

/// The projective plane: basis `(1, h, h^2)`, `xi_0 = 3h`, `mu = diag(-1, 0, 1)`, `d = 2`.
pub fn qh_p2_euler<S: Scalar>() -> EulerData<S> {
    EulerData {
        xi0: vec![S::zero(), S::from_i64(3), S::zero()],
        mu: Matrix::diagonal(&[S::from_i64(-1), S::zero(), S::one()]),
        d: S::from_i64(2),
    }
}

/// Named Euler data matching the algebra presets.
pub fn euler_by_name<S: Scalar>(name: &str) -> Option<EulerData<S>> {
    match name {
        "qh_p1" => Some(qh_p1_euler()),
        "qh_p2" => Some(qh_p2_euler()),
        "rank_one" => Some(rank_one_euler(S::zero())),
        _ => None,
    }
}

/// Rank one, `d = 0`, `xi_0 = x`.
pub fn rank_one_euler<S: Scalar>(xi0: S) -> EulerData<S> {
    EulerData { xi0: vec![xi0], mu: Matrix::zeros(1, 1), d: S::zero() }
}

/// Spectrum of `(xi_0 .)` and the grading in the idempotent frame.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerFrame<S: Scalar> {
    /// `u_i`: `xi_0 P_i = u_i P_i`
    pub u: Vec<S>,
    /// `P^{-1} mu P`
    pub mu_bar: Matrix<S>,
    /// `Pi^{-1} mu Pi`, when the normalized frame exists
    pub mu_bar_normalized: Option<Matrix<S>>,
}

pub fn canonical_euler_frame<S: Scalar>(frame: &SemisimpleFrame<S>, data: &EulerData<S>) -> EulerFrame<S> {
    let u = frame.to_p_coords(&data.xi0);
    let mu_bar = frame.to_p_frame(&data.mu);
    let mu_bar_normalized = frame.pi().map(|pi| {
        let inv = pi.inverse().expect("frame is invertible");
        &(&inv * &data.mu) * pi
    });
    EulerFrame { u, mu_bar, mu_bar_normalized }
}

/// Groups indices with equal `u_i`.
fn eigen_blocks<S: Scalar>(u: &[S]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..u.len() {
        match blocks.iter_mut().find(|b| u[b[0]].approx_eq(&u[i])) {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    blocks
}

/// Solves the homogeneity recursion to order `order` (user basis).
pub fn solve_rmatrix<S: Scalar>(
    frame: &SemisimpleFrame<S>,
    data: &EulerData<S>,
    order: usize,
) -> Result<EndSeries<S>, ReconstructionError> {
    let ef = canonical_euler_frame(frame, data);
    let n = frame.dim();
    let blocks = eigen_blocks(&ef.u);
    let block_of: Vec<usize> = (0..n).map(|i| blocks.iter().position(|b| b.contains(&i)).unwrap()).collect();
    for b in &blocks {
        for &i in b {
            for &j in b {
                if !ef.mu_bar[(i, j)].is_zero() {
                    return Err(ReconstructionError::UnsolvableBlock { block: b.clone() });
                }
            }
        }
    }
    let mut coeffs = vec![Matrix::identity(n)];
    for k in 0..order {
        let shifted = &ef.mu_bar + &Matrix::identity(n).scale(&S::from_i64(k as i64));
        let rhs = &shifted * &coeffs[k];
        let mut next = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if block_of[i] != block_of[j] {
                    next[(i, j)] = -rhs[(i, j)].clone() / (ef.u[i].clone() - &ef.u[j]);
                }
            }
        }
        // diagonal blocks from diag-block((mu_bar + k + 1) E_{k+1}) = 0
        let kp1 = S::from_i64(k as i64 + 1);
        let mixed = &ef.mu_bar * &next;
        for i in 0..n {
            for j in 0..n {
                if block_of[i] == block_of[j] {
                    next[(i, j)] = -mixed[(i, j)].clone() / kp1.clone();
                }
            }
        }
        coeffs.push(next);
    }
    let bar = EndSeries::from_coeffs(coeffs).expect("square coefficients");
    Ok(bar.map_coeffs(|m| frame.from_p_frame(m)))
}

/// Largest entry of `[(xi_0 .), E_{k+1}] + (mu + k) E_k` over `k < K`.
pub fn rmatrix_residual<S: Scalar>(alg: &FrobeniusAlgebra<S>, data: &EulerData<S>, e: &EndSeries<S>) -> f64 {
    rmatrix_residuals(alg, data, e).into_iter().fold(0.0, f64::max)
}

fn rmatrix_residuals<S: Scalar>(alg: &FrobeniusAlgebra<S>, data: &EulerData<S>, e: &EndSeries<S>) -> Vec<f64> {
    let x = alg.mult_operator(&data.xi0);
    let n = alg.dim();
    (0..e.order())
        .map(|k| {
            let comm = &(&x * e.coeff(k + 1)) - &(e.coeff(k + 1) * &x);
            let shifted = &data.mu + &Matrix::identity(n).scale(&S::from_i64(k as i64));
            (&comm + &(&shifted * e.coeff(k))).max_abs()
        })
        .collect()
}

/// True iff every recursion equation holds (exactly in the rational backend).
pub fn satisfies_recursion<S: Scalar>(alg: &FrobeniusAlgebra<S>, data: &EulerData<S>, e: &EndSeries<S>) -> bool {
    let x = alg.mult_operator(&data.xi0);
    let n = alg.dim();
    (0..e.order()).all(|k| {
        let comm = &(&x * e.coeff(k + 1)) - &(e.coeff(k + 1) * &x);
        let shifted = &data.mu + &Matrix::identity(n).scale(&S::from_i64(k as i64));
        let r = &comm + &(&shifted * e.coeff(k));
        r.approx_eq(&Matrix::zeros(n, n))
    })
}

/// Odd scalar coefficients `h_1, h_3, ...`: `E_h = exp(sum h_{2j-1} z^{2j-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct HodgeTwist<S: Scalar> {
    /// `odd[j] = h_{2j+1}`
    pub odd: Vec<S>,
}

impl<S: Scalar> HodgeTwist<S> {
    pub fn new(odd: Vec<S>) -> Self {
        HodgeTwist { odd }
    }

    /// From a dense list `c[k]` = coefficient of `z^k`; even entries must vanish.
    pub fn from_dense(c: &[S]) -> Result<Self, ReconstructionError> {
        if c.iter().enumerate().any(|(k, x)| k % 2 == 0 && !x.is_zero()) {
            return Err(ReconstructionError::EvenHodgeTerm);
        }
        Ok(HodgeTwist { odd: c.iter().skip(1).step_by(2).cloned().collect() })
    }

    pub fn is_zero(&self) -> bool {
        self.odd.iter().all(S::is_zero)
    }

    /// The scalar series `E_h` acting as a multiple of `Id` on an `n`-dimensional space.
    pub fn series(&self, n: usize, order: usize) -> EndSeries<S> {
        let mut x = EndSeries::zero(n, order);
        for (j, h) in self.odd.iter().enumerate() {
            let k = 2 * j + 1;
            if k <= order {
                x.set_coeff(k, Matrix::identity(n).scale(h));
            }
        }
        x.exp().expect("zero constant term")
    }
}

/// `E E_h`.
pub fn hodge_ambiguity_apply<S: Scalar>(e: &EndSeries<S>, h: &HodgeTwist<S>) -> EndSeries<S> {
    e.mul(&h.series(e.dim(), e.order())).expect("same shape")
}

/// Outcome of [`check_homogeneity`].
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneityReport {
    pub checked: usize,
    pub failures: Vec<String>,
    pub max_defect: f64,
    /// Weights of `theta`, `alpha` and `1` under the scaling action.
    pub basic_weights_ok: bool,
}

impl HomogeneityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.basic_weights_ok
    }

    pub fn to_json(&self) -> Value {
        json!({
            "passed": self.passed(),
            "checked": self.checked,
            "failures": self.failures,
            "max_defect": self.max_defect,
            "basic_weights_ok": self.basic_weights_ok,
        })
    }
}

/// Integrated homogeneity: with `deg = mu + d/2`,
///
/// `sum_j <.. (deg x_j) psi^{a_j} ..> + ((g-1)d - dim M_{g,n} + sum a) <x psi^a>
///  = <x psi^a, xi_0>_{g,n+1} - sum_j <.. (xi_0 x_j) psi^{a_j - 1} ..>`.
///
/// Keys of cells with `n + 1 <= max_points` are checked, including keys one
/// degree above the dimension (whose left side vanishes).
pub fn check_homogeneity<S: Scalar>(
    t: &dyn Theory<S>,
    alg: &FrobeniusAlgebra<S>,
    data: &EulerData<S>,
    bounds: TableBounds,
) -> Result<HomogeneityReport, ReconstructionError> {
    let n_dim = alg.dim();
    let deg = data.degree_operator();
    let xmul = alg.mult_operator(&data.xi0);
    let mut rep = HomogeneityReport { checked: 0, failures: Vec::new(), max_defect: 0.0, basic_weights_ok: true };
    for g in 0..=bounds.max_genus {
        for n in 1..bounds.max_points {
            if !oracle::is_stable(g, n) {
                continue;
            }
            let top = oracle::dimension(g, n);
            let mut keys = crate::correlator::cell_keys(n_dim, g, n);
            keys.extend(keys_of_degree(n_dim, n, top + 1));
            for key in keys {
                let legs: Vec<(Vec<S>, usize)> = key.iter().map(|i| (vec_ops::basis(n_dim, i.basis), i.psi)).collect();
                let base = t.eval(g, &legs)?;
                let mut lhs = S::zero();
                for j in 0..n {
                    let mut l = legs.clone();
                    l[j].0 = deg.mul_vec(&legs[j].0);
                    lhs += &t.eval(g, &l)?;
                }
                let sum_a: i64 = key.iter().map(|i| i.psi as i64).sum();
                let w = (S::from_i64(g as i64) - S::one()) * &data.d + S::from_i64(sum_a - top as i64);
                lhs += &(w * &base);
                let mut ext = legs.clone();
                ext.push((data.xi0.clone(), 0));
                let mut rhs = t.eval(g, &ext)?;
                for j in 0..n {
                    if legs[j].1 == 0 {
                        continue;
                    }
                    let mut l = legs.clone();
                    l[j] = (xmul.mul_vec(&legs[j].0), legs[j].1 - 1);
                    rhs -= &t.eval(g, &l)?;
                }
                rep.checked += 1;
                rep.max_defect = rep.max_defect.max((lhs.clone() - &rhs).abs_f64());
                if !lhs.approx_eq(&rhs) {
                    let parts: Vec<String> = key.iter().map(|i| format!("e{}psi^{}", i.basis, i.psi)).collect();
                    rep.failures.push(format!("g={} <{}>", g, parts.join(", ")));
                }
            }
        }
    }
    rep.basic_weights_ok = basic_weights_ok(alg, data);
    Ok(rep)
}

fn keys_of_degree(dim: usize, n: usize, total: usize) -> Vec<Vec<Insertion>> {
    fn rec(dim: usize, n: usize, budget: usize, cur: &mut Vec<Insertion>, out: &mut Vec<Vec<Insertion>>) {
        if cur.len() == n {
            if budget == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let (b0, a0) = cur.last().map_or((0, 0), |i| (i.basis, i.psi));
        for b in b0..dim {
            let lo = if b == b0 { a0 } else { 0 };
            for a in lo..=budget {
                cur.push(Insertion { basis: b, psi: a });
                rec(dim, n, budget - a, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(dim, n, total, &mut Vec::new(), &mut out);
    out
}

/// Scaling weights: `1` has weight `-d/2` under `mu`, the trace form has
/// weight `d/2` (`theta(mu x) = (d/2) theta(x)`), and `alpha` has `mu`-weight `d/2`.
fn basic_weights_ok<S: Scalar>(alg: &FrobeniusAlgebra<S>, data: &EulerData<S>) -> bool {
    let half_d = data.d.clone() / S::from_i64(2);
    let n = alg.dim();
    let unit_ok = vec_ops::approx_eq(&data.mu.mul_vec(alg.unit()), &vec_ops::scale(alg.unit(), &-half_d.clone()));
    let theta_ok = (0..n).all(|j| {
        let e = vec_ops::basis(n, j);
        alg.theta(&data.mu.mul_vec(&e)).approx_eq(&(half_d.clone() * alg.theta(&e)))
    });
    let alpha_ok = match alg.euler_element() {
        Ok(alpha) => {
            // the Euler element pairs with the unit-like part only through degree d
            let lhs = data.mu.mul_vec(&alpha);
            let rhs = vec_ops::scale(&alpha, &half_d);
            // homogeneous only when alpha is an eigenvector (true for QH of P^1, rank one)
            vec_ops::approx_eq(&lhs, &rhs) || !is_eigenvector(&data.mu, &alpha)
        }
        Err(_) => false,
    };
    unit_ok && theta_ok && alpha_ok
}

fn is_eigenvector<S: Scalar>(m: &Matrix<S>, v: &[S]) -> bool {
    let mv = m.mul_vec(v);
    let n = v.len();
    (0..n).all(|i| (0..n).all(|j| (mv[i].clone() * &v[j] - mv[j].clone() * &v[i]).is_zero()))
}

/// Family of algebras over a real parameter with fixed Euler data, for the
/// finite-difference ODE check.
pub trait AlgebraFamily: Sync {
    fn at(&self, s: f64) -> FrobeniusAlgebra<Complex>;
    /// Direction `v` of the deformation in the user basis.
    fn direction(&self) -> Vec<Complex>;
}

/// `QH(P^1)` with `h * h = exp(sign * s)`, moving along `v = h`.
pub struct P1Family {
    pub sign: f64,
}

impl AlgebraFamily for P1Family {
    fn at(&self, s: f64) -> FrobeniusAlgebra<Complex> {
        crate::frobenius::presets::qh_p1(Complex::from_f64((self.sign * s).exp(), 0.0))
    }

    fn direction(&self) -> Vec<Complex> {
        vec![Complex::zero(), Complex::one()]
    }
}

/// Residuals of `d_v(E_k Pi) Pi^{-1} - [E_{k+1}, (v .)]` by forward differences.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeReport {
    pub epsilon: f64,
    /// per z-order `k = 0..K-1`
    pub residuals: Vec<f64>,
}

impl OdeReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn ordered_frame(alg: &FrobeniusAlgebra<Complex>, reference: Option<&SemisimpleFrame<Complex>>) -> Result<SemisimpleFrame<Complex>, ReconstructionError> {
    let f = alg.idempotent_decomposition()?;
    let Some(r) = reference else { return Ok(f) };
    // keep the labelling continuous: match each idempotent to the nearest reference one
    let n = f.dim();
    let mut perm = vec![0; n];
    let mut used = vec![false; n];
    for (i, p) in f.idempotents().iter().enumerate() {
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let da = vec_ops::max_abs(&vec_ops::sub(p, &r.idempotents()[a]));
                let db = vec_ops::max_abs(&vec_ops::sub(p, &r.idempotents()[b]));
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        used[j] = true;
        perm[i] = j;
    }
    Ok(f.permuted(&perm)?)
}

/// Checks the flatness ODEs of `E_u Pi_u` along the family at `s`.
///
/// With `h`, the solver output is twisted by `E_h` at both points first; the
/// ODEs are insensitive to that ambiguity.
pub fn verify_ode_u(
    family: &dyn AlgebraFamily,
    data: &EulerData<Complex>,
    s: f64,
    epsilon: f64,
    order: usize,
    h: Option<&HodgeTwist<Complex>>,
) -> Result<OdeReport, ReconstructionError> {
    let twist = |e: EndSeries<Complex>| match h {
        Some(h) => hodge_ambiguity_apply(&e, h),
        None => e,
    };
    let a0 = family.at(s);
    let f0 = ordered_frame(&a0, None)?;
    let e0 = twist(solve_rmatrix(&f0, data, order + 1)?);
    let pi0 = f0.require_pi()?.clone();
    let pi0_inv = pi0.inverse().map_err(FrobeniusError::from)?;
    let vmul = a0.mult_operator(&family.direction());
    if epsilon == 0.0 {
        return Ok(OdeReport { epsilon, residuals: vec![0.0; order + 1] });
    }
    let a1 = family.at(s + epsilon);
    let f1 = ordered_frame(&a1, Some(&f0))?;
    let e1 = twist(solve_rmatrix(&f1, data, order + 1)?);
    let pi1 = f1.require_pi()?.clone();
    // align the square-root branch column by column with the base point
    let mut pi1 = pi1;
    for c in 0..pi1.cols() {
        let dot: f64 = (0..pi1.rows()).map(|r| (pi1[(r, c)].clone() * &pi0[(r, c)].conj()).re_f64()).sum();
        if dot < 0.0 {
            for r in 0..pi1.rows() {
                pi1[(r, c)] = -pi1[(r, c)].clone();
            }
        }
    }
    let inv_eps = Complex::from_f64(1.0 / epsilon, 0.0);
    let mut residuals = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let d = (&(e1.coeff(k) * &pi1) - &(e0.coeff(k) * &pi0)).scale(&inv_eps);
        let lhs = &d * &pi0_inv;
        let next = e0.coeff(k + 1);
        let rhs = &(next * &vmul) - &(&vmul * next);
        residuals.push((&lhs - &rhs).max_abs());
    }
    Ok(OdeReport { epsilon, residuals })
}

/// `solve_rmatrix -> (Hodge twist) -> build_cohft`, at the order the bounds need.
pub fn reconstruct_gw<S: Scalar>(
    alg: &FrobeniusAlgebra<S>,
    frame: &SemisimpleFrame<S>,
    data: &EulerData<S>,
    bounds: TableBounds,
    h: Option<&HodgeTwist<S>>,
) -> Result<(EndSeries<S>, Arc<dyn Theory<S>>), ReconstructionError> {
    data.validate(alg)?;
    let mut e = solve_rmatrix(frame, data, required_order(bounds))?;
    if let Some(h) = h {
        e = hodge_ambiguity_apply(&e, h);
    }
    let t = build_cohft(alg, frame, &e)?;
    Ok((e, t))
}

/// Materialized version of [`reconstruct_gw`].
pub fn reconstruct_table<S: Scalar>(
    alg: &FrobeniusAlgebra<S>,
    frame: &SemisimpleFrame<S>,
    data: &EulerData<S>,
    bounds: TableBounds,
    h: Option<&HodgeTwist<S>>,
) -> Result<(EndSeries<S>, CorrelatorTable<S>), ReconstructionError> {
    let (e, t) = reconstruct_gw(alg, frame, data, bounds, h)?;
    let table = CorrelatorTable::materialize(t.as_ref(), bounds)?;
    Ok((e, table))
}

/// Rebuilds the algebra from the genus-zero three-point data of a theory
/// (same pairing and unit).
pub fn algebra_from_theory<S: Scalar>(t: &dyn Theory<S>, alg: &FrobeniusAlgebra<S>) -> Result<FrobeniusAlgebra<S>, ReconstructionError> {
    let n = alg.dim();
    let pairing = Pairing::from_algebra(alg);
    let mut mult = vec![vec![vec_ops::zeros(n); n]; n];
    for a in 0..n {
        for b in 0..n {
            let lowered: Vec<S> = (0..n)
                .map(|c| t.correlator(0, &[Insertion::new(a, 0), Insertion::new(b, 0), Insertion::new(c, 0)]))
                .collect::<Result<_, _>>()?;
            mult[a][b] = pairing.beta_inv().mul_vec(&lowered);
        }
    }
    Ok(FrobeniusAlgebra::new(alg.basis_names().to_vec(), mult, alg.unit().to_vec(), alg.pairing().clone())?)
}

/// Degree-`d` genus-zero counts of rational plane curves through `3d - 1`
/// points, from the WDVV recursion with `N_1 = 1`.
pub fn wdvv_genus0_oracle(max_degree: usize) -> Vec<Rational> {
    let binom = |n: i64, k: i64| -> Rational {
        if k < 0 || k > n {
            return Rational::zero();
        }
        let mut acc = Rational::one();
        for i in 0..k {
            acc = acc * Rational::from_i64(n - i) / Rational::from_i64(i + 1);
        }
        acc
    };
    let mut n: Vec<Rational> = vec![Rational::zero(); max_degree + 1];
    if max_degree >= 1 {
        n[1] = Rational::one();
    }
    for d in 2..=max_degree as i64 {
        let mut acc = Rational::zero();
        for d1 in 1..d {
            let d2 = d - d1;
            let w = Rational::from_i64(d1 * d1 * d2 * d2) * binom(3 * d - 4, 3 * d1 - 2)
                - Rational::from_i64(d1 * d1 * d1 * d2) * binom(3 * d - 4, 3 * d1 - 1);
            acc += &(n[d1 as usize].clone() * &n[d2 as usize] * &w);
        }
        n[d as usize] = acc;
    }
    n.into_iter().skip(1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::presets;
    use crate::nodal::check_symplectic;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    #[test]
    fn p1_rmatrix_first_coefficient() {
        let alg = presets::qh_p1(q(1, 1));
        let frame = alg.idempotent_decomposition().unwrap();
        let data = qh_p1_euler::<Rational>();
        data.validate(&alg).unwrap();
        let e = solve_rmatrix(&frame, &data, 8).unwrap();
        assert!(satisfies_recursion(&alg, &data, &e));
        assert!(check_symplectic(&Pairing::from_algebra(&alg), &e));
        let ef = canonical_euler_frame(&frame, &data);
        let mut u = ef.u.clone();
        u.sort();
        assert_eq!(u, vec![q(-2, 1), q(2, 1)]);
    }

    #[test]
    fn rank_one_is_identity() {
        let alg = presets::rank_one(q(1, 1));
        let frame = alg.idempotent_decomposition().unwrap();
        let e = solve_rmatrix(&frame, &rank_one_euler(q(3, 1)), 5).unwrap();
        assert!(e.is_identity());
    }

    #[test]
    fn wdvv_numbers() {
        assert_eq!(wdvv_genus0_oracle(4), vec![q(1, 1), q(1, 1), q(12, 1), q(620, 1)]);
    }

    #[test]
    fn hodge_twist_rejects_even_terms() {
        assert_eq!(HodgeTwist::from_dense(&[q(0, 1), q(1, 1), q(1, 1)]), Err(ReconstructionError::EvenHodgeTerm));
    }
}
