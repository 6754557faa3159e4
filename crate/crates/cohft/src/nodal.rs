//! Series-level classification data: `E(z)`, adjoints, the nodal propagator
//! `D`, the forms `B'` and `C'`, the bivector `W_E`, and the dilaton-type
//! shift `zeta` with its kappa exponents `a_j`.

use rand::Rng;
use serde_json::{json, Value};

use crate::frobenius::{FrobeniusAlgebra, SemisimpleFrame};
use crate::matrix::{vec_ops, LinalgError, Matrix};
use crate::scalar::Scalar;
use crate::series::{divided_difference, scalar_series, BiSeries, EndSeries, SeriesError, VecSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NodalError {
    #[error("E must have constant term Id")]
    NotUnipotent,
    #[error("{0} fails the symmetry constraint (max deviation {1:e})")]
    Symmetry(&'static str, f64),
    #[error("E is not symplectic: {0}")]
    NotSymplectic(SeriesError),
    #[error("D is not Id on z2 = -z1")]
    BadPropagator,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The pairing with its inverse cached, for `M* = b^{-1} M^T b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pairing<S: Scalar> {
    beta: Matrix<S>,
    beta_inv: Matrix<S>,
}

impl<S: Scalar> Pairing<S> {
    pub fn new(beta: Matrix<S>) -> Result<Self, LinalgError> {
        let beta_inv = beta.inverse()?;
        Ok(Pairing { beta, beta_inv })
    }

    pub fn from_algebra(alg: &FrobeniusAlgebra<S>) -> Self {
        Self::new(alg.pairing().clone()).expect("validated algebras have nondegenerate pairing")
    }

    pub fn beta(&self) -> &Matrix<S> {
        &self.beta
    }

    pub fn beta_inv(&self) -> &Matrix<S> {
        &self.beta_inv
    }

    pub fn adjoint(&self, m: &Matrix<S>) -> Matrix<S> {
        &(&self.beta_inv * &m.transpose()) * &self.beta
    }

    pub fn self_adjoint_part(&self, m: &Matrix<S>) -> Matrix<S> {
        (m + &self.adjoint(m)).scale(&S::from_ratio(1, 2))
    }

    pub fn skew_part(&self, m: &Matrix<S>) -> Matrix<S> {
        (m - &self.adjoint(m)).scale(&S::from_ratio(1, 2))
    }

    pub fn bi_adjoint(&self, f: &BiSeries<S>) -> BiSeries<S> {
        f.map_coeffs(|m| self.adjoint(m))
    }
}

/// Coefficient-wise adjoint `E*(z)`.
pub fn adjoint_series<S: Scalar>(pairing: &Pairing<S>, e: &EndSeries<S>) -> EndSeries<S> {
    e.map_coeffs(|m| pairing.adjoint(m))
}

/// `E(z) E*(-z) - Id`, truncated.
pub fn symplectic_defect<S: Scalar>(pairing: &Pairing<S>, e: &EndSeries<S>) -> Result<EndSeries<S>, SeriesError> {
    let prod = e.mul(&adjoint_series(pairing, e).negate_variable())?;
    prod.sub(&EndSeries::identity(e.dim(), e.order()))
}

/// True iff `E(z) E*(-z) = Id` to the truncation order.
pub fn check_symplectic<S: Scalar>(pairing: &Pairing<S>, e: &EndSeries<S>) -> bool {
    symplectic_defect(pairing, e).map(|d| d.coeffs().iter().all(Matrix::is_zero)).unwrap_or(false)
}

/// `G(z) = E^{-1}(-z)* E^{-1}(z)`; `Id` exactly when `E` is symplectic.
pub fn gauge_form<S: Scalar>(pairing: &Pairing<S>, e: &EndSeries<S>) -> Result<EndSeries<S>, SeriesError> {
    let einv = e.inverse()?;
    adjoint_series(pairing, &einv.negate_variable()).mul(&einv)
}

fn symmetry_deviation<S: Scalar>(pairing: &Pairing<S>, f: &BiSeries<S>) -> f64 {
    f.swap().max_abs_diff(&pairing.bi_adjoint(f))
}

fn is_symmetric<S: Scalar>(pairing: &Pairing<S>, f: &BiSeries<S>) -> bool {
    f.swap().approx_eq(&pairing.bi_adjoint(f))
}

fn check_unipotent<S: Scalar>(e: &EndSeries<S>) -> Result<(), NodalError> {
    if !e.coeff(0).approx_eq(&Matrix::identity(e.dim())) {
        return Err(NodalError::NotUnipotent);
    }
    Ok(())
}

/// `B'(z1, z2) = E^{-1}(-z1)* E^{-1}(z1) D(z1, z2)`; must satisfy `B'(z2, z1) = B'(z1, z2)*`.
#[allow(non_snake_case)]
pub fn B_from_ED<S: Scalar>(pairing: &Pairing<S>, e: &EndSeries<S>, d: &BiSeries<S>) -> Result<BiSeries<S>, NodalError> {
    check_unipotent(e)?;
    let g = gauge_form(pairing, e)?;
    let b = BiSeries::lift_z1(&g).with_order(d.order()).mul(d)?;
    if !is_symmetric(pairing, &b) {
        return Err(NodalError::Symmetry("B'", symmetry_deviation(pairing, &b)));
    }
    Ok(b)
}

/// `C'(z1, z2) = D(z2, z1) E(-z1) E*(z1)`; must satisfy `C'(z2, z1) = C'(z1, z2)*`.
#[allow(non_snake_case)]
pub fn C_from_ED<S: Scalar>(pairing: &Pairing<S>, e: &EndSeries<S>, d: &BiSeries<S>) -> Result<BiSeries<S>, NodalError> {
    check_unipotent(e)?;
    let h = e.negate_variable().mul(&adjoint_series(pairing, e))?;
    let c = d.swap().mul(&BiSeries::lift_z1(&h).with_order(d.order()))?;
    if !is_symmetric(pairing, &c) {
        return Err(NodalError::Symmetry("C'", symmetry_deviation(pairing, &c)));
    }
    Ok(c)
}

/// Outcome of the four-way comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct FourWayReport {
    /// `D*(0, z) D^{-1}(z, 0) = G(z)`.
    pub d_matches: bool,
    /// `B'(z, -z) = G(z)`.
    pub b_matches: bool,
    /// `C'(-z, z)^{-1} = G(z)`.
    pub c_matches: bool,
    pub max_deviation: f64,
}

impl FourWayReport {
    pub fn all_hold(&self) -> bool {
        self.d_matches && self.b_matches && self.c_matches
    }

    pub fn to_json(&self) -> Value {
        json!({
            "d_matches": self.d_matches,
            "b_matches": self.b_matches,
            "c_matches": self.c_matches,
            "all_hold": self.all_hold(),
            "max_deviation": self.max_deviation,
        })
    }
}

/// Checks `E^{-1}(-z)* E^{-1}(z) = D*(0,z) D^{-1}(z,0) = B'(z,-z) = C'(-z,z)^{-1}`.
pub fn consistency_4way<S: Scalar>(
    pairing: &Pairing<S>,
    e: &EndSeries<S>,
    b: &BiSeries<S>,
    c: &BiSeries<S>,
    d: &BiSeries<S>,
) -> Result<FourWayReport, NodalError> {
    let k = d.order().min(e.order());
    let g = gauge_form(pairing, e)?.with_order(k);
    let (zero, one) = (S::zero(), S::one());
    let d0z = adjoint_series(pairing, &d.restrict(&zero, &one)).with_order(k);
    let dz0 = d.restrict(&one, &zero).with_order(k);
    let d_side = d0z.mul(&dz0.inverse()?)?;
    let b_side = b.restrict(&one, &-one.clone()).with_order(k);
    let c_side = c.restrict(&-one.clone(), &one).with_order(k).inverse()?;
    let max_deviation = [&d_side, &b_side, &c_side].iter().map(|s| s.max_abs_diff(&g)).fold(0.0, f64::max);
    Ok(FourWayReport {
        d_matches: d_side.approx_eq(&g),
        b_matches: b_side.approx_eq(&g),
        c_matches: c_side.approx_eq(&g),
        max_deviation,
    })
}

/// `W_E = (E^{-1}(z1) E^{-1}(z2)* - Id)/(z1 + z2)`, of order `K - 1`.
#[allow(non_snake_case)]
pub fn W_from_E<S: Scalar>(pairing: &Pairing<S>, e: &EndSeries<S>) -> Result<BiSeries<S>, NodalError> {
    check_unipotent(e)?;
    let einv = e.inverse()?;
    let f = BiSeries::lift_z1(&einv).mul(&BiSeries::lift_z2(&adjoint_series(pairing, &einv)))?;
    divided_difference(&f).map_err(|err| match err {
        SeriesError::AntiDiagonal { .. } => NodalError::NotSymplectic(err),
        other => other.into(),
    })
}

/// `zeta` together with the kappa exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaData<S: Scalar> {
    /// `zeta(z) = z (E^{-1}(z) 1 - 1)`.
    pub zeta: VecSeries<S>,
    /// `a[j - 1] = a_j` with `exp(-sum_j a_j z^j) = E^{-1}(z) 1`.
    pub a: Vec<Vec<S>>,
}

/// Computes `zeta` and `a_j` from `E`; the logarithm is taken componentwise
/// in the idempotent frame.
///
/// `zeta` is returned to order `K + 1` (it starts at `z^2` when `E_0 = Id`).
#[allow(non_snake_case)]
pub fn zeta_from_E<S: Scalar>(frame: &SemisimpleFrame<S>, unit: &[S], e: &EndSeries<S>) -> Result<ZetaData<S>, NodalError> {
    check_unipotent(e)?;
    let k = e.order();
    let n = e.dim();
    let u = e.inverse()?.apply(unit);
    let zeta = u.sub(&{
        let mut one = VecSeries::zero(n, k);
        one.set_coeff(0, unit.to_vec());
        one
    })
    .shift_up();
    let comps: Vec<Vec<S>> = (0..=k).map(|j| frame.to_p_coords(u.coeff(j))).collect();
    let mut a = vec![vec_ops::zeros(n); k];
    for i in 0..n {
        let series: Vec<S> = comps.iter().map(|c| c[i].clone()).collect();
        let log = scalar_series::log(&series);
        for j in 1..=k {
            // a_j in P-coordinates is -[z^j] log
            let mut pc = vec_ops::zeros(n);
            pc[i] = -log[j].clone();
            a[j - 1] = vec_ops::add(&a[j - 1], &frame.from_p_coords(&pc));
        }
    }
    Ok(ZetaData { zeta, a })
}

/// The literal shift `z (1 - E^{-1}(-z) 1)`; kept to compare conventions.
pub fn zeta_literal<S: Scalar>(unit: &[S], e: &EndSeries<S>) -> Result<VecSeries<S>, NodalError> {
    let u = e.inverse()?.negate_variable().apply(unit);
    let mut one = VecSeries::zero(e.dim(), e.order());
    one.set_coeff(0, unit.to_vec());
    Ok(one.sub(&u).shift_up())
}

/// `zeta = z exp(-sum_j a_j z^j) - z` with the exponential taken componentwise.
pub fn zeta_from_a<S: Scalar>(frame: &SemisimpleFrame<S>, a: &[Vec<S>]) -> VecSeries<S> {
    let n = frame.dim();
    let k = a.len();
    let mut out = VecSeries::zero(n, k + 1);
    let pa: Vec<Vec<S>> = a.iter().map(|v| frame.to_p_coords(v)).collect();
    for i in 0..n {
        let mut s = vec![S::zero(); k + 1];
        for j in 1..=k {
            s[j] = -pa[j - 1][i].clone();
        }
        let ex = scalar_series::exp(&s);
        for (j, c) in ex.iter().enumerate() {
            let coeff = if j == 0 { c.clone() - &S::one() } else { c.clone() };
            let mut pc = vec_ops::zeros(n);
            pc[i] = coeff;
            let prev = out.coeff(j + 1).to_vec();
            out.set_coeff(j + 1, vec_ops::add(&prev, &frame.from_p_coords(&pc)));
        }
    }
    out
}

/// Random symplectic `E = prod_k exp(X_k z^k)` with `X_k` self-adjoint for odd
/// `k` and skew for even `k`; entries are small rationals.
pub fn random_symplectic<S: Scalar>(pairing: &Pairing<S>, order: usize, rng: &mut impl Rng) -> EndSeries<S> {
    let n = pairing.beta().rows();
    let mut e = EndSeries::identity(n, order);
    for k in 1..=order {
        let m = Matrix::from_fn(n, n, |_, _| S::from_ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3)));
        let x = if k % 2 == 1 { pairing.self_adjoint_part(&m) } else { pairing.skew_part(&m) };
        let mut gen = EndSeries::zero(n, order);
        gen.set_coeff(k, x);
        e = e.mul(&gen.exp().expect("nilpotent generator")).expect("same shape");
    }
    e
}

/// Random unipotent `E` (not symplectic in general).
pub fn random_unipotent<S: Scalar>(n: usize, order: usize, rng: &mut impl Rng) -> EndSeries<S> {
    let mut e = EndSeries::identity(n, order);
    for k in 1..=order {
        e.set_coeff(k, Matrix::from_fn(n, n, |_, _| S::from_ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3))));
    }
    e
}

/// An admissible `D` for arbitrary `E`: `D = G(z1)^{-1} B'` with
/// `B' = G((z1 - z2)/2) + (z1 + z2) S`, `S` self-adjoint.
pub fn admissible_propagator<S: Scalar>(
    pairing: &Pairing<S>,
    e: &EndSeries<S>,
    rng: &mut impl Rng,
) -> Result<BiSeries<S>, NodalError> {
    let n = e.dim();
    let k = e.order();
    let g = gauge_form(pairing, e)?;
    let half = S::from_ratio(1, 2);
    let mut b = BiSeries::from_linear_substitution(&g, &half, &-half.clone());
    let m = Matrix::from_fn(n, n, |_, _| S::from_ratio(rng.gen_range(-3..=3), rng.gen_range(1..=2)));
    let s = pairing.self_adjoint_part(&m);
    if k >= 1 {
        b.set(1, 0, &b.get(1, 0) + &s);
        b.set(0, 1, &b.get(0, 1) + &s);
    }
    Ok(BiSeries::lift_z1(&g.inverse()?).mul(&b)?)
}

/// Bundle of classification data for the `nodal` command.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationData<S: Scalar> {
    pub e: EndSeries<S>,
    pub d: BiSeries<S>,
}

impl<S: Scalar> ClassificationData<S> {
    /// Cohomological case: `D = Id`.
    pub fn cohft(e: EndSeries<S>) -> Self {
        let d = BiSeries::identity(e.dim(), e.order());
        ClassificationData { e, d }
    }

    pub fn d_is_identity_on_antidiagonal(&self) -> bool {
        let one = S::one();
        self.d.restrict(&one, &-one.clone()).is_identity()
    }

    /// Runs every series-level check and collects the derived objects.
    pub fn analyze(&self, alg: &FrobeniusAlgebra<S>, frame: &SemisimpleFrame<S>) -> Value {
        let pairing = Pairing::from_algebra(alg);
        let symplectic = check_symplectic(&pairing, &self.e);
        let d_ok = self.d_is_identity_on_antidiagonal();
        let b = B_from_ED(&pairing, &self.e, &self.d);
        let c = C_from_ED(&pairing, &self.e, &self.d);
        let four = match (&b, &c) {
            (Ok(b), Ok(c)) => consistency_4way(&pairing, &self.e, b, c, &self.d).ok().map(|r| r.to_json()),
            _ => None,
        };
        let w = W_from_E(&pairing, &self.e);
        let z = zeta_from_E(frame, alg.unit(), &self.e);
        let res = |r: Result<Value, NodalError>| match r {
            Ok(v) => json!({"ok": true, "value": v}),
            Err(e) => json!({"ok": false, "error": e.to_string()}),
        };
        json!({
            "symplectic": symplectic,
            "d_identity_on_antidiagonal": d_ok,
            "B": res(b.map(|b| b.to_json())),
            "C": res(c.map(|c| c.to_json())),
            "four_way": four,
            "W": res(w.map(|w| w.to_json())),
            "zeta": res(z.map(|z| json!({
                "zeta": z.zeta.to_json(),
                "a": z.a.iter().map(|v| Value::Array(v.iter().map(Scalar::to_json).collect())).collect::<Vec<_>>(),
            }))),
        })
    }
}
