//! Truncated power series in one and two variables with matrix or vector
//! coefficients.
//!
//! All arithmetic silently truncates at the series order `K`: coefficient
//! lists hold exactly `K + 1` entries (one variable) or the triangle
//! `p + q <= K` (two variables).

use serde_json::Value;

use crate::matrix::{vec_ops, LinalgError, Matrix};
use crate::scalar::Scalar;

/// Errors from series arithmetic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("order mismatch: {0} vs {1}")]
    Order(usize, usize),
    #[error("constant term is singular")]
    SingularConstant,
    #[error("f - Id does not vanish on z2 = -z1 (first failure at total degree {degree})")]
    AntiDiagonal { degree: usize },
    #[error("empty or malformed series: {0}")]
    Malformed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `E(z) = sum_k E_k z^k`, `k = 0..=K`, with `N x N` matrix coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct EndSeries<S: Scalar> {
    dim: usize,
    coeffs: Vec<Matrix<S>>,
}

impl<S: Scalar> EndSeries<S> {
    pub fn zero(dim: usize, order: usize) -> Self {
        EndSeries { dim, coeffs: vec![Matrix::zeros(dim, dim); order + 1] }
    }

    pub fn identity(dim: usize, order: usize) -> Self {
        let mut s = Self::zero(dim, order);
        s.coeffs[0] = Matrix::identity(dim);
        s
    }

    /// Constant series `m`.
    pub fn constant(m: Matrix<S>, order: usize) -> Self {
        let dim = m.rows();
        let mut s = Self::zero(dim, order);
        s.coeffs[0] = m;
        s
    }

    pub fn from_coeffs(coeffs: Vec<Matrix<S>>) -> Result<Self, SeriesError> {
        let dim = coeffs
            .first()
            .ok_or_else(|| SeriesError::Malformed("no coefficients".into()))?
            .rows();
        if coeffs.iter().any(|m| m.rows() != dim || m.cols() != dim) {
            return Err(SeriesError::Dimension("coefficients must be square of equal size".into()));
        }
        Ok(EndSeries { dim, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &Matrix<S> {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Matrix<S>] {
        &self.coeffs
    }

    /// Coefficient `k`, or zero beyond the order.
    pub fn coeff_or_zero(&self, k: usize) -> Matrix<S> {
        self.coeffs.get(k).cloned().unwrap_or_else(|| Matrix::zeros(self.dim, self.dim))
    }

    pub fn set_coeff(&mut self, k: usize, m: Matrix<S>) {
        assert_eq!((m.rows(), m.cols()), (self.dim, self.dim), "coefficient shape");
        self.coeffs[k] = m;
    }

    /// Re-truncates (or zero-extends) to order `order`.
    pub fn with_order(&self, order: usize) -> Self {
        let coeffs = (0..=order).map(|k| self.coeff_or_zero(k)).collect();
        EndSeries { dim: self.dim, coeffs }
    }

    pub fn map_coeffs(&self, f: impl Fn(&Matrix<S>) -> Matrix<S>) -> Self {
        EndSeries { dim: self.dim, coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// `E(z) -> E(c z)`.
    pub fn rescale_variable(&self, c: &S) -> Self {
        let mut pow = S::one();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for m in &self.coeffs {
            coeffs.push(m.scale(&pow));
            pow = pow * c;
        }
        EndSeries { dim: self.dim, coeffs }
    }

    /// `E(z) -> E(-z)`.
    pub fn negate_variable(&self) -> Self {
        self.rescale_variable(&-S::one())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map_coeffs(|m| m.scale(s))
    }

    fn check_compatible(&self, o: &Self) -> Result<(), SeriesError> {
        if self.dim != o.dim {
            return Err(SeriesError::Dimension(format!("{} vs {}", self.dim, o.dim)));
        }
        if self.order() != o.order() {
            return Err(SeriesError::Order(self.order(), o.order()));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(o)?;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        Ok(EndSeries { dim: self.dim, coeffs })
    }

    pub fn sub(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(o)?;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect();
        Ok(EndSeries { dim: self.dim, coeffs })
    }

    pub fn mul(&self, o: &Self) -> Result<Self, SeriesError> {
        series_mul(self, o)
    }

    pub fn inverse(&self) -> Result<Self, SeriesError> {
        series_inverse(self)
    }

    /// `exp(X(z))` for a series with zero constant term.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::Malformed("exp needs zero constant term".into()));
        }
        let k = self.order();
        let mut out = Self::identity(self.dim, k);
        let mut term = Self::identity(self.dim, k);
        for m in 1..=k {
            term = term.mul(self)?.scale(&S::from_ratio(1, m as i64));
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Applies the series to a vector: `E(z) v` as an `A[[z]]` element.
    pub fn apply(&self, v: &[S]) -> VecSeries<S> {
        VecSeries { dim: self.dim, coeffs: self.coeffs.iter().map(|m| m.mul_vec(v)).collect() }
    }

    pub fn approx_eq(&self, o: &Self) -> bool {
        self.dim == o.dim
            && self.order() == o.order()
            && self.coeffs.iter().zip(&o.coeffs).all(|(a, b)| a.approx_eq(b))
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    pub fn is_identity(&self) -> bool {
        self.approx_eq(&Self::identity(self.dim, self.order()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.coeffs.iter().map(Matrix::to_json).collect())
    }

    pub fn from_json(v: &Value) -> Result<Self, SeriesError> {
        let items = v.as_array().ok_or_else(|| SeriesError::Malformed("expected list of matrices".into()))?;
        let coeffs = items.iter().map(Matrix::from_json).collect::<Result<Vec<_>, _>>()?;
        Self::from_coeffs(coeffs)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> EndSeries<T> {
        EndSeries { dim: self.dim, coeffs: self.coeffs.iter().map(|m| m.map(&f)).collect() }
    }
}

/// Product of two series of equal order and dimension.
pub fn series_mul<S: Scalar>(a: &EndSeries<S>, b: &EndSeries<S>) -> Result<EndSeries<S>, SeriesError> {
    a.check_compatible(b)?;
    let k = a.order();
    let mut out = EndSeries::zero(a.dim, k);
    for i in 0..=k {
        if S::is_exact() && a.coeffs[i].is_zero() {
            continue;
        }
        for j in 0..=k - i {
            let t = &a.coeffs[i] * &b.coeffs[j];
            out.coeffs[i + j] = &out.coeffs[i + j] + &t;
        }
    }
    Ok(out)
}

/// Two-sided inverse to the truncation order; needs an invertible constant term.
pub fn series_inverse<S: Scalar>(a: &EndSeries<S>) -> Result<EndSeries<S>, SeriesError> {
    let a0inv = a.coeffs[0].inverse().map_err(|_| SeriesError::SingularConstant)?;
    let k = a.order();
    let mut out = EndSeries::zero(a.dim, k);
    out.coeffs[0] = a0inv.clone();
    for n in 1..=k {
        let mut acc = Matrix::zeros(a.dim, a.dim);
        for j in 1..=n {
            acc = &acc + &(&a.coeffs[j] * &out.coeffs[n - j]);
        }
        out.coeffs[n] = -&(&a0inv * &acc);
    }
    Ok(out)
}

/// Element of `A[[z]]` truncated at order `K`.
#[derive(Clone, PartialEq, Debug)]
pub struct VecSeries<S: Scalar> {
    dim: usize,
    coeffs: Vec<Vec<S>>,
}

impl<S: Scalar> VecSeries<S> {
    pub fn zero(dim: usize, order: usize) -> Self {
        VecSeries { dim, coeffs: vec![vec_ops::zeros(dim); order + 1] }
    }

    pub fn from_coeffs(coeffs: Vec<Vec<S>>) -> Result<Self, SeriesError> {
        let dim = coeffs.first().ok_or_else(|| SeriesError::Malformed("no coefficients".into()))?.len();
        if coeffs.iter().any(|c| c.len() != dim) {
            return Err(SeriesError::Dimension("ragged vector coefficients".into()));
        }
        Ok(VecSeries { dim, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &[S] {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Vec<S>] {
        &self.coeffs
    }

    pub fn coeff_or_zero(&self, k: usize) -> Vec<S> {
        self.coeffs.get(k).cloned().unwrap_or_else(|| vec_ops::zeros(self.dim))
    }

    pub fn set_coeff(&mut self, k: usize, v: Vec<S>) {
        assert_eq!(v.len(), self.dim, "coefficient length");
        self.coeffs[k] = v;
    }

    pub fn with_order(&self, order: usize) -> Self {
        VecSeries { dim: self.dim, coeffs: (0..=order).map(|k| self.coeff_or_zero(k)).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.order().max(o.order());
        let coeffs = (0..=n).map(|k| vec_ops::add(&self.coeff_or_zero(k), &o.coeff_or_zero(k))).collect();
        VecSeries { dim: self.dim, coeffs }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-S::one()))
    }

    pub fn scale(&self, s: &S) -> Self {
        VecSeries { dim: self.dim, coeffs: self.coeffs.iter().map(|c| vec_ops::scale(c, s)).collect() }
    }

    /// Multiplication by `z` (order grows by one).
    pub fn shift_up(&self) -> Self {
        let mut coeffs = vec![vec_ops::zeros(self.dim)];
        coeffs.extend(self.coeffs.iter().cloned());
        VecSeries { dim: self.dim, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| vec_ops::is_zero(c))
    }

    /// Lowest index with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !vec_ops::is_zero(c))
    }

    pub fn approx_eq(&self, o: &Self) -> bool {
        let n = self.order().max(o.order());
        (0..=n).all(|k| vec_ops::approx_eq(&self.coeff_or_zero(k), &o.coeff_or_zero(k)))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.coeffs
                .iter()
                .map(|c| Value::Array(c.iter().map(Scalar::to_json).collect()))
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<Self, SeriesError> {
        let items = v.as_array().ok_or_else(|| SeriesError::Malformed("expected list of vectors".into()))?;
        let coeffs = items
            .iter()
            .map(|c| {
                c.as_array()
                    .ok_or_else(|| SeriesError::Malformed("expected vector".into()))?
                    .iter()
                    .map(|x| S::from_json(x).map_err(|e| SeriesError::Linalg(e.into())))
                    .collect::<Result<Vec<S>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_coeffs(coeffs)
    }
}

/// `F(z1, z2) = sum_{p+q<=K} F_{pq} z1^p z2^q` with matrix coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct BiSeries<S: Scalar> {
    dim: usize,
    order: usize,
    coeffs: Vec<Matrix<S>>,
}

fn tri_index(p: usize, q: usize) -> usize {
    let n = p + q;
    n * (n + 1) / 2 + q
}

impl<S: Scalar> BiSeries<S> {
    pub fn zero(dim: usize, order: usize) -> Self {
        let len = tri_index(0, order) + order + 1;
        BiSeries { dim, order, coeffs: vec![Matrix::zeros(dim, dim); len] }
    }

    pub fn identity(dim: usize, order: usize) -> Self {
        let mut s = Self::zero(dim, order);
        s.coeffs[0] = Matrix::identity(dim);
        s
    }

    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(usize, usize) -> Matrix<S>) -> Self {
        let mut s = Self::zero(dim, order);
        for n in 0..=order {
            for q in 0..=n {
                s.coeffs[tri_index(n - q, q)] = f(n - q, q);
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `z1^p z2^q`; zero outside the triangle.
    pub fn get(&self, p: usize, q: usize) -> Matrix<S> {
        if p + q > self.order {
            Matrix::zeros(self.dim, self.dim)
        } else {
            self.coeffs[tri_index(p, q)].clone()
        }
    }

    pub fn get_ref(&self, p: usize, q: usize) -> &Matrix<S> {
        &self.coeffs[tri_index(p, q)]
    }

    pub fn set(&mut self, p: usize, q: usize, m: Matrix<S>) {
        assert!(p + q <= self.order, "index outside triangle");
        self.coeffs[tri_index(p, q)] = m;
    }

    /// Iterates `(p, q, coefficient)` over the triangle.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Matrix<S>)> {
        (0..=self.order).flat_map(move |n| (0..=n).map(move |q| (n - q, q, &self.coeffs[tri_index(n - q, q)])))
    }

    pub fn with_order(&self, order: usize) -> Self {
        Self::from_fn(self.dim, order, |p, q| self.get(p, q))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Matrix<S>) -> Matrix<S>) -> Self {
        BiSeries { dim: self.dim, order: self.order, coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// `E(z1)` viewed as a two-variable series.
    pub fn lift_z1(e: &EndSeries<S>) -> Self {
        Self::from_fn(e.dim(), e.order(), |p, q| if q == 0 { e.coeff(p).clone() } else { Matrix::zeros(e.dim(), e.dim()) })
    }

    /// `E(z2)` viewed as a two-variable series.
    pub fn lift_z2(e: &EndSeries<S>) -> Self {
        Self::from_fn(e.dim(), e.order(), |p, q| if p == 0 { e.coeff(q).clone() } else { Matrix::zeros(e.dim(), e.dim()) })
    }

    pub fn add(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(o)?;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        Ok(BiSeries { dim: self.dim, order: self.order, coeffs })
    }

    pub fn sub(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(o)?;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect();
        Ok(BiSeries { dim: self.dim, order: self.order, coeffs })
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map_coeffs(|m| m.scale(s))
    }

    /// Truncated product `self * o` (matrix order preserved).
    pub fn mul(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(o)?;
        let k = self.order;
        let mut out = Self::zero(self.dim, k);
        for (p1, q1, a) in self.iter() {
            if S::is_exact() && a.is_zero() {
                continue;
            }
            for n2 in 0..=k - p1 - q1 {
                for q2 in 0..=n2 {
                    let p2 = n2 - q2;
                    let idx = tri_index(p1 + p2, q1 + q2);
                    out.coeffs[idx] = &out.coeffs[idx] + &(a * o.get_ref(p2, q2));
                }
            }
        }
        Ok(out)
    }

    /// Multiplication by `z1 + z2`, truncated at the same order.
    pub fn times_sum(&self) -> Self {
        Self::from_fn(self.dim, self.order, |p, q| {
            let mut m = Matrix::zeros(self.dim, self.dim);
            if p > 0 {
                m = &m + &self.get(p - 1, q);
            }
            if q > 0 {
                m = &m + &self.get(p, q - 1);
            }
            m
        })
    }

    /// `F(z1, z2) -> F(z2, z1)`.
    pub fn swap(&self) -> Self {
        Self::from_fn(self.dim, self.order, |p, q| self.get(q, p))
    }

    /// One-variable restriction `z1 = c1 z`, `z2 = c2 z`.
    pub fn restrict(&self, c1: &S, c2: &S) -> EndSeries<S> {
        let mut out = EndSeries::zero(self.dim, self.order);
        for (p, q, m) in self.iter() {
            let w = c1.powi(p as i64) * &c2.powi(q as i64);
            if w.is_zero() {
                continue;
            }
            out.coeffs[p + q] = &out.coeffs[p + q] + &m.scale(&w);
        }
        out
    }

    pub fn approx_eq(&self, o: &Self) -> bool {
        self.dim == o.dim
            && self.order == o.order
            && self.coeffs.iter().zip(&o.coeffs).all(|(a, b)| a.approx_eq(b))
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    pub fn is_identity(&self) -> bool {
        self.approx_eq(&Self::identity(self.dim, self.order))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Matrix::is_zero)
    }

    fn check_compatible(&self, o: &Self) -> Result<(), SeriesError> {
        if self.dim != o.dim {
            return Err(SeriesError::Dimension(format!("{} vs {}", self.dim, o.dim)));
        }
        if self.order != o.order {
            return Err(SeriesError::Order(self.order, o.order));
        }
        Ok(())
    }

    /// Coefficients as rows `[p, q, matrix]` in triangle order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.iter()
                .map(|(p, q, m)| Value::Array(vec![Value::from(p), Value::from(q), m.to_json()]))
                .collect(),
        )
    }

    pub fn from_json(dim: usize, order: usize, v: &Value) -> Result<Self, SeriesError> {
        let rows = v.as_array().ok_or_else(|| SeriesError::Malformed("expected coefficient rows".into()))?;
        let mut out = Self::zero(dim, order);
        for row in rows {
            let parts = row.as_array().filter(|r| r.len() == 3).ok_or_else(|| SeriesError::Malformed("expected [p, q, matrix]".into()))?;
            let p = parts[0].as_u64().ok_or_else(|| SeriesError::Malformed("bad p".into()))? as usize;
            let q = parts[1].as_u64().ok_or_else(|| SeriesError::Malformed("bad q".into()))? as usize;
            if p + q > order {
                return Err(SeriesError::Malformed(format!("term ({p},{q}) beyond order {order}")));
            }
            let m = Matrix::from_json(&parts[2])?;
            if m.rows() != dim || m.cols() != dim {
                return Err(SeriesError::Dimension("coefficient shape".into()));
            }
            out.set(p, q, m);
        }
        Ok(out)
    }
}

/// Solves `(z1 + z2) W = f - Id` for a bi-series with `f(z, -z) = Id`.
///
/// The result has order `K - 1`. Fails if `f - Id` does not vanish on the
/// anti-diagonal to order `K`.
pub fn divided_difference<S: Scalar>(f: &BiSeries<S>) -> Result<BiSeries<S>, SeriesError> {
    let k = f.order();
    if k == 0 {
        return Err(SeriesError::Malformed("divided difference needs order >= 1".into()));
    }
    let dim = f.dim();
    let g = |p: usize, q: usize| {
        let m = f.get(p, q);
        if p == 0 && q == 0 {
            &m - &Matrix::identity(dim)
        } else {
            m
        }
    };
    if !g(0, 0).is_zero() {
        return Err(SeriesError::AntiDiagonal { degree: 0 });
    }
    let mut w = BiSeries::zero(dim, k - 1);
    for n in 1..=k {
        w.set(n - 1, 0, g(n, 0));
        for q in 1..n {
            let m = &g(n - q, q) - w.get_ref(n - q, q - 1);
            w.set(n - 1 - q, q, m);
        }
        if !(&g(0, n) - w.get_ref(0, n - 1)).is_zero() {
            return Err(SeriesError::AntiDiagonal { degree: n });
        }
    }
    Ok(w)
}

/// Scalar power series `c[0] + c[1] z + ...` (truncated at the slice length).
pub mod scalar_series {
    use crate::scalar::Scalar;

    pub fn mul<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
        let n = a.len().min(b.len());
        let mut out = vec![S::zero(); n];
        for (i, ai) in a.iter().enumerate().take(n) {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate().take(n - i) {
                out[i + j] += &(ai.clone() * bj);
            }
        }
        out
    }

    /// Needs a nonzero constant term.
    pub fn inverse<S: Scalar>(a: &[S]) -> Vec<S> {
        let inv0 = a[0].inv();
        let mut out = vec![S::zero(); a.len()];
        out[0] = inv0.clone();
        for n in 1..a.len() {
            let mut acc = S::zero();
            for j in 1..=n {
                acc += &(a[j].clone() * &out[n - j]);
            }
            out[n] = -(acc * &inv0);
        }
        out
    }

    /// `log a` for `a[0] = 1`, via `(log a)' = a'/a`.
    pub fn log<S: Scalar>(a: &[S]) -> Vec<S> {
        let n = a.len();
        let inv = inverse(a);
        let deriv: Vec<S> = (1..n).map(|k| a[k].clone() * &S::from_i64(k as i64)).collect();
        let q = mul(&deriv, &inv[..n - 1]);
        let mut out = vec![S::zero(); n];
        for k in 1..n {
            out[k] = q[k - 1].clone() / S::from_i64(k as i64);
        }
        out
    }

    /// `exp a` for `a[0] = 0`, via `f' = a' f`.
    pub fn exp<S: Scalar>(a: &[S]) -> Vec<S> {
        let n = a.len();
        let mut out = vec![S::zero(); n];
        out[0] = S::one();
        for k in 1..n {
            let mut acc = S::zero();
            for j in 1..=k {
                acc += &(a[j].clone() * &S::from_i64(j as i64) * &out[k - j]);
            }
            out[k] = acc / S::from_i64(k as i64);
        }
        out
    }

    /// `sum_k c_k (x z)^k`.
    pub fn rescale<S: Scalar>(a: &[S], x: &S) -> Vec<S> {
        let mut pow = S::one();
        a.iter()
            .map(|c| {
                let v = c.clone() * &pow;
                pow *= x;
                v
            })
            .collect()
    }
}

impl<S: Scalar> BiSeries<S> {
    /// `E(c1 z1 + c2 z2)` for a one-variable series.
    pub fn from_linear_substitution(e: &EndSeries<S>, c1: &S, c2: &S) -> Self {
        let k = e.order();
        let mut binom = vec![vec![0i64; k + 1]; k + 1];
        for n in 0..=k {
            binom[n][0] = 1;
            for j in 1..=n {
                binom[n][j] = binom[n - 1][j - 1] + if j < n { binom[n - 1][j] } else { 0 };
            }
        }
        Self::from_fn(e.dim(), k, |p, q| {
            let w = S::from_i64(binom[p + q][p]) * &c1.powi(p as i64) * &c2.powi(q as i64);
            e.coeff(p + q).scale(&w)
        })
    }
}
