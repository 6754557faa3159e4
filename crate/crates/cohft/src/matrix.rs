//! Dense matrices and vectors over a [`Scalar`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde_json::Value;

use crate::scalar::{Scalar, ScalarError};

/// Errors from dense linear algebra.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("malformed matrix data: {0}")]
    Malformed(String),
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(r, c)])?;
            }
        }
        write!(f, "]")
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Malformed("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<S>]) -> Result<Self, LinalgError> {
        let n = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != r) {
            return Err(LinalgError::Malformed("ragged columns".into()));
        }
        Ok(Self::from_fn(r, n, |i, j| cols[j][i].clone()))
    }

    pub fn diagonal(d: &[S]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn row(&self, r: usize) -> Vec<S> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|v| v.clone() * s)
    }

    pub fn trace(&self) -> S {
        let mut t = S::zero();
        for i in 0..self.rows.min(self.cols) {
            t += &self[(i, i)];
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.approx_eq(b))
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b).abs_f64())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::abs_f64).fold(0.0, f64::max)
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self, LinalgError> {
        self.same_shape(o, "add")?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() + b).collect(),
        })
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self, LinalgError> {
        self.same_shape(o, "sub")?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() - b).collect(),
        })
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self, LinalgError> {
        if self.cols != o.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() && S::is_exact() {
                    continue;
                }
                for j in 0..o.cols {
                    let t = a.clone() * &o[(k, j)];
                    out[(i, j)] += &t;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|r| {
                let mut acc = S::zero();
                for c in 0..self.cols {
                    acc += &(self[(r, c)].clone() * &v[c]);
                }
                acc
            })
            .collect()
    }

    /// Gauss-Jordan inverse. Pivots on the largest modulus in the float backend.
    pub fn inverse(&self) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = pick_pivot(&a, col).ok_or(LinalgError::Singular)?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a[(col, col)].inv();
            for c in 0..n {
                a[(col, c)] = a[(col, c)].clone() * &p;
                inv[(col, c)] = inv[(col, c)].clone() * &p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)].clone();
                if f.is_zero() && S::is_exact() {
                    continue;
                }
                for c in 0..n {
                    let ta = f.clone() * &a[(col, c)];
                    a[(r, c)] -= &ta;
                    let ti = f.clone() * &inv[(col, c)];
                    inv[(r, c)] -= &ti;
                }
            }
        }
        Ok(inv)
    }

    /// Solves `self * x = b` for square `self`.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>, LinalgError> {
        Ok(self.inverse()?.mul_vec(b))
    }

    pub fn determinant(&self) -> Result<S, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let Some(pivot) = pick_pivot(&a, col) else {
                return Ok(S::zero());
            };
            if pivot != col {
                a.swap_rows(pivot, col);
                det = -det;
            }
            let p = a[(col, col)].clone();
            det *= &p;
            let pinv = p.inv();
            for r in col + 1..n {
                let f = a[(r, col)].clone() * &pinv;
                for c in col..n {
                    let t = f.clone() * &a[(col, c)];
                    a[(r, c)] -= &t;
                }
            }
        }
        Ok(det)
    }

    /// Rank by elimination (tolerance-based in the float backend).
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let best = (rank..self.rows)
                .filter(|&r| !a[(r, col)].is_zero())
                .max_by(|&x, &y| a[(x, col)].abs_f64().total_cmp(&a[(y, col)].abs_f64()));
            let Some(p) = best else { continue };
            a.swap_rows(p, rank);
            let pinv = a[(rank, col)].inv();
            for r in rank + 1..self.rows {
                let f = a[(r, col)].clone() * &pinv;
                for c in col..self.cols {
                    let t = f.clone() * &a[(rank, c)];
                    a[(r, c)] -= &t;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Characteristic polynomial `det(x I - self)`, coefficients low to high
    /// (Faddeev-LeVerrier).
    pub fn char_poly(&self) -> Result<Vec<S>, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension("char_poly of non-square matrix".into()));
        }
        let n = self.rows;
        let mut coeffs = vec![S::zero(); n + 1];
        coeffs[n] = S::one();
        let mut m = Self::zeros(n, n);
        for k in 1..=n {
            let mut next = self.checked_mul(&m)?;
            for i in 0..n {
                next[(i, i)] += &coeffs[n - k + 1];
            }
            m = next;
            let am = self.checked_mul(&m)?;
            coeffs[n - k] = -(am.trace() / S::from_i64(k as i64));
        }
        Ok(coeffs)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn same_shape(&self, o: &Self, op: &str) -> Result<(), LinalgError> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(LinalgError::Dimension(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            (0..self.rows)
                .map(|r| Value::Array(self.row(r).iter().map(Scalar::to_json).collect()))
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<Self, LinalgError> {
        let rows = v.as_array().ok_or_else(|| LinalgError::Malformed("expected array of rows".into()))?;
        let parsed = rows
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| LinalgError::Malformed("expected row array".into()))?
                    .iter()
                    .map(|x| S::from_json(x).map_err(LinalgError::from))
                    .collect::<Result<Vec<S>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(parsed)
    }
}

fn pick_pivot<S: Scalar>(a: &Matrix<S>, col: usize) -> Option<usize> {
    let candidates = (col..a.rows).filter(|&r| !a[(r, col)].is_zero());
    if S::is_exact() {
        candidates.min()
    } else {
        candidates.max_by(|&x, &y| a[(x, col)].abs_f64().total_cmp(&a[(y, col)].abs_f64()))
    }
}

impl<S: Scalar> Add for &Matrix<S> {
    type Output = Matrix<S>;
    /// Panics on shape mismatch; see [`Matrix::checked_add`].
    fn add(self, o: &Matrix<S>) -> Matrix<S> {
        self.checked_add(o).expect("matrix add")
    }
}

impl<S: Scalar> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, o: &Matrix<S>) -> Matrix<S> {
        self.checked_sub(o).expect("matrix sub")
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, o: &Matrix<S>) -> Matrix<S> {
        self.checked_mul(o).expect("matrix mul")
    }
}

impl<S: Scalar> Neg for &Matrix<S> {
    type Output = Matrix<S>;
    fn neg(self) -> Matrix<S> {
        self.map(|v| -v.clone())
    }
}

/// Vector helpers.
pub mod vec_ops {
    use crate::scalar::Scalar;

    pub fn zeros<S: Scalar>(n: usize) -> Vec<S> {
        vec![S::zero(); n]
    }

    pub fn basis<S: Scalar>(n: usize, i: usize) -> Vec<S> {
        let mut v = zeros(n);
        v[i] = S::one();
        v
    }

    pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| x.clone() + y).collect()
    }

    pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| x.clone() - y).collect()
    }

    pub fn scale<S: Scalar>(a: &[S], s: &S) -> Vec<S> {
        a.iter().map(|x| x.clone() * s).collect()
    }

    pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
        let mut acc = S::zero();
        for (x, y) in a.iter().zip(b) {
            acc += &(x.clone() * y);
        }
        acc
    }

    pub fn is_zero<S: Scalar>(a: &[S]) -> bool {
        a.iter().all(Scalar::is_zero)
    }

    pub fn approx_eq<S: Scalar>(a: &[S], b: &[S]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.approx_eq(y))
    }

    pub fn max_abs<S: Scalar>(a: &[S]) -> f64 {
        a.iter().map(Scalar::abs_f64).fold(0.0, f64::max)
    }
}
