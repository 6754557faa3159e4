//! Commutative Frobenius algebras, semi-simplicity and the canonical frame.
//!
//! Vectors are coordinate lists in the user basis `e_0..e_{N-1}`. The
//! multiplication is stored as structure constants `c[i][j][k]` with
//! `e_i e_j = sum_k c[i][j][k] e_k`.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::matrix::{vec_ops, LinalgError, Matrix};
use crate::scalar::{Complex, Scalar, ScalarError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrobeniusError {
    #[error("malformed algebra: {0}")]
    Malformed(String),
    #[error("algebra fails validation: {0}")]
    Invalid(String),
    #[error("algebra is not semi-simple")]
    NotSemisimple,
    #[error("no generic element with distinct eigenvalues after {0} attempts")]
    Genericity(usize),
    #[error("idempotents are not rational; use the complex backend ({0})")]
    NonRationalSplitting(String),
    #[error("theta_{index} = {value} has no square root in this backend")]
    NoSquareRoot { index: usize, value: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// One failed axiom.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    Commutativity { i: usize, j: usize },
    Associativity { i: usize, j: usize, k: usize },
    Unit { i: usize },
    PairingSymmetry { i: usize, j: usize },
    Frobenius { i: usize, j: usize, k: usize },
    Degenerate,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(s) => write!(f, "shape: {s}"),
            Violation::Commutativity { i, j } => write!(f, "commutativity fails for (e{i}, e{j})"),
            Violation::Associativity { i, j, k } => write!(f, "associativity fails for (e{i}, e{j}, e{k})"),
            Violation::Unit { i } => write!(f, "unit law fails for e{i}"),
            Violation::PairingSymmetry { i, j } => write!(f, "pairing not symmetric at ({i}, {j})"),
            Violation::Frobenius { i, j, k } => write!(f, "Frobenius condition fails: b(e{i}e{j}, e{k}) != b(e{i}, e{j}e{k})"),
            Violation::Degenerate => write!(f, "pairing is degenerate"),
        }
    }
}

/// Result of [`FrobeniusAlgebra::validate`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "valid": self.is_valid(),
            "violations": self.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct FrobeniusAlgebra<S: Scalar> {
    dim: usize,
    basis_names: Vec<String>,
    mult: Vec<Vec<Vec<S>>>,
    unit: Vec<S>,
    pairing: Matrix<S>,
}

impl<S: Scalar> FrobeniusAlgebra<S> {
    /// Builds an algebra after checking shapes only; call [`validate`](Self::validate) for the axioms.
    pub fn new(
        basis_names: Vec<String>,
        mult: Vec<Vec<Vec<S>>>,
        unit: Vec<S>,
        pairing: Matrix<S>,
    ) -> Result<Self, FrobeniusError> {
        let dim = basis_names.len();
        if dim == 0 {
            return Err(FrobeniusError::Malformed("empty basis".into()));
        }
        let ok = mult.len() == dim
            && mult.iter().all(|row| row.len() == dim && row.iter().all(|v| v.len() == dim))
            && unit.len() == dim
            && pairing.rows() == dim
            && pairing.cols() == dim;
        if !ok {
            return Err(FrobeniusError::Malformed(format!("tables must all have dimension {dim}")));
        }
        Ok(FrobeniusAlgebra { dim, basis_names, mult, unit, pairing })
    }

    fn default_names(dim: usize) -> Vec<String> {
        (0..dim).map(|i| format!("e{i}")).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn unit(&self) -> &[S] {
        &self.unit
    }

    pub fn pairing(&self) -> &Matrix<S> {
        &self.pairing
    }

    /// Structure constants `e_i e_j`.
    pub fn product_of_basis(&self, i: usize, j: usize) -> &[S] {
        &self.mult[i][j]
    }

    pub fn mul(&self, a: &[S], b: &[S]) -> Vec<S> {
        let mut out = vec_ops::zeros(self.dim);
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let w = ai.clone() * bj;
                for (o, c) in out.iter_mut().zip(&self.mult[i][j]) {
                    *o += &(w.clone() * c);
                }
            }
        }
        out
    }

    /// Matrix of `x -> a x`.
    pub fn mult_operator(&self, a: &[S]) -> Matrix<S> {
        let cols: Vec<Vec<S>> = (0..self.dim).map(|j| self.mul(a, &vec_ops::basis(self.dim, j))).collect();
        Matrix::from_columns(&cols).expect("square")
    }

    pub fn pair(&self, a: &[S], b: &[S]) -> S {
        vec_ops::dot(a, &self.pairing.mul_vec(b))
    }

    /// Trace form `theta(x) = b(1, x)`.
    pub fn theta(&self, x: &[S]) -> S {
        self.pair(&self.unit, x)
    }

    /// `Tr_A(x .)`.
    pub fn trace(&self, x: &[S]) -> S {
        self.mult_operator(x).trace()
    }

    pub fn power(&self, a: &[S], n: u32) -> Vec<S> {
        let mut acc = self.unit.clone();
        for _ in 0..n {
            acc = self.mul(&acc, a);
        }
        acc
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.dim;
        let mut violations = Vec::new();
        let basis = |i| vec_ops::basis::<S>(n, i);
        for i in 0..n {
            for j in 0..n {
                if !vec_ops::approx_eq(&self.mult[i][j], &self.mult[j][i]) {
                    violations.push(Violation::Commutativity { i, j });
                }
                if !self.pairing[(i, j)].approx_eq(&self.pairing[(j, i)]) {
                    violations.push(Violation::PairingSymmetry { i, j });
                }
                for k in 0..n {
                    let left = self.mul(&self.mult[i][j], &basis(k));
                    let right = self.mul(&basis(i), &self.mult[j][k]);
                    if !vec_ops::approx_eq(&left, &right) {
                        violations.push(Violation::Associativity { i, j, k });
                    }
                    let bl = self.pair(&self.mult[i][j], &basis(k));
                    let br = self.pair(&basis(i), &self.mult[j][k]);
                    if !bl.approx_eq(&br) {
                        violations.push(Violation::Frobenius { i, j, k });
                    }
                }
            }
            if !vec_ops::approx_eq(&self.mul(&self.unit, &basis(i)), &basis(i)) {
                violations.push(Violation::Unit { i });
            }
        }
        match self.pairing.determinant() {
            Ok(d) if !d.is_zero() => {}
            _ => violations.push(Violation::Degenerate),
        }
        ValidationReport { violations }
    }

    fn require_valid(&self) -> Result<(), FrobeniusError> {
        let report = self.validate();
        if let Some(v) = report.violations.first() {
            return Err(FrobeniusError::Invalid(v.to_string()));
        }
        Ok(())
    }

    /// The element `alpha` with `theta(alpha x) = Tr_A(x .)`.
    pub fn euler_element(&self) -> Result<Vec<S>, FrobeniusError> {
        // theta(alpha e_j) = b(alpha, e_j), so alpha = b^{-1} t with t_j = Tr(e_j .).
        let t: Vec<S> = (0..self.dim).map(|j| self.trace(&vec_ops::basis(self.dim, j))).collect();
        Ok(self.pairing.solve(&t)?)
    }

    /// Gram matrix of `(x, y) -> Tr_A(x y .)`.
    pub fn trace_form(&self) -> Matrix<S> {
        let n = self.dim;
        Matrix::from_fn(n, n, |i, j| self.trace(&self.mult[i][j]))
    }

    pub fn is_semisimple(&self) -> bool {
        matches!(self.trace_form().determinant(), Ok(d) if !d.is_zero())
    }

    /// `b`-adjoint `M* = b^{-1} M^T b`.
    pub fn adjoint(&self, m: &Matrix<S>) -> Matrix<S> {
        let binv = self.pairing.inverse().expect("nondegenerate pairing");
        &(&binv * &m.transpose()) * &self.pairing
    }

    /// Splits the algebra with the default search (seed 0, 16 attempts).
    pub fn idempotent_decomposition(&self) -> Result<SemisimpleFrame<S>, FrobeniusError> {
        self.idempotent_decomposition_with(&DecompositionOptions::default())
    }

    /// Diagonalizes multiplication by a random element with small integer
    /// coordinates. Idempotents come out sorted by its eigenvalues.
    pub fn idempotent_decomposition_with(
        &self,
        opts: &DecompositionOptions,
    ) -> Result<SemisimpleFrame<S>, FrobeniusError> {
        self.require_valid()?;
        if !self.is_semisimple() {
            return Err(FrobeniusError::NotSemisimple);
        }
        let n = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for attempt in 0..opts.max_attempts.max(1) {
            let x: Vec<S> = if attempt == 0 && n == 1 {
                self.unit.clone()
            } else {
                (0..n).map(|_| S::from_i64(rng.gen_range(-7..=7))).collect()
            };
            let lx = self.mult_operator(&x);
            let cp = lx.char_poly()?;
            let mut roots = match S::poly_roots(&cp) {
                Ok(r) => r,
                Err(ScalarError::NotRational(r)) => return Err(FrobeniusError::NonRationalSplitting(r)),
                Err(ScalarError::DegeneratePolynomial) if n == 1 => {
                    vec![-cp[0].clone()]
                }
                Err(e) => return Err(e.into()),
            };
            roots.sort_by(|a, b| a.canonical_cmp(b));
            if !distinct(&roots) {
                continue;
            }
            let mut ps = Vec::with_capacity(n);
            for (i, li) in roots.iter().enumerate() {
                let mut v = self.unit.clone();
                for (j, lj) in roots.iter().enumerate() {
                    if i != j {
                        let shifted = &lx - &Matrix::identity(n).scale(lj);
                        v = vec_ops::scale(&shifted.mul_vec(&v), &(li.clone() - lj).inv());
                    }
                }
                ps.push(v);
            }
            if !S::is_exact() {
                ps = ps.into_iter().map(|p| self.polish_idempotent(p)).collect();
            }
            return SemisimpleFrame::from_idempotents(self, ps, roots);
        }
        Err(FrobeniusError::Genericity(opts.max_attempts))
    }

    /// Newton step for `P^2 = P`: `P -> 3P^2 - 2P^3`.
    fn polish_idempotent(&self, mut p: Vec<S>) -> Vec<S> {
        for _ in 0..6 {
            let p2 = self.mul(&p, &p);
            let p3 = self.mul(&p2, &p);
            p = vec_ops::sub(&vec_ops::scale(&p2, &S::from_i64(3)), &vec_ops::scale(&p3, &S::from_i64(2)));
        }
        p
    }

    /// Algebra with given idempotents (columns of `q`, in the new user basis)
    /// and thetas: `e_a = sum_i (q^{-1})_{ia} P_i`.
    pub fn from_idempotents(q: &Matrix<S>, thetas: &[S]) -> Result<Self, FrobeniusError> {
        let n = thetas.len();
        if q.rows() != n || q.cols() != n {
            return Err(FrobeniusError::Malformed("idempotent matrix must be N x N".into()));
        }
        if thetas.iter().any(S::is_zero) {
            return Err(FrobeniusError::Malformed("theta_i must be nonzero".into()));
        }
        let qinv = q.inverse()?;
        // coordinates of e_a in the P-basis are column a of q^{-1}
        let mut mult = vec![vec![vec_ops::zeros(n); n]; n];
        for a in 0..n {
            for b in 0..n {
                let pc: Vec<S> = (0..n).map(|i| qinv[(i, a)].clone() * &qinv[(i, b)]).collect();
                mult[a][b] = q.mul_vec(&pc);
            }
        }
        let pairing = &(&qinv.transpose() * &Matrix::diagonal(thetas)) * &qinv;
        let unit = q.mul_vec(&vec![S::one(); n]);
        Self::new(Self::default_names(n), mult, unit, pairing)
    }

    /// Rebuilds the algebra from a frame (same user basis).
    pub fn from_frame(frame: &SemisimpleFrame<S>) -> Result<Self, FrobeniusError> {
        Self::from_idempotents(frame.p_matrix(), frame.thetas())
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, FrobeniusError> {
        if names.len() != self.dim {
            return Err(FrobeniusError::Malformed("basis_names length".into()));
        }
        self.basis_names = names;
        Ok(self)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FrobeniusAlgebra<T> {
        FrobeniusAlgebra {
            dim: self.dim,
            basis_names: self.basis_names.clone(),
            mult: self.mult.iter().map(|r| r.iter().map(|v| v.iter().map(&f).collect()).collect()).collect(),
            unit: self.unit.iter().map(&f).collect(),
            pairing: self.pairing.map(&f),
        }
    }

    pub fn to_complex(&self) -> FrobeniusAlgebra<Complex> {
        self.map_scalars(S::to_complex)
    }

    /// `{dim, basis_names, mult_table, pairing, unit}` with `mult_table[i][j] = e_i e_j`.
    pub fn to_json(&self) -> Value {
        let vecj = |v: &[S]| Value::Array(v.iter().map(Scalar::to_json).collect());
        json!({
            "dim": self.dim,
            "basis_names": self.basis_names,
            "mult_table": self.mult.iter().map(|r| r.iter().map(|v| vecj(v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "pairing": self.pairing.to_json(),
            "unit": vecj(&self.unit),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, FrobeniusError> {
        let bad = |s: &str| FrobeniusError::Malformed(s.to_string());
        let obj = v.as_object().ok_or_else(|| bad("algebra must be an object"))?;
        for key in obj.keys() {
            if !["dim", "basis_names", "mult_table", "pairing", "unit"].contains(&key.as_str()) {
                return Err(bad(&format!("unknown field '{key}'")));
            }
        }
        let dim = obj.get("dim").and_then(Value::as_u64).ok_or_else(|| bad("dim"))? as usize;
        let names = match obj.get("basis_names") {
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| x.as_str().map(str::to_string).ok_or_else(|| bad("basis_names")))
                .collect::<Result<Vec<_>, _>>()?,
            None => Self::default_names(dim),
            _ => return Err(bad("basis_names")),
        };
        if names.len() != dim {
            return Err(bad("basis_names length differs from dim"));
        }
        let parse_vec = |x: &Value| -> Result<Vec<S>, FrobeniusError> {
            x.as_array()
                .ok_or_else(|| bad("expected vector"))?
                .iter()
                .map(|s| S::from_json(s).map_err(FrobeniusError::from))
                .collect()
        };
        let table = obj.get("mult_table").and_then(Value::as_array).ok_or_else(|| bad("mult_table"))?;
        let mult = table
            .iter()
            .map(|row| row.as_array().ok_or_else(|| bad("mult_table row"))?.iter().map(parse_vec).collect())
            .collect::<Result<Vec<Vec<Vec<S>>>, _>>()?;
        let pairing = Matrix::from_json(obj.get("pairing").ok_or_else(|| bad("pairing"))?)?;
        let unit = parse_vec(obj.get("unit").ok_or_else(|| bad("unit"))?)?;
        Self::new(names, mult, unit, pairing)
    }
}

fn distinct<S: Scalar>(roots: &[S]) -> bool {
    roots.windows(2).all(|w| !w[0].approx_eq(&w[1])) && {
        // complex roots sorted lexicographically can hide near-equal pairs
        (0..roots.len()).all(|i| (i + 1..roots.len()).all(|j| !roots[i].approx_eq(&roots[j])))
    }
}

/// Search parameters for the generic-element diagonalization.
#[derive(Clone, Debug)]
pub struct DecompositionOptions {
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        DecompositionOptions { seed: 0, max_attempts: 16 }
    }
}

/// Idempotents `P_i` with `theta_i = theta(P_i)`, and, when square roots
/// exist in the backend, the normalized frame `Pi e_i = theta_i^{-1/2} P_i`.
#[derive(Clone, PartialEq, Debug)]
pub struct SemisimpleFrame<S: Scalar> {
    idempotents: Vec<Vec<S>>,
    thetas: Vec<S>,
    eigenvalues: Vec<S>,
    p_matrix: Matrix<S>,
    p_inverse: Matrix<S>,
    sqrt_thetas: Option<Vec<S>>,
    pi: Option<Matrix<S>>,
}

impl<S: Scalar> SemisimpleFrame<S> {
    /// Frame from given idempotents of `alg` (thetas computed, axioms checked).
    pub fn from_idempotents(
        alg: &FrobeniusAlgebra<S>,
        idempotents: Vec<Vec<S>>,
        eigenvalues: Vec<S>,
    ) -> Result<Self, FrobeniusError> {
        let n = alg.dim();
        if idempotents.len() != n || idempotents.iter().any(|p| p.len() != n) {
            return Err(FrobeniusError::Malformed("need N idempotents of length N".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let pij = alg.mul(&idempotents[i], &idempotents[j]);
                let expect = if i == j { idempotents[i].clone() } else { vec_ops::zeros(n) };
                if !vec_ops::approx_eq(&pij, &expect) {
                    return Err(FrobeniusError::Invalid(format!("P_{i} P_{j} is not {}", if i == j { "P_i" } else { "0" })));
                }
            }
        }
        let sum = idempotents.iter().fold(vec_ops::zeros(n), |acc, p| vec_ops::add(&acc, p));
        if !vec_ops::approx_eq(&sum, alg.unit()) {
            return Err(FrobeniusError::Invalid("idempotents do not sum to the unit".into()));
        }
        let thetas: Vec<S> = idempotents.iter().map(|p| alg.theta(p)).collect();
        if thetas.iter().any(S::is_zero) {
            return Err(FrobeniusError::NotSemisimple);
        }
        Self::from_parts(idempotents, thetas, eigenvalues)
    }

    fn from_parts(idempotents: Vec<Vec<S>>, thetas: Vec<S>, eigenvalues: Vec<S>) -> Result<Self, FrobeniusError> {
        let p_matrix = Matrix::from_columns(&idempotents)?;
        let p_inverse = p_matrix.inverse()?;
        let sqrt_thetas: Option<Vec<S>> = thetas.iter().map(S::sqrt).collect();
        let pi = sqrt_thetas.as_ref().map(|sq| {
            let cols: Vec<Vec<S>> = idempotents.iter().zip(sq).map(|(p, s)| vec_ops::scale(p, &s.inv())).collect();
            Matrix::from_columns(&cols).expect("square")
        });
        Ok(SemisimpleFrame { idempotents, thetas, eigenvalues, p_matrix, p_inverse, sqrt_thetas, pi })
    }

    pub fn dim(&self) -> usize {
        self.thetas.len()
    }

    pub fn idempotents(&self) -> &[Vec<S>] {
        &self.idempotents
    }

    pub fn thetas(&self) -> &[S] {
        &self.thetas
    }

    /// Eigenvalues of the generic element used to order the idempotents.
    pub fn eigenvalues(&self) -> &[S] {
        &self.eigenvalues
    }

    /// Columns are the `P_i` in user coordinates.
    pub fn p_matrix(&self) -> &Matrix<S> {
        &self.p_matrix
    }

    pub fn p_inverse(&self) -> &Matrix<S> {
        &self.p_inverse
    }

    /// Coordinates of `v` in the idempotent basis.
    pub fn to_p_coords(&self, v: &[S]) -> Vec<S> {
        self.p_inverse.mul_vec(v)
    }

    pub fn from_p_coords(&self, c: &[S]) -> Vec<S> {
        self.p_matrix.mul_vec(c)
    }

    pub fn sqrt_thetas(&self) -> Option<&[S]> {
        self.sqrt_thetas.as_deref()
    }

    /// Change of basis from the normalized canonical basis to the user basis.
    pub fn pi(&self) -> Option<&Matrix<S>> {
        self.pi.as_ref()
    }

    pub fn require_pi(&self) -> Result<&Matrix<S>, FrobeniusError> {
        match &self.pi {
            Some(p) => Ok(p),
            None => {
                let index = self.thetas.iter().position(|t| t.sqrt().is_none()).unwrap_or(0);
                Err(FrobeniusError::NoSquareRoot { index, value: self.thetas[index].to_string() })
            }
        }
    }

    /// Operator in user coordinates acting as `diag(d)` on the idempotents.
    pub fn diagonal_operator(&self, d: &[S]) -> Matrix<S> {
        &(&self.p_matrix * &Matrix::diagonal(d)) * &self.p_inverse
    }

    /// Express a user-basis operator in the idempotent basis.
    pub fn to_p_frame(&self, m: &Matrix<S>) -> Matrix<S> {
        &(&self.p_inverse * m) * &self.p_matrix
    }

    pub fn from_p_frame(&self, m: &Matrix<S>) -> Matrix<S> {
        &(&self.p_matrix * m) * &self.p_inverse
    }

    /// Reorders the frame so that the `i`-th idempotent becomes `perm[i]`-th.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, FrobeniusError> {
        let mut ids = vec![Vec::new(); self.dim()];
        let mut th = vec![S::zero(); self.dim()];
        let mut ev = vec![S::zero(); self.dim()];
        for (i, &j) in perm.iter().enumerate() {
            ids[j] = self.idempotents[i].clone();
            th[j] = self.thetas[i].clone();
            ev[j] = self.eigenvalues.get(i).cloned().unwrap_or_else(S::zero);
        }
        Self::from_parts(ids, th, ev)
    }

    /// Same frame in the complex backend (normalized frame always available).
    pub fn to_complex(&self) -> SemisimpleFrame<Complex> {
        let ids = self.idempotents.iter().map(|p| p.iter().map(S::to_complex).collect()).collect();
        let th = self.thetas.iter().map(S::to_complex).collect();
        let ev = self.eigenvalues.iter().map(S::to_complex).collect();
        SemisimpleFrame::from_parts(ids, th, ev).expect("frame stays invertible")
    }

    pub fn to_json(&self) -> Value {
        let vecj = |v: &[S]| Value::Array(v.iter().map(Scalar::to_json).collect());
        json!({
            "idempotents": self.idempotents.iter().map(|p| vecj(p)).collect::<Vec<_>>(),
            "thetas": vecj(&self.thetas),
            "sqrt_thetas": self.sqrt_thetas.as_ref().map(|s| vecj(s)),
            "Pi": self.pi.as_ref().map(Matrix::to_json),
        })
    }
}

/// Matches the idempotents of two frames; returns `perm` with `a[i] = b[perm[i]]`.
pub fn match_frames<S: Scalar>(a: &SemisimpleFrame<S>, b: &SemisimpleFrame<S>) -> Option<Vec<usize>> {
    let mut used = vec![false; b.dim()];
    let mut perm = Vec::with_capacity(a.dim());
    for p in a.idempotents() {
        let j = (0..b.dim()).find(|&j| !used[j] && vec_ops::approx_eq(p, &b.idempotents()[j]))?;
        used[j] = true;
        perm.push(j);
    }
    Some(perm)
}

/// Standard examples.
pub mod presets {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    /// `k^N` with `e_i e_j = delta_ij e_i` and `theta(e_i) = thetas[i]`.
    pub fn diagonal<S: Scalar>(thetas: &[S]) -> FrobeniusAlgebra<S> {
        let n = thetas.len();
        let mut mult = vec![vec![vec_ops::zeros(n); n]; n];
        for (i, row) in mult.iter_mut().enumerate() {
            row[i] = vec_ops::basis(n, i);
        }
        FrobeniusAlgebra::new(
            FrobeniusAlgebra::<S>::default_names(n),
            mult,
            vec![S::one(); n],
            Matrix::diagonal(thetas),
        )
        .expect("consistent shapes")
    }

    pub fn rank_one<S: Scalar>(theta: S) -> FrobeniusAlgebra<S> {
        diagonal(&[theta]).with_names(names(&["1"])).expect("one name")
    }

    /// Quantum cohomology of the projective line at parameter `q`: basis
    /// `(1, h)`, `h^2 = q`, `b(1, h) = 1`.
    pub fn qh_p1<S: Scalar>(q: S) -> FrobeniusAlgebra<S> {
        truncated_power(2, q).with_names(names(&["1", "h"])).expect("two names")
    }

    /// Quantum cohomology of the projective plane: basis `(1, H, H^2)`,
    /// `H^3 = q`, `b(H^a, H^b) = delta_{a+b,2}`.
    pub fn qh_p2<S: Scalar>(q: S) -> FrobeniusAlgebra<S> {
        truncated_power(3, q).with_names(names(&["1", "H", "H2"])).expect("three names")
    }

    /// `k[x]/(x^n - q)` with the Poincare-type pairing `b(x^a, x^b) = delta_{a+b,n-1}`.
    pub fn truncated_power<S: Scalar>(n: usize, q: S) -> FrobeniusAlgebra<S> {
        let mut mult = vec![vec![vec_ops::zeros(n); n]; n];
        for (a, row) in mult.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let s = a + b;
                if s < n {
                    v[s] = S::one();
                } else {
                    v[s - n] = q.clone();
                }
            }
        }
        let pairing = Matrix::from_fn(n, n, |a, b| if a + b == n - 1 { S::one() } else { S::zero() });
        FrobeniusAlgebra::new(FrobeniusAlgebra::<S>::default_names(n), mult, vec_ops::basis(n, 0), pairing)
            .expect("consistent shapes")
    }

    /// `k[x]/x^2` with `theta(1) = 0`, `theta(x) = 1`: valid but not semi-simple.
    pub fn dual_numbers<S: Scalar>() -> FrobeniusAlgebra<S> {
        truncated_power(2, S::zero()).with_names(names(&["1", "x"])).expect("two names")
    }

    pub fn by_name<S: Scalar>(name: &str, q: S) -> Option<FrobeniusAlgebra<S>> {
        match name {
            "qh_p1" => Some(qh_p1(q)),
            "qh_p2" => Some(qh_p2(q)),
            "dual_numbers" => Some(dual_numbers()),
            _ => None,
        }
    }
}

/// Sorts a list of vectors deterministically (lexicographic canonical order).
pub fn canonical_vec_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.canonical_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;
    use crate::scalar::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    #[test]
    fn p1_is_valid_and_semisimple() {
        let a = qh_p1(q(1, 1));
        assert!(a.validate().is_valid());
        assert!(a.is_semisimple());
        assert_eq!(a.euler_element().unwrap(), vec![q(0, 1), q(2, 1)]);
    }

    #[test]
    fn broken_pairing_is_reported() {
        let a = qh_p1(q(1, 1));
        let mut b = a.pairing().clone();
        b[(1, 1)] = q(1, 1);
        let bad = FrobeniusAlgebra::new(a.basis_names().to_vec(), a.mult.clone(), a.unit().to_vec(), b).unwrap();
        let report = bad.validate();
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Frobenius { .. })));
    }

    #[test]
    fn dual_numbers_not_semisimple() {
        let a = dual_numbers::<Rational>();
        assert!(a.validate().is_valid());
        assert!(!a.is_semisimple());
        assert_eq!(a.euler_element().unwrap(), vec![q(0, 1), q(2, 1)]);
        assert_eq!(a.idempotent_decomposition(), Err(FrobeniusError::NotSemisimple));
    }

    #[test]
    fn p1_idempotents() {
        let a = qh_p1(q(1, 1));
        let f = a.idempotent_decomposition().unwrap();
        let mut got: Vec<(Vec<Rational>, Rational)> =
            f.idempotents().iter().cloned().zip(f.thetas().iter().cloned()).collect();
        got.sort_by(|x, y| x.1.cmp(&y.1));
        assert_eq!(got[0], (vec![q(1, 2), q(-1, 2)], q(-1, 2)));
        assert_eq!(got[1], (vec![q(1, 2), q(1, 2)], q(1, 2)));
        // -1/2 has no rational square root
        assert!(f.pi().is_none());
        let c = f.to_complex();
        let pi = c.pi().unwrap();
        let ac = a.to_complex();
        let gram = &(&pi.transpose() * ac.pairing()) * pi;
        assert!(gram.approx_eq(&Matrix::identity(2)));
    }

    #[test]
    fn rebuild_from_frame() {
        let a = qh_p1(q(4, 1));
        let f = a.idempotent_decomposition().unwrap();
        let b = FrobeniusAlgebra::from_frame(&f).unwrap();
        assert_eq!(b.mult, a.mult);
        assert_eq!(b.pairing(), a.pairing());
        assert_eq!(b.unit(), a.unit());
    }

    #[test]
    fn p2_numeric_split() {
        let a = qh_p2(Complex::from_f64(1.0, 0.0));
        let f = a.idempotent_decomposition().unwrap();
        let sum = f.idempotents().iter().fold(vec_ops::zeros(3), |s, p| vec_ops::add(&s, p));
        assert!(vec_ops::approx_eq(&sum, a.unit()));
        assert_eq!(f.dim(), 3);
    }

    #[test]
    fn p2_rational_split_fails() {
        let a = qh_p2(q(1, 1));
        assert!(matches!(a.idempotent_decomposition(), Err(FrobeniusError::NonRationalSplitting(_))));
    }

    #[test]
    fn multiplication_is_self_adjoint() {
        let a = qh_p2(q(3, 1));
        let m = a.mult_operator(&[q(1, 1), q(2, 1), q(-1, 3)]);
        assert_eq!(a.adjoint(&m), m);
    }
}
