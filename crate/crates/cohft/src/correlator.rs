//! Theories as integrated correlators `<v_1 psi^{a_1}, ..., v_n psi^{a_n}>_g`
//! and the group action on them.
//!
//! Every operation returns a lazy [`Theory`] that memoizes the correlators
//! it has computed; [`CorrelatorTable`] materializes one within bounds.
//! Keys are sorted lists of [`Insertion`]s (basis index, psi exponent) in
//! the user basis of the algebra.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::frobenius::{FrobeniusAlgebra, FrobeniusError, SemisimpleFrame};
use crate::matrix::{vec_ops, Matrix};
use crate::nodal::{check_symplectic, zeta_from_E, NodalError, Pairing, W_from_E};
use crate::oracle;
use crate::scalar::Scalar;
use crate::series::{BiSeries, EndSeries, SeriesError, VecSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("entry (g={g}, n={n}) lies outside the table bounds")]
    OutOfBounds { g: usize, n: usize },
    #[error("(g={g}, n={n}) is unstable")]
    Unstable { g: usize, n: usize },
    #[error("E is not symplectic")]
    NotSymplectic,
    #[error("series order {got} too small, need at least {needed}")]
    SeriesOrder { needed: usize, got: usize },
    #[error("translation by a linear term needs the trivial theory as base")]
    LinearTranslation,
    #[error("1 + zeta_1 is not invertible in the algebra")]
    DegenerateRescaling,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Nodal(#[from] NodalError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
}

/// One marked point: a basis vector with a psi power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Insertion {
    pub basis: usize,
    pub psi: usize,
}

impl Insertion {
    pub fn new(basis: usize, psi: usize) -> Self {
        Insertion { basis, psi }
    }
}

pub type Key = Vec<Insertion>;

fn sorted(ins: &[Insertion]) -> Key {
    let mut k = ins.to_vec();
    k.sort_unstable();
    k
}

fn psi_degree(ins: &[Insertion]) -> usize {
    ins.iter().map(|i| i.psi).sum()
}

/// Remaining room below `dim M_{g,n}`, or `None` when over-saturated.
fn slack(g: usize, ins: &[Insertion]) -> Option<usize> {
    oracle::dimension(g, ins.len()).checked_sub(psi_degree(ins))
}

/// A theory: a rule producing integrated correlators.
pub trait Theory<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Correlator at a sorted key of a stable `(g, n)`.
    fn correlator_sorted(&self, g: usize, key: &[Insertion]) -> Result<S, EngineError>;

    /// Correlator at any key (sorted here); zero above the dimension.
    fn correlator(&self, g: usize, ins: &[Insertion]) -> Result<S, EngineError> {
        if !oracle::is_stable(g, ins.len()) {
            return Err(EngineError::Unstable { g, n: ins.len() });
        }
        if slack(g, ins).is_none() {
            return Ok(S::zero());
        }
        self.correlator_sorted(g, &sorted(ins))
    }

    /// Multilinear extension to arbitrary vectors `(v, a)`.
    fn eval(&self, g: usize, legs: &[(Vec<S>, usize)]) -> Result<S, EngineError> {
        let mut acc = S::zero();
        let mut key = Vec::with_capacity(legs.len());
        expand_legs(self, g, legs, 0, S::one(), &mut key, &mut acc)?;
        Ok(acc)
    }
}

fn expand_legs<S: Scalar, T: Theory<S> + ?Sized>(
    t: &T,
    g: usize,
    legs: &[(Vec<S>, usize)],
    pos: usize,
    coeff: S,
    key: &mut Vec<Insertion>,
    acc: &mut S,
) -> Result<(), EngineError> {
    if pos == legs.len() {
        *acc += &(coeff * &t.correlator(g, key)?);
        return Ok(());
    }
    let (v, a) = &legs[pos];
    for (b, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        key.push(Insertion::new(b, *a));
        expand_legs(t, g, legs, pos + 1, coeff.clone() * c, key, acc)?;
        key.pop();
    }
    Ok(())
}

type MemoMap<S> = Mutex<HashMap<(usize, Key), S>>;

fn memo_get<S: Scalar>(m: &MemoMap<S>, g: usize, key: &[Insertion]) -> Option<S> {
    m.lock().expect("memo lock").get(&(g, key.to_vec())).cloned()
}

fn memo_put<S: Scalar>(m: &MemoMap<S>, g: usize, key: &[Insertion], v: &S) {
    m.lock().expect("memo lock").insert((g, key.to_vec()), v.clone());
}

/// Output-size bounds for materialized tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableBounds {
    pub max_genus: usize,
    pub max_points: usize,
}

impl TableBounds {
    pub fn new(max_genus: usize, max_points: usize) -> Self {
        TableBounds { max_genus, max_points }
    }

    /// Largest psi degree any stored entry can carry.
    pub fn max_degree(&self) -> usize {
        (3 * self.max_genus + self.max_points).saturating_sub(3)
    }

    pub fn contains(&self, g: usize, n: usize) -> bool {
        g <= self.max_genus && n <= self.max_points
    }

    /// Stable `(g, n)` pairs in the bounds, genus-major.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for g in 0..=self.max_genus {
            for n in 0..=self.max_points {
                if oracle::is_stable(g, n) {
                    out.push((g, n));
                }
            }
        }
        out
    }
}

/// The trivial theory of a semi-simple algebra: in idempotent coordinates
/// `v^i`, `<v_1 psi^{a_1} ...>_g = sum_i theta_i^{1-g} prod_k v_k^i <tau_a>_g`.
pub struct TrivialTheory<S: Scalar> {
    thetas: Vec<S>,
    /// row `i` holds the `P_i`-coordinates of each basis vector
    coords: Matrix<S>,
}

impl<S: Scalar> TrivialTheory<S> {
    pub fn new(frame: &SemisimpleFrame<S>) -> Self {
        TrivialTheory { thetas: frame.thetas().to_vec(), coords: frame.p_inverse().clone() }
    }

    /// Trivial theory after translation by `zeta_1 z`: idempotents
    /// `(1 + zeta_1^i) P_i`, thetas `(1 + zeta_1^i)^2 theta_i`.
    pub fn rescaled(frame: &SemisimpleFrame<S>, zeta1: &[S]) -> Result<Self, EngineError> {
        let c = frame.to_p_coords(zeta1);
        let factors: Vec<S> = c.iter().map(|x| S::one() + x).collect();
        if factors.iter().any(S::is_zero) {
            return Err(EngineError::DegenerateRescaling);
        }
        let thetas = frame.thetas().iter().zip(&factors).map(|(t, f)| t.clone() * f * f).collect();
        let inv: Vec<S> = factors.iter().map(S::inv).collect();
        let coords = &Matrix::diagonal(&inv) * frame.p_inverse();
        Ok(TrivialTheory { thetas, coords })
    }
}

impl<S: Scalar> Theory<S> for TrivialTheory<S> {
    fn dim(&self) -> usize {
        self.thetas.len()
    }

    fn correlator_sorted(&self, g: usize, key: &[Insertion]) -> Result<S, EngineError> {
        let psis: Vec<usize> = key.iter().map(|i| i.psi).collect();
        let wk = oracle::wk(g, &psis);
        if wk.is_zero() {
            return Ok(S::zero());
        }
        let mut acc = S::zero();
        for (i, t) in self.thetas.iter().enumerate() {
            let mut term = t.powi(1 - g as i64);
            for ins in key {
                term *= &self.coords[(i, ins.basis)];
            }
            acc += &term;
        }
        Ok(acc * S::from_rational(&wk))
    }
}

/// Translation by `zeta in z^2 A[[z]]`:
/// `<x>_g -> sum_m (-1)^m/m! <x, zeta(psi), ..., zeta(psi)>_{g, n+m}`.
pub struct Translated<S: Scalar> {
    base: Arc<dyn Theory<S>>,
    /// `(basis, psi, coefficient)` for every nonzero coefficient of zeta
    items: Vec<(usize, usize, S)>,
    memo: MemoMap<S>,
}

impl<S: Scalar> Translated<S> {
    pub fn new(base: Arc<dyn Theory<S>>, zeta: &VecSeries<S>) -> Result<Self, EngineError> {
        let mut items = Vec::new();
        for k in 0..=zeta.order() {
            for (b, c) in zeta.coeff(k).iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if k < 2 {
                    return Err(if k == 1 {
                        EngineError::LinearTranslation
                    } else {
                        EngineError::Malformed("translation needs zero constant term".into())
                    });
                }
                items.push((b, k, c.clone()));
            }
        }
        Ok(Translated { base, items, memo: Mutex::new(HashMap::new()) })
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &self,
        g: usize,
        from: usize,
        slack: usize,
        key: &mut Vec<Insertion>,
        weight: S,
        m: usize,
        last_count: usize,
        acc: &mut S,
    ) -> Result<(), EngineError> {
        // weight carries prod c^mult / mult! so far; sign applied at the end
        let sign = if m % 2 == 0 { S::one() } else { -S::one() };
        *acc += &(sign * &weight * &self.base.correlator(g, key)?);
        for idx in from..self.items.len() {
            let (b, k, ref c) = self.items[idx];
            if k - 1 > slack {
                continue;
            }
            // multiplicity of this item so far (items are added in order)
            let count = if idx == from { last_count + 1 } else { 1 };
            key.push(Insertion::new(b, k));
            let w = weight.clone() * c / S::from_i64(count as i64);
            self.enumerate(g, idx, slack - (k - 1), key, w, m + 1, count, acc)?;
            key.pop();
        }
        Ok(())
    }
}

impl<S: Scalar> Theory<S> for Translated<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn correlator_sorted(&self, g: usize, key: &[Insertion]) -> Result<S, EngineError> {
        if let Some(v) = memo_get(&self.memo, g, key) {
            return Ok(v);
        }
        let room = slack(g, key).unwrap_or(0);
        let mut acc = S::zero();
        let mut k = key.to_vec();
        // last_count = 0 marks "no item chosen yet" for the first index
        self.enumerate(g, 0, room, &mut k, S::one(), 0, 0, &mut acc)?;
        memo_put(&self.memo, g, key, &acc);
        Ok(acc)
    }
}

/// GL twist: every insertion `v psi^a` becomes `g^{-1}(psi) v`.
pub struct GlTwisted<S: Scalar> {
    base: Arc<dyn Theory<S>>,
    ginv: EndSeries<S>,
    memo: MemoMap<S>,
}

impl<S: Scalar> GlTwisted<S> {
    pub fn new(base: Arc<dyn Theory<S>>, g: &EndSeries<S>) -> Result<Self, EngineError> {
        if !g.coeff(0).approx_eq(&Matrix::identity(g.dim())) {
            return Err(EngineError::Malformed("GL twist needs g_0 = Id".into()));
        }
        Ok(GlTwisted { base, ginv: g.inverse()?, memo: Mutex::new(HashMap::new()) })
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        &self,
        g: usize,
        key: &[Insertion],
        pos: usize,
        budget: usize,
        out: &mut Vec<Insertion>,
        coeff: S,
        acc: &mut S,
    ) -> Result<(), EngineError> {
        if pos == key.len() {
            *acc += &(coeff * &self.base.correlator(g, out)?);
            return Ok(());
        }
        let Insertion { basis, psi } = key[pos];
        for k in 0..=budget.min(self.ginv.order()) {
            let m = self.ginv.coeff(k);
            for c in 0..m.rows() {
                let x = &m[(c, basis)];
                if x.is_zero() {
                    continue;
                }
                out.push(Insertion::new(c, psi + k));
                self.expand(g, key, pos + 1, budget - k, out, coeff.clone() * x, acc)?;
                out.pop();
            }
        }
        Ok(())
    }
}

impl<S: Scalar> Theory<S> for GlTwisted<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn correlator_sorted(&self, g: usize, key: &[Insertion]) -> Result<S, EngineError> {
        if let Some(v) = memo_get(&self.memo, g, key) {
            return Ok(v);
        }
        let budget = slack(g, key).unwrap_or(0);
        if budget > self.ginv.order() && !self.ginv.coeff(self.ginv.order()).is_zero() {
            return Err(EngineError::SeriesOrder { needed: budget, got: self.ginv.order() });
        }
        let mut acc = S::zero();
        self.expand(g, key, 0, budget, &mut Vec::with_capacity(key.len()), S::one(), &mut acc)?;
        memo_put(&self.memo, g, key, &acc);
        Ok(acc)
    }
}

/// A symmetric bivector `V(z1, z2) = sum V_{pq}^{ab} e_a z1^p (x) e_b z2^q`,
/// obtained from an operator-valued series via `V_{pq} b^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bivector<S: Scalar> {
    /// `(p, q, a, b, coefficient)` over nonzero entries
    terms: Vec<(usize, usize, usize, usize, S)>,
    order: usize,
}

impl<S: Scalar> Bivector<S> {
    pub fn from_operator(pairing: &Pairing<S>, v: &BiSeries<S>) -> Self {
        let mut terms = Vec::new();
        for (p, q, m) in v.iter() {
            let t = m * pairing.beta_inv();
            for a in 0..t.rows() {
                for b in 0..t.cols() {
                    if !t[(a, b)].is_zero() {
                        terms.push((p, q, a, b, t[(a, b)].clone()));
                    }
                }
            }
        }
        Bivector { terms, order: v.order() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// `Ad_g V = g(z1) V g(z2)*`.
pub fn conjugate_bivector<S: Scalar>(pairing: &Pairing<S>, g: &EndSeries<S>, v: &BiSeries<S>) -> Result<BiSeries<S>, EngineError> {
    let k = v.order();
    let left = BiSeries::lift_z1(&g.with_order(k));
    let right = BiSeries::lift_z2(&crate::nodal::adjoint_series(pairing, &g.with_order(k)));
    Ok(left.mul(v)?.mul(&right)?)
}

/// Time-one flow of the boundary vector field
/// `dZ/dt = -1/2 [ V-contraction at a nonseparating node + ordered separating sum ]`.
pub struct DeltaFlow<S: Scalar> {
    base: Arc<dyn Theory<S>>,
    v: Bivector<S>,
    /// memo for the order-`k` coefficient `F^{(k)}`
    levels: Mutex<HashMap<(usize, usize, Key), S>>,
}

impl<S: Scalar> DeltaFlow<S> {
    pub fn new(base: Arc<dyn Theory<S>>, v: Bivector<S>) -> Self {
        DeltaFlow { base, v, levels: Mutex::new(HashMap::new()) }
    }

    /// `F^{(k)}` at a stable key; zero when over-saturated.
    fn level(&self, k: usize, g: usize, ins: &[Insertion]) -> Result<S, EngineError> {
        if !oracle::is_stable(g, ins.len()) {
            return Ok(S::zero());
        }
        let Some(room) = slack(g, ins) else { return Ok(S::zero()) };
        if k == 0 {
            return self.base.correlator(g, ins);
        }
        // each node uses up one dimension
        if k > room {
            return Ok(S::zero());
        }
        let key = sorted(ins);
        if let Some(v) = self.levels.lock().expect("memo lock").get(&(k, g, key.clone())) {
            return Ok(v.clone());
        }
        let raw = self.step(k - 1, g, &key)?;
        let v = raw * S::from_ratio(-1, 2 * k as i64);
        self.levels.lock().expect("memo lock").insert((k, g, key), v.clone());
        Ok(v)
    }

    /// `L F^{(k)} + sum_{i+j=k} Q(F^{(i)}, F^{(j)})` without the `-1/2`.
    fn step(&self, k: usize, g: usize, key: &[Insertion]) -> Result<S, EngineError> {
        let n = key.len();
        let mut acc = S::zero();
        for (p, q, a, b, c) in &self.v.terms {
            // nonseparating
            if g >= 1 {
                let mut ext = key.to_vec();
                ext.push(Insertion::new(*a, *p));
                ext.push(Insertion::new(*b, *q));
                let x = self.level(k, g - 1, &ext)?;
                if !x.is_zero() {
                    acc += &(c.clone() * &x);
                }
            }
            // ordered separating
            for mask in 0..(1usize << n) {
                let mut left: Vec<Insertion> = Vec::new();
                let mut right: Vec<Insertion> = Vec::new();
                for (pos, ins) in key.iter().enumerate() {
                    if mask >> pos & 1 == 1 {
                        left.push(*ins);
                    } else {
                        right.push(*ins);
                    }
                }
                left.push(Insertion::new(*a, *p));
                right.push(Insertion::new(*b, *q));
                for g1 in 0..=g {
                    let g2 = g - g1;
                    if !oracle::is_stable(g1, left.len()) || !oracle::is_stable(g2, right.len()) {
                        continue;
                    }
                    let (Some(r1), Some(r2)) = (slack(g1, &left), slack(g2, &right)) else { continue };
                    for i in 0..=k.min(r1) {
                        let j = k - i;
                        if j > r2 {
                            continue;
                        }
                        let x = self.level(i, g1, &left)?;
                        if x.is_zero() {
                            continue;
                        }
                        let y = self.level(j, g2, &right)?;
                        if y.is_zero() {
                            continue;
                        }
                        acc += &(c.clone() * &x * &y);
                    }
                }
            }
        }
        Ok(acc)
    }

    /// The first-order increment (`F^{(1)}`).
    pub fn increment(&self, g: usize, ins: &[Insertion]) -> Result<S, EngineError> {
        self.level(1, g, ins)
    }
}

impl<S: Scalar> Theory<S> for DeltaFlow<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn correlator_sorted(&self, g: usize, key: &[Insertion]) -> Result<S, EngineError> {
        let room = slack(g, key).unwrap_or(0);
        let mut acc = S::zero();
        for k in 0..=room {
            acc += &self.level(k, g, key)?;
        }
        Ok(acc)
    }
}

/// u-deformation along `u`:
/// `<x>^u_g = sum_{m <= order} (-1)^m/m! <x, u, ..., u>_{g, n+m}`.
pub struct Deformed<S: Scalar> {
    base: Arc<dyn Theory<S>>,
    u: Vec<S>,
    order: usize,
    memo: Mutex<HashMap<(usize, Key), Vec<S>>>,
}

impl<S: Scalar> Deformed<S> {
    pub fn new(base: Arc<dyn Theory<S>>, u: Vec<S>, order: usize) -> Self {
        Deformed { base, u, order, memo: Mutex::new(HashMap::new()) }
    }

    /// Terms `m = 0..=order`; with `u = t w` these are the Taylor
    /// coefficients in `t`.
    pub fn taylor(&self, g: usize, ins: &[Insertion]) -> Result<Vec<S>, EngineError> {
        let key = sorted(ins);
        if let Some(v) = self.memo.lock().expect("memo lock").get(&(g, key.clone())) {
            return Ok(v.clone());
        }
        let mut out = Vec::with_capacity(self.order + 1);
        let mut fact = S::one();
        for m in 0..=self.order {
            if m > 0 {
                fact *= &S::from_i64(m as i64);
            }
            let n = key.len() + m;
            if !oracle::is_stable(g, n) {
                out.push(S::zero());
                continue;
            }
            let mut legs: Vec<(Vec<S>, usize)> = Vec::with_capacity(n);
            // fixed legs as basis vectors
            for i in &key {
                legs.push((vec_ops::basis(self.base.dim(), i.basis), i.psi));
            }
            for _ in 0..m {
                legs.push((self.u.clone(), 0));
            }
            let sign = if m % 2 == 0 { S::one() } else { -S::one() };
            out.push(sign * &self.base.eval(g, &legs)? / fact.clone());
        }
        self.memo.lock().expect("memo lock").insert((g, key), out.clone());
        Ok(out)
    }
}

impl<S: Scalar> Theory<S> for Deformed<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn correlator_sorted(&self, g: usize, key: &[Insertion]) -> Result<S, EngineError> {
        Ok(self.taylor(g, key)?.into_iter().fold(S::zero(), |a, b| a + b))
    }

    // u carries no psi, so the dimension cut-off does not apply to the sum
    fn correlator(&self, g: usize, ins: &[Insertion]) -> Result<S, EngineError> {
        if !oracle::is_stable(g, ins.len()) {
            return Err(EngineError::Unstable { g, n: ins.len() });
        }
        self.correlator_sorted(g, &sorted(ins))
    }
}

/// Materialized correlators within bounds (nonzero entries only).
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorTable<S: Scalar> {
    pub bounds: TableBounds,
    dim: usize,
    entries: BTreeMap<(usize, Key), S>,
}

/// All sorted keys of a cell with total psi degree at most `dim M_{g,n}`
/// (empty for unstable cells).
pub fn cell_keys(dim: usize, g: usize, n: usize) -> Vec<Key> {
    if !oracle::is_stable(g, n) {
        return Vec::new();
    }
    let top = oracle::dimension(g, n);
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(dim: usize, n: usize, budget: usize, cur: &mut Vec<Insertion>, out: &mut Vec<Key>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(Insertion::new(0, 0));
        for b in start.basis..dim {
            let a0 = if b == start.basis { start.psi } else { 0 };
            for a in a0..=budget {
                cur.push(Insertion::new(b, a));
                rec(dim, n, budget - a, cur, out);
                cur.pop();
            }
        }
    }
    rec(dim, n, top, &mut cur, &mut out);
    out
}

impl<S: Scalar> CorrelatorTable<S> {
    /// Evaluates `theory` on every key in `bounds` (cells in parallel).
    pub fn materialize(theory: &dyn Theory<S>, bounds: TableBounds) -> Result<Self, EngineError> {
        let dim = theory.dim();
        let cells = bounds.cells();
        let chunks: Vec<Result<Vec<((usize, Key), S)>, EngineError>> = cells
            .par_iter()
            .map(|&(g, n)| {
                let mut rows = Vec::new();
                for key in cell_keys(dim, g, n) {
                    let v = theory.correlator_sorted(g, &key)?;
                    if !v.is_zero() {
                        rows.push(((g, key), v));
                    }
                }
                Ok(rows)
            })
            .collect();
        let mut entries = BTreeMap::new();
        for c in chunks {
            entries.extend(c?);
        }
        Ok(CorrelatorTable { bounds, dim, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Key, &S)> {
        self.entries.iter().map(|((g, k), v)| (*g, k, v))
    }

    /// Largest entrywise difference with another table over the union of keys.
    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let mut worst = 0.0f64;
        for (k, v) in &self.entries {
            let w = o.entries.get(k).cloned().unwrap_or_else(S::zero);
            worst = worst.max((v.clone() - w).abs_f64());
        }
        for (k, w) in &o.entries {
            if !self.entries.contains_key(k) {
                worst = worst.max(w.abs_f64());
            }
        }
        worst
    }

    /// Entrywise comparison over the union of keys (tolerance in the float backend).
    pub fn approx_eq(&self, o: &Self) -> bool {
        let keys: std::collections::BTreeSet<_> = self.entries.keys().chain(o.entries.keys()).collect();
        keys.into_iter().all(|k| {
            let a = self.entries.get(k).cloned().unwrap_or_else(S::zero);
            let b = o.entries.get(k).cloned().unwrap_or_else(S::zero);
            a.approx_eq(&b)
        })
    }

    /// Rows `[g, n, [[basis, psi], ...], value]` in canonical order.
    pub fn to_json(&self, basis_names: &[String]) -> Value {
        let rows: Vec<Value> = self
            .entries
            .iter()
            .map(|((g, key), v)| {
                json!([g, key.len(), key.iter().map(|i| json!([i.basis, i.psi])).collect::<Vec<_>>(), v.to_json()])
            })
            .collect();
        json!({
            "header": {
                "max_genus": self.bounds.max_genus,
                "max_points": self.bounds.max_points,
                "dim": self.dim,
                "basis_names": basis_names,
                "backend": S::backend_name(),
            },
            "entries": rows,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, EngineError> {
        let bad = |s: &str| EngineError::Malformed(s.to_string());
        let header = v.get("header").ok_or_else(|| bad("missing header"))?;
        let get = |name: &str| header.get(name).and_then(Value::as_u64).ok_or_else(|| bad(name));
        let bounds = TableBounds::new(get("max_genus")? as usize, get("max_points")? as usize);
        let dim = get("dim")? as usize;
        if let Some(b) = header.get("backend").and_then(Value::as_str) {
            if b != S::backend_name() {
                return Err(bad(&format!("table backend '{b}' does not match '{}'", S::backend_name())));
            }
        }
        let mut entries = BTreeMap::new();
        for row in v.get("entries").and_then(Value::as_array).ok_or_else(|| bad("entries"))? {
            let r = row.as_array().filter(|r| r.len() == 4).ok_or_else(|| bad("entry row"))?;
            let g = r[0].as_u64().ok_or_else(|| bad("genus"))? as usize;
            let n = r[1].as_u64().ok_or_else(|| bad("n"))? as usize;
            let key = r[2]
                .as_array()
                .ok_or_else(|| bad("key"))?
                .iter()
                .map(|p| {
                    let pair = p.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("insertion"))?;
                    let b = pair[0].as_u64().ok_or_else(|| bad("basis"))? as usize;
                    let a = pair[1].as_u64().ok_or_else(|| bad("psi"))? as usize;
                    if b >= dim {
                        return Err(bad("basis index out of range"));
                    }
                    Ok(Insertion::new(b, a))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if key.len() != n || !bounds.contains(g, n) || !oracle::is_stable(g, n) {
                return Err(bad("entry outside bounds or unstable"));
            }
            let val = S::from_json(&r[3]).map_err(|e| bad(&e.to_string()))?;
            entries.insert((g, sorted(&key)), val);
        }
        Ok(CorrelatorTable { bounds, dim, entries })
    }
}

impl<S: Scalar> Theory<S> for CorrelatorTable<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn correlator_sorted(&self, g: usize, key: &[Insertion]) -> Result<S, EngineError> {
        if !self.bounds.contains(g, key.len()) {
            return Err(EngineError::OutOfBounds { g, n: key.len() });
        }
        Ok(self.entries.get(&(g, key.to_vec())).cloned().unwrap_or_else(S::zero))
    }
}

/// The trivial theory of a frame.
pub fn trivial_theory<S: Scalar>(frame: &SemisimpleFrame<S>) -> Arc<dyn Theory<S>> {
    Arc::new(TrivialTheory::new(frame))
}

pub fn translate<S: Scalar>(t: Arc<dyn Theory<S>>, zeta: &VecSeries<S>) -> Result<Arc<dyn Theory<S>>, EngineError> {
    if zeta.is_zero() {
        return Ok(t);
    }
    Ok(Arc::new(Translated::new(t, zeta)?))
}

/// Translation of the trivial theory by any `zeta in z A[[z]]`: the linear
/// part rescales the algebra, the rest is summed.
pub fn translate_trivial<S: Scalar>(frame: &SemisimpleFrame<S>, zeta: &VecSeries<S>) -> Result<Arc<dyn Theory<S>>, EngineError> {
    let n = frame.dim();
    let zeta1 = if zeta.order() >= 1 { zeta.coeff(1).to_vec() } else { vec_ops::zeros(n) };
    if !vec_ops::is_zero(zeta.coeff(0)) {
        return Err(EngineError::Malformed("translation needs zero constant term".into()));
    }
    let base: Arc<dyn Theory<S>> = Arc::new(TrivialTheory::rescaled(frame, &zeta1)?);
    let mut rest = zeta.clone();
    if rest.order() >= 1 {
        rest.set_coeff(1, vec_ops::zeros(n));
    }
    translate(base, &rest)
}

pub fn gl_twist<S: Scalar>(t: Arc<dyn Theory<S>>, g: &EndSeries<S>) -> Result<Arc<dyn Theory<S>>, EngineError> {
    if g.is_identity() {
        return Ok(t);
    }
    Ok(Arc::new(GlTwisted::new(t, g)?))
}

pub fn exp_delta<S: Scalar>(t: Arc<dyn Theory<S>>, pairing: &Pairing<S>, v: &BiSeries<S>) -> Arc<dyn Theory<S>> {
    let bv = Bivector::from_operator(pairing, v);
    if bv.is_zero() {
        return t;
    }
    Arc::new(DeltaFlow::new(t, bv))
}

/// First-order increment of the Delta action at one key.
pub fn delta_step<S: Scalar>(
    t: Arc<dyn Theory<S>>,
    pairing: &Pairing<S>,
    v: &BiSeries<S>,
    g: usize,
    ins: &[Insertion],
) -> Result<S, EngineError> {
    DeltaFlow::new(t, Bivector::from_operator(pairing, v)).increment(g, ins)
}

pub fn u_deform<S: Scalar>(t: Arc<dyn Theory<S>>, u: Vec<S>, order: usize) -> Arc<Deformed<S>> {
    Arc::new(Deformed::new(t, u, order))
}

/// `g . e^V . zeta` in the semidirect product; acts by translating first,
/// then flowing by `V`, then twisting by `g`.
#[derive(Clone, Debug)]
pub struct GroupElement<S: Scalar> {
    pub g: EndSeries<S>,
    pub v: BiSeries<S>,
    pub zeta: VecSeries<S>,
}

impl<S: Scalar> GroupElement<S> {
    pub fn act(&self, t: Arc<dyn Theory<S>>, pairing: &Pairing<S>) -> Result<Arc<dyn Theory<S>>, EngineError> {
        let t = translate(t, &self.zeta)?;
        let t = exp_delta(t, pairing, &self.v);
        gl_twist(t, &self.g)
    }

    /// Same action on the trivial theory, allowing a linear part in zeta.
    pub fn act_on_trivial(&self, frame: &SemisimpleFrame<S>, pairing: &Pairing<S>) -> Result<Arc<dyn Theory<S>>, EngineError> {
        let t = translate_trivial(frame, &self.zeta)?;
        let t = exp_delta(t, pairing, &self.v);
        gl_twist(t, &self.g)
    }

    /// The element attached to a symplectic `E`: `(E, W_E, zeta_E)`.
    pub fn from_symplectic(alg: &FrobeniusAlgebra<S>, frame: &SemisimpleFrame<S>, e: &EndSeries<S>) -> Result<Self, EngineError> {
        let pairing = Pairing::from_algebra(alg);
        if !check_symplectic(&pairing, e) {
            return Err(EngineError::NotSymplectic);
        }
        let v = W_from_E(&pairing, e)?;
        let zeta = zeta_from_E(frame, alg.unit(), e)?.zeta;
        Ok(GroupElement { g: e.clone(), v, zeta })
    }
}

/// Series order of `E` needed for exact correlators up to `bounds`.
pub fn required_order(bounds: TableBounds) -> usize {
    bounds.max_degree() + 1
}

/// The CohFT with R-matrix `E` over the trivial theory of `frame`.
pub fn build_cohft<S: Scalar>(
    alg: &FrobeniusAlgebra<S>,
    frame: &SemisimpleFrame<S>,
    e: &EndSeries<S>,
) -> Result<Arc<dyn Theory<S>>, EngineError> {
    let elem = GroupElement::from_symplectic(alg, frame, e)?;
    elem.act(trivial_theory(frame), &Pairing::from_algebra(alg))
}

/// Checks the truncation order of `E` against `bounds`.
pub fn check_order<S: Scalar>(e: &EndSeries<S>, bounds: TableBounds) -> Result<(), EngineError> {
    let needed = required_order(bounds);
    if e.order() < needed {
        return Err(EngineError::SeriesOrder { needed, got: e.order() });
    }
    Ok(())
}

/// The `u`-dependent product along `u = t w`: `coeffs[k][a][b]` is the
/// `t^k` coefficient of `e_a * e_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumProduct<S: Scalar> {
    pub coeffs: Vec<Vec<Vec<Vec<S>>>>,
}

impl<S: Scalar> QuantumProduct<S> {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    /// Product of two vectors with polynomial coefficients (`x[k]` = t^k part).
    pub fn mul_poly(&self, x: &[Vec<S>], y: &[Vec<S>]) -> Vec<Vec<S>> {
        let n = self.dim();
        let ord = self.order();
        let mut out = vec![vec_ops::zeros(n); ord + 1];
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                for (k, ck) in self.coeffs.iter().enumerate() {
                    let deg = i + j + k;
                    if deg > ord {
                        continue;
                    }
                    for (a, xa) in xi.iter().enumerate() {
                        if xa.is_zero() {
                            continue;
                        }
                        for (b, yb) in yj.iter().enumerate() {
                            if yb.is_zero() {
                                continue;
                            }
                            let w = xa.clone() * yb;
                            out[deg] = vec_ops::add(&out[deg], &vec_ops::scale(&ck[a][b], &w));
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest deviation of `(e_a e_b) e_c - e_a (e_b e_c)` over basis triples.
    pub fn associativity_defect(&self) -> f64 {
        let n = self.dim();
        let basis = |i| vec![vec_ops::basis::<S>(n, i)];
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let l = self.mul_poly(&self.mul_poly(&basis(a), &basis(b)), &basis(c));
                    let r = self.mul_poly(&basis(a), &self.mul_poly(&basis(b), &basis(c)));
                    for (x, y) in l.iter().zip(&r) {
                        worst = worst.max(vec_ops::max_abs(&vec_ops::sub(x, y)));
                    }
                }
            }
        }
        worst
    }

    pub fn is_associative(&self) -> bool {
        let n = self.dim();
        let basis = |i| vec![vec_ops::basis::<S>(n, i)];
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n).all(|c| {
                    let l = self.mul_poly(&self.mul_poly(&basis(a), &basis(b)), &basis(c));
                    let r = self.mul_poly(&basis(a), &self.mul_poly(&basis(b), &basis(c)));
                    l.iter().zip(&r).all(|(x, y)| vec_ops::approx_eq(x, y))
                })
            })
        })
    }

    pub fn to_json(&self) -> Value {
        json!(self
            .coeffs
            .iter()
            .map(|ck| ck
                .iter()
                .map(|row| row.iter().map(|v| v.iter().map(Scalar::to_json).collect::<Vec<_>>()).collect::<Vec<_>>())
                .collect::<Vec<_>>())
            .collect::<Vec<_>>())
    }
}

/// Product from `<e_a, e_b, e_c>^u_0` raised with the pairing.
pub fn quantum_product<S: Scalar>(
    t: Arc<dyn Theory<S>>,
    pairing: &Pairing<S>,
    w: &[S],
    order: usize,
) -> Result<QuantumProduct<S>, EngineError> {
    let n = t.dim();
    let d = Deformed::new(t, w.to_vec(), order);
    let mut coeffs = vec![vec![vec![vec_ops::zeros(n); n]; n]; order + 1];
    for a in 0..n {
        for b in a..n {
            // c-th component of the lowered product
            let mut lowered = vec![vec_ops::zeros(n); order + 1];
            for c in 0..n {
                let tay = d.taylor(0, &[Insertion::new(a, 0), Insertion::new(b, 0), Insertion::new(c, 0)])?;
                for (k, v) in tay.into_iter().enumerate() {
                    lowered[k][c] = v;
                }
            }
            for k in 0..=order {
                let prod = pairing.beta_inv().mul_vec(&lowered[k]);
                coeffs[k][a][b] = prod.clone();
                coeffs[k][b][a] = prod;
            }
        }
    }
    Ok(QuantumProduct { coeffs })
}

/// One term of the genus expansion of the potential.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTerm<S: Scalar> {
    pub genus: usize,
    pub points: usize,
    pub value: S,
}

/// `F_g = sum_n 1/n! <x(psi), ..., x(psi)>_{g,n}` term by term, `n <= max_points`.
/// `x[k]` is the coefficient of `z^k`.
pub fn potential_terms<S: Scalar>(
    t: &dyn Theory<S>,
    x: &[Vec<S>],
    max_genus: usize,
    max_points: usize,
) -> Result<Vec<PotentialTerm<S>>, EngineError> {
    let mut items: Vec<(usize, usize, S)> = Vec::new();
    for (k, v) in x.iter().enumerate() {
        for (b, c) in v.iter().enumerate() {
            if !c.is_zero() {
                items.push((b, k, c.clone()));
            }
        }
    }
    let mut out = Vec::new();
    for g in 0..=max_genus {
        for n in 0..=max_points {
            if !oracle::is_stable(g, n) {
                continue;
            }
            // sum over multisets of items: prod c^m / m!
            let mut acc = S::zero();
            let mut key = Vec::new();
            potential_rec(t, g, n, &items, 0, S::one(), 0, &mut key, &mut acc)?;
            out.push(PotentialTerm { genus: g, points: n, value: acc });
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn potential_rec<S: Scalar>(
    t: &dyn Theory<S>,
    g: usize,
    n: usize,
    items: &[(usize, usize, S)],
    from: usize,
    weight: S,
    run: usize,
    key: &mut Vec<Insertion>,
    acc: &mut S,
) -> Result<(), EngineError> {
    if key.len() == n {
        *acc += &(weight * &t.correlator(g, key)?);
        return Ok(());
    }
    for idx in from..items.len() {
        let (b, k, ref c) = items[idx];
        let count = if idx == from && !key.is_empty() { run + 1 } else { 1 };
        key.push(Insertion::new(b, k));
        let w = weight.clone() * c / S::from_i64(count as i64);
        potential_rec(t, g, n, items, idx, w, count, key, acc)?;
        key.pop();
    }
    Ok(())
}

/// Flat-identity checks: string and dilaton across all cells of `bounds`.
#[derive(Clone, Debug, PartialEq)]
pub struct StringDilatonReport {
    pub string_checked: usize,
    pub string_failures: Vec<String>,
    pub dilaton_checked: usize,
    pub dilaton_failures: Vec<String>,
    pub max_defect: f64,
}

impl StringDilatonReport {
    pub fn passed(&self) -> bool {
        self.string_failures.is_empty() && self.dilaton_failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "passed": self.passed(),
            "string_checked": self.string_checked,
            "string_failures": self.string_failures,
            "dilaton_checked": self.dilaton_checked,
            "dilaton_failures": self.dilaton_failures,
            "max_defect": self.max_defect,
        })
    }
}

fn describe(g: usize, key: &[Insertion]) -> String {
    let parts: Vec<String> = key.iter().map(|i| format!("e{}psi^{}", i.basis, i.psi)).collect();
    format!("g={} <{}>", g, parts.join(", "))
}

/// Inserting `(1, psi^0)` must act as the string equation and `(1, psi^1)`
/// as multiplication by `2g - 2 + n`; in `(0, 3)` the unit gives the pairing.
/// Cells with `n + 1 <= max_points` are checked.
pub fn string_dilaton_check<S: Scalar>(
    t: &dyn Theory<S>,
    unit: &[S],
    pairing: &Matrix<S>,
    bounds: TableBounds,
) -> Result<StringDilatonReport, EngineError> {
    let dim = t.dim();
    let mut rep = StringDilatonReport {
        string_checked: 0,
        string_failures: Vec::new(),
        dilaton_checked: 0,
        dilaton_failures: Vec::new(),
        max_defect: 0.0,
    };
    for g in 0..=bounds.max_genus {
        for n in 0..bounds.max_points {
            let with_unit = |key: &[Insertion], a: usize| -> Result<S, EngineError> {
                let mut legs: Vec<(Vec<S>, usize)> = key.iter().map(|i| (vec_ops::basis(dim, i.basis), i.psi)).collect();
                legs.push((unit.to_vec(), a));
                t.eval(g, &legs)
            };
            if oracle::is_stable(g, n + 1) && (oracle::is_stable(g, n) || (g, n) == (0, 2)) {
                // string; keys with degree up to dim M_{g,n+1}
                let keys = if (g, n) == (0, 2) {
                    let mut k = cell_keys_exact(dim, 2, 0);
                    k.extend(cell_keys_exact(dim, 2, 1));
                    k
                } else {
                    let mut k = cell_keys(dim, g, n);
                    k.extend(extra_keys(dim, g, n));
                    k
                };
                for key in keys {
                    let lhs = with_unit(&key, 0)?;
                    let rhs = if (g, n) == (0, 2) {
                        if key[0].psi == 0 && key[1].psi == 0 {
                            pairing[(key[0].basis, key[1].basis)].clone()
                        } else {
                            S::zero()
                        }
                    } else {
                        let mut acc = S::zero();
                        for j in 0..n {
                            if key[j].psi > 0 {
                                let mut k2 = key.clone();
                                k2[j].psi -= 1;
                                acc += &t.correlator(g, &k2)?;
                            }
                        }
                        acc
                    };
                    rep.string_checked += 1;
                    let d = (lhs.clone() - &rhs).abs_f64();
                    rep.max_defect = rep.max_defect.max(d);
                    if !lhs.approx_eq(&rhs) {
                        rep.string_failures.push(describe(g, &key));
                    }
                }
            }
            if oracle::is_stable(g, n) && oracle::is_stable(g, n + 1) {
                for key in cell_keys(dim, g, n) {
                    let lhs = with_unit(&key, 1)?;
                    let rhs = t.correlator(g, &key)? * S::from_i64(2 * g as i64 - 2 + n as i64);
                    rep.dilaton_checked += 1;
                    let d = (lhs.clone() - &rhs).abs_f64();
                    rep.max_defect = rep.max_defect.max(d);
                    if !lhs.approx_eq(&rhs) {
                        rep.dilaton_failures.push(describe(g, &key));
                    }
                }
            }
        }
    }
    Ok(rep)
}

// keys of (g, n) with degree exactly dim + 1: their string image can be nonzero
fn extra_keys(dim: usize, g: usize, n: usize) -> Vec<Key> {
    if n == 0 {
        return Vec::new();
    }
    if !oracle::is_stable(g, n) {
        return Vec::new();
    }
    cell_keys_exact(dim, n, oracle::dimension(g, n) + 1)
}

fn cell_keys_exact(dim: usize, n: usize, total: usize) -> Vec<Key> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(dim: usize, n: usize, budget: usize, cur: &mut Vec<Insertion>, out: &mut Vec<Key>) {
        if cur.len() == n {
            if budget == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let start = cur.last().copied().unwrap_or(Insertion::new(0, 0));
        for b in start.basis..dim {
            let a0 = if b == start.basis { start.psi } else { 0 };
            for a in a0..=budget {
                cur.push(Insertion::new(b, a));
                rec(dim, n, budget - a, cur, out);
                cur.pop();
            }
        }
    }
    rec(dim, n, total, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::presets;
    use crate::scalar::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    fn rank_one_exp(h: Rational, k: usize) -> EndSeries<Rational> {
        let mut x = EndSeries::zero(1, k);
        x.set_coeff(1, Matrix::diagonal(&[h]));
        x.exp().unwrap()
    }

    #[test]
    fn trivial_values() {
        let alg = presets::diagonal(&[q(4, 1), q(1, 1)]);
        let frame = alg.idempotent_decomposition().unwrap();
        let t = trivial_theory(&frame);
        // p_1 = P_1 / 2
        let v = t.eval(1, &[(vec![q(1, 2), q(0, 1)], 1)]).unwrap();
        assert_eq!(v, q(1, 48));
    }

    #[test]
    fn rank_one_hodge_first_order() {
        let h = q(1, 1);
        let alg = presets::rank_one(q(1, 1));
        let frame = alg.idempotent_decomposition().unwrap();
        let e = rank_one_exp(h, 4);
        let t = build_cohft(&alg, &frame, &e).unwrap();
        let v = t.correlator(1, &[Insertion::new(0, 0)]).unwrap();
        assert_eq!(v, q(1, 2));
        // genus zero is untouched
        let w = t.correlator(0, &[Insertion::new(0, 0), Insertion::new(0, 0), Insertion::new(0, 1), Insertion::new(0, 0)]).unwrap();
        assert_eq!(w, q(1, 1));
    }

    #[test]
    fn separate_contributions() {
        let h = q(3, 1);
        let alg = presets::rank_one(q(1, 1));
        let frame = alg.idempotent_decomposition().unwrap();
        let p = Pairing::from_algebra(&alg);
        let e = rank_one_exp(h.clone(), 4);
        let triv = trivial_theory(&frame);
        let key = [Insertion::new(0, 0)];
        let leg = gl_twist(triv.clone(), &e).unwrap().correlator(1, &key).unwrap();
        assert_eq!(leg, -h.clone() / q(24, 1));
        let mut zeta = VecSeries::zero(1, 3);
        zeta.set_coeff(2, vec![-h.clone()]);
        let tr = translate(triv.clone(), &zeta).unwrap().correlator(1, &key).unwrap();
        assert_eq!(tr, h.clone() / q(24, 1));
        let v = BiSeries::from_fn(1, 0, |_, _| Matrix::diagonal(&[q(1, 1)]));
        assert_eq!(delta_step(triv, &p, &v, 1, &key).unwrap(), q(-1, 2));
    }
}
