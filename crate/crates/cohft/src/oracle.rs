//! Intersection numbers of psi and kappa classes on Deligne-Mumford spaces.
//!
//! `<tau_{a_1} ... tau_{a_n}>_g` comes from the string equation and the DVV
//! recursion with base values `<tau_0^3>_0 = 1` and `<tau_1>_1 = 1/24`.
//! Results are memoized behind a process-wide read/write lock.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde_json::{json, Value};

use crate::scalar::{Rational, Scalar};

/// How a lookup was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyStatus {
    Ok,
    /// `2g - 2 + n <= 0`.
    Unstable,
    /// Exponents do not add up to the dimension; the value is zero.
    DimensionMismatch,
}

impl KeyStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            KeyStatus::Ok => "ok",
            KeyStatus::Unstable => "unstable",
            KeyStatus::DimensionMismatch => "dimension_mismatch",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Intersection {
    pub value: Rational,
    pub status: KeyStatus,
}

impl Intersection {
    pub fn to_json(&self) -> Value {
        json!({"value": self.value.to_json(), "status": self.status.as_str()})
    }
}

pub fn is_stable(g: usize, n: usize) -> bool {
    2 * g + n > 2
}

/// `3g - 3 + n`; saturates at zero for the unstable cells.
pub fn dimension(g: usize, n: usize) -> usize {
    (3 * g + n).saturating_sub(3)
}

type Memo = RwLock<HashMap<(usize, Vec<usize>), Rational>>;

fn memo() -> &'static Memo {
    static MEMO: OnceLock<Memo> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

fn double_factorial(k: i64) -> Rational {
    // (2m-1)!! style, with (-1)!! = 1
    let mut acc = Rational::one();
    let mut j = k;
    while j > 1 {
        acc *= &Rational::from_i64(j);
        j -= 2;
    }
    acc
}

/// `<tau_{a_1} ... tau_{a_n}>_g` with its status.
pub fn wk_intersection(g: usize, exponents: &[usize]) -> Intersection {
    let n = exponents.len();
    if !is_stable(g, n) {
        return Intersection { value: Rational::zero(), status: KeyStatus::Unstable };
    }
    if exponents.iter().sum::<usize>() != dimension(g, n) {
        return Intersection { value: Rational::zero(), status: KeyStatus::DimensionMismatch };
    }
    let mut key = exponents.to_vec();
    key.sort_unstable_by(|a, b| b.cmp(a));
    Intersection { value: wk_sorted(g, key), status: KeyStatus::Ok }
}

/// Value only (zero for unstable or unbalanced keys).
pub fn wk(g: usize, exponents: &[usize]) -> Rational {
    wk_intersection(g, exponents).value
}

fn wk_any(g: usize, exps: &[usize]) -> Rational {
    let n = exps.len();
    if !is_stable(g, n) || exps.iter().sum::<usize>() != dimension(g, n) {
        return Rational::zero();
    }
    let mut key = exps.to_vec();
    key.sort_unstable_by(|a, b| b.cmp(a));
    wk_sorted(g, key)
}

// key is sorted descending, stable and balanced
fn wk_sorted(g: usize, key: Vec<usize>) -> Rational {
    if let Some(v) = memo().read().expect("memo lock").get(&(g, key.clone())) {
        return v.clone();
    }
    let v = wk_compute(g, &key);
    memo().write().expect("memo lock").insert((g, key), v.clone());
    v
}

fn wk_compute(g: usize, key: &[usize]) -> Rational {
    let n = key.len();
    if g == 0 && n == 3 {
        return Rational::one();
    }
    if g == 1 && n == 1 {
        return Rational::from_ratio(1, 24);
    }
    if *key.last().unwrap() == 0 {
        // string equation
        let rest = &key[..n - 1];
        let mut acc = Rational::zero();
        for j in 0..rest.len() {
            if rest[j] > 0 {
                let mut e = rest.to_vec();
                e[j] -= 1;
                acc += &wk_any(g, &e);
            }
        }
        return acc;
    }
    // DVV on the first exponent: a_0 = k + 1
    let k = key[0] as i64 - 1;
    let d = &key[1..];
    let mut acc = Rational::zero();
    for j in 0..d.len() {
        let dj = d[j] as i64;
        let mut e = d.to_vec();
        e[j] += k as usize;
        let w = double_factorial(2 * k + 2 * dj + 1) / double_factorial(2 * dj - 1);
        acc += &(w * wk_any(g, &e));
    }
    let half = Rational::from_ratio(1, 2);
    for r in 0..k.max(0) {
        let s = k - 1 - r;
        let w = double_factorial(2 * r + 1) * double_factorial(2 * s + 1) * &half;
        let mut inner = Rational::zero();
        if g >= 1 {
            let mut e = vec![r as usize, s as usize];
            e.extend_from_slice(d);
            inner += &wk_any(g - 1, &e);
        }
        for mask in 0..(1usize << d.len()) {
            let mut left = vec![r as usize];
            let mut right = vec![s as usize];
            for (i, &x) in d.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    left.push(x);
                } else {
                    right.push(x);
                }
            }
            for g1 in 0..=g {
                let a = wk_any(g1, &left);
                if a.is_zero() {
                    continue;
                }
                inner += &(a * wk_any(g - g1, &right));
            }
        }
        acc += &(w * inner);
    }
    acc / double_factorial(2 * k + 3)
}

/// `int_{M_{g,n}} kappa_{b_1} ... kappa_{b_m} psi_1^{a_1} ... psi_n^{a_n}`.
///
/// Each kappa is traded for an extra point through
/// `kappa_b = pi^* kappa_b + psi_{n+1}^b`.
pub fn kappa_to_psi(g: usize, kappas: &[usize], psis: &[usize]) -> Intersection {
    let n = psis.len();
    if !is_stable(g, n) {
        return Intersection { value: Rational::zero(), status: KeyStatus::Unstable };
    }
    if kappas.iter().sum::<usize>() + psis.iter().sum::<usize>() != dimension(g, n) {
        return Intersection { value: Rational::zero(), status: KeyStatus::DimensionMismatch };
    }
    Intersection { value: kappa_rec(g, kappas, psis), status: KeyStatus::Ok }
}

fn kappa_rec(g: usize, kappas: &[usize], psis: &[usize]) -> Rational {
    let Some((&last, rest)) = kappas.split_last() else {
        return wk_any(g, psis);
    };
    let mut acc = Rational::zero();
    for mask in 0..(1usize << rest.len()) {
        let mut kept = Vec::new();
        let mut extra = last + 1;
        for (i, &b) in rest.iter().enumerate() {
            if mask >> i & 1 == 1 {
                extra += b;
            } else {
                kept.push(b);
            }
        }
        let mut p = psis.to_vec();
        p.push(extra);
        let term = kappa_rec(g, &kept, &p);
        if mask.count_ones() % 2 == 1 {
            acc -= &term;
        } else {
            acc += &term;
        }
    }
    acc
}

/// Outcome of the dilaton fiber-product check.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberReport {
    pub genus: usize,
    pub coefficients: Vec<Rational>,
    pub expected: Vec<Rational>,
}

impl FiberReport {
    pub fn passed(&self) -> bool {
        self.coefficients == self.expected
    }

    pub fn to_json(&self) -> Value {
        json!({
            "genus": self.genus,
            "coefficients": self.coefficients.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "expected": self.expected.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "passed": self.passed(),
        })
    }
}

/// Translating the rank-one trivial theory by `zeta = zeta_1 z` rescales
/// `<tau_{3g-2}>_g` by `(1 + zeta_1)^{1-2g}`: the `m`-th coefficient
/// `(-1)^m/m! <tau_{3g-2} tau_1^m>_g / <tau_{3g-2}>_g` must equal `C(1-2g, m)`.
pub fn fiber_product_check(g: usize, order: usize) -> FiberReport {
    assert!(g >= 1, "fiber check needs g >= 1");
    let base = wk(g, &[3 * g - 2]);
    let mut coefficients = Vec::with_capacity(order + 1);
    let mut expected = Vec::with_capacity(order + 1);
    let mut fact = Rational::one();
    let mut binom = Rational::one();
    let top = Rational::from_i64(1 - 2 * g as i64);
    for m in 0..=order {
        if m > 0 {
            fact *= &Rational::from_i64(m as i64);
            binom = binom * (top.clone() - Rational::from_i64(m as i64 - 1)) / Rational::from_i64(m as i64);
        }
        let mut exps = vec![3 * g - 2];
        exps.extend(std::iter::repeat(1).take(m));
        let sign = if m % 2 == 0 { Rational::one() } else { -Rational::one() };
        coefficients.push(sign * wk(g, &exps) / fact.clone() / base.clone());
        expected.push(binom.clone());
    }
    FiberReport { genus: g, coefficients, expected }
}

/// Every balanced, stable key with `n <= max_points` for genus `g`.
pub fn all_keys(g: usize, max_points: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for n in 0..=max_points {
        if !is_stable(g, n) {
            continue;
        }
        let dim = dimension(g, n);
        let mut cur = Vec::new();
        partitions_desc(dim, n, dim, &mut cur, &mut out);
    }
    out
}

fn partitions_desc(total: usize, parts: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 0 {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for x in (0..=max.min(total)).rev() {
        cur.push(x);
        partitions_desc(total - x, parts - 1, x, cur, out);
        cur.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    #[test]
    fn known_values() {
        assert_eq!(wk(0, &[0, 0, 0]), q(1, 1));
        assert_eq!(wk(1, &[1]), q(1, 24));
        assert_eq!(wk(2, &[4]), q(1, 1152));
        assert_eq!(wk(2, &[3, 2]), q(29, 5760));
        assert_eq!(wk(3, &[7]), q(1, 82944));
        assert_eq!(wk(0, &[1, 1, 0, 0, 0]), q(2, 1));
        assert_eq!(wk_intersection(0, &[0, 0]).status, KeyStatus::Unstable);
        assert_eq!(wk_intersection(1, &[0]).status, KeyStatus::DimensionMismatch);
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa_to_psi(1, &[1], &[]).value, Rational::zero());
        assert_eq!(kappa_to_psi(1, &[1], &[0]).value, q(1, 24));
        assert_eq!(kappa_to_psi(0, &[0], &[0, 0, 0, 1]).value, q(2, 1));
    }

    #[test]
    fn fiber_binomials() {
        let r1 = fiber_product_check(1, 2);
        assert_eq!(r1.coefficients, vec![q(1, 1), q(-1, 1), q(1, 1)]);
        let r2 = fiber_product_check(2, 2);
        assert_eq!(r2.coefficients, vec![q(1, 1), q(-3, 1), q(6, 1)]);
        assert!(r2.passed());
    }
}
