//! Scalar backends.
//!
//! Two field types implement [`Scalar`]: exact rationals ([`Rational`]) and
//! arbitrary-precision complex floats ([`Complex`]). The complex backend reads
//! its working precision and comparison tolerance from a process-wide context,
//! see [`set_precision`] and [`set_tolerance`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering as AtomicOrdering};

use dashu_base::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use serde_json::Value;

/// Exact rational numbers, always in lowest terms with positive denominator.
pub type Rational = RBig;

type Float = FBig<HalfEven, 2>;

/// Default working precision of the complex backend, in bits.
pub const DEFAULT_PRECISION_BITS: usize = 256;
/// Default comparison tolerance of the complex backend.
pub const DEFAULT_TOLERANCE: f64 = 1e-40;

static PRECISION: AtomicUsize = AtomicUsize::new(DEFAULT_PRECISION_BITS);
// 0 encodes "unset", i.e. DEFAULT_TOLERANCE.
static TOLERANCE_BITS: AtomicU64 = AtomicU64::new(0);

/// Errors raised while parsing or solving in a scalar backend.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScalarError {
    #[error("cannot parse scalar from {0}")]
    Parse(String),
    #[error("root {0} is not rational")]
    NotRational(String),
    #[error("polynomial root iteration did not converge")]
    NoConvergence,
    #[error("polynomial has zero leading coefficient or degree zero")]
    DegeneratePolynomial,
    #[error("tolerance must be a positive finite number, got {0}")]
    BadTolerance(f64),
    #[error("precision must be at least 64 bits, got {0}")]
    BadPrecision(usize),
}

/// Sets the working precision (bits) used for newly created complex values.
pub fn set_precision(bits: usize) -> Result<(), ScalarError> {
    if bits < 64 {
        return Err(ScalarError::BadPrecision(bits));
    }
    PRECISION.store(bits, AtomicOrdering::SeqCst);
    Ok(())
}

/// Current working precision of the complex backend.
pub fn precision() -> usize {
    PRECISION.load(AtomicOrdering::SeqCst)
}

/// Sets the comparison tolerance of the complex backend.
pub fn set_tolerance(tol: f64) -> Result<(), ScalarError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ScalarError::BadTolerance(tol));
    }
    TOLERANCE_BITS.store(tol.to_bits(), AtomicOrdering::SeqCst);
    Ok(())
}

/// Current comparison tolerance of the complex backend.
pub fn tolerance() -> f64 {
    match TOLERANCE_BITS.load(AtomicOrdering::SeqCst) {
        0 => DEFAULT_TOLERANCE,
        bits => f64::from_bits(bits),
    }
}

/// Field operations shared by both backends.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + Sub<Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + Mul<Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + Div<Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    /// Short backend name used in serialized metadata.
    fn backend_name() -> &'static str;
    /// True for the exact backend.
    fn is_exact() -> bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// Exact test for rationals, tolerance test for floats.
    fn is_zero(&self) -> bool;
    /// Exact equality for rationals, relative tolerance for floats.
    fn approx_eq(&self, other: &Self) -> bool;
    /// A square root, if one exists in the backend (principal branch for floats).
    fn sqrt(&self) -> Option<Self>;
    fn abs_f64(&self) -> f64;
    /// Deterministic total order: value for rationals, (re, im) for complex.
    fn canonical_cmp(&self, other: &Self) -> Ordering;
    fn to_complex(&self) -> Complex;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, ScalarError>;
    /// All roots of `c[0] + c[1] x + ... + c[n] x^n`, with multiplicity.
    fn poly_roots(coeffs: &[Self]) -> Result<Vec<Self>, ScalarError>;

    fn from_ratio(p: i64, q: i64) -> Self {
        Self::from_rational(&(RBig::from(p) / RBig::from(q)))
    }

    fn inv(&self) -> Self {
        Self::one() / self.clone()
    }

    fn powi(&self, e: i64) -> Self {
        let mut base = if e < 0 { self.inv() } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= &base;
            }
            base = base.clone() * &base;
            k >>= 1;
        }
        acc
    }
}

/// Parses `p/q`, integers and decimals such as `-1.25e-3` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: IBig = n.trim().parse().ok()?;
        let d: IBig = d.trim().parse().ok()?;
        if d == IBig::ZERO {
            return None;
        }
        return Some(RBig::from(n) / RBig::from(d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut value = RBig::from(all.parse::<UBig>().ok()?);
    let shift = exp - frac_part.len() as i64;
    let ten_pow = RBig::from(UBig::from(10u8).pow(shift.unsigned_abs() as usize));
    if shift >= 0 {
        value *= ten_pow;
    } else {
        value /= ten_pow;
    }
    Some(if neg { -value } else { value })
}

fn json_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

impl Scalar for Rational {
    fn backend_name() -> &'static str {
        "rational"
    }
    fn is_exact() -> bool {
        true
    }
    fn zero() -> Self {
        RBig::ZERO
    }
    fn one() -> Self {
        RBig::ONE
    }
    fn from_i64(v: i64) -> Self {
        RBig::from(v)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        *self == RBig::ZERO
    }
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
    fn sqrt(&self) -> Option<Self> {
        if *self < RBig::ZERO {
            return None;
        }
        let num = UBig::try_from(self.numerator().clone()).ok()?;
        let den = self.denominator().clone();
        let (rn, rd) = (num.sqrt(), den.sqrt());
        if &rn * &rn == num && &rd * &rd == den {
            Some(RBig::from(rn) / RBig::from(rd))
        } else {
            None
        }
    }
    fn abs_f64(&self) -> f64 {
        self.to_f64().value().abs()
    }
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
    fn to_complex(&self) -> Complex {
        Complex::from_rational(self)
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self, ScalarError> {
        json_text(v)
            .and_then(|t| parse_rational(&t))
            .ok_or_else(|| ScalarError::Parse(v.to_string()))
    }
    fn poly_roots(coeffs: &[Self]) -> Result<Vec<Self>, ScalarError> {
        let coeffs = trim_leading_zeros(coeffs)?;
        // Clear denominators: any rational root p/q of an integer polynomial
        // has q dividing the leading coefficient.
        let mut lcm = UBig::ONE;
        for c in coeffs {
            let d = c.denominator();
            lcm = &lcm / dashu_base::Gcd::gcd(&lcm, d) * d;
        }
        let lead = (coeffs.last().unwrap() * RBig::from(lcm.clone())).numerator().clone();
        let approx: Vec<Complex> = coeffs.iter().map(Complex::from_rational).collect();
        let roots = Complex::poly_roots(&approx)?;
        let lead_f = Complex::from_rational(&RBig::from(lead.clone()));
        let mut out = Vec::with_capacity(roots.len());
        for r in roots {
            let scaled = r.clone() * &lead_f;
            let near = Float::from(scaled.re.round().to_int().value());
            let candidate = RBig::from(near.to_int().value()) / RBig::from(lead.clone());
            if eval_poly(coeffs, &candidate).is_zero() {
                out.push(candidate);
            } else {
                return Err(ScalarError::NotRational(r.to_string()));
            }
        }
        out.sort();
        Ok(out)
    }
}

fn trim_leading_zeros<S: Scalar>(coeffs: &[S]) -> Result<&[S], ScalarError> {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].is_zero() {
        n -= 1;
    }
    if n < 2 {
        return Err(ScalarError::DegeneratePolynomial);
    }
    Ok(&coeffs[..n])
}

/// Horner evaluation of `c[0] + c[1] x + ...`.
pub fn eval_poly<S: Scalar>(coeffs: &[S], x: &S) -> S {
    let mut acc = S::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn fl(v: i64) -> Float {
    Float::from(v).with_precision(precision()).value()
}

fn fl_rational(r: &Rational) -> Float {
    r.to_float::<HalfEven, 2>(precision()).value()
}

fn float_sqrt(x: &Float) -> Float {
    if *x <= Float::ZERO {
        return fl(0);
    }
    x.clone().with_precision(precision()).value().sqrt()
}

fn float_decimal(x: &Float) -> String {
    if *x == Float::ZERO {
        return "0".to_string();
    }
    let d = x.to_decimal().value();
    let repr = d.repr();
    format!("{}e{}", repr.significand(), repr.exponent())
}

/// Arbitrary-precision complex number over binary floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Complex {
    re: Float,
    im: Float,
}

impl Complex {
    pub fn new_rational(re: &Rational, im: &Rational) -> Self {
        Complex { re: fl_rational(re), im: fl_rational(im) }
    }

    /// Approximates an `f64` pair; intended for tests and initial guesses.
    pub fn from_f64(re: f64, im: f64) -> Self {
        let conv = |v: f64| {
            Float::try_from(v)
                .map(|f| f.with_precision(precision()).value())
                .unwrap_or_else(|_| fl(0))
        };
        Complex { re: conv(re), im: conv(im) }
    }

    pub fn re_f64(&self) -> f64 {
        self.re.to_f64().value()
    }

    pub fn im_f64(&self) -> f64 {
        self.im.to_f64().value()
    }

    pub fn conj(&self) -> Self {
        Complex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn i() -> Self {
        Complex { re: fl(0), im: fl(1) }
    }

    fn norm_sqr(&self) -> Float {
        &self.re * &self.re + &self.im * &self.im
    }

    fn abs_float(&self) -> Float {
        float_sqrt(&self.norm_sqr())
    }

    /// Real and imaginary parts as decimal strings `mantissa e exponent`.
    pub fn to_decimal_pair(&self) -> (String, String) {
        (float_decimal(&self.re), float_decimal(&self.im))
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let re = self.re.to_f64().value();
        let im = self.im.to_f64().value();
        write!(f, "{re:e}{im:+e}i")
    }
}

macro_rules! complex_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Complex> for &Complex {
            type Output = Complex;
            fn $m(self, o: &Complex) -> Complex {
                let f: fn(&Complex, &Complex) -> Complex = $body;
                f(self, o)
            }
        }
        impl $tr<Complex> for Complex {
            type Output = Complex;
            fn $m(self, o: Complex) -> Complex {
                (&self).$m(&o)
            }
        }
        impl $tr<&Complex> for Complex {
            type Output = Complex;
            fn $m(self, o: &Complex) -> Complex {
                (&self).$m(o)
            }
        }
        impl $tr<Complex> for &Complex {
            type Output = Complex;
            fn $m(self, o: Complex) -> Complex {
                self.$m(&o)
            }
        }
    };
}

complex_binop!(Add, add, |a, b| Complex { re: &a.re + &b.re, im: &a.im + &b.im });
complex_binop!(Sub, sub, |a, b| Complex { re: &a.re - &b.re, im: &a.im - &b.im });
complex_binop!(Mul, mul, |a, b| Complex {
    re: &a.re * &b.re - &a.im * &b.im,
    im: &a.re * &b.im + &a.im * &b.re,
});
complex_binop!(Div, div, |a, b| {
    let den = b.norm_sqr();
    Complex {
        re: (&a.re * &b.re + &a.im * &b.im) / &den,
        im: (&a.im * &b.re - &a.re * &b.im) / &den,
    }
});

impl Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex { re: -self.re, im: -self.im }
    }
}

impl AddAssign<&Complex> for Complex {
    fn add_assign(&mut self, o: &Complex) {
        *self = &*self + o;
    }
}

impl SubAssign<&Complex> for Complex {
    fn sub_assign(&mut self, o: &Complex) {
        *self = &*self - o;
    }
}

impl MulAssign<&Complex> for Complex {
    fn mul_assign(&mut self, o: &Complex) {
        *self = &*self * o;
    }
}

impl Scalar for Complex {
    fn backend_name() -> &'static str {
        "complex"
    }
    fn is_exact() -> bool {
        false
    }
    fn zero() -> Self {
        Complex { re: fl(0), im: fl(0) }
    }
    fn one() -> Self {
        Complex { re: fl(1), im: fl(0) }
    }
    fn from_i64(v: i64) -> Self {
        Complex { re: fl(v), im: fl(0) }
    }
    fn from_rational(r: &Rational) -> Self {
        Complex { re: fl_rational(r), im: fl(0) }
    }
    fn is_zero(&self) -> bool {
        self.abs_f64() <= tolerance()
    }
    fn approx_eq(&self, other: &Self) -> bool {
        let diff = (self - other).abs_f64();
        let scale = 1f64.max(self.abs_f64()).max(other.abs_f64());
        diff <= tolerance() * scale
    }
    fn sqrt(&self) -> Option<Self> {
        let r = self.abs_float();
        if r == Float::ZERO {
            return Some(Self::zero());
        }
        let two = fl(2);
        let a = float_sqrt(&((&r + &self.re) / &two));
        let mut b = float_sqrt(&((&r - &self.re) / &two));
        if self.im < Float::ZERO {
            b = -b;
        }
        Some(Complex { re: a, im: b })
    }
    fn abs_f64(&self) -> f64 {
        self.abs_float().to_f64().value()
    }
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        let scale = 1f64.max(self.abs_f64()).max(other.abs_f64());
        let dre = (&self.re - &other.re).to_f64().value();
        if dre.abs() > tolerance() * scale {
            return self.re.cmp(&other.re);
        }
        self.im.cmp(&other.im)
    }
    fn to_complex(&self) -> Complex {
        self.clone()
    }
    fn to_json(&self) -> Value {
        let (re, im) = self.to_decimal_pair();
        Value::Array(vec![Value::String(re), Value::String(im)])
    }
    fn from_json(v: &Value) -> Result<Self, ScalarError> {
        let part = |x: &Value| {
            json_text(x)
                .and_then(|t| parse_rational(&t))
                .ok_or_else(|| ScalarError::Parse(v.to_string()))
        };
        match v {
            Value::Array(items) if items.len() == 2 => {
                Ok(Complex::new_rational(&part(&items[0])?, &part(&items[1])?))
            }
            Value::String(_) | Value::Number(_) => Ok(Complex::from_rational(&part(v)?)),
            _ => Err(ScalarError::Parse(v.to_string())),
        }
    }
    fn poly_roots(coeffs: &[Self]) -> Result<Vec<Self>, ScalarError> {
        let coeffs = trim_leading_zeros(coeffs)?;
        let lead = coeffs.last().unwrap().clone();
        let monic: Vec<Complex> = coeffs.iter().map(|c| c.clone() / &lead).collect();
        let n = monic.len() - 1;
        let radius = 1.0 + monic[..n].iter().map(|c| c.abs_f64()).fold(0.0, f64::max);
        let seed = Complex::from_f64(0.4, 0.9);
        let mut roots: Vec<Complex> = (0..n)
            .map(|k| seed.powi(k as i64) * Complex::from_f64(radius, 0.0))
            .collect();
        let target = 2f64.powi(-(precision() as i32) + 8);
        let mut converged = false;
        for _ in 0..4000 {
            let mut max_step = 0f64;
            for k in 0..n {
                let mut den = Complex::one();
                for j in 0..n {
                    if j != k {
                        den *= &(&roots[k] - &roots[j]);
                    }
                }
                if den.abs_f64() == 0.0 {
                    roots[k] = &roots[k] + &Complex::from_f64(1e-3, 1e-3);
                    max_step = f64::INFINITY;
                    continue;
                }
                let step = eval_poly(&monic, &roots[k]) / den;
                let scale = 1f64.max(roots[k].abs_f64());
                max_step = max_step.max(step.abs_f64() / scale);
                roots[k] = &roots[k] - &step;
            }
            if max_step <= target {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ScalarError::NoConvergence);
        }
        roots.sort_by(|a, b| a.canonical_cmp(b));
        Ok(roots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rational_forms() {
        assert_eq!(parse_rational("-6/4").unwrap().to_string(), "-3/2");
        assert_eq!(parse_rational("1.25e-2").unwrap(), RBig::from(1) / RBig::from(80));
        assert_eq!(parse_rational("7").unwrap(), RBig::from(7));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn rational_sqrt_only_for_squares() {
        assert_eq!(Rational::from_ratio(9, 4).sqrt(), Some(Rational::from_ratio(3, 2)));
        assert_eq!(Rational::from_ratio(1, 2).sqrt(), None);
        assert_eq!(Rational::from_i64(-4).sqrt(), None);
    }

    #[test]
    fn complex_sqrt_principal_branch() {
        let m = Complex::from_i64(-4).sqrt().unwrap();
        assert!(m.approx_eq(&(Complex::i() * Complex::from_i64(2))));
        let z = Complex::new_rational(&RBig::from(3), &RBig::from(-4));
        let s = z.sqrt().unwrap();
        assert!((s.clone() * &s).approx_eq(&z));
        assert!(s.re_f64() > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let r = Rational::from_ratio(-22, 7);
        assert_eq!(Rational::from_json(&r.to_json()).unwrap(), r);
        let c = Complex::new_rational(&RBig::from(1), &(RBig::from(1) / RBig::from(3)));
        assert!(Complex::from_json(&c.to_json()).unwrap().approx_eq(&c));
    }

    #[test]
    fn rational_roots_exact() {
        // (2x - 1)(x + 3)(x - 2)
        let p = [6, -13, 1, 2].map(Rational::from_i64);
        let rs = Rational::poly_roots(&p).unwrap();
        let expected = vec![Rational::from_i64(-3), Rational::from_ratio(1, 2), Rational::from_i64(2)];
        assert_eq!(rs, expected);
    }

    #[test]
    fn irrational_roots_rejected_in_rational_backend() {
        let p = [-2, 0, 1].map(Rational::from_i64);
        assert!(matches!(Rational::poly_roots(&p), Err(ScalarError::NotRational(_))));
        let pc = [-2, 0, 1].map(Complex::from_i64);
        let rs = Complex::poly_roots(&pc).unwrap();
        let two = Complex::from_i64(2);
        assert!((rs[1].clone() * &rs[1]).approx_eq(&two));
    }

    #[test]
    fn powi_handles_negative_exponents() {
        let t = Rational::from_ratio(2, 3);
        assert_eq!(t.powi(-2), Rational::from_ratio(9, 4));
        assert_eq!(t.powi(0), Rational::one());
    }
}
