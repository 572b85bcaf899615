//! Exact scalars, truncated Laurent jets, dual numbers and seeded parameter sampling.
//!
//! Every matrix entry in this crate is a rational function of a handful of
//! parameters. Entries are evaluated at concrete rational points, so the only
//! scalar type that ever reaches a comparison is [`ExactScalar`]. [`Jet`] and
//! [`DualScalar`] exist for the two places where a limit or a derivative at a
//! removable singularity is needed.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("zero raised to a negative power")]
    ZeroToNegativePower,
    #[error("pole encountered")]
    PoleEncountered,
    #[error("jet precision exhausted")]
    PrecisionExhausted,
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("cannot parse `{0}` as a rational")]
    Parse(String),
}

/// Arbitrary-precision rational in canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    pub fn from_big(r: BigRational) -> Self {
        ExactScalar(r)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Always `num/den`, even for integers.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl From<i64> for ExactScalar {
    fn from(k: i64) -> Self {
        ExactScalar(BigRational::from_integer(BigInt::from(k)))
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for ExactScalar {
    type Err = NumError;

    /// Accepts `a` or `a/b` with integer `a`, `b`.
    fn from_str(s: &str) -> Result<Self, NumError> {
        let bad = || NumError::Parse(s.to_string());
        let t = s.trim();
        let (a, b) = match t.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (t, "1"),
        };
        let num: BigInt = a.parse().map_err(|_| bad())?;
        let den: BigInt = b.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(NumError::ZeroDenominator);
        }
        Ok(ExactScalar(BigRational::new(num, den)))
    }
}

/// Canonical fraction `num/den`.
pub fn rat(num: i64, den: i64) -> Result<ExactScalar, NumError> {
    if den == 0 {
        return Err(NumError::ZeroDenominator);
    }
    Ok(ExactScalar(BigRational::new(BigInt::from(num), BigInt::from(den))))
}

/// Exact integer power; negative exponents invert.
pub fn ipow(base: &ExactScalar, e: i64) -> Result<ExactScalar, NumError> {
    if e < 0 && base.0.is_zero() {
        return Err(NumError::ZeroToNegativePower);
    }
    let e32 = i32::try_from(e).map_err(|_| NumError::PrecisionExhausted)?;
    Ok(ExactScalar(num_traits::pow::Pow::pow(&base.0, e32)))
}

macro_rules! forward_binop {
    ($t:ty, $tr:ident, $m:ident, $body:expr) => {
        impl $tr for $t {
            type Output = $t;
            fn $m(self, o: $t) -> $t {
                $body(&self, &o)
            }
        }
        impl<'a> $tr<&'a $t> for $t {
            type Output = $t;
            fn $m(self, o: &'a $t) -> $t {
                $body(&self, o)
            }
        }
        impl<'a, 'b> $tr<&'b $t> for &'a $t {
            type Output = $t;
            fn $m(self, o: &'b $t) -> $t {
                $body(self, o)
            }
        }
        impl<'a> $tr<$t> for &'a $t {
            type Output = $t;
            fn $m(self, o: $t) -> $t {
                $body(self, &o)
            }
        }
    };
}

forward_binop!(ExactScalar, Add, add, |a: &ExactScalar, b: &ExactScalar| ExactScalar(&a.0 + &b.0));
forward_binop!(ExactScalar, Sub, sub, |a: &ExactScalar, b: &ExactScalar| ExactScalar(&a.0 - &b.0));
forward_binop!(ExactScalar, Mul, mul, |a: &ExactScalar, b: &ExactScalar| ExactScalar(&a.0 * &b.0));

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-self.0)
    }
}

impl<'a> Neg for &'a ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-&self.0)
    }
}

/// Scalars that matrix builders and verifiers are generic over.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + Sub<Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + Mul<Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_scalar(s: &ExactScalar) -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Result<Self, NumError>;

    fn from_int(k: i64) -> Self {
        Self::from_scalar(&ExactScalar::from(k))
    }

    fn div(&self, o: &Self) -> Result<Self, NumError> {
        Ok(self.clone() * &o.inv()?)
    }

    fn powi(&self, e: i64) -> Result<Self, NumError> {
        let mut base = if e < 0 {
            if self.is_zero() {
                return Err(NumError::ZeroToNegativePower);
            }
            self.inv()?
        } else {
            self.clone()
        };
        let mut k = e.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * &base;
            }
        }
        Ok(acc)
    }
}

impl Field for ExactScalar {
    fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }
    fn one() -> Self {
        ExactScalar(BigRational::one())
    }
    fn from_scalar(s: &ExactScalar) -> Self {
        s.clone()
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn inv(&self) -> Result<Self, NumError> {
        if self.0.is_zero() {
            return Err(NumError::PoleEncountered);
        }
        Ok(ExactScalar(self.0.recip()))
    }
    fn powi(&self, e: i64) -> Result<Self, NumError> {
        ipow(self, e)
    }
}

/// Relative precision (number of stored coefficients) of a jet built from a constant.
pub const JET_ORDER: usize = 8;

const EXACT_ZERO_PRECISION: i64 = 1 << 20;

/// Truncated Laurent series `eps^val * (c0 + c1 eps + ...) + O(eps^(val + len))`.
///
/// Leading zero coefficients are always stripped, so `c0 != 0` unless the
/// series carries no information at all (then only the absolute precision is
/// meaningful). Evaluating a rational function at `a + eps` with jets gives its
/// value and derivatives at `a` even where the formula has a removable `0/0`.
#[derive(Clone)]
pub struct Jet {
    val: i64,
    coeffs: Vec<ExactScalar>,
}

impl Jet {
    fn normalized(val: i64, mut coeffs: Vec<ExactScalar>) -> Jet {
        let lead = coeffs.iter().take_while(|c| c.is_zero()).count();
        coeffs.drain(..lead);
        Jet { val: val + lead as i64, coeffs }
    }

    pub fn constant(a: &ExactScalar) -> Jet {
        if a.is_zero() {
            return Jet { val: EXACT_ZERO_PRECISION, coeffs: Vec::new() };
        }
        let mut c = vec![ExactScalar::zero(); JET_ORDER];
        c[0] = a.clone();
        Jet { val: 0, coeffs: c }
    }

    /// `a + eps`.
    pub fn variable(a: &ExactScalar) -> Jet {
        let mut c = vec![ExactScalar::zero(); JET_ORDER];
        c[0] = a.clone();
        c[1] = ExactScalar::one();
        Jet::normalized(0, c)
    }

    pub fn epsilon() -> Jet {
        Jet::variable(&ExactScalar::zero())
    }

    pub fn valuation(&self) -> i64 {
        self.val
    }

    /// Exponent of the first unknown term.
    pub fn abs_precision(&self) -> i64 {
        self.val + self.coeffs.len() as i64
    }

    /// Coefficient of `eps^k`; errors if the term lies beyond the known precision.
    pub fn coeff(&self, k: i64) -> Result<ExactScalar, NumError> {
        if k >= self.abs_precision() {
            return Err(NumError::PrecisionExhausted);
        }
        Ok(self.coeff_or_zero(k))
    }

    fn coeff_or_zero(&self, k: i64) -> ExactScalar {
        let i = k - self.val;
        if i >= 0 && (i as usize) < self.coeffs.len() {
            self.coeffs[i as usize].clone()
        } else {
            ExactScalar::zero()
        }
    }

    /// Value at `eps = 0`.
    pub fn value(&self) -> Result<ExactScalar, NumError> {
        if self.val < 0 && !self.coeffs.is_empty() {
            return Err(NumError::PoleEncountered);
        }
        self.coeff(0)
    }

    /// First derivative in `eps` at `eps = 0`.
    pub fn derivative(&self) -> Result<ExactScalar, NumError> {
        if self.val < 0 && !self.coeffs.is_empty() {
            return Err(NumError::PoleEncountered);
        }
        self.coeff(1)
    }

    fn add_ref(&self, o: &Jet) -> Jet {
        let ap = self.abs_precision().min(o.abs_precision());
        let v = self.val.min(o.val);
        if ap <= v {
            return Jet { val: ap, coeffs: Vec::new() };
        }
        let c = (v..ap).map(|k| self.coeff_or_zero(k) + o.coeff_or_zero(k)).collect();
        Jet::normalized(v, c)
    }

    fn mul_ref(&self, o: &Jet) -> Jet {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            let va = if self.coeffs.is_empty() { self.abs_precision() } else { self.val };
            let vb = if o.coeffs.is_empty() { o.abs_precision() } else { o.val };
            let ap = (self.abs_precision() + vb).min(o.abs_precision() + va);
            return Jet { val: ap, coeffs: Vec::new() };
        }
        let len = self.coeffs.len().min(o.coeffs.len());
        let c = (0..len)
            .map(|k| {
                (0..=k).fold(ExactScalar::zero(), |acc, i| {
                    acc + &self.coeffs[i] * &o.coeffs[k - i]
                })
            })
            .collect();
        Jet::normalized(self.val + o.val, c)
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eps^{}*(", self.val)?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, ") + O(eps^{})", self.abs_precision())
    }
}

impl PartialEq for Jet {
    /// Equal up to the common known precision.
    fn eq(&self, o: &Jet) -> bool {
        self.add_ref(&-o.clone()).coeffs.is_empty()
    }
}

forward_binop!(Jet, Add, add, |a: &Jet, b: &Jet| a.add_ref(b));
forward_binop!(Jet, Sub, sub, |a: &Jet, b: &Jet| a.add_ref(&-b.clone()));
forward_binop!(Jet, Mul, mul, |a: &Jet, b: &Jet| a.mul_ref(b));

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { val: self.val, coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

impl Field for Jet {
    fn zero() -> Self {
        Jet::constant(&ExactScalar::zero())
    }
    fn one() -> Self {
        Jet::constant(&ExactScalar::one())
    }
    fn from_scalar(s: &ExactScalar) -> Self {
        Jet::constant(s)
    }
    /// True when no coefficient is known to be nonzero.
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn inv(&self) -> Result<Self, NumError> {
        if self.coeffs.is_empty() {
            return Err(NumError::PrecisionExhausted);
        }
        let len = self.coeffs.len();
        let c0 = self.coeffs[0].inv()?;
        let mut r: Vec<ExactScalar> = Vec::with_capacity(len);
        r.push(c0.clone());
        for k in 1..len {
            let s = (1..=k).fold(ExactScalar::zero(), |acc, i| acc + &self.coeffs[i] * &r[k - i]);
            r.push(-(s * &c0));
        }
        Ok(Jet::normalized(-self.val, r))
    }
}

/// First-order dual number `value + deriv * eps` with `eps^2 = 0`.
#[derive(Clone, PartialEq, Debug)]
pub struct DualScalar {
    pub value: ExactScalar,
    pub deriv: ExactScalar,
}

impl DualScalar {
    pub fn new(value: ExactScalar, deriv: ExactScalar) -> Self {
        DualScalar { value, deriv }
    }

    pub fn variable(a: &ExactScalar) -> Self {
        DualScalar { value: a.clone(), deriv: ExactScalar::one() }
    }

    /// Value and first coefficient of a jet.
    pub fn from_jet(j: &Jet) -> Result<Self, NumError> {
        Ok(DualScalar { value: j.value()?, deriv: j.derivative()? })
    }
}

forward_binop!(DualScalar, Add, add, |a: &DualScalar, b: &DualScalar| DualScalar {
    value: &a.value + &b.value,
    deriv: &a.deriv + &b.deriv
});
forward_binop!(DualScalar, Sub, sub, |a: &DualScalar, b: &DualScalar| DualScalar {
    value: &a.value - &b.value,
    deriv: &a.deriv - &b.deriv
});
forward_binop!(DualScalar, Mul, mul, |a: &DualScalar, b: &DualScalar| DualScalar {
    value: &a.value * &b.value,
    deriv: &a.value * &b.deriv + &a.deriv * &b.value
});

impl Neg for DualScalar {
    type Output = DualScalar;
    fn neg(self) -> DualScalar {
        DualScalar { value: -self.value, deriv: -self.deriv }
    }
}

impl Field for DualScalar {
    fn zero() -> Self {
        DualScalar { value: ExactScalar::zero(), deriv: ExactScalar::zero() }
    }
    fn one() -> Self {
        DualScalar { value: ExactScalar::one(), deriv: ExactScalar::zero() }
    }
    fn from_scalar(s: &ExactScalar) -> Self {
        DualScalar { value: s.clone(), deriv: ExactScalar::zero() }
    }
    fn is_zero(&self) -> bool {
        self.value.is_zero() && self.deriv.is_zero()
    }
    /// Defined only when the value part is nonzero.
    fn inv(&self) -> Result<Self, NumError> {
        let r = self.value.inv()?;
        let d = -(&self.deriv * &r * &r);
        Ok(DualScalar { value: r, deriv: d })
    }
}

/// Exact values bound to named symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamPoint {
    bindings: BTreeMap<String, ExactScalar>,
}

impl ParamPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, name: &str, v: ExactScalar) -> Self {
        self.bindings.insert(name.to_string(), v);
        self
    }

    pub fn set(&mut self, name: &str, v: ExactScalar) {
        self.bindings.insert(name.to_string(), v);
    }

    pub fn get(&self, name: &str) -> Result<&ExactScalar, NumError> {
        self.bindings.get(name).ok_or_else(|| NumError::UnboundSymbol(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ExactScalar)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.bindings.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Deterministic random point: every symbol gets `a/b` with `1 <= a, b <= bound`.
///
/// The symbol `q` never receives the value 1. Symbols are drawn in the order
/// given, each from the same seeded stream.
pub fn sample_point(symbols: &[&str], seed: u64, bound: u32) -> ParamPoint {
    let bound = bound.max(2) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParamPoint::new();
    for &s in symbols {
        let (a, b) = loop {
            let a: i64 = rng.gen_range(1..=bound);
            let b: i64 = rng.gen_range(1..=bound);
            if s == "q" && a == b {
                continue;
            }
            break (a, b);
        };
        p.set(s, ExactScalar(BigRational::new(BigInt::from(a), BigInt::from(b))));
    }
    p
}
