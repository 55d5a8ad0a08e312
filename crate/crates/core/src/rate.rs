//! Rate functions: total functions on arbitrary-precision naturals, kept as
//! closed-form expressions so they can be evaluated at arguments far beyond
//! machine integers. Houses divergence rates, weight bounds, counterexample
//! functions and every derived modulus.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact nonnegative integer. All modulus arithmetic happens here; nothing
/// ever silently overflows.
pub type Nat = BigUint;

/// Exact rational, used for weights, bounds and intermediate values.
pub type Rat = BigRational;

pub fn nat(n: u64) -> Nat {
    Nat::from(n)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn nat_to_rat(n: &Nat) -> Rat {
    Rat::from_integer(BigInt::from(n.clone()))
}

/// Truncated subtraction on naturals: `a monus b = max(a - b, 0)`.
pub fn monus(a: &Nat, b: &Nat) -> Nat {
    if a >= b { a - b } else { Nat::zero() }
}

/// Exact ceiling of a rational, clamped to 0 from below.
pub fn ceil_to_nat(r: &Rat) -> Nat {
    let c = r.ceil().to_integer();
    if c.is_negative() {
        Nat::zero()
    } else {
        c.to_biguint().expect("nonnegative")
    }
}

/// Least natural `s` with `s^2 >= r` (0 when `r <= 0`).
pub fn sqrt_ceil(r: &Rat) -> Nat {
    if !r.is_positive() {
        return Nat::zero();
    }
    let upper = ceil_to_nat(r);
    let mut s = upper.sqrt(); // floor sqrt of the ceiling
    let ge = |s: &Nat| nat_to_rat(&(s * s)) >= *r;
    while !ge(&s) {
        s += 1u32;
    }
    while s > Nat::zero() && ge(&monus(&s, &Nat::one())) {
        s -= 1u32;
    }
    s
}

/// Parse an exact rational from `"p/q"` or `"p"`.
pub fn parse_rat(s: &str) -> Result<Rat, RateError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| RateError::BadRational(s.to_string()))?;
    let d = BigInt::from_str(den).map_err(|_| RateError::BadRational(s.to_string()))?;
    if d.is_zero() {
        return Err(RateError::BadRational(s.to_string()));
    }
    Ok(Rat::new(n, d))
}

/// Render a rational as `"p/q"` (or `"p"` for integers).
pub fn rat_to_string(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Explicit scans (max-prefix, non-monotone sup) refuse beyond this many
/// evaluation points rather than approximate.
pub const SCAN_THRESHOLD: u64 = 1_000_000;

const MAX_EXPONENT: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RateError {
    #[error("malformed rational literal: {0:?}")]
    BadRational(String),
    #[error("negative constant in rate expression: {0}")]
    NegativeConstant(String),
    #[error("rate expression produced a non-integer value: {0}")]
    NonInteger(String),
    #[error("rate expression produced a negative value: {0}")]
    Negative(String),
    #[error("division by zero in rate expression")]
    DivisionByZero,
    #[error("exponent too large to evaluate: {0}")]
    ExponentTooLarge(String),
    #[error("explicit scan over {0} points exceeds the threshold of {SCAN_THRESHOLD}")]
    ScanThresholdExceeded(String),
    #[error("iteration count too large to unroll: {0}")]
    TooManyIterations(String),
}

mod rat_string {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(D::Error::custom)
    }
}

/// Closed-form expression over one natural variable. The grammar is the
/// serialization format for schedule rates and counterexample functions in
/// scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateExpr {
    Const {
        #[serde(with = "rat_string")]
        value: Rat,
    },
    Var,
    Add { a: Box<RateExpr>, b: Box<RateExpr> },
    Mul { a: Box<RateExpr>, b: Box<RateExpr> },
    /// Truncated subtraction.
    Monus { a: Box<RateExpr>, b: Box<RateExpr> },
    Max { a: Box<RateExpr>, b: Box<RateExpr> },
    /// `ceil(a / b)`.
    CeilDiv { a: Box<RateExpr>, b: Box<RateExpr> },
    Pow { base: Box<RateExpr>, exp: Box<RateExpr> },
    /// Exact rational ceiling.
    Ceil { a: Box<RateExpr> },
    /// Least natural `s` with `s^2 >= a`.
    SqrtCeil { a: Box<RateExpr> },
    /// `outer(inner(n))`.
    Compose { outer: Box<RateExpr>, inner: Box<RateExpr> },
    /// `n -> max_{i <= n} f(i)`.
    MaxPrefix { f: Box<RateExpr> },
}

impl RateExpr {
    fn contains_var(&self) -> bool {
        match self {
            RateExpr::Const { .. } => false,
            RateExpr::Var => true,
            RateExpr::Add { a, b }
            | RateExpr::Mul { a, b }
            | RateExpr::Monus { a, b }
            | RateExpr::Max { a, b }
            | RateExpr::CeilDiv { a, b } => a.contains_var() || b.contains_var(),
            RateExpr::Pow { base, exp } => base.contains_var() || exp.contains_var(),
            RateExpr::Ceil { a } | RateExpr::SqrtCeil { a } => a.contains_var(),
            RateExpr::Compose { outer, inner } => outer.contains_var() && inner.contains_var(),
            RateExpr::MaxPrefix { f } => f.contains_var(),
        }
    }

    /// Conservative syntactic monotonicity (nondecreasing in the variable).
    /// All values in this algebra are nonnegative, which the rules rely on.
    fn monotone(&self) -> bool {
        match self {
            RateExpr::Const { .. } => true,
            RateExpr::Var => true,
            RateExpr::Add { a, b } | RateExpr::Mul { a, b } | RateExpr::Max { a, b } => {
                a.monotone() && b.monotone()
            }
            RateExpr::Monus { a, b } => a.monotone() && b.antitone(),
            RateExpr::CeilDiv { a, b } => a.monotone() && b.antitone(),
            RateExpr::Pow { base, exp } => {
                (base.monotone() && !exp.contains_var())
                    || (exp.monotone()
                        && matches!(&**base, RateExpr::Const { value } if *value >= Rat::one()))
            }
            RateExpr::Ceil { a } | RateExpr::SqrtCeil { a } => a.monotone(),
            RateExpr::Compose { outer, inner } => outer.monotone() && inner.monotone(),
            RateExpr::MaxPrefix { .. } => true,
        }
    }

    /// Conservative syntactic antitonicity (nonincreasing). Variable-free
    /// expressions come out antitone, so this strictly generalizes the
    /// "right side is constant" condition for `Monus`/`CeilDiv` above.
    fn antitone(&self) -> bool {
        match self {
            RateExpr::Const { .. } => true,
            RateExpr::Var => false,
            RateExpr::Add { a, b } | RateExpr::Mul { a, b } | RateExpr::Max { a, b } => {
                a.antitone() && b.antitone()
            }
            RateExpr::Monus { a, b } => a.antitone() && b.monotone(),
            RateExpr::CeilDiv { a, b } => a.antitone() && b.monotone(),
            RateExpr::Pow { base, exp } => base.antitone() && !exp.contains_var(),
            RateExpr::Ceil { a } | RateExpr::SqrtCeil { a } => a.antitone(),
            RateExpr::Compose { outer, inner } => {
                (outer.monotone() && inner.antitone()) || (outer.antitone() && inner.monotone())
            }
            RateExpr::MaxPrefix { f } => !f.contains_var(),
        }
    }

    fn validate(&self) -> Result<(), RateError> {
        match self {
            RateExpr::Const { value } => {
                if value.is_negative() {
                    Err(RateError::NegativeConstant(rat_to_string(value)))
                } else {
                    Ok(())
                }
            }
            RateExpr::Var => Ok(()),
            RateExpr::Add { a, b }
            | RateExpr::Mul { a, b }
            | RateExpr::Monus { a, b }
            | RateExpr::Max { a, b }
            | RateExpr::CeilDiv { a, b } => {
                a.validate()?;
                b.validate()
            }
            RateExpr::Pow { base, exp } => {
                base.validate()?;
                exp.validate()
            }
            RateExpr::Ceil { a } | RateExpr::SqrtCeil { a } => a.validate(),
            RateExpr::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()
            }
            RateExpr::MaxPrefix { f } => f.validate(),
        }
    }

    fn eval(&self, n: &Rat) -> Result<Rat, RateError> {
        match self {
            RateExpr::Const { value } => Ok(value.clone()),
            RateExpr::Var => Ok(n.clone()),
            RateExpr::Add { a, b } => Ok(a.eval(n)? + b.eval(n)?),
            RateExpr::Mul { a, b } => Ok(a.eval(n)? * b.eval(n)?),
            RateExpr::Monus { a, b } => {
                let va = a.eval(n)?;
                let vb = b.eval(n)?;
                Ok(if va >= vb { va - vb } else { Rat::zero() })
            }
            RateExpr::Max { a, b } => {
                let va = a.eval(n)?;
                let vb = b.eval(n)?;
                Ok(va.max(vb))
            }
            RateExpr::CeilDiv { a, b } => {
                let va = a.eval(n)?;
                let vb = b.eval(n)?;
                if vb.is_zero() {
                    return Err(RateError::DivisionByZero);
                }
                Ok((va / vb).ceil())
            }
            RateExpr::Pow { base, exp } => {
                let vb = base.eval(n)?;
                let ve = exp.eval(n)?;
                if !ve.is_integer() {
                    return Err(RateError::NonInteger(rat_to_string(&ve)));
                }
                let e = ve
                    .to_integer()
                    .to_u64()
                    .filter(|e| *e <= MAX_EXPONENT)
                    .ok_or_else(|| RateError::ExponentTooLarge(rat_to_string(&ve)))?;
                Ok(num_traits::pow::pow(vb, e as usize))
            }
            RateExpr::Ceil { a } => Ok(a.eval(n)?.ceil()),
            RateExpr::SqrtCeil { a } => Ok(nat_to_rat(&sqrt_ceil(&a.eval(n)?))),
            RateExpr::Compose { outer, inner } => outer.eval(&inner.eval(n)?),
            RateExpr::MaxPrefix { f } => {
                if f.monotone() {
                    return f.eval(n);
                }
                let limit = as_scan_index(n)?;
                let mut best = f.eval(&Rat::zero())?;
                for i in 1..=limit {
                    let v = f.eval(&Rat::from_integer(BigInt::from(i)))?;
                    if v > best {
                        best = v;
                    }
                }
                Ok(best)
            }
        }
    }
}

pub(crate) fn as_scan_index(n: &Rat) -> Result<u64, RateError> {
    if !n.is_integer() || n.is_negative() {
        return Err(RateError::NonInteger(rat_to_string(n)));
    }
    n.to_integer()
        .to_u64()
        .filter(|i| *i <= SCAN_THRESHOLD)
        .ok_or_else(|| RateError::ScanThresholdExceeded(rat_to_string(n)))
}

/// A total function on naturals given by a closed-form expression, together
/// with a by-construction monotonicity flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RateFn {
    expr: RateExpr,
    #[serde(skip)]
    monotone: bool,
}

impl<'de> Deserialize<'de> for RateFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let expr = RateExpr::deserialize(d)?;
        RateFn::new(expr).map_err(D::Error::custom)
    }
}

impl fmt::Display for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::to_string(&self.expr).map_err(|_| fmt::Error)?)
    }
}

impl RateFn {
    pub fn new(expr: RateExpr) -> Result<Self, RateError> {
        expr.validate()?;
        let monotone = expr.monotone();
        Ok(RateFn { expr, monotone })
    }

    pub fn expr(&self) -> &RateExpr {
        &self.expr
    }

    /// True iff the function is provably nondecreasing by construction rules.
    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn constant(v: u64) -> Self {
        RateFn::new(RateExpr::Const { value: Rat::from_integer(BigInt::from(v)) }).expect("nonneg")
    }

    pub fn constant_rat(v: Rat) -> Result<Self, RateError> {
        RateFn::new(RateExpr::Const { value: v })
    }

    pub fn var() -> Self {
        RateFn::new(RateExpr::Var).expect("valid")
    }

    fn bin(op: fn(Box<RateExpr>, Box<RateExpr>) -> RateExpr, a: &RateFn, b: &RateFn) -> Self {
        RateFn::new(op(Box::new(a.expr.clone()), Box::new(b.expr.clone()))).expect("validated parts")
    }

    pub fn add(&self, other: &RateFn) -> Self {
        Self::bin(|a, b| RateExpr::Add { a, b }, self, other)
    }

    pub fn mul(&self, other: &RateFn) -> Self {
        Self::bin(|a, b| RateExpr::Mul { a, b }, self, other)
    }

    pub fn monus_fn(&self, other: &RateFn) -> Self {
        Self::bin(|a, b| RateExpr::Monus { a, b }, self, other)
    }

    pub fn max_fn(&self, other: &RateFn) -> Self {
        Self::bin(|a, b| RateExpr::Max { a, b }, self, other)
    }

    pub fn ceil_div(&self, other: &RateFn) -> Self {
        Self::bin(|a, b| RateExpr::CeilDiv { a, b }, self, other)
    }

    pub fn pow(&self, exp: &RateFn) -> Self {
        Self::bin(|base, exp| RateExpr::Pow { base, exp }, self, exp)
    }

    pub fn ceil(&self) -> Self {
        RateFn::new(RateExpr::Ceil { a: Box::new(self.expr.clone()) }).expect("validated")
    }

    pub fn sqrt_ceil(&self) -> Self {
        RateFn::new(RateExpr::SqrtCeil { a: Box::new(self.expr.clone()) }).expect("validated")
    }

    pub fn compose(&self, inner: &RateFn) -> Self {
        Self::bin(|outer, inner| RateExpr::Compose { outer, inner }, self, inner)
    }

    /// The `f^M` transform: `f^M(n) = max_{i <= n} f(i)`. Monotone functions
    /// are returned unchanged.
    pub fn max_prefix(&self) -> Self {
        if self.monotone {
            return self.clone();
        }
        RateFn::new(RateExpr::MaxPrefix { f: Box::new(self.expr.clone()) }).expect("validated")
    }

    /// Evaluate at a natural argument; the result may be rational (weight
    /// bounds are rational-valued).
    pub fn eval_rat(&self, n: &Nat) -> Result<Rat, RateError> {
        self.expr.eval(&nat_to_rat(n))
    }

    /// Evaluate at a natural argument, requiring an exact natural result.
    pub fn eval(&self, n: &Nat) -> Result<Nat, RateError> {
        let v = self.eval_rat(n)?;
        if !v.is_integer() {
            return Err(RateError::NonInteger(rat_to_string(&v)));
        }
        let i = v.to_integer();
        i.to_biguint().ok_or_else(|| RateError::Negative(i.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monus_clamps() {
        assert_eq!(monus(&nat(3), &nat(5)), nat(0));
        assert_eq!(monus(&nat(5), &nat(3)), nat(2));
    }

    #[test]
    fn sqrt_ceil_exact_and_between() {
        assert_eq!(sqrt_ceil(&rat(0, 1)), nat(0));
        assert_eq!(sqrt_ceil(&rat(1, 1)), nat(1));
        assert_eq!(sqrt_ceil(&rat(2, 1)), nat(2));
        assert_eq!(sqrt_ceil(&rat(4, 1)), nat(2));
        assert_eq!(sqrt_ceil(&rat(5, 1)), nat(3));
        assert_eq!(sqrt_ceil(&rat(1, 2)), nat(1));
    }

    #[test]
    fn parse_and_print_rationals() {
        assert_eq!(parse_rat("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rat("7").unwrap(), rat(7, 1));
        assert_eq!(rat_to_string(&rat(9, 4)), "9/4");
        assert_eq!(rat_to_string(&rat(8, 4)), "2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn eval_basic_ops() {
        let f = RateFn::var().add(&RateFn::constant(2)).mul(&RateFn::constant(3));
        assert_eq!(f.eval(&nat(4)).unwrap(), nat(18));
        assert!(f.is_monotone());

        let g = RateFn::constant(5).monus_fn(&RateFn::var());
        assert_eq!(g.eval(&nat(7)).unwrap(), nat(0));
        assert!(!g.is_monotone());
    }

    #[test]
    fn max_prefix_of_monotone_is_identity() {
        let f = RateFn::var().mul(&RateFn::constant(2));
        let fm = f.max_prefix();
        for i in 0..100u64 {
            assert_eq!(f.eval(&nat(i)).unwrap(), fm.eval(&nat(i)).unwrap());
        }
    }

    #[test]
    fn max_prefix_of_decreasing_is_prefix_max() {
        // f(n) = 5 monus n
        let f = RateFn::constant(5).monus_fn(&RateFn::var());
        let fm = f.max_prefix();
        assert_eq!(fm.eval(&nat(3)).unwrap(), nat(5));
        assert_eq!(fm.eval(&nat(0)).unwrap(), nat(5));
        // nondecreasing and pointwise >= f
        let mut prev = Nat::zero();
        for i in 0..20u64 {
            let v = fm.eval(&nat(i)).unwrap();
            assert!(v >= f.eval(&nat(i)).unwrap());
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn pow_with_big_exponent() {
        let f = RateFn::constant(2).pow(&RateFn::var());
        assert!(f.is_monotone());
        let v = f.eval(&nat(1250)).unwrap();
        assert_eq!(v.bits(), 1251);
    }

    #[test]
    fn negative_constants_rejected() {
        let e = RateExpr::Const { value: rat(-1, 2) };
        assert!(matches!(RateFn::new(e), Err(RateError::NegativeConstant(_))));
    }

    #[test]
    fn json_ast_round_trip() {
        let f = RateFn::constant(2)
            .pow(&RateFn::var().ceil_div(&RateFn::constant(3)))
            .max_fn(&RateFn::var());
        let json = serde_json::to_string(&f).unwrap();
        let back: RateFn = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
        assert_eq!(f.is_monotone(), back.is_monotone());
    }

    #[test]
    fn json_ast_rejects_unknown_ops() {
        let bad = r#"{"op":"log","a":{"op":"var"}}"#;
        assert!(serde_json::from_str::<RateFn>(bad).is_err());
    }

    #[test]
    fn non_integer_result_is_an_error() {
        let f = RateFn::constant_rat(rat(1, 2)).unwrap().mul(&RateFn::var());
        assert!(matches!(f.eval(&nat(3)), Err(RateError::NonInteger(_))));
        assert_eq!(f.eval(&nat(4)).unwrap(), nat(2));
    }
}
