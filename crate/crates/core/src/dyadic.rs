//! Exact dyadic rationals `num / 2^exp`.
//!
//! Every point and translation in the construction lives in `Z[1/2]`. A
//! [`Dyadic`] carries both magnitudes used downstream: the 2-adic one
//! ([`Dyadic::val2`], [`Dyadic::abs2`]) and the archimedean one
//! ([`Dyadic::abs_real`]). The total order is the real order.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

/// 2-adic valuation. `Infinite` only for zero and orders above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

/// An element of `Z[1/2]` stored as `num / 2^exp` in normalized form:
/// either `exp == 0` or `num` is odd. Zero is `(0, 0)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

fn trailing_zeros(n: &BigInt) -> u64 {
    n.trailing_zeros().unwrap_or(0)
}

impl Dyadic {
    /// Normalizes `num / 2^exp`.
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Self {
        let num = num.into();
        if num.is_zero() {
            return Dyadic::zero();
        }
        let cancel = trailing_zeros(&num).min(u64::from(exp));
        Dyadic {
            num: num >> cancel,
            exp: exp - cancel as u32,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic {
            num: BigInt::from(n),
            exp: 0,
        }
    }

    /// `num * 2^shift` for any integer shift.
    pub fn from_scaled(num: impl Into<BigInt>, shift: i64) -> Self {
        let num = num.into();
        if shift >= 0 {
            Dyadic::new(num << shift as u64, 0)
        } else {
            let e = u32::try_from(-shift).expect("dyadic exponent out of range");
            Dyadic::new(num, e)
        }
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Multiplies by `2^k`.
    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        Dyadic::from_scaled(self.num.clone(), k - i64::from(self.exp))
    }

    /// Exponent `v` with `self = 2^v * (odd)`.
    pub fn val2(&self) -> Valuation {
        if self.num.is_zero() {
            Valuation::Infinite
        } else {
            Valuation::Finite(trailing_zeros(&self.num) as i64 - i64::from(self.exp))
        }
    }

    /// `|x|_2 = 2^{-val2(x)}`, with `|0|_2 = 0`.
    pub fn abs2(&self) -> BigRational {
        match self.val2() {
            Valuation::Infinite => BigRational::zero(),
            Valuation::Finite(v) => pow2_rational(-v),
        }
    }

    pub fn abs_real(&self) -> Dyadic {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn cmp_real(&self, other: &Dyadic) -> Ordering {
        self.cmp(other)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.num.clone(), BigInt::one() << self.exp)
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.num.to_f64().unwrap_or(f64::NAN);
        n * 2f64.powi(-(self.exp as i32))
    }

    /// Integer `x * 2^a`, defined when `exp <= a` (that is, `x ∈ A_a`).
    pub fn scaled_numerator(&self, a: u32) -> Option<BigInt> {
        (self.exp <= a).then(|| &self.num << (a - self.exp) as u64)
    }
}

/// `2^k` as an exact rational.
pub fn pow2_rational(k: i64) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(BigInt::one() << k as u64)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-k) as u64)
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.num.sign(), other.num.sign());
        if sa != sb {
            let rank = |s: Sign| match s {
                Sign::Minus => 0,
                Sign::NoSign => 1,
                Sign::Plus => 2,
            };
            return rank(sa).cmp(&rank(sb));
        }
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self.num.cmp(&other.num),
            Ordering::Less => (&self.num << (other.exp - self.exp) as u64).cmp(&other.num),
            Ordering::Greater => self.num.cmp(&(&other.num << (self.exp - other.exp) as u64)),
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn add_impl(x: &Dyadic, y: &Dyadic, negate_y: bool) -> Dyadic {
    let e = x.exp.max(y.exp);
    let xn = &x.num << (e - x.exp) as u64;
    let yn = &y.num << (e - y.exp) as u64;
    Dyadic::new(if negate_y { xn - yn } else { xn + yn }, e)
}

impl<'a> Add<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &'a Dyadic) -> Dyadic {
        add_impl(self, rhs, false)
    }
}

impl<'a> Sub<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &'a Dyadic) -> Dyadic {
        add_impl(self, rhs, true)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        add_impl(&self, &rhs, false)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        add_impl(&self, &rhs, true)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -&self.num,
            exp: self.exp,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::from_int(n)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, BigInt::one() << self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses `"n"`, `"n/2^e"` style fractions such as `"165/16"`.
impl std::str::FromStr for Dyadic {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || crate::Error::InvalidParameter(format!("not a dyadic rational: {s:?}"));
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: BigInt = n.parse().map_err(|_| bad())?;
        let den: BigInt = d.parse().map_err(|_| bad())?;
        if !den.is_positive() {
            return Err(bad());
        }
        let tz = trailing_zeros(&den);
        if (&den >> tz) != BigInt::one() {
            // odd part must divide the numerator
            let odd = &den >> tz;
            let (q, r) = num.div_rem(&odd);
            if !r.is_zero() {
                return Err(bad());
            }
            return Ok(Dyadic::new(q, u32::try_from(tz).map_err(|_| bad())?));
        }
        Ok(Dyadic::new(num, u32::try_from(tz).map_err(|_| bad())?))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.num.to_string())?;
        t.serialize_element(&self.exp)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DyadicVisitor;

        impl<'de> Visitor<'de> for DyadicVisitor {
            type Value = Dyadic;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a [numerator-string, exponent] pair")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Dyadic, A::Error> {
                let num: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let exp: u32 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                let num: BigInt = num.parse().map_err(de::Error::custom)?;
                Ok(Dyadic::new(num, exp))
            }
        }

        deserializer.deserialize_tuple(2, DyadicVisitor)
    }
}
