//! Exact rational scalar used for every time, size, rate and weight.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

/// An exact rational number in lowest terms with a positive denominator.
///
/// `Rat` is a thin wrapper around [`BigRational`] that adds the textual
/// grammar used by the file formats (`"a/b"`, `"a"` or a finite decimal such
/// as `"0.25"`), string-based serde, and a few scheduling-specific helpers.
///
/// ```
/// use eclair_core::Rat;
///
/// let half: Rat = "0.5".parse().unwrap();
/// assert_eq!(half, Rat::new(1, 2));
/// assert_eq!((half.clone() + Rat::new(1, 3)).to_string(), "5/6");
/// ```
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    /// The rational `numer / denom`.
    ///
    /// # Panics
    ///
    /// Panics if `denom` is zero.
    pub fn new(numer: i64, denom: i64) -> Rat {
        assert!(denom != 0, "zero denominator");
        Rat(BigRational::new(numer.into(), denom.into()))
    }

    /// The integer `n` as a rational.
    pub fn int(n: i64) -> Rat {
        Rat(BigRational::from_integer(n.into()))
    }

    /// Zero.
    pub fn zero() -> Rat {
        Rat(BigRational::zero())
    }

    /// One.
    pub fn one() -> Rat {
        Rat(BigRational::one())
    }

    /// Wraps an existing big rational.
    pub fn from_big(r: BigRational) -> Rat {
        Rat(r)
    }

    /// Builds `numer / denom` from big integers.
    ///
    /// # Panics
    ///
    /// Panics if `denom` is zero.
    pub fn from_bigints(numer: BigInt, denom: BigInt) -> Rat {
        assert!(!denom.is_zero(), "zero denominator");
        Rat(BigRational::new(numer, denom))
    }

    /// `mantissa / 2^bits`, the exact value of a dyadic fixed-point number.
    pub fn dyadic(mantissa: BigInt, bits: u32) -> Rat {
        Rat(BigRational::new(mantissa, BigInt::one() << bits))
    }

    /// The underlying big rational.
    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    /// The numerator (sign carrier) in lowest terms.
    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    /// The (positive) denominator in lowest terms.
    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// `true` if the value is zero.
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `true` if the value is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// `true` if the value is strictly negative.
    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// `true` if the value is an integer.
    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Absolute value.
    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    /// Multiplicative inverse.
    ///
    /// # Panics
    ///
    /// Panics on zero.
    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rat(self.0.recip())
    }

    /// Largest integer not above the value.
    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Smallest integer not below the value.
    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// `⌈self⌉` as an `i64`, for quantities known to be small (such as `⌈1/ε⌉`).
    ///
    /// # Panics
    ///
    /// Panics if the ceiling does not fit into an `i64`.
    pub fn ceil_i64(&self) -> i64 {
        self.ceil().to_i64().expect("ceiling exceeds i64")
    }

    /// `self^exp` for a non-negative exponent.
    pub fn pow(&self, exp: u32) -> Rat {
        let mut acc = Rat::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Nearest `f64`, for human-readable summaries only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Smaller of two values (by reference).
    pub fn min_of<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
        if b < a {
            b
        } else {
            a
        }
    }

    /// Larger of two values (by reference).
    pub fn max_of<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl FromStr for Rat {
    type Err = Error;

    /// Parses `-?[0-9]+("/"[1-9][0-9]*)?` or a finite decimal `-?[0-9]+"."[0-9]+`.
    /// Decimals are converted exactly; no binary floating point is involved.
    fn from_str(text: &str) -> Result<Rat, Error> {
        let bad = || Error::InvalidRational(text.to_string());
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let value = if let Some((num, den)) = body.split_once('/') {
            let num = parse_digits(num).ok_or_else(bad)?;
            if den.starts_with('0') {
                return Err(bad());
            }
            let den = parse_digits(den).ok_or_else(bad)?;
            BigRational::new(num, den)
        } else if let Some((int, frac)) = body.split_once('.') {
            let int = parse_digits(int).ok_or_else(bad)?;
            let frac_val = parse_digits(frac).ok_or_else(bad)?;
            let scale = num_traits::pow(BigInt::from(10u32), frac.len());
            BigRational::new(int * &scale + frac_val, scale)
        } else {
            BigRational::from_integer(parse_digits(body).ok_or_else(bad)?)
        };
        Ok(Rat(if negative { -value } else { value }))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Rat {
        Rat::int(n)
    }
}

impl From<u64> for Rat {
    fn from(n: u64) -> Rat {
        Rat(BigRational::from_integer(n.into()))
    }
}

impl From<usize> for Rat {
    fn from(n: usize) -> Rat {
        Rat(BigRational::from_integer(n.into()))
    }
}

impl From<BigInt> for Rat {
    fn from(n: BigInt) -> Rat {
        Rat(BigRational::from_integer(n))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $atr:ident, $amethod:ident) => {
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $tr<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $tr<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl $atr<Rat> for Rat {
            fn $amethod(&mut self, rhs: Rat) {
                self.0.$amethod(rhs.0);
            }
        }
        impl<'a> $atr<&'a Rat> for Rat {
            fn $amethod(&mut self, rhs: &'a Rat) {
                self.0.$amethod(&rhs.0);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);
binop!(Div, div, DivAssign, div_assign);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

/// `⌈1/ε⌉`, the competitive ratio that appears throughout the analysis.
///
/// # Panics
///
/// Panics if `eps` is not positive.
pub fn ceil_inv(eps: &Rat) -> i64 {
    assert!(eps.is_positive(), "epsilon must be positive");
    eps.recip().ceil_i64()
}

/// Greatest common divisor helper exposed for oracle tests.
pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}
