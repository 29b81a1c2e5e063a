//! Exact coefficient fields.
//!
//! Two instances are shipped: [`Rat`](crate::Rat) (arbitrary-precision
//! rationals, used after specializing `q`) and [`RatFun`] (rational functions
//! in `q` over the rationals, the default symbolic field). Everything above
//! this module is generic over [`Field`].
//!
//! Scalars cross process boundaries in the wire form
//! `{num: [[coeff_num, coeff_den, power], ...], den: [...]}` with the big
//! integers rendered as decimal strings, so round-trips are bit-exact.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An exact field of coefficients.
///
/// Conjugation is the restriction of complex conjugation to the computable
/// subfield; both shipped fields are fixed by it.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_int(n: i64) -> Self;

    /// Multiplicative inverse; `None` for zero.
    fn inverse(&self) -> Option<Self>;

    /// Complex conjugation.
    fn conjugate(&self) -> Self {
        self.clone()
    }

    /// A common multiplier turning every entry of `row` into a
    /// denominator-free value, if the field has a useful notion of one.
    /// Used by the elimination code to keep pivots polynomial.
    fn clearing_factor(row: &[Self]) -> Option<Self> {
        let _ = row;
        None
    }

    fn to_wire(&self) -> ScalarWire;

    fn from_wire(wire: &ScalarWire) -> Result<Self, Error>;
}

fn parse_bigint(s: &str) -> Result<BigInt, Error> {
    BigInt::from_str(s).map_err(|e| Error::InvalidInput(format!("bad integer `{s}`: {e}")))
}

fn wire_terms(poly: &[BigRational]) -> Vec<(String, String, u32)> {
    poly.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (c.numer().to_string(), c.denom().to_string(), k as u32))
        .collect()
}

fn poly_from_wire(terms: &[(String, String, u32)]) -> Result<Vec<BigRational>, Error> {
    let mut coeffs: Vec<BigRational> = Vec::new();
    for (n, d, p) in terms {
        let den = parse_bigint(d)?;
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator in scalar wire".into()));
        }
        let c = BigRational::new(parse_bigint(n)?, den);
        let k = *p as usize;
        if coeffs.len() <= k {
            coeffs.resize(k + 1, BigRational::zero());
        }
        coeffs[k] += c;
    }
    Ok(coeffs)
}

/// Wire form of a scalar; see the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarWire {
    pub num: Vec<(String, String, u32)>,
    pub den: Vec<(String, String, u32)>,
}

impl Field for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }

    fn clearing_factor(row: &[Self]) -> Option<Self> {
        let mut lcm = BigInt::one();
        for c in row {
            lcm = num_integer::lcm(lcm, c.denom().clone());
        }
        Some(BigRational::from_integer(lcm))
    }

    fn to_wire(&self) -> ScalarWire {
        ScalarWire {
            num: wire_terms(std::slice::from_ref(self)),
            den: vec![("1".into(), "1".into(), 0)],
        }
    }

    fn from_wire(wire: &ScalarWire) -> Result<Self, Error> {
        let num = QPoly::new(poly_from_wire(&wire.num)?);
        let den = QPoly::new(poly_from_wire(&wire.den)?);
        if num.degree() > 0 || den.degree() > 0 {
            return Err(Error::InvalidInput(
                "symbolic scalar where a plain rational was expected".into(),
            ));
        }
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator polynomial".into()));
        }
        Ok(num.coeff(0) / den.coeff(0))
    }
}

/// Dense polynomial in `q` over the rationals. Trailing zeros are trimmed;
/// the zero polynomial has an empty coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

impl QPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn zero() -> Self {
        QPoly { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        QPoly::new(vec![c])
    }

    pub fn one() -> Self {
        QPoly::constant(BigRational::one())
    }

    /// The monomial `c * q^k`.
    pub fn monomial(c: BigRational, k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        QPoly::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) + other.coeff(k));
        }
        QPoly::new(out)
    }

    pub fn neg(&self) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        QPoly::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, other: &QPoly) -> (QPoly, QPoly) {
        assert!(!other.is_zero(), "division by the zero polynomial");
        let mut rem = self.clone();
        let mut quot = vec![BigRational::zero(); self.coeffs.len().max(1)];
        let dlead = other.leading();
        let ddeg = other.degree();
        while !rem.is_zero() && rem.coeffs.len() >= other.coeffs.len() {
            let k = rem.degree() - ddeg;
            let c = rem.leading() / dlead.clone();
            quot[k] = c.clone();
            let sub = other.mul(&QPoly::monomial(c, k));
            rem = rem.sub(&sub);
        }
        (QPoly::new(quot), rem)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            let inv = a.leading().recip();
            a.scale(&inv)
        }
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Least common multiple of coefficient denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        let mut lcm = BigInt::one();
        for c in &self.coeffs {
            lcm = num_integer::lcm(lcm, c.denom().clone());
        }
        lcm
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let (sign, mag) = if c.is_negative() {
                ("-", -c.clone())
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            let coeff_is_one = mag.is_one();
            match (k, coeff_is_one) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "q")?,
                (1, false) => write!(f, "{mag}*q")?,
                (_, true) => write!(f, "q^{k}")?,
                (_, false) => write!(f, "{mag}*q^{k}")?,
            }
        }
        Ok(())
    }
}

/// Rational function in `q`: a reduced fraction of [`QPoly`] with monic
/// denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatFun {
    num: QPoly,
    den: QPoly,
}

impl RatFun {
    pub fn new(num: QPoly, den: QPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RatFun {
                num: QPoly::zero(),
                den: QPoly::one(),
            };
        }
        let g = num.gcd(&den);
        let (mut num, _) = num.divrem(&g);
        let (mut den, _) = den.divrem(&g);
        let lead = den.leading().recip();
        num = num.scale(&lead);
        den = den.scale(&lead);
        RatFun { num, den }
    }

    /// The variable `q`.
    pub fn q() -> Self {
        RatFun {
            num: QPoly::monomial(BigRational::one(), 1),
            den: QPoly::one(),
        }
    }

    /// The monomial `q^k`, with negative exponents allowed.
    pub fn q_pow(k: i64) -> Self {
        if k >= 0 {
            RatFun {
                num: QPoly::monomial(BigRational::one(), k as usize),
                den: QPoly::one(),
            }
        } else {
            RatFun {
                num: QPoly::one(),
                den: QPoly::monomial(BigRational::one(), (-k) as usize),
            }
        }
    }

    pub fn from_rat(c: BigRational) -> Self {
        RatFun {
            num: QPoly::constant(c),
            den: QPoly::one(),
        }
    }

    pub fn numerator(&self) -> &QPoly {
        &self.num
    }

    pub fn denominator(&self) -> &QPoly {
        &self.den
    }

    /// Is this a constant (degree-zero) rational function?
    pub fn as_rat(&self) -> Option<BigRational> {
        (self.num.degree() == 0 && self.den.degree() == 0 && !self.den.is_zero())
            .then(|| self.num.coeff(0) / self.den.coeff(0))
    }

    /// Evaluate at a rational `q`-value; errors when the denominator
    /// vanishes there.
    pub fn eval(&self, q: &BigRational) -> Result<BigRational, Error> {
        let d = self.den.eval(q);
        if d.is_zero() {
            return Err(Error::PoleAtValue(q.to_string()));
        }
        Ok(self.num.eval(q) / d)
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one_poly() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl QPoly {
    fn is_one_poly(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }
}

impl Zero for RatFun {
    fn zero() -> Self {
        RatFun {
            num: QPoly::zero(),
            den: QPoly::one(),
        }
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RatFun {
    fn one() -> Self {
        RatFun {
            num: QPoly::one(),
            den: QPoly::one(),
        }
    }
}

impl Add for RatFun {
    type Output = RatFun;
    fn add(self, rhs: RatFun) -> RatFun {
        RatFun::new(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }
}

impl Sub for RatFun {
    type Output = RatFun;
    fn sub(self, rhs: RatFun) -> RatFun {
        self + (-rhs)
    }
}

impl Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun {
            num: self.num.neg(),
            den: self.den,
        }
    }
}

impl Mul for RatFun {
    type Output = RatFun;
    fn mul(self, rhs: RatFun) -> RatFun {
        RatFun::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }
}

impl Div for RatFun {
    type Output = RatFun;
    fn div(self, rhs: RatFun) -> RatFun {
        assert!(!rhs.is_zero(), "division by zero rational function");
        RatFun::new(self.num.mul(&rhs.den), self.den.mul(&rhs.num))
    }
}

impl Field for RatFun {
    fn from_int(n: i64) -> Self {
        RatFun::from_rat(BigRational::from_integer(BigInt::from(n)))
    }

    fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(RatFun::new(self.den.clone(), self.num.clone()))
        }
    }

    fn clearing_factor(row: &[Self]) -> Option<Self> {
        // lcm of denominator polynomials, times the lcm of the coefficient
        // denominators, so that the scaled row has integer-polynomial entries.
        let mut den = QPoly::one();
        for c in row {
            let g = den.gcd(c.denominator());
            let (q, _) = c.denominator().divrem(&g);
            den = den.mul(&q);
        }
        let mut int_lcm = BigInt::one();
        for c in row {
            let cleared = c.numerator().mul(&den);
            let (scaled, _) = cleared.divrem(c.denominator());
            int_lcm = num_integer::lcm(int_lcm, scaled.denominator_lcm());
        }
        Some(RatFun {
            num: den.scale(&BigRational::from_integer(int_lcm)),
            den: QPoly::one(),
        })
    }

    fn to_wire(&self) -> ScalarWire {
        ScalarWire {
            num: wire_terms(self.num.coeffs()),
            den: wire_terms(self.den.coeffs()),
        }
    }

    fn from_wire(wire: &ScalarWire) -> Result<Self, Error> {
        let num = QPoly::new(poly_from_wire(&wire.num)?);
        let den = QPoly::new(poly_from_wire(&wire.den)?);
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator polynomial".into()));
        }
        Ok(RatFun::new(num, den))
    }
}

impl Serialize for RatFun {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_wire().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RatFun {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = ScalarWire::deserialize(deserializer)?;
        RatFun::from_wire(&wire).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(num: &[i64], den: &[i64]) -> RatFun {
        let to_poly = |v: &[i64]| {
            QPoly::new(
                v.iter()
                    .map(|&c| BigRational::from_integer(BigInt::from(c)))
                    .collect(),
            )
        };
        RatFun::new(to_poly(num), to_poly(den))
    }

    #[test]
    fn reduction_is_canonical() {
        // (q^2 - 1)/(q - 1) = q + 1
        let a = rf(&[-1, 0, 1], &[-1, 1]);
        let b = rf(&[1, 1], &[1]);
        assert_eq!(a, b);
    }

    #[test]
    fn denominator_made_monic() {
        // 1/(2q) has monic denominator q with numerator 1/2.
        let a = rf(&[1], &[0, 2]);
        assert_eq!(a.denominator().leading(), BigRational::one());
        assert_eq!(
            a.numerator().coeff(0),
            BigRational::new(BigInt::from(1), BigInt::from(2))
        );
    }

    #[test]
    fn field_ops() {
        let q = RatFun::q();
        let one = RatFun::one();
        let x = (q.clone() * q.clone() - one.clone()) / (q.clone() - one.clone());
        assert_eq!(x, q.clone() + one.clone());
        let inv = x.inverse().unwrap();
        assert!((inv * (q + one) - RatFun::one()).is_zero());
    }

    #[test]
    fn eval_and_poles() {
        let one = RatFun::one();
        let q = RatFun::q();
        let f = one.clone() / (q.clone() - one.clone());
        let err = f.eval(&BigRational::one());
        assert!(matches!(err, Err(Error::PoleAtValue(_))));
        // (q^2-1)/(q-1) reduces, so evaluating at 1 gives 2.
        let g = (q.clone() * q.clone() - one.clone()) / (q - one);
        assert_eq!(g.eval(&BigRational::one()).unwrap(), BigRational::from_integer(BigInt::from(2)));
    }

    #[test]
    fn wire_round_trip() {
        let x = rf(&[1, -3, 2], &[2, 0, 5]);
        let w = x.to_wire();
        let y = RatFun::from_wire(&w).unwrap();
        assert_eq!(x, y);
        let json = serde_json::to_string(&x).unwrap();
        let z: RatFun = serde_json::from_str(&json).unwrap();
        assert_eq!(x, z);
    }

    #[test]
    fn rational_wire() {
        let r = BigRational::new(BigInt::from(-7), BigInt::from(3));
        let w = r.to_wire();
        assert_eq!(<BigRational as Field>::from_wire(&w).unwrap(), r);
    }
}
