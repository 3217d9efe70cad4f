use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::AlgebraError;

/// Exact element `a + b√2` of the field Q(√2), with arbitrary-precision
/// rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QSqrt2 {
    rat: BigRational,
    surd: BigRational,
}

impl QSqrt2 {
    pub fn new(rat: BigRational, surd: BigRational) -> Self {
        QSqrt2 { rat, surd }
    }

    pub fn from_rational(rat: BigRational) -> Self {
        QSqrt2 { rat, surd: BigRational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    /// `p/q + (r/s)√2` from small integers. Panics on a zero denominator.
    pub fn from_fracs(p: i64, q: i64, r: i64, s: i64) -> Self {
        QSqrt2 {
            rat: BigRational::new(p.into(), q.into()),
            surd: BigRational::new(r.into(), s.into()),
        }
    }

    pub fn sqrt2() -> Self {
        QSqrt2 { rat: BigRational::zero(), surd: BigRational::one() }
    }

    /// `√(2^k)`: `2^(k/2)` for even `k`, `2^((k-1)/2)·√2` for odd `k`.
    pub fn sqrt_pow2(k: u32) -> Self {
        let half = BigRational::from_integer(BigInt::one() << (k / 2) as usize);
        if k.is_multiple_of(2) {
            Self::from_rational(half)
        } else {
            QSqrt2 { rat: BigRational::zero(), surd: half }
        }
    }

    pub fn rat_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    /// `a − b√2`.
    pub fn conjugate(&self) -> Self {
        QSqrt2 { rat: self.rat.clone(), surd: -&self.surd }
    }

    /// Field norm `a² − 2b²`, zero only for zero.
    pub fn norm(&self) -> BigRational {
        &self.rat * &self.rat - BigRational::from_integer(2.into()) * &self.surd * &self.surd
    }

    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let n = self.norm();
        Ok(QSqrt2 { rat: &self.rat / &n, surd: -&self.surd / &n })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, AlgebraError> {
        Ok(self * &other.inverse()?)
    }

    /// Exact sign, decided by rational comparisons only.
    pub fn signum(&self) -> Ordering {
        let a = sign_of(&self.rat);
        let b = sign_of(&self.surd);
        match (a, b) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (sa, sb) if sa == sb => sa,
            (sa, sb) => {
                let a2 = &self.rat * &self.rat;
                let two_b2 = BigRational::from_integer(2.into()) * &self.surd * &self.surd;
                // a² = 2b² has no nonzero rational solution
                if a2 > two_b2 {
                    sa
                } else {
                    sb
                }
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn is_nonnegative(&self) -> bool {
        self.signum() != Ordering::Less
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = QSqrt2::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Nearest `f64` to the exact value.
    pub fn to_f64(&self) -> f64 {
        if self.surd.is_zero() {
            return self.rat.to_f64().unwrap_or(f64::NAN);
        }
        // value = (u + v√2) / den with integers u, v, den > 0
        let den = self.rat.denom() * self.surd.denom();
        let u = self.rat.numer() * self.surd.denom();
        let v = self.surd.numer() * self.rat.denom();
        let mut bits = 96usize;
        loop {
            let scale = BigInt::one() << bits;
            let scaled = &v * &scale;
            let root = (BigInt::from(2) * &scaled * &scaled).sqrt();
            let floor_surd = if scaled.sign() == Sign::Minus { -root - 1 } else { root };
            let lo_num = &u * &scale + floor_surd;
            let denom = &den * &scale;
            let lo = BigRational::new(lo_num.clone(), denom.clone());
            let hi = BigRational::new(lo_num + 1, denom);
            let (flo, fhi) = (lo.to_f64().unwrap_or(f64::NAN), hi.to_f64().unwrap_or(f64::NAN));
            if flo == fhi || bits > 4096 {
                return flo;
            }
            bits *= 2;
        }
    }
}

fn sign_of(r: &BigRational) -> Ordering {
    if r.is_positive() {
        Ordering::Greater
    } else if r.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Zero for QSqrt2 {
    fn zero() -> Self {
        QSqrt2 { rat: BigRational::zero(), surd: BigRational::zero() }
    }

    fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.surd.is_zero()
    }
}

impl One for QSqrt2 {
    fn one() -> Self {
        Self::from_int(1)
    }
}

impl From<i64> for QSqrt2 {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl From<BigRational> for QSqrt2 {
    fn from(r: BigRational) -> Self {
        Self::from_rational(r)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&QSqrt2> for &QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: &QSqrt2) -> QSqrt2 {
                let f: fn(&QSqrt2, &QSqrt2) -> QSqrt2 = $body;
                f(self, rhs)
            }
        }
        impl $tr<QSqrt2> for QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: QSqrt2) -> QSqrt2 {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&QSqrt2> for QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: &QSqrt2) -> QSqrt2 {
                (&self).$method(rhs)
            }
        }
        impl $tr<QSqrt2> for &QSqrt2 {
            type Output = QSqrt2;
            fn $method(self, rhs: QSqrt2) -> QSqrt2 {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| QSqrt2 { rat: &a.rat + &b.rat, surd: &a.surd + &b.surd });
forward_binop!(Sub, sub, |a, b| QSqrt2 { rat: &a.rat - &b.rat, surd: &a.surd - &b.surd });
forward_binop!(Mul, mul, |a, b| {
    let two = BigRational::from_integer(2.into());
    QSqrt2 {
        rat: &a.rat * &b.rat + two * &a.surd * &b.surd,
        surd: &a.rat * &b.surd + &a.surd * &b.rat,
    }
});

impl Div<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;

    /// Panics on division by zero; see [`QSqrt2::checked_div`].
    fn div(self, rhs: &QSqrt2) -> QSqrt2 {
        self.checked_div(rhs).expect("division by zero in Q(sqrt2)")
    }
}

impl Div for QSqrt2 {
    type Output = QSqrt2;
    fn div(self, rhs: QSqrt2) -> QSqrt2 {
        &self / &rhs
    }
}

impl Neg for &QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 { rat: -&self.rat, surd: -&self.surd }
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        -&self
    }
}

impl AddAssign<&QSqrt2> for QSqrt2 {
    fn add_assign(&mut self, rhs: &QSqrt2) {
        self.rat += &rhs.rat;
        self.surd += &rhs.surd;
    }
}

impl SubAssign<&QSqrt2> for QSqrt2 {
    fn sub_assign(&mut self, rhs: &QSqrt2) {
        self.rat -= &rhs.rat;
        self.surd -= &rhs.surd;
    }
}

impl MulAssign<&QSqrt2> for QSqrt2 {
    fn mul_assign(&mut self, rhs: &QSqrt2) {
        *self = &*self * rhs;
    }
}

impl Sum for QSqrt2 {
    fn sum<I: Iterator<Item = QSqrt2>>(iter: I) -> Self {
        iter.fold(QSqrt2::zero(), |mut acc, x| {
            acc += &x;
            acc
        })
    }
}

impl Product for QSqrt2 {
    fn product<I: Iterator<Item = QSqrt2>>(iter: I) -> Self {
        iter.fold(QSqrt2::one(), |acc, x| acc * x)
    }
}

/// Renders as `a` when rational, otherwise `a+b*sqrt2` / `a-b*sqrt2`,
/// with `a`, `b` printed as `p` or `p/q`.
impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.surd.is_zero() {
            return write!(f, "{}", self.rat);
        }
        let sign = if self.surd.is_negative() { '-' } else { '+' };
        write!(f, "{}{}{}*sqrt2", self.rat, sign, self.surd.abs())
    }
}

impl fmt::Debug for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QSqrt2({self})")
    }
}

fn parse_rational(s: &str) -> Result<BigRational, AlgebraError> {
    let s = s.trim();
    let bad = || AlgebraError::Parse(format!("invalid rational `{s}`"));
    if s.is_empty() || s.contains(['.', 'e', 'E']) {
        return Err(bad());
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(AlgebraError::DivisionByZero);
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Accepts `a`, `a+b*sqrt2`, `a-b*sqrt2`, `b*sqrt2`, `sqrt2` and `-sqrt2`
/// with `a`, `b` exact rationals (`p` or `p/q`). Decimal notation is rejected.
impl FromStr for QSqrt2 {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(AlgebraError::Parse("empty scalar".into()));
        }
        let Some(body) = compact.strip_suffix("sqrt2") else {
            return Ok(Self::from_rational(parse_rational(&compact)?));
        };
        let body = body.strip_suffix('*').unwrap_or(body);
        // split "a±b" at the last sign that is not the leading one
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let (rat_str, surd_str) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let surd = match surd_str {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            other => parse_rational(other.strip_prefix('+').unwrap_or(other))?,
        };
        Ok(QSqrt2 { rat: parse_rational(rat_str)?, surd })
    }
}
