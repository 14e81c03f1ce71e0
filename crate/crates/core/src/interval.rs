//! Closed rational intervals used as certified enclosures of real numbers.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: BigRational,
    hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    /// Builds an interval from endpoints in either order.
    pub fn hull(a: BigRational, b: BigRational) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn exact(x: BigRational) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self::exact(BigRational::zero())
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn into_bounds(self) -> (BigRational, BigRational) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Certified comparison against a number. `None` when the interval
    /// straddles `x`.
    pub fn cmp_value(&self, x: &BigRational) -> Option<Ordering> {
        if &self.hi < x {
            Some(Ordering::Less)
        } else if &self.lo > x {
            Some(Ordering::Greater)
        } else if self.is_exact() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Certified comparison of two enclosures.
    pub fn cmp_interval(&self, other: &Interval) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_exact() && other.is_exact() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        if !self.lo.is_negative() && !other.lo.is_negative() {
            return Interval {
                lo: &self.lo * &other.lo,
                hi: &self.hi * &other.hi,
            };
        }
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    pub fn scale(&self, k: &BigRational) -> Interval {
        Interval::hull(&self.lo * k, &self.hi * k)
    }

    pub fn scale_int(&self, k: &BigInt) -> Interval {
        let k = BigRational::from_integer(k.clone());
        self.scale(&k)
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, other: &Interval) -> Option<Interval> {
        if other.lo.is_positive() || other.hi.is_negative() {
            let inv = Interval::hull(other.hi.recip(), other.lo.recip());
            Some(self.mul(&inv))
        } else {
            None
        }
    }

    pub fn abs(&self) -> Interval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let m = std::cmp::max(-&self.lo, self.hi.clone());
            Interval {
                lo: BigRational::zero(),
                hi: m,
            }
        }
    }

    /// Endpoint-wise minimum: encloses `min(x, y)` for `x` in `self`, `y` in `other`.
    pub fn min_with(&self, other: &Interval) -> Interval {
        Interval {
            lo: std::cmp::min(&self.lo, &other.lo).clone(),
            hi: std::cmp::min(&self.hi, &other.hi).clone(),
        }
    }

    pub fn max_with(&self, other: &Interval) -> Interval {
        Interval {
            lo: std::cmp::max(&self.lo, &other.lo).clone(),
            hi: std::cmp::max(&self.hi, &other.hi).clone(),
        }
    }

    /// Outward rounding of both endpoints to multiples of `2^-bits`.
    pub fn round_out(&self, bits: u32) -> Interval {
        if self.is_exact() && self.lo.denom().is_one() {
            return self.clone();
        }
        let scale = BigInt::one() << bits;
        let lo = (&self.lo * &scale).floor().to_integer();
        let hi = (&self.hi * &scale).ceil().to_integer();
        Interval {
            lo: BigRational::new(lo, scale.clone()),
            hi: BigRational::new(hi, scale),
        }
    }

    pub fn mid_f64(&self) -> f64 {
        let two = BigRational::from_integer(BigInt::from(2));
        rat_to_f64(&((&self.lo + &self.hi) / two))
    }

    pub fn lo_f64(&self) -> f64 {
        rat_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        rat_to_f64(&self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format_rational(&self.lo, 12, Rounding::Nearest))
        } else {
            write!(
                f,
                "[{}, {}]",
                format_rational(&self.lo, 12, Rounding::Down),
                format_rational(&self.hi, 12, Rounding::Up)
            )
        }
    }
}

/// Distance to the nearest integer of every point of `x`, as an interval.
///
/// Exact: the tent map `t -> |t - round(t)|` is evaluated on the endpoints
/// and on the integers and half-integers inside `x`.
pub fn torus_norm(x: &Interval) -> Interval {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if x.width() >= BigRational::one() {
        return Interval::new(BigRational::zero(), half);
    }
    let dist = |t: &BigRational| -> BigRational {
        let f = t - t.floor();
        let g = BigRational::one() - &f;
        if f <= g {
            f
        } else {
            g
        }
    };
    let a = dist(&x.lo);
    let b = dist(&x.hi);
    let k = x.lo.floor();
    // Integers and half-integers strictly after lo.
    let next_int = &k + BigRational::one();
    let next_half = &k + &half;
    let contains_int = x.lo == k || next_int <= x.hi;
    let contains_half =
        (x.lo <= next_half && next_half <= x.hi) || (&next_half + BigRational::one() <= x.hi);
    let lo = if contains_int {
        BigRational::zero()
    } else {
        std::cmp::min(&a, &b).clone()
    };
    let hi = if contains_half {
        half
    } else {
        std::cmp::max(a, b)
    };
    Interval::new(lo, hi)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_from_uint(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, n.clone()))
}

/// Nearest-ish `f64` for a rational, robust to huge numerators and denominators.
pub fn rat_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    if nb <= 53 && db <= 53 {
        return x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap();
    }
    // 70 significant bits with a sticky bit, so the final conversion rounds once.
    let shift = nb - db - 70;
    let (q, r) = if shift >= 0 {
        x.numer().div_rem(&(x.denom() << shift as usize))
    } else {
        (x.numer() << (-shift) as usize).div_rem(x.denom())
    };
    let q = if r.is_zero() { q } else { (q << 1usize) | BigInt::one() };
    let shift = if r.is_zero() { shift } else { shift - 1 };
    let f = q.to_f64().unwrap_or(f64::NAN);
    let half = (shift / 2) as i32;
    f * 2f64.powi(half) * 2f64.powi(shift as i32 - half)
}

/// Parses `p/q`, integers, and plain decimals like `0.054` or `-1.5e-3`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
    Nearest,
}

/// Decimal rendering of a rational.
///
/// Values that terminate within `digits` significant digits print exactly as
/// plain decimals; everything else prints in scientific notation with
/// `digits` significant digits, rounded in the requested direction so that a
/// printed `[lo, hi]` pair still encloses the exact interval.
pub fn format_rational(x: &BigRational, digits: usize, rounding: Rounding) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if x.denom().is_one() && x.numer().abs().to_string().len() <= digits.max(20) {
        return x.numer().to_string();
    }
    if let Some(s) = exact_decimal(x, digits) {
        return s;
    }
    let neg = x.is_negative();
    let ax = x.abs();
    // Find exponent e with 10^e <= ax < 10^(e+1).
    let mut e = (ax.numer().bits() as i64 - ax.denom().bits() as i64) * 30103 / 100000;
    let ten = BigRational::from_integer(BigInt::from(10));
    let pow10 = |k: i64| -> BigRational {
        if k >= 0 {
            num_traits::pow(ten.clone(), k as usize)
        } else {
            num_traits::pow(ten.clone(), (-k) as usize).recip()
        }
    };
    while pow10(e) > ax {
        e -= 1;
    }
    while pow10(e + 1) <= ax {
        e += 1;
    }
    let scaled = &ax * pow10(digits as i64 - 1 - e);
    // Rounding direction on the magnitude depends on the sign.
    let mag_rounding = match (rounding, neg) {
        (Rounding::Nearest, _) => Rounding::Nearest,
        (Rounding::Down, false) | (Rounding::Up, true) => Rounding::Down,
        _ => Rounding::Up,
    };
    let mut m = match mag_rounding {
        Rounding::Down => scaled.floor().to_integer(),
        Rounding::Up => scaled.ceil().to_integer(),
        Rounding::Nearest => scaled.round().to_integer(),
    };
    if m.to_string().len() > digits {
        // Rounding carried into a new digit, e.g. 9.99 -> 10.0.
        let (q, r) = m.div_rem(&BigInt::from(10));
        m = if r.is_zero() || mag_rounding != Rounding::Up {
            q
        } else {
            q + 1
        };
        e += 1;
    }
    let s = m.to_string();
    let (head, tail) = s.split_at(1);
    let tail = tail.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e}")
    } else {
        format!("{sign}{head}.{tail}e{e}")
    }
}

fn exact_decimal(x: &BigRational, digits: usize) -> Option<String> {
    let mut d = x.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut k2 = 0usize;
    let mut k5 = 0usize;
    while d.is_even() {
        d /= &two;
        k2 += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        k5 += 1;
    }
    if !d.is_one() {
        return None;
    }
    let k = k2.max(k5);
    let scaled = x * BigRational::from_integer(num_traits::pow(BigInt::from(10), k));
    let n = scaled.to_integer();
    let neg = n.is_negative();
    let s = n.abs().to_string();
    let significant = s.trim_start_matches('0').len();
    if significant > digits {
        return None;
    }
    let s = if s.len() <= k {
        format!("{}{}", "0".repeat(k + 1 - s.len()), s)
    } else {
        s
    };
    let (ip, fp) = s.split_at(s.len() - k);
    let sign = if neg { "-" } else { "" };
    Some(if fp.is_empty() {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{fp}")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_norm_of_points() {
        let n = torus_norm(&Interval::exact(rat(2, 3)));
        assert_eq!(n, Interval::exact(rat(1, 3)));
        let n = torus_norm(&Interval::exact(rat(7, 1)));
        assert_eq!(n, Interval::zero());
        let n = torus_norm(&Interval::exact(rat(-1, 4)));
        assert_eq!(n, Interval::exact(rat(1, 4)));
    }

    #[test]
    fn torus_norm_across_integer_and_half() {
        let n = torus_norm(&Interval::new(rat(9, 10), rat(11, 10)));
        assert_eq!(n, Interval::new(rat(0, 1), rat(1, 10)));
        let n = torus_norm(&Interval::new(rat(4, 10), rat(6, 10)));
        assert_eq!(n, Interval::new(rat(4, 10), rat(1, 2)));
        let n = torus_norm(&Interval::new(rat(11, 10), rat(12, 10)));
        assert_eq!(n, Interval::new(rat(1, 10), rat(2, 10)));
    }

    #[test]
    fn parse_decimals() {
        assert_eq!(parse_rational("0.054"), Some(rat(54, 1000)));
        assert_eq!(parse_rational("3/12"), Some(rat(1, 4)));
        assert_eq!(parse_rational("-1.5e-3"), Some(rat(-15, 10000)));
        assert_eq!(parse_rational("2"), Some(rat(2, 1)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn formatting_encloses() {
        let third = rat(1, 3);
        assert_eq!(format_rational(&third, 5, Rounding::Down), "3.3333e-1");
        assert_eq!(format_rational(&third, 5, Rounding::Up), "3.3334e-1");
        assert_eq!(format_rational(&rat(1, 8), 5, Rounding::Down), "0.125");
        assert_eq!(format_rational(&rat(-1, 3), 3, Rounding::Down), "-3.34e-1");
        assert_eq!(format_rational(&rat(999_999, 1_000_000), 3, Rounding::Up), "1e0");
        assert_eq!(format_rational(&rat(12, 1), 3, Rounding::Up), "12");
    }

    #[test]
    fn round_out_encloses() {
        let i = Interval::new(rat(1, 3), rat(2, 3));
        let r = i.round_out(10);
        assert!(r.contains_interval(&i));
        assert!(r.width() <= &i.width() + rat(2, 1024));
    }
}
