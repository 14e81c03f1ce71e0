//! Fixed-precision rigorous arithmetic for hot loops.
//!
//! Two pieces: a logarithm in 64.64 fixed point (`u128`/`i128`) with an
//! explicit ulp error bound, and [`FInterval`], an `f64` interval type that
//! rounds every operation outward with `next_down`/`next_up`. Only IEEE basic
//! operations (which are correctly rounded) are trusted; `ln` never goes
//! through the platform libm.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::interval::Interval;
use crate::logs;

/// Fractional bits of the fixed-point format.
pub const FX_BITS: u32 = 64;
pub const FX_ONE: u128 = 1u128 << FX_BITS;

/// Error bound of [`ln_fx`], in ulps of `2^-64`. The analysis gives about 22.
pub const FAST_LN_ERR: i128 = 32;

struct LnTables {
    /// Enclosures of `ln(1 + j/64)` at `2^-64`.
    table: [(i128, i128); 64],
    /// Enclosure of `ln 2` at `2^-120`.
    ln2_120: (i128, i128),
}

fn tables() -> &'static LnTables {
    static T: OnceLock<LnTables> = OnceLock::new();
    T.get_or_init(|| {
        let to_fixed = |i: &Interval, bits: u32| -> (i128, i128) {
            let s = BigRational::from_integer(BigInt::from(1u8) << bits as usize);
            let lo = (i.lo() * &s).floor().to_integer().to_i128().unwrap();
            let hi = (i.hi() * &s).ceil().to_integer().to_i128().unwrap();
            (lo, hi)
        };
        let mut table = [(0i128, 0i128); 64];
        for (j, slot) in table.iter_mut().enumerate() {
            let c = BigRational::new(BigInt::from(64 + j as i64), BigInt::from(64));
            *slot = to_fixed(&logs::ln_rational(&c, 100), 64);
        }
        let ln2_120 = to_fixed(&logs::ln2(140), 120);
        LnTables { table, ln2_120 }
    })
}

/// Enclosure `[lo, hi]` (units of `2^-64`) of `ln(x_raw / 2^64)`, `x_raw > 0`.
pub fn ln_fx(x_raw: u128) -> (i128, i128) {
    assert!(x_raw > 0, "logarithm of zero");
    let t = tables();
    let top = 127 - x_raw.leading_zeros() as i32;
    let k = top - FX_BITS as i32;
    // y in [1, 2) at 2^-64, truncated when shifting right.
    let y = if k >= 0 {
        x_raw >> k
    } else {
        x_raw << (-k)
    };
    let j = ((y - FX_ONE) >> 58) as usize;
    let w = (y * 64) / (64 + j as u128);
    let u = w - FX_ONE;
    let z = (u << 64) / ((2 * FX_ONE) + u);
    let z2 = (z * z) >> 64;
    let mut term = z;
    let mut s = z;
    for d in [3u128, 5, 7, 9] {
        term = (term * z2) >> 64;
        s += term / d;
    }
    let lnw = 2 * s as i128;
    let (l2lo, l2hi) = t.ln2_120;
    let k = k as i128;
    let (k2lo, k2hi) = if k >= 0 {
        ((k * l2lo) >> 56, -((-(k * l2hi)) >> 56))
    } else {
        ((k * l2hi) >> 56, -((-(k * l2lo)) >> 56))
    };
    let (tlo, thi) = t.table[j];
    (
        k2lo + tlo + lnw - FAST_LN_ERR,
        k2hi + thi + lnw + FAST_LN_ERR,
    )
}

/// Enclosure of `ln n` for a positive integer `n < 2^63`.
pub fn ln_u64_fx(n: u64) -> (i128, i128) {
    if n == 1 {
        return (0, 0);
    }
    ln_fx((n as u128) << 64)
}

/// An `f64` interval with outward rounding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FInterval {
    pub lo: f64,
    pub hi: f64,
}

fn fx_to_f64_down(v: i128) -> f64 {
    (v as f64).next_down() * 2f64.powi(-64)
}

fn fx_to_f64_up(v: i128) -> f64 {
    (v as f64).next_up() * 2f64.powi(-64)
}

impl FInterval {
    pub fn point(x: f64) -> Self {
        FInterval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        FInterval { lo, hi }
    }

    /// Exact conversion of an integer, widened if it is not representable.
    pub fn from_u64(n: u64) -> Self {
        let f = n as f64;
        if f as u64 == n && n < (1u64 << 53) {
            Self::point(f)
        } else {
            FInterval {
                lo: f.next_down(),
                hi: f.next_up(),
            }
        }
    }

    pub fn from_fx(lo: i128, hi: i128) -> Self {
        FInterval {
            lo: fx_to_f64_down(lo),
            hi: fx_to_f64_up(hi),
        }
    }

    /// Encloses a rational, widening by one ulp on each side.
    pub fn from_rational(x: &BigRational) -> Self {
        let f = crate::interval::rat_to_f64(x);
        FInterval {
            lo: f.next_down().next_down(),
            hi: f.next_up().next_up(),
        }
    }

    pub fn from_interval(x: &Interval) -> Self {
        FInterval {
            lo: Self::from_rational(x.lo()).lo,
            hi: Self::from_rational(x.hi()).hi,
        }
    }

    pub fn ln_u64(n: u64) -> Self {
        let (lo, hi) = ln_u64_fx(n);
        Self::from_fx(lo, hi)
    }

    /// `ln` of a positive interval.
    pub fn ln(self) -> Self {
        assert!(self.lo > 0.0, "ln of a non-positive interval");
        let lo = ln_fx(f64_to_fx_floor(self.lo).max(1)).0;
        let hi = ln_fx(f64_to_fx_ceil(self.hi)).1;
        Self::from_fx(lo, hi)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Self) -> Self {
        FInterval {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }

    /// Product of non-negative intervals.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Self) -> Self {
        debug_assert!(self.lo >= 0.0 && o.lo >= 0.0);
        let hi = if self.hi == 0.0 || o.hi == 0.0 { 0.0 } else { (self.hi * o.hi).next_up() };
        FInterval {
            lo: (self.lo * o.lo).next_down().max(0.0),
            hi,
        }
    }

    /// Quotient of non-negative intervals, divisor bounded away from zero.
    #[allow(clippy::should_implement_trait)]
    pub fn div(self, o: Self) -> Self {
        debug_assert!(self.lo >= 0.0 && o.lo > 0.0);
        let hi = if self.hi == 0.0 { 0.0 } else { (self.hi / o.lo).next_up() };
        FInterval {
            lo: (self.lo / o.hi).next_down().max(0.0),
            hi,
        }
    }

    pub fn powi(self, k: u32) -> Self {
        let mut acc = FInterval::point(1.0);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `x^(a/b)` for a non-negative interval, certified with basic operations only.
    pub fn pow_ratio(self, a: u32, b: u32) -> Self {
        let y = self.powi(a);
        if b == 1 {
            return y;
        }
        let inv = 1.0 / b as f64;
        let pow_up = |v: f64| -> f64 {
            let mut acc = 1.0f64;
            for _ in 0..b {
                acc = (acc * v).next_up();
            }
            acc
        };
        let pow_down = |v: f64| -> f64 {
            let mut acc = 1.0f64;
            for _ in 0..b {
                acc = (acc * v).next_down().max(0.0);
            }
            acc
        };
        let mut lo = y.lo.powf(inv);
        while lo > 0.0 && pow_up(lo) > y.lo {
            lo = lo.next_down().max(0.0);
        }
        let mut hi = y.hi.powf(inv);
        while pow_down(hi) < y.hi {
            hi = hi.next_up();
        }
        FInterval { lo, hi }
    }

    pub fn min_scalar(self, c: f64) -> Self {
        FInterval {
            lo: self.lo.min(c),
            hi: self.hi.min(c),
        }
    }

    pub fn scale_u64(self, k: u64) -> Self {
        self.mul(Self::from_u64(k))
    }

    /// Floor/ceil conversion to 64.64 fixed point (values must be `< 2^63`).
    pub fn to_fx(self) -> (u128, u128) {
        (f64_to_fx_floor(self.lo), f64_to_fx_ceil(self.hi))
    }

    pub fn to_interval(self) -> Interval {
        Interval::new(f64_to_rational(self.lo), f64_to_rational(self.hi))
    }
}

fn f64_to_fx_floor(x: f64) -> u128 {
    debug_assert!(x >= 0.0);
    // Scaling by a power of two is exact, so floor is exact as well.
    (x * 2f64.powi(64)).floor() as u128
}

fn f64_to_fx_ceil(x: f64) -> u128 {
    debug_assert!(x >= 0.0);
    (x * 2f64.powi(64)).ceil() as u128
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_rational(x: f64) -> BigRational {
    assert!(x.is_finite());
    if x == 0.0 {
        return BigRational::from_integer(BigInt::from(0));
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let m = BigInt::from(mant) * sign;
    if e >= 0 {
        BigRational::from_integer(m << e as usize)
    } else {
        BigRational::new(m, BigInt::from(1u8) << (-e) as usize)
    }
}

/// Exact rational value of a 64.64 fixed-point number.
pub fn fx_to_rational(v: u128) -> BigRational {
    BigRational::new(BigInt::from(v), BigInt::from(1u8) << 64usize)
}

/// Interval spanned by a pair of fixed-point sums.
pub fn fx_interval(lo: u128, hi: u128) -> Interval {
    Interval::new(fx_to_rational(lo), fx_to_rational(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    fn fx_rat(v: i128) -> BigRational {
        BigRational::new(BigInt::from(v), BigInt::from(1u8) << 64usize)
    }

    #[test]
    fn fast_ln_contains_precise_ln() {
        let mut x: u128 = 0x9e37_79b9_7f4a_7c15;
        for _ in 0..2000 {
            x = x.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(0x1405_7b7e_f767_814f);
            let raw = (x >> (x % 90)) | 1;
            let (lo, hi) = ln_fx(raw);
            let precise = logs::ln_rational(&BigRational::new(BigInt::from(raw), BigInt::from(1u8) << 64usize), 120);
            assert!(fx_rat(lo) <= *precise.lo() && *precise.hi() <= fx_rat(hi), "raw {raw}");
            assert!(hi - lo <= 2 * FAST_LN_ERR + 4);
        }
    }

    #[test]
    fn fast_ln_small_integers() {
        for n in 1..=5000u64 {
            let (lo, hi) = ln_u64_fx(n);
            let precise = logs::ln_u64(n, 120);
            assert!(fx_rat(lo) <= *precise.lo() && *precise.hi() <= fx_rat(hi), "n {n}");
        }
    }

    #[test]
    fn f64_interval_ops_enclose() {
        let third = FInterval::point(1.0).div(FInterval::point(3.0));
        let r = third.to_interval();
        assert!(r.contains(&rat(1, 3)));
        let root = FInterval::point(2.0).pow_ratio(1, 2);
        let sq = root.to_interval();
        assert!(crate::logs::pow_int(&sq, 2).contains(&rat(2, 1)));
        let p = FInterval::point(27.0).pow_ratio(2, 3);
        assert!(p.to_interval().contains(&rat(9, 1)));
    }

    #[test]
    fn rational_roundtrip() {
        for x in [0.1f64, 1.5, 1e-300, 123456.789] {
            let r = f64_to_rational(x);
            assert_eq!(crate::interval::rat_to_f64(&r), x);
        }
    }
}
