//! Arbitrary-precision natural logarithms and rational powers with
//! certified error bounds.
//!
//! Values are computed in binary fixed point (`BigInt` scaled by `2^w`) with
//! every truncation accounted for; results come back as [`Interval`]s whose
//! width is at most about `2^-bits`.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::interval::Interval;

/// Sum `2 * atanh(z)` for `z = zn / 2^w` (|z| <= 1/3) in fixed point.
/// Returns the floored value and a bound on its error in ulps of `2^-w`.
fn two_atanh_fixed(zn: &BigInt, w: u32, z_err_ulps: u64) -> (BigInt, u64) {
    if zn.is_negative() {
        let (v, err) = two_atanh_fixed(&-zn, w, z_err_ulps);
        return (-v, err);
    }
    let z2 = (zn * zn) >> w;
    let mut term = zn.clone();
    let mut sum = zn.clone();
    let mut k: u64 = 0;
    loop {
        k += 1;
        term = (&term * &z2) >> w;
        if term.is_zero() {
            break;
        }
        sum += &term / BigInt::from(2 * k + 1);
    }
    // Each step floors twice (product and division), costing at most 2.5
    // ulps per term of the doubled sum; the discarded tail is below one ulp
    // once `term` vanishes because |z| <= 1/3. The input error enters through
    // the derivative 2/(1-z^2) <= 9/4.
    let err = 6 * (k + 1) + 3 * z_err_ulps + 2;
    (sum * 2, err)
}

struct Ln2Cache {
    w: u32,
    value: BigInt,
    err: u64,
}

static LN2: Mutex<Option<Ln2Cache>> = Mutex::new(None);

/// `ln 2` in fixed point at `w` fractional bits with an error bound in ulps.
fn ln2_fixed(w: u32) -> (BigInt, u64) {
    let mut guard = LN2.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(c) = guard.as_ref() {
        if c.w >= w {
            let shift = c.w - w;
            // Truncation adds at most one ulp.
            let err = c.err.checked_shr(shift).unwrap_or(0) + 2;
            return (&c.value >> shift, err);
        }
    }
    let w_work = w.max(64) + 64;
    let zn = (BigInt::one() << w_work) / BigInt::from(3);
    let (v, err) = two_atanh_fixed(&zn, w_work, 1);
    *guard = Some(Ln2Cache {
        w: w_work,
        value: v.clone(),
        err,
    });
    let shift = w_work - w;
    ((v >> shift), err.checked_shr(shift).unwrap_or(0) + 2)
}

/// Enclosure of `ln 2`.
pub fn ln2(bits: u32) -> Interval {
    let w = bits + 8;
    let (v, err) = ln2_fixed(w);
    fixed_to_interval(&v, err, w)
}

fn fixed_to_interval(v: &BigInt, err: u64, w: u32) -> Interval {
    let den = BigInt::one() << w;
    let e = BigInt::from(err);
    Interval::new(
        BigRational::new(v - &e, den.clone()),
        BigRational::new(v + &e, den),
    )
}

fn bit_len_signed(x: &BigInt) -> i64 {
    x.bits() as i64
}

/// Enclosure of `ln x` for rational `x > 0`, of width about `2^-bits`.
pub fn ln_rational(x: &BigRational, bits: u32) -> Interval {
    assert!(x.is_positive(), "logarithm of a non-positive number");
    if x.is_one() {
        return Interval::zero();
    }
    // x = 2^e * y with y near 1.
    let mut e = bit_len_signed(x.numer()) - bit_len_signed(x.denom());
    let e_bits = 64 - e.unsigned_abs().leading_zeros();
    let w = bits + 24 + e_bits;
    let one = BigInt::one() << w;
    let fixed_y = |e: i64| -> BigInt {
        // floor(x * 2^(w - e))
        let shift = w as i64 - e;
        if shift >= 0 {
            (x.numer() << shift as usize) / x.denom()
        } else {
            x.numer() / (x.denom() << (-shift) as usize)
        }
    };
    let mut y = fixed_y(e);
    let lower = (&one * 2) / 3;
    let upper = (&one * 4) / 3;
    while y < lower {
        e -= 1;
        y = fixed_y(e);
    }
    while y > upper {
        e += 1;
        y = fixed_y(e);
    }
    // z = (y-1)/(y+1), |z| <= 1/7; y carries < 1 ulp of truncation error.
    let zn = ((&y - &one) << w) / (&y + &one);
    let (ly, ly_err) = two_atanh_fixed(&zn, w, 2);
    let (l2, l2_err) = ln2_fixed(w);
    let total = ly + &l2 * BigInt::from(e);
    let err = ly_err + l2_err * e.unsigned_abs() + 1;
    fixed_to_interval(&total, err, w)
}

pub fn ln_uint(n: &BigUint, bits: u32) -> Interval {
    let x = BigRational::from_integer(BigInt::from_biguint(Sign::Plus, n.clone()));
    ln_rational(&x, bits)
}

pub fn ln_u64(n: u64, bits: u32) -> Interval {
    ln_rational(&BigRational::from_integer(BigInt::from(n)), bits)
}

/// Enclosure of `ln` over a positive interval (monotone).
pub fn ln_interval(x: &Interval, bits: u32) -> Interval {
    let lo = ln_rational(x.lo(), bits);
    if x.is_exact() {
        return lo;
    }
    let hi = ln_rational(x.hi(), bits);
    Interval::new(lo.lo().clone(), hi.hi().clone())
}

/// Enclosure of `x^(1/n)` for a non-negative interval.
pub fn nth_root_interval(x: &Interval, n: u32, bits: u32) -> Interval {
    assert!(n >= 1);
    assert!(!x.lo().is_negative(), "root of a negative number");
    if n == 1 {
        return x.clone();
    }
    let scale_pow = BigInt::one() << (bits as usize * n as usize);
    let den = BigInt::one() << bits;
    let lo_scaled = (x.lo() * BigRational::from_integer(scale_pow.clone()))
        .floor()
        .to_integer();
    let hi_scaled = (x.hi() * BigRational::from_integer(scale_pow))
        .ceil()
        .to_integer();
    let lo_root = lo_scaled.nth_root(n);
    let mut hi_root = hi_scaled.nth_root(n);
    if num_traits::pow(hi_root.clone(), n as usize) != hi_scaled {
        hi_root += 1;
    }
    Interval::new(
        BigRational::new(lo_root, den.clone()),
        BigRational::new(hi_root, den),
    )
}

/// Integer power of an interval.
pub fn pow_int(x: &Interval, k: u32) -> Interval {
    if k == 0 {
        return Interval::exact(BigRational::one());
    }
    if !x.lo().is_negative() {
        return Interval::new(
            num_traits::pow(x.lo().clone(), k as usize),
            num_traits::pow(x.hi().clone(), k as usize),
        );
    }
    let mut acc = x.clone();
    for _ in 1..k {
        acc = acc.mul(x);
    }
    acc
}

/// Enclosure of `x^r` for a positive interval `x` and rational `r >= 0`.
pub fn pow_rational(x: &Interval, r: &BigRational, bits: u32) -> Interval {
    assert!(!r.is_negative(), "negative exponent");
    if r.is_zero() {
        return Interval::exact(BigRational::one());
    }
    let a: u32 = r
        .numer()
        .try_into()
        .expect("exponent numerator out of range");
    let b: u32 = r
        .denom()
        .try_into()
        .expect("exponent denominator out of range");
    let y = pow_int(x, a);
    if b == 1 {
        y
    } else {
        // Relative precision matters for large values: widen the working
        // precision by the magnitude of y.
        let extra = y.hi().numer().bits().saturating_sub(y.hi().denom().bits()) as u32;
        nth_root_interval(&y, b, bits + extra / b + 8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    fn close(i: &Interval, v: f64, tol: f64) -> bool {
        (i.mid_f64() - v).abs() < tol
    }

    #[test]
    fn ln2_digits() {
        let i = ln2(200);
        assert!(close(&i, std::f64::consts::LN_2, 1e-15));
        assert!(i.width() < rat(1, 1) / BigRational::from_integer(BigInt::one() << 190usize));
    }

    #[test]
    fn ln_values() {
        for (n, v) in [(3u64, 3f64.ln()), (30030, 30030f64.ln()), (10, 10f64.ln())] {
            let i = ln_u64(n, 100);
            assert!(close(&i, v, 1e-12), "ln {n}");
        }
        let i = ln_rational(&rat(9, 8), 100);
        assert!(close(&i, (9.0f64 / 8.0).ln(), 1e-15));
        let i = ln_rational(&rat(1, 1000), 80);
        assert!(close(&i, (0.001f64).ln(), 1e-12));
        assert_eq!(ln_u64(1, 64), Interval::zero());
    }

    #[test]
    fn ln_consistency_across_precisions() {
        // Nested precisions must produce intersecting enclosures.
        for n in [2u64, 7, 1000, 123456789] {
            let a = ln_u64(n, 64);
            let b = ln_u64(n, 256);
            assert!(a.intersects(&b));
            assert!(b.width() < a.width());
        }
    }

    #[test]
    fn ln_of_huge_integer() {
        // ln(2^1000 * 3) = 1000 ln 2 + ln 3
        let n = (BigUint::one() << 1000usize) * 3u32;
        let i = ln_uint(&n, 100);
        let expect = 1000.0 * std::f64::consts::LN_2 + 3f64.ln();
        assert!(close(&i, expect, 1e-9));
        assert!(i.width() < rat(1, 1 << 40));
    }

    #[test]
    fn roots_enclose() {
        let two = Interval::exact(rat(2, 1));
        let r = nth_root_interval(&two, 2, 60);
        assert!(close(&r, 2f64.sqrt(), 1e-15));
        let sq = pow_int(&r, 2);
        assert!(sq.contains(&rat(2, 1)));
        let p = pow_rational(&Interval::exact(rat(27, 1)), &rat(2, 3), 60);
        assert!(p.contains(&rat(9, 1)));
    }
}
