use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::series::EXACT_SUM_LIMIT;
use crate::error::{Error, Result};
use crate::fast::fx_interval;
use crate::interval::{rat, Interval};
use crate::primes::phi_sieve;
use crate::psav::PsavSequence;
use crate::report::{ser_interval, ser_rational, ser_uint};

/// Acceptance floor for `(1/N) sum_{n <= N, d !| n} phi(n)/n`, just above `3/pi^2 - 1/4`.
pub fn phi_floor() -> BigRational {
    rat(54, 1000)
}

/// Enclosure of `3/pi^2 - 1/4 = (6/pi^2 - 1/2)/2` (about 0.053964).
pub fn phi_constant_arm() -> Interval {
    // pi^2 in [9.8696044010893586, 9.8696044010893587]
    let lo = BigRational::new(BigInt::from(98_696_044_010_893_586u64), BigInt::from(10u64.pow(16)));
    let hi = BigRational::new(BigInt::from(98_696_044_010_893_587u64), BigInt::from(10u64.pow(16)));
    let q = rat(1, 4);
    Interval::new(rat(3, 1) / hi - &q, rat(3, 1) / lo - q)
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiSum {
    pub d: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(serialize_with = "ser_interval")]
    pub sum: Interval,
    #[serde(serialize_with = "ser_interval")]
    pub ratio: Interval,
    pub exact: bool,
}

fn fx_quotient(num: u64, den: u64) -> (u128, u128) {
    let x = (num as u128) << 64;
    let q = x / den as u128;
    (q, q + u128::from(!x.is_multiple_of(den as u128)))
}

/// `sum_{n <= N, d !| n} phi(n)/n`; exact up to the exact-sum limit, a 2^-64 enclosure beyond.
pub fn phi_restricted_sum(d: u64, n: u64) -> Result<PhiSum> {
    if d < 2 || n < 1 {
        return Err(Error::validation("phi_restricted_sum needs d >= 2 and N >= 1"));
    }
    let phi = phi_sieve(n as usize);
    let keep = (1..=n).filter(|m| m % d != 0);
    let (sum, exact) = if n <= EXACT_SUM_LIMIT {
        let s: BigRational = keep
            .map(|m| BigRational::new(BigInt::from(phi[m as usize]), BigInt::from(m)))
            .sum();
        (Interval::exact(s), true)
    } else {
        let (lo, hi) = keep.fold((0u128, 0u128), |(l, h), m| {
            let (a, b) = fx_quotient(phi[m as usize] as u64, m);
            (l + a, h + b)
        });
        (fx_interval(lo, hi), false)
    };
    let ratio = sum.scale(&rat(1, n as i64));
    Ok(PhiSum { d, n, sum, ratio, exact })
}

/// Minimum of the restricted-sum ratio over every `N <= n_max` and every `d` in a range.
#[derive(Clone, Debug, Serialize)]
pub struct PhiBound {
    pub d_min: u64,
    pub d_max: u64,
    pub n_max: u64,
    /// Certified lower bound on the smallest observed ratio.
    #[serde(serialize_with = "ser_rational")]
    pub min_ratio_lo: BigRational,
    pub witness_d: u64,
    pub witness_n: u64,
    /// Fitted value of the unnamed constant: the observed minimum over `N >= n0`.
    #[serde(serialize_with = "ser_rational")]
    pub fitted_c2_lo: BigRational,
    pub n0: u64,
    #[serde(serialize_with = "ser_interval")]
    pub constant_arm: Interval,
    #[serde(serialize_with = "ser_rational")]
    pub floor: BigRational,
    /// `(d, N)` pairs whose certified ratio fell below the floor (first 100).
    pub violations: Vec<(u64, u64)>,
    pub violation_count: u64,
}

/// Smallest `num / 2^64 / n` seen so far, compared by cross-multiplication.
#[derive(Clone, Copy)]
struct MinRatio {
    num: u128,
    den: u64,
    d: u64,
}

impl MinRatio {
    fn offer(&mut self, num: u128, den: u64, d: u64) {
        if num * (self.den as u128) < self.num * (den as u128) {
            *self = MinRatio { num, den, d };
        }
    }
}

/// Checks `sum_{n <= N, d !| n} phi(n)/n >= floor * N` for all `N <= n_max`, `d_min <= d <= d_max`.
pub fn phi_bound_sweep(d_min: u64, d_max: u64, n_max: u64, n0: u64) -> Result<PhiBound> {
    if d_min < 2 || d_max < d_min || n_max < 1 {
        return Err(Error::validation("phi sweep needs 2 <= d_min <= d_max and N >= 1"));
    }
    let phi = phi_sieve(n_max as usize);
    let width = (d_max - d_min + 1) as usize;
    let floor = phi_floor();
    let (f_num, f_den) = (floor.numer().to_u128().unwrap(), floor.denom().to_u128().unwrap());
    let mut total_lo = 0u128;
    let mut div_hi = vec![0u128; width];
    let init = MinRatio { num: u128::MAX >> 40, den: 1, d: 0 };
    let mut best = init;
    let mut tail = init;
    let mut violations = Vec::new();
    let mut violation_count = 0u64;
    for n in 1..=n_max {
        let (lo, hi) = fx_quotient(phi[n as usize] as u64, n);
        total_lo += lo;
        for (i, slot) in div_hi.iter_mut().enumerate() {
            let d = d_min + i as u64;
            if n % d == 0 {
                *slot += hi;
            }
        }
        for (i, &sub) in div_hi.iter().enumerate() {
            let d = d_min + i as u64;
            let kept = total_lo.saturating_sub(sub);
            best.offer(kept, n, d);
            if n >= n0 {
                tail.offer(kept, n, d);
            }
            // kept / 2^64 >= floor * n
            if kept * f_den < (f_num * (n as u128)) << 64 {
                violation_count += 1;
                if violations.len() < 100 {
                    violations.push((d, n));
                }
            }
        }
    }
    let to_rat = |m: MinRatio| {
        BigRational::new(BigInt::from(m.num), BigInt::from(m.den) << 64usize)
    };
    Ok(PhiBound {
        d_min,
        d_max,
        n_max,
        min_ratio_lo: to_rat(best),
        witness_d: best.d,
        witness_n: best.den,
        fitted_c2_lo: if n0 <= n_max { to_rat(tail) } else { BigRational::zero() },
        n0,
        constant_arm: phi_constant_arm(),
        floor,
        violations,
        violation_count,
    })
}

/// One grid point of the chain average `(1/M(N)) sum_{1 <= k <= M(N)} phi(n_k)/n_k`.
#[derive(Clone, Debug, Serialize)]
pub struct DhypRow {
    #[serde(rename = "N", serialize_with = "ser_uint")]
    pub n: BigUint,
    pub m: usize,
    #[serde(serialize_with = "ser_rational")]
    pub average: BigRational,
    pub average_f64: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DhypReport {
    pub family: String,
    pub rows: Vec<DhypRow>,
    #[serde(serialize_with = "ser_rational")]
    pub infimum: BigRational,
    #[serde(rename = "infimum_at_N", serialize_with = "ser_uint")]
    pub infimum_at: BigUint,
    /// `fails` when the averages decay monotonically to at most half their first value,
    /// otherwise `plausibly holds`.
    pub verdict: String,
}

pub fn check_dhyp(d: &PsavSequence, grid: &[BigUint]) -> Result<DhypReport> {
    let mut rows = Vec::new();
    let mut sum = BigRational::zero();
    let mut done = 0usize;
    for n in grid {
        let m = d.counting(n)?;
        if m == 0 {
            continue;
        }
        while done < m {
            done += 1;
            sum += d.phi_ratio(done)?;
        }
        let average = &sum / BigRational::from_integer(BigInt::from(m));
        let average_f64 = crate::interval::rat_to_f64(&average);
        rows.push(DhypRow {
            n: n.clone(),
            m,
            average,
            average_f64,
        });
    }
    let Some(first) = rows.first() else {
        return Err(Error::validation("no grid point has M(N) >= 1"));
    };
    let inf_row = rows.iter().min_by(|a, b| a.average.cmp(&b.average)).unwrap();
    let last = rows.last().unwrap();
    let monotone = rows.windows(2).all(|w| w[1].average <= w[0].average);
    let distinct = rows.windows(2).filter(|w| w[1].average < w[0].average).count();
    let halved = &last.average * BigRational::from_integer(2.into()) <= first.average;
    let verdict = if monotone && distinct >= 2 && halved {
        "fails"
    } else {
        "plausibly holds"
    };
    Ok(DhypReport {
        family: d.descriptor(),
        infimum: inf_row.average.clone(),
        infimum_at: inf_row.n.clone(),
        rows,
        verdict: verdict.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restricted_sum_examples() {
        let s = phi_restricted_sum(2, 10).unwrap();
        let want = rat(1, 1) + rat(2, 3) + rat(4, 5) + rat(6, 7) + rat(6, 9);
        assert_eq!(s.sum, Interval::exact(want.clone()));
        assert_eq!(s.ratio, Interval::exact(want / rat(10, 1)));
        assert_eq!(phi_restricted_sum(2, 1).unwrap().sum, Interval::exact(rat(1, 1)));
        let big = phi_restricted_sum(3, 20_000).unwrap();
        assert!(!big.exact);
        assert!(big.sum.width() < rat(1, 1 << 40));
    }

    #[test]
    fn sweep_agrees_with_direct_sums() {
        let b = phi_bound_sweep(2, 9, 3000, 1000).unwrap();
        assert_eq!(b.violation_count, 0);
        let direct = phi_restricted_sum(b.witness_d, b.witness_n).unwrap();
        assert!(direct.ratio.lo() >= &b.min_ratio_lo);
        assert!(direct.ratio.lo() - &b.min_ratio_lo < rat(1, 1 << 40));
        let arm = phi_constant_arm();
        assert!(arm.hi() < &phi_floor() && arm.lo() > &rat(539, 10_000));
    }

    #[test]
    fn dhyp_examples() {
        let grid: Vec<BigUint> = [10u64, 100, 1000, 100_000].iter().map(|&x| BigUint::from(x)).collect();
        let r = check_dhyp(&PsavSequence::parse("geometric:3").unwrap(), &grid).unwrap();
        assert!(r.rows.iter().all(|row| row.average == rat(2, 3)));
        assert_eq!(r.verdict, "plausibly holds");

        let p = PsavSequence::parse("primorial-mertens").unwrap();
        let terms = p.terms(4).unwrap();
        let r = check_dhyp(&p, &terms[1..]).unwrap();
        let avgs: Vec<f64> = r.rows.iter().map(|x| x.average_f64).collect();
        assert!((avgs[0] - 0.5).abs() < 1e-12);
        assert!((p.phi_ratio(2).unwrap().to_f64().unwrap() - 0.1918).abs() < 1e-4);
        assert!((p.phi_ratio(3).unwrap().to_f64().unwrap() - 0.089_255_885_675).abs() < 1e-10);
        assert!((p.phi_ratio(4).unwrap().to_f64().unwrap() - 0.050_613_254_447).abs() < 1e-10);
        assert_eq!(r.verdict, "fails", "{avgs:?}");
    }
}
