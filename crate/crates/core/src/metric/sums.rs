use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::rat_from_uint;
use crate::psav::PsavSequence;
use crate::report::{ser_rational, ser_uint};

fn check_n(n: &BigUint) -> Result<()> {
    if n.is_zero() {
        return Err(Error::validation("N must be >= 1"));
    }
    Ok(())
}

/// `sum_{n <= N} 1/|n|_D`, counted per valuation index.
///
/// Exactly `floor(N/n_k) - floor(N/n_{k+1})` integers `n <= N` have `|n|_D = 1/n_k`.
pub fn sum_inverse_valuation(d: &PsavSequence, n: &BigUint) -> Result<BigUint> {
    check_n(n)?;
    let m = d.counting(n)?;
    let terms = d.terms(m)?;
    let next = d.term(m + 1).ok();
    let mut total = BigUint::zero();
    for (k, t) in terms.iter().enumerate() {
        let above = match terms.get(k + 1).or(next.as_ref()) {
            Some(u) => n / u,
            None => BigUint::zero(),
        };
        total += t * (n / t - above);
    }
    Ok(total)
}

/// Per-`n` reference loop for [`sum_inverse_valuation`].
pub fn sum_inverse_valuation_naive(d: &PsavSequence, n: u64) -> Result<BigUint> {
    let chain = d.small_chain(n.max(1))?;
    Ok((1..=n).map(|i| BigUint::from(chain.inverse_value(i))).sum())
}

/// `sum_{n <= N} M(n) = (N+1) M(N) - sum_{k=1}^{M(N)} n_k`.
///
/// Each `k >= 1` contributes once for every `n` in `[n_k, N]`. The variant that also
/// subtracts `n_0 = 1` undercounts by `M(N)`.
pub fn sum_counting(d: &PsavSequence, n: &BigUint) -> Result<BigUint> {
    check_n(n)?;
    let m = d.counting(n)?;
    let tail: BigUint = d.terms(m)?.iter().skip(1).sum();
    Ok((n + 1u32) * BigUint::from(m) - tail)
}

pub fn sum_counting_naive(d: &PsavSequence, n: u64) -> Result<BigUint> {
    let chain = d.small_chain(n.max(1))?;
    Ok((1..=n).map(|i| BigUint::from(chain.counting(i))).sum())
}

/// One checkpoint of the `N M(N)` comparison.
#[derive(Clone, Debug, Serialize)]
pub struct AsympRow {
    #[serde(rename = "N", serialize_with = "ser_uint")]
    pub n: BigUint,
    pub m: usize,
    #[serde(serialize_with = "ser_uint")]
    pub s1: BigUint,
    #[serde(serialize_with = "ser_uint")]
    pub s2: BigUint,
    #[serde(serialize_with = "ser_uint")]
    pub n_m: BigUint,
    #[serde(serialize_with = "ser_rational")]
    pub ratio1: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub ratio2: BigRational,
    /// `sum_{k <= M(N)} n_k`, which never exceeds `2N`.
    #[serde(serialize_with = "ser_uint")]
    pub tail: BigUint,
    pub tail_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsympReport {
    pub family: String,
    pub rows: Vec<AsympRow>,
    #[serde(serialize_with = "ser_rational")]
    pub window_lo: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub window_hi: BigRational,
    /// Every ratio with `M(N) >= 1` lies in the window.
    pub in_window: bool,
}

/// Both `sum 1/|n|_D` and `sum M(n)` against `N M(N)`, and the geometric tail bound.
pub fn asymp_check(d: &PsavSequence, grid: &[BigUint]) -> Result<AsympReport> {
    let window_lo = BigRational::new(1.into(), 16.into());
    let window_hi = BigRational::from_integer(4.into());
    let mut rows = Vec::with_capacity(grid.len());
    let mut in_window = true;
    for n in grid {
        let s1 = sum_inverse_valuation(d, n)?;
        let s2 = sum_counting(d, n)?;
        let m = d.counting(n)?;
        let n_m = n * BigUint::from(m);
        let (ratio1, ratio2) = if m == 0 {
            (BigRational::zero(), BigRational::zero())
        } else {
            let den = rat_from_uint(&n_m);
            (rat_from_uint(&s1) / &den, rat_from_uint(&s2) / &den)
        };
        if m > 0 {
            in_window &= [&ratio1, &ratio2].iter().all(|r| **r >= window_lo && **r <= window_hi);
        }
        let tail = d.tail_sum(n)?;
        let tail_ok = tail <= n * 2u32;
        rows.push(AsympRow {
            n: n.clone(),
            m,
            s1,
            s2,
            n_m,
            ratio1,
            ratio2,
            tail,
            tail_ok,
        });
    }
    Ok(AsympReport {
        family: d.descriptor(),
        rows,
        window_lo,
        window_hi,
        in_window,
    })
}

/// `10^lo, 10^(lo+1/per), ..., 10^hi` rounded to integers, deduplicated.
pub fn geometric_grid(lo: u32, hi: u32, per_decade: u32) -> Vec<u64> {
    let per = per_decade.max(1);
    let mut out: Vec<u64> = (lo * per..=hi * per)
        .map(|i| {
            if i % per == 0 {
                10u64.pow(i / per)
            } else {
                10f64.powf(i as f64 / per as f64).round() as u64
            }
        })
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn seq(s: &str) -> PsavSequence {
        PsavSequence::parse(s).unwrap()
    }

    #[test]
    fn small_values() {
        let d = seq("geometric:2");
        let four = BigUint::from(4u32);
        assert_eq!(sum_inverse_valuation(&d, &four).unwrap(), BigUint::from(8u32));
        assert_eq!(sum_inverse_valuation(&d, &BigUint::one()).unwrap(), BigUint::one());
        assert_eq!(sum_counting(&d, &four).unwrap(), BigUint::from(4u32));
        assert_eq!(sum_counting(&d, &BigUint::one()).unwrap(), BigUint::zero());
        let r = asymp_check(&d, &[four]).unwrap();
        assert_eq!(r.rows[0].ratio1, BigRational::one());
    }

    #[test]
    fn closed_forms_match_loops() {
        for f in ["geometric:2", "geometric:3", "factorial", "bounded-ratio:5:1", "trivial"] {
            let d = seq(f);
            for n in (1..=2000u64).chain([4096, 10_000]) {
                let big = BigUint::from(n);
                assert_eq!(sum_inverse_valuation(&d, &big).unwrap(), sum_inverse_valuation_naive(&d, n).unwrap(), "{f} {n}");
                assert_eq!(sum_counting(&d, &big).unwrap(), sum_counting_naive(&d, n).unwrap(), "{f} {n}");
            }
        }
        let d = seq("geometric:2");
        for t in 0..=20 {
            let n = 1u64 << t;
            assert_eq!(sum_counting(&d, &BigUint::from(n)).unwrap(), sum_counting_naive(&d, n).unwrap());
        }
    }

    #[test]
    fn grid_shape() {
        assert_eq!(geometric_grid(2, 3, 2), vec![100, 316, 1000]);
    }
}
