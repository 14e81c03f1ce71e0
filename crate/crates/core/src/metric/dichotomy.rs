use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::psi::{PsiEval, PsiFunction};
use super::series::{accumulate, relative_increment, SumSeries, Summand};
use crate::error::{Error, Result};
use crate::fast::FInterval;
use crate::interval::Interval;
use crate::logs;
use crate::primes::phi_sieve;
use crate::psav::PsavSequence;

/// A column counts as still growing if its last checkpoint interval added at least this fraction.
pub const GROWTH_THRESHOLD: f64 = 0.01;

fn rat_u(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `min(1, 2 Psi)`, the measure of `{alpha : ||n alpha|| <= Psi}`.
pub fn measure_from_psi(big_psi: &BigRational) -> BigRational {
    let two = big_psi * rat_u(2);
    if two >= BigRational::one() {
        BigRational::one()
    } else {
        two
    }
}

/// `lambda(A_n) = min(1, 2 psi(n) / |n|_D)`; exact whenever `psi` is rational-valued.
pub fn measure_an(d: &PsavSequence, psi: &PsiFunction, n: u64) -> Result<Interval> {
    if n == 0 {
        return Err(Error::validation("measure_An needs n >= 1"));
    }
    let ev = PsiEval::new(psi, d, n)?;
    let inv = rat_u(ev.chain().inverse_value(n));
    Ok(match ev.exact(n) {
        Some(v) => Interval::exact(measure_from_psi(&(v * inv))),
        None => {
            let big = ev.enclose(n, 96).scale(&inv);
            let (lo, hi) = big.into_bounds();
            Interval::new(measure_from_psi(&lo), measure_from_psi(&hi))
        }
    })
}

struct Dichotomy {
    ev: PsiEval,
}

impl Summand for Dichotomy {
    fn width(&self) -> usize {
        3
    }

    fn exact(&self, n: u64) -> Option<Vec<BigRational>> {
        let psi = self.ev.exact(n)?;
        let c = self.ev.chain();
        let big = &psi * rat_u(c.inverse_value(n));
        Some(vec![&psi * rat_u(c.counting(n) as u64), measure_from_psi(&big), big])
    }

    fn fast(&self, n: u64, out: &mut [FInterval]) {
        let psi = self.ev.fast(n);
        let c = self.ev.chain();
        let big = psi.scale_u64(c.inverse_value(n));
        out[0] = psi.scale_u64(c.counting(n) as u64);
        out[1] = big.scale_u64(2).min_scalar(1.0);
        out[2] = big;
    }
}

pub const DICHOTOMY_COLUMNS: [&str; 3] = ["sum_M_psi", "sum_measure_An", "sum_psi_over_absD"];

/// Growth classification of the dichotomy columns at the last checkpoint.
#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub series: SumSeries,
    pub relative_increments: Vec<f64>,
    /// `growing` or `plateau` per column.
    pub behaviour: Vec<String>,
    /// The first two columns behave alike.
    pub equivalent: bool,
}

pub fn dichotomy_sums(d: &PsavSequence, psi: &PsiFunction, checkpoints: &[u64]) -> Result<DichotomyReport> {
    let n_max = checkpoints.last().copied().unwrap_or(1);
    let s = Dichotomy {
        ev: PsiEval::new(psi, d, n_max)?,
    };
    let series = accumulate(&s, &DICHOTOMY_COLUMNS, checkpoints);
    let relative_increments: Vec<f64> = (0..3).map(|c| relative_increment(&series, c).unwrap_or(0.0)).collect();
    let behaviour: Vec<String> = relative_increments
        .iter()
        .map(|&r| if r >= GROWTH_THRESHOLD { "growing" } else { "plateau" }.to_string())
        .collect();
    let equivalent = behaviour[0] == behaviour[1];
    Ok(DichotomyReport {
        series,
        relative_increments,
        behaviour,
        equivalent,
    })
}

/// Upper bound for `sum_{n > N} M(n) psi(n)` when `psi = c/(n M(n) ln n (ln ln n)^e)` with `e > 1`:
/// the summand is decreasing, so the tail is at most `c / ((e-1) (ln ln N)^(e-1))`.
pub fn standard_tail_bound(psi: &PsiFunction, n: u64, bits: u32) -> Option<Interval> {
    let one = BigRational::one();
    if psi.p != one || psi.m != one || psi.l != one || psi.e <= one || n < 16 {
        return None;
    }
    let em1 = &psi.e - &one;
    let lnln = logs::ln_interval(&logs::ln_u64(n, bits + 8), bits + 8);
    let den = logs::pow_rational(&lnln, &em1, bits).scale(&em1);
    Interval::exact(psi.c.clone()).div(&den)
}

struct DuffinSchaeffer {
    ev: PsiEval,
    phi: Vec<u32>,
}

impl Summand for DuffinSchaeffer {
    fn width(&self) -> usize {
        2
    }

    fn exact(&self, n: u64) -> Option<Vec<BigRational>> {
        let big = self.ev.exact(n)? * rat_u(self.ev.chain().inverse_value(n));
        let weighted = &big * BigRational::new(BigInt::from(self.phi[n as usize]), BigInt::from(n));
        Some(vec![big, weighted])
    }

    fn fast(&self, n: u64, out: &mut [FInterval]) {
        let big = self.ev.fast(n).scale_u64(self.ev.chain().inverse_value(n));
        out[0] = big;
        out[1] = big.scale_u64(self.phi[n as usize] as u64).div(FInterval::from_u64(n));
    }
}

pub const DS_COLUMNS: [&str; 2] = ["sum_Psi", "sum_phi_Psi_over_n"];

#[derive(Clone, Debug, Serialize)]
pub struct DsReport {
    pub series: SumSeries,
    /// Enclosure of `(sum phi(n) Psi(n)/n) / (sum Psi(n))` at each checkpoint.
    #[serde(serialize_with = "crate::report::ser_intervals")]
    pub ratio: Vec<Interval>,
    /// Certified lower bound on the running minimum of the ratio.
    pub running_min_lo: f64,
    /// Upper estimate of the running maximum (the empirical limsup witness).
    pub running_max_hi: f64,
}

impl DsReport {
    pub fn to_csv(&self) -> String {
        let base = self.series.to_csv();
        let mut out = String::new();
        for (i, line) in base.lines().enumerate() {
            out.push_str(line);
            if i == 0 {
                out.push_str(",ratio_lo,ratio_hi");
            } else {
                let r = &self.ratio[i - 1];
                out.push_str(&format!(",{},{}", crate::report::lo_str(r.lo()), crate::report::hi_str(r.hi())));
            }
            out.push('\n');
        }
        out
    }
}

/// Duffin-Schaeffer sums for `Psi(n) = psi(n)/|n|_D`.
pub fn ds_criterion(d: &PsavSequence, psi: &PsiFunction, checkpoints: &[u64]) -> Result<DsReport> {
    let n_max = checkpoints.last().copied().unwrap_or(1);
    let s = DuffinSchaeffer {
        ev: PsiEval::new(psi, d, n_max)?,
        phi: phi_sieve(n_max as usize),
    };
    let series = accumulate(&s, &DS_COLUMNS, checkpoints);
    let ratio: Vec<Interval> = series
        .rows
        .iter()
        .map(|r| {
            r.values[1]
                .div(&r.values[0])
                .unwrap_or_else(|| Interval::new(BigRational::zero(), BigRational::one()))
        })
        .collect();
    let running_min_lo = ratio.iter().map(Interval::lo_f64).fold(f64::INFINITY, f64::min);
    let running_max_hi = ratio.iter().map(Interval::hi_f64).fold(0.0, f64::max);
    Ok(DsReport {
        series,
        ratio,
        running_min_lo,
        running_max_hi,
    })
}

/// Direct and partial-summation values of `sum_{n <= N} phi(n) psi(n) / (n |n|_D)`.
#[derive(Clone, Debug, Serialize)]
pub struct AbelCheck {
    pub n_max: u64,
    /// First `N` where the two evaluations differ.
    pub first_mismatch: Option<u64>,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub value: BigRational,
}

/// `lcm(1, ..., n)`.
fn lcm_upto(n: u64) -> BigInt {
    crate::primes::primes_up_to(n).into_iter().fold(BigInt::one(), |acc, p| {
        let mut q = p;
        while q <= n / p {
            q *= p;
        }
        acc * BigInt::from(q)
    })
}

/// Compares `sum a_n psi(n)` with `A(N) psi(N) + sum_{n<N} A(n) (psi(n) - psi(n+1))`
/// for every `N <= n_max`, where `a_n = phi(n)/(n |n|_D)`.
///
/// Everything is scaled by one common denominator so both sides are integers.
pub fn abel_check(d: &PsavSequence, psi: &PsiFunction, n_max: u64) -> Result<AbelCheck> {
    if !psi.rational_valued() {
        return Err(Error::validation("the partial-summation check needs a rational-valued psi"));
    }
    if n_max == 0 {
        return Err(Error::validation("the partial-summation check needs N >= 1"));
    }
    let ev = PsiEval::new(psi, d, n_max + 1)?;
    let phi = phi_sieve(n_max as usize + 1);
    let top = (n_max + 1).max(ev.n_start());
    // A(n) = a_int(n) / l_a and psi(n) = p(n) / q_psi.
    let l_a = lcm_upto(n_max);
    let m_top = ev.chain().counting(top).max(1) as u64;
    let p_exp = psi.p.to_integer().try_into().unwrap_or(0usize);
    let m_exp = psi.m.to_integer().try_into().unwrap_or(0usize);
    let q_psi = psi.c.denom() * num_traits::pow(lcm_upto(top), p_exp) * num_traits::pow(lcm_upto(m_top), m_exp);
    let p_at = |n: u64| -> BigInt {
        let v = ev.exact(n).expect("rational psi");
        debug_assert!((&q_psi % v.denom()).is_zero());
        v.numer() * (&q_psi / v.denom())
    };
    let mut direct = BigInt::zero();
    let mut a_int = BigInt::zero();
    let mut tail = BigInt::zero();
    let mut first_mismatch = None;
    let mut p_n = p_at(1);
    for n in 1..=n_max {
        let a_n = (&l_a / BigInt::from(n)) * BigInt::from(phi[n as usize] as u64 * ev.chain().inverse_value(n));
        direct += &a_n * &p_n;
        a_int += a_n;
        if first_mismatch.is_none() && &a_int * &p_n + &tail != direct {
            first_mismatch = Some(n);
        }
        let p_next = p_at(n + 1);
        tail += &a_int * (&p_n - &p_next);
        p_n = p_next;
    }
    Ok(AbelCheck {
        n_max,
        first_mismatch,
        value: BigRational::new(direct, l_a * q_psi),
    })
}
