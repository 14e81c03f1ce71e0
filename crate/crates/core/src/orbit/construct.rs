use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{rat_from_uint, rat_to_f64, Interval};
use crate::logs;
use crate::psav::PsavSequence;
use crate::real::frac_log_ratio;
use crate::report::{ser_interval, ser_rational, ser_uint, ser_uints};

#[derive(Clone, Debug)]
pub struct ConstructionParams {
    pub a: u64,
    pub d: PsavSequence,
    pub k: usize,
    pub delta: BigRational,
    pub cap_bits: u32,
}

impl ConstructionParams {
    pub fn new(a: u64, d: PsavSequence, k: usize, delta: BigRational) -> Self {
        ConstructionParams {
            a,
            d,
            k,
            delta,
            cap_bits: 4096,
        }
    }

    /// Smallest integer greater than `2 ln a`.
    pub fn m_bins(&self) -> usize {
        m_bins(self.a)
    }
}

pub fn m_bins(a: u64) -> usize {
    let two_ln = logs::ln_u64(a, 64).scale(&BigRational::from_integer(2.into()));
    // 2 ln a is irrational for a >= 2, so the enclosure eventually avoids integers.
    let f = two_ln.lo().floor();
    debug_assert!(two_ln.hi() < &(&f + BigRational::one()));
    f.to_integer().to_usize().unwrap() + 1
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectedTerm {
    /// Chain index `l` of `n_l`.
    pub ell: usize,
    pub sigma: u64,
    #[serde(serialize_with = "ser_interval")]
    pub tau: Interval,
    /// Exponents of `n_l` over the prime support.
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairBound {
    pub i: usize,
    pub j: usize,
    /// `t_j / t_i`, exact.
    #[serde(serialize_with = "ser_rational")]
    pub ratio: BigRational,
    pub ratio_f64: f64,
    /// `sum (b_j - b_i) ln p + (sigma_i - sigma_j) ln a`.
    #[serde(serialize_with = "ser_interval")]
    pub log_ratio_primes: Interval,
    /// `ln a (tau_j - tau_i)`.
    #[serde(serialize_with = "ser_interval")]
    pub log_ratio_tau: Interval,
    pub formulas_agree: bool,
    /// `1 < t_j / t_i < a^(1/M)`, decided exactly.
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionResult {
    pub a: u64,
    pub family: String,
    pub k: usize,
    #[serde(serialize_with = "ser_rational")]
    pub delta: BigRational,
    pub m_bins: usize,
    pub primes: Vec<u64>,
    pub bin_counts: Vec<usize>,
    pub bin_index: usize,
    /// Sorted by `tau`, so `t` increases.
    pub selected: Vec<SelectedTerm>,
    pub sigma_prime: u64,
    #[serde(serialize_with = "ser_uints")]
    pub t: Vec<BigUint>,
    pub pairs: Vec<PairBound>,
    /// Smallest pairwise `ln(t_j / t_i)`, enclosed.
    #[serde(serialize_with = "ser_interval")]
    pub min_log_ratio: Interval,
    pub all_certified: bool,
    pub all_agree: bool,
    /// Each `t_i` is `n_l` times a power of `a`, checked by exact division.
    pub members: bool,
}

/// Bin of `tau` among `[m/M, (m+1)/M)`, escalating precision while the enclosure straddles.
fn bin_of(n: &BigUint, a: u64, m_bins: usize, ell: usize, cap_bits: u32) -> Result<(u64, Interval, usize)> {
    let mut tol_bits = 64u32;
    loop {
        let tol = BigRational::new(BigInt::one(), BigInt::one() << tol_bits as usize);
        let fl = frac_log_ratio(n, a, &tol, cap_bits).map_err(|e| match e {
            Error::Undecidable { .. } => Error::UndecidableBinning { index: ell },
            other => other,
        })?;
        if fl.exact {
            return Ok((fl.sigma, fl.tau, 0));
        }
        let m = BigRational::from_integer(BigInt::from(m_bins));
        let lo = (fl.tau.lo() * &m).floor();
        let hi = fl.tau.hi() * &m;
        if hi < &lo + BigRational::one() {
            return Ok((fl.sigma, fl.tau, lo.to_integer().to_usize().unwrap()));
        }
        if tol_bits >= cap_bits / 2 {
            return Err(Error::UndecidableBinning { index: ell });
        }
        tol_bits *= 2;
    }
}

/// Bins `tau_l` for `l = 1..=k`, keeps the densest bin and scales its terms to
/// `t_i = a^(sigma' - sigma_l) n_l`, certifying every pairwise ratio.
pub fn construct_chain(params: &ConstructionParams) -> Result<ConstructionResult> {
    let ConstructionParams { a, d, k, delta, cap_bits } = params;
    let (a, k) = (*a, *k);
    if a < 2 {
        return Err(Error::validation("base a must be >= 2"));
    }
    if k < 2 {
        return Err(Error::validation("chain length k must be >= 2"));
    }
    let primes = d
        .prime_support()
        .ok_or_else(|| Error::validation(format!("{} has no finite prime support", d.descriptor())))?;
    if let Some(p) = primes.iter().find(|&&p| a % p == 0) {
        return Err(Error::validation(format!("prime {p} of the support divides a = {a}")));
    }
    let m = params.m_bins();
    let terms = d.terms(k)?;

    let mut info = Vec::with_capacity(k);
    for (ell, term) in terms.iter().enumerate().take(k + 1).skip(1) {
        let (sigma, tau, bin) = bin_of(term, a, m, ell, *cap_bits)?;
        let f = d.factorization(ell)?;
        let exponents = primes.iter().map(|p| f.get(p).copied().unwrap_or(0)).collect();
        info.push((bin, SelectedTerm { ell, sigma, tau, exponents }));
    }
    let mut bin_counts = vec![0usize; m];
    for (b, _) in &info {
        bin_counts[*b] += 1;
    }
    let best = *bin_counts.iter().max().unwrap();
    let bin_index = bin_counts.iter().position(|&c| c == best).unwrap();
    let mut selected: Vec<SelectedTerm> = info.into_iter().filter(|(b, _)| *b == bin_index).map(|x| x.1).collect();
    let sigma_prime = selected.iter().map(|s| s.sigma).max().unwrap();
    let ab = BigUint::from(a);
    let t_of = |s: &SelectedTerm| ab.pow((sigma_prime - s.sigma) as u32) * &terms[s.ell];
    selected.sort_by_cached_key(t_of);
    let t: Vec<BigUint> = selected.iter().map(t_of).collect();
    if t.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::validation("two selected terms differ by a power of a"));
    }
    let members = selected.iter().zip(&t).all(|(s, ti)| {
        let (q, r) = ti.div_rem(&terms[s.ell]);
        r.is_zero() && q == ab.pow((sigma_prime - s.sigma) as u32)
    });

    let bits = 160;
    let ln_a = logs::ln_u64(a, bits);
    let ln_p: Vec<Interval> = primes.iter().map(|&p| logs::ln_u64(p, bits)).collect();
    let m_u32 = m as u32;
    let pairs: Vec<PairBound> = (0..selected.len())
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..selected.len()).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (si, sj) = (&selected[i], &selected[j]);
            let mut primes_form = ln_a.scale(&BigRational::from_integer(BigInt::from(si.sigma as i64 - sj.sigma as i64)));
            for (r, lp) in ln_p.iter().enumerate() {
                let db = sj.exponents[r] as i64 - si.exponents[r] as i64;
                primes_form = primes_form.add(&lp.scale(&BigRational::from_integer(db.into())));
            }
            let tau_form = ln_a.mul(&sj.tau.sub(&si.tau));
            let certified = t[i] < t[j] && t[j].pow(m_u32) < &ab * t[i].pow(m_u32);
            let ratio = rat_from_uint(&t[j]) / rat_from_uint(&t[i]);
            PairBound {
                i: si.ell,
                j: sj.ell,
                ratio_f64: rat_to_f64(&ratio),
                ratio,
                formulas_agree: primes_form.intersects(&tau_form),
                log_ratio_primes: primes_form,
                log_ratio_tau: tau_form,
                certified,
            }
        })
        .collect();
    let min_log_ratio = pairs
        .iter()
        .map(|p| p.log_ratio_primes.clone())
        .reduce(|x, y| x.min_with(&y))
        .unwrap_or_else(|| Interval::exact(rat_from_uint(&BigUint::zero())));
    Ok(ConstructionResult {
        a,
        family: d.descriptor(),
        k,
        delta: delta.clone(),
        m_bins: m,
        primes,
        bin_counts,
        bin_index,
        sigma_prime,
        all_certified: pairs.iter().all(|p| p.certified),
        all_agree: pairs.iter().all(|p| p.formulas_agree),
        members,
        selected,
        t,
        pairs,
        min_log_ratio,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TStep {
    #[serde(serialize_with = "ser_uint")]
    pub t: BigUint,
    #[serde(serialize_with = "ser_interval")]
    pub t_gamma: Interval,
    /// `1/a^2 <= t gamma < 1`.
    pub in_range: bool,
    /// `t_next gamma - t gamma >= t gamma * min_log_ratio`; `None` for the last term.
    pub gap_ok: Option<bool>,
}

/// Checks the scaled chain `t_i gamma` against `[1/a^2, 1)` and its consecutive gaps.
pub fn gamma_step_check(c: &ConstructionResult, gamma: &Interval) -> Vec<TStep> {
    let lower = BigRational::new(BigInt::one(), BigInt::from(c.a * c.a));
    let one = BigRational::one();
    let vals: Vec<Interval> = c.t.iter().map(|t| gamma.scale(&rat_from_uint(t))).collect();
    let min_lo = c.min_log_ratio.lo().clone();
    vals.iter()
        .enumerate()
        .map(|(i, v)| TStep {
            t: c.t[i].clone(),
            t_gamma: v.clone(),
            in_range: v.lo() >= &lower && v.hi() < &one,
            gap_ok: vals.get(i + 1).map(|next| next.sub(v).lo() >= &(v.hi() * &min_lo)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    fn params(k: usize) -> ConstructionParams {
        ConstructionParams::new(2, PsavSequence::parse("geometric:3").unwrap(), k, rat(1, 2))
    }

    #[test]
    fn bins_for_powers_of_three() {
        assert_eq!(m_bins(2), 2);
        assert_eq!(m_bins(3), 3);
        assert_eq!(m_bins(10), 5);
        let r = construct_chain(&params(8)).unwrap();
        assert_eq!(r.m_bins, 2);
        assert_eq!(r.bin_counts.iter().sum::<usize>(), 8);
        assert!(r.selected.len() >= 4);
        assert!(r.all_certified && r.all_agree && r.members);
        assert!(r.pairs.iter().all(|p| p.ratio_f64 > 1.0 && p.ratio_f64 < 2f64.sqrt()));
        assert!(r.t.windows(2).all(|w| w[0] < w[1]));
        assert!(r.min_log_ratio.lo() > &BigRational::zero());
    }

    #[test]
    fn degenerate_and_invalid() {
        let r = construct_chain(&params(2)).unwrap();
        assert!(!r.selected.is_empty());
        let d = PsavSequence::parse("geometric:6").unwrap();
        assert!(construct_chain(&ConstructionParams::new(2, d, 4, rat(1, 2))).is_err());
        let f = PsavSequence::parse("factorial").unwrap();
        assert!(construct_chain(&ConstructionParams::new(2, f, 4, rat(1, 2))).is_err());
        let mut p = params(4);
        p.cap_bits = 8;
        assert!(matches!(construct_chain(&p), Err(Error::UndecidableBinning { index: 1 })));
    }

    #[test]
    fn two_terms_in_one_bin() {
        // tau_1 = frac(log_2 5) ~ 0.32 and tau_2 = frac(log_2 25) ~ 0.64 split across two bins,
        // while 7 and 49 give ~0.81 and ~0.61, both in bin 1.
        let d = PsavSequence::parse("geometric:7").unwrap();
        let r = construct_chain(&ConstructionParams::new(2, d, 2, rat(1, 2))).unwrap();
        assert_eq!(r.selected.len(), 2);
        assert_eq!(r.pairs.len(), 1);
        assert!(r.all_certified);
    }
}
