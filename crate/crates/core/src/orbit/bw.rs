use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{rat_to_f64, Interval};
use crate::logs;
use crate::report::{ser_interval, ser_rational};

const LOG_BITS: u32 = 96;

/// Smallest `r` with `n = r^k` for some `k >= 1`.
pub fn perfect_power_root(n: u64) -> u64 {
    for k in (2..=63).rev() {
        let r = n.nth_root(k);
        if r >= 2 && r.checked_pow(k) == Some(n) {
            return perfect_power_root(r);
        }
    }
    n
}

/// Two integers `>= 2` are multiplicatively dependent exactly when they are powers of a common integer.
pub fn multiplicatively_dependent(x: u64, y: u64) -> bool {
    perfect_power_root(x) == perfect_power_root(y)
}

/// Smallest `|sum b_r ln a_r|` over nonzero vectors of one height (`max |b_r| = h`),
/// and the running minimum over all heights up to `h`.
#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub height: u32,
    #[serde(serialize_with = "ser_interval")]
    pub shell_min: Interval,
    pub shell_argmin: Vec<i64>,
    #[serde(serialize_with = "ser_interval")]
    pub min_gap: Interval,
    pub argmin: Vec<i64>,
    /// `-ln(min_gap) / ln(3h)`, rounded up.
    pub kappa: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BwGap {
    pub bases: Vec<u64>,
    pub height: u32,
    #[serde(serialize_with = "ser_interval")]
    pub min_gap: Interval,
    pub argmin: Vec<i64>,
    /// Least exponent with `min_gap(B') (3B')^kappa >= 1` for every tested `B'`.
    /// Empirical: fitted from the rows, never assumed.
    #[serde(serialize_with = "ser_rational")]
    pub fitted_kappa: BigRational,
    pub fitted_kappa_f64: f64,
    pub rows: Vec<GapRow>,
}

/// Fixed-point value of a linear form with its error bound, both in units of `2^-96`.
#[derive(Clone, Debug)]
struct Cand {
    abs: i128,
    err: i128,
    b: Vec<i64>,
}

struct Forms<'a> {
    bases: &'a [u64],
    logs: Vec<i128>,
}

impl Forms<'_> {
    fn eval(&self, b: &[i64]) -> Cand {
        let v: i128 = b.iter().zip(&self.logs).map(|(&x, &l)| x as i128 * l).sum();
        let err = b.iter().map(|x| x.unsigned_abs() as i128).sum::<i128>() + 1;
        Cand { abs: v.abs(), err, b: b.to_vec() }
    }

    /// `max(P/Q, Q/P)` with `P/Q = prod a_r^b_r`; its log is the gap.
    fn exact_ratio(&self, b: &[i64]) -> BigRational {
        let (mut p, mut q) = (BigUint::one(), BigUint::one());
        for (&x, &a) in b.iter().zip(self.bases) {
            let pw = BigUint::from(a).pow(x.unsigned_abs() as u32);
            if x > 0 {
                p *= pw;
            } else {
                q *= pw;
            }
        }
        let r = BigRational::new(BigInt::from(p), BigInt::from(q));
        if r < BigRational::one() {
            r.recip()
        } else {
            r
        }
    }

    /// Orders two candidates by gap, exactly when the enclosures overlap.
    fn cmp(&self, x: &Cand, y: &Cand) -> Ordering {
        if x.abs + x.err < y.abs - y.err {
            return Ordering::Less;
        }
        if y.abs + y.err < x.abs - x.err {
            return Ordering::Greater;
        }
        self.exact_ratio(&x.b)
            .cmp(&self.exact_ratio(&y.b))
            .then_with(|| x.b.cmp(&y.b))
    }

    fn better(&self, x: Option<Cand>, y: Option<Cand>) -> Option<Cand> {
        match (x, y) {
            (Some(x), Some(y)) => Some(if self.cmp(&x, &y) == Ordering::Greater { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        }
    }
}

/// Brute-force minimum of `|sum b_r ln a_r|` over nonzero integer vectors with
/// `max |b_r| <= height`, with the best exponent fitted per height.
///
/// `budget` caps the number of enumerated vectors.
pub fn bw_gap(bases: &[u64], height: u32, budget: u64) -> Result<BwGap> {
    if bases.is_empty() || bases.iter().any(|&a| a < 2) {
        return Err(Error::validation("bases must be a nonempty list of integers >= 2"));
    }
    if height == 0 {
        return Err(Error::validation("height bound must be >= 1"));
    }
    for (i, &x) in bases.iter().enumerate() {
        for &y in &bases[i + 1..] {
            if multiplicatively_dependent(x, y) {
                return Err(Error::validation(format!("{x} and {y} are multiplicatively dependent")));
            }
        }
    }
    let side = 2 * height as u64 + 1;
    let total = side
        .checked_pow(bases.len() as u32)
        .filter(|&t| t <= budget)
        .ok_or_else(|| {
            Error::Budget(format!(
                "{side}^{} height vectors exceed the budget of {budget}; use a smaller B or fewer bases",
                bases.len()
            ))
        })?;
    let forms = Forms {
        bases,
        logs: bases
            .iter()
            .map(|&a| {
                let l = logs::ln_u64(a, LOG_BITS + 16);
                (l.lo() * BigRational::from_integer(BigInt::one() << LOG_BITS as usize))
                    .floor()
                    .to_integer()
                    .to_i128()
                    .unwrap()
            })
            .collect(),
    };
    let s = bases.len();
    let h = height as usize;
    let chunk = (total / 256).max(1 << 12);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();
    let per_height: Vec<Option<Cand>> = starts
        .into_par_iter()
        .map(|start| {
            let mut best: Vec<Option<Cand>> = vec![None; h + 1];
            let mut b = vec![0i64; s];
            for idx in start..(start + chunk).min(total) {
                let mut rest = idx;
                for slot in b.iter_mut() {
                    *slot = (rest % side) as i64 - height as i64;
                    rest /= side;
                }
                // One representative of each {b, -b}: first nonzero entry positive.
                match b.iter().find(|&&x| x != 0) {
                    Some(&x) if x > 0 => {}
                    _ => continue,
                }
                let ht = b.iter().map(|x| x.unsigned_abs() as usize).max().unwrap();
                let c = forms.eval(&b);
                let cur = best[ht].take();
                best[ht] = forms.better(cur, Some(c));
            }
            best
        })
        .reduce(
            || vec![None; h + 1],
            |x, y| x.into_iter().zip(y).map(|(p, q)| forms.better(p, q)).collect(),
        );

    let mut rows = Vec::with_capacity(h);
    let mut running: Option<Cand> = None;
    let mut kappa = BigRational::zero();
    for (ht, shell) in per_height.into_iter().enumerate().skip(1) {
        let shell = shell.expect("every height has vectors");
        running = forms.better(running, Some(shell.clone()));
        let best = running.as_ref().unwrap();
        let ratio = forms.exact_ratio(&best.b);
        if ratio.is_one() {
            return Err(Error::validation(format!(
                "bases are multiplicatively dependent: exponents {:?} give 1",
                best.b
            )));
        }
        let shell_gap = logs::ln_rational(&forms.exact_ratio(&shell.b), 128);
        let gap = logs::ln_rational(&ratio, 128);
        let k = fit_kappa(&gap, ht as u64);
        kappa = kappa.max(k.clone());
        rows.push(GapRow {
            height: ht as u32,
            shell_min: shell_gap,
            shell_argmin: shell.b.clone(),
            min_gap: gap,
            argmin: best.b.clone(),
            kappa: rat_to_f64(&k),
        });
    }
    let last = rows.last().unwrap();
    Ok(BwGap {
        bases: bases.to_vec(),
        height,
        min_gap: last.min_gap.clone(),
        argmin: last.argmin.clone(),
        fitted_kappa_f64: rat_to_f64(&kappa),
        fitted_kappa: kappa,
        rows,
    })
}

/// Upper bound on `-ln(gap) / ln(3h)`, snapped up to a multiple of `2^-40`.
fn fit_kappa(gap: &Interval, h: u64) -> BigRational {
    let num = logs::ln_interval(gap, 128).neg();
    let den = logs::ln_u64(3 * h, 128);
    let q = num.div(&den).expect("ln(3h) > 0");
    let scale = BigRational::from_integer(BigInt::one() << 40usize);
    (q.hi() * &scale).ceil() / scale
}

/// Checks `gap (3h)^kappa >= 1` for every row, that is `ln gap + kappa ln(3h) >= 0`.
pub fn kappa_certified(report: &BwGap) -> bool {
    let k = Interval::exact(report.fitted_kappa.clone());
    report.rows.iter().all(|r| {
        let ln_gap = logs::ln_interval(&r.min_gap, 128);
        let total = ln_gap.add(&k.mul(&logs::ln_u64(3 * r.height as u64, 128)));
        !total.lo().is_negative()
    })
}

/// `1 / (2 delta kappa)`, conditional on the fitted `kappa`.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionBound {
    #[serde(serialize_with = "ser_rational")]
    pub delta: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub kappa: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub bound: BigRational,
    pub bound_f64: f64,
    pub note: &'static str,
}

pub fn dimension_bound(delta: &BigRational, kappa: &BigRational) -> Result<DimensionBound> {
    if *delta <= BigRational::zero() || *kappa <= BigRational::zero() {
        return Err(Error::validation("delta and kappa must be positive"));
    }
    let bound = (BigRational::from_integer(2.into()) * delta * kappa).recip();
    Ok(DimensionBound {
        delta: delta.clone(),
        kappa: kappa.clone(),
        bound_f64: rat_to_f64(&bound),
        bound,
        note: "conditional on the fitted kappa; not a certified dimension bound",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    #[test]
    fn two_three_gaps() {
        let r = bw_gap(&[2, 3], 3, 1 << 20).unwrap();
        assert!((r.rows[0].min_gap.mid_f64() - 0.405_465_108).abs() < 1e-8);
        assert_eq!(r.rows[0].argmin, vec![1, -1]);
        assert!((r.min_gap.mid_f64() - 0.117_783_035_656).abs() < 1e-10);
        assert_eq!(r.argmin, vec![3, -2]);
        assert!(r.min_gap.width() < BigRational::new(BigInt::one(), BigInt::one() << 100usize));
        assert!(kappa_certified(&r));
    }

    #[test]
    fn single_base() {
        let r = bw_gap(&[7], 5, 100).unwrap();
        assert!(r.rows.iter().all(|row| row.argmin == vec![1]));
        assert!((r.min_gap.mid_f64() - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dependence_and_budget() {
        assert!(matches!(bw_gap(&[4, 8], 2, 100), Err(Error::Validation(_))));
        assert!(matches!(bw_gap(&[2, 3, 6], 1, 100), Err(Error::Validation(_))));
        assert!(matches!(bw_gap(&[2, 3], 100, 1000), Err(Error::Budget(_))));
        assert_eq!(perfect_power_root(64), 2);
        assert_eq!(perfect_power_root(36), 6);
        assert!(!multiplicatively_dependent(6, 12));
    }

    #[test]
    fn gaps_shrink_and_kappa_bounds_them() {
        let r = bw_gap(&[2, 3], 60, 1 << 20).unwrap();
        for w in r.rows.windows(2) {
            assert!(w[1].min_gap.hi() <= w[0].min_gap.hi());
        }
        assert!(kappa_certified(&r));
        let d = dimension_bound(&rat(1, 2), &r.fitted_kappa).unwrap();
        assert!(d.bound_f64 > 0.0);
    }
}
