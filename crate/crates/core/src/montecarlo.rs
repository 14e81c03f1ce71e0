//! Seeded sampling of `alpha` and certified counting of solutions of
//! `|n|_D ||n alpha|| <= psi(n)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fast::FInterval;
use crate::interval::Interval;
use crate::metric::{dichotomy_sums, PsiEval, PsiFunction};
use crate::psav::PsavSequence;
use crate::real::{FixedAlpha, RealNumber};
use crate::report::{ser_intervals, Csv};

/// One step of the splitmix64 generator; sample `s` of a run seeded with `m` uses
/// `splitmix64(m + (s + 1) * 0x9E3779B97F4A7C15)` as its own seed.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_seed(master: u64, sample: u64) -> u64 {
    splitmix64(master.wrapping_add((sample + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Solution,
    NotSolution,
    Undecided,
}

/// `Psi(n) = psi(n) / |n|_D` for every `n <= N`, as 2^-96 fixed-point bounds capped at 1/2.
struct Thresholds {
    ev: PsiEval,
    fx: Vec<(u128, u128)>,
}

impl Thresholds {
    fn new(d: &PsavSequence, psi: &PsiFunction, n_max: u64) -> Result<Self> {
        let ev = PsiEval::new(psi, d, n_max)?;
        let one = FixedAlpha::one() as f64;
        let half = FixedAlpha::one() >> 1;
        let fx = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                if n == 0 {
                    return (0, 0);
                }
                let t = ev.fast(n).mul(FInterval::from_u64(ev.chain().inverse_value(n)));
                // f64 -> u128 casts saturate; both bounds are then nudged outward.
                let lo = ((t.lo * one) as u128).saturating_sub(1).min(half);
                let hi = ((t.hi * one) as u128).saturating_add(1).min(half);
                (lo, hi)
            })
            .collect();
        Ok(Thresholds { ev, fx })
    }

    fn n_max(&self) -> u64 {
        self.fx.len() as u64 - 1
    }

    fn precise(&self, n: u64, bits: u32) -> Interval {
        let inv = BigRational::from_integer(BigInt::from(self.ev.chain().inverse_value(n)));
        match self.ev.exact(n) {
            Some(v) => Interval::exact(v * inv),
            None => self.ev.enclose(n, bits).scale(&inv),
        }
    }
}

/// Decides `||n alpha|| <= Psi(n)` for one `alpha`.
struct Scanner<'a> {
    alpha: &'a RealNumber,
    fixed: Option<FixedAlpha>,
    thr: &'a Thresholds,
    cap_bits: u32,
}

impl<'a> Scanner<'a> {
    fn new(alpha: &'a RealNumber, thr: &'a Thresholds, cap_bits: u32) -> Result<Self> {
        let fixed = if alpha.is_rational() || thr.n_max() > FixedAlpha::MAX_N {
            None
        } else {
            Some(alpha.fixed()?)
        };
        Ok(Scanner { alpha, fixed, thr, cap_bits })
    }

    #[inline]
    fn quick(&self, n: u64) -> Option<bool> {
        let fx = self.fixed.as_ref()?;
        let (dlo, dhi) = fx.norm(n);
        let (tlo, thi) = self.thr.fx[n as usize];
        if dhi <= tlo {
            Some(true)
        } else if dlo > thi {
            Some(false)
        } else {
            None
        }
    }

    /// Outcome and, when decided by an enclosure, the margin `Psi(n) - ||n alpha||`.
    fn check(&self, n: u64) -> Result<(Outcome, Option<Interval>)> {
        if self.quick(n) == Some(false) {
            return Ok((Outcome::NotSolution, None));
        }
        let mut bits = 64u32;
        loop {
            let tol = BigRational::new(BigInt::one(), BigInt::one() << bits as usize);
            let dist = self.alpha.dist_u64(n, &tol)?.interval();
            let thr = self.thr.precise(n, bits);
            let margin = thr.sub(&dist);
            if margin.lo() >= &BigRational::from_integer(0.into()) {
                return Ok((Outcome::Solution, Some(margin)));
            }
            if margin.hi() < &BigRational::from_integer(0.into()) {
                return Ok((Outcome::NotSolution, Some(margin)));
            }
            if bits >= self.cap_bits {
                return Ok((Outcome::Undecided, Some(margin)));
            }
            bits = (bits * 2).min(self.cap_bits);
        }
    }
}

/// A certified solution (or an undecided `n`) with its margin enclosure.
#[derive(Clone, Debug, Serialize)]
pub struct Hit {
    pub n: u64,
    pub solution: bool,
    #[serde(serialize_with = "crate::report::ser_interval")]
    pub margin: Interval,
}

/// Iterator over the solutions `n <= N` for one `alpha`; undecided `n` are yielded
/// with `solution == false`.
pub struct SolutionStream<'a> {
    thr: Thresholds,
    alpha: &'a RealNumber,
    fixed: Option<FixedAlpha>,
    cap_bits: u32,
    next: u64,
}

pub fn solution_stream<'a>(
    alpha: &'a RealNumber,
    d: &PsavSequence,
    psi: &PsiFunction,
    n_max: u64,
    cap_bits: u32,
) -> Result<SolutionStream<'a>> {
    let thr = Thresholds::new(d, psi, n_max)?;
    let fixed = Scanner::new(alpha, &thr, cap_bits)?.fixed;
    Ok(SolutionStream {
        thr,
        alpha,
        fixed,
        cap_bits,
        next: 1,
    })
}

impl Iterator for SolutionStream<'_> {
    type Item = Result<Hit>;

    fn next(&mut self) -> Option<Self::Item> {
        let scanner = Scanner {
            alpha: self.alpha,
            fixed: self.fixed,
            thr: &self.thr,
            cap_bits: self.cap_bits,
        };
        while self.next <= self.thr.n_max() {
            let n = self.next;
            self.next += 1;
            match scanner.check(n) {
                Err(e) => return Some(Err(e)),
                Ok((Outcome::NotSolution, _)) => continue,
                Ok((o, margin)) => {
                    return Some(Ok(Hit {
                        n,
                        solution: o == Outcome::Solution,
                        margin: margin.expect("decided by enclosure"),
                    }))
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct McConfig {
    pub d: PsavSequence,
    pub psi: PsiFunction,
    pub samples: u64,
    pub n_max: u64,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub cap_bits: u32,
}

impl McConfig {
    /// Checkpoints at every power of ten below `n_max`, `n_max / 100`, `n_max / 10` and `n_max`.
    pub fn default_checkpoints(n_max: u64) -> Vec<u64> {
        let mut v: Vec<u64> = std::iter::successors(Some(10u64), |x| x.checked_mul(10))
            .take_while(|&x| x < n_max)
            .chain([n_max / 100, n_max / 10, n_max])
            .filter(|&x| x >= 1)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::validation("sample count must be >= 1"));
        }
        if self.n_max < 1 || self.n_max > FixedAlpha::MAX_N {
            return Err(Error::validation(format!("N_max must lie in [1, {}]", FixedAlpha::MAX_N)));
        }
        let c = &self.checkpoints;
        if c.is_empty() || c[0] < 1 || *c.last().unwrap() > self.n_max || c.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("checkpoints must increase inside [1, N_max]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleRow {
    pub sample: u64,
    pub seed: u64,
    pub counts: Vec<u64>,
    pub undecided: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub family: String,
    pub psi: String,
    pub seed: u64,
    pub n_max: u64,
    pub checkpoints: Vec<u64>,
    pub samples: Vec<SampleRow>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    /// `sum_{n <= N} lambda(A_n)` at each checkpoint.
    #[serde(serialize_with = "ser_intervals")]
    pub reference: Vec<Interval>,
    /// Samples whose final count is within a factor 2 of the final reference value.
    pub tracking: u64,
    /// Samples with `count(N_max) >= 2 count(N_max / 100)` and at least one new solution,
    /// when that checkpoint exists. A sample stuck at zero does not count as growing.
    pub growth: Option<u64>,
    /// Samples with no new solution after `N_max / 10`, when that checkpoint exists.
    pub plateau: Option<u64>,
    pub undecided_total: u64,
}

impl McReport {
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["sample", "seed", "N", "count", "undecided"]);
        for s in &self.samples {
            for (i, n) in self.checkpoints.iter().enumerate() {
                csv.row(&[
                    s.sample.to_string(),
                    s.seed.to_string(),
                    n.to_string(),
                    s.counts[i].to_string(),
                    s.undecided[i].to_string(),
                ]);
            }
        }
        csv.render()
    }

    fn checkpoint(&self, n: u64) -> Option<usize> {
        self.checkpoints.iter().position(|&c| c == n)
    }
}

fn median(xs: &mut [u64]) -> f64 {
    xs.sort_unstable();
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2] as f64
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) as f64 / 2.0
    }
}

/// Counts certified solutions for `S` seeded uniform `alpha` at every checkpoint.
pub fn run_mc(cfg: &McConfig) -> Result<McReport> {
    cfg.validate()?;
    let thr = Thresholds::new(&cfg.d, &cfg.psi, cfg.n_max)?;
    let samples: Vec<SampleRow> = (0..cfg.samples)
        .into_par_iter()
        .map(|s| -> Result<SampleRow> {
            let seed = sample_seed(cfg.seed, s);
            let alpha = RealNumber::random(seed);
            let scanner = Scanner::new(&alpha, &thr, cfg.cap_bits)?;
            let (mut count, mut undecided) = (0u64, 0u64);
            let mut counts = Vec::with_capacity(cfg.checkpoints.len());
            let mut undec = Vec::with_capacity(cfg.checkpoints.len());
            let mut n = 1u64;
            for &cp in &cfg.checkpoints {
                while n <= cp {
                    if scanner.quick(n) != Some(false) {
                        match scanner.check(n)?.0 {
                            Outcome::Solution => count += 1,
                            Outcome::Undecided => undecided += 1,
                            Outcome::NotSolution => {}
                        }
                    }
                    n += 1;
                }
                counts.push(count);
                undec.push(undecided);
            }
            Ok(SampleRow {
                sample: s,
                seed,
                counts,
                undecided: undec,
            })
        })
        .collect::<Result<_>>()?;

    let k = cfg.checkpoints.len();
    let column = |i: usize| samples.iter().map(|s| s.counts[i]).collect::<Vec<u64>>();
    let mean = (0..k)
        .map(|i| column(i).iter().sum::<u64>() as f64 / samples.len() as f64)
        .collect();
    let median_col = (0..k).map(|i| median(&mut column(i))).collect();
    let reference = dichotomy_sums(&cfg.d, &cfg.psi, &cfg.checkpoints)?
        .series
        .column("sum_measure_An")
        .expect("measure column")
        .into_iter()
        .cloned()
        .collect::<Vec<_>>();
    let final_ref = reference.last().unwrap().mid_f64();
    let tracking = samples
        .iter()
        .filter(|s| {
            let c = *s.counts.last().unwrap() as f64;
            c <= 2.0 * final_ref && 2.0 * c >= final_ref
        })
        .count() as u64;
    let mut report = McReport {
        family: cfg.d.descriptor(),
        psi: cfg.psi.to_string(),
        seed: cfg.seed,
        n_max: cfg.n_max,
        checkpoints: cfg.checkpoints.clone(),
        undecided_total: samples.iter().map(|s| *s.undecided.last().unwrap()).sum(),
        samples,
        mean,
        median: median_col,
        reference,
        tracking,
        growth: None,
        plateau: None,
    };
    let last = k - 1;
    report.growth = report.checkpoint(cfg.n_max / 100).map(|i| {
        report
            .samples
            .iter()
            .filter(|s| s.counts[last] >= 2 * s.counts[i] && s.counts[last] > s.counts[i])
            .count() as u64
    });
    report.plateau = report.checkpoint(cfg.n_max / 10).map(|i| {
        report.samples.iter().filter(|s| s.counts[last] == s.counts[i]).count() as u64
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    fn seq(s: &str) -> PsavSequence {
        PsavSequence::parse(s).unwrap()
    }

    fn solutions(alpha: &RealNumber, d: &str, psi: &str, n: u64) -> Vec<u64> {
        solution_stream(alpha, &seq(d), &psi.parse().unwrap(), n, 512)
            .unwrap()
            .map(|h| h.unwrap())
            .inspect(|h| assert!(h.solution))
            .map(|h| h.n)
            .collect()
    }

    /// `|n|_D ||n alpha|| <= psi(n)` decided directly from enclosures.
    fn brute(alpha: &RealNumber, d: &PsavSequence, psi: &PsiFunction, n_max: u64) -> Vec<u64> {
        let ev = PsiEval::new(psi, d, n_max).unwrap();
        (1..=n_max)
            .filter(|&n| {
                let dist = alpha.dist_u64(n, &rat(1, 1 << 60)).unwrap().interval();
                let lhs = dist.scale(&rat(1, ev.chain().inverse_value(n) as i64));
                let rhs = ev.enclose(n, 100);
                match lhs.cmp_interval(&rhs) {
                    Some(std::cmp::Ordering::Greater) => false,
                    Some(_) => true,
                    None => panic!("undecided at {n}"),
                }
            })
            .collect()
    }

    #[test]
    fn golden_half_over_n_hits_fibonacci() {
        let fib: Vec<u64> = std::iter::successors(Some((1u64, 2u64)), |&(a, b)| Some((b, a + b)))
            .map(|p| p.0)
            .take_while(|&f| f <= 10_000)
            .collect();
        let s = solutions(&RealNumber::golden(), "trivial", "psi:c=1/2,p=1", 10_000);
        assert_eq!(s, fib);
    }

    #[test]
    fn rational_alpha_and_zero_psi() {
        let third = RealNumber::rational(rat(1, 3));
        let s = solutions(&third, "geometric:2", "psi:zero", 60);
        assert_eq!(s, (1..=20).map(|k| 3 * k).collect::<Vec<_>>());
        assert!(solutions(&RealNumber::golden(), "geometric:2", "psi:zero", 5000).is_empty());
    }

    #[test]
    fn matches_brute_force_oracle() {
        let g = RealNumber::golden();
        let d = seq("geometric:2");
        for psi in ["psi:c=1,p=1", "psi:c=1,p=1,m=1,l=1,e=1"] {
            let p: PsiFunction = psi.parse().unwrap();
            assert_eq!(solutions(&g, "geometric:2", psi, 10_000), brute(&g, &d, &p, 10_000), "{psi}");
        }
    }

    fn cfg(psi: &str, samples: u64, n_max: u64) -> McConfig {
        McConfig {
            d: seq("geometric:2"),
            psi: psi.parse().unwrap(),
            samples,
            n_max,
            seed: 7,
            checkpoints: McConfig::default_checkpoints(n_max),
            cap_bits: 512,
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let c = cfg("psi:c=1,p=1,m=1,l=1,e=1", 8, 20_000);
        let a = run_mc(&c).unwrap();
        let b = run_mc(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.samples.iter().all(|s| s.counts.windows(2).all(|w| w[0] <= w[1])));
        assert_eq!(a.checkpoints, vec![10, 100, 200, 1000, 2000, 10_000, 20_000]);
        assert!(a.growth.is_some() && a.plateau.is_some());
        assert_eq!(a.undecided_total, 0);

        // A pointwise smaller psi never gains solutions.
        let small = run_mc(&cfg("psi:c=1,p=1,m=1,l=1,e=2", 8, 20_000)).unwrap();
        for (x, y) in small.samples.iter().zip(&a.samples) {
            assert!(x.counts.iter().zip(&y.counts).all(|(p, q)| p <= q));
        }
        let reference = dichotomy_sums(&c.d, &c.psi, &c.checkpoints).unwrap();
        let col: Vec<Interval> = reference.series.column("sum_measure_An").unwrap().into_iter().cloned().collect();
        assert_eq!(a.reference, col);
    }

    #[test]
    fn rational_psi_is_always_decided() {
        let r = run_mc(&cfg("psi:c=1/4,p=1", 4, 5000)).unwrap();
        assert_eq!(r.undecided_total, 0);
        let z = run_mc(&cfg("psi:zero", 3, 1000)).unwrap();
        assert!(z.samples.iter().all(|s| s.counts.iter().all(|&c| c == 0)));
    }

    #[test]
    fn seeds_split_deterministically() {
        assert_eq!(sample_seed(7, 0), sample_seed(7, 0));
        assert_ne!(sample_seed(7, 0), sample_seed(7, 1));
        assert_eq!(splitmix64(0), 0);
    }
}
