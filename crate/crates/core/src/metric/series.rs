use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::fast::{fx_interval, FInterval};
use crate::interval::Interval;
use crate::report::{hi_str, lo_str, ser_intervals, Csv};

/// Partial sums below this `N` are kept as exact rationals when every summand is rational.
pub const EXACT_SUM_LIMIT: u64 = 10_000;

const CHUNK: u64 = 1 << 15;

/// Partial sums of several summands on a checkpoint grid.
#[derive(Clone, Debug, Serialize)]
pub struct SumSeries {
    pub columns: Vec<String>,
    pub rows: Vec<SeriesRow>,
    /// Largest `N` whose sums are exact rationals; later rows are 2^-64 fixed-point enclosures.
    pub exact_up_to: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesRow {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(serialize_with = "ser_intervals")]
    pub values: Vec<Interval>,
}

impl SumSeries {
    pub fn column(&self, name: &str) -> Option<Vec<&Interval>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r.values[i]).collect())
    }

    pub fn last(&self) -> Option<&SeriesRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["N".to_string()];
        for c in &self.columns {
            header.push(format!("{c}_lo"));
            header.push(format!("{c}_hi"));
        }
        let mut csv = Csv::new(&header);
        for r in &self.rows {
            let mut cells = vec![r.n.to_string()];
            for v in &r.values {
                cells.push(lo_str(v.lo()));
                cells.push(hi_str(v.hi()));
            }
            csv.row(&cells);
        }
        csv.render()
    }
}

/// Exact running sum kept as `num / den` with `den` the lcm of all denominators seen.
///
/// Adding `a/b` costs a reduction of `den` modulo `b` instead of a full big gcd.
#[derive(Clone, Debug)]
pub(crate) struct LcmAccumulator {
    num: BigInt,
    den: BigInt,
}

impl LcmAccumulator {
    pub(crate) fn new() -> Self {
        LcmAccumulator {
            num: BigInt::zero(),
            den: BigInt::one(),
        }
    }

    pub(crate) fn add(&mut self, x: &BigRational) {
        if x.is_zero() {
            return;
        }
        let b = x.denom();
        // Reduce modulo the small denominator first; a direct big gcd is much slower.
        let g = match b.to_u64() {
            Some(small) => BigInt::from((&self.den % small).to_u64().unwrap().gcd(&small)),
            None => self.den.gcd(b),
        };
        let scale = b / &g;
        if !scale.is_one() {
            self.num *= &scale;
            self.den *= &scale;
        }
        self.num += x.numer() * (&self.den / b);
    }

    pub(crate) fn value(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }
}

/// A summand evaluated either exactly or as a fast enclosure.
pub(crate) trait Summand: Sync {
    fn width(&self) -> usize;
    /// Exact terms at `n`, or `None` when some term is not rational.
    fn exact(&self, n: u64) -> Option<Vec<BigRational>>;
    fn fast(&self, n: u64, out: &mut [FInterval]);
}

/// Sums `summand` over `1..=N` for each checkpoint, exactly while affordable.
pub(crate) fn accumulate<S: Summand>(summand: &S, columns: &[&str], checkpoints: &[u64]) -> SumSeries {
    let w = summand.width();
    assert_eq!(w, columns.len());
    assert!(checkpoints.windows(2).all(|p| p[0] < p[1]), "checkpoints must increase");
    let n_max = checkpoints.last().copied().unwrap_or(0);

    let mut exact: Option<Vec<LcmAccumulator>> = Some(vec![LcmAccumulator::new(); w]);
    let mut exact_up_to = 0;
    let mut fx = vec![(0u128, 0u128); w];
    let mut n = 0u64;
    let mut rows = Vec::with_capacity(checkpoints.len());

    for &cp in checkpoints {
        while n < cp {
            let next = n + 1;
            if let Some(acc) = exact.as_mut() {
                let terms = if next <= EXACT_SUM_LIMIT { summand.exact(next) } else { None };
                if let Some(terms) = terms {
                    for (a, t) in acc.iter_mut().zip(terms) {
                        a.add(&t);
                    }
                    exact_up_to = next;
                    n = next;
                    continue;
                }
                for (slot, a) in fx.iter_mut().zip(acc.iter()) {
                    *slot = exact_fx(&a.value());
                }
                exact = None;
            }
            let hi = cp;
            let parts: Vec<Vec<(u128, u128)>> = chunk_ranges(n + 1, hi)
                .into_par_iter()
                .map(|(a, b)| {
                    let mut acc = vec![(0u128, 0u128); w];
                    let mut buf = vec![FInterval::point(0.0); w];
                    for m in a..=b {
                        summand.fast(m, &mut buf);
                        for (s, t) in acc.iter_mut().zip(&buf) {
                            let (l, h) = t.to_fx();
                            s.0 += l;
                            s.1 += h;
                        }
                    }
                    acc
                })
                .collect();
            for p in parts {
                for (s, t) in fx.iter_mut().zip(p) {
                    s.0 += t.0;
                    s.1 += t.1;
                }
            }
            n = hi;
        }
        let values = match &exact {
            Some(acc) => acc.iter().map(|a| Interval::exact(a.value())).collect(),
            None => fx.iter().map(|&(l, h)| fx_interval(l, h)).collect(),
        };
        rows.push(SeriesRow { n: cp, values });
    }
    debug_assert!(n == n_max);
    SumSeries {
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows,
        exact_up_to,
    }
}

fn chunk_ranges(a: u64, b: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut s = a;
    while s <= b {
        let e = (s + CHUNK - 1).min(b);
        out.push((s, e));
        s = e + 1;
    }
    out
}

/// Floor and ceiling of `x * 2^64`.
fn exact_fx(x: &BigRational) -> (u128, u128) {
    let scaled = x * BigRational::from_integer(BigInt::from(1u128 << 64));
    let l = scaled.floor().to_integer().to_u128().expect("partial sum below 2^64");
    let h = scaled.ceil().to_integer().to_u128().expect("partial sum below 2^64");
    (l, h)
}

/// Relative growth of a column over its last checkpoint interval (upper estimate).
pub fn relative_increment(series: &SumSeries, col: usize) -> Option<f64> {
    let k = series.rows.len();
    if k < 2 {
        return None;
    }
    let last = series.rows[k - 1].values[col].mid_f64();
    let prev = series.rows[k - 2].values[col].mid_f64();
    Some(if last == 0.0 { 0.0 } else { (last - prev) / last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    struct Harmonic;

    impl Summand for Harmonic {
        fn width(&self) -> usize {
            2
        }
        fn exact(&self, n: u64) -> Option<Vec<BigRational>> {
            Some(vec![rat(1, n as i64), rat(1, 1)])
        }
        fn fast(&self, n: u64, out: &mut [FInterval]) {
            out[0] = FInterval::point(1.0).div(FInterval::from_u64(n));
            out[1] = FInterval::point(1.0);
        }
    }

    #[test]
    fn exact_then_enclosed() {
        let s = accumulate(&Harmonic, &["h", "count"], &[4, 10_000, 20_000]);
        assert_eq!(s.rows[0].values[0], Interval::exact(rat(25, 12)));
        assert_eq!(s.exact_up_to, 10_000);
        let h = &s.rows[2].values[0];
        let n = 20_000f64;
        let want = n.ln() + 0.577_215_664_901_532_9 + 0.5 / n - 1.0 / (12.0 * n * n);
        assert!(h.lo_f64() - 1e-13 <= want && want <= h.hi_f64() + 1e-13);
        assert!(h.hi_f64() - h.lo_f64() < 1e-12);
        assert_eq!(s.rows[2].values[1], Interval::from_int(20_000));
        assert!(s.to_csv().starts_with("N,h_lo,h_hi,count_lo,count_hi\n4,"));
    }
}
