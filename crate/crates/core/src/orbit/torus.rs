use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::report::ser_rational;

/// Finite subset of `R/Z` stored as numerators over a common modulus `q <= 2^64`.
///
/// Every stored point lies within `radius / q` of the true point. Sets built from
/// rationals with a small common denominator are exact (`radius == 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusSet {
    q: u128,
    points: Vec<u128>,
    radius: u128,
}

pub const FIXED_MODULUS: u128 = 1 << 64;

impl TorusSet {
    /// Points `x / q`; numerators are reduced mod `q`, sorted and deduplicated.
    pub fn from_raw(q: u128, points: impl IntoIterator<Item = u128>, radius: u128) -> Result<Self> {
        if q == 0 || q > FIXED_MODULUS {
            return Err(Error::validation("torus modulus must lie in [1, 2^64]"));
        }
        let mut points: Vec<u128> = points.into_iter().map(|x| x % q).collect();
        points.sort_unstable();
        points.dedup();
        Ok(TorusSet { q, points, radius })
    }

    /// Exact set when the common denominator fits in 64 bits, else a 2^-64 rounding.
    pub fn from_rationals(xs: &[BigRational]) -> Result<Self> {
        let lcm = xs.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
        if let Some(q) = lcm.to_u128().filter(|&q| q <= FIXED_MODULUS) {
            let qi = BigInt::from(q);
            let pts = xs.iter().map(|x| {
                let n = (x.numer() * (&qi / x.denom())).mod_floor(&qi);
                n.to_u128().unwrap()
            });
            return TorusSet::from_raw(q, pts, 0);
        }
        let ivs: Vec<Interval> = xs.iter().cloned().map(Interval::exact).collect();
        TorusSet::from_intervals(&ivs)
    }

    /// 2^-64 fixed-point set from enclosures of the points (any real representatives).
    pub fn from_intervals(xs: &[Interval]) -> Result<Self> {
        let scale = BigRational::from_integer(BigInt::from(FIXED_MODULUS));
        let qi = BigInt::from(FIXED_MODULUS);
        let mut radius = 0u128;
        let mut pts = Vec::with_capacity(xs.len());
        for x in xs {
            let lo = (x.lo() * &scale).floor().to_integer();
            let hi = (x.hi() * &scale).ceil().to_integer();
            let half: BigInt = (&hi - &lo + 1) / 2 + 1;
            let w = half.to_u128().filter(|&w| w < FIXED_MODULUS / 4).ok_or_else(|| {
                Error::validation("point enclosure wider than a quarter turn")
            })?;
            radius = radius.max(w);
            pts.push(lo.mod_floor(&qi).to_u128().unwrap());
        }
        TorusSet::from_raw(FIXED_MODULUS, pts, radius)
    }

    pub fn modulus(&self) -> u128 {
        self.q
    }

    pub fn radius(&self) -> u128 {
        self.radius
    }

    pub fn is_exact(&self) -> bool {
        self.radius == 0
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn numerators(&self) -> &[u128] {
        &self.points
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.points.iter().map(|&x| x as f64 / self.q as f64).collect()
    }

    pub fn point(&self, i: usize) -> BigRational {
        BigRational::new(BigInt::from(self.points[i]), BigInt::from(self.q))
    }

    fn dist(&self, x: u128, y: u128) -> u128 {
        let d = x.abs_diff(y);
        d.min(self.q - d)
    }

    /// `{x - y : x, y in A}`, with doubled radius.
    pub fn difference_set(&self) -> TorusSet {
        let q = self.q;
        let pts = self
            .points
            .iter()
            .flat_map(|&x| self.points.iter().map(move |&y| (x + q - y) % q));
        TorusSet::from_raw(q, pts, self.radius * 2).expect("modulus already validated")
    }

    /// Image under `x -> a x mod 1`.
    pub fn times(&self, a: u64) -> Result<TorusSet> {
        let radius = self
            .radius
            .checked_mul(a as u128)
            .filter(|&r| r == 0 || r < self.q / 4)
            .ok_or_else(|| Error::undecidable("orbit point enclosure grew past a quarter turn", 64))?;
        let pts = self.points.iter().map(|&x| mul_mod(x, a as u128, self.q));
        TorusSet::from_raw(self.q, pts, radius)
    }

    /// `ceil(eps * q)`, after checking the enclosures are narrow enough for `eps`.
    fn eps_units(&self, eps: &BigRational) -> Result<u128> {
        if !eps.is_positive() {
            return Err(Error::validation("epsilon must be positive"));
        }
        let e = (eps * BigRational::from_integer(BigInt::from(self.q)))
            .ceil()
            .to_integer()
            .to_u128()
            .unwrap_or(u128::MAX);
        if self.radius > 0 && self.radius.saturating_mul(8) >= e {
            return Err(Error::undecidable(
                format!("point enclosures (radius {} / {}) are not narrower than eps/4", self.radius, self.q),
                64,
            ));
        }
        Ok(e)
    }

    /// True distance certainly `>= eps` (in units, `e = ceil(eps q)`).
    fn far(&self, d: u128, e: u128) -> bool {
        d >= e.saturating_add(2 * self.radius)
    }
}

fn mul_mod(x: u128, a: u128, q: u128) -> u128 {
    match x.checked_mul(a) {
        Some(v) => v % q,
        None => ((BigUint::from(x) * a) % q).to_u128().unwrap(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparatedCount {
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: BigRational,
    /// Greedy count: a lower bound on `s(A, eps)`.
    pub count: usize,
    /// Indices (into the sorted point list) of the greedy separated subset.
    pub witness: Vec<usize>,
}

/// Greedy `eps`-separated subset, scanning points in ascending order.
///
/// On a sorted scan it suffices to compare a candidate with the last accepted point
/// and, across the wrap, with the first one.
pub fn separated_count(set: &TorusSet, eps: &BigRational) -> Result<SeparatedCount> {
    let witness = greedy(set, set.eps_units(eps)?);
    Ok(SeparatedCount {
        epsilon: eps.clone(),
        count: witness.len(),
        witness,
    })
}

fn greedy(set: &TorusSet, e: u128) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (i, &x) in set.points.iter().enumerate() {
        let ok = match (out.first(), out.last()) {
            (Some(&f), Some(&l)) => {
                set.far(set.dist(x, set.points[l]), e) && set.far(set.dist(x, set.points[f]), e)
            }
            _ => true,
        };
        if ok {
            out.push(i);
        }
    }
    out
}

/// Upper bound on `s(A, eps)`: a sweep cover by arcs that certainly have diameter `< eps`.
///
/// Two points of an `eps`-separated set never share an arc, so the arc count bounds
/// `s(A, eps)` from above.
pub fn cover_upper_bound(set: &TorusSet, eps: &BigRational) -> Result<usize> {
    let e = set.eps_units(eps)?;
    let mut arcs = 0;
    let mut start: Option<u128> = None;
    for &x in &set.points {
        let inside = start.is_some_and(|s| (x - s).saturating_add(2 * set.radius) < e);
        if !inside {
            arcs += 1;
            start = Some(x);
        }
    }
    Ok(arcs)
}

/// Both sides of `s(A - A, eps) <= 2 s(A, eps)^2` with one-sided certificates:
/// the left side is a greedy lower bound and the right side uses a cover upper bound,
/// so `holds == false` would be a certified counterexample.
#[derive(Clone, Debug, Serialize)]
pub struct DiffSetCheck {
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: BigRational,
    pub set_size: usize,
    pub difference_size: usize,
    pub greedy_difference: usize,
    pub greedy_set: usize,
    pub cover_set: usize,
    pub bound: usize,
    pub holds: bool,
}

pub fn difference_set_check(set: &TorusSet, eps: &BigRational) -> Result<DiffSetCheck> {
    let diff = set.difference_set();
    let greedy_difference = separated_count(&diff, eps)?.count;
    let greedy_set = separated_count(set, eps)?.count;
    let cover_set = cover_upper_bound(set, eps)?;
    let bound = 2 * cover_set * cover_set;
    Ok(DiffSetCheck {
        epsilon: eps.clone(),
        set_size: set.len(),
        difference_size: diff.len(),
        greedy_difference,
        greedy_set,
        cover_set,
        bound,
        holds: greedy_difference <= bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxRow {
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: BigRational,
    pub count: usize,
    pub log_inv_eps: f64,
    pub log_count: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxDimension {
    pub slope: f64,
    pub intercept: f64,
    pub rows: Vec<BoxRow>,
}

/// Least-squares slope of `log(greedy count)` against `log(1/eps)` over a geometric grid.
pub fn box_dimension_estimate(set: &TorusSet, eps_grid: &[BigRational]) -> Result<BoxDimension> {
    if eps_grid.len() < 4 {
        return Err(Error::validation("box dimension needs at least 4 epsilons"));
    }
    let ratio = &eps_grid[1] / &eps_grid[0];
    if ratio.is_one() || eps_grid.windows(2).any(|w| &w[1] / &w[0] != ratio) {
        return Err(Error::validation("epsilon grid must be geometric with ratio != 1"));
    }
    let mut rows = Vec::with_capacity(eps_grid.len());
    for eps in eps_grid {
        let count = separated_count(set, eps)?.count;
        rows.push(BoxRow {
            epsilon: eps.clone(),
            count,
            log_inv_eps: -crate::interval::rat_to_f64(eps).ln(),
            log_count: (count.max(1) as f64).ln(),
            residual: 0.0,
        });
    }
    let (slope, intercept) = least_squares(rows.iter().map(|r| (r.log_inv_eps, r.log_count)));
    for r in &mut rows {
        r.residual = r.log_count - (intercept + slope * r.log_inv_eps);
    }
    Ok(BoxDimension { slope, intercept, rows })
}

fn least_squares(pts: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let n = pts.clone().count() as f64;
    let (sx, sy) = pts.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub n: u32,
    pub count: usize,
    /// `log(count) / n`.
    pub rate: f64,
}

/// Greedy `(n, eps)`-separated counts under `x -> a x mod 1` for `n = 1..=n_steps`.
///
/// For `eps <= 1/(2a)` two points are `(n, eps)`-separated exactly when their distance
/// is at least `eps a^(1-n)`, which reduces each count to a plain separated count.
pub fn entropy_count(set: &TorusSet, a: u64, n_steps: u32, eps: &BigRational) -> Result<Vec<EntropyRow>> {
    if a < 2 {
        return Err(Error::validation("base must be >= 2"));
    }
    let threshold = BigRational::new(BigInt::one(), BigInt::from(2 * a));
    let mut rows = Vec::with_capacity(n_steps as usize);
    for n in 1..=n_steps {
        let count = if *eps <= threshold {
            let shrink = BigRational::new(BigInt::one(), BigInt::from(a).pow(n - 1));
            separated_count(set, &(eps * shrink))?.count
        } else {
            bowen_greedy(set, a, n, eps)?
        };
        rows.push(EntropyRow {
            n,
            count,
            rate: (count.max(1) as f64).ln() / n as f64,
        });
    }
    Ok(rows)
}

/// Direct greedy over the first `n` iterates.
fn bowen_greedy(set: &TorusSet, a: u64, n: u32, eps: &BigRational) -> Result<usize> {
    let mut layers = vec![set.clone()];
    for _ in 1..n {
        let next = layers.last().unwrap().times(a)?;
        layers.push(next);
    }
    let es: Vec<u128> = layers.iter().map(|l| l.eps_units(eps)).collect::<Result<_>>()?;
    // `times` re-sorts, so follow each original point through explicit orbits instead.
    let orbits: Vec<Vec<u128>> = set
        .points
        .iter()
        .map(|&x| {
            let mut v = Vec::with_capacity(n as usize);
            let mut y = x;
            for _ in 0..n {
                v.push(y);
                y = mul_mod(y, a as u128, set.q);
            }
            v
        })
        .collect();
    let mut accepted: Vec<usize> = Vec::new();
    for (i, orb) in orbits.iter().enumerate() {
        let ok = accepted.iter().all(|&j| {
            (0..n as usize).any(|l| layers[l].far(layers[l].dist(orb[l], orbits[j][l]), es[l]))
        });
        if ok {
            accepted.push(i);
        }
    }
    Ok(accepted.len())
}

/// Middle-thirds Cantor approximation: `sum_{i <= depth} d_i 3^-i` with `d_i in {0, 2}`.
pub fn cantor_points(depth: u32) -> Result<TorusSet> {
    let q = 3u128.pow(depth);
    let pts = (0u64..1 << depth).map(|mask| {
        (0..depth)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| 2 * 3u128.pow(depth - 1 - b))
            .sum::<u128>()
    });
    TorusSet::from_raw(q, pts, 0)
}

/// `{i / base^depth}`.
pub fn full_grid(base: u64, depth: u32) -> Result<TorusSet> {
    let q = (base as u128)
        .checked_pow(depth)
        .ok_or_else(|| Error::validation("grid modulus overflows"))?;
    TorusSet::from_raw(q, 0..q, 0)
}

/// `eps_0, eps_0 r, ..., eps_0 r^(len-1)`.
pub fn geometric_eps(first: &BigRational, ratio: &BigRational, len: usize) -> Vec<BigRational> {
    std::iter::successors(Some(first.clone()), |e| Some(e * ratio))
        .take(len)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(xs: &[(i64, i64)]) -> TorusSet {
        TorusSet::from_rationals(&xs.iter().map(|&(n, d)| rat(n, d)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn separated_examples() {
        let a = set(&[(0, 1), (3, 10), (6, 10)]);
        assert!(a.is_exact());
        assert_eq!(separated_count(&a, &rat(3, 10)).unwrap().count, 3);
        assert_eq!(separated_count(&a, &rat(31, 100)).unwrap().count, 2);
        let empty = TorusSet::from_raw(7, [], 0).unwrap();
        assert_eq!(separated_count(&empty, &rat(1, 2)).unwrap().count, 0);
        assert_eq!(cover_upper_bound(&empty, &rat(1, 2)).unwrap(), 0);
        assert!(separated_count(&a, &rat(0, 1)).is_err());
    }

    #[test]
    fn wide_enclosures_are_rejected() {
        let wide = TorusSet::from_intervals(&[Interval::new(rat(0, 1), rat(1, 100))]).unwrap();
        assert!(matches!(separated_count(&wide, &rat(1, 50)), Err(Error::Undecidable { .. })));
        assert_eq!(separated_count(&wide, &rat(1, 2)).unwrap().count, 1);
    }

    #[test]
    fn greedy_witness_is_separated_and_below_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let pts: Vec<u128> = (0..40).map(|_| rng.gen_range(0..1000)).collect();
            let s = TorusSet::from_raw(1000, pts, 0).unwrap();
            for e in [3u128, 17, 90, 333] {
                let eps = BigRational::new(BigInt::from(e), BigInt::from(1000));
                let g = separated_count(&s, &eps).unwrap();
                for (x, &i) in g.witness.iter().enumerate() {
                    for &j in &g.witness[x + 1..] {
                        assert!(s.dist(s.points[i], s.points[j]) >= e);
                    }
                }
                assert!(g.count <= cover_upper_bound(&s, &eps).unwrap());
                assert!(difference_set_check(&s, &eps).unwrap().holds);
            }
        }
    }

    #[test]
    fn box_dimension_oracles() {
        let third = rat(1, 3);
        let cantor = box_dimension_estimate(&cantor_points(10).unwrap(), &geometric_eps(&rat(1, 9), &third, 7)).unwrap();
        assert!(cantor.rows.iter().zip(2..).all(|(r, k)| r.count == 1 << k));
        assert!((cantor.slope - 2f64.ln() / 3f64.ln()).abs() < 1e-9);

        let half = rat(1, 2);
        let grid = box_dimension_estimate(&full_grid(2, 12).unwrap(), &geometric_eps(&rat(1, 4), &half, 7)).unwrap();
        assert!((grid.slope - 1.0).abs() < 1e-9);

        let single = set(&[(1, 7)]);
        let one = box_dimension_estimate(&single, &geometric_eps(&half, &half, 5)).unwrap();
        assert!(one.slope.abs() < 1e-12);
        assert!(box_dimension_estimate(&single, &[half.clone(), half.clone(), half.clone(), half]).is_err());
    }

    #[test]
    fn entropy_reduction_matches_direct_greedy() {
        let c = cantor_points(7).unwrap();
        let eps = rat(1, 6);
        for n in 1..=5 {
            let fast = entropy_count(&c, 3, n, &eps).unwrap().last().unwrap().count;
            assert_eq!(fast, bowen_greedy(&c, 3, n, &eps).unwrap(), "n = {n}");
        }
        let zero = set(&[(0, 1)]);
        assert!(entropy_count(&zero, 2, 6, &rat(1, 4)).unwrap().iter().all(|r| r.count == 1 && r.rate == 0.0));
        assert!(entropy_count(&zero, 2, 3, &rat(1, 2)).unwrap().iter().all(|r| r.count == 1));
    }

    #[test]
    fn entropy_rates() {
        // Twice as many grid points survive as cylinders of length 2^-n.
        let g = entropy_count(&full_grid(2, 16).unwrap(), 2, 12, &rat(1, 4)).unwrap();
        assert!(g.iter().all(|r| r.count == 1 << (r.n + 1)));
        let c = entropy_count(&cantor_points(14).unwrap(), 3, 12, &rat(1, 6)).unwrap();
        let r = c.last().unwrap().rate;
        assert!((r - 2f64.ln()).abs() < 0.1, "{r}");
    }

    #[test]
    fn times_and_differences() {
        let s = set(&[(1, 5), (2, 5)]);
        assert_eq!(s.times(2).unwrap(), set(&[(2, 5), (4, 5)]));
        assert_eq!(s.difference_set(), set(&[(0, 1), (1, 5), (4, 5)]));
    }
}
