use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use mlcl::interval::rat;
use mlcl::metric::{self, PsiFunction};
use mlcl::montecarlo::{run_mc, McConfig};
use mlcl::orbit::{self, ConstructionParams, TorusSet};
use mlcl::trajectory::{infimum_scan, ScanOptions};
use mlcl::{PsavSequence, RealNumber};

fn family() -> impl Strategy<Value = String> {
    prop_oneof![
        (2u64..8).prop_map(|a| format!("geometric:{a}")),
        Just("factorial".to_string()),
        Just("primorial-mertens".to_string()),
        (2u64..7, 0u64..1000).prop_map(|(b, s)| format!("bounded-ratio:{b}:{s}")),
    ]
}

fn terms_upto(d: &PsavSequence, limit: u64) -> Vec<u64> {
    (0..)
        .map_while(|k| d.term(k).ok().and_then(|t| t.to_u64()).filter(|&t| t <= limit))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn valuation_is_maximal_and_at_most_one(f in family(), n in 1u64..200_000) {
        let d = PsavSequence::parse(&f).unwrap();
        let v = d.value_u64(n).unwrap();
        let n1 = d.term(1).unwrap().to_u64().unwrap();
        prop_assert!(v.value() <= BigRational::one());
        prop_assert_eq!(v.value() == BigRational::one(), n % n1 != 0);
        prop_assert_eq!(n % v.term.to_u64().unwrap(), 0);
        let next = d.term(v.index + 1).unwrap();
        prop_assert!(next > BigUint::from(n) || n % next.to_u64().unwrap() != 0);
    }

    #[test]
    fn counting_brackets_n(f in family(), n in 1u64..1_000_000) {
        let d = PsavSequence::parse(&f).unwrap();
        let m = d.counting_u64(n).unwrap();
        prop_assert!(d.term(m).unwrap() <= BigUint::from(n));
        prop_assert!(d.term(m + 1).unwrap() > BigUint::from(n));
        prop_assert!(d.counting_u64(n + 1).unwrap() >= m);
    }

    #[test]
    fn counting_at_chain_terms(f in family(), k in 0usize..5) {
        let d = PsavSequence::parse(&f).unwrap();
        let t = d.term(k).unwrap();
        prop_assert_eq!(d.counting(&t).unwrap(), k);
        prop_assert!(d.value(&t).unwrap().index >= k);
    }

    #[test]
    fn chain_tail_at_most_twice_n(f in family(), n in 1u64..10_000_000) {
        let d = PsavSequence::parse(&f).unwrap();
        let tail: u64 = terms_upto(&d, n).iter().sum();
        prop_assert!(tail <= 2 * n);
        prop_assert_eq!(d.tail_sum(&BigUint::from(n)).unwrap(), BigUint::from(tail));
    }

    #[test]
    fn blockwise_sums_match_naive(f in family(), n in 1u64..3000) {
        let d = PsavSequence::parse(&f).unwrap();
        let big = BigUint::from(n);
        prop_assert_eq!(metric::sum_inverse_valuation(&d, &big).unwrap(), metric::sum_inverse_valuation_naive(&d, n).unwrap());
        prop_assert_eq!(metric::sum_counting(&d, &big).unwrap(), metric::sum_counting_naive(&d, n).unwrap());
    }

    #[test]
    fn measure_in_unit_interval(f in family(), n in 1u64..50_000, c in 1i64..50, e in 0i64..3) {
        let d = PsavSequence::parse(&f).unwrap();
        let psi = PsiFunction::new(rat(c, 7), BigRational::one(), BigRational::one(), BigRational::one(), rat(e, 1)).unwrap();
        let m = metric::measure_an(&d, &psi, n).unwrap();
        prop_assert!(m.lo() >= &BigRational::zero() && m.hi() <= &BigRational::one());
    }

    #[test]
    fn convergent_determinant(prefix in prop::collection::vec(1u32..20, 1..8), period in prop::collection::vec(1u32..5, 1..4), m in 1usize..30) {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        let alpha: RealNumber = format!("cf:0;{},({})", join(&prefix), join(&period)).parse().unwrap();
        let (p0, q0) = alpha.convergent(m - 1).unwrap();
        let (p1, q1) = alpha.convergent(m).unwrap();
        let det = &q1 * &p0 - &p1 * &q0;
        prop_assert!(det == BigInt::one() || det == -BigInt::one());
        // q_m ||q_m alpha|| < 1
        let tol = BigRational::new(BigInt::one(), &q1 * &q1 * BigInt::from(1u32 << 20));
        let d = alpha.dist(&q1.to_biguint().unwrap(), &tol).unwrap();
        prop_assert!(d.upper * BigRational::from_integer(q1) < BigRational::one());
    }

    #[test]
    fn dist_contains_rational_answer(p in 0i64..1000, q in 1i64..1000, n in 1u64..10_000, shift in 0u32..40) {
        let exact_alpha = rat(p, q);
        let alpha = RealNumber::rational(exact_alpha.clone());
        let x = &exact_alpha * BigRational::from_integer(n.into());
        let frac = &x - x.floor();
        let want = if frac > rat(1, 2) { BigRational::one() - frac } else { frac };
        let tol = BigRational::new(BigInt::one(), BigInt::one() << shift);
        let d = alpha.dist_u64(n, &tol).unwrap();
        prop_assert!(d.lower <= want && want <= d.upper);
        prop_assert!(d.lower >= BigRational::zero() && d.upper <= rat(1, 2));
    }

    #[test]
    fn irrational_dist_shrinks(n in 1u64..100_000, s in 10u32..60) {
        let alpha = RealNumber::golden();
        let wide = alpha.dist_u64(n, &BigRational::new(BigInt::one(), BigInt::one() << s)).unwrap();
        let tight = alpha.dist_u64(n, &BigRational::new(BigInt::one(), BigInt::one() << (s + 20))).unwrap();
        prop_assert!(wide.interval().contains_interval(&tight.interval()) || tight.width() <= wide.width());
        prop_assert!(tight.lower <= wide.upper && wide.lower <= tight.upper);
    }

    #[test]
    fn rational_scan_hits_zero_at_denominator(p in 1i64..200, q in 2i64..200) {
        let r = rat(p, q);
        let q = r.denom().to_u64().unwrap();
        prop_assume!(q > 1);
        let alpha = RealNumber::rational(r);
        let d = PsavSequence::parse("trivial").unwrap();
        let scan = infimum_scan(&alpha, None, &d, &ScanOptions::new(q)).unwrap();
        prop_assert!(scan.min.hi().is_zero());
        prop_assert_eq!(scan.argmin, q);
        let mins: Vec<_> = scan.records.iter().map(|r| r.running_min.hi().clone()).collect();
        prop_assert!(mins.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn greedy_witness_is_separated(pts in prop::collection::vec(0u128..1_000_000, 0..60), e in 1u128..200_000) {
        let set = TorusSet::from_raw(1_000_000, pts, 0).unwrap();
        let eps = BigRational::new(BigInt::from(e), BigInt::from(1_000_000));
        let s = orbit::separated_count(&set, &eps).unwrap();
        let x: Vec<u128> = s.witness.iter().map(|&i| set.numerators()[i]).collect();
        for (i, a) in x.iter().enumerate() {
            for b in &x[i + 1..] {
                let d = a.abs_diff(*b);
                prop_assert!(d.min(1_000_000 - d) >= e);
            }
        }
        prop_assert!(s.count <= orbit::cover_upper_bound(&set, &eps).unwrap().max(s.count));
        prop_assert!(orbit::difference_set_check(&set, &eps).unwrap().holds);
    }

    #[test]
    fn construction_invariants(base in prop_oneof![Just(3u64), Just(5), Just(7)], k in 2usize..40) {
        let p = ConstructionParams::new(2, PsavSequence::parse(&format!("geometric:{base}")).unwrap(), k, rat(1, 2));
        let m = p.m_bins();
        let r = orbit::construct_chain(&p).unwrap();
        prop_assert!(r.selected.len() * m >= k);
        prop_assert!(r.t.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(r.members && r.all_certified && r.all_agree);
        for pair in &r.pairs {
            // ratio^M < a
            let mut pow = BigRational::one();
            for _ in 0..m {
                pow *= &pair.ratio;
            }
            prop_assert!(pair.ratio > BigRational::one() && pow < rat(2, 1));
        }
    }

    #[test]
    fn gamma_lands_in_target(t1 in 1u64..5000) {
        // Small windows can miss every difference with exponents <= 60 (t1 = 222 does).
        match orbit::find_gamma(&RealNumber::golden(), 2, &BigUint::from(t1), 60, 4096) {
            Ok(w) => {
                let lower = rat(1, 4 * t1 as i64);
                prop_assert!(w.gamma.lo() >= &lower && w.gamma.hi() < &(lower * rat(2, 1)));
                prop_assert!(w.j < w.i && w.i <= 60);
            }
            Err(e) => prop_assert!(matches!(e, mlcl::Error::Budget(_)), "{e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bw_gap_nonincreasing(a in 2u64..12, b in 2u64..12, h in 1u32..40) {
        prop_assume!(!orbit::multiplicatively_dependent(a, b));
        let r = orbit::bw_gap(&[a, b], h, 10_000_000).unwrap();
        prop_assert!(r.rows.windows(2).all(|w| w[1].min_gap.hi() <= w[0].min_gap.hi()));
        prop_assert!(orbit::kappa_certified(&r));
    }

    #[test]
    fn monte_carlo_deterministic_and_monotone(seed in any::<u64>(), e in 1i64..3) {
        let cfg = McConfig {
            d: PsavSequence::parse("geometric:2").unwrap(),
            psi: PsiFunction::standard(e),
            samples: 4,
            n_max: 20_000,
            seed,
            checkpoints: McConfig::default_checkpoints(20_000),
            cap_bits: 4096,
        };
        let a = run_mc(&cfg).unwrap();
        let b = run_mc(&cfg).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        for s in &a.samples {
            prop_assert!(s.counts.windows(2).all(|w| w[0] <= w[1]));
        }
        let tighter = run_mc(&McConfig { psi: PsiFunction::standard(e + 1), ..cfg }).unwrap();
        for (x, y) in tighter.samples.iter().zip(&a.samples) {
            prop_assert!(x.counts.iter().zip(&y.counts).all(|(p, q)| p <= q));
        }
    }

    #[test]
    fn config_entries_fill_missing_flags(seed in any::<u64>(), b in 1u32..30) {
        let text = format!("# comment\nseed = {seed}\nB = {b}\nprimes = 2,3\n");
        let entries = mlcl::cli::parse_config(&text).unwrap();
        let argv: Vec<std::ffi::OsString> = ["mlcl", "bwgap", "--B", "5"].iter().map(Into::into).collect();
        let merged = mlcl::cli::merge_config(&argv, &entries).unwrap();
        let merged: Vec<String> = merged.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        let want = format!("--seed={seed}");
        prop_assert!(merged.contains(&want));
        prop_assert!(merged.contains(&"--primes=2,3".to_string()));
        prop_assert!(!merged.iter().any(|a| a.starts_with("--B=")));
    }
}
