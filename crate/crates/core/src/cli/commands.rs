use std::path::PathBuf;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::{
    BwgapArgs, Cli, Command, ConstructArgs, Format, McArgs, OrbitArgs, OrbitMode, PsavArgs, PsavCheck, SumsArgs,
    SumsCheck, TrajArgs,
};
use crate::error::{Error, Result};
use crate::interval::parse_rational;
use crate::metric::{self, PsiFunction};
use crate::montecarlo::{run_mc, McConfig};
use crate::orbit::{self, TorusSet};
use crate::psav::PsavSequence;
use crate::real::RealNumber;
use crate::report::{hi_str, lo_str, rational_string, Csv, SCHEMA_VERSION};
use crate::trajectory::{self, ScanOptions};

/// One file (or stdout) produced by a command.
pub(super) struct Produced {
    pub role: String,
    pub path: Option<PathBuf>,
    pub content: String,
}

/// A command result in both output shapes.
struct Doc {
    json: Value,
    csv: Csv,
}

fn to_json<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn rational(s: &str, what: &str) -> Result<BigRational> {
    parse_rational(s).ok_or_else(|| Error::validation(format!("bad rational for {what}: {s:?}")))
}

/// Accepts plain digits, `b^e` and `1e6`-style powers of ten.
fn count(s: &str) -> Result<BigUint> {
    let s = s.trim();
    let bad = || Error::validation(format!("bad integer {s:?}"));
    if let Some((b, e)) = s.split_once('^').or_else(|| s.split_once(['e', 'E'])) {
        let e: u32 = e.parse().map_err(|_| bad())?;
        let b = BigUint::from_str_radix(b, 10).map_err(|_| bad())?;
        return Ok(if s.contains('^') { b.pow(e) } else { b * BigUint::from(10u32).pow(e) });
    }
    BigUint::from_str_radix(s, 10).map_err(|_| bad())
}

fn count_u64(s: &str) -> Result<u64> {
    count(s)?.to_u64().ok_or_else(|| Error::validation(format!("{s} does not fit in 64 bits")))
}

fn list_big(s: &str) -> Result<Vec<BigUint>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(count).collect()
}

fn list_u64(s: &str) -> Result<Vec<u64>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(count_u64).collect()
}

fn kv_csv(pairs: &[(&str, String)]) -> Csv {
    let mut csv = Csv::new(&["key", "value"]);
    for (k, v) in pairs {
        csv.row(&[k.to_string(), v.clone()]);
    }
    csv
}

fn f64_of(x: &BigRational) -> String {
    x.to_f64().map_or_else(|| rational_string(x), |v| v.to_string())
}

fn join_vec(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Psav(_) => "psav",
        Command::Traj(_) => "traj",
        Command::Sums(_) => "sums",
        Command::Construct(_) => "construct",
        Command::Bwgap(_) => "bwgap",
        Command::Orbit(_) => "orbit",
        Command::Mc(_) => "mc",
        Command::Replay(_) => "replay",
    }
}

pub(super) fn run(cli: &Cli, format: Format) -> Result<Vec<Produced>> {
    let cap = cli.precision_cap;
    let mut extra = Vec::new();
    let doc = match &cli.command {
        Command::Psav(a) => psav(a, cap)?,
        Command::Traj(a) => traj(a, cap)?,
        Command::Sums(a) => sums(a)?,
        Command::Construct(a) => construct(a, cap)?,
        Command::Bwgap(a) => bwgap(a)?,
        Command::Orbit(a) => orbit_cmd(a, cli.seed, cap)?,
        Command::Mc(a) => {
            let (doc, summary) = mc(a, cli.seed, cap)?;
            if let Some(p) = &a.summary {
                extra.push(Produced {
                    role: "summary".into(),
                    path: Some(p.clone()),
                    content: pretty(&summary)?,
                });
            }
            doc
        }
        Command::Replay(_) => return Err(Error::validation("replay is handled before dispatch")),
    };
    let content = match format {
        Format::Csv => doc.csv.render(),
        Format::Json => pretty(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": name(&cli.command),
            "result": doc.json,
        }))?,
    };
    let mut out = vec![Produced {
        role: "out".into(),
        path: None,
        content,
    }];
    out.extend(extra);
    Ok(out)
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn psav(a: &PsavArgs, cap: u32) -> Result<Doc> {
    let d = PsavSequence::parse(&a.d)?;
    let terms = d.terms(a.k)?;
    let mut json = json!({
        "family": d.descriptor(),
        "terms": terms.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
    });
    let mut pairs: Vec<(&str, String)> = vec![("family", d.descriptor())];
    if let Some(v) = &a.value {
        let n = count(v)?;
        let val = d.value(&n)?;
        pairs.push(("n", n.to_string()));
        pairs.push(("value", rational_string(&val.value())));
        pairs.push(("value_index", val.index.to_string()));
        json["value"] = json!({"n": n.to_string(), "index": val.index, "term": val.term.to_string(),
            "value": rational_string(&val.value())});
    }
    if let Some(v) = &a.counting {
        let n = count(v)?;
        let m = d.counting(&n)?;
        pairs.push(("N", n.to_string()));
        pairs.push(("M", m.to_string()));
        json["counting"] = json!({"N": n.to_string(), "M": m});
    }
    match a.check {
        Some(PsavCheck::Growth) => {
            let delta = rational(&a.delta, "delta")?;
            let g = d.check_growth_hypothesis(&delta, a.k_max, cap)?;
            pairs.push(("growth_holds", g.holds.to_string()));
            pairs.push(("first_failure", g.first_failure.map_or(String::new(), |k| k.to_string())));
            pairs.push(("worst_k", g.worst_k.to_string()));
            pairs.push(("worst_ratio", g.worst_ratio.to_string()));
            json["growth"] = to_json(&g)?;
        }
        Some(PsavCheck::Ratios) => {
            let sup = d.check_bounded_ratios(a.k_max)?;
            pairs.push(("max_ratio", sup.to_string()));
            json["max_ratio"] = json!(sup.to_string());
        }
        None => {}
    }
    let csv = if pairs.len() > 1 {
        kv_csv(&pairs)
    } else {
        let mut csv = Csv::new(&["k", "n_k", "ratio"]);
        for (k, t) in terms.iter().enumerate() {
            let r = if k == 0 { String::new() } else { (t / &terms[k - 1]).to_string() };
            csv.row(&[k.to_string(), t.to_string(), r]);
        }
        csv
    };
    Ok(Doc { json, csv })
}

fn traj(a: &TrajArgs, cap: u32) -> Result<Doc> {
    let alpha: RealNumber = a.alpha.parse()?;
    let tol = a.tol.as_deref().map(|t| rational(t, "tol")).transpose()?;
    if let Some(c) = &a.bad_c {
        let c = rational(c, "bad-c")?;
        let tol = tol.unwrap_or_else(|| BigRational::new(1.into(), (1u64 << 40).into()));
        let hit = trajectory::bad_c_test(&alpha, &c, a.n_max, &tol, cap)?;
        let hit_s = hit.map_or(String::new(), |n| n.to_string());
        let csv = kv_csv(&[
            ("alpha", alpha.descriptor()),
            ("c", rational_string(&c)),
            ("nmax", a.n_max.to_string()),
            ("first_hit", hit_s),
        ]);
        let json = json!({"alpha": alpha.descriptor(), "c": rational_string(&c), "nmax": a.n_max, "first_hit": hit});
        return Ok(Doc { json, csv });
    }
    let d = PsavSequence::parse(&a.d)?;
    let mut opts = ScanOptions::new(a.n_max);
    opts.tol = tol;
    opts.emit_every = a.emit_every;
    let res = trajectory::infimum_scan(&alpha, a.a, &d, &opts)?;
    Ok(Doc {
        json: to_json(&res)?,
        csv: res.to_csv(),
    })
}

fn checkpoints(a: &SumsArgs) -> Result<Vec<u64>> {
    if let Some(n) = &a.n {
        return Ok(vec![count_u64(n)?]);
    }
    if let Some(c) = &a.checkpoints {
        return list_u64(c);
    }
    let hi = a.n_max.max(10).ilog10();
    let mut v = metric::geometric_grid(1, hi, a.per_decade);
    v.retain(|&x| x <= a.n_max);
    if v.last() != Some(&a.n_max) {
        v.push(a.n_max);
    }
    Ok(v)
}

/// Like `checkpoints`, but explicit values may exceed 64 bits.
fn big_grid(a: &SumsArgs) -> Result<Vec<BigUint>> {
    match (&a.n, &a.checkpoints) {
        (Some(n), _) => Ok(vec![count(n)?]),
        (None, Some(c)) => list_big(c),
        (None, None) => Ok(checkpoints(a)?.into_iter().map(BigUint::from).collect()),
    }
}

fn series_csv(text: String) -> Csv {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let mut csv = Csv::new(&header);
    for l in lines {
        csv.row(&l.split(',').collect::<Vec<_>>());
    }
    csv
}

fn sums(a: &SumsArgs) -> Result<Doc> {
    let d = || PsavSequence::parse(&a.d);
    match a.check {
        SumsCheck::Asymp => {
            let grid = big_grid(a)?;
            let r = metric::asymp_check(&d()?, &grid)?;
            let mut csv = Csv::new(&["N", "M", "S1", "S2", "NM", "ratio1", "ratio2", "tail", "tail_ok"]);
            for row in &r.rows {
                csv.row(&[
                    row.n.to_string(),
                    row.m.to_string(),
                    row.s1.to_string(),
                    row.s2.to_string(),
                    row.n_m.to_string(),
                    f64_of(&row.ratio1),
                    f64_of(&row.ratio2),
                    row.tail.to_string(),
                    row.tail_ok.to_string(),
                ]);
            }
            Ok(Doc { json: to_json(&r)?, csv })
        }
        SumsCheck::Dichotomy => {
            let psi: PsiFunction = a.psi.parse()?;
            let r = metric::dichotomy_sums(&d()?, &psi, &checkpoints(a)?)?;
            Ok(Doc {
                json: to_json(&r)?,
                csv: series_csv(r.series.to_csv()),
            })
        }
        SumsCheck::Ds => {
            let psi: PsiFunction = a.psi.parse()?;
            let r = metric::ds_criterion(&d()?, &psi, &checkpoints(a)?)?;
            Ok(Doc {
                json: to_json(&r)?,
                csv: series_csv(r.to_csv()),
            })
        }
        SumsCheck::PhiBound => {
            let r = metric::phi_bound_sweep(a.d_min, a.d_max, a.n_max, a.n0)?;
            let csv = kv_csv(&[
                ("d_min", r.d_min.to_string()),
                ("d_max", r.d_max.to_string()),
                ("nmax", r.n_max.to_string()),
                ("min_ratio_lo", lo_str(&r.min_ratio_lo)),
                ("witness_d", r.witness_d.to_string()),
                ("witness_N", r.witness_n.to_string()),
                ("constant_arm_lo", lo_str(r.constant_arm.lo())),
                ("floor", lo_str(&r.floor)),
                ("violations", r.violation_count.to_string()),
            ]);
            Ok(Doc { json: to_json(&r)?, csv })
        }
        SumsCheck::Dhyp => {
            let grid = big_grid(a)?;
            let r = metric::check_dhyp(&d()?, &grid)?;
            let mut csv = Csv::new(&["N", "M", "average"]);
            for row in &r.rows {
                csv.row(&[row.n.to_string(), row.m.to_string(), row.average_f64.to_string()]);
            }
            Ok(Doc { json: to_json(&r)?, csv })
        }
    }
}

fn construct(a: &ConstructArgs, cap: u32) -> Result<Doc> {
    let d = PsavSequence::parse(&a.d)?;
    let mut params = orbit::ConstructionParams::new(a.a, d, a.k, rational(&a.delta, "delta")?);
    params.cap_bits = cap;
    let r = orbit::construct_chain(&params)?;
    let mut json = json!({ "construction": to_json(&r)? });
    if let Some(al) = &a.alpha {
        let alpha: RealNumber = al.parse()?;
        let t1 = match &a.t1 {
            Some(t) => count(t)?,
            None => r.t.first().cloned().ok_or_else(|| Error::validation("empty construction"))?,
        };
        let w = orbit::find_gamma(&alpha, a.a, &t1, a.budget, cap)?;
        json["gamma"] = to_json(&w)?;
        if a.t1.is_none() {
            json["steps"] = to_json(&orbit::gamma_step_check(&r, &w.gamma))?;
        }
    }
    let mut csv = Csv::new(&["index", "ell", "sigma", "t", "tau_lo", "tau_hi"]);
    for (i, (s, t)) in r.selected.iter().zip(&r.t).enumerate() {
        csv.row(&[
            i.to_string(),
            s.ell.to_string(),
            s.sigma.to_string(),
            t.to_string(),
            lo_str(s.tau.lo()),
            hi_str(s.tau.hi()),
        ]);
    }
    Ok(Doc { json, csv })
}

fn bwgap(a: &BwgapArgs) -> Result<Doc> {
    let r = orbit::bw_gap(&a.primes, a.b, a.budget)?;
    let mut json = json!({ "gap": to_json(&r)?, "kappa_certified": orbit::kappa_certified(&r) });
    if let Some(delta) = &a.delta {
        json["dimension_bound"] = to_json(&orbit::dimension_bound(&rational(delta, "delta")?, &r.fitted_kappa)?)?;
    }
    let mut csv = Csv::new(&[
        "B",
        "shell_min_lo",
        "shell_min_hi",
        "shell_argmin",
        "min_gap_lo",
        "min_gap_hi",
        "argmin",
        "kappa",
    ]);
    for row in &r.rows {
        csv.row(&[
            row.height.to_string(),
            lo_str(row.shell_min.lo()),
            hi_str(row.shell_min.hi()),
            join_vec(&row.shell_argmin),
            lo_str(row.min_gap.lo()),
            hi_str(row.min_gap.hi()),
            join_vec(&row.argmin),
            row.kappa.to_string(),
        ]);
    }
    Ok(Doc { json, csv })
}

fn build_set(a: &OrbitArgs, seed: u64, cap: u32) -> Result<TorusSet> {
    let s = a.set.trim();
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    let bad = || Error::validation(format!("bad set descriptor {s:?}"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    match head {
        "orbit" => {
            let alpha: RealNumber = a.alpha.parse()?;
            let d = PsavSequence::parse(&a.d)?;
            orbit::orbit_points(&alpha, a.a, &d, a.l, a.k, &rational(&a.tol, "tol")?, cap)
        }
        "cantor" => orbit::cantor_points(num(rest)? as u32),
        "grid" => {
            let (b, depth) = rest.split_once(':').ok_or_else(bad)?;
            orbit::full_grid(num(b)?, num(depth)? as u32)
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = num(rest)?;
            let pts: Vec<u128> = (0..n).map(|_| rng.gen::<u64>() as u128).collect();
            TorusSet::from_raw(orbit::FIXED_MODULUS, pts, 0)
        }
        "list" => {
            let xs = rest
                .split(',')
                .map(|t| rational(t, "set point"))
                .collect::<Result<Vec<_>>>()?;
            TorusSet::from_rationals(&xs)
        }
        _ => Err(bad()),
    }
}

fn eps_grid(s: &str) -> Result<Vec<BigRational>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [first, ratio, len] = parts[..] else {
        return Err(Error::validation(format!("eps grid must be first:ratio:len, got {s:?}")));
    };
    let len: usize = len.parse().map_err(|_| Error::validation(format!("bad grid length {len:?}")))?;
    Ok(orbit::geometric_eps(&rational(first, "eps")?, &rational(ratio, "ratio")?, len))
}

fn orbit_cmd(a: &OrbitArgs, seed: u64, cap: u32) -> Result<Doc> {
    let set = build_set(a, seed, cap)?;
    let eps = || rational(&a.eps, "eps");
    match a.mode {
        OrbitMode::Points => {
            let mut csv = Csv::new(&["index", "numerator", "modulus", "value"]);
            for (i, (p, x)) in set.numerators().iter().zip(set.to_f64()).enumerate() {
                csv.row(&[i.to_string(), p.to_string(), set.modulus().to_string(), x.to_string()]);
            }
            let json = json!({
                "modulus": set.modulus().to_string(),
                "radius": set.radius().to_string(),
                "exact": set.is_exact(),
                "numerators": set.numerators().iter().map(u128::to_string).collect::<Vec<_>>(),
            });
            Ok(Doc { json, csv })
        }
        OrbitMode::Separated => {
            let r = orbit::separated_count(&set, &eps()?)?;
            let cover = orbit::cover_upper_bound(&set, &eps()?)?;
            let csv = kv_csv(&[
                ("epsilon", rational_string(&r.epsilon)),
                ("set_size", set.len().to_string()),
                ("greedy_count", r.count.to_string()),
                ("cover_upper_bound", cover.to_string()),
            ]);
            Ok(Doc {
                json: json!({"separated": to_json(&r)?, "cover_upper_bound": cover, "set_size": set.len()}),
                csv,
            })
        }
        OrbitMode::Diffset => {
            let r = orbit::difference_set_check(&set, &eps()?)?;
            let csv = kv_csv(&[
                ("epsilon", rational_string(&r.epsilon)),
                ("set_size", r.set_size.to_string()),
                ("difference_size", r.difference_size.to_string()),
                ("greedy_difference", r.greedy_difference.to_string()),
                ("greedy_set", r.greedy_set.to_string()),
                ("cover_set", r.cover_set.to_string()),
                ("bound", r.bound.to_string()),
                ("holds", r.holds.to_string()),
            ]);
            Ok(Doc { json: to_json(&r)?, csv })
        }
        OrbitMode::Dimension => {
            let r = orbit::box_dimension_estimate(&set, &eps_grid(&a.eps_grid)?)?;
            let mut csv = Csv::new(&["epsilon", "count", "log_inv_eps", "log_count", "residual"]);
            for row in &r.rows {
                csv.row(&[
                    rational_string(&row.epsilon),
                    row.count.to_string(),
                    row.log_inv_eps.to_string(),
                    row.log_count.to_string(),
                    row.residual.to_string(),
                ]);
            }
            Ok(Doc { json: to_json(&r)?, csv })
        }
        OrbitMode::Entropy => {
            let rows = orbit::entropy_count(&set, a.a, a.n_steps, &eps()?)?;
            let mut csv = Csv::new(&["n", "count", "rate"]);
            for r in &rows {
                csv.row(&[r.n.to_string(), r.count.to_string(), r.rate.to_string()]);
            }
            Ok(Doc {
                json: json!({"base": a.a, "epsilon": rational_string(&eps()?), "rows": to_json(&rows)?}),
                csv,
            })
        }
    }
}

fn mc(a: &McArgs, seed: u64, cap: u32) -> Result<(Doc, Value)> {
    let cfg = McConfig {
        d: PsavSequence::parse(&a.d)?,
        psi: a.psi.parse()?,
        samples: a.samples,
        n_max: a.n_max,
        seed,
        checkpoints: match &a.checkpoints {
            Some(c) => list_u64(c)?,
            None => McConfig::default_checkpoints(a.n_max),
        },
        cap_bits: cap,
    };
    let r = run_mc(&cfg)?;
    let full = to_json(&r)?;
    let mut summary = full.clone();
    if let Some(m) = summary.as_object_mut() {
        m.remove("samples");
    }
    let summary = json!({ "schema_version": SCHEMA_VERSION, "command": "mc", "result": summary });
    let csv = series_csv(r.to_csv());
    Ok((Doc { json: full, csv }, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn integer_forms() {
        assert_eq!(count("1000").unwrap(), BigUint::from(1000u32));
        assert_eq!(count("10^6").unwrap(), BigUint::from(1_000_000u32));
        assert_eq!(count("3e4").unwrap(), BigUint::from(30_000u32));
        assert_eq!(count("2^70").unwrap(), BigUint::one() << 70);
        assert!(count("x").is_err());
        assert_eq!(list_u64("10,100,1e3").unwrap(), vec![10, 100, 1000]);
    }

    #[test]
    fn eps_grid_parses() {
        let g = eps_grid("1/9:1/3:4").unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[3], BigRational::new(1.into(), 243.into()));
        assert!(eps_grid("1/9:1/3").is_err());
    }
}
