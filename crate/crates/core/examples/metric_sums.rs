//! Valuation and counting sums against `N M(N)`, and the restricted totient bound.

use mlcl::metric::{asymp_check, geometric_grid, phi_bound_sweep};
use mlcl::PsavSequence;
use num_bigint::BigUint;

fn main() -> mlcl::Result<()> {
    let grid: Vec<BigUint> = geometric_grid(1, 6, 1).into_iter().map(BigUint::from).collect();
    for fam in ["geometric:2", "factorial", "bounded-ratio:5:1"] {
        let r = asymp_check(&PsavSequence::parse(fam)?, &grid)?;
        println!("{fam}: ratios inside [1/16, 4]: {}", r.in_window);
        for row in &r.rows {
            println!("  N = {:>7}  M = {:>2}  S1/NM = {}  tail ok: {}", row.n, row.m, row.ratio1, row.tail_ok);
        }
    }
    let phi = phi_bound_sweep(2, 16, 100_000, 1000)?;
    println!(
        "phi-sum ratio minimum {:.5} at d = {}, N = {}",
        phi.min_ratio_lo.to_string().parse::<f64>().unwrap_or(f64::NAN),
        phi.witness_d,
        phi.witness_n
    );
    Ok(())
}
