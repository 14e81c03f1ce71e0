//! Smallest `|b1 ln 2 + b2 ln 3|` at bounded height and the fitted exponent.

use mlcl::interval::rat;
use mlcl::orbit::{bw_gap, dimension_bound, kappa_certified};

fn main() -> mlcl::Result<()> {
    let r = bw_gap(&[2, 3], 200, 100_000_000)?;
    for row in r.rows.iter().filter(|row| [1, 3, 12, 53, 200].contains(&row.height)) {
        println!("B = {:>3}  min gap ~ {:.9} at {:?}", row.height, row.min_gap.mid_f64(), row.argmin);
    }
    println!("fitted kappa {:.6}, certified: {}", r.fitted_kappa_f64, kappa_certified(&r));
    let b = dimension_bound(&rat(1, 2), &r.fitted_kappa)?;
    println!("1/(2 delta kappa) at delta = 1/2: {:.6} ({})", b.bound_f64, b.note);
    Ok(())
}
