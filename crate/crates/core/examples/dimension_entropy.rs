//! Box-counting slopes and (n, eps)-separated counts under `x -> a x mod 1`.

use mlcl::interval::rat;
use mlcl::orbit::{box_dimension_estimate, cantor_points, entropy_count, full_grid, geometric_eps};

fn main() -> mlcl::Result<()> {
    let cantor = box_dimension_estimate(&cantor_points(10)?, &geometric_eps(&rat(1, 9), &rat(1, 3), 7))?;
    println!("Cantor depth 10: slope {:.5} (ln 2 / ln 3 = {:.5})", cantor.slope, 2f64.ln() / 3f64.ln());
    let grid = box_dimension_estimate(&full_grid(2, 12)?, &geometric_eps(&rat(1, 8), &rat(1, 2), 8))?;
    println!("dyadic grid: slope {:.5}", grid.slope);
    for row in entropy_count(&cantor_points(14)?, 3, 12, &rat(1, 6))? {
        println!("n = {:>2}  count {:>5}  log(count)/n = {:.5}", row.n, row.count, row.rate);
    }
    Ok(())
}
