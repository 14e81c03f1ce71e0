//! Greedy separated counts, covers, and the difference-set inequality on orbit points.

use mlcl::interval::rat;
use mlcl::orbit::{cover_upper_bound, difference_set_check, orbit_points, separated_count};
use mlcl::{PsavSequence, RealNumber};

fn main() -> mlcl::Result<()> {
    let pts = orbit_points(
        &RealNumber::golden(),
        2,
        &PsavSequence::parse("geometric:3")?,
        6,
        6,
        &rat(1, 1 << 40),
        4096,
    )?;
    println!("{} orbit points", pts.len());
    for e in [rat(1, 10), rat(1, 100), rat(1, 1000)] {
        let s = separated_count(&pts, &e)?;
        let c = difference_set_check(&pts, &e)?;
        println!(
            "eps = {e}: greedy {} cover {}  |A-A| greedy {} <= 2 cover^2 = {}: {}",
            s.count,
            cover_upper_bound(&pts, &e)?,
            c.greedy_difference,
            c.bound,
            c.holds
        );
    }
    Ok(())
}
