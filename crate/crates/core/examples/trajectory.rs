//! Running minimum of `n |n|_a |n|_D ||n alpha||` and the bad-constant test.

use mlcl::interval::rat;
use mlcl::trajectory::{bad_c_test, infimum_scan, ScanOptions};
use mlcl::{PsavSequence, RealNumber};

fn main() -> mlcl::Result<()> {
    let alpha = RealNumber::golden();
    let d = PsavSequence::parse("geometric:3")?;
    let scan = infimum_scan(&alpha, Some(2), &d, &ScanOptions::new(1_000_000))?;
    for r in &scan.records {
        println!("n = {:>7}  running min ~ {:.6e}", r.n, r.running_min.mid_f64());
    }

    let hit = bad_c_test(&alpha, &rat(2, 5), 10_000, &rat(1, 1 << 40), 4096)?;
    println!("first n with n ||n phi|| <= 2/5: {hit:?}");
    Ok(())
}
