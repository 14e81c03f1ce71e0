//! Divergence dichotomy and Duffin-Schaeffer ratios for a standard `psi`.

use mlcl::metric::{dichotomy_sums, ds_criterion, PsiFunction};
use mlcl::PsavSequence;

fn main() -> mlcl::Result<()> {
    let d = PsavSequence::parse("geometric:2")?;
    let checkpoints = [100, 1_000, 10_000, 100_000];
    for e in [1, 2] {
        let psi = PsiFunction::standard(e);
        let r = dichotomy_sums(&d, &psi, &checkpoints)?;
        println!("e = {e}: behaviour {:?}, increments {:?}", r.behaviour, r.relative_increments);
    }
    let ds = ds_criterion(&d, &PsiFunction::standard(1), &checkpoints)?;
    for (n, r) in checkpoints.iter().zip(&ds.ratio) {
        println!("N = {n:>6}  DS ratio ~ {:.4}", r.mid_f64());
    }
    Ok(())
}
