//! Solution counts of `||n alpha|| <= psi(n) / |n|_D` for seeded random alpha.

use mlcl::metric::PsiFunction;
use mlcl::montecarlo::{run_mc, McConfig};
use mlcl::PsavSequence;

fn main() -> mlcl::Result<()> {
    for e in [1, 2] {
        let cfg = McConfig {
            d: PsavSequence::parse("geometric:2")?,
            psi: PsiFunction::standard(e),
            samples: 20,
            n_max: 100_000,
            seed: 7,
            checkpoints: McConfig::default_checkpoints(100_000),
            cap_bits: 4096,
        };
        let r = run_mc(&cfg)?;
        println!("e = {e}: checkpoints {:?}", r.checkpoints);
        println!("  mean counts {:?}", r.mean);
        println!("  growth {:?}, plateau {:?}, undecided {}", r.growth, r.plateau, r.undecided_total);
    }
    Ok(())
}
