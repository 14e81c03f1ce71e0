//! Chains, valuations `|n|_D`, the counting function `M(N)` and the growth hypotheses.

use mlcl::interval::rat;
use mlcl::PsavSequence;

fn main() -> mlcl::Result<()> {
    let d = PsavSequence::parse("factorial")?;
    println!("terms: {:?}", d.terms(8)?.iter().map(|t| t.to_string()).collect::<Vec<_>>());
    for n in [12u64, 720, 721] {
        let v = d.value_u64(n)?;
        println!("|{n}|_D = 1/{} (index {})", v.term, v.index);
    }
    println!("M(10^4) = {}", d.counting_u64(10_000)?);

    let g = d.check_growth_hypothesis(&rat(1, 2), 20, 4096)?;
    println!("ln n_k <= k^(1/2) up to k = 20: {} (first failure {:?})", g.holds, g.first_failure);
    let b = PsavSequence::parse("bounded-ratio:5:1")?;
    println!("bounded-ratio:5:1 largest ratio up to k = 40: {}", b.check_bounded_ratios(40)?);
    Ok(())
}
