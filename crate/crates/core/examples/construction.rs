//! Binning, selection and certified ratios of the chain construction, then the gamma search.

use mlcl::interval::rat;
use mlcl::orbit::{construct_chain, find_gamma, gamma_step_check, ConstructionParams};
use mlcl::{PsavSequence, RealNumber};

fn main() -> mlcl::Result<()> {
    let params = ConstructionParams::new(2, PsavSequence::parse("geometric:3")?, 64, rat(1, 2));
    let r = construct_chain(&params)?;
    println!(
        "M = {}, bins {:?}, selected {}, all certified {}, formulas agree {}",
        r.m_bins,
        r.bin_counts,
        r.selected.len(),
        r.all_certified,
        r.all_agree
    );
    println!("minimal pairwise log-ratio ~ {:.6}", r.min_log_ratio.mid_f64());

    // A small instance where the gamma step is within reach.
    let small = construct_chain(&ConstructionParams::new(2, PsavSequence::parse("geometric:3")?, 4, rat(1, 2)))?;
    let w = find_gamma(&RealNumber::golden(), 2, &small.t[0], 40, 4096)?;
    println!("gamma for t_1 = {}: (i, j, b) = ({}, {}, {}), gamma ~ {:.6}", w.t1, w.i, w.j, w.b, w.gamma.mid_f64());
    for s in gamma_step_check(&small, &w.gamma) {
        println!("  t = {:>4}  t gamma ~ {:.4}  in range {}  gap ok {:?}", s.t, s.t_gamma.mid_f64(), s.in_range, s.gap_ok);
    }
    Ok(())
}
