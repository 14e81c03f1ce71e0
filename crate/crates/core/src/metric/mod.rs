//! Metric sums: valuation and counting sums, measures of the approximation sets,
//! the divergence dichotomy, Duffin-Schaeffer sums and the restricted totient bound.

mod dichotomy;
mod phi;
mod psi;
mod series;
mod sums;

pub use dichotomy::{
    abel_check, dichotomy_sums, ds_criterion, measure_an, measure_from_psi, standard_tail_bound, AbelCheck,
    DichotomyReport, DsReport, DICHOTOMY_COLUMNS, DS_COLUMNS, GROWTH_THRESHOLD,
};
pub use phi::{
    check_dhyp, phi_bound_sweep, phi_constant_arm, phi_floor, phi_restricted_sum, DhypReport, DhypRow, PhiBound,
    PhiSum,
};
pub use psi::{PsiEval, PsiFunction};
pub use series::{relative_increment, SeriesRow, SumSeries, EXACT_SUM_LIMIT};
pub use sums::{
    asymp_check, geometric_grid, sum_counting, sum_counting_naive, sum_inverse_valuation, sum_inverse_valuation_naive,
    AsympReport, AsympRow,
};
