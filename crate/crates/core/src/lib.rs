pub mod cli;
pub mod error;
pub mod fast;
pub mod interval;
pub mod logs;
pub mod metric;
pub mod montecarlo;
pub mod orbit;
pub mod primes;
pub mod psav;
pub mod real;
pub mod report;
pub mod trajectory;

pub use error::{Error, Result};
pub use interval::Interval;
pub use psav::{Family, PsavSequence};
pub use real::RealNumber;
