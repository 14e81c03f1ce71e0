//! Shared output helpers: CSV tables and JSON encodings of exact values.

use std::fmt::Write as _;

use num_rational::BigRational;
use serde::ser::SerializeStruct;
use serde::Serializer;

use crate::interval::{format_rational, Interval, Rounding};

/// JSON documents written by this crate carry this version.
pub const SCHEMA_VERSION: u32 = 1;

/// Significant digits used for non-terminating decimals.
pub const CSV_DIGITS: usize = 12;

pub fn ser_rational<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(x))
}

pub fn ser_uint<S: Serializer>(x: &num_bigint::BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub fn ser_uints<S: Serializer>(xs: &[num_bigint::BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

pub fn ser_interval<S: Serializer>(x: &Interval, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Interval", 2)?;
    st.serialize_field("lo", &rational_string(x.lo()))?;
    st.serialize_field("hi", &rational_string(x.hi()))?;
    st.end()
}

pub fn ser_intervals<S: Serializer>(xs: &[Interval], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&IntervalRef(x))?;
    }
    seq.end()
}

struct IntervalRef<'a>(&'a Interval);

impl serde::Serialize for IntervalRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_interval(self.0, s)
    }
}

/// `p/q` (or an integer) when short, otherwise an outward-rounded decimal.
pub fn rational_string(x: &BigRational) -> String {
    if x.denom().bits() <= 64 && x.numer().bits() <= 128 {
        if x.denom() == &1.into() {
            x.numer().to_string()
        } else {
            format!("{}/{}", x.numer(), x.denom())
        }
    } else {
        format_rational(x, CSV_DIGITS + 8, Rounding::Nearest)
    }
}

pub fn lo_str(x: &BigRational) -> String {
    format_rational(x, CSV_DIGITS, Rounding::Down)
}

pub fn hi_str(x: &BigRational) -> String {
    format_rational(x, CSV_DIGITS, Rounding::Up)
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, Default)]
pub struct Csv {
    header: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Csv {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        assert_eq!(cells.len(), self.header.len(), "row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            self.body.push_str(c.as_ref());
        }
        self.body.push('\n');
    }

    pub fn rows(&self) -> usize {
        self.body.lines().count()
    }

    pub fn render(&self) -> String {
        let mut s = String::with_capacity(self.body.len() + 64);
        let _ = writeln!(s, "{}", self.header.join(","));
        s.push_str(&self.body);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["N", "S"]);
        c.row(&["4", "8"]);
        assert_eq!(c.render(), "N,S\n4,8\n");
    }

    #[test]
    fn rational_strings() {
        assert_eq!(rational_string(&rat(8, 1)), "8");
        assert_eq!(rational_string(&rat(-3, 6)), "-1/2");
        assert_eq!(lo_str(&rat(1, 3)), "3.33333333333e-1");
        assert_eq!(hi_str(&rat(1, 3)), "3.33333333334e-1");
    }
}
