//! Plain-text complex matrix blocks: one row per line, entries written as
//! `a+bi` with 17 significant digits so every `f64` round-trips exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matkit::{CMatrix, C64};

pub fn format_complex(z: C64) -> String {
    let (sign, im) = if z.im.is_sign_negative() {
        ('-', -z.im)
    } else {
        ('+', z.im)
    };
    format!("{:.16e}{}{:.16e}i", z.re, sign, im)
}

pub fn parse_complex(tok: &str) -> Result<C64> {
    let bad = || Error::Parse(format!("malformed complex entry `{tok}`"));
    let body = tok.strip_suffix('i').ok_or_else(bad)?;
    let bytes = body.as_bytes();
    // split at the last sign that is not an exponent sign and not the leading sign
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im_abs: f64 = body[split + 1..].parse().map_err(|_| bad())?;
    let im = if bytes[split] == b'-' {
        -im_abs
    } else {
        im_abs
    };
    Ok(C64::new(re, im))
}

pub fn write_matrix(out: &mut String, m: &CMatrix) {
    for i in 0..m.rows() {
        let line: Vec<String> = (0..m.cols()).map(|j| format_complex(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

/// Line cursor over non-empty, non-comment lines.
pub(crate) struct Lines<'a> {
    inner: std::iter::Filter<std::str::Lines<'a>, fn(&&str) -> bool>,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        fn keep(l: &&str) -> bool {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        }
        Self {
            inner: text.lines().filter(keep as fn(&&str) -> bool),
        }
    }

    pub fn next_line(&mut self) -> Result<&'a str> {
        self.inner
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of input".into()))
    }

    pub fn header(&mut self, fields: usize) -> Result<Vec<usize>> {
        let line = self.next_line()?;
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("malformed header `{line}`")))?;
        if vals.len() != fields {
            return Err(Error::Parse(format!(
                "header `{line}` should have {fields} fields"
            )));
        }
        Ok(vals)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Result<CMatrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next_line()?;
            let row: Vec<C64> = line
                .split_whitespace()
                .map(parse_complex)
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        CMatrix::new(rows, cols, data)
    }

    pub fn finish(mut self) -> Result<()> {
        match self.inner.next() {
            None => Ok(()),
            Some(l) => Err(Error::Parse(format!("trailing content `{l}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_format() {
        assert_eq!(
            format_complex(C64::new(1.0, -0.5)),
            "1.0000000000000000e0-5.0000000000000000e-1i"
        );
        assert_eq!(parse_complex("1e-3-2e5i").unwrap(), C64::new(1e-3, -2e5));
        assert_eq!(parse_complex("-1.5+0i").unwrap(), C64::new(-1.5, 0.0));
        assert!(parse_complex("1.0").is_err());
        assert!(parse_complex("abc+1i").is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(re in proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL,
                                im in proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL) {
            let z = C64::new(re, im);
            let back = parse_complex(&format_complex(z)).unwrap();
            prop_assert_eq!(back.re.to_bits(), re.to_bits());
            prop_assert_eq!(back.im.to_bits(), im.to_bits());
        }
    }
}
