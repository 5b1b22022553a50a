//! CSV emission and parsing for curve points.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::simengine::CurvePoint;

pub const CSV_HEADER: &str = "snr_db,scheme,mi_bits_per_use,stderr,trials";

/// `%.12g`-style rendering: 12 significant digits, trailing zeros dropped.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn order(a: &CurvePoint, b: &CurvePoint) -> Ordering {
    a.scheme
        .cmp(&b.scheme)
        .then_with(|| a.snr_db.total_cmp(&b.snr_db))
}

/// Rows sorted by scheme label, then SNR.
pub fn to_csv(points: &[CurvePoint]) -> String {
    let mut rows: Vec<&CurvePoint> = points.iter().collect();
    rows.sort_by(|a, b| order(a, b));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sig12(p.snr_db),
            p.scheme,
            sig12(p.mi_bits_per_use),
            sig12(p.stderr),
            p.trials
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => return Err(Error::Parse(format!("unexpected CSV header `{h}`"))),
        None => return Err(Error::Parse("CSV is empty".into())),
    }
    let points = lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| Error::Parse(format!("CSV row {}: {what} in `{line}`", i + 2));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            if f[1].is_empty() {
                return Err(bad("empty scheme"));
            }
            Ok(CurvePoint {
                snr_db: num(f[0], "bad snr_db")?,
                scheme: f[1].to_string(),
                mi_bits_per_use: num(f[2], "bad mi_bits_per_use")?,
                stderr: num(f[3], "bad stderr")?,
                trials: f[4].parse().map_err(|_| bad("bad trials"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(Error::Parse("CSV has no data rows".into()));
    }
    Ok(points)
}
