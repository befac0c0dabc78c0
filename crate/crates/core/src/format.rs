//! Text and JSON encodings of hitting-time results.
//!
//! Profiles are written as TSV with a `vertex<TAB>hitting_time` header and
//! values printed with 17 significant digits, which round-trips every f64.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::engine::{HittingProfile, Order, ProfileStart};
use crate::error::{Error, Result};
use crate::exact::HittingMatrix;

pub const PROFILE_HEADER: &str = "vertex\thitting_time";

/// Formats like C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_profile_tsv<W: Write>(out: &mut W, values: &[f64]) -> std::io::Result<()> {
    writeln!(out, "{PROFILE_HEADER}")?;
    for (v, &h) in values.iter().enumerate() {
        writeln!(out, "{v}\t{}", fmt_g17(h))?;
    }
    Ok(())
}

pub fn profile_tsv(values: &[f64]) -> String {
    let mut out = Vec::new();
    write_profile_tsv(&mut out, values).expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

/// Parses a profile TSV back into values indexed by vertex.
pub fn parse_profile_tsv(text: &str, origin: &Path) -> Result<Vec<f64>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, PROFILE_HEADER)) => {}
        _ => {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                message: format!("expected header {PROFILE_HEADER:?}"),
            })
        }
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        let bad = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let (v, h) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected two tab-separated fields".into()))?;
        let v: usize = v.parse().map_err(|_| bad(format!("bad vertex id {v:?}")))?;
        if v != values.len() {
            return Err(bad(format!("expected vertex {}, found {v}", values.len())));
        }
        values.push(h.parse().map_err(|_| bad(format!("bad value {h:?}")))?);
    }
    Ok(values)
}

/// JSON form of a single-start profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport<'a> {
    pub start: ProfileStart,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub order: Order,
    pub engine: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    pub passes: u64,
    pub values: &'a [f64],
}

impl<'a> ProfileReport<'a> {
    pub fn new(profile: &'a HittingProfile, engine: &'a str, passes: u64) -> Self {
        ProfileReport {
            start: profile.start,
            horizon: profile.horizon,
            order: profile.order,
            engine,
            wall_clock_seconds: None,
            passes,
            values: &profile.values,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

/// Square TSV: a header of target ids, then one row per start vertex.
pub fn matrix_tsv(h: &HittingMatrix) -> String {
    let n = h.n();
    let mut out = String::from("start");
    for j in 0..n {
        out.push('\t');
        out.push_str(&j.to_string());
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&i.to_string());
        for &x in h.row(i) {
            out.push('\t');
            out.push_str(&fmt_g17(x));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct MatrixJson<'a> {
    #[serde(rename = "T")]
    horizon: usize,
    method: &'a str,
    values: Vec<&'a [f64]>,
}

pub fn matrix_json(h: &HittingMatrix, method: &str) -> String {
    let doc = MatrixJson {
        horizon: h.horizon(),
        method,
        values: (0..h.n()).map(|i| h.row(i)).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("matrix serializes")
}

/// Reads start weights from `vertex<TAB>weight` lines. Vertices not listed
/// get weight zero; `#` lines are comments.
pub fn read_start_weights(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file =
        fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut weights = vec![0.0; n];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut fields = line.split_whitespace();
        let (Some(v), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad("expected `vertex<TAB>weight`".into()));
        };
        let v: usize = v.parse().map_err(|_| bad(format!("bad vertex id {v:?}")))?;
        let w: f64 = w.parse().map_err(|_| bad(format!("bad weight {w:?}")))?;
        if v >= n {
            return Err(bad(format!("vertex {v} out of range for n={n}")));
        }
        weights[v] += w;
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(fmt_g17(0.0), "0");
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(1.75), "1.75");
        assert_eq!(fmt_g17(10.0), "10");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt_g17(2.5e-7), "2.4999999999999999e-07");
        assert_eq!(fmt_g17(1e20), "1e+20");
        assert_eq!(fmt_g17(-3.5), "-3.5");
    }

    #[test]
    fn g17_round_trips() {
        for &x in &[
            0.1,
            9.999999999999998,
            1.2345678901234567,
            7.0 / 9.0,
            123456.789,
        ] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn profile_round_trip() {
        let values = vec![0.0, 1.75, 10.0, 1.0 / 7.0];
        let text = profile_tsv(&values);
        assert!(text.starts_with("vertex\thitting_time\n0\t0\n1\t1.75\n"));
        assert_eq!(parse_profile_tsv(&text, Path::new("x")).unwrap(), values);
        assert!(parse_profile_tsv("bad\n", Path::new("x")).is_err());
    }

    #[test]
    fn matrix_layout() {
        let h = HittingMatrix::new(2, 3, vec![0.0, 1.5, 2.0, 0.0]).unwrap();
        assert_eq!(matrix_tsv(&h), "start\t0\t1\n0\t0\t1.5\n1\t2\t0\n");
        assert!(matrix_json(&h, "recursive").contains("\"method\": \"recursive\""));
    }

    #[test]
    fn start_weights_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("start.tsv");
        fs::write(&path, "# weights\n0\t1\n2\t3\n").unwrap();
        assert_eq!(read_start_weights(&path, 3).unwrap(), vec![1.0, 0.0, 3.0]);
        fs::write(&path, "5\t1\n").unwrap();
        assert!(matches!(
            read_start_weights(&path, 3),
            Err(Error::Parse { .. })
        ));
    }
}
