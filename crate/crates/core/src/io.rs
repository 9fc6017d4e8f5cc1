//! Point-set text format: one point per line, whitespace-separated coordinates,
//! an optional trailing `w=<weight>` token, `#` comment lines.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Raw points with optional weights, as read from text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawPoints {
    pub points: Vec<Vec<f64>>,
    /// `Some` when at least one line carried a weight; missing weights default to 1.
    pub weights: Option<Vec<f64>>,
    /// 1-based source line of every point.
    pub lines: Vec<usize>,
}

impl RawPoints {
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.len())
    }
}

pub fn parse_points(text: &str) -> Result<RawPoints> {
    read_points(text.as_bytes())
}

pub fn read_points<R: BufRead>(reader: R) -> Result<RawPoints> {
    let mut out = RawPoints::default();
    let mut weights = Vec::new();
    let mut any_weight = false;
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut coords = Vec::new();
        let mut weight = None;
        for tok in t.split_whitespace() {
            if weight.is_some() {
                return Err(Error::Parse { line: lineno, msg: "token after the weight".into() });
            }
            if let Some(w) = tok.strip_prefix("w=") {
                let w: f64 = w
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("bad weight `{w}`") })?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Parse { line: lineno, msg: "weight must be finite and nonnegative".into() });
                }
                weight = Some(w);
            } else {
                let x: f64 = tok
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("bad coordinate `{tok}`") })?;
                if !x.is_finite() {
                    return Err(Error::Parse { line: lineno, msg: "non-finite coordinate".into() });
                }
                coords.push(x);
            }
        }
        if coords.is_empty() {
            return Err(Error::Parse { line: lineno, msg: "no coordinates".into() });
        }
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::DimensionMismatch { expected: d, found: coords.len(), line: Some(lineno) })
            }
            _ => {}
        }
        any_weight |= weight.is_some();
        weights.push(weight.unwrap_or(1.0));
        out.points.push(coords);
        out.lines.push(lineno);
    }
    if any_weight {
        out.weights = Some(weights);
    }
    Ok(out)
}

pub fn write_points<W: Write>(mut w: W, points: &[Vec<f64>], weights: Option<&[f64]>) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        let mut line = p.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        if let Some(ws) = weights {
            line.push_str(&format!(" w={:?}", ws[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
