//! Polyhedron files in the layout used by cdd (`.ine` / `.ext`).
//!
//! ```text
//! * comment lines start with '*'
//! H-representation
//! linearity 2 1 2
//! begin
//!  5 4 rational
//!  -1 1 1 1
//!  ...
//! end
//! ```
//!
//! An H-row `[b, a_1 … a_d]` means `b + a·v ≥ 0`, or `= 0` when its 1-based
//! index is listed on the `linearity` line. A V-row starts with `1` for a
//! vertex and `0` for a ray. Entries are integers or `num/den`.

use crate::error::{Error, Result};
use crate::rational::{format_q, parse_q, Q};

use super::{Constraint, PolytopeH, PolytopeV};

fn row_text(first: &Q, rest: &[Q]) -> String {
    let mut s = String::from(" ");
    s.push_str(&format_q(first));
    for x in rest {
        s.push(' ');
        s.push_str(&format_q(x));
    }
    s
}

fn comments(lines: &[String]) -> String {
    lines.iter().map(|l| format!("* {l}\n")).collect()
}

/// Equalities come first, then inequalities.
pub fn write_h(h: &PolytopeH, header: &[String]) -> String {
    let mut s = comments(header);
    s.push_str("H-representation\n");
    let ne = h.equalities.len();
    if ne > 0 {
        s.push_str(&format!("linearity {ne}"));
        for i in 1..=ne {
            s.push_str(&format!(" {i}"));
        }
        s.push('\n');
    }
    s.push_str("begin\n");
    s.push_str(&format!(" {} {} rational\n", ne + h.inequalities.len(), h.dim + 1));
    for c in h.equalities.iter().chain(&h.inequalities) {
        s.push_str(&row_text(&c.offset, &c.normal));
        s.push('\n');
    }
    s.push_str("end\n");
    s
}

pub fn write_v(v: &PolytopeV, header: &[String]) -> String {
    let mut s = comments(header);
    s.push_str("V-representation\nbegin\n");
    s.push_str(&format!(" {} {} rational\n", v.vertices.len() + v.rays.len(), v.dim + 1));
    let one = Q::from_integer(1.into());
    let zero = Q::from_integer(0.into());
    for p in &v.vertices {
        s.push_str(&row_text(&one, p));
        s.push('\n');
    }
    for r in &v.rays {
        s.push_str(&row_text(&zero, r));
        s.push('\n');
    }
    s.push_str("end\n");
    s
}

struct Body {
    kind: String,
    linearity: Vec<usize>,
    rows: Vec<Vec<Q>>,
    cols: usize,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: 1,
        message: message.into(),
    }
}

fn parse_body(text: &str) -> Result<Body> {
    let mut kind = None;
    let mut linearity = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    loop {
        let Some((ln, l)) = lines.next() else {
            return Err(perr(text.lines().count(), "missing 'begin'"));
        };
        if l.is_empty() || l.starts_with('*') {
            continue;
        }
        if l == "H-representation" || l == "V-representation" {
            kind = Some(l.to_string());
        } else if let Some(rest) = l.strip_prefix("linearity") {
            let nums: Vec<usize> = rest
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| perr(ln, format!("bad linearity entry '{t}'"))))
                .collect::<Result<_>>()?;
            let Some((&k, idx)) = nums.split_first() else {
                return Err(perr(ln, "empty linearity line"));
            };
            if idx.len() != k {
                return Err(perr(ln, format!("linearity declares {k} rows but lists {}", idx.len())));
            }
            linearity = idx.to_vec();
        } else if l == "begin" {
            break;
        } else {
            return Err(perr(ln, format!("unexpected line '{l}'")));
        }
    }
    let kind = kind.unwrap_or_else(|| "H-representation".to_string());
    let (ln, size) = lines.next().ok_or_else(|| perr(0, "missing size line"))?;
    let parts: Vec<&str> = size.split_whitespace().collect();
    if parts.len() < 2 {
        return Err(perr(ln, "size line must be '<rows> <cols> rational'"));
    }
    let nrows: usize = parts[0].parse().map_err(|_| perr(ln, "bad row count"))?;
    let cols: usize = parts[1].parse().map_err(|_| perr(ln, "bad column count"))?;
    if let Some(t) = parts.get(2) {
        if *t != "rational" && *t != "integer" {
            return Err(perr(ln, format!("unsupported number type '{t}'")));
        }
    }
    let mut rows = Vec::with_capacity(nrows);
    for (ln, l) in lines.by_ref() {
        if l == "end" {
            if rows.len() != nrows {
                return Err(perr(ln, format!("expected {nrows} rows, found {}", rows.len())));
            }
            for &i in &linearity {
                if i == 0 || i > nrows {
                    return Err(Error::Schema(format!("linearity index {i} out of range")));
                }
            }
            return Ok(Body {
                kind,
                linearity,
                rows,
                cols,
            });
        }
        if l.is_empty() || l.starts_with('*') {
            continue;
        }
        let row: Vec<Q> = l
            .split_whitespace()
            .map(|t| parse_q(t).map_err(|_| perr(ln, format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(perr(ln, format!("row has {} entries, expected {cols}", row.len())));
        }
        rows.push(row);
    }
    Err(perr(text.lines().count(), "missing 'end'"))
}

pub fn parse_h(text: &str) -> Result<PolytopeH> {
    let b = parse_body(text)?;
    if b.kind != "H-representation" {
        return Err(Error::Schema("expected an H-representation".into()));
    }
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for (i, r) in b.rows.into_iter().enumerate() {
        let c = Constraint::new(r[1..].to_vec(), r[0].clone());
        if b.linearity.contains(&(i + 1)) {
            equalities.push(c);
        } else {
            inequalities.push(c);
        }
    }
    Ok(PolytopeH {
        dim: b.cols - 1,
        inequalities,
        equalities,
    })
}

pub fn parse_v(text: &str) -> Result<PolytopeV> {
    let b = parse_body(text)?;
    if b.kind != "V-representation" {
        return Err(Error::Schema("expected a V-representation".into()));
    }
    let mut vertices = Vec::new();
    let mut rays = Vec::new();
    for r in b.rows {
        let tail = r[1..].to_vec();
        if r[0] == Q::from_integer(1.into()) {
            vertices.push(tail);
        } else if r[0] == Q::from_integer(0.into()) {
            rays.push(tail);
        } else {
            return Err(Error::Schema("V-rows must start with 0 or 1".into()));
        }
    }
    Ok(PolytopeV {
        dim: b.cols - 1,
        vertices,
        rays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn h_round_trip() {
        let h = PolytopeH {
            dim: 2,
            inequalities: vec![Constraint::new(vec![qi(1), q(-1, 2)], qi(0))],
            equalities: vec![Constraint::new(vec![qi(1), qi(1)], qi(-1))],
        };
        let text = write_h(&h, &["test".into()]);
        assert!(text.contains("linearity 1 1"));
        assert_eq!(parse_h(&text).unwrap(), h);
    }

    #[test]
    fn v_round_trip() {
        let v = PolytopeV {
            dim: 2,
            vertices: vec![vec![q(1, 3), qi(0)]],
            rays: vec![],
        };
        assert_eq!(parse_v(&write_v(&v, &[])).unwrap(), v);
    }

    #[test]
    fn bad_row_reports_line() {
        let text = "H-representation\nbegin\n 1 3 rational\n 0 1\nend\n";
        match parse_h(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
