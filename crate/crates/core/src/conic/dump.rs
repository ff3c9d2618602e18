//! Line-oriented sparse-triplet text format.
//!
//! ```text
//! conic 1
//! vars <n>
//! const <c>
//! lin <i> <c_i>
//! quad <i> <j> <v>
//! bound <i> <lo> <hi>
//! eq <row> <rhs>
//! eqa <row> <i> <a>
//! le <row> <rhs>
//! lea <row> <i> <a>
//! soc <block> <dim>
//! soca <block> <k> <i> <a>
//! socc <block> <k> <c>
//! ```
//!
//! Numbers use the shortest round-trip representation, so a dump reloads
//! bit-exactly. Lines starting with `#` are comments.

use std::fmt::Write;

use super::{AffineExpr, ConicProgram, LinearRow, SocBlock};
use crate::error::{Error, Result};

pub fn dump_program(p: &ConicProgram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "conic 1");
    let _ = writeln!(s, "vars {}", p.n_vars);
    let _ = writeln!(s, "const {}", p.constant);
    for (i, &c) in p.linear.iter().enumerate() {
        if c != 0.0 {
            let _ = writeln!(s, "lin {i} {c}");
        }
    }
    for &(i, j, v) in &p.quad {
        let _ = writeln!(s, "quad {i} {j} {v}");
    }
    for i in 0..p.n_vars {
        let (lo, hi) = (p.lower[i], p.upper[i]);
        if lo != f64::NEG_INFINITY || hi != f64::INFINITY {
            let _ = writeln!(s, "bound {i} {lo} {hi}");
        }
    }
    for (k, r) in p.eq_rows.iter().enumerate() {
        let _ = writeln!(s, "eq {k} {}", r.rhs);
        for &(i, a) in &r.coeffs {
            let _ = writeln!(s, "eqa {k} {i} {a}");
        }
    }
    for (k, r) in p.ineq_rows.iter().enumerate() {
        let _ = writeln!(s, "le {k} {}", r.rhs);
        for &(i, a) in &r.coeffs {
            let _ = writeln!(s, "lea {k} {i} {a}");
        }
    }
    for (b, blk) in p.soc_blocks.iter().enumerate() {
        let _ = writeln!(s, "soc {b} {}", blk.exprs.len());
        for (k, e) in blk.exprs.iter().enumerate() {
            if e.constant != 0.0 {
                let _ = writeln!(s, "socc {b} {k} {}", e.constant);
            }
            for &(i, a) in &e.coeffs {
                let _ = writeln!(s, "soca {b} {k} {i} {a}");
            }
        }
    }
    s
}

pub fn load_program(text: &str) -> Result<ConicProgram> {
    let mut p: Option<ConicProgram> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line_no = ln + 1;
        let err = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
        let f: Vec<&str> = line.split_whitespace().collect();
        let num = |k: usize| -> Result<f64> {
            f.get(k).and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| err("expected a number"))
        };
        let idx = |k: usize| -> Result<usize> {
            f.get(k).and_then(|t| t.parse::<usize>().ok()).ok_or_else(|| err("expected an index"))
        };
        match f[0] {
            "conic" => {
                if f.get(1) != Some(&"1") {
                    return Err(err("unsupported format version"));
                }
            }
            "vars" => p = Some(ConicProgram::new(idx(1)?)),
            tag => {
                let p = p.as_mut().ok_or_else(|| err("'vars' must precede data lines"))?;
                let var = |k: usize| -> Result<usize> {
                    let i = idx(k)?;
                    if i >= p.n_vars {
                        return Err(err("variable index out of range"));
                    }
                    Ok(i)
                };
                match tag {
                    "const" => p.constant = num(1)?,
                    "lin" => {
                        let i = var(1)?;
                        p.linear[i] = num(2)?;
                    }
                    "quad" => {
                        let t = (var(1)?, var(2)?, num(3)?);
                        p.quad.push(t);
                    }
                    "bound" => {
                        let i = var(1)?;
                        p.lower[i] = num(2)?;
                        p.upper[i] = num(3)?;
                    }
                    "eq" | "le" => {
                        let rows = if tag == "eq" { &mut p.eq_rows } else { &mut p.ineq_rows };
                        if idx(1)? != rows.len() {
                            return Err(err("rows must be declared in order"));
                        }
                        rows.push(LinearRow::new(Vec::new(), num(2)?));
                    }
                    "eqa" | "lea" => {
                        let (k, i, a) = (idx(1)?, var(2)?, num(3)?);
                        let rows = if tag == "eqa" { &mut p.eq_rows } else { &mut p.ineq_rows };
                        rows.get_mut(k).ok_or_else(|| err("coefficient for undeclared row"))?.coeffs.push((i, a));
                    }
                    "soc" => {
                        if idx(1)? != p.soc_blocks.len() {
                            return Err(err("cone blocks must be declared in order"));
                        }
                        p.soc_blocks.push(SocBlock { exprs: vec![AffineExpr::default(); idx(2)?] });
                    }
                    "soca" | "socc" => {
                        let (b, k) = (idx(1)?, idx(2)?);
                        let (i, a) = if tag == "soca" { (var(3)?, num(4)?) } else { (0, num(3)?) };
                        let e = p
                            .soc_blocks
                            .get_mut(b)
                            .and_then(|blk| blk.exprs.get_mut(k))
                            .ok_or_else(|| err("entry for undeclared cone row"))?;
                        if tag == "soca" {
                            e.coeffs.push((i, a));
                        } else {
                            e.constant = a;
                        }
                    }
                    _ => return Err(err(&format!("unknown record '{tag}'"))),
                }
            }
        }
    }
    p.ok_or_else(|| Error::Parse { line: 0, msg: "missing 'vars' record".into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut p = ConicProgram::new(3);
        p.constant = 0.1;
        p.linear = vec![1.0 / 3.0, 0.0, -2.5e-7];
        p.quad = vec![(0, 0, 0.7), (0, 2, 1e-3)];
        p.lower = vec![0.0, f64::NEG_INFINITY, 0.81];
        p.upper = vec![1.0, 2.0, 1.21];
        p.add_eq(vec![(0, 1.0), (1, -std::f64::consts::PI)], 0.3);
        p.add_le(vec![(2, 1.0)], f64::INFINITY);
        p.add_soc(
            AffineExpr::new(vec![(1, 1.0)], 1.0),
            vec![AffineExpr::var(0, 2.0), AffineExpr::new(vec![], -1.0)],
        );
        let back = load_program(&dump_program(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn reports_line_of_bad_record() {
        let e = load_program("conic 1\nvars 2\nlin 0 1\nlin 7 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }));
    }
}
