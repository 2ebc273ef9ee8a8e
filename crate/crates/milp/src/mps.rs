//! Fixed-format MPS.
//!
//! Layout written by [`write_mps`] (1-based character columns):
//!
//! | field | columns | content                         |
//! |-------|---------|---------------------------------|
//! | 1     | 2-3     | row type / bound type           |
//! | 2     | 5-12    | column name, `RHS`, `BND`       |
//! | 3     | 15-22   | row name / column name (bounds) |
//! | 4     | 25-36   | value                           |
//! | 5     | 40-47   | second row name                 |
//! | 6     | 50-61   | second value                    |
//!
//! Columns are named `C0000001`.., rows `R0000001`.., the objective row `OBJ`;
//! the original names are listed in `*` comment lines before `NAME`. Integer
//! columns sit between `INTORG`/`INTEND` markers with explicit `LO`/`UP` bounds,
//! binary columns additionally carry a `BV` bound. Values use the shortest
//! representation that round-trips, falling back to exponent form to stay within
//! 12 characters.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::model::{LinearModel, Sense, VarId, VarKind};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn column_name(j: usize) -> String {
    format!("C{:07}", j + 1)
}

pub fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

pub fn format_number(v: f64) -> String {
    let s = format!("{}", v);
    if s.len() <= 12 {
        return s;
    }
    for prec in (0..=11).rev() {
        let e = format!("{:.*e}", prec, v);
        if e.len() <= 12 {
            return e;
        }
    }
    format!("{:e}", v)
}

fn field_line(f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) -> String {
    let mut line = format!(" {:<2} {:<8}  {:<8}  {:<12}", f1, f2, f3, f4);
    if !f5.is_empty() {
        let _ = write!(line, "   {:<8}  {:<12}", f5, f6);
    }
    line.trim_end().to_string()
}

pub fn to_mps_string(model: &LinearModel, name: &str) -> String {
    let mut out = String::new();
    for (j, v) in model.variables.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", column_name(j), v.name);
    }
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", row_name(i), c.name);
    }
    let _ = writeln!(out, "NAME          {}", name);
    out.push_str("ROWS\n");
    out.push_str(" N  OBJ\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let t = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {:<2} {}", t, row_name(i));
    }

    let mut col_entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.num_vars()];
    for (j, v) in model.variables.iter().enumerate() {
        if v.cost != 0.0 {
            col_entries[j].push(("OBJ".to_string(), v.cost));
        }
    }
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            col_entries[v.0].push((row_name(i), a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, v) in model.variables.iter().enumerate() {
        let int = v.kind.is_integral();
        if int != in_int {
            let tag = if int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "{}", field_line("", &format!("M{:07}", marker), "'MARKER'", "", tag, ""));
            marker += 1;
            in_int = int;
        }
        let cname = column_name(j);
        let entries = &col_entries[j];
        if entries.is_empty() {
            let _ = writeln!(out, "{}", field_line("", &cname, "OBJ", "0", "", ""));
        }
        for pair in entries.chunks(2) {
            let (r1, a1) = &pair[0];
            let line = match pair.get(1) {
                Some((r2, a2)) => field_line("", &cname, r1, &format_number(*a1), r2, &format_number(*a2)),
                None => field_line("", &cname, r1, &format_number(*a1), "", ""),
            };
            let _ = writeln!(out, "{}", line);
        }
    }
    if in_int {
        let _ = writeln!(out, "{}", field_line("", &format!("M{:07}", marker), "'MARKER'", "", "'INTEND'", ""));
    }

    out.push_str("RHS\n");
    for (i, c) in model.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "{}", field_line("", "RHS", &row_name(i), &format_number(c.rhs), "", ""));
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.variables.iter().enumerate() {
        let cname = column_name(j);
        let mut bound = |t: &str, val: Option<f64>| {
            let num = val.map(format_number).unwrap_or_default();
            let _ = writeln!(out, "{}", field_line(t, "BND", &cname, &num, "", ""));
        };
        match v.kind {
            VarKind::Binary if v.lower == 0.0 && v.upper == 1.0 => bound("BV", None),
            VarKind::Binary | VarKind::Integer => {
                if v.lower == v.upper {
                    bound("FX", Some(v.lower));
                    continue;
                }
                if v.lower.is_finite() {
                    bound("LO", Some(v.lower));
                } else {
                    bound("MI", None);
                }
                if v.upper.is_finite() {
                    bound("UP", Some(v.upper));
                } else {
                    bound("PL", None);
                }
            }
            VarKind::Continuous => {
                if v.lower == v.upper {
                    bound("FX", Some(v.lower));
                } else if !v.lower.is_finite() && !v.upper.is_finite() {
                    bound("FR", None);
                } else {
                    if !v.lower.is_finite() {
                        bound("MI", None);
                    } else if v.lower != 0.0 || v.upper < 0.0 {
                        bound("LO", Some(v.lower));
                    }
                    if v.upper.is_finite() {
                        bound("UP", Some(v.upper));
                    }
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(model: &LinearModel, name: &str, path: &Path) -> Result<(), MpsError> {
    std::fs::write(path, to_mps_string(model, name))?;
    Ok(())
}

pub fn read_mps(path: &Path) -> Result<LinearModel, MpsError> {
    let text = std::fs::read_to_string(path)?;
    parse_mps(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

pub fn parse_mps(text: &str) -> Result<LinearModel, MpsError> {
    let mut model = LinearModel::new();
    let mut section = Section::None;
    let mut objective: Option<String> = None;
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut cols: HashMap<String, VarId> = HashMap::new();
    let mut row_terms: Vec<Vec<(VarId, f64)>> = Vec::new();
    let mut in_int = false;
    let mut bv: Vec<bool> = Vec::new();
    let mut explicit_int_bounds: Vec<bool> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| MpsError::Parse { line, message };
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        if !raw.starts_with(' ') {
            let head = raw.split_whitespace().next().unwrap_or("");
            section = match head {
                "NAME" => Section::None,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(err(format!("unsupported section `{}`", other))),
            };
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{}`", s)));
        match section {
            Section::Rows => {
                if f.len() != 2 {
                    return Err(err("expected row type and name".into()));
                }
                let sense = match f[0] {
                    "N" => {
                        if objective.is_none() {
                            objective = Some(f[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(err(format!("unknown row type `{}`", t))),
                };
                let idx = model.add_constraint(f[1], Vec::new(), sense, 0.0);
                rows.insert(f[1].to_string(), idx);
                row_terms.push(Vec::new());
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    in_int = match f[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        t => return Err(err(format!("unknown marker `{}`", t))),
                    };
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(err("expected 3 or 5 fields".into()));
                }
                let var = match cols.get(f[0]) {
                    Some(&v) => v,
                    None => {
                        let kind = if in_int { VarKind::Integer } else { VarKind::Continuous };
                        let v = model.add_var(f[0], kind, 0.0, f64::INFINITY, 0.0);
                        cols.insert(f[0].to_string(), v);
                        bv.push(false);
                        explicit_int_bounds.push(false);
                        v
                    }
                };
                for pair in f[1..].chunks(2) {
                    let value = num(pair[1])?;
                    if Some(pair[0]) == objective.as_deref() {
                        model.variables[var.0].cost += value;
                    } else {
                        let &r = rows
                            .get(pair[0])
                            .ok_or_else(|| err(format!("unknown row `{}`", pair[0])))?;
                        row_terms[r].push((var, value));
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err("expected 3 or 5 fields".into()));
                }
                for pair in f[1..].chunks(2) {
                    let value = num(pair[1])?;
                    if Some(pair[0]) == objective.as_deref() {
                        continue;
                    }
                    let &r = rows
                        .get(pair[0])
                        .ok_or_else(|| err(format!("unknown row `{}`", pair[0])))?;
                    model.constraints[r].rhs = value;
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(err("expected bound type, set and column".into()));
                }
                let &var = cols
                    .get(f[2])
                    .ok_or_else(|| err(format!("unknown column `{}`", f[2])))?;
                let v = &mut model.variables[var.0];
                let value = || f.get(3).map(|s| num(s)).transpose();
                match f[0] {
                    "UP" => v.upper = value()?.ok_or_else(|| err("UP needs a value".into()))?,
                    "LO" => v.lower = value()?.ok_or_else(|| err("LO needs a value".into()))?,
                    "FX" => {
                        let x = value()?.ok_or_else(|| err("FX needs a value".into()))?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "BV" => {
                        v.lower = 0.0;
                        v.upper = 1.0;
                        bv[var.0] = true;
                    }
                    t => return Err(err(format!("unsupported bound type `{}`", t))),
                }
                explicit_int_bounds[var.0] = true;
            }
            Section::None => return Err(err("data outside a section".into())),
        }
    }
    for (r, terms) in row_terms.into_iter().enumerate() {
        let c = &mut model.constraints[r];
        c.terms = terms;
        c.terms.sort_by_key(|t| t.0);
    }
    for (j, v) in model.variables.iter_mut().enumerate() {
        if v.kind == VarKind::Integer && (bv[j] || (explicit_int_bounds[j] && v.lower == 0.0 && v.upper == 1.0)) {
            v.kind = VarKind::Binary;
        }
    }
    Ok(model)
}
