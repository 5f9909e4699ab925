//! MPS writer and reader.
//!
//! Sections are written in the order `NAME`, `ROWS`, `COLUMNS`, `RHS`,
//! `BOUNDS`, `ENDATA`, one coefficient per line. Fields are aligned in
//! columns, but names can be longer than eight characters, so the file is
//! meant to be read as free-format MPS. Integer columns are wrapped in
//! `MARKER`/`INTORG`/`INTEND` lines; binaries carry a `BV` bound. The
//! objective row is `obj`, and its right-hand side is the negated objective
//! constant.

use std::fmt::Write as _;
use std::path::Path;

use super::{MilpModel, Sense, VarKind};
use crate::error::{Error, Result};

const OBJECTIVE_ROW: &str = "obj";

/// Renders `model` as MPS text.
pub fn write_mps(model: &MilpModel) -> String {
    let col_width = model.variables.iter().map(|v| v.name.len()).max().unwrap_or(8).max(8);
    let row_width = model
        .constraints
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(8)
        .max(8);
    let mut out = String::new();
    let name = if model.name.is_empty() { "model" } else { &model.name };
    writeln!(out, "NAME          {name}").unwrap();
    out.push_str("ROWS\n");
    writeln!(out, " N  {OBJECTIVE_ROW}").unwrap();
    for row in &model.constraints {
        let sense = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        writeln!(out, " {sense}  {}", row.name).unwrap();
    }

    // column-major view of the coefficients
    let mut by_column: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.variables.len()];
    for &(col, coeff) in &model.objective {
        by_column[col].push((OBJECTIVE_ROW, coeff));
    }
    for row in &model.constraints {
        for &(col, coeff) in &row.terms {
            by_column[col].push((&row.name, coeff));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut markers = 0;
    for (col, var) in model.variables.iter().enumerate() {
        let integer = var.kind != VarKind::Continuous;
        if integer != in_integer_block {
            let tag = if integer { "INTORG" } else { "INTEND" };
            writeln!(out, "    {:<col_width$}  {:<row_width$}  '{tag}'", format!("M{markers}"), "'MARKER'").unwrap();
            markers += 1;
            in_integer_block = integer;
        }
        if by_column[col].is_empty() {
            writeln!(out, "    {:<col_width$}  {:<row_width$}  0", var.name, OBJECTIVE_ROW).unwrap();
        }
        for &(row, coeff) in &by_column[col] {
            writeln!(out, "    {:<col_width$}  {:<row_width$}  {coeff}", var.name, row).unwrap();
        }
    }
    if in_integer_block {
        writeln!(out, "    {:<col_width$}  {:<row_width$}  'INTEND'", format!("M{markers}"), "'MARKER'").unwrap();
    }

    out.push_str("RHS\n");
    if model.objective_constant != 0.0 {
        writeln!(out, "    {:<col_width$}  {:<row_width$}  {}", "RHS", OBJECTIVE_ROW, -model.objective_constant).unwrap();
    }
    for row in &model.constraints {
        if row.rhs != 0.0 {
            writeln!(out, "    {:<col_width$}  {:<row_width$}  {}", "RHS", row.name, row.rhs).unwrap();
        }
    }

    out.push_str("BOUNDS\n");
    for var in &model.variables {
        let mut line = |kind: &str, value: Option<f64>| {
            match value {
                Some(v) => writeln!(out, " {kind} BND       {:<col_width$}  {v}", var.name),
                None => writeln!(out, " {kind} BND       {}", var.name),
            }
            .unwrap()
        };
        if var.kind == VarKind::Binary {
            line("BV", None);
            if var.lower != 0.0 {
                line("LO", Some(var.lower));
            }
            if var.upper != 1.0 {
                line("UP", Some(var.upper));
            }
            continue;
        }
        if var.lower == f64::NEG_INFINITY {
            line("MI", None);
        } else if var.lower != 0.0 {
            line("LO", Some(var.lower));
        }
        if var.upper.is_finite() {
            line("UP", Some(var.upper));
        } else if var.kind == VarKind::Integer {
            line("PL", None);
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Writes `model` to `path` in MPS form.
pub fn export_mps(model: &MilpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_mps(model)).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

fn number(line: usize, token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("`{token}` is not a number")))?;
    if v.is_nan() {
        return Err(Error::parse(line, "NaN is not allowed"));
    }
    Ok(v)
}

/// Parses free-format MPS text as produced by [`write_mps`]. Also accepts
/// files that list two coefficients per `COLUMNS`/`RHS` line. `RANGES` and
/// `SOS` sections are rejected.
pub fn read_mps(text: &str) -> Result<MilpModel> {
    let mut model = MilpModel::default();
    let mut section = Section::Start;
    let mut objective_row: Option<String> = None;
    let mut row_index = std::collections::HashMap::new();
    let mut row_terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut objective_terms: Vec<(usize, f64)> = Vec::new();
    let mut integer_block = false;
    let mut saw_end = false;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    if section != Section::Start {
                        return Err(Error::parse(line, "NAME must come first"));
                    }
                    model.name = fields.get(1).copied().unwrap_or_default().to_string();
                    Section::Start
                }
                "ROWS" if section == Section::Start => Section::Rows,
                "COLUMNS" if section == Section::Rows => Section::Columns,
                "RHS" if section == Section::Columns => Section::Rhs,
                "BOUNDS" if matches!(section, Section::Columns | Section::Rhs) => Section::Bounds,
                "ENDATA" => {
                    saw_end = true;
                    Section::End
                }
                other => return Err(Error::parse(line, format!("unexpected section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Start | Section::End => return Err(Error::parse(line, "data outside a section")),
            Section::Rows => {
                let [kind, name] = fields[..] else {
                    return Err(Error::parse(line, "expected `<type> <row>`"));
                };
                if name == OBJECTIVE_ROW || kind == "N" {
                    if kind != "N" || objective_row.is_some() {
                        return Err(Error::parse(line, "exactly one objective row `obj` of type N is supported"));
                    }
                    objective_row = Some(name.to_string());
                    continue;
                }
                let sense = match kind {
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(Error::parse(line, format!("unknown row type `{kind}`"))),
                };
                if row_index.insert(name.to_string(), model.constraints.len()).is_some() {
                    return Err(Error::parse(line, format!("duplicate row `{name}`")));
                }
                model.constraints.push(super::Constraint {
                    name: name.to_string(),
                    terms: Vec::new(),
                    sense,
                    rhs: 0.0,
                });
                row_terms.push(Vec::new());
            }
            Section::Columns => {
                if fields.len() == 3 && fields[1] == "'MARKER'" {
                    integer_block = match fields[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        other => return Err(Error::parse(line, format!("unknown marker `{other}`"))),
                    };
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(Error::parse(line, "expected `<column> <row> <value> [<row> <value>]`"));
                }
                let name = fields[0];
                let col = match model.column(name) {
                    Some(c) if c + 1 == model.variables.len() => c,
                    Some(_) => return Err(Error::parse(line, format!("entries of column `{name}` are not contiguous"))),
                    None => {
                        let kind = if integer_block { VarKind::Integer } else { VarKind::Continuous };
                        model.add_variable(name, kind, 0.0, f64::INFINITY)
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = number(line, pair[1])?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        objective_terms.push((col, value));
                    } else {
                        let &row = row_index
                            .get(pair[0])
                            .ok_or_else(|| Error::parse(line, format!("unknown row `{}`", pair[0])))?;
                        row_terms[row].push((col, value));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(Error::parse(line, "expected `<set> <row> <value> [<row> <value>]`"));
                }
                for pair in fields[1..].chunks(2) {
                    let value = number(line, pair[1])?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        model.objective_constant = -value;
                    } else {
                        let &row = row_index
                            .get(pair[0])
                            .ok_or_else(|| Error::parse(line, format!("unknown row `{}`", pair[0])))?;
                        model.constraints[row].rhs = value;
                    }
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(Error::parse(line, "expected `<type> <set> <column> [<value>]`"));
                }
                let (kind, name) = (fields[0], fields[2]);
                let col = model
                    .column(name)
                    .ok_or_else(|| Error::parse(line, format!("unknown column `{name}`")))?;
                let value = match (kind, fields.get(3)) {
                    ("UP" | "LO" | "FX" | "LI" | "UI", Some(v)) if fields.len() == 4 => number(line, v)?,
                    ("UP" | "LO" | "FX" | "LI" | "UI", _) => {
                        return Err(Error::parse(line, format!("bound `{kind}` needs one value")))
                    }
                    (_, None) => 0.0,
                    (_, Some(_)) => return Err(Error::parse(line, format!("bound `{kind}` takes no value"))),
                };
                let var = &mut model.variables[col];
                match kind {
                    "UP" | "UI" => var.upper = value,
                    "LO" | "LI" => var.lower = value,
                    "FX" => {
                        var.lower = value;
                        var.upper = value;
                    }
                    "MI" => var.lower = f64::NEG_INFINITY,
                    "PL" => var.upper = f64::INFINITY,
                    "FR" => {
                        var.lower = f64::NEG_INFINITY;
                        var.upper = f64::INFINITY;
                    }
                    "BV" => {
                        var.kind = VarKind::Binary;
                        var.lower = 0.0;
                        var.upper = 1.0;
                    }
                    other => return Err(Error::parse(line, format!("unknown bound type `{other}`"))),
                }
                if matches!(kind, "LI" | "UI") && var.kind == VarKind::Continuous {
                    var.kind = VarKind::Integer;
                }
            }
        }
    }
    if !saw_end {
        return Err(Error::parse(0, "missing ENDATA"));
    }
    if objective_row.is_none() {
        return Err(Error::parse(0, "missing objective row"));
    }
    for (row, terms) in model.constraints.iter_mut().zip(row_terms) {
        row.terms = super::normalize(terms);
    }
    model.objective = super::normalize(objective_terms);
    Ok(model)
}
