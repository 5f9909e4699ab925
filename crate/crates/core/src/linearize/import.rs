use std::collections::HashMap;

use super::{column_role, ColumnRole, MilpModel, VarKind};
use crate::error::{Error, Result};
use crate::formulation::{check_feasibility, Assignment, FeasibilityReport, Solution};
use crate::instance::Instance;

/// Slack allowed on bounds and integrality of imported values.
pub const IMPORT_TOL: f64 = 1e-6;

/// Parses whitespace-separated `name value` pairs. Lines starting with `#`
/// are ignored. Duplicate names are an error.
pub fn parse_values(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    let mut pending: Option<(usize, &str)> = None;
    for (k, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        for token in line.split_whitespace() {
            match pending.take() {
                None => pending = Some((k + 1, token)),
                Some((at, name)) => {
                    let value: f64 = token
                        .parse()
                        .map_err(|_| Error::parse(k + 1, format!("`{token}` is not a number")))?;
                    if !value.is_finite() {
                        return Err(Error::parse(k + 1, format!("value of `{name}` is not finite")));
                    }
                    if seen.insert(name.to_string(), at).is_some() {
                        return Err(Error::parse(at, format!("`{name}` is given twice")));
                    }
                    out.push((name.to_string(), value));
                }
            }
        }
    }
    if let Some((at, name)) = pending {
        return Err(Error::parse(at, format!("`{name}` has no value")));
    }
    Ok(out)
}

/// Values mapped back onto the placement problem.
#[derive(Debug, Clone)]
pub struct ImportedSolution {
    pub solution: Solution,
    pub report: FeasibilityReport,
    /// One value per model column, rounded for integer columns.
    pub values: Vec<f64>,
}

/// Reads an external solver's variable values for `model` and rebuilds the
/// [`Solution`]. Columns that are not listed are 0. Integer and binary
/// values within `1e-6` of an integer are rounded; anything else, or any
/// value more than `1e-6` outside its bounds, is an integrity error.
pub fn import_solution(instance: &Instance, model: &MilpModel, text: &str) -> Result<ImportedSolution> {
    let mut values = vec![0.0; model.n_variables()];
    for (name, value) in parse_values(text)? {
        let col = model
            .column(&name)
            .ok_or_else(|| Error::parse(0, format!("`{name}` is not a column of the model")))?;
        let var = &model.variables[col];
        if value < var.lower - IMPORT_TOL || value > var.upper + IMPORT_TOL {
            return Err(Error::Integrity(format!(
                "{name} = {value} is outside [{}, {}]",
                var.lower, var.upper
            )));
        }
        values[col] = match var.kind {
            VarKind::Continuous => value,
            VarKind::Binary | VarKind::Integer => {
                let rounded = value.round();
                if (value - rounded).abs() > IMPORT_TOL {
                    return Err(Error::Integrity(format!("{name} = {value} is not integral")));
                }
                rounded
            }
        };
    }

    let mut solution = Solution::empty(instance);
    for (col, var) in model.variables.iter().enumerate() {
        let value = values[col];
        match column_role(&var.name) {
            Some(ColumnRole::Assign {
                iot,
                edge,
                model,
                variant,
            }) if value != 0.0 => {
                solution.assign(instance, Assignment::new(iot, edge, model, variant))?;
            }
            Some(ColumnRole::Replicas { edge, model, variant }) => {
                if edge >= instance.n_edge() || model >= instance.n_models() || variant >= instance.n_variants(model) {
                    return Err(Error::Integrity(format!("column `{}` does not match the instance", var.name)));
                }
                if value < 0.0 || value > u32::MAX as f64 {
                    return Err(Error::Integrity(format!("{} = {value} is not a replica count", var.name)));
                }
                solution.set_replicas(edge, instance.slot(model, variant), value as u32);
            }
            _ => {}
        }
    }
    solution.refresh_costs(instance);
    let report = check_feasibility(instance, &solution);
    Ok(ImportedSolution {
        solution,
        report,
        values,
    })
}
