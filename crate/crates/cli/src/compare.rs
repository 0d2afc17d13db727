//! Aligns one quantity from two result directories on their shared grid.

use std::path::Path;

use crate::run::{HEAT_OF_REACTION, SWEEP};
use crate::table::{column_name, column_unit, Table};
use crate::CliError;

/// Tables searched for the quantity, with the number of leading key
/// columns that define the grid.
const SOURCES: [(&str, usize); 2] = [(SWEEP, 1), (HEAT_OF_REACTION, 2)];

const GRID_TOL: f64 = 1e-9;

fn locate(dir: &Path, quantity: &str) -> Result<(Table, usize), CliError> {
    for (file, keys) in SOURCES {
        let path = dir.join(file);
        if !path.exists() {
            continue;
        }
        let t = Table::read(&path)?;
        if t.column(quantity).is_some_and(|c| c >= keys) {
            return Ok((t, keys));
        }
    }
    Err(CliError::Input(format!(
        "{}: no table with a `{quantity}` column",
        dir.display()
    )))
}

/// Table of (grid columns, A, B, A - B, A / B).
pub fn compare(a: &Path, b: &Path, quantity: &str) -> Result<Table, CliError> {
    let (ta, keys) = locate(a, quantity)?;
    let (tb, keys_b) = locate(b, quantity)?;
    if keys != keys_b || ta.header[..keys] != tb.header[..keys] {
        return Err(CliError::Input("the runs do not share a grid".into()));
    }
    if ta.len() != tb.len() {
        return Err(CliError::Input(format!(
            "mismatched grids: {} rows against {}",
            ta.len(),
            tb.len()
        )));
    }
    let (ca, cb) = (ta.column(quantity).unwrap(), tb.column(quantity).unwrap());
    let unit = column_unit(&ta.header[ca]);
    let name = column_name(&ta.header[ca]);
    let mut header: Vec<String> = ta.header[..keys].to_vec();
    header.extend([
        format!("{name}_a [{unit}]"),
        format!("{name}_b [{unit}]"),
        format!("diff [{unit}]"),
        "ratio [-]".to_string(),
    ]);
    let mut out = Table::new(header);
    for (ra, rb) in ta.rows.iter().zip(&tb.rows) {
        for j in 0..keys {
            if (ra[j] - rb[j]).abs() > GRID_TOL * ra[j].abs().max(1.0) {
                return Err(CliError::Input(format!(
                    "mismatched grids: {} against {} in `{}`",
                    ra[j], rb[j], ta.header[j]
                )));
            }
        }
        let mut row = ra[..keys].to_vec();
        row.extend([ra[ca], rb[cb], ra[ca] - rb[cb], ra[ca] / rb[cb]]);
        out.push(row);
    }
    Ok(out)
}

/// Row with the largest absolute difference.
pub fn largest_difference(t: &Table) -> Option<&[f64]> {
    let d = t.header.len() - 2;
    t.rows
        .iter()
        .max_by(|x, y| x[d].abs().total_cmp(&y[d].abs()))
        .map(Vec::as_slice)
}
