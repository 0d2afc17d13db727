//! Comma-separated result tables with a one-line header of `name [unit]`
//! columns. Numbers use the shortest representation that round-trips.

use std::path::Path;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Index of the column whose name (without the unit) is `name`.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| column_name(h) == name)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.write_to(file)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn write_to<W: std::io::Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bad = |e: String| CliError::Input(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| bad(format!("`{f}`: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

/// `"T_out [K]"` -> `"T_out"`.
pub fn column_name(header: &str) -> &str {
    header.split('[').next().unwrap_or(header).trim()
}

/// `"T_out [K]"` -> `"K"`.
pub fn column_unit(header: &str) -> &str {
    header
        .split_once('[')
        .map(|(_, u)| u.trim_end_matches(']').trim())
        .unwrap_or("-")
}
