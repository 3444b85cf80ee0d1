//! Numeric tables and their CSV form.
//!
//! Every CSV starts with a `# config_hash=<hex>` comment line and a header
//! row. Values render in shortest round-trip form, so identical numbers
//! give identical bytes.

use mazesim_core::{Result, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    /// One column by name.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| SimError::Parse(format!("no column named {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = String::new();
        out.push_str("# config_hash=");
        out.push_str(config_hash);
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&v.to_string());
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Parses a CSV produced by [`Table::to_csv`]; comment lines are
    /// skipped wherever they appear.
    pub fn from_csv(text: &str) -> Result<Table> {
        let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
        let header =
            lines.next().ok_or_else(|| SimError::EmptyInput("CSV has no header row".into()))?;
        let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        SimError::Parse(format!("CSV row {}: bad number {s:?}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != columns.len() {
                return Err(SimError::Parse(format!(
                    "CSV row {}: {} fields, header has {}",
                    lineno + 1,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["p", "gamma", "t_end", "E"]);
        t.push(vec![0.0, 1.0, 1000.0, 0.25]);
        t.push(vec![0.1, 1.0, 1000.0, 0.625]);
        let csv = t.to_csv("deadbeef");
        assert!(csv.starts_with("# config_hash=deadbeef\np,gamma,t_end,E\n"));
        let back = Table::from_csv(&csv).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn shortest_float_formatting_survives() {
        let mut t = Table::new(&["x"]);
        t.push(vec![0.1 + 0.2]);
        t.push(vec![1.0 / 3.0]);
        t.push(vec![1e-300]);
        let back = Table::from_csv(&t.to_csv("h")).unwrap();
        assert_eq!(t.rows, back.rows);
    }

    #[test]
    fn integers_render_bare() {
        let mut t = Table::new(&["n"]);
        t.push(vec![64.0]);
        assert!(t.to_csv("h").ends_with("n\n64\n"));
    }

    #[test]
    fn from_csv_rejects_ragged_and_empty() {
        assert!(Table::from_csv("").is_err());
        assert!(Table::from_csv("a,b\n1\n").is_err());
        assert!(Table::from_csv("a\nx\n").is_err());
    }

    #[test]
    fn column_lookup() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, 2.0]);
        t.push(vec![3.0, 4.0]);
        assert_eq!(t.column("b").unwrap(), vec![2.0, 4.0]);
        assert!(t.column("c").is_err());
    }
}
