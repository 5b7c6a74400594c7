use std::fmt::Write;

use crate::error::{Error, Result};

/// Least-squares slope of `log e` against `log h`.
pub fn fit_slope(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 || pairs.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::BadSlopeInput);
    }
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(x, y), &(h, e)| (x + h.ln() / n, y + e.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(h, e) in pairs {
        let dx = h.ln() - mx;
        sxy += dx * (e.ln() - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(Error::BadSlopeInput);
    }
    Ok(sxy / sxx)
}

/// CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as usize)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Column-named rows rendered as CSV with `# slope` footers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub slopes: Vec<(String, f64)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; empty cells are skipped.
    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        let Some(i) = self.column_index(name) else { return Vec::new() };
        self.rows
            .iter()
            .map(|r| match r[i] {
                Cell::Float(v) => Some(v),
                Cell::Int(v) => Some(v as f64),
                _ => None,
            })
            .collect()
    }

    /// Fits and records slopes of `columns` against `x`, skipping columns
    /// with missing or nonpositive entries.
    pub fn add_slopes(&mut self, x: &str, columns: &[&str]) {
        let xs = self.column(x);
        for &c in columns {
            let pairs: Option<Vec<(f64, f64)>> =
                xs.iter().zip(self.column(c)).map(|(a, b)| Some(((*a)?, b?))).collect();
            if let Some(s) = pairs.and_then(|p| fit_slope(&p).ok()) {
                self.slopes.push((c.to_string(), s));
            }
        }
    }

    pub fn slope(&self, column: &str) -> Option<f64> {
        self.slopes.iter().find(|(c, _)| c == column).map(|&(_, s)| s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Float(v) => format!("{v:.16e}"),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (c, s) in &self.slopes {
            let _ = writeln!(out, "# slope {c} {s:.16e}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_powers() {
        assert!((fit_slope(&[(0.1, 0.01), (0.05, 0.0025)]).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_slope(&[(0.1, 0.3), (0.05, 0.3)]).unwrap().abs() < 1e-12);
        assert!((fit_slope(&[(0.1, 0.1), (0.05, 0.05), (0.025, 0.025)]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fit_slope(&[(0.1, 0.1)]), Err(Error::BadSlopeInput));
        assert_eq!(fit_slope(&[(0.1, 0.1), (0.05, 0.0)]), Err(Error::BadSlopeInput));
        assert_eq!(fit_slope(&[(0.1, 0.1), (0.1, 0.2)]), Err(Error::BadSlopeInput));
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["h", "err", "note"]);
        t.push(vec![0.1.into(), 0.01.into(), Cell::Empty]);
        t.push(vec![0.05.into(), 0.0025.into(), "x".into()]);
        t.add_slopes("h", &["err", "note"]);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "h,err,note");
        assert_eq!(lines[1], "1.0000000000000001e-1,1.0000000000000000e-2,");
        assert!(lines[3].starts_with("# slope err 2.0"));
        assert_eq!(lines.len(), 4);
    }
}
