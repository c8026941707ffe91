//! CSV tables for trajectories, scans and ensembles.
//!
//! Doubles are written with 17 significant digits so every value reads back
//! bit-exactly. Records end in CRLF.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::dynamics::TrajectoryRecord;
use crate::robustness::{EnsembleResult, SweepPoint};
use crate::spectral::{OccupationGrid, SpectrumReport};

/// A double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // NaN / inf have no useful 17-digit form
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvTable { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.header.iter().map(|h| quote(h)).collect();
        out.push_str(&header.join(","));
        out.push_str("\r\n");
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(x) => fmt_f64(*x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => quote(s),
                })
                .collect();
            let _ = write!(out, "{}\r\n", cells.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}

pub fn trajectory_table(rec: &TrajectoryRecord) -> CsvTable {
    let mut header = vec!["t".to_string(), "fidelity".into(), "lyapunov".into()];
    for k in 0..rec.fields.len() {
        header.push(format!("f_{}", k + 1));
    }
    header.extend(["re_end_amp".to_string(), "im_end_amp".into(), "norm_error".into()]);
    let mut table = CsvTable::new(header);
    for j in 0..rec.len() {
        let mut row: Vec<Cell> = vec![rec.times[j].into(), rec.fidelity[j].into(), rec.lyapunov[j].into()];
        row.extend(rec.fields.iter().map(|f| Cell::from(f[j])));
        row.extend([rec.end_amplitude[j].re.into(), rec.end_amplitude[j].im.into(), rec.norm_error[j].into()]);
        table.push(row);
    }
    table
}

pub fn ensemble_table(ens: &EnsembleResult) -> CsvTable {
    let mut table = CsvTable::new(["t", "mean_fidelity", "min_fidelity", "max_fidelity", "n", "runs", "stride"]);
    for j in 0..ens.times.len() {
        table.push(vec![
            ens.times[j].into(),
            ens.mean[j].into(),
            ens.min[j].into(),
            ens.max[j].into(),
            ens.n.into(),
            ens.runs.into(),
            ens.stride.into(),
        ]);
    }
    table
}

/// First column holds `D1`, the header row holds the `D2` grid.
pub fn occupation_table(grid: &OccupationGrid) -> CsvTable {
    let mut header = vec!["d1\\d2".to_string()];
    header.extend(grid.d2.iter().map(|&x| fmt_f64(x)));
    let mut table = CsvTable::new(header);
    for (d1, row) in grid.d1.iter().zip(&grid.values) {
        let mut cells = vec![Cell::Float(*d1)];
        cells.extend(row.iter().map(|&v| Cell::Float(v)));
        table.push(cells);
    }
    table
}

pub fn spectrum_table(report: &SpectrumReport, occupations: &[(f64, f64)]) -> CsvTable {
    let mut table = CsvTable::new(["index", "eigenvalue", "occupation_first", "occupation_last", "boundary"]);
    for (i, (&value, &(first, last))) in report.eigenvalues.iter().zip(occupations).enumerate() {
        let boundary = report.boundary.iter().any(|b| b.index == i);
        table.push(vec![(i + 1).into(), value.into(), first.into(), last.into(), boundary.into()]);
    }
    table
}

pub fn sweep_table(points: &[SweepPoint]) -> CsvTable {
    let mut table = CsvTable::new(["delta", "fidelity"]);
    for p in points {
        table.push(vec![p.delta.into(), p.fidelity.into()]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 0.9759377662921983, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn rfc4180_quoting() {
        let mut t = CsvTable::new(["a", "b,c"]);
        t.push(vec![Cell::Text("x\"y".into()), Cell::Int(3)]);
        assert_eq!(t.render(), "a,\"b,c\"\r\n\"x\"\"y\",3\r\n");
    }
}
