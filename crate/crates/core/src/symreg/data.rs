use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, SymRegError};
use crate::io::fmt_sig;
use crate::radiomap::fspl_constant;
use crate::rng::stream;

/// Column-major table of inputs with a target column.
#[derive(Debug, Clone, PartialEq)]
pub struct SymDataset {
    schema: Vec<String>,
    columns: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl SymDataset {
    pub fn new(schema: Vec<String>, rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        if schema.is_empty() {
            return Err(SymRegError::InvalidData("empty schema".into()));
        }
        if rows.len() != targets.len() {
            return Err(SymRegError::InvalidData(format!("{} rows for {} targets", rows.len(), targets.len())));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != schema.len()) {
            return Err(SymRegError::InvalidData(format!("row of length {} for schema {:?}", r.len(), schema)));
        }
        let columns = (0..schema.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Ok(Self { schema, columns, targets })
    }

    pub fn from_columns(schema: Vec<String>, columns: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if schema.is_empty() || schema.len() != columns.len() {
            return Err(SymRegError::InvalidData(format!("{} names for {} columns", schema.len(), columns.len())));
        }
        if columns.iter().any(|c| c.len() != targets.len()) {
            return Err(SymRegError::InvalidData("ragged columns".into()));
        }
        Ok(Self { schema, columns, targets })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Rows at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| idx.iter().map(|&i| c[i]).collect()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Header of input names then `target`; values at 6 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{},target", self.schema.join(","))?;
        for i in 0..self.len() {
            let mut line: Vec<String> = self.columns.iter().map(|c| fmt_sig(c[i], 6)).collect();
            line.push(fmt_sig(self.targets[i], 6));
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads a csv whose header names the inputs and a `target` column.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| SymRegError::InvalidData("empty csv".into()))??;
        let names: Vec<String> = header.trim().split(',').map(|s| s.trim().to_string()).collect();
        let t = names
            .iter()
            .position(|n| n == "target")
            .ok_or_else(|| SymRegError::InvalidData("csv header has no target column".into()))?;
        let schema: Vec<String> = names.iter().enumerate().filter(|(j, _)| *j != t).map(|(_, n)| n.clone()).collect();
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != names.len() {
                return Err(SymRegError::InvalidData(format!("line {}: {} fields, expected {}", n + 2, fields.len(), names.len())));
            }
            let mut row = Vec::with_capacity(schema.len());
            for (j, f) in fields.iter().enumerate() {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| SymRegError::InvalidData(format!("line {}: bad number {f:?}", n + 2)))?;
                if j == t {
                    targets.push(v);
                } else {
                    row.push(v);
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(SymRegError::InvalidData("csv has no data rows".into()));
        }
        Self::new(schema, &rows, targets)
    }
}

/// Input ranges; distances in meters, frequencies in GHz, heights in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranges {
    pub d: (f64, f64),
    pub f: (f64, f64),
    pub h: (f64, f64),
}

impl Ranges {
    pub fn fspl() -> Self {
        Self { d: (10.0, 5000.0), f: (0.45, 6.0), h: (10.0, 100.0) }
    }

    pub fn winner() -> Self {
        Self { d: (50.0, 5000.0), f: (2.0, 6.0), h: (10.0, 100.0) }
    }
}

fn log_uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + rng.random::<f64>() * (hi - lo)
}

pub const DEFAULT_EXEMPLARS: usize = 1000;

/// Free-space loss for log-uniform distance and uniform frequency.
pub fn make_fspl_dataset(n: usize, seed: u64, ranges: Ranges) -> SymDataset {
    let mut rng = stream(seed, &[0xf5]);
    let c = fspl_constant();
    let (mut rows, mut targets) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let d = log_uniform(&mut rng, ranges.d);
        let f = uniform(&mut rng, ranges.f);
        targets.push(20.0 * d.log10() + 20.0 * f.log10() + c);
        rows.push(vec![d, f]);
    }
    SymDataset::new(vec!["d".into(), "f".into()], &rows, targets).expect("rectangular")
}

/// Additive constant of the urban-macrocell law used as ground truth.
pub const WINNER_CONSTANT: f64 = 31.46;

pub fn winner_path_loss(d: f64, f: f64, h: f64) -> f64 {
    (44.9 - 6.55 * h.log10()) * d.log10() + WINNER_CONSTANT + 5.83 * h.log10() + 23.0 * (f / 5.0).log10()
}

/// The law's value at `d = f = h = 1`, where only the folded constant remains.
pub fn winner_folded_constant() -> f64 {
    WINNER_CONSTANT - 23.0 * 5f64.log10()
}

/// Urban-macrocell loss over distance, frequency and TX height.
pub fn make_winner_dataset(n: usize, seed: u64, ranges: Ranges) -> SymDataset {
    let mut rng = stream(seed, &[0x3c2]);
    let (mut rows, mut targets) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let d = log_uniform(&mut rng, ranges.d);
        let f = uniform(&mut rng, ranges.f);
        let h = uniform(&mut rng, ranges.h);
        targets.push(winner_path_loss(d, f, h));
        rows.push(vec![d, f, h]);
    }
    SymDataset::new(vec!["d".into(), "f".into(), "h".into()], &rows, targets).expect("rectangular")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspl_rows_follow_closed_form() {
        let ds = make_fspl_dataset(DEFAULT_EXEMPLARS, 4, Ranges::fspl());
        assert_eq!(ds.len(), 1000);
        for i in 0..ds.len() {
            let r = ds.row(i);
            assert!((10.0..=5000.0).contains(&r[0]) && (0.45..=6.0).contains(&r[1]));
            let want = 20.0 * r[0].log10() + 20.0 * r[1].log10() + fspl_constant();
            assert!((ds.targets()[i] - want).abs() < 1e-9);
        }
        assert_eq!(ds, make_fspl_dataset(DEFAULT_EXEMPLARS, 4, Ranges::fspl()));
        assert_ne!(ds, make_fspl_dataset(DEFAULT_EXEMPLARS, 5, Ranges::fspl()));
    }

    #[test]
    fn winner_reference_point() {
        let l25 = 25f64.log10();
        let want = (44.9 - 6.55 * l25) * 3.0 + 31.46 + 5.83 * l25;
        assert!((winner_path_loss(1000.0, 5.0, 25.0) - want).abs() < 1e-12);
        assert!((want - 146.8405).abs() < 1e-3);
        assert!((winner_folded_constant() - 15.38).abs() < 0.005);
        assert!((winner_path_loss(1.0, 1.0, 1.0) - winner_folded_constant()).abs() < 1e-12);
        let ds = make_winner_dataset(200, 1, Ranges::winner());
        assert_eq!(ds, make_winner_dataset(200, 1, Ranges::winner()));
        assert_eq!(ds.schema(), ["d", "f", "h"]);
    }

    #[test]
    fn csv_round_trip() {
        let ds = make_fspl_dataset(20, 1, Ranges::fspl());
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = SymDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.schema(), ds.schema());
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(buf, again);
        assert!(SymDataset::read_csv("d,y\n1,2\n".as_bytes()).is_err());
        assert!(SymDataset::read_csv("d,target\n1,x\n".as_bytes()).is_err());
    }
}
