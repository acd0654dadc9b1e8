//! On-disk formats: plain PGM grids and heatmaps, radio-map csv matrices,
//! grid header sidecars and dataset manifests.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radiomap::{BuildingGrid, RadioMap, RadioMapError, Split, TxConfig};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed {what}: {msg}")]
    Malformed { what: &'static str, msg: String },

    #[error(transparent)]
    Grid(#[from] RadioMapError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn malformed(what: &'static str, msg: impl Into<String>) -> FormatError {
    FormatError::Malformed { what, msg: msg.into() }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats `x` with `sig` significant digits, using plain notation for
/// decimal exponents in [-4, sig) and `MeN` otherwise. Trailing zeros are
/// dropped, so the output parses back to a value that formats identically.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        format!("{}e{exp}", trim_fraction(mant))
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

/// Grayscale image in plain (ASCII) PGM form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl Pgm {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "P2")?;
        writeln!(w, "{} {}", self.width, self.height)?;
        writeln!(w, "{}", self.maxval)?;
        // Plain PGM lines stay within 70 characters.
        for row in self.pixels.chunks(self.width) {
            let mut line = String::new();
            for v in row {
                let tok = v.to_string();
                if !line.is_empty() && line.len() + 1 + tok.len() > 70 {
                    writeln!(w, "{line}")?;
                    line.clear();
                }
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&tok);
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        if tokens.next() != Some("P2") {
            return Err(malformed("pgm", "missing P2 magic"));
        }
        let mut num = |name: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| malformed("pgm", format!("missing {name}")))?
                .parse::<usize>()
                .map_err(|e| malformed("pgm", format!("{name}: {e}")))
        };
        let width = num("width")?;
        let height = num("height")?;
        let maxval = num("maxval")?;
        if maxval == 0 || maxval > u16::MAX as usize {
            return Err(malformed("pgm", format!("maxval {maxval} out of range")));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            let v = num("pixel")?;
            if v > maxval {
                return Err(malformed("pgm", format!("pixel {v} above maxval {maxval}")));
            }
            pixels.push(v as u16);
        }
        Ok(Self { width, height, maxval: maxval as u16, pixels })
    }
}

/// Building grid as a PGM whose pixel values are heights in whole meters.
pub fn grid_to_pgm(grid: &BuildingGrid) -> Pgm {
    Pgm {
        width: grid.width(),
        height: grid.height(),
        maxval: 255,
        pixels: grid.heights().iter().map(|h| h.round() as u16).collect(),
    }
}

pub fn grid_from_pgm(pgm: &Pgm, cell_size: f64) -> Result<BuildingGrid> {
    let heights = pgm.pixels.iter().map(|&v| v as f64).collect();
    Ok(BuildingGrid::new(pgm.width, pgm.height, cell_size, heights)?)
}

/// Sidecar JSON stored next to each grid PGM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub cell_size: f64,
    pub h_tx: f64,
    pub h_rx: f64,
    pub freq: f64,
    pub tx_x: usize,
    pub tx_y: usize,
}

impl GridHeader {
    pub fn new(grid: &BuildingGrid, tx: &TxConfig) -> Self {
        Self { cell_size: grid.cell_size(), h_tx: tx.h_tx, h_rx: tx.h_rx, freq: tx.freq, tx_x: tx.x, tx_y: tx.y }
    }

    pub fn tx(&self) -> TxConfig {
        TxConfig { x: self.tx_x, y: self.tx_y, h_tx: self.h_tx, h_rx: self.h_rx, freq: self.freq }
    }
}

/// Row-major csv matrix, 4 decimals, `NA` on masked cells.
pub fn write_radio_map<W: Write>(map: &RadioMap, mut w: W) -> Result<()> {
    let mut line = String::new();
    for y in 0..map.height {
        line.clear();
        for x in 0..map.width {
            if x > 0 {
                line.push(',');
            }
            match map.get(x, y) {
                Some(v) => line.push_str(&format!("{v:.4}")),
                None => line.push_str("NA"),
            }
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_radio_map<R: BufRead>(r: R) -> Result<RadioMap> {
    let (mut pl, mut mask) = (Vec::new(), Vec::new());
    let (mut width, mut height) = (None, 0usize);
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(malformed("radio map", format!("line {} has {} fields, expected {w}", n + 1, fields.len())))
            }
            _ => {}
        }
        for f in fields {
            if f == "NA" {
                pl.push(f64::NAN);
                mask.push(false);
            } else {
                let v: f64 = f.parse().map_err(|e| malformed("radio map", format!("line {}: {f}: {e}", n + 1)))?;
                pl.push(v);
                mask.push(true);
            }
        }
        height += 1;
    }
    let width = width.ok_or_else(|| malformed("radio map", "empty matrix"))?;
    Ok(RadioMap { width, height, pl, mask })
}

/// One manifest record; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub grid_path: String,
    pub header_path: String,
    pub radiomap_path: String,
    pub split: Split,
}

pub fn write_manifest<W: Write>(entries: &[ManifestEntry], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, entries)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_manifest<R: Read>(r: R) -> Result<Vec<ManifestEntry>> {
    Ok(serde_json::from_reader(r)?)
}
