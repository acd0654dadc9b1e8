use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::los::sight_profile;
use super::{BuildingGrid, RadioMapError, Result, TxConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `20 log10(4 pi / c)` with d in meters and f in GHz, about 32.4478 dB.
pub fn fspl_constant() -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * 1e9 / SPEED_OF_LIGHT).log10()
}

/// Free-space path loss in dB for distance `d` (m) and frequency `f` (GHz).
pub fn fspl(d: f64, f: f64) -> Result<f64> {
    if !(d > 0.0 && f > 0.0 && d.is_finite() && f.is_finite()) {
        return Err(RadioMapError::FsplDomain { d, f });
    }
    Ok(fspl_unchecked(d, f))
}

#[inline]
pub(crate) fn fspl_unchecked(d: f64, f: f64) -> f64 {
    20.0 * d.log10() + 20.0 * f.log10() + fspl_constant()
}

/// Excess-loss parameters of the surrogate oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleParams {
    /// Loss per pierced building run, dB.
    pub wall_loss: f64,
    /// Cap on the number of runs that add loss.
    pub max_walls: u32,
    /// Clipping ceiling, dB.
    pub pl_max: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { wall_loss: 10.0, max_walls: 5, pl_max: 160.0 }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wall_loss >= 0.0 && self.wall_loss.is_finite()) {
            return Err(RadioMapError::InvalidParams(format!("wall_loss must be >= 0, got {}", self.wall_loss)));
        }
        if self.max_walls < 1 {
            return Err(RadioMapError::InvalidParams("max_walls must be >= 1".into()));
        }
        if !(self.pl_max > 0.0) {
            return Err(RadioMapError::InvalidParams(format!("pl_max must be > 0, got {}", self.pl_max)));
        }
        Ok(())
    }
}

/// 3D distance in meters between the TX antenna and an RX antenna at the
/// center of `(x, y)`, floored at one cell size.
pub fn distance_3d(grid: &BuildingGrid, tx: &TxConfig, x: usize, y: usize) -> f64 {
    let cs = grid.cell_size();
    let dx = (x as f64 - tx.x as f64) * cs;
    let dy = (y as f64 - tx.y as f64) * cs;
    let dz = tx.h_tx - tx.h_rx;
    (dx * dx + dy * dy + dz * dz).sqrt().max(cs)
}

/// Ground-truth path loss at an open-ground cell.
pub fn oracle_path_loss(grid: &BuildingGrid, tx: &TxConfig, rx: (usize, usize), params: &OracleParams) -> Result<f64> {
    let (x, y) = rx;
    if !grid.contains(x, y) || grid.is_building(x, y) {
        return Err(RadioMapError::InvalidTarget { x, y });
    }
    Ok(path_loss_at(grid, tx, x, y, params))
}

fn path_loss_at(grid: &BuildingGrid, tx: &TxConfig, x: usize, y: usize, params: &OracleParams) -> f64 {
    let d = distance_3d(grid, tx, x, y);
    let runs = sight_profile(grid, (tx.x, tx.y), tx.h_tx, (x, y), tx.h_rx).wall_runs;
    let excess = params.wall_loss * runs.min(params.max_walls) as f64;
    (fspl_unchecked(d, tx.freq) + excess).min(params.pl_max)
}

/// Per-cell path loss in dB for one transmitter; building cells are masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioMap {
    pub width: usize,
    pub height: usize,
    /// Row-major path loss; NaN on masked cells.
    pub pl: Vec<f64>,
    /// Row-major validity flags (`false` on buildings).
    pub mask: Vec<bool>,
}

impl RadioMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.pl[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Minimum and maximum over valid cells.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.pl
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .fold(None, |acc, (&v, _)| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}

pub fn compute_radio_map(grid: &BuildingGrid, tx: &TxConfig, params: &OracleParams) -> Result<RadioMap> {
    tx.validate(grid)?;
    params.validate()?;
    let (w, h) = (grid.width(), grid.height());
    let pl: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if grid.is_building(x, y) {
                f64::NAN
            } else {
                path_loss_at(grid, tx, x, y, params)
            }
        })
        .collect();
    let mask = pl.iter().map(|v| !v.is_nan()).collect();
    Ok(RadioMap { width: w, height: h, pl, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiomap::{generate_environment, place_tx, GenParams};

    #[test]
    fn fspl_constant_value() {
        let c = fspl(1.0, 1.0).unwrap();
        let direct = 20.0 * (4.0 * std::f64::consts::PI * 1e9 / 299_792_458.0_f64).log10();
        assert!((c - direct).abs() < 1e-12);
        assert!((c - 32.4478).abs() < 1e-4);
    }

    #[test]
    fn fspl_reference_point() {
        let v = fspl(100.0, 5.9).unwrap();
        assert!((v - (40.0 + 20.0 * 5.9f64.log10() + fspl_constant())).abs() < 1e-12);
        assert!((v - 87.86).abs() < 0.01);
    }

    #[test]
    fn fspl_slopes() {
        for &d in &[1.0, 17.3, 250.0, 4999.0] {
            let doubled = fspl(2.0 * d, 3.5).unwrap() - fspl(d, 3.5).unwrap();
            assert!((doubled - 20.0 * 2f64.log10()).abs() < 1e-9);
            let decade = fspl(10.0 * d, 3.5).unwrap() - fspl(d, 3.5).unwrap();
            assert!((decade - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fspl_rejects_nonpositive() {
        assert!(fspl(0.0, 1.0).is_err());
        assert!(fspl(1.0, -1.0).is_err());
    }

    #[test]
    fn oracle_los_and_walls() {
        let mut g = BuildingGrid::empty(20, 8, 4.0).unwrap();
        let tx = TxConfig::at(0, 2);
        let p = OracleParams::default();
        let free = fspl(distance_3d(&g, &tx, 15, 2), tx.freq).unwrap();
        assert_eq!(oracle_path_loss(&g, &tx, (15, 2), &p).unwrap(), free);
        g.set_height(5, 2, 40.0).unwrap();
        g.set_height(10, 2, 40.0).unwrap();
        let v = oracle_path_loss(&g, &tx, (15, 2), &p).unwrap();
        assert!((v - (free + 20.0)).abs() < 1e-12);
        assert_eq!(
            oracle_path_loss(&g, &tx, (5, 2), &p),
            Err(RadioMapError::InvalidTarget { x: 5, y: 2 })
        );
    }

    #[test]
    fn radio_map_contract() {
        let g = generate_environment(5, &GenParams::default()).unwrap();
        let tx = place_tx(&g, 5, 15.0, 2.0, 5.9).unwrap();
        let p = OracleParams::default();
        let m = compute_radio_map(&g, &tx, &p).unwrap();
        let (lo, hi) = m.range().unwrap();
        assert_eq!(m.get(tx.x, tx.y), Some(lo));
        assert!(hi <= p.pl_max);
        for (x, y) in g.open_cells() {
            let v = m.get(x, y).unwrap();
            assert!(v >= fspl(distance_3d(&g, &tx, x, y), tx.freq).unwrap());
        }
        for y in 0..64 {
            for x in 0..64 {
                assert_eq!(m.get(x, y).is_none(), g.is_building(x, y));
            }
        }
        let again = compute_radio_map(&g, &tx, &p).unwrap();
        assert_eq!(m.pl.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), again.pl.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn tx_cell_distance_floor() {
        let g = BuildingGrid::empty(8, 8, 4.0).unwrap();
        let tx = TxConfig::at(2, 2);
        assert_eq!(distance_3d(&g, &tx, 2, 2), 13.0);
        let far = TxConfig { h_tx: 3.0, ..tx };
        assert_eq!(distance_3d(&g, &far, 2, 2), 4.0);
        assert!((distance_3d(&g, &tx, 5, 2) - (144.0f64 + 169.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn clipping_applies() {
        let mut g = BuildingGrid::empty(20, 8, 4.0).unwrap();
        g.set_height(5, 2, 40.0).unwrap();
        let tx = TxConfig::at(0, 2);
        let p = OracleParams { pl_max: 70.0, ..OracleParams::default() };
        let m = compute_radio_map(&g, &tx, &p).unwrap();
        assert!(m.pl.iter().zip(&m.mask).filter(|(_, k)| **k).all(|(v, _)| *v <= 70.0));
    }
}
