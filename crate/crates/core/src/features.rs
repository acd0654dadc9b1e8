//! Physics-informed feature channels and tabular pixel datasets.
//!
//! A [`FeatureStack`] holds one real matrix per channel over the grid. The
//! physics channels (3D distance, LoS flag, FSPL, wall-run count, local
//! building density) are engineered from propagation geometry; the baseline
//! channels are the normalized cell coordinates alone. [`pixel_dataset`]
//! flattens a stack and its radio map into rows for the regressors.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::fmt_sig;
use crate::radiomap::{distance_3d, fspl_unchecked, sight_profile, BuildingGrid, RadioMap, SightProfile, TxConfig};
use crate::rng;

/// Default neighbourhood radius of the building-density channel, in cells.
pub const DEFAULT_DENSITY_RADIUS: usize = 8;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("unknown feature channel `{0}`")]
    UnknownChannel(String),

    #[error("empty feature set")]
    EmptyFeatureSet,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sampling selected no rows")]
    EmptySelection,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("malformed dataset csv at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FeatureError>;

/// Named feature channels, in canonical schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "norm_x")]
    NormX,
    #[serde(rename = "norm_y")]
    NormY,
    #[serde(rename = "dist3d")]
    Dist3d,
    #[serde(rename = "los")]
    Los,
    #[serde(rename = "fspl")]
    Fspl,
    #[serde(rename = "wall_runs")]
    WallRuns,
    #[serde(rename = "bldg_density_r")]
    BldgDensity,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::NormX,
        Channel::NormY,
        Channel::Dist3d,
        Channel::Los,
        Channel::Fspl,
        Channel::WallRuns,
        Channel::BldgDensity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::NormX => "norm_x",
            Channel::NormY => "norm_y",
            Channel::Dist3d => "dist3d",
            Channel::Los => "los",
            Channel::Fspl => "fspl",
            Channel::WallRuns => "wall_runs",
            Channel::BldgDensity => "bldg_density_r",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| FeatureError::UnknownChannel(s.to_string()))
    }
}

/// A nonempty, deduplicated set of channels kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSet(Vec<Channel>);

impl FeatureSet {
    pub fn new(channels: impl IntoIterator<Item = Channel>) -> Result<Self> {
        let mut v: Vec<Channel> = channels.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(FeatureError::EmptyFeatureSet);
        }
        Ok(Self(v))
    }

    /// Normalized coordinates only.
    pub fn baseline() -> Self {
        Self(vec![Channel::NormX, Channel::NormY])
    }

    /// Baseline plus every physics channel.
    pub fn physics() -> Self {
        Self(Channel::ALL.to_vec())
    }

    /// Parses `baseline`, `physics`, or a comma-separated channel list.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim() {
            "baseline" => Ok(Self::baseline()),
            "physics" => Ok(Self::physics()),
            other => Self::new(
                other
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Channel::from_str)
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.0
    }

    pub fn contains(&self, c: Channel) -> bool {
        self.0.contains(&c)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|c| c.name().to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    pub density_radius: usize,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self { density_radius: DEFAULT_DENSITY_RADIUS }
    }
}

/// Per-cell feature channels over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub width: usize,
    pub height: usize,
    channels: Vec<Channel>,
    data: Vec<Vec<f64>>,
}

impl FeatureStack {
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn schema(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name().to_string()).collect()
    }

    pub fn channel(&self, c: Channel) -> Option<&[f64]> {
        self.channels.iter().position(|&k| k == c).map(|i| self.data[i].as_slice())
    }
}

/// 3D TX-RX distance per cell (cell centers), floored at one cell size.
pub fn distance_map(grid: &BuildingGrid, tx: &TxConfig) -> Vec<f64> {
    let w = grid.width();
    (0..w * grid.height()).map(|i| distance_3d(grid, tx, i % w, i / w)).collect()
}

fn profiles(grid: &BuildingGrid, tx: &TxConfig) -> Vec<SightProfile> {
    let w = grid.width();
    (0..w * grid.height())
        .into_par_iter()
        .map(|i| sight_profile(grid, (tx.x, tx.y), tx.h_tx, (i % w, i / w), tx.h_rx))
        .collect()
}

/// 1 where the direct ray is clear, 0 where obstructed or on a building.
pub fn los_map(grid: &BuildingGrid, tx: &TxConfig) -> Vec<f64> {
    los_from_profiles(grid, &profiles(grid, tx))
}

fn los_from_profiles(grid: &BuildingGrid, p: &[SightProfile]) -> Vec<f64> {
    let w = grid.width();
    p.iter()
        .enumerate()
        .map(|(i, s)| if s.clear && !grid.is_building(i % w, i / w) { 1.0 } else { 0.0 })
        .collect()
}

/// Fraction of building cells among in-grid cells within `radius` cells
/// (center to center) of each cell.
pub fn density_map(grid: &BuildingGrid, radius: usize) -> Vec<f64> {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let r = radius as i64;
    let offsets: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect();
    (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let (mut inside, mut built) = (0u32, 0u32);
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    inside += 1;
                    built += grid.is_building(nx as usize, ny as usize) as u32;
                }
            }
            built as f64 / inside as f64
        })
        .collect()
}

pub fn feature_stack(grid: &BuildingGrid, tx: &TxConfig, set: &FeatureSet) -> FeatureStack {
    feature_stack_with(grid, tx, set, FeatureOptions::default())
}

/// Computes exactly the channels in `set`.
pub fn feature_stack_with(grid: &BuildingGrid, tx: &TxConfig, set: &FeatureSet, opts: FeatureOptions) -> FeatureStack {
    let (w, h) = (grid.width(), grid.height());
    let needs_walk = set.contains(Channel::Los) || set.contains(Channel::WallRuns);
    let walk = if needs_walk { profiles(grid, tx) } else { Vec::new() };
    let needs_dist = set.contains(Channel::Dist3d) || set.contains(Channel::Fspl);
    let dist = if needs_dist { distance_map(grid, tx) } else { Vec::new() };

    let data = set
        .channels()
        .iter()
        .map(|c| match c {
            Channel::NormX => (0..w * h).map(|i| (i % w) as f64 / (w - 1) as f64).collect(),
            Channel::NormY => (0..w * h).map(|i| (i / w) as f64 / (h - 1) as f64).collect(),
            Channel::Dist3d => dist.clone(),
            Channel::Los => los_from_profiles(grid, &walk),
            Channel::Fspl => dist.iter().map(|&d| fspl_unchecked(d, tx.freq)).collect(),
            Channel::WallRuns => walk.iter().map(|p| p.wall_runs as f64).collect(),
            Channel::BldgDensity => density_map(grid, opts.density_radius),
        })
        .collect();
    FeatureStack { width: w, height: h, channels: set.channels().to_vec(), data }
}

/// How cells are selected when flattening a map into rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    All,
    /// Cells whose x and y are both multiples of n.
    Stride(usize),
    /// k valid cells drawn without replacement.
    Random { k: usize, seed: u64 },
}

/// Tabular per-pixel dataset: feature rows, path-loss targets, source map ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelDataset {
    schema: Vec<String>,
    /// Row-major feature values, `schema.len()` per row.
    values: Vec<f64>,
    targets: Vec<f64>,
    groups: Vec<u32>,
    /// Source cell of each row; empty for datasets read back from csv.
    #[serde(skip)]
    cells: Vec<(usize, usize)>,
}

impl PixelDataset {
    pub fn new(schema: Vec<String>, rows: Vec<Vec<f64>>, targets: Vec<f64>, groups: Vec<u32>) -> Result<Self> {
        if schema.is_empty() {
            return Err(FeatureError::EmptyFeatureSet);
        }
        if rows.len() != targets.len() || rows.len() != groups.len() {
            return Err(FeatureError::DimensionMismatch(format!(
                "{} rows, {} targets, {} groups",
                rows.len(),
                targets.len(),
                groups.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != schema.len()) {
            return Err(FeatureError::DimensionMismatch(format!(
                "row of length {} for a schema of {}",
                r.len(),
                schema.len()
            )));
        }
        let values = rows.into_iter().flatten().collect();
        Ok(Self { schema, values, targets, groups, cells: Vec::new() })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.schema.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.schema.len())
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn groups(&self) -> &[u32] {
        &self.groups
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows().map(|r| r[j]).collect())
    }

    /// Sorted distinct group ids.
    pub fn group_ids(&self) -> Vec<u32> {
        let mut g = self.groups.clone();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Concatenates datasets sharing one schema.
    pub fn concat(parts: &[PixelDataset]) -> Result<Self> {
        let first = parts.first().ok_or(FeatureError::EmptySelection)?;
        let mut out = Self {
            schema: first.schema.clone(),
            values: Vec::new(),
            targets: Vec::new(),
            groups: Vec::new(),
            cells: Vec::new(),
        };
        let keep_cells = parts.iter().all(|p| p.cells.len() == p.len());
        for p in parts {
            if p.schema != out.schema {
                return Err(FeatureError::SchemaMismatch(format!("{:?} vs {:?}", p.schema, out.schema)));
            }
            out.values.extend_from_slice(&p.values);
            out.targets.extend_from_slice(&p.targets);
            out.groups.extend_from_slice(&p.groups);
            if keep_cells {
                out.cells.extend_from_slice(&p.cells);
            }
        }
        Ok(out)
    }

    /// Writes the dataset as csv: header `schema..., target, group`, values
    /// at 6 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = self.schema.join(",");
        header.push_str(",target,group\n");
        w.write_all(header.as_bytes())?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            for v in self.row(i) {
                line.push_str(&fmt_sig(*v, 6));
                line.push(',');
            }
            line.push_str(&fmt_sig(self.targets[i], 6));
            line.push(',');
            line.push_str(&self.groups[i].to_string());
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(FeatureError::Parse { line: 1, msg: "missing header".into() })??;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.len() < 3 || cols[cols.len() - 2] != "target" || cols[cols.len() - 1] != "group" {
            return Err(FeatureError::Parse { line: 1, msg: "header must end with target,group".into() });
        }
        let schema: Vec<String> = cols[..cols.len() - 2].iter().map(|s| s.to_string()).collect();
        let p = schema.len();
        let (mut values, mut targets, mut groups) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| FeatureError::Parse { line: n + 2, msg };
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != p + 2 {
                return Err(err(format!("expected {} fields, got {}", p + 2, fields.len())));
            }
            for f in &fields[..p] {
                values.push(f.parse::<f64>().map_err(|e| err(format!("{f}: {e}")))?);
            }
            targets.push(fields[p].parse::<f64>().map_err(|e| err(format!("{}: {e}", fields[p])))?);
            groups.push(fields[p + 1].parse::<u32>().map_err(|e| err(format!("{}: {e}", fields[p + 1])))?);
        }
        Ok(Self { schema, values, targets, groups, cells: Vec::new() })
    }
}

/// Flattens a feature stack and its radio map into rows, skipping masked
/// (building) cells. Every row is tagged with `group`.
pub fn pixel_dataset(stack: &FeatureStack, map: &RadioMap, sampling: Sampling, group: u32) -> Result<PixelDataset> {
    if stack.width != map.width || stack.height != map.height {
        return Err(FeatureError::DimensionMismatch(format!(
            "stack {}x{} vs radio map {}x{}",
            stack.width, stack.height, map.width, map.height
        )));
    }
    let w = map.width;
    let valid: Vec<usize> = (0..map.pl.len()).filter(|&i| map.mask[i]).collect();
    let selected: Vec<usize> = match sampling {
        Sampling::All => valid,
        Sampling::Stride(n) => {
            if n == 0 {
                return Err(FeatureError::EmptySelection);
            }
            valid.into_iter().filter(|i| (i % w) % n == 0 && (i / w) % n == 0).collect()
        }
        Sampling::Random { k, seed } => {
            let mut v = valid;
            v.shuffle(&mut rng::stream(seed, &[0x7069_7865_6c, group as u64]));
            v.truncate(k);
            v.sort_unstable();
            v
        }
    };
    if selected.is_empty() {
        return Err(FeatureError::EmptySelection);
    }
    let p = stack.channels.len();
    let mut values = Vec::with_capacity(selected.len() * p);
    for &i in &selected {
        values.extend(stack.data.iter().map(|ch| ch[i]));
    }
    Ok(PixelDataset {
        schema: stack.schema(),
        values,
        targets: selected.iter().map(|&i| map.pl[i]).collect(),
        groups: vec![group; selected.len()],
        cells: selected.iter().map(|&i| (i % w, i / w)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiomap::{compute_radio_map, fspl, line_of_sight, OracleParams};

    fn empty_setup() -> (BuildingGrid, TxConfig) {
        (BuildingGrid::empty(64, 64, 4.0).unwrap(), TxConfig::at(20, 30))
    }

    #[test]
    fn distance_examples() {
        let (g, tx) = empty_setup();
        let d = distance_map(&g, &tx);
        assert_eq!(d[g.index(20, 30)], 13.0);
        assert!((d[g.index(23, 30)] - 17.6918).abs() < 1e-4);
        assert!(d.iter().all(|&v| v > 0.0));
        for k in 1..15 {
            assert_eq!(d[g.index(20 + k, 30)], d[g.index(20 - k, 30)]);
            assert_eq!(d[g.index(20, 30 + k)], d[g.index(20, 30 - k)]);
        }
    }

    #[test]
    fn los_on_empty_grid() {
        let (g, tx) = empty_setup();
        assert!(los_map(&g, &tx).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_wall_shadow() {
        // Wall of height 20 at x=10, rows 5..=9; TX at (2, 7), h_tx = 15.
        let mut g = BuildingGrid::empty(32, 16, 4.0).unwrap();
        for y in 5..=9 {
            g.set_height(10, y, 20.0).unwrap();
        }
        let tx = TxConfig::at(2, 7);
        let los = los_map(&g, &tx);
        // Shadow by the interpolation rule: every cell beyond the wall whose
        // supercover walk touches column 10 within rows 5..=9 is blocked,
        // since the sight line never exceeds 15 m < 20 m.
        for y in 0..16 {
            for x in 0..32 {
                let touches_wall = crate::radiomap::supercover((2, 7), (x, y))
                    .iter()
                    .any(|c| c.x == 10 && (5..=9).contains(&c.y));
                let expect = if g.is_building(x, y) || touches_wall { 0.0 } else { 1.0 };
                assert_eq!(los[g.index(x, y)], expect, "cell ({x},{y})");
            }
        }
        assert_eq!(los[g.index(20, 7)], 0.0);
        assert_eq!(los[g.index(5, 7)], 1.0);
    }

    #[test]
    fn los_agrees_with_radiomap_primitive() {
        let g = crate::radiomap::generate_environment(4, &Default::default()).unwrap();
        let tx = crate::radiomap::place_tx(&g, 4, 15.0, 2.0, 5.9).unwrap();
        let los = los_map(&g, &tx);
        for (x, y) in g.open_cells() {
            assert_eq!(los[g.index(x, y)] == 1.0, line_of_sight(&g, &tx, (x, y)));
        }
    }

    #[test]
    fn feature_set_parsing() {
        assert_eq!(FeatureSet::parse("baseline").unwrap().channels().len(), 2);
        assert_eq!(FeatureSet::parse("physics").unwrap().channels().len(), 7);
        let s = FeatureSet::parse("los, dist3d,los").unwrap();
        assert_eq!(s.names(), vec!["dist3d", "los"]);
        assert!(matches!(FeatureSet::parse("height"), Err(FeatureError::UnknownChannel(_))));
        assert!(matches!(FeatureSet::parse(""), Err(FeatureError::EmptyFeatureSet)));
    }

    #[test]
    fn stack_contents() {
        let (g, tx) = empty_setup();
        let base = feature_stack(&g, &tx, &FeatureSet::baseline());
        assert_eq!(base.channels().len(), 2);
        let nx = base.channel(Channel::NormX).unwrap();
        assert_eq!((nx[0], nx[63]), (0.0, 1.0));
        let phys = feature_stack(&g, &tx, &FeatureSet::physics());
        assert!(phys.channel(Channel::BldgDensity).unwrap().iter().all(|&v| v == 0.0));
        let d = phys.channel(Channel::Dist3d).unwrap();
        let f = phys.channel(Channel::Fspl).unwrap();
        for i in (0..4096).step_by(97) {
            assert_eq!(f[i], fspl(d[i], tx.freq).unwrap());
        }
    }

    #[test]
    fn fspl_channel_matches_map_on_los_cells() {
        let g = crate::radiomap::generate_environment(8, &Default::default()).unwrap();
        let tx = crate::radiomap::place_tx(&g, 8, 15.0, 2.0, 5.9).unwrap();
        let map = compute_radio_map(&g, &tx, &OracleParams::default()).unwrap();
        let st = feature_stack(&g, &tx, &FeatureSet::physics());
        let los = st.channel(Channel::Los).unwrap();
        let f = st.channel(Channel::Fspl).unwrap();
        let mut n = 0;
        for (x, y) in g.open_cells() {
            let i = g.index(x, y);
            if los[i] == 1.0 {
                assert_eq!(map.pl[i], f[i]);
                n += 1;
            }
        }
        assert!(n > 100);
    }

    #[test]
    fn density_channel() {
        let mut g = BuildingGrid::empty(16, 16, 4.0).unwrap();
        g.set_height(8, 8, 10.0).unwrap();
        let d = density_map(&g, 1);
        assert_eq!(d[g.index(8, 8)], 1.0 / 5.0);
        assert_eq!(d[g.index(0, 0)], 0.0);
        assert_eq!(d[g.index(9, 8)], 1.0 / 5.0);
        assert_eq!(d[g.index(9, 9)], 0.0);
    }

    #[test]
    fn sampling_modes() {
        let (g, tx) = empty_setup();
        let map = compute_radio_map(&g, &tx, &OracleParams::default()).unwrap();
        let st = feature_stack(&g, &tx, &FeatureSet::physics());
        assert_eq!(pixel_dataset(&st, &map, Sampling::All, 0).unwrap().len(), 4096);
        assert_eq!(pixel_dataset(&st, &map, Sampling::Stride(2), 0).unwrap().len(), 1024);
        let a = pixel_dataset(&st, &map, Sampling::Random { k: 100, seed: 5 }, 3).unwrap();
        let b = pixel_dataset(&st, &map, Sampling::Random { k: 100, seed: 5 }, 3).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        assert_eq!(a.cells(), b.cells());
        assert!(a.groups().iter().all(|&g| g == 3));
        assert!(matches!(
            pixel_dataset(&st, &map, Sampling::Random { k: 0, seed: 5 }, 0),
            Err(FeatureError::EmptySelection)
        ));
    }

    #[test]
    fn building_cells_excluded() {
        let g = crate::radiomap::generate_environment(2, &Default::default()).unwrap();
        let tx = crate::radiomap::place_tx(&g, 2, 15.0, 2.0, 5.9).unwrap();
        let map = compute_radio_map(&g, &tx, &OracleParams::default()).unwrap();
        let st = feature_stack(&g, &tx, &FeatureSet::baseline());
        let ds = pixel_dataset(&st, &map, Sampling::All, 0).unwrap();
        assert_eq!(ds.len(), map.valid_count());
        assert!(ds.cells().iter().all(|&(x, y)| !g.is_building(x, y)));
    }

    #[test]
    fn csv_round_trip_is_stable() {
        let g = crate::radiomap::generate_environment(6, &Default::default()).unwrap();
        let tx = crate::radiomap::place_tx(&g, 6, 15.0, 2.0, 5.9).unwrap();
        let map = compute_radio_map(&g, &tx, &OracleParams::default()).unwrap();
        let st = feature_stack(&g, &tx, &FeatureSet::physics());
        let ds = pixel_dataset(&st, &map, Sampling::Stride(3), 7).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = PixelDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.schema(), ds.schema());
        assert_eq!(back.len(), ds.len());
        for (a, b) in back.targets().iter().zip(ds.targets()) {
            assert!((a - b).abs() <= 1e-5 * b.abs());
        }
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(buf, again);
        let reread = PixelDataset::read_csv(again.as_slice()).unwrap();
        assert_eq!(reread, back);
    }
}
