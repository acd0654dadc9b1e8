//! The synthetic benchmark: environments, transmitters, radio maps and a
//! by-map split, in memory or on disk behind a manifest.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use radiolab::features::{feature_stack, pixel_dataset, FeatureSet, PixelDataset, Sampling};
use radiolab::io::{
    grid_from_pgm, grid_to_pgm, read_manifest, read_radio_map, write_manifest, write_radio_map, GridHeader, ManifestEntry, Pgm,
};
use radiolab::radiomap::{
    compute_radio_map, generate_environment, place_tx, split_dataset, BuildingGrid, DatasetSplit, RadioMap, Split, TxConfig,
};
use radiolab::rng::derive_seed;

use crate::config::BenchConfig;
use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MapSample {
    pub grid: BuildingGrid,
    pub tx: TxConfig,
    pub map: RadioMap,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub maps: Vec<MapSample>,
}

impl Benchmark {
    pub fn generate(cfg: &BenchConfig, seed: u64) -> Result<Self> {
        let split = split_dataset(cfg.n_maps, cfg.splits, derive_seed(seed, &[3]))?;
        let labels = split.assignments();
        let maps = (0..cfg.n_maps)
            .map(|i| {
                let grid = generate_environment(derive_seed(seed, &[1, i as u64]), &cfg.grid)?;
                let tx = place_tx(&grid, derive_seed(seed, &[2, i as u64]), cfg.h_tx, cfg.h_rx, cfg.freq)?;
                let map = compute_radio_map(&grid, &tx, &cfg.oracle)?;
                Ok(MapSample { grid, tx, map, split: labels[i] })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { maps })
    }

    pub fn split(&self) -> DatasetSplit {
        DatasetSplit::from_assignments(&self.maps.iter().map(|m| m.split).collect::<Vec<_>>())
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.maps.len()).filter(|&i| self.maps[i].split == split).collect()
    }

    /// Writes `grids/`, `headers/`, `radiomaps/` and `manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for sub in ["grids", "headers", "radiomaps"] {
            fs::create_dir_all(dir.join(sub)).map_err(io_err(dir.join(sub)))?;
        }
        let mut entries = Vec::with_capacity(self.maps.len());
        for (i, m) in self.maps.iter().enumerate() {
            let entry = ManifestEntry {
                grid_path: format!("grids/map_{i:03}.pgm"),
                header_path: format!("headers/map_{i:03}.json"),
                radiomap_path: format!("radiomaps/map_{i:03}.csv"),
                split: m.split,
            };
            write_with(&dir.join(&entry.grid_path), |w| Ok(grid_to_pgm(&m.grid).write(w)?))?;
            write_with(&dir.join(&entry.header_path), |w| {
                serde_json::to_writer_pretty(&mut *w, &GridHeader::new(&m.grid, &m.tx)).map_err(|e| CliError::Data(e.to_string()))?;
                writeln!(w).map_err(io_err(&entry.header_path))
            })?;
            write_with(&dir.join(&entry.radiomap_path), |w| Ok(write_radio_map(&m.map, w)?))?;
            entries.push(entry);
        }
        write_with(&dir.join("manifest.json"), |w| Ok(write_manifest(&entries, w)?))
    }

    /// Reads a benchmark written by [`Benchmark::write`].
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let entries = read_manifest(File::open(&path).map_err(io_err(&path))?)?;
        if entries.is_empty() {
            return Err(CliError::Data(format!("{}: manifest lists no maps", path.display())));
        }
        let maps = entries
            .iter()
            .map(|e| {
                let open = |p: &str| File::open(dir.join(p)).map(BufReader::new).map_err(io_err(dir.join(p)));
                let header: GridHeader =
                    serde_json::from_reader(open(&e.header_path)?).map_err(|err| CliError::Data(format!("{}: {err}", e.header_path)))?;
                let grid = grid_from_pgm(&Pgm::read(open(&e.grid_path)?)?, header.cell_size)?;
                let map = read_radio_map(open(&e.radiomap_path)?)?;
                if (map.width, map.height) != (grid.width(), grid.height()) {
                    return Err(CliError::Data(format!("{}: radio map size differs from its grid", e.radiomap_path)));
                }
                let tx = header.tx();
                tx.validate(&grid)?;
                Ok(MapSample { grid, tx, map, split: e.split })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { maps })
    }

    /// Feature rows of one map, grouped by map index.
    pub fn pixels(&self, index: usize, features: &FeatureSet, sampling: Sampling) -> Result<PixelDataset> {
        let m = &self.maps[index];
        let stack = feature_stack(&m.grid, &m.tx, features);
        Ok(pixel_dataset(&stack, &m.map, sampling, index as u32)?)
    }

    /// Rows from every map of `split`, concatenated in map order.
    pub fn split_pixels(&self, split: Split, features: &FeatureSet, sampling: impl Fn(usize) -> Sampling) -> Result<PixelDataset> {
        let idx = self.indices(split);
        if idx.is_empty() {
            return Err(CliError::Data(format!("benchmark has no {} maps", split.as_str())));
        }
        let parts = idx.iter().map(|&i| self.pixels(i, features, sampling(i))).collect::<Result<Vec<_>>>()?;
        Ok(PixelDataset::concat(&parts)?)
    }
}

pub(crate) fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    f(&mut w)?;
    w.flush().map_err(io_err(path))
}
