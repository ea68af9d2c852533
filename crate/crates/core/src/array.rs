//! Planar reflector-array geometry: unit-cell grid, quadrant partition and
//! the bias power estimate.
//!
//! Conventions fixed here for the whole crate: the array lies in the x-y
//! plane with boresight along +z, the column index grows with +x and the row
//! index with +y, and the grid is centered so the cell centroid is the
//! origin.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Default cell pitch in meters (14.0 mm square cells).
pub const DEFAULT_PITCH_M: f64 = 0.014;
/// Default grid: 12 rows x 82 columns = 984 cells, the only near-square
/// factorization that splits into four equal rectangular quadrants of 246.
pub const DEFAULT_ROWS: usize = 12;
pub const DEFAULT_COLS: usize = 82;

/// One tunable reflecting element of the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCell {
    /// Row-major index: `index = row * cols + col`.
    pub index: usize,
    pub row: usize,
    pub col: usize,
    /// In-plane position (x, y) in meters, grid centered on the origin.
    pub position: [f64; 2],
    /// Control-circuit quadrant, 0..=3.
    pub quadrant: u8,
}

/// Immutable description of the reflector-array grid.
///
/// Construction validates every invariant; afterwards the geometry is safe
/// to share across threads.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Cell spacing in meters.
    pub pitch: f64,
    cells: Vec<UnitCell>,
    quadrant_sizes: [usize; 4],
}

/// Build a centered regular grid of `rows x cols` cells.
///
/// Quadrants are the four rectangular blocks obtained by splitting rows and
/// columns at their midpoints; when a dimension is odd the extra line goes
/// to the lower-index block.
pub fn build_geometry(rows: usize, cols: usize, pitch: f64) -> Result<ArrayGeometry> {
    if rows < 1 || cols < 1 {
        return Err(Error::InvalidArgument(format!(
            "grid must be at least 1x1, got {rows}x{cols}"
        )));
    }
    if !(pitch > 0.0) {
        return Err(Error::InvalidArgument(format!("pitch must be > 0, got {pitch}")));
    }
    let row_split = rows.div_ceil(2);
    let col_split = cols.div_ceil(2);
    let x0 = (cols as f64 - 1.0) / 2.0;
    let y0 = (rows as f64 - 1.0) / 2.0;
    let mut cells = Vec::with_capacity(rows * cols);
    let mut quadrant_sizes = [0usize; 4];
    for row in 0..rows {
        for col in 0..cols {
            let quadrant = 2 * u8::from(row >= row_split) + u8::from(col >= col_split);
            quadrant_sizes[quadrant as usize] += 1;
            cells.push(UnitCell {
                index: row * cols + col,
                row,
                col,
                position: [(col as f64 - x0) * pitch, (row as f64 - y0) * pitch],
                quadrant,
            });
        }
    }
    Ok(ArrayGeometry { rows, cols, pitch, cells, quadrant_sizes })
}

impl ArrayGeometry {
    /// The 984-cell prototype layout: 12 x 82 at 14 mm pitch.
    pub fn default_prototype() -> Self {
        build_geometry(DEFAULT_ROWS, DEFAULT_COLS, DEFAULT_PITCH_M)
            .expect("default geometry is valid")
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[UnitCell] {
        &self.cells
    }

    pub fn quadrant_sizes(&self) -> [usize; 4] {
        self.quadrant_sizes
    }

    /// Cell position embedded in the global frame: the array plane is z = 0.
    pub fn cell_position_3d(&self, index: usize) -> Result<[f64; 3]> {
        let cell = self.cells.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "cell index {index} out of range (0..{})",
                self.cells.len()
            ))
        })?;
        Ok([cell.position[0], cell.position[1], 0.0])
    }

    /// Replace the block partition by an explicit per-cell quadrant map
    /// (row-major, values 0..=3).
    pub fn with_quadrant_map(mut self, map: &[u8]) -> Result<Self> {
        if map.len() != self.cells.len() {
            return Err(Error::InvalidArgument(format!(
                "quadrant map has {} entries, geometry has {} cells",
                map.len(),
                self.cells.len()
            )));
        }
        let mut sizes = [0usize; 4];
        for (cell, &q) in self.cells.iter_mut().zip(map) {
            if q > 3 {
                return Err(Error::InvalidArgument(format!(
                    "quadrant values must be 0..=3, got {q} at cell {}",
                    cell.index
                )));
            }
            cell.quadrant = q;
            sizes[q as usize] += 1;
        }
        self.quadrant_sizes = sizes;
        Ok(self)
    }

    /// Load a geometry description file.
    ///
    /// Format: `key = value` lines, `#` comments. Keys: `rows`, `cols`,
    /// `pitch_m` and an optional `quadrant_map` (comma-separated, one value
    /// per cell, row-major).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Option<usize> = None;
        let mut cols: Option<usize> = None;
        let mut pitch: f64 = DEFAULT_PITCH_M;
        let mut quadrant_map: Option<Vec<u8>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::ConfigInvalid(format!("geometry line {}: expected key = value", lineno + 1))
            })?;
            let value = value.trim();
            let bad = |what: &str| {
                Error::ConfigInvalid(format!("geometry line {}: bad {what}: {value}", lineno + 1))
            };
            match key.trim() {
                "rows" => rows = Some(value.parse().map_err(|_| bad("rows"))?),
                "cols" => cols = Some(value.parse().map_err(|_| bad("cols"))?),
                "pitch_m" => pitch = value.parse().map_err(|_| bad("pitch_m"))?,
                "quadrant_map" => {
                    let map = value
                        .split(',')
                        .map(|s| s.trim().parse::<u8>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("quadrant_map"))?;
                    quadrant_map = Some(map);
                }
                other => {
                    return Err(Error::ConfigInvalid(format!(
                        "geometry line {}: unknown key {other}",
                        lineno + 1
                    )))
                }
            }
        }
        let rows = rows.ok_or_else(|| Error::ConfigInvalid("geometry: missing rows".into()))?;
        let cols = cols.ok_or_else(|| Error::ConfigInvalid("geometry: missing cols".into()))?;
        let geometry = build_geometry(rows, cols, pitch)?;
        match quadrant_map {
            Some(map) => geometry.with_quadrant_map(&map),
            None => Ok(geometry),
        }
    }

    /// Serialize in the same `key = value` format accepted by [`ArrayGeometry::parse`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows = {}", self.rows);
        let _ = writeln!(out, "cols = {}", self.cols);
        let _ = writeln!(out, "pitch_m = {}", self.pitch);
        let block = build_geometry(self.rows, self.cols, self.pitch).expect("valid");
        if block.cells.iter().zip(&self.cells).any(|(a, b)| a.quadrant != b.quadrant) {
            let map: Vec<String> =
                self.cells.iter().map(|c| c.quadrant.to_string()).collect();
            let _ = writeln!(out, "quadrant_map = {}", map.join(","));
        }
        out
    }
}

/// Total DC bias power for a set of cell voltages with a common varactor
/// leak current: sum(v_n) * i_leak. A full 984-cell surface at 5 V with a
/// 1 fA leak draws 4.92 pW.
pub fn estimate_bias_power(voltages: &[f64], leak_current: f64) -> Result<f64> {
    if let Some(v) = voltages.iter().find(|v| **v < 0.0) {
        return Err(Error::InvalidArgument(format!("negative bias voltage {v}")));
    }
    if leak_current < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "negative leak current {leak_current}"
        )));
    }
    Ok(voltages.iter().sum::<f64>() * leak_current)
}
