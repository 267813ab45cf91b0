//! Georeferenced grids and ground-point tables.
//!
//! Rasters are stored row-major with the northern row first, the layout of
//! the ESRI ASCII grid format they are read from and written to. Window
//! sizes are given in metres and converted to an odd number of cells:
//! `⌈window/cellsize⌉`, bumped to the next odd count, at least 1.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::synth::csv_error;
use crate::{Error, Result};

pub const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub ncols: usize,
    pub nrows: usize,
    /// Lower-left corner, m.
    pub xll: f64,
    pub yll: f64,
    /// Cell side, m.
    pub cellsize: f64,
    pub nodata: f64,
    /// Row-major, northern row first.
    pub values: Vec<f64>,
}

impl Raster {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::Config(format!(
                "raster must be at least 1×1, got {ncols}×{nrows}"
            )));
        }
        if !(cellsize > 0.0) {
            return Err(Error::Config(format!("cell size must be positive, got {cellsize}")));
        }
        if values.len() != ncols * nrows {
            return Err(Error::Shape {
                expected: ncols * nrows,
                got: values.len(),
            });
        }
        Ok(Self {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        })
    }

    pub fn filled(ncols: usize, nrows: usize, xll: f64, yll: f64, cellsize: f64, value: f64) -> Result<Self> {
        Self::new(
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            DEFAULT_NODATA,
            vec![value; ncols * nrows],
        )
    }

    /// Same grid as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(
            self.ncols,
            self.nrows,
            self.xll,
            self.yll,
            self.cellsize,
            self.nodata,
            values,
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || v.is_nan()
    }

    /// The value at `index`, or `None` for NODATA.
    pub fn valid(&self, index: usize) -> Option<f64> {
        let v = self.values[index];
        (!self.is_nodata(v)).then_some(v)
    }

    pub fn same_grid(&self, other: &Raster) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && self.xll == other.xll
            && self.yll == other.yll
            && self.cellsize == other.cellsize
    }

    /// `(row, col)` of the cell containing `(x, y)`. Points on the north or
    /// east edge belong to the last cell.
    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        let fx = (x - self.xll) / self.cellsize;
        let fy = (y - self.yll) / self.cellsize;
        if !(fx >= 0.0 && fx <= self.ncols as f64 && fy >= 0.0 && fy <= self.nrows as f64) {
            return Err(Error::Bounds { x, y });
        }
        let col = (fx.floor() as usize).min(self.ncols - 1);
        let from_south = (fy.floor() as usize).min(self.nrows - 1);
        Ok((self.nrows - 1 - from_south, col))
    }

    /// Centre of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.xll + (col as f64 + 0.5) * self.cellsize,
            self.yll + ((self.nrows - 1 - row) as f64 + 0.5) * self.cellsize,
        )
    }

    fn window_cells(&self, window_m: f64) -> usize {
        // a window that is a whole number of cells must not round up past it
        let cells = window_m / self.cellsize;
        let cells = if (cells - cells.round()).abs() < 1e-9 {
            cells.round()
        } else {
            cells.ceil()
        };
        let mut side = (cells as usize).max(1);
        if side.is_multiple_of(2) {
            side += 1;
        }
        side
    }

    fn mean_around(&self, row: usize, col: usize, half: usize) -> Option<f64> {
        let r0 = row.saturating_sub(half);
        let r1 = (row + half).min(self.nrows - 1);
        let c0 = col.saturating_sub(half);
        let c1 = (col + half).min(self.ncols - 1);
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in r0..=r1 {
            for c in c0..=c1 {
                let v = self.get(r, c);
                if !self.is_nodata(v) {
                    sum += v;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Boxcar speckle filter: every valid cell becomes the mean of the valid
    /// cells in the centred window, truncated at the raster edge.
    pub fn moving_average(&self, window_m: f64) -> Result<Raster> {
        if !(window_m > 0.0) {
            return Err(Error::Config(format!("window must be positive, got {window_m} m")));
        }
        let half = self.window_cells(window_m) / 2;
        let values: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (row, col) = (i / self.ncols, i % self.ncols);
                if self.is_nodata(self.values[i]) {
                    self.values[i]
                } else {
                    self.mean_around(row, col, half).unwrap_or(self.nodata)
                }
            })
            .collect();
        self.with_values(values)
    }

    /// Mean of the valid cells in a `window_m` square centred on the cell
    /// containing `(x, y)`; `None` when every cell there is NODATA.
    pub fn window_mean(&self, x: f64, y: f64, window_m: f64) -> Result<Option<f64>> {
        if !(window_m > 0.0) {
            return Err(Error::Config(format!("window must be positive, got {window_m} m")));
        }
        let (row, col) = self.cell_of(x, y)?;
        Ok(self.mean_around(row, col, self.window_cells(window_m) / 2))
    }

    pub fn to_asc_string(&self) -> String {
        let mut s = String::with_capacity(self.len() * 8 + 128);
        writeln!(s, "ncols {}", self.ncols).unwrap();
        writeln!(s, "nrows {}", self.nrows).unwrap();
        writeln!(s, "xllcorner {}", self.xll).unwrap();
        writeln!(s, "yllcorner {}", self.yll).unwrap();
        writeln!(s, "cellsize {}", self.cellsize).unwrap();
        writeln!(s, "NODATA_value {}", self.nodata).unwrap();
        for row in self.values.chunks(self.ncols) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                if self.is_nodata(*v) {
                    write!(s, "{}", self.nodata).unwrap();
                } else {
                    write!(s, "{v}").unwrap();
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn from_asc_str(text: &str, source: &Path) -> Result<Raster> {
        const KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];
        let mut header: [Option<f64>; 6] = [None; 6];
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();

        // Header lines start with a letter; data starts at the first line that does not.
        while let Some(&(n, line)) = lines.peek() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                lines.next();
                continue;
            }
            if !trimmed.starts_with(|c: char| c.is_ascii_alphabetic()) {
                break;
            }
            lines.next();
            let mut parts = trimmed.split_whitespace();
            let key = parts.next().unwrap().to_ascii_lowercase();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::format(source, n, Some(1), format!("unknown header key {key:?}")))?;
            let raw = parts
                .next()
                .ok_or_else(|| Error::format(source, n, None, format!("{key} has no value")))?;
            let value = raw.parse::<f64>().map_err(|_| {
                Error::format(
                    source,
                    n,
                    Some(key.len() + 2),
                    format!("cannot parse {key} value {raw:?}"),
                )
            })?;
            if header[slot].replace(value).is_some() {
                return Err(Error::format(source, n, None, format!("duplicate header key {key}")));
            }
        }
        let data_line = lines.peek().map_or(text.lines().count() + 1, |(n, _)| *n);
        let mut h = [0.0; 6];
        for (i, v) in header.iter().enumerate() {
            h[i] =
                v.ok_or_else(|| Error::format(source, data_line, None, format!("missing header key {}", KEYS[i])))?;
        }
        let as_count = |v: f64, key: &str| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::format(
                    source,
                    1,
                    None,
                    format!("{key} must be a positive integer, got {v}"),
                ))
            }
        };
        let ncols = as_count(h[0], "ncols")?;
        let nrows = as_count(h[1], "nrows")?;

        let mut values = Vec::with_capacity(ncols * nrows);
        let mut rows_read = 0;
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if rows_read == nrows {
                return Err(Error::format(source, n, None, format!("more than {nrows} data rows")));
            }
            let mut count = 0;
            let mut col = 1;
            for tok in line.split([' ', '\t']) {
                if !tok.is_empty() {
                    let v = tok
                        .parse::<f64>()
                        .map_err(|_| Error::format(source, n, Some(col), format!("cannot parse value {tok:?}")))?;
                    values.push(v);
                    count += 1;
                }
                col += tok.len() + 1;
            }
            if count != ncols {
                return Err(Error::format(
                    source,
                    n,
                    None,
                    format!("expected {ncols} values, found {count}"),
                ));
            }
            rows_read += 1;
        }
        if rows_read != nrows {
            return Err(Error::format(
                source,
                text.lines().count() + 1,
                None,
                format!("expected {nrows} data rows, found {rows_read}"),
            ));
        }
        Raster::new(ncols, nrows, h[2], h[3], h[4], h[5], values)
            .map_err(|e| Error::format(source, 1, None, e.to_string()))
    }

    pub fn read_asc(path: impl AsRef<Path>) -> Result<Raster> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_asc_str(&text, path)
    }

    pub fn write_asc(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_asc_string()).map_err(|e| Error::io(path, e))
    }
}

/// A ground sampling point.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSample {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Measured volumetric moisture, cm³·cm⁻³.
    pub mv: f64,
    /// Measured crop height, m.
    pub height: f64,
    pub sigma_p_db: Option<f64>,
    pub sigma_l_db: Option<f64>,
    pub sigma_c_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleTable {
    pub rows: Vec<GroundSample>,
}

const SAMPLE_REQUIRED: [&str; 5] = ["id", "x", "y", "mv", "height"];
const SAMPLE_SIGMA: [&str; 3] = ["sigma_p_db", "sigma_l_db", "sigma_c_db"];

pub fn read_samples(path: impl AsRef<Path>) -> Result<SampleTable> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mut req = [0usize; 5];
    for (slot, name) in req.iter_mut().zip(SAMPLE_REQUIRED) {
        *slot = find(name).ok_or_else(|| Error::format(path, 1, None, format!("missing column {name}")))?;
    }
    let opt: Vec<Option<usize>> = SAMPLE_SIGMA.iter().map(|n| find(n)).collect();

    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |col: usize, name: &str| -> Result<f64> {
            let raw = rec.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(path, line, Some(col + 1), format!("bad {name} value {raw:?}")))
        };
        let opt_num = |col: Option<usize>, name: &str| -> Result<Option<f64>> {
            match col.map(|c| (c, rec.get(c).unwrap_or(""))) {
                None | Some((_, "")) | Some((_, "NA")) => Ok(None),
                Some((c, _)) => num(c, name).map(Some),
            }
        };
        let id = rec.get(req[0]).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::format(path, line, Some(req[0] + 1), "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::format(
                path,
                line,
                Some(req[0] + 1),
                format!("duplicate id {id:?}"),
            ));
        }
        rows.push(GroundSample {
            x: num(req[1], "x")?,
            y: num(req[2], "y")?,
            mv: num(req[3], "mv")?,
            height: num(req[4], "height")?,
            sigma_p_db: opt_num(opt[0], SAMPLE_SIGMA[0])?,
            sigma_l_db: opt_num(opt[1], SAMPLE_SIGMA[1])?,
            sigma_c_db: opt_num(opt[2], SAMPLE_SIGMA[2])?,
            id,
        });
    }
    Ok(SampleTable { rows })
}

pub fn write_samples(table: &SampleTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let with_sigma = table
        .rows
        .iter()
        .any(|r| r.sigma_p_db.is_some() || r.sigma_l_db.is_some() || r.sigma_c_db.is_some());
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<&str> = SAMPLE_REQUIRED.to_vec();
    if with_sigma {
        header.extend(SAMPLE_SIGMA);
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    for r in &table.rows {
        let mut rec = vec![
            r.id.clone(),
            r.x.to_string(),
            r.y.to_string(),
            r.mv.to_string(),
            r.height.to_string(),
        ];
        if with_sigma {
            rec.extend([opt(r.sigma_p_db), opt(r.sigma_l_db), opt(r.sigma_c_db)]);
        }
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
