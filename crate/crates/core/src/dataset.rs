//! Time-series input and lag unrolling.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// A `T × m` multivariate series, one row per time point.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesDataset {
    values: DMatrix<f64>,
    variable_names: Vec<String>,
}

impl TimeSeriesDataset {
    pub fn new(values: DMatrix<f64>, variable_names: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::InsufficientData("time series has no rows".into()));
        }
        if variable_names.len() != values.ncols() {
            return Err(Error::InvalidInput(format!(
                "{} names for {} columns",
                variable_names.len(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {r}, column {c}"
            )));
        }
        Ok(TimeSeriesDataset {
            values,
            variable_names,
        })
    }

    /// Columns named `X1..Xm`.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let names = default_names(values.ncols());
        TimeSeriesDataset::new(values, names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn num_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.variable_names)?;
        for r in 0..self.len() {
            w.write_record(self.values.row(r).iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("X{i}")).collect()
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Reads raw records, returning (header, rows) with row numbers 1-based as
/// they appear in the file.
fn read_records(path: &Path) -> Result<(Option<Vec<String>>, Vec<(usize, Vec<String>)>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        records.push((i + 1, rec.iter().map(str::to_owned).collect::<Vec<_>>()));
    }
    let header = match records.first() {
        // a first row without a single numeric cell is a header
        Some((_, first)) if first.iter().all(|c| parse_cell(c).is_none()) => {
            Some(records.remove(0).1)
        }
        _ => None,
    };
    Ok((header, records))
}

fn parse_row(row_no: usize, cells: &[String], skip: usize) -> Result<Vec<f64>> {
    cells
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(c, s)| match parse_cell(s) {
            Some(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse {
                row: row_no,
                col: c + 1,
                msg: format!("expected a finite number, found {s:?}"),
            }),
        })
        .collect()
}

/// Loads a comma-separated numeric file with an optional header line.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let (header, records) = read_records(path)?;
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(|r| r.1.len()))
        .ok_or_else(|| Error::InsufficientData(format!("{} has no data rows", path.display())))?;
    let mut data = Vec::with_capacity(records.len() * width);
    for (row_no, cells) in &records {
        if cells.len() != width {
            return Err(Error::Format(format!(
                "row {row_no} has {} fields, expected {width}",
                cells.len()
            )));
        }
        data.extend(parse_row(*row_no, cells, 0)?);
    }
    if records.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    let values = DMatrix::from_row_slice(records.len(), width, &data);
    let names = header.unwrap_or_else(|| default_names(width));
    TimeSeriesDataset::new(values, names)
}

/// Loads several realizations from one file whose first column holds a
/// realization id. Realizations are returned in order of first appearance.
pub fn load_realizations_csv(path: impl AsRef<Path>) -> Result<Vec<TimeSeriesDataset>> {
    let path = path.as_ref();
    let (header, records) = read_records(path)?;
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(|r| r.1.len()))
        .unwrap_or(0);
    if width < 2 {
        return Err(Error::Format(
            "realization file needs an id column and at least one variable".into(),
        ));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<f64>> = HashMap::new();
    for (row_no, cells) in &records {
        if cells.len() != width {
            return Err(Error::Format(format!(
                "row {row_no} has {} fields, expected {width}",
                cells.len()
            )));
        }
        let row = parse_row(*row_no, cells, 1)?;
        let id = cells[0].clone();
        groups
            .entry(id.clone())
            .or_insert_with(|| {
                order.push(id);
                Vec::new()
            })
            .extend(row);
    }
    let names = header
        .map(|h| h[1..].to_vec())
        .unwrap_or_else(|| default_names(width - 1));
    order
        .into_iter()
        .map(|id| {
            let data = &groups[&id];
            let rows = data.len() / (width - 1);
            TimeSeriesDataset::new(DMatrix::from_row_slice(rows, width - 1, data), names.clone())
        })
        .collect()
}

/// Loads every `*.csv` file in a directory, sorted by file name.
pub fn load_realizations_dir(dir: impl AsRef<Path>) -> Result<Vec<TimeSeriesDataset>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no csv files in {}",
            dir.display()
        )));
    }
    files.iter().map(load_csv).collect()
}

/// Lag-unrolled data: one row per window, columns ordered from the lag
/// `tau_max` block down to the lag-0 block.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowDataset {
    values: DMatrix<f64>,
    columns: Vec<NodeId>,
    m: usize,
    tau_max: usize,
    iid: bool,
}

/// Column position of `(var, lag)` in a window dataset.
pub fn window_column(var: usize, lag: usize, m: usize, tau_max: usize) -> usize {
    (tau_max - lag) * m + var
}

fn window_columns(m: usize, tau_max: usize) -> Vec<NodeId> {
    (0..=tau_max)
        .rev()
        .flat_map(|lag| (0..m).map(move |var| NodeId::new(var, lag)))
        .collect()
}

impl WindowDataset {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn columns(&self) -> &[NodeId] {
        &self.columns
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    /// True when rows come from independent realizations.
    pub fn iid(&self) -> bool {
        self.iid
    }

    pub fn num_rows(&self) -> usize {
        self.values.nrows()
    }

    /// Per-column z-scoring with the 1/n standard deviation; constant
    /// columns are only centered.
    pub fn standardized(&self) -> WindowDataset {
        let n = self.values.nrows() as f64;
        let mut values = self.values.clone();
        for mut col in values.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / n).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        WindowDataset {
            values,
            ..self.clone()
        }
    }
}

/// Sliding-window unrolling of a single series.
pub fn unroll(d: &TimeSeriesDataset, tau_max: usize) -> Result<WindowDataset> {
    let t = d.len();
    let m = d.num_vars();
    if t <= tau_max {
        return Err(Error::InsufficientData(format!(
            "T={t} time points cannot fill a window with tau_max={tau_max}"
        )));
    }
    let n = t - tau_max;
    let src = d.values();
    let values = DMatrix::from_fn(n, m * (tau_max + 1), |r, c| {
        let lag = tau_max - c / m;
        let var = c % m;
        src[(r + tau_max - lag, var)]
    });
    Ok(WindowDataset {
        values,
        columns: window_columns(m, tau_max),
        m,
        tau_max,
        iid: false,
    })
}

/// One window per realization, taken from its final `tau_max + 1` points.
pub fn iid_windows(realizations: &[TimeSeriesDataset], tau_max: usize) -> Result<WindowDataset> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::InsufficientData("no realizations".into()))?;
    let m = first.num_vars();
    let width = m * (tau_max + 1);
    let mut data = Vec::with_capacity(realizations.len() * width);
    for (k, real) in realizations.iter().enumerate() {
        if real.num_vars() != m {
            return Err(Error::InvalidInput(format!(
                "realization {k} has {} variables, expected {m}",
                real.num_vars()
            )));
        }
        if real.len() < tau_max + 1 {
            return Err(Error::InsufficientData(format!(
                "realization {k} has {} time points, need {}",
                real.len(),
                tau_max + 1
            )));
        }
        let last = real.len() - 1;
        for lag in (0..=tau_max).rev() {
            for var in 0..m {
                data.push(real.values()[(last - lag, var)]);
            }
        }
    }
    Ok(WindowDataset {
        values: DMatrix::from_row_slice(realizations.len(), width, &data),
        columns: window_columns(m, tau_max),
        m,
        tau_max,
        iid: true,
    })
}
