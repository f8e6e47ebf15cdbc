//! CSV tables written by the command line tool, and readers for the ones it
//! reads back (density and histogram tables for `compare`).

use std::io::{Read, Write};

use serde::Serialize;

use crate::ergodic::{ErgodicRow, StationaryDensity};
use crate::fvm::{DensityFlow, Grid1D, MassLedger};
use crate::sde::{empirical_density, CompareRow, Snapshot};

pub const DENSITY_HEADER: [&str; 3] = ["t", "x", "u"];
pub const HIST_HEADER: [&str; 3] = ["t", "x", "u_mc"];
pub const MASS_HEADER: [&str; 5] = ["t", "M", "C", "B", "r"];
pub const MC_HEADER: [&str; 4] = ["t", "alive_fraction", "killed_fraction", "exited_fraction"];
pub const COMPARE_HEADER: [&str; 3] = ["t", "l1", "mass_delta"];
pub const ERGODIC_HEADER: [&str; 3] = ["t", "l1_to_stationary", "sigma_mass"];
pub const STATIONARY_HEADER: [&str; 2] = ["x", "u"];

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("table: {0}")]
    Shape(String),
}

fn write_rows<W: Write, R: Serialize>(w: W, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), TableError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// `density.csv`: one row per (save time, cell centre).
pub fn write_density<W: Write>(w: W, flow: &DensityFlow) -> Result<(), TableError> {
    let xs = flow.grid.centers();
    let rows = flow.times.iter().zip(&flow.densities).flat_map(|(t, u)| xs.iter().zip(u).map(move |(x, v)| (*t, *x, *v)));
    write_rows(w, &DENSITY_HEADER, rows)
}

pub fn write_mass<W: Write>(w: W, ledger: &MassLedger) -> Result<(), TableError> {
    write_rows(w, &MASS_HEADER, ledger.rows.iter().map(|r| (r.t, r.m, r.c, r.b, r.r)))
}

pub fn write_mc<W: Write>(w: W, snaps: &[Snapshot]) -> Result<(), TableError> {
    write_rows(w, &MC_HEADER, snaps.iter().map(|s| (s.t, s.alive_fraction(), s.killed_fraction(), s.exited_fraction())))
}

/// `mc_hist.csv`: histogram densities of one-dimensional snapshots.
pub fn write_mc_hist<W: Write>(w: W, snaps: &[Snapshot], grid: Option<&Grid1D>) -> Result<(), TableError> {
    let mut rows = Vec::new();
    if let Some(g) = grid {
        let xs = g.centers();
        for s in snaps {
            let u = empirical_density(s, g);
            rows.extend(xs.iter().zip(u).map(|(x, v)| (s.t, *x, v)));
        }
    }
    write_rows(w, &HIST_HEADER, rows)
}

pub fn write_compare<W: Write>(w: W, rows: &[CompareRow]) -> Result<(), TableError> {
    write_rows(w, &COMPARE_HEADER, rows.iter().map(|r| (r.t, r.l1, r.mass_delta)))
}

pub fn write_ergodic<W: Write>(w: W, rows: &[ErgodicRow]) -> Result<(), TableError> {
    write_rows(w, &ERGODIC_HEADER, rows.iter().map(|r| (r.t, r.l1_to_stationary, r.sigma_mass)))
}

pub fn write_stationary<W: Write>(w: W, s: &StationaryDensity) -> Result<(), TableError> {
    write_rows(w, &STATIONARY_HEADER, s.grid.centers().into_iter().zip(s.u.iter().copied()))
}

/// Numeric table with a fixed header.
pub fn read_table<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>, TableError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let found: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if found != header {
        return Err(TableError::Header {
            expected: header.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != header.len() {
            return Err(TableError::Row { row, msg: format!("expected {} fields, found {}", header.len(), rec.len()) });
        }
        let vals = rec
            .iter()
            .map(|f| match f.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(TableError::Row { row, msg: format!("`{f}` is not a finite number") }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(vals);
    }
    Ok(rows)
}

/// Densities on a uniform one-dimensional grid at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl DensityTable {
    /// Groups (t, x, u) rows by time. Every time block must list the same
    /// cell centres, and times must increase strictly.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TableError> {
        let mut times: Vec<f64> = Vec::new();
        let mut x: Vec<f64> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut pos = 0;
        for (i, r) in rows.iter().enumerate() {
            let row = i + 1;
            if r.len() != 3 {
                return Err(TableError::Row { row, msg: "expected (t, x, u)".into() });
            }
            let (t, xi, u) = (r[0], r[1], r[2]);
            if times.last() != Some(&t) {
                if let Some(&prev) = times.last() {
                    if t <= prev {
                        return Err(TableError::Row { row, msg: format!("time {t} does not increase") });
                    }
                    if pos != x.len() {
                        return Err(TableError::Row { row, msg: format!("time {prev} has {pos} cells, expected {}", x.len()) });
                    }
                }
                times.push(t);
                values.push(Vec::with_capacity(x.len()));
                pos = 0;
            }
            if times.len() == 1 {
                if let Some(&last) = x.last() {
                    if xi <= last {
                        return Err(TableError::Row { row, msg: "cell centres must increase".into() });
                    }
                }
                x.push(xi);
            } else if x.get(pos) != Some(&xi) {
                return Err(TableError::Row { row, msg: format!("cell centre {xi} differs from the first time block") });
            }
            values.last_mut().expect("pushed").push(u);
            pos += 1;
        }
        if times.is_empty() {
            return Err(TableError::Shape("no rows".into()));
        }
        if pos != x.len() {
            return Err(TableError::Shape(format!("last time block has {pos} cells, expected {}", x.len())));
        }
        Ok(DensityTable { times, x, values })
    }

    pub fn read<R: Read>(r: R, header: &[&str]) -> Result<Self, TableError> {
        Self::from_rows(&read_table(r, header)?)
    }

    /// The uniform grid whose cell centres are `x`.
    pub fn grid(&self, k: u32) -> Result<Grid1D, TableError> {
        let n = self.x.len();
        if n < 2 {
            return Err(TableError::Shape("need at least two cells".into()));
        }
        let h = (self.x[n - 1] - self.x[0]) / (n - 1) as f64;
        let scale = self.x[0].abs().max(self.x[n - 1].abs()).max(h);
        for (i, xi) in self.x.iter().enumerate() {
            if (xi - (self.x[0] + i as f64 * h)).abs() > 1e-9 * scale {
                return Err(TableError::Shape(format!("cell centres are not uniform at index {i}")));
            }
        }
        Grid1D::on_interval(k, self.x[0] - 0.5 * h, self.x[n - 1] + 0.5 * h, n).map_err(|e| TableError::Shape(e.to_string()))
    }

    pub fn to_flow(&self, k: u32, eps: f64) -> Result<DensityFlow, TableError> {
        Ok(DensityFlow {
            grid: self.grid(k)?,
            eps,
            times: self.times.clone(),
            densities: self.values.clone(),
        })
    }
}
