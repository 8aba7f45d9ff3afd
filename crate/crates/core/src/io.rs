//! BWM1 binary snapshots and the diagnostics CSV.
//!
//! A snapshot is the magic `BWM1`, the little-endian `u64` values `n`, `M`,
//! `L`, an `f64` time, then `M^n·L` samples of `u` followed by as many of
//! `u_t`, all little-endian `f64` in point-major order. The box length is not
//! stored; readers supply it.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::{gn_names, DiagnosticsRecord};
use crate::dynamics::SimulationState;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};

const MAGIC: &[u8; 4] = b"BWM1";

pub fn encode_snapshot(s: &SimulationState<f64>) -> Vec<u8> {
    let g = s.grid();
    let mut out = Vec::with_capacity(36 + 16 * s.u.values().len());
    out.extend_from_slice(MAGIC);
    for v in [g.dim(), g.points_per_axis(), s.ncomp()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&s.time.to_le_bytes());
    for x in s.u.values().iter().chain(s.ut.values()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8], length: f64) -> Result<SimulationState<f64>> {
    if bytes.len() < 36 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing BWM1 header".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[4 + 8 * i..12 + 8 * i].try_into().unwrap());
    let (n, m, l) = (word(0) as usize, word(1) as usize, word(2) as usize);
    let time = f64::from_le_bytes(bytes[28..36].try_into().unwrap());
    let grid = Grid::new(n, m, length)?;
    let count = grid.len() * l;
    let body = &bytes[36..];
    if body.len() != 16 * count {
        return Err(Error::Format(format!(
            "expected {} payload bytes for n={n}, M={m}, L={l}; found {}",
            16 * count,
            body.len()
        )));
    }
    let floats: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let u = GridField::new(&grid, l, floats[..count].to_vec())?;
    let ut = GridField::new(&grid, l, floats[count..].to_vec())?;
    SimulationState::new(u, ut, time)
}

pub fn write_snapshot(path: &Path, s: &SimulationState<f64>) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(&encode_snapshot(s))?;
    f.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path, length: f64) -> Result<SimulationState<f64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes, length)
}

/// Column names of the diagnostics CSV for a spatial dimension.
pub fn csv_header(dim: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "time",
        "energy",
        "energy_rel_drift",
        "grad_l2_sq",
        "cal_E",
        "h",
        "constraint_max",
        "tangent_max",
        "ortho_residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(gn_names(dim).iter().map(|n| format!("gn_{n}")));
    cols.extend(["bgw_ratio", "gronwall_envelope", "gronwall_violated"].map(String::from));
    cols
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV line (without newline) for a record.
pub fn csv_row(r: &DiagnosticsRecord) -> String {
    let mut cells: Vec<String> = [
        r.time,
        r.energy,
        r.energy_rel_drift,
        r.grad_l2_sq,
        r.cal_e,
        r.h,
        r.constraint_max,
        r.tangent_max,
        r.ortho_residual,
    ]
    .iter()
    .map(|&x| fmt(x))
    .collect();
    cells.extend(r.gn.values.iter().map(|&(_, v)| fmt(v)));
    cells.push(fmt(r.bgw_ratio.unwrap_or(0.0)));
    cells.push(fmt(r.gronwall_envelope));
    cells.push(if r.gronwall_violated { "1" } else { "0" }.to_string());
    cells.join(",")
}

/// Streams diagnostics rows to a file, flushing after every row.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, dim: usize) -> Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", csv_header(dim).join(","))?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.out, "{}", csv_row(r))?;
        self.out.flush()?;
        Ok(())
    }
}
