//! Experiment drivers: a monitored run, and the convergence, scaling and
//! perturbation studies built on top of [`evolve`].

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::calibration::Calibration;
use crate::config::{InitialData, RunConfig};
use crate::diagnostics::{rescale_state, scaling_energy_check, uniqueness_energy, DiagnosticsRecord, Monitor, ScalingCheck};
use crate::dynamics::SimulationState;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::initial::{make_initial, perturb, traveling_wave};
use crate::integrator::{evolve, evolve_tracking};
use crate::io::{write_snapshot, CsvWriter};

/// Smallest per-run error assumed when setting the scaling-study tolerance.
pub const SCALING_ERROR_FLOOR: f64 = 1e-5;

/// Result of a monitored run.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: SimulationState<f64>,
    /// Set when the run stopped early on a discrete blow-up.
    pub blowup: Option<Error>,
    pub warnings: Vec<String>,
    pub csv_path: Option<PathBuf>,
}

fn resolve(out_dir: Option<&Path>, p: &Path) -> PathBuf {
    match out_dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p.to_path_buf(),
    }
}

/// Evolves a configuration, recording diagnostics at the output cadence.
///
/// With `write_files` the CSV (and the final snapshot, if configured) is
/// written relative to `out_dir`. A discrete blow-up is not an error here: the
/// outcome carries it, and the last row holds the diagnostics of the last
/// finite state stamped with the failure time.
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>, write_files: bool, cal: &Calibration) -> Result<RunOutcome> {
    let s0 = make_initial(cfg)?;
    let monitor = Monitor::new(&cfg.manifold, &s0, cfg.scheme.dealias_fraction, cal.gronwall_c(cfg.dim))?;
    let csv_path = write_files.then(|| resolve(out_dir, &cfg.csv));
    let mut csv = match &csv_path {
        Some(p) => Some(CsvWriter::create(p, cfg.dim)?),
        None => None,
    };
    let mut records = Vec::new();
    let warnings = cfg.scheme.warnings(s0.grid());
    let result = evolve_tracking(&cfg.manifold, &s0, &cfg.scheme, cfg.t_end, cfg.output_every, |s| {
        let r = monitor.record(s)?;
        if let Some(w) = csv.as_mut() {
            w.write(&r)?;
        }
        records.push(r);
        Ok(())
    });
    match result {
        Ok(final_state) => {
            if let (true, Some(p)) = (write_files, &cfg.snapshot) {
                write_snapshot(&resolve(out_dir, p), &final_state)?;
            }
            Ok(RunOutcome {
                records,
                final_state,
                blowup: None,
                warnings,
                csv_path,
            })
        }
        Err(interrupted) => {
            let Error::DiscreteBlowup { time, .. } = &interrupted.error else {
                return Err(interrupted.error);
            };
            if let Ok(mut r) = monitor.record(&interrupted.last) {
                r.time = *time;
                r.gronwall_violated = true;
                if let Some(w) = csv.as_mut() {
                    w.write(&r)?;
                }
                records.push(r);
            }
            Ok(RunOutcome {
                records,
                final_state: interrupted.last,
                blowup: Some(interrupted.error),
                warnings,
                csv_path,
            })
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sup_diff(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// `(dt, sup_t ‖u − u_exact‖_∞)` at the configured grid size.
    pub dt_rows: Vec<(f64, f64)>,
    pub temporal_order: Option<f64>,
    /// `(M, sup_t ‖u − u_exact‖_∞)` at the configured step size.
    pub m_rows: Vec<(usize, f64)>,
}

/// Sup-in-time error of a traveling-wave run against the exact solution.
pub fn traveling_wave_error(cfg: &RunConfig, grid_size: usize, dt: f64) -> Result<f64> {
    let InitialData::TravelingWave { k, k2, omega, axes } = cfg.initial else {
        return Err(Error::validation("initial", "the convergence study needs traveling_wave data"));
    };
    let grid = Grid::new(cfg.dim, grid_size, cfg.length)?;
    let l = cfg.manifold.ambient_dim();
    let exact = |t: f64| traveling_wave(&grid, l, (k, k2), omega, axes, t);
    let s0 = exact(0.0);
    let scheme = cfg.scheme.with_dt(dt);
    let mut worst: f64 = 0.0;
    evolve(&cfg.manifold, &s0, &scheme, cfg.t_end, dt, |s| {
        worst = worst.max(sup_diff(&s.u, &exact(s.time).u));
        Ok(())
    })?;
    Ok(worst)
}

pub fn convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    if !matches!(cfg.initial, InitialData::TravelingWave { .. }) {
        return Err(Error::validation("initial", "the convergence study needs traveling_wave data"));
    }
    if cfg.t_end == 0.0 {
        return Ok(ConvergenceReport {
            dt_rows: Vec::new(),
            temporal_order: None,
            m_rows: Vec::new(),
        });
    }
    let dt_rows = cfg
        .refine_dt
        .par_iter()
        .map(|&dt| traveling_wave_error(cfg, cfg.grid_size, dt).map(|e| (dt, e)))
        .collect::<Result<Vec<_>>>()?;
    let m_rows = cfg
        .refine_m
        .par_iter()
        .map(|&m| traveling_wave_error(cfg, m, cfg.scheme.dt).map(|e| (m, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        temporal_order: fit_log_slope(&dt_rows),
        dt_rows,
        m_rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub lambda: usize,
    pub check: ScalingCheck,
    /// Largest `|u_λ(t) − u(λ²t)(λ·)|` over the compared output times.
    pub correspondence_error: f64,
    /// Error of a single run: against the exact solution for traveling waves,
    /// by step doubling otherwise.
    pub single_run_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn trajectory(cfg: &RunConfig, s0: &SimulationState<f64>, dt: f64, t_end: f64, output_every: f64) -> Result<Vec<SimulationState<f64>>> {
    let mut out = Vec::new();
    evolve(&cfg.manifold, s0, &cfg.scheme.with_dt(dt), t_end, output_every, |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Runs `u` to `λ²T` and `u_λ` to `T` with steps `dt` and `dt/λ²`, and compares
/// the rescaled base trajectory with the scaled one at matching steps.
pub fn scaling(cfg: &RunConfig, lambda: usize) -> Result<ScalingReport> {
    if lambda == 0 {
        return Err(Error::validation("lambda", "must be a positive integer"));
    }
    let s0 = make_initial(cfg)?;
    let check = scaling_energy_check(&s0, lambda)?;
    let l2 = (lambda * lambda) as f64;
    let dt = cfg.scheme.dt;
    let (base, scaled) = rayon::join(
        || trajectory(cfg, &s0, dt, l2 * cfg.t_end, l2 * cfg.output_every),
        || trajectory(cfg, &rescale_state(&s0, lambda), dt / l2, cfg.t_end, cfg.output_every),
    );
    let (base, scaled) = (base?, scaled?);
    let correspondence_error = base
        .iter()
        .zip(&scaled)
        .map(|(b, s)| sup_diff(&b.u.rescaled(lambda), &s.u))
        .fold(0.0, f64::max);

    let single_run_error = match cfg.initial {
        InitialData::TravelingWave { .. } => traveling_wave_error(cfg, cfg.grid_size, dt)?,
        _ => {
            let fine = trajectory(cfg, &s0, dt / 2.0, cfg.t_end, cfg.output_every)?;
            let coarse = trajectory(cfg, &s0, dt, cfg.t_end, cfg.output_every)?;
            coarse
                .iter()
                .zip(&fine)
                .map(|(a, b)| sup_diff(&a.u, &b.u))
                .fold(0.0, f64::max)
        }
    };
    let tolerance = 10.0 * single_run_error.max(SCALING_ERROR_FLOOR);
    Ok(ScalingReport {
        lambda,
        check,
        correspondence_error,
        single_run_error,
        tolerance,
        passed: correspondence_error <= tolerance && base.len() == scaled.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationRow {
    pub delta: f64,
    /// `𝓔_w(0)`, absent when the perturbation could not be built.
    pub initial_difference: Option<f64>,
    /// `G(δ) = sup_t 𝓔_w(t)/𝓔_w(0)`, absent for `δ = 0` or on failure.
    pub growth: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationReport {
    pub rows: Vec<PerturbationRow>,
    /// `max G / min G` across the successful rows.
    pub spread: Option<f64>,
    /// Relative spread of `𝓔_w(0)/δ` across the successful rows.
    pub linearity: Option<f64>,
}

impl PerturbationReport {
    /// Growth uniform within a factor 2 and initial differences linear within 1%.
    pub fn passed(&self) -> bool {
        self.spread.is_some_and(|s| s <= 2.0) && self.linearity.is_some_and(|l| l <= 0.01)
    }
}

fn perturbation_width(cfg: &RunConfig) -> f64 {
    match cfg.initial {
        InitialData::Bump { width, .. } => width,
        _ => cfg.length / 8.0,
    }
}

/// Evolves the base data and a perturbed copy for each `δ`, tracking the
/// difference energy `𝓔_w` along the pair.
pub fn perturbation(cfg: &RunConfig, deltas: &[f64]) -> Result<PerturbationReport> {
    let s0 = make_initial(cfg)?;
    let base = trajectory(cfg, &s0, cfg.scheme.dt, cfg.t_end, cfg.output_every)?;
    let width = perturbation_width(cfg);
    let rows: Vec<PerturbationRow> = deltas
        .par_iter()
        .map(|&delta| {
            let attempt = || -> Result<(f64, Option<f64>)> {
                let p0 = perturb(&cfg.manifold, &s0, delta, width)?;
                let e0 = uniqueness_energy(&p0, &s0)?;
                let mut worst: f64 = 0.0;
                let mut i = 0;
                evolve(&cfg.manifold, &p0, &cfg.scheme, cfg.t_end, cfg.output_every, |s| {
                    let e = uniqueness_energy(s, &base[i])?;
                    worst = worst.max(e);
                    i += 1;
                    Ok(())
                })?;
                let growth = (e0 > 0.0).then(|| worst / e0);
                Ok((e0, growth))
            };
            match attempt() {
                Ok((e0, growth)) => PerturbationRow {
                    delta,
                    initial_difference: Some(e0),
                    growth,
                    error: None,
                },
                Err(e) => PerturbationRow {
                    delta,
                    initial_difference: None,
                    growth: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let growths: Vec<f64> = rows.iter().filter_map(|r| r.growth).collect();
    let spread = (!growths.is_empty()).then(|| {
        let max = growths.iter().cloned().fold(f64::MIN, f64::max);
        let min = growths.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    });
    let per_delta: Vec<f64> = rows
        .iter()
        .filter(|r| r.delta > 0.0)
        .filter_map(|r| r.initial_difference.map(|e| e / r.delta))
        .collect();
    let linearity = (!per_delta.is_empty()).then(|| {
        let max = per_delta.iter().cloned().fold(f64::MIN, f64::max);
        let min = per_delta.iter().cloned().fold(f64::MAX, f64::min);
        max / min - 1.0
    });
    Ok(PerturbationReport { rows, spread, linearity })
}
