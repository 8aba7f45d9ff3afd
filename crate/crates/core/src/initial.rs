//! Initial data `(u₀, u₁)` with `u₀ ∈ N` and `u₁ ∈ T_{u₀}N` pointwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitialData, RunConfig};
use crate::dynamics::{constraint_max, tangent_max, SimulationState};
use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;
use crate::grid::{Grid, GridField};
use crate::scalar::{dot, norm};

/// Tolerance on the constraints of freshly built data.
pub const INITIAL_TOL: f64 = 1e-10;

/// `u = cos(ωt + κ·x) e_a + sin(ωt + κ·x) e_b` and its time derivative, where
/// `κ = 2π/ℓ · k` for the integer mode `k`.
pub fn traveling_wave(
    grid: &Grid<f64>,
    ambient: usize,
    k: (i64, i64),
    omega: f64,
    axes: (usize, usize),
    t: f64,
) -> SimulationState<f64> {
    let scale = std::f64::consts::TAU / grid.length();
    let phase = |x: [f64; 2]| omega * t + scale * (k.0 as f64 * x[0] + k.1 as f64 * x[1]);
    let u = GridField::from_fn(grid, ambient, |x| {
        let mut p = vec![0.0; ambient];
        p[axes.0] = phase(x).cos();
        p[axes.1] = phase(x).sin();
        p
    });
    let ut = GridField::from_fn(grid, ambient, |x| {
        let mut p = vec![0.0; ambient];
        p[axes.0] = -omega * phase(x).sin();
        p[axes.1] = omega * phase(x).cos();
        p
    });
    SimulationState { u, ut, time: t }
}

/// Smooth periodic bump of unit height centred in the box:
/// `Π_i exp((cos(2π(x_i − c)/ℓ) − 1)/s²)` with `s = 2πσ/ℓ`, Gaussian of width `σ` near the centre.
pub fn bump_profile(grid: &Grid<f64>, width: f64) -> GridField<f64> {
    let l = grid.length();
    let s = std::f64::consts::TAU * width / l;
    let c = l / 2.0;
    let dim = grid.dim();
    GridField::from_fn(grid, 1, |x| {
        let v: f64 = x[..dim]
            .iter()
            .map(|&xi| ((std::f64::consts::TAU * (xi - c) / l).cos() - 1.0) / (s * s))
            .sum();
        vec![v.exp()]
    })
}

fn unit_tangent(m: &ManifoldSpec<f64>, p: &[f64], e: &[f64], field: &str) -> Result<Vec<f64>> {
    let mut t = vec![0.0; p.len()];
    m.apply_projector(p, e, &mut t);
    let n = norm(&t);
    if !(n > 1e-8) {
        return Err(Error::validation(field, "direction has no tangential component at the base point"));
    }
    Ok(t.iter().map(|x| x / n).collect())
}

/// `u₀ = Π(p + A φ e)`, `u₁ = P_{u₀}(B φ e′)` with `e′` a second tangent direction when one exists.
pub fn bump(
    m: &ManifoldSpec<f64>,
    grid: &Grid<f64>,
    amplitude: f64,
    width: f64,
    base: Option<&[f64]>,
    direction: Option<&[f64]>,
    velocity: f64,
) -> Result<SimulationState<f64>> {
    let l = m.ambient_dim();
    let p = match base {
        Some(b) => {
            let mut q = vec![0.0; l];
            m.nearest_point_into(b, &mut q)?;
            if norm(&q.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>()) > 1e-8 {
                return Err(Error::validation("bump_base", "base point must lie on the manifold"));
            }
            q
        }
        None => m.base_point(),
    };
    let basis = m.tangent_basis(&p);
    let e = match direction {
        Some(d) => unit_tangent(m, &p, d, "bump_direction")?,
        None => basis[0].clone(),
    };
    let e2 = basis
        .iter()
        .map(|b| {
            let s = dot(b, &e);
            b.iter().zip(&e).map(|(bi, ei)| bi - s * ei).collect::<Vec<_>>()
        })
        .find(|v| norm(v) > 1e-6)
        .map(|v| {
            let n = norm(&v);
            v.iter().map(|x| x / n).collect::<Vec<_>>()
        })
        .unwrap_or_else(|| e.clone());

    let phi = bump_profile(grid, width);
    let mut u = GridField::zeros(grid, l);
    let mut ut = GridField::zeros(grid, l);
    let mut q = vec![0.0; l];
    let mut w = vec![0.0; l];
    for i in 0..grid.len() {
        let f = phi.values()[i];
        for c in 0..l {
            q[c] = p[c] + amplitude * f * e[c];
            w[c] = velocity * f * e2[c];
        }
        m.retract_into(&q, u.point_mut(i))?;
        m.apply_projector(u.point(i), &w, ut.point_mut(i));
    }
    Ok(SimulationState { u, ut, time: 0.0 })
}

/// Modes `0 < |k|_∞ ≤ k_max`, one representative of each `±k` pair.
fn half_modes(dim: usize, k_max: usize) -> Vec<[i64; 2]> {
    let k = k_max as i64;
    let mut out = Vec::new();
    if dim == 1 {
        out.extend((1..=k).map(|a| [a, 0]));
    } else {
        for a in -k..=k {
            for b in -k..=k {
                if a > 0 || (a == 0 && b > 0) {
                    out.push([a, b]);
                }
            }
        }
    }
    out
}

fn random_tangent_field(
    grid: &Grid<f64>,
    basis: &[Vec<f64>],
    k_max: usize,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> GridField<f64> {
    let l = basis[0].len();
    let modes = half_modes(grid.dim(), k_max);
    let coeffs: Vec<(f64, f64)> = (0..basis.len() * modes.len())
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let two_pi = std::f64::consts::TAU / grid.length();
    let mut v = GridField::from_fn(grid, l, |x| {
        let mut out = vec![0.0; l];
        for (j, b) in basis.iter().enumerate() {
            let mut s = 0.0;
            for (mi, k) in modes.iter().enumerate() {
                let ph = two_pi * (k[0] as f64 * x[0] + k[1] as f64 * x[1]);
                let (a, c) = coeffs[j * modes.len() + mi];
                s += a * ph.cos() + c * ph.sin();
            }
            out.iter_mut().zip(b).for_each(|(o, &bi)| *o += s * bi);
        }
        out
    });
    let peak = v.max_pointwise_norm();
    if peak > 0.0 {
        v = v.scaled(amplitude / peak);
    }
    v
}

/// Random band-limited tangent data at the base point, pushed onto the manifold
/// by the nearest-point map; the velocity is projected onto the new tangent spaces.
pub fn random_bandlimited(
    m: &ManifoldSpec<f64>,
    grid: &Grid<f64>,
    k_max: usize,
    amplitude: f64,
    velocity: f64,
    seed: u64,
) -> Result<SimulationState<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = m.base_point();
    let basis = m.tangent_basis(&p);
    let v = random_tangent_field(grid, &basis, k_max, amplitude, &mut rng);
    let w = random_tangent_field(grid, &basis, k_max, velocity, &mut rng);
    let l = m.ambient_dim();
    let mut u = GridField::zeros(grid, l);
    let mut ut = GridField::zeros(grid, l);
    let mut q = vec![0.0; l];
    for i in 0..grid.len() {
        for c in 0..l {
            q[c] = p[c] + v.point(i)[c];
        }
        m.nearest_point_into(&q, u.point_mut(i))?;
        m.apply_projector(u.point(i), w.point(i), ut.point_mut(i));
    }
    Ok(SimulationState { u, ut, time: 0.0 })
}

/// Builds and checks the initial state of a run.
pub fn make_initial(cfg: &RunConfig) -> Result<SimulationState<f64>> {
    let grid = Grid::new(cfg.dim, cfg.grid_size, cfg.length)?;
    let m = &cfg.manifold;
    let s = match &cfg.initial {
        InitialData::TravelingWave { k, k2, omega, axes } => {
            traveling_wave(&grid, m.ambient_dim(), (*k, *k2), *omega, *axes, 0.0)
        }
        InitialData::Bump {
            amplitude,
            width,
            base,
            direction,
            velocity,
        } => bump(m, &grid, *amplitude, *width, base.as_deref(), direction.as_deref(), *velocity)?,
        InitialData::RandomBandlimited {
            k_max,
            amplitude,
            velocity,
        } => random_bandlimited(m, &grid, *k_max, *amplitude, *velocity, cfg.seed)?,
    };
    let c = constraint_max(m, &s.u);
    let t = tangent_max(m, &s);
    if !(c <= INITIAL_TOL && t <= INITIAL_TOL) {
        return Err(Error::OffManifold {
            residual: c.max(t),
            tolerance: INITIAL_TOL,
        });
    }
    Ok(s)
}

/// Perturbs a state by a retracted tangent bump of size `delta`:
/// `u₀′ = Π(u₀ + δ φ P_{u₀} e)`, `u₁′ = P_{u₀′} u₁`.
pub fn perturb(m: &ManifoldSpec<f64>, s: &SimulationState<f64>, delta: f64, width: f64) -> Result<SimulationState<f64>> {
    if delta == 0.0 {
        return Ok(s.clone());
    }
    let g = s.grid();
    let l = m.ambient_dim();
    let e: Vec<f64> = vec![1.0 / (l as f64).sqrt(); l];
    let phi = bump_profile(g, width);
    let mut out = s.clone();
    let mut t = vec![0.0; l];
    let mut q = vec![0.0; l];
    for i in 0..g.len() {
        let u = s.u.point(i);
        m.apply_projector(u, &e, &mut t);
        let f = delta * phi.values()[i];
        for c in 0..l {
            q[c] = u[c] + f * t[c];
        }
        m.retract_into(&q, out.u.point_mut(i))?;
        m.apply_projector(out.u.point(i), s.ut.point(i), &mut t);
        out.ut.point_mut(i).copy_from_slice(&t);
    }
    Ok(out)
}
