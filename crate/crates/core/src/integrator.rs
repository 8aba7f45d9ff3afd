//! Time stepping for `u_tt + Δ²u = F(u, u_t)`.
//!
//! [`Scheme::StrangSplit`] alternates half kicks by the nonlinearity with the
//! exact free flow of `u_tt + Δ²u = 0`. The kick only sees the tangential part
//! of the velocity and only adds normal vectors, so a kick by `τ` followed by a
//! kick by `−τ` is the identity and the whole step is time-reversible.
//! [`Scheme::Rk4Proj`] is classical RK4 on the first-order system and serves as
//! an independent reference.

use rustfft::num_complex::Complex;

use crate::dynamics::{nonlinearity, tangent_enforce, SimulationState};
use crate::error::{Error, Result};
use crate::geometry::{ManifoldSpec, MAX_AMBIENT};
use crate::grid::{Grid, GridField};
use crate::scalar::Scalar;

/// Coefficient `c` of the RK4 step-size guideline `dt ≤ c·(ℓ/M)²`.
pub const RK4_CFL: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    StrangSplit,
    Rk4Proj,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "strang" | "strang_split" => Ok(Scheme::StrangSplit),
            "rk4proj" | "rk4_proj" | "rk4" => Ok(Scheme::Rk4Proj),
            other => Err(format!("unknown scheme `{other}` (expected strang or rk4proj)")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::StrangSplit => "strang",
            Scheme::Rk4Proj => "rk4proj",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig<T> {
    pub scheme: Scheme,
    pub dt: T,
    /// Call [`tangent_enforce`] every this many steps; 0 disables it.
    pub reproject_every: usize,
    pub dealias_fraction: T,
}

impl<T: Scalar> SchemeConfig<T> {
    /// Defaults: reprojection after every step, 2/3 dealiasing.
    pub fn new(scheme: Scheme, dt: T) -> Self {
        Self {
            scheme,
            dt,
            reproject_every: 1,
            dealias_fraction: T::lit(2.0) / T::lit(3.0),
        }
    }

    pub fn with_reproject_every(mut self, k: usize) -> Self {
        self.reproject_every = k;
        self
    }

    pub fn with_dealias(mut self, fraction: T) -> Self {
        self.dealias_fraction = fraction;
        self
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::validation("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.dealias_fraction > T::zero() && self.dealias_fraction <= T::one()) {
            return Err(Error::validation(
                "dealias_fraction",
                format!("must lie in (0, 1], got {}", self.dealias_fraction),
            ));
        }
        Ok(())
    }

    /// Step-size conditions that are advisory rather than enforced.
    pub fn warnings(&self, grid: &Grid<T>) -> Vec<String> {
        let mut out = Vec::new();
        let kmax = grid.max_wavenumber();
        match self.scheme {
            Scheme::StrangSplit => {
                if self.dt * kmax * kmax > T::PI() {
                    out.push(format!(
                        "dt = {} exceeds the accuracy guideline dt·k_max² ≤ π (k_max = {})",
                        self.dt, kmax
                    ));
                }
            }
            Scheme::Rk4Proj => {
                let h = grid.spacing();
                let limit = T::lit(RK4_CFL) * h * h;
                if self.dt > limit {
                    out.push(format!(
                        "dt = {} exceeds the RK4 stability guideline {:.3e} = {}·(ℓ/M)²",
                        self.dt, limit, RK4_CFL
                    ));
                }
            }
        }
        out
    }
}

/// Exact solution operator of `u_tt + Δ²u = 0` for time `τ`; advances `time` by `τ`.
pub fn free_propagator<T: Scalar>(s: &SimulationState<T>, tau: T) -> Result<SimulationState<T>> {
    let (u, ut) = free_flow(&s.u, &s.ut, tau)?;
    Ok(SimulationState {
        u,
        ut,
        time: s.time + tau,
    })
}

fn free_flow<T: Scalar>(
    u: &GridField<T>,
    v: &GridField<T>,
    tau: T,
) -> Result<(GridField<T>, GridField<T>)> {
    if tau == T::zero() {
        u.ensure_finite("free flow")?;
        v.ensure_finite("free flow")?;
        return Ok((u.clone(), v.clone()));
    }
    let mut su = u.spectrum()?;
    let mut sv = v.spectrum()?;
    let g = u.grid().clone();
    let mut coef = Vec::with_capacity(g.len());
    for idx in 0..g.len() {
        let w = g.wavenumber_sq(idx);
        let (sn, cs) = (w * tau).sin_cos();
        let b = if w == T::zero() { tau } else { sn / w };
        coef.push((cs, b, -w * sn));
    }
    for c in 0..u.ncomp() {
        for (idx, &(cs, b, d)) in coef.iter().enumerate() {
            let a: Complex<T> = su.coeff(c, idx);
            let at = sv.coeff(c, idx);
            *su.coeff_mut(c, idx) = a * cs + at * b;
            *sv.coeff_mut(c, idx) = a * d + at * cs;
        }
    }
    Ok((su.to_field(), sv.to_field()))
}

fn project<T: Scalar>(m: &ManifoldSpec<T>, u: &GridField<T>, v: &GridField<T>, normal: bool) -> GridField<T> {
    let l = u.ncomp();
    let mut out = v.clone();
    let mut tmp = [T::zero(); MAX_AMBIENT];
    for i in 0..u.grid().len() {
        m.apply_projector(u.point(i), v.point(i), &mut tmp[..l]);
        let o = out.point_mut(i);
        for c in 0..l {
            o[c] = if normal { o[c] - tmp[c] } else { tmp[c] };
        }
    }
    out
}

/// `v ↦ v + τ·(I − P̃_u) F(u, P̃_u v)`.
fn kick<T: Scalar>(m: &ManifoldSpec<T>, u: &GridField<T>, v: &GridField<T>, tau: T, dealias: T) -> Result<GridField<T>> {
    let pv = project(m, u, v, false);
    let f = nonlinearity(m, u, &pv, dealias)?;
    let mut out = v.clone();
    out.axpy(tau, &project(m, u, &f, true));
    Ok(out)
}

fn rk4_rhs<T: Scalar>(
    m: &ManifoldSpec<T>,
    u: &GridField<T>,
    v: &GridField<T>,
    dealias: T,
) -> Result<(GridField<T>, GridField<T>)> {
    let mut a = nonlinearity(m, u, v, dealias)?;
    a.axpy(-T::one(), &u.bilaplacian()?);
    Ok((v.clone(), a))
}

fn raw_step<T: Scalar>(m: &ManifoldSpec<T>, s: &SimulationState<T>, c: &SchemeConfig<T>, reproject: bool) -> Result<SimulationState<T>> {
    let dt = c.dt;
    let half = dt / T::lit(2.0);
    let d = c.dealias_fraction;
    let (u, ut) = match c.scheme {
        Scheme::StrangSplit => {
            let v = kick(m, &s.u, &s.ut, half, d)?;
            let (u, v) = free_flow(&s.u, &v, dt)?;
            let v = kick(m, &u, &v, half, d)?;
            (u, v)
        }
        Scheme::Rk4Proj => {
            let (k1u, k1v) = rk4_rhs(m, &s.u, &s.ut, d)?;
            let stage = |ku: &GridField<T>, kv: &GridField<T>, h: T| {
                let mut u = s.u.clone();
                u.axpy(h, ku);
                let mut v = s.ut.clone();
                v.axpy(h, kv);
                (u, v)
            };
            let (u2, v2) = stage(&k1u, &k1v, half);
            let (k2u, k2v) = rk4_rhs(m, &u2, &v2, d)?;
            let (u3, v3) = stage(&k2u, &k2v, half);
            let (k3u, k3v) = rk4_rhs(m, &u3, &v3, d)?;
            let (u4, v4) = stage(&k3u, &k3v, dt);
            let (k4u, k4v) = rk4_rhs(m, &u4, &v4, d)?;
            let w = dt / T::lit(6.0);
            let two = T::lit(2.0);
            let mut u = s.u.clone();
            let mut v = s.ut.clone();
            for (ku, kv, c) in [(&k1u, &k1v, w), (&k2u, &k2v, two * w), (&k3u, &k3v, two * w), (&k4u, &k4v, w)] {
                u.axpy(c, ku);
                v.axpy(c, kv);
            }
            (u, v)
        }
    };
    let mut next = SimulationState {
        u,
        ut,
        time: s.time + dt,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("time step"));
    }
    if reproject {
        next = tangent_enforce(m, &next)?;
    } else {
        let d = crate::dynamics::constraint_max(m, &next.u);
        if d >= m.tube_radius() {
            return Err(Error::TubeExceeded {
                distance: d.as_f64(),
                tube_radius: m.tube_radius().as_f64(),
            });
        }
    }
    Ok(next)
}

fn annotate<T: Scalar>(e: Error, time: T) -> Error {
    if e.is_blowup() && !matches!(e, Error::DiscreteBlowup { .. }) {
        Error::DiscreteBlowup {
            time: time.as_f64(),
            cause: Box::new(e),
        }
    } else {
        e
    }
}

/// One step of size `c.dt` (which may be negative). Reprojects when
/// `reproject_every == 1`; [`evolve`] handles longer reprojection periods.
pub fn step<T: Scalar>(m: &ManifoldSpec<T>, s: &SimulationState<T>, c: &SchemeConfig<T>) -> Result<SimulationState<T>> {
    raw_step(m, s, c, c.reproject_every == 1).map_err(|e| annotate(e, s.time + c.dt))
}

/// A failed evolution together with the last state that was still finite.
#[derive(Debug)]
pub struct Interrupted<T: Scalar> {
    pub error: Error,
    pub last: SimulationState<T>,
}

/// Number of steps and the observer stride for a run from `t0` to `t_end`.
pub fn step_plan<T: Scalar>(t0: T, t_end: T, dt: T, output_every: T) -> (usize, usize) {
    let r = ((t_end - t0) / dt).as_f64();
    let steps = if r <= 0.0 {
        0
    } else {
        (r - 1e-9 * r.max(1.0)).ceil().max(1.0) as usize
    };
    let stride = ((output_every / dt).as_f64().round() as usize).max(1);
    (steps, stride)
}

/// Steps from `s0.time` to `t_end`, calling `observer` on the initial state,
/// every `output_every` of simulated time and on the final state. The last
/// step is shortened so the run ends exactly at `t_end`.
pub fn evolve<T, F>(
    m: &ManifoldSpec<T>,
    s0: &SimulationState<T>,
    c: &SchemeConfig<T>,
    t_end: T,
    output_every: T,
    observer: F,
) -> Result<SimulationState<T>>
where
    T: Scalar,
    F: FnMut(&SimulationState<T>) -> Result<()>,
{
    evolve_tracking(m, s0, c, t_end, output_every, observer).map_err(|i| i.error)
}

/// Like [`evolve`], but a failure also hands back the last finite state.
pub fn evolve_tracking<T, F>(
    m: &ManifoldSpec<T>,
    s0: &SimulationState<T>,
    c: &SchemeConfig<T>,
    t_end: T,
    output_every: T,
    mut observer: F,
) -> std::result::Result<SimulationState<T>, Interrupted<T>>
where
    T: Scalar,
    F: FnMut(&SimulationState<T>) -> Result<()>,
{
    let fail = |error: Error, last: &SimulationState<T>| Interrupted {
        error,
        last: last.clone(),
    };
    if let Err(e) = c.validate() {
        return Err(fail(e, s0));
    }
    if t_end < s0.time {
        return Err(fail(
            Error::validation("t_end", "must not precede the initial time"),
            s0,
        ));
    }
    let t0 = s0.time;
    let (steps, stride) = step_plan(t0, t_end, c.dt, output_every);
    observer(s0).map_err(|e| fail(e, s0))?;
    let mut s = s0.clone();
    for i in 1..=steps {
        let target = if i == steps { t_end } else { t0 + T::of_usize(i) * c.dt };
        let cfg = c.with_dt(target - s.time);
        let reproject = c.reproject_every > 0 && i % c.reproject_every == 0;
        match raw_step(m, &s, &cfg, reproject) {
            Ok(mut next) => {
                next.time = target;
                s = next;
            }
            Err(e) => return Err(fail(annotate(e, target), &s)),
        }
        if i % stride == 0 || i == steps {
            observer(&s).map_err(|e| fail(e, &s))?;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::energy;

    fn wave(m: usize, k: f64, omega: f64, t: f64) -> SimulationState<f64> {
        let g = Grid::<f64>::periodic(1, m).unwrap();
        let u = GridField::from_fn(&g, 2, |x| {
            let p = omega * t + k * x[0];
            vec![p.cos(), p.sin()]
        });
        let ut = GridField::from_fn(&g, 2, |x| {
            let p = omega * t + k * x[0];
            vec![-omega * p.sin(), omega * p.cos()]
        });
        SimulationState::new(u, ut, t).unwrap()
    }

    fn sup_diff(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
    }

    #[test]
    fn free_propagator_identity_and_mode() {
        let g = Grid::<f64>::periodic(1, 16).unwrap();
        let u = GridField::from_fn(&g, 2, |x| vec![(2.0 * x[0]).cos(), 0.0]);
        let s = SimulationState::new(u, GridField::zeros(&g, 2), 0.0).unwrap();
        assert_eq!(free_propagator(&s, 0.0).unwrap().u, s.u);
        let tau = 0.37;
        let out = free_propagator(&s, tau).unwrap();
        let exact = GridField::from_fn(&g, 2, |x| vec![(4.0 * tau).cos() * (2.0 * x[0]).cos(), 0.0]);
        assert!(sup_diff(&out.u, &exact) <= 1e-13);
    }

    // Oracle: RK4 with a tiny step on the single-mode ODE a'' = −k⁴a.
    #[test]
    fn free_propagator_matches_mode_ode() {
        let (k, tau) = (3.0f64, 0.2f64);
        let w = k.powi(4);
        let (mut a, mut b) = (0.7f64, -0.4f64);
        let n = 200_000;
        let h = tau / n as f64;
        for _ in 0..n {
            let f = |a: f64, b: f64| (b, -w * a);
            let (k1a, k1b) = f(a, b);
            let (k2a, k2b) = f(a + 0.5 * h * k1a, b + 0.5 * h * k1b);
            let (k3a, k3b) = f(a + 0.5 * h * k2a, b + 0.5 * h * k2b);
            let (k4a, k4b) = f(a + h * k3a, b + h * k3b);
            a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            b += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        }
        let g = Grid::<f64>::periodic(1, 16).unwrap();
        let u = GridField::from_fn(&g, 1, |x| vec![0.7 * (k * x[0]).sin()]);
        let ut = GridField::from_fn(&g, 1, |x| vec![-0.4 * (k * x[0]).sin()]);
        let out = free_propagator(&SimulationState::new(u, ut, 0.0).unwrap(), tau).unwrap();
        let eu = GridField::from_fn(&g, 1, |x| vec![a * (k * x[0]).sin()]);
        let ev = GridField::from_fn(&g, 1, |x| vec![b * (k * x[0]).sin()]);
        assert!(sup_diff(&out.u, &eu) <= 1e-9);
        assert!(sup_diff(&out.ut, &ev) <= 1e-8);
    }

    #[test]
    fn constant_map_is_an_equilibrium() {
        let m = ManifoldSpec::sphere(3).unwrap();
        let g = Grid::<f64>::periodic(2, 16).unwrap();
        let u = GridField::from_fn(&g, 3, |_| vec![0.0, 0.0, 1.0]);
        let s = SimulationState::new(u, GridField::zeros(&g, 3), 0.0).unwrap();
        for scheme in [Scheme::StrangSplit, Scheme::Rk4Proj] {
            let next = step(&m, &s, &SchemeConfig::new(scheme, 1e-3)).unwrap();
            assert_eq!(next.u, s.u);
            assert_eq!(next.ut, s.ut);
            assert_eq!(next.time, 1e-3);
        }
    }

    #[test]
    fn strang_tracks_traveling_wave() {
        let m = ManifoldSpec::sphere(2).unwrap();
        let s0 = wave(32, 1.0, 1.0, 0.0);
        let c = SchemeConfig::new(Scheme::StrangSplit, 1e-3);
        let mut worst: f64 = 0.0;
        evolve(&m, &s0, &c, 1.0, 0.1, |s| {
            let e = wave(32, 1.0, 1.0, s.time);
            worst = worst.max(sup_diff(&s.u, &e.u));
            Ok(())
        })
        .unwrap();
        assert!(worst <= 1e-4, "{worst}");
    }

    #[test]
    fn strang_is_time_reversible() {
        let m = ManifoldSpec::sphere(2).unwrap();
        let s0 = wave(32, 1.0, 2.0, 0.0);
        let fwd = SchemeConfig::new(Scheme::StrangSplit, 1e-2).with_reproject_every(0);
        let back = fwd.with_dt(-1e-2);
        let s1 = step(&m, &s0, &fwd).unwrap();
        let s2 = step(&m, &s1, &back).unwrap();
        assert!(sup_diff(&s2.u, &s0.u) <= 1e-11);
        assert!(sup_diff(&s2.ut, &s0.ut) <= 1e-11);
    }

    #[test]
    fn free_propagator_conserves_energy() {
        let s = wave(32, 2.0, 0.5, 0.0);
        let e0 = energy(&s).unwrap();
        let e1 = energy(&free_propagator(&s, 0.123).unwrap()).unwrap();
        assert!((e0 - e1).abs() <= 1e-12 * e0);
    }

    #[test]
    fn evolve_cadence() {
        let m = ManifoldSpec::sphere(2).unwrap();
        let s0 = wave(16, 1.0, 1.0, 0.0);
        let c = SchemeConfig::new(Scheme::StrangSplit, 1e-2);
        let mut calls = 0;
        let out = evolve(&m, &s0, &c, 0.0, 0.1, |_| {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!((calls, out.time), (1, 0.0));

        let mut times = Vec::new();
        let out = evolve(&m, &s0, &c, 2.0, 0.1, |s| {
            times.push(s.time);
            Ok(())
        })
        .unwrap();
        assert_eq!(times.len(), 21);
        assert_eq!(out.time, 2.0);

        let out = evolve(&m, &s0, &c.with_dt(0.3), 1.0, 0.3, |_| Ok(())).unwrap();
        assert_eq!(out.time, 1.0);
    }

    #[test]
    fn huge_rk4_step_blows_up_with_a_time() {
        let m = ManifoldSpec::sphere(2).unwrap();
        let s0 = wave(32, 3.0, 0.0, 0.0);
        let c = SchemeConfig::new(Scheme::Rk4Proj, 0.05);
        match evolve(&m, &s0, &c, 10.0, 0.05, |_| Ok(())) {
            Err(Error::DiscreteBlowup { time, .. }) => assert!(time.is_finite() && time > 0.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
