//! Right-hand side of `u_tt + Δ²u = F(u, u_t)` and geometric health checks.
//!
//! With `Q = I - P̃∘u` the normal projector along the map, `F = Q(u_tt + Δ²u)`
//! expands to
//!
//! ```text
//! F = dP(u_t, u_t) + Δ(Σ_i dP(∂_i u) ∂_i u) + 2 div(dP(∇u) Δu)
//!     − [Σ_i d²P(∂_i u, ∂_i u) + dP(Δu)] Δu
//! ```
//!
//! where the bracket is `Δ(P̃∘u)`. Pointwise products are formed in physical
//! space; the two outer derivatives are applied spectrally after dealiasing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ManifoldSpec, MAX_AMBIENT};
use crate::grid::{GridField, Spectrum};
use crate::scalar::{dot, Scalar};

/// Default bound on the pointwise distance of `u` from the manifold.
pub const TOL_CONSTRAINT: f64 = 1e-8;
/// Default bound on the normal component of `u_t`.
pub const TOL_TANGENT: f64 = 1e-8;

/// Below this many grid points the pointwise stage runs sequentially.
const PAR_THRESHOLD: usize = 1024;

/// Position, velocity and time of a discrete map.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState<T: Scalar> {
    pub u: GridField<T>,
    pub ut: GridField<T>,
    pub time: T,
}

impl<T: Scalar> SimulationState<T> {
    pub fn new(u: GridField<T>, ut: GridField<T>, time: T) -> Result<Self> {
        u.check_shape(&ut)?;
        Ok(Self { u, ut, time })
    }

    pub fn grid(&self) -> &crate::grid::Grid<T> {
        self.u.grid()
    }

    pub fn ncomp(&self) -> usize {
        self.u.ncomp()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.ut.is_finite() && self.time.is_finite()
    }
}

/// Largest pointwise distance of `u` from the manifold.
pub fn constraint_max<T: Scalar>(m: &ManifoldSpec<T>, u: &GridField<T>) -> T {
    (0..u.grid().len())
        .map(|i| m.constraint_residual(u.point(i)))
        .fold(T::zero(), T::max)
}

/// Largest pointwise normal component `|(I - P̃_u) u_t|`.
pub fn tangent_max<T: Scalar>(m: &ManifoldSpec<T>, s: &SimulationState<T>) -> T {
    let l = s.ncomp();
    let mut tan = [T::zero(); MAX_AMBIENT];
    let mut worst = T::zero();
    for i in 0..s.grid().len() {
        let v = s.ut.point(i);
        m.apply_projector(s.u.point(i), v, &mut tan[..l]);
        let r = (0..l).fold(T::zero(), |a, c| a + (v[c] - tan[c]).powi(2)).sqrt();
        worst = if r.is_nan() { r } else { worst.max(r) };
    }
    worst
}

/// Checks that `u` lies on the manifold and `u_t` is tangent, both to `tol`.
pub fn check_state<T: Scalar>(m: &ManifoldSpec<T>, s: &SimulationState<T>, tol: f64) -> Result<()> {
    check_ambient(m, &s.u)?;
    let c = constraint_max(m, &s.u).as_f64();
    if !(c <= tol) {
        return Err(Error::OffManifold { residual: c, tolerance: tol });
    }
    let t = tangent_max(m, s).as_f64();
    if !(t <= tol) {
        return Err(Error::OffManifold { residual: t, tolerance: tol });
    }
    Ok(())
}

fn check_ambient<T: Scalar>(m: &ManifoldSpec<T>, u: &GridField<T>) -> Result<()> {
    if u.ncomp() != m.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: m.ambient_dim(),
            actual: u.ncomp(),
        });
    }
    Ok(())
}

fn check_tube<T: Scalar>(m: &ManifoldSpec<T>, u: &GridField<T>) -> Result<()> {
    u.ensure_finite("state")?;
    let d = constraint_max(m, u);
    if d >= m.tube_radius() {
        return Err(Error::TubeExceeded {
            distance: d.as_f64(),
            tube_radius: m.tube_radius().as_f64(),
        });
    }
    Ok(())
}

/// `∂_i u` per axis and `Δu` from one forward transform.
fn first_jets<T: Scalar>(u: &GridField<T>) -> Result<(Vec<GridField<T>>, GridField<T>)> {
    let s = u.spectrum()?;
    let du = (0..u.grid().dim()).map(|a| s.derivative(a).to_field()).collect();
    Ok((du, s.laplacian().to_field()))
}

/// Applies `Δ` to `a` and `div` to the stacked per-axis field `b` after dealiasing.
fn outer_derivatives<T: Scalar>(
    a: &GridField<T>,
    b: &GridField<T>,
    dealias: T,
) -> Result<(Spectrum<T>, Spectrum<T>)> {
    let lap = a.spectrum()?.dealiased(dealias).laplacian();
    let div = b.spectrum()?.dealiased(dealias).divergence_of_blocks();
    Ok((lap, div))
}

/// The nonlinearity on the full state, checked to lie on the manifold.
pub fn rhs_projector<T: Scalar>(
    m: &ManifoldSpec<T>,
    s: &SimulationState<T>,
    dealias: T,
) -> Result<GridField<T>> {
    check_ambient(m, &s.u)?;
    s.u.ensure_finite("state")?;
    check_tube(m, &s.u)?;
    let c = constraint_max(m, &s.u).as_f64();
    if c > TOL_CONSTRAINT {
        return Err(Error::OffManifold {
            residual: c,
            tolerance: TOL_CONSTRAINT,
        });
    }
    projector_form(m, &s.u, &s.ut, dealias)
}

/// Projector form of the nonlinearity at arbitrary `(u, v)` inside the tube.
pub(crate) fn projector_form<T: Scalar>(
    m: &ManifoldSpec<T>,
    u: &GridField<T>,
    v: &GridField<T>,
    dealias: T,
) -> Result<GridField<T>> {
    v.ensure_finite("velocity")?;
    let (du, lap) = first_jets(u)?;
    let g = u.grid();
    let n = g.dim();
    let l = u.ncomp();

    let mut zero = GridField::zeros(g, l);
    let mut a = GridField::zeros(g, l);
    let mut b = GridField::zeros(g, n * l);

    let kernel = |idx: usize, z: &mut [T], a: &mut [T], b: &mut [T]| {
        let q = u.point(idx);
        let w = lap.point(idx);
        let mut tmp = [T::zero(); MAX_AMBIENT];
        let tmp = &mut tmp[..l];

        m.apply_dp(q, v.point(idx), v.point(idx), tmp);
        z.copy_from_slice(tmp);
        m.apply_dp(q, w, w, tmp);
        z.iter_mut().zip(tmp.iter()).for_each(|(zc, &t)| *zc = *zc - t);

        for (axis, d) in du.iter().enumerate() {
            let di = d.point(idx);
            m.apply_dp(q, di, di, tmp);
            a.iter_mut().zip(tmp.iter()).for_each(|(ac, &t)| *ac = *ac + t);
            m.apply_dp(q, di, w, tmp);
            b[axis * l..(axis + 1) * l].copy_from_slice(tmp);
            m.apply_d2p(q, di, di, w, tmp);
            z.iter_mut().zip(tmp.iter()).for_each(|(zc, &t)| *zc = *zc - t);
        }
    };

    let np = g.len();
    if np >= PAR_THRESHOLD {
        zero.values_mut()
            .par_chunks_mut(l)
            .zip(a.values_mut().par_chunks_mut(l))
            .zip(b.values_mut().par_chunks_mut(n * l))
            .enumerate()
            .for_each(|(idx, ((z, a), b))| kernel(idx, z, a, b));
    } else {
        for idx in 0..np {
            let (z, a, b) = (
                &mut zero.values_mut()[idx * l..(idx + 1) * l],
                &mut a.values_mut()[idx * l..(idx + 1) * l],
                &mut b.values_mut()[idx * n * l..(idx + 1) * n * l],
            );
            kernel(idx, z, a, b);
        }
    }

    let (mut lap_a, div_b) = outer_derivatives(&a, &b, dealias)?;
    let mut div2 = div_b;
    div2.scale(T::lit(2.0));
    lap_a.add_assign(&div2);
    let mut f = lap_a.to_field();
    f.axpy(T::one(), &zero);
    f.ensure_finite("nonlinearity")?;
    Ok(f)
}

/// Scalar multiplier `λ` with `F = λu` for maps into a unit sphere.
///
/// For `|u| = 1`: `⟨u_tt, u⟩ = −|u_t|²`, and differentiating `⟨Δu, u⟩ = −|∇u|²`
/// twice gives `⟨Δ²u, u⟩ = −Δ|∇u|² − 2 div⟨Δu, ∇u⟩ + |Δu|²`. Since `F` is the
/// normal part `⟨u_tt + Δ²u, u⟩ u`, the multiplier is the sum of the two.
pub fn sphere_multiplier<T: Scalar>(s: &SimulationState<T>, dealias: T) -> Result<GridField<T>> {
    sphere_multiplier_fields(&s.u, &s.ut, dealias)
}

fn sphere_multiplier_fields<T: Scalar>(
    u: &GridField<T>,
    v: &GridField<T>,
    dealias: T,
) -> Result<GridField<T>> {
    v.ensure_finite("velocity")?;
    let (du, lap) = first_jets(u)?;
    let g = u.grid();
    let n = g.dim();
    let mut zero = GridField::zeros(g, 1);
    let mut grad_sq = GridField::zeros(g, 1);
    let mut flux = GridField::zeros(g, n);
    for idx in 0..g.len() {
        let w = lap.point(idx);
        let vt = v.point(idx);
        zero.values_mut()[idx] = dot(w, w) - dot(vt, vt);
        let mut gs = T::zero();
        for (axis, d) in du.iter().enumerate() {
            let di = d.point(idx);
            gs = gs + dot(di, di);
            flux.values_mut()[idx * n + axis] = dot(w, di);
        }
        grad_sq.values_mut()[idx] = gs;
    }
    let (lap_g, div_f) = outer_derivatives(&grad_sq, &flux, dealias)?;
    let mut acc = lap_g;
    let mut d2 = div_f;
    d2.scale(T::lit(2.0));
    acc.add_assign(&d2);
    let mut lambda = acc.to_field().scaled(-T::one());
    lambda.axpy(T::one(), &zero);
    lambda.ensure_finite("sphere multiplier")?;
    Ok(lambda)
}

/// Sphere closed form `F = λu`.
pub fn rhs_sphere<T: Scalar>(s: &SimulationState<T>, dealias: T) -> Result<GridField<T>> {
    sphere_form(&s.u, &s.ut, dealias)
}

pub(crate) fn sphere_form<T: Scalar>(
    u: &GridField<T>,
    v: &GridField<T>,
    dealias: T,
) -> Result<GridField<T>> {
    let lambda = sphere_multiplier_fields(u, v, dealias)?;
    let mut f = u.clone();
    let l = u.ncomp();
    for (idx, chunk) in f.values_mut().chunks_mut(l).enumerate() {
        let s = lambda.values()[idx];
        chunk.iter_mut().for_each(|x| *x = *x * s);
    }
    Ok(f)
}

/// Nonlinearity used by the time steppers: the sphere closed form when the
/// manifold is a sphere with closed-form derivatives, the projector form otherwise.
pub fn nonlinearity<T: Scalar>(
    m: &ManifoldSpec<T>,
    u: &GridField<T>,
    v: &GridField<T>,
    dealias: T,
) -> Result<GridField<T>> {
    check_ambient(m, u)?;
    check_tube(m, u)?;
    if m.is_sphere() && m.derivatives() == crate::geometry::Derivatives::ClosedForm {
        sphere_form(u, v, dealias)
    } else {
        projector_form(m, u, v, dealias)
    }
}

/// Discrete acceleration `−Δ²u + F(u, u_t)`.
pub fn acceleration<T: Scalar>(
    m: &ManifoldSpec<T>,
    s: &SimulationState<T>,
    dealias: T,
) -> Result<GridField<T>> {
    let mut acc = nonlinearity(m, &s.u, &s.ut, dealias)?;
    acc.axpy(-T::one(), &s.u.bilaplacian()?);
    Ok(acc)
}

/// Largest pointwise tangential component `|P_u(u_tt + Δ²u)|`.
pub fn orthogonality_residual<T: Scalar>(
    m: &ManifoldSpec<T>,
    s: &SimulationState<T>,
    utt: &GridField<T>,
) -> Result<T> {
    check_ambient(m, &s.u)?;
    s.u.check_shape(utt)?;
    let c = constraint_max(m, &s.u).as_f64();
    if !(c <= TOL_CONSTRAINT) {
        return Err(Error::OffManifold {
            residual: c,
            tolerance: TOL_CONSTRAINT,
        });
    }
    let mut total = s.u.bilaplacian()?;
    total.axpy(T::one(), utt);
    Ok(tangential_max(m, &s.u, &total))
}

/// Largest pointwise `|P̃_u f|`.
pub(crate) fn tangential_max<T: Scalar>(m: &ManifoldSpec<T>, u: &GridField<T>, f: &GridField<T>) -> T {
    let l = u.ncomp();
    let mut tan = [T::zero(); MAX_AMBIENT];
    let mut worst = T::zero();
    for i in 0..u.grid().len() {
        m.apply_projector(u.point(i), f.point(i), &mut tan[..l]);
        worst = worst.max(dot(&tan[..l], &tan[..l]).sqrt());
    }
    worst
}

/// Retracts `u` onto the manifold, then projects `u_t` onto the new tangent spaces.
pub fn tangent_enforce<T: Scalar>(m: &ManifoldSpec<T>, s: &SimulationState<T>) -> Result<SimulationState<T>> {
    check_ambient(m, &s.u)?;
    let mut out = s.clone();
    let l = s.ncomp();
    let mut tmp = [T::zero(); MAX_AMBIENT];
    for i in 0..s.grid().len() {
        m.retract_into(s.u.point(i), out.u.point_mut(i))?;
        m.apply_projector(out.u.point(i), s.ut.point(i), &mut tmp[..l]);
        out.ut.point_mut(i).copy_from_slice(&tmp[..l]);
    }
    out.ut.ensure_finite("tangent projection")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn wave(m: usize, k: f64, omega: f64) -> SimulationState<f64> {
        let g = Grid::<f64>::periodic(1, m).unwrap();
        let u = GridField::from_fn(&g, 2, |x| vec![(k * x[0]).cos(), (k * x[0]).sin()]);
        let ut = GridField::from_fn(&g, 2, |x| {
            vec![-omega * (k * x[0]).sin(), omega * (k * x[0]).cos()]
        });
        SimulationState::new(u, ut, 0.0).unwrap()
    }

    fn smooth_state(dim: usize, m: usize, amp: f64) -> SimulationState<f64> {
        let g = Grid::<f64>::periodic(dim, m).unwrap();
        let raw = GridField::from_fn(&g, 3, |x| {
            let y = x[1];
            vec![
                amp * (x[0] + 0.3).sin() * (y).cos(),
                amp * (2.0 * x[0]).cos() + 0.2 * amp * (y + 1.0).sin(),
                1.0,
            ]
        });
        let mut u = raw.clone();
        for i in 0..g.len() {
            let p = raw.point(i);
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            u.point_mut(i).iter_mut().zip(p).for_each(|(o, &x)| *o = x / r);
        }
        let w = GridField::from_fn(&g, 3, |x| {
            vec![amp * (x[0]).cos(), amp * (x[0] - x[1]).sin(), 0.3 * amp]
        });
        let m3 = ManifoldSpec::sphere(3).unwrap();
        let s = SimulationState::new(u, w, 0.0).unwrap();
        tangent_enforce(&m3, &s).unwrap()
    }

    fn max_abs(f: &GridField<f64>) -> f64 {
        f.values().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    #[test]
    fn constant_map_has_zero_nonlinearity() {
        let m = ManifoldSpec::sphere(3).unwrap();
        let g = Grid::<f64>::periodic(2, 16).unwrap();
        let u = GridField::from_fn(&g, 3, |_| vec![0.0, 0.6, 0.8]);
        let s = SimulationState::new(u, GridField::zeros(&g, 3), 0.0).unwrap();
        assert_eq!(max_abs(&rhs_projector(&m, &s, 2.0 / 3.0).unwrap()), 0.0);
        assert_eq!(max_abs(&rhs_sphere(&s, 2.0 / 3.0).unwrap()), 0.0);
        let utt = acceleration(&m, &s, 2.0 / 3.0).unwrap();
        assert_eq!(orthogonality_residual(&m, &s, &utt).unwrap(), 0.0);
    }

    // For u = (cos(ωt+kx), sin(ωt+kx)): u_tt = −ω²u and Δ²u = k⁴u, so the
    // equation holds with F = (k⁴ − ω²)u.
    #[test]
    fn traveling_wave_residual() {
        let m = ManifoldSpec::sphere(2).unwrap();
        for (k, omega) in [(1.0f64, 1.0f64), (2.0, 3.0), (1.0, 0.0)] {
            let s = wave(32, k, omega);
            let f = rhs_projector(&m, &s, 2.0 / 3.0).unwrap();
            let mut res = s.u.scaled(-omega * omega);
            res.axpy(1.0, &s.u.bilaplacian().unwrap());
            res.axpy(-1.0, &f);
            assert!(max_abs(&res) <= 1e-10, "k={k} ω={omega}: {}", max_abs(&res));
        }
    }

    #[test]
    fn equator_wave_multiplier() {
        let g = Grid::<f64>::periodic(1, 32).unwrap();
        let (k, omega) = (2.0f64, 1.5f64);
        let u = GridField::from_fn(&g, 3, |x| vec![(k * x[0]).cos(), (k * x[0]).sin(), 0.0]);
        let ut = GridField::from_fn(&g, 3, |x| {
            vec![-omega * (k * x[0]).sin(), omega * (k * x[0]).cos(), 0.0]
        });
        let s = SimulationState::new(u, ut, 0.0).unwrap();
        let lambda = sphere_multiplier(&s, 2.0 / 3.0).unwrap();
        let expect = k.powi(4) - omega * omega;
        for &l in lambda.values() {
            assert!((l - expect).abs() <= 1e-10);
        }
    }

    // The two forms filter different intermediate products, so they are
    // compared unfiltered on a well-resolved state.
    #[test]
    fn sphere_form_matches_projector_form() {
        let m = ManifoldSpec::sphere(3).unwrap();
        for dim in [1, 2] {
            let s = smooth_state(dim, 64, 0.2);
            let a = rhs_projector(&m, &s, 1.0).unwrap();
            let b = rhs_sphere(&s, 1.0).unwrap();
            assert!(max_abs(&a.sub(&b)) <= 1e-8, "dim {dim}: {}", max_abs(&a.sub(&b)));
        }
    }

    #[test]
    fn finite_difference_path_matches_closed_form() {
        let closed = ManifoldSpec::sphere(3).unwrap();
        let fd = closed.with_finite_differences();
        let s = smooth_state(1, 32, 0.3);
        let a = rhs_projector(&closed, &s, 2.0 / 3.0).unwrap();
        let b = rhs_projector(&fd, &s, 2.0 / 3.0).unwrap();
        assert!(max_abs(&a.sub(&b)) <= 1e-4 * (1.0 + max_abs(&a)));
    }

    #[test]
    fn orthogonality_converges_spectrally() {
        let m = ManifoldSpec::sphere(3).unwrap();
        let r = |mm: usize| {
            let s = smooth_state(2, mm, 0.5);
            let mut utt = rhs_projector(&m, &s, 1.0).unwrap();
            utt.axpy(-1.0, &s.u.bilaplacian().unwrap());
            orthogonality_residual(&m, &s, &utt).unwrap()
        };
        let (coarse, fine) = (r(32), r(64));
        assert!(fine * 100.0 <= coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn tangent_enforce_examples() {
        let m = ManifoldSpec::sphere(2).unwrap();
        let g = Grid::<f64>::periodic(1, 8).unwrap();
        let u = GridField::from_fn(&g, 2, |_| vec![1.1, 0.0]);
        let ut = GridField::from_fn(&g, 2, |_| vec![1.0, 1.0]);
        let s = tangent_enforce(&m, &SimulationState::new(u, ut, 0.0).unwrap()).unwrap();
        assert_eq!(s.u.point(3), &[1.0, 0.0]);
        assert_eq!(s.ut.point(3), &[0.0, 1.0]);
        let again = tangent_enforce(&m, &s).unwrap();
        assert!(max_abs(&again.u.sub(&s.u)) <= 1e-14);

        let far = GridField::from_fn(&g, 2, |_| vec![1.6, 0.0]);
        let bad = SimulationState::new(far, GridField::zeros(&g, 2), 0.0).unwrap();
        assert!(matches!(tangent_enforce(&m, &bad), Err(Error::TubeExceeded { .. })));
    }
}
