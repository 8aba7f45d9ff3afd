//! Calculus on target manifolds embedded in `R^L`.
//!
//! Every manifold carries a projector *field* `P̃(q) = P_{Π(q)}` defined on the
//! whole tubular neighbourhood: the tangent projector evaluated at the nearest
//! point. On the manifold it is the tangent projector; off the manifold it is
//! constant along normal lines, so it stays an orthogonal projector. Its first
//! and second directional derivatives are what the nonlinearity consumes.
//!
//! Spheres use closed forms throughout. Other manifolds (and spheres built with
//! [`ManifoldSpec::with_finite_differences`]) differentiate the projector field
//! numerically with central differences.

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

/// Residual below which a point counts as lying on the manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;

/// First-derivative finite-difference step (for `f64`).
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Second-derivative finite-difference step (for `f64`).
pub const FD_STEP_SECOND: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ManifoldKind<T> {
    /// Unit sphere `S^{L-1} ⊂ R^L`.
    Sphere { ambient: usize },
    /// Torus of revolution in `R^3` around the z-axis.
    TorusOfRevolution { major: T, minor: T },
}

/// How projector derivatives are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivatives {
    ClosedForm,
    FiniteDifference,
}

/// Target manifold `N ⊂ R^L` together with its tube radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldSpec<T> {
    kind: ManifoldKind<T>,
    tube_radius: T,
    derivatives: Derivatives,
}

/// Requested depth of a [`ProjectorJet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetOrder {
    First,
    Second,
}

/// Projector and its derivatives at a point of the manifold.
///
/// Matrices are row-major `L×L`. `dp[a]` is the derivative of the projector
/// field along the coordinate direction `e_a`, so `dP_p(w) = Σ_a w_a dp[a]`.
/// Likewise `d2p[a][b]` is the mixed second derivative along `e_a, e_b`.
#[derive(Clone, Debug)]
pub struct ProjectorJet<T> {
    pub ambient: usize,
    pub p: Vec<T>,
    pub dp: Vec<T>,
    pub d2p: Option<Vec<T>>,
}

impl<T: Scalar> ProjectorJet<T> {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ambient + j
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.p[self.idx(i, j)]
    }

    /// The matrix `dP_p(w)`.
    pub fn dp_along(&self, w: &[T]) -> Vec<T> {
        let l = self.ambient;
        let mut out = vec![T::zero(); l * l];
        for (a, &wa) in w.iter().enumerate() {
            let block = &self.dp[a * l * l..(a + 1) * l * l];
            for (o, &b) in out.iter_mut().zip(block) {
                *o = *o + wa * b;
            }
        }
        out
    }

    /// The matrix `d²P_p(w, z)`, if the jet was built with second order.
    pub fn d2p_along(&self, w: &[T], z: &[T]) -> Option<Vec<T>> {
        let d2 = self.d2p.as_ref()?;
        let l = self.ambient;
        let mut out = vec![T::zero(); l * l];
        for a in 0..l {
            for b in 0..l {
                let s = w[a] * z[b];
                if s == T::zero() {
                    continue;
                }
                let block = &d2[(a * l + b) * l * l..(a * l + b + 1) * l * l];
                for (o, &m) in out.iter_mut().zip(block) {
                    *o = *o + s * m;
                }
            }
        }
        Some(out)
    }

    /// Applies the projector to a vector.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        mat_vec(&self.p, v)
    }
}

pub(crate) fn mat_vec<T: Scalar>(m: &[T], v: &[T]) -> Vec<T> {
    let l = v.len();
    (0..l).map(|i| dot(&m[i * l..(i + 1) * l], v)).collect()
}

impl<T: Scalar> ManifoldSpec<T> {
    /// Unit sphere in `R^ambient` with the default tube radius 0.5.
    pub fn sphere(ambient: usize) -> Result<Self> {
        if !(2..=MAX_AMBIENT).contains(&ambient) {
            return Err(Error::InvalidManifold(format!(
                "sphere ambient dimension must lie in 2..={MAX_AMBIENT}, got {ambient}"
            )));
        }
        Ok(Self {
            kind: ManifoldKind::Sphere { ambient },
            tube_radius: T::lit(0.5),
            derivatives: Derivatives::ClosedForm,
        })
    }

    /// Torus of revolution with tube radius `0.4 · minor`.
    pub fn torus(major: T, minor: T) -> Result<Self> {
        if !(minor > T::zero() && major > minor) {
            return Err(Error::InvalidManifold(format!(
                "torus needs major > minor > 0, got ({major}, {minor})"
            )));
        }
        Ok(Self {
            kind: ManifoldKind::TorusOfRevolution { major, minor },
            tube_radius: T::lit(0.4) * minor,
            // no closed form is shipped for the torus
            derivatives: Derivatives::FiniteDifference,
        })
    }

    pub fn with_tube_radius(mut self, radius: T) -> Result<Self> {
        let limit = match self.kind {
            ManifoldKind::Sphere { .. } => T::one(),
            ManifoldKind::TorusOfRevolution { minor, .. } => minor,
        };
        if !(radius > T::zero() && radius < limit) {
            return Err(Error::InvalidManifold(format!(
                "tube radius must lie in (0, {limit}), got {radius}"
            )));
        }
        self.tube_radius = radius;
        Ok(self)
    }

    /// Forces the numerical-differentiation path even where closed forms exist.
    pub fn with_finite_differences(mut self) -> Self {
        self.derivatives = Derivatives::FiniteDifference;
        self
    }

    pub fn kind(&self) -> ManifoldKind<T> {
        self.kind
    }

    pub fn derivatives(&self) -> Derivatives {
        self.derivatives
    }

    pub fn tube_radius(&self) -> T {
        self.tube_radius
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere { ambient } => ambient,
            ManifoldKind::TorusOfRevolution { .. } => 3,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere { ambient } => ambient - 1,
            ManifoldKind::TorusOfRevolution { .. } => 2,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, ManifoldKind::Sphere { .. })
    }

    /// Distance from `p` to the manifold.
    pub fn constraint_residual(&self, p: &[T]) -> T {
        match self.kind {
            ManifoldKind::Sphere { .. } => (norm(p) - T::one()).abs(),
            ManifoldKind::TorusOfRevolution { major, minor } => {
                let rho = p[0].hypot(p[1]);
                (rho - major).hypot(p[2]) - minor
            }
            .abs(),
        }
    }

    /// Nearest point on the manifold, checked against the tube radius.
    pub fn retract(&self, p: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); p.len()];
        self.retract_into(p, &mut out)?;
        Ok(out)
    }

    pub fn retract_into(&self, p: &[T], out: &mut [T]) -> Result<()> {
        let d = self.constraint_residual(p);
        if !d.is_finite() {
            return Err(Error::NonFinite("retract"));
        }
        if d >= self.tube_radius {
            return Err(Error::TubeExceeded {
                distance: d.as_f64(),
                tube_radius: self.tube_radius.as_f64(),
            });
        }
        self.nearest_point_into(p, out)
    }

    /// Nearest point on the manifold without the tube restriction.
    ///
    /// Fails only where the nearest point is not unique (the sphere's centre,
    /// the torus axis or core circle).
    pub fn nearest_point_into(&self, p: &[T], out: &mut [T]) -> Result<()> {
        match self.kind {
            ManifoldKind::Sphere { .. } => {
                let r = norm(p);
                if r <= T::epsilon() {
                    return Err(Error::Degenerate("sphere centre has no nearest point"));
                }
                for (o, &x) in out.iter_mut().zip(p) {
                    *o = x / r;
                }
            }
            ManifoldKind::TorusOfRevolution { major, minor } => {
                let (core, dist) = torus_core(major, p)
                    .ok_or(Error::Degenerate("torus axis has no nearest point"))?;
                if dist <= T::epsilon() {
                    return Err(Error::Degenerate("torus core circle has no nearest point"));
                }
                for i in 0..3 {
                    out[i] = core[i] + minor * (p[i] - core[i]) / dist;
                }
            }
        }
        Ok(())
    }

    /// Tangent projector `P_p` at a point of the manifold.
    pub fn tangent_projector(&self, p: &[T]) -> Result<ProjectorJet<T>> {
        self.check_on_manifold(p)?;
        let l = self.ambient_dim();
        Ok(ProjectorJet {
            ambient: l,
            p: self.projector_matrix(p),
            dp: Vec::new(),
            d2p: None,
        })
    }

    /// Projector with its first (and optionally second) derivatives at `p ∈ N`.
    pub fn projector_jet(&self, p: &[T], order: JetOrder) -> Result<ProjectorJet<T>> {
        self.check_on_manifold(p)?;
        let l = self.ambient_dim();
        let basis = |a: usize| {
            let mut e = vec![T::zero(); l];
            e[a] = T::one();
            e
        };
        let mut dp = vec![T::zero(); l * l * l];
        let mut col = vec![T::zero(); l];
        for a in 0..l {
            let ea = basis(a);
            for j in 0..l {
                self.apply_dp(p, &ea, &basis(j), &mut col);
                for i in 0..l {
                    dp[a * l * l + i * l + j] = col[i];
                }
            }
        }
        let d2p = match order {
            JetOrder::First => None,
            JetOrder::Second => {
                let mut d2 = vec![T::zero(); l * l * l * l];
                for a in 0..l {
                    for b in 0..l {
                        let (ea, eb) = (basis(a), basis(b));
                        for j in 0..l {
                            self.apply_d2p(p, &ea, &eb, &basis(j), &mut col);
                            for i in 0..l {
                                d2[(a * l + b) * l * l + i * l + j] = col[i];
                            }
                        }
                    }
                }
                Some(d2)
            }
        };
        Ok(ProjectorJet {
            ambient: l,
            p: self.projector_matrix(p),
            dp,
            d2p,
        })
    }

    fn check_on_manifold(&self, p: &[T]) -> Result<()> {
        let r = self.constraint_residual(p);
        if !(r.as_f64() <= ON_MANIFOLD_TOL) {
            return Err(Error::OffManifold {
                residual: r.as_f64(),
                tolerance: ON_MANIFOLD_TOL,
            });
        }
        Ok(())
    }

    fn projector_matrix(&self, q: &[T]) -> Vec<T> {
        let l = self.ambient_dim();
        let mut m = vec![T::zero(); l * l];
        let mut e = vec![T::zero(); l];
        let mut col = vec![T::zero(); l];
        for j in 0..l {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            self.apply_projector(q, &e, &mut col);
            for i in 0..l {
                m[i * l + j] = col[i];
            }
        }
        m
    }

    /// Unit normal(s) of the projector field at `q`; returns `false` where undefined.
    fn unit_normal(&self, q: &[T], n: &mut [T]) -> bool {
        match self.kind {
            ManifoldKind::Sphere { .. } => {
                let r = norm(q);
                if r == T::zero() {
                    return false;
                }
                for (o, &x) in n.iter_mut().zip(q) {
                    *o = x / r;
                }
            }
            ManifoldKind::TorusOfRevolution { major, .. } => {
                let Some((core, d)) = torus_core(major, q) else {
                    return false;
                };
                if d == T::zero() {
                    return false;
                }
                for i in 0..3 {
                    n[i] = (q[i] - core[i]) / d;
                }
            }
        }
        true
    }

    /// `out = P̃(q) x`. Both supported manifolds have codimension one, so the
    /// projector field is `I - n nᵀ` with `n` the unit normal through `q`.
    pub fn apply_projector(&self, q: &[T], x: &[T], out: &mut [T]) {
        let mut n = [T::zero(); MAX_AMBIENT];
        let n = &mut n[..q.len()];
        if !self.unit_normal(q, n) {
            out.iter_mut().for_each(|o| *o = T::nan());
            return;
        }
        let s = dot(n, x);
        for ((o, &xi), &ni) in out.iter_mut().zip(x).zip(n.iter()) {
            *o = xi - s * ni;
        }
    }

    /// `out = dP̃_q(w) x`.
    pub fn apply_dp(&self, q: &[T], w: &[T], x: &[T], out: &mut [T]) {
        match (self.kind, self.derivatives) {
            (ManifoldKind::Sphere { .. }, Derivatives::ClosedForm) => sphere_dp(q, w, x, out),
            _ => self.fd_dp(q, w, x, out),
        }
    }

    /// `out = d²P̃_q(w, z) x`.
    pub fn apply_d2p(&self, q: &[T], w: &[T], z: &[T], x: &[T], out: &mut [T]) {
        match (self.kind, self.derivatives) {
            (ManifoldKind::Sphere { .. }, Derivatives::ClosedForm) => {
                sphere_d2p(q, w, z, x, out)
            }
            _ => self.fd_d2p(q, w, z, x, out),
        }
    }

    fn fd_dp(&self, q: &[T], w: &[T], x: &[T], out: &mut [T]) {
        let wn = norm(w);
        if wn == T::zero() {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        let h = T::lit(FD_STEP_FIRST * T::eps_ratio().cbrt());
        let l = q.len();
        let mut shifted = [T::zero(); MAX_AMBIENT];
        let mut plus = [T::zero(); MAX_AMBIENT];
        let mut minus = [T::zero(); MAX_AMBIENT];
        let step = h / wn;
        for i in 0..l {
            shifted[i] = q[i] + step * w[i];
        }
        self.apply_projector(&shifted[..l], x, &mut plus[..l]);
        for i in 0..l {
            shifted[i] = q[i] - step * w[i];
        }
        self.apply_projector(&shifted[..l], x, &mut minus[..l]);
        let scale = wn / (T::lit(2.0) * h);
        for i in 0..l {
            out[i] = (plus[i] - minus[i]) * scale;
        }
    }

    fn fd_d2p(&self, q: &[T], w: &[T], z: &[T], x: &[T], out: &mut [T]) {
        let (wn, zn) = (norm(w), norm(z));
        if wn == T::zero() || zn == T::zero() {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        let h = T::lit(FD_STEP_SECOND * T::eps_ratio().powf(0.25));
        let l = q.len();
        let (sw, sz) = (h / wn, h / zn);
        let mut acc = [T::zero(); MAX_AMBIENT];
        let mut shifted = [T::zero(); MAX_AMBIENT];
        let mut val = [T::zero(); MAX_AMBIENT];
        for (a, b, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
        {
            let (a, b, sign) = (T::lit(a), T::lit(b), T::lit(sign));
            for i in 0..l {
                shifted[i] = q[i] + a * sw * w[i] + b * sz * z[i];
            }
            self.apply_projector(&shifted[..l], x, &mut val[..l]);
            for i in 0..l {
                acc[i] = acc[i] + sign * val[i];
            }
        }
        let scale = wn * zn / (T::lit(4.0) * h * h);
        for i in 0..l {
            out[i] = acc[i] * scale;
        }
    }

    /// Orthonormal basis of `T_pN`, obtained by Gram–Schmidt on projector columns.
    pub fn tangent_basis(&self, p: &[T]) -> Vec<Vec<T>> {
        let l = self.ambient_dim();
        let mut basis: Vec<Vec<T>> = Vec::new();
        let mut col = vec![T::zero(); l];
        for j in 0..l {
            let mut e = vec![T::zero(); l];
            e[j] = T::one();
            self.apply_projector(p, &e, &mut col);
            let mut v = col.clone();
            for b in &basis {
                let s = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, &bi)| *x = *x - s * bi);
            }
            let n = norm(&v);
            if n > T::lit(1e-3) {
                v.iter_mut().for_each(|x| *x = *x / n);
                basis.push(v);
            }
            if basis.len() == self.intrinsic_dim() {
                break;
            }
        }
        basis
    }

    /// A canonical base point on the manifold.
    pub fn base_point(&self) -> Vec<T> {
        match self.kind {
            ManifoldKind::Sphere { ambient } => {
                let mut p = vec![T::zero(); ambient];
                p[ambient - 1] = T::one();
                p
            }
            ManifoldKind::TorusOfRevolution { major, minor } => {
                vec![major + minor, T::zero(), T::zero()]
            }
        }
    }
}

/// Largest ambient dimension the stack-allocated kernels support.
pub const MAX_AMBIENT: usize = 8;

/// Nearest point on the torus core circle and the distance to it.
fn torus_core<T: Scalar>(major: T, p: &[T]) -> Option<([T; 3], T)> {
    let rho = p[0].hypot(p[1]);
    if rho == T::zero() {
        return None;
    }
    let core = [major * p[0] / rho, major * p[1] / rho, T::zero()];
    let d = (p[0] - core[0]).hypot(p[1] - core[1]).hypot(p[2]);
    Some((core, d))
}

// Sphere closed forms for P̃(q) = I - f fᵀ with f = q/|q|.
//   Df[w]      = (w - f (f·w)) / r
//   D²f[w, z]  = (-w (f·z) - z (f·w) - f (w·z) + 3 f (f·w)(f·z)) / r²
//   dP̃(w) x    = -(Df[w] (f·x) + f (Df[w]·x))
//   d²P̃(w,z) x = -(D²f[w,z] (f·x) + f (D²f[w,z]·x) + Df[w] (Df[z]·x) + Df[z] (Df[w]·x))

fn sphere_df<T: Scalar>(f: &[T], r: T, w: &[T], out: &mut [T]) {
    let fw = dot(f, w);
    for i in 0..f.len() {
        out[i] = (w[i] - f[i] * fw) / r;
    }
}

fn sphere_dp<T: Scalar>(q: &[T], w: &[T], x: &[T], out: &mut [T]) {
    let l = q.len();
    let r = norm(q);
    let mut f = [T::zero(); MAX_AMBIENT];
    let mut wt = [T::zero(); MAX_AMBIENT];
    for i in 0..l {
        f[i] = q[i] / r;
    }
    sphere_df(&f[..l], r, w, &mut wt[..l]);
    let fx = dot(&f[..l], x);
    let wx = dot(&wt[..l], x);
    for i in 0..l {
        out[i] = -(wt[i] * fx + f[i] * wx);
    }
}

fn sphere_d2p<T: Scalar>(q: &[T], w: &[T], z: &[T], x: &[T], out: &mut [T]) {
    let l = q.len();
    let r = norm(q);
    let mut f = [T::zero(); MAX_AMBIENT];
    let mut wt = [T::zero(); MAX_AMBIENT];
    let mut zt = [T::zero(); MAX_AMBIENT];
    let mut h = [T::zero(); MAX_AMBIENT];
    for i in 0..l {
        f[i] = q[i] / r;
    }
    let f = &f[..l];
    sphere_df(f, r, w, &mut wt[..l]);
    sphere_df(f, r, z, &mut zt[..l]);
    let (fw, fz, wz) = (dot(f, w), dot(f, z), dot(w, z));
    let three = T::lit(3.0);
    let r2 = r * r;
    for i in 0..l {
        h[i] = (-w[i] * fz - z[i] * fw - f[i] * wz + three * f[i] * fw * fz) / r2;
    }
    let fx = dot(f, x);
    let hx = dot(&h[..l], x);
    let zx = dot(&zt[..l], x);
    let wx = dot(&wt[..l], x);
    for i in 0..l {
        out[i] = -(h[i] * fx + f[i] * hx + wt[i] * zx + zt[i] * wx);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn torus() -> ManifoldSpec<f64> {
        ManifoldSpec::torus(2.0, 0.5).unwrap()
    }

    /// Nearest point on the torus by gradient descent over its angle parametrization.
    fn torus_nearest_by_descent(p: &[f64]) -> Vec<f64> {
        let (big, small) = (2.0, 0.5);
        let param = |th: f64, ph: f64| {
            [
                (big + small * ph.cos()) * th.cos(),
                (big + small * ph.cos()) * th.sin(),
                small * ph.sin(),
            ]
        };
        let obj = |th: f64, ph: f64| {
            let q = param(th, ph);
            (0..3).map(|i| (q[i] - p[i]).powi(2)).sum::<f64>()
        };
        let (mut th, mut ph) = (p[1].atan2(p[0]), 0.3);
        for _ in 0..20000 {
            let h = 1e-7;
            let gth = (obj(th + h, ph) - obj(th - h, ph)) / (2.0 * h);
            let gph = (obj(th, ph + h) - obj(th, ph - h)) / (2.0 * h);
            th -= 0.2 * gth;
            ph -= 0.2 * gph;
        }
        param(th, ph).to_vec()
    }

    #[test]
    fn retract_examples() {
        let s2 = ManifoldSpec::<f64>::sphere(2).unwrap().with_tube_radius(0.99).unwrap();
        // (2,0) is at distance 1, beyond any admissible tube
        assert!(matches!(s2.retract(&[2.0, 0.0]), Err(Error::TubeExceeded { .. })));
        let mut out = [0.0; 2];
        s2.nearest_point_into(&[2.0, 0.0], &mut out).unwrap();
        assert_eq!(out, [1.0, 0.0]);

        let s3 = ManifoldSpec::<f64>::sphere(3).unwrap();
        let q = s3.retract(&[0.6, 0.8, 0.0]).unwrap();
        assert_abs_diff_eq!(q[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 0.8, epsilon = 1e-15);

        let q = torus().retract(&[2.6, 0.0, 0.0]).unwrap();
        let oracle = torus_nearest_by_descent(&[2.6, 0.0, 0.0]);
        for i in 0..3 {
            assert_abs_diff_eq!(q[i], oracle[i], epsilon = 1e-10);
        }
        assert_abs_diff_eq!(q[0], 2.5, epsilon = 1e-14);
    }

    #[test]
    fn retract_matches_descent_oracle_off_axis() {
        let p = [1.3, 1.6, 0.35];
        let q = torus().retract(&p).unwrap();
        let oracle = torus_nearest_by_descent(&p);
        for i in 0..3 {
            assert_abs_diff_eq!(q[i], oracle[i], epsilon = 1e-9);
        }
        let dist: f64 = (0..3).map(|i| (q[i] - p[i]).powi(2)).sum::<f64>().sqrt();
        assert_abs_diff_eq!(dist, torus().constraint_residual(&p), epsilon = 1e-12);
    }

    #[test]
    fn constraint_residual_examples() {
        let s2 = ManifoldSpec::<f64>::sphere(2).unwrap();
        assert_eq!(s2.constraint_residual(&[1.0, 0.0]), 0.0);
        assert_eq!(s2.constraint_residual(&[2.0, 0.0]), 1.0);
        let p = [2.0, 0.0, 0.6];
        assert_abs_diff_eq!(torus().constraint_residual(&p), 0.1, epsilon = 1e-15);
        let oracle = torus_nearest_by_descent(&p);
        let d: f64 = (0..3).map(|i| (oracle[i] - p[i]).powi(2)).sum::<f64>().sqrt();
        assert_abs_diff_eq!(d, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn tube_exceeded_and_off_manifold() {
        let s3 = ManifoldSpec::<f64>::sphere(3).unwrap();
        assert!(matches!(s3.retract(&[0.0, 0.0, 1.6]), Err(Error::TubeExceeded { .. })));
        assert!(matches!(
            s3.tangent_projector(&[0.0, 0.0, 1.1]),
            Err(Error::OffManifold { .. })
        ));
        assert!(ManifoldSpec::<f64>::sphere(3).unwrap().with_tube_radius(1.0).is_err());
        assert!(torus().with_tube_radius(0.5).is_err());
        assert!(ManifoldSpec::<f64>::torus(0.5, 2.0).is_err());
    }

    #[test]
    fn projector_examples() {
        let s2 = ManifoldSpec::<f64>::sphere(2).unwrap();
        let jet = s2.tangent_projector(&[1.0, 0.0]).unwrap();
        assert_eq!(jet.p, vec![0.0, 0.0, 0.0, 1.0]);

        let s3 = ManifoldSpec::<f64>::sphere(3).unwrap();
        let jet = s3.tangent_projector(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(jet.apply(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn torus_projector_is_jacobian_of_retraction() {
        let t = torus();
        let p = [2.5, 0.0, 0.0];
        let jet = t.tangent_projector(&p).unwrap();
        let h = 1e-5;
        for j in 0..3 {
            let mut plus = p;
            let mut minus = p;
            plus[j] += h;
            minus[j] -= h;
            let (a, b) = (t.retract(&plus).unwrap(), t.retract(&minus).unwrap());
            for i in 0..3 {
                let fd = (a[i] - b[i]) / (2.0 * h);
                assert_abs_diff_eq!(jet.entry(i, j), fd, epsilon = 1e-7);
            }
        }
        assert_eq!(jet.apply(&[1.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(jet.apply(&[0.0, 1.0, 0.0]), vec![0.0, 1.0, 0.0]);
        assert_eq!(jet.apply(&[0.0, 0.0, 1.0]), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn sphere_dp_examples() {
        let s2 = ManifoldSpec::<f64>::sphere(2).unwrap();
        let jet = s2.projector_jet(&[1.0, 0.0], JetOrder::First).unwrap();
        let m = jet.dp_along(&[0.0, 1.0]);
        assert_eq!(mat_vec(&m, &[1.0, 0.0]), vec![0.0, -1.0]);

        let s3 = ManifoldSpec::<f64>::sphere(3).unwrap();
        let jet = s3.projector_jet(&[0.0, 0.0, 1.0], JetOrder::First).unwrap();
        let m = jet.dp_along(&[1.0, 0.0, 0.0]);
        assert_eq!(mat_vec(&m, &[0.0, 0.0, 1.0]), vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn torus_dp_matches_difference_of_projectors() {
        let t = torus();
        let th: f64 = 0.7;
        let ph: f64 = 1.1;
        let p = [
            (2.0 + 0.5 * ph.cos()) * th.cos(),
            (2.0 + 0.5 * ph.cos()) * th.sin(),
            0.5 * ph.sin(),
        ];
        let jet = t.projector_jet(&p, JetOrder::Second).unwrap();
        let basis = t.tangent_basis(&p);
        let w: Vec<f64> = (0..3).map(|i| 0.3 * basis[0][i] - 0.8 * basis[1][i]).collect();
        let dp = jet.dp_along(&w);
        // independent oracle: difference of on-manifold projectors along the tangent curve
        let h = 1e-5;
        let step = |s: f64| {
            let q: Vec<f64> = (0..3).map(|i| p[i] + s * w[i]).collect();
            t.tangent_projector(&t.retract(&q).unwrap()).unwrap().p
        };
        let (a, b) = (step(h), step(-h));
        for k in 0..9 {
            assert_abs_diff_eq!(dp[k], (a[k] - b[k]) / (2.0 * h), epsilon = 1e-6);
        }
        let d2 = jet.d2p_along(&w, &w).unwrap();
        assert!(d2.iter().all(|x| x.is_finite()));
    }
}
