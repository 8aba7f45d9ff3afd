//! Periodic grids in one or two dimensions and Fourier-multiplier operators.
//!
//! Transforms are unnormalised forward DFTs; the inverse divides by the number
//! of grid points. Norms are scaled so that Parseval holds with the uniform
//! quadrature weight `(ℓ/M)^n`:
//!
//! ```text
//! ‖f‖²_{H^s} = (ℓ/M)^n / M^n · Σ_k (1 + |κ_k|²)^s |F_k|²,   κ_k = 2πk/ℓ
//! ```

use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct Plan<T: Scalar> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// Signed mode number per index along one axis; the Nyquist mode is `-M/2`.
    modes: Vec<i64>,
    /// Physical wavenumber `2πk/ℓ` per index along one axis.
    kappa: Vec<T>,
    refined: OnceLock<Grid<T>>,
}

/// Periodic box `[0, ℓ)^n` sampled with `M` points per axis.
#[derive(Clone)]
pub struct Grid<T: Scalar> {
    dim: usize,
    points: usize,
    length: T,
    plan: Arc<Plan<T>>,
}

impl<T: Scalar> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Scalar> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.length == other.length
    }
}

impl<T: Scalar> Grid<T> {
    pub fn new(dim: usize, points: usize, length: T) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {points}"
            )));
        }
        if !(length > T::zero() && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self::build(dim, points, length))
    }

    /// Box of side `2π`.
    pub fn periodic(dim: usize, points: usize) -> Result<Self> {
        Self::new(dim, points, T::TAU())
    }

    fn build(dim: usize, points: usize, length: T) -> Self {
        let mut planner = FftPlanner::new();
        let half = (points / 2) as i64;
        let modes: Vec<i64> = (0..points as i64)
            .map(|i| if i < half { i } else { i - points as i64 })
            .collect();
        let kappa = modes
            .iter()
            .map(|&k| T::TAU() * T::from_i64(k).unwrap() / length)
            .collect();
        let plan = Plan {
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
            modes,
            kappa,
            refined: OnceLock::new(),
        };
        Self {
            dim,
            points,
            length,
            plan: Arc::new(plan),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Total number of grid points `M^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.length / T::of_usize(self.points)
    }

    /// Quadrature weight `(ℓ/M)^n`.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> T {
        self.length.powi(self.dim as i32)
    }

    /// Per-axis indices of a flat (row-major) point index.
    #[inline]
    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.points, idx % self.points]
        }
    }

    #[inline]
    pub fn flat_index(&self, ij: [usize; 2]) -> usize {
        if self.dim == 1 {
            ij[0]
        } else {
            ij[0] * self.points + ij[1]
        }
    }

    /// Physical coordinates of a point.
    pub fn coords(&self, idx: usize) -> [T; 2] {
        let ij = self.axis_indices(idx);
        let h = self.spacing();
        let y = if self.dim == 2 { h * T::of_usize(ij[1]) } else { T::zero() };
        [h * T::of_usize(ij[0]), y]
    }

    /// Signed integer modes of a flat spectral index.
    #[inline]
    pub fn modes(&self, idx: usize) -> [i64; 2] {
        let ij = self.axis_indices(idx);
        let m = &self.plan.modes;
        [m[ij[0]], if self.dim == 2 { m[ij[1]] } else { 0 }]
    }

    /// Physical wavevector of a flat spectral index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [T; 2] {
        let ij = self.axis_indices(idx);
        let k = &self.plan.kappa;
        [k[ij[0]], if self.dim == 2 { k[ij[1]] } else { T::zero() }]
    }

    #[inline]
    pub fn wavenumber_sq(&self, idx: usize) -> T {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1]
    }

    /// Largest resolved physical wavenumber `πM/ℓ`.
    pub fn max_wavenumber(&self) -> T {
        T::PI() * T::of_usize(self.points) / self.length
    }

    fn is_nyquist(&self, mode: i64) -> bool {
        mode == -((self.points / 2) as i64)
    }

    /// Finer grid used to evaluate sup norms of spectrally interpolated fields.
    fn refined(&self) -> &Grid<T> {
        self.plan.refined.get_or_init(|| {
            let target = if self.dim == 1 { 256 } else { 128 };
            let fine = (2 * self.points).max(target);
            Grid::build(self.dim, fine, self.length)
        })
    }

    fn fft_in_place(&self, buf: &mut [Complex<T>], inverse: bool) {
        let fft = if inverse { &self.plan.inverse } else { &self.plan.forward };
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        if self.dim == 2 {
            transpose(buf, self.points);
            fft.process_with_scratch(buf, &mut scratch);
            transpose(buf, self.points);
        }
    }
}

fn transpose<C: Copy>(buf: &mut [C], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

/// Lebesgue exponents supported by [`GridField::lebesgue_norm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lp {
    Two,
    Four,
    Infinity,
}

/// `R^L`-valued samples on a grid, stored point-major: `values[idx * L + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T: Scalar> {
    grid: Grid<T>,
    ncomp: usize,
    values: Vec<T>,
}

/// Fourier coefficients of a field, stored component-major.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Scalar> {
    grid: Grid<T>,
    ncomp: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> GridField<T> {
    pub fn new(grid: &Grid<T>, ncomp: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() * ncomp {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len() * ncomp,
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            ncomp,
            values,
        })
    }

    pub fn zeros(grid: &Grid<T>, ncomp: usize) -> Self {
        Self {
            grid: grid.clone(),
            ncomp,
            values: vec![T::zero(); grid.len() * ncomp],
        }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &Grid<T>, ncomp: usize, mut f: impl FnMut([T; 2]) -> Vec<T>) -> Self {
        let mut values = Vec::with_capacity(grid.len() * ncomp);
        for idx in 0..grid.len() {
            let v = f(grid.coords(idx));
            debug_assert_eq!(v.len(), ncomp);
            values.extend_from_slice(&v);
        }
        Self {
            grid: grid.clone(),
            ncomp,
            values,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn point(&self, idx: usize) -> &[T] {
        &self.values[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    #[inline]
    pub fn point_mut(&mut self, idx: usize) -> &mut [T] {
        &mut self.values[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.grid == other.grid && self.ncomp == other.ncomp
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} x {} vs {:?} x {}",
                self.grid, self.ncomp, other.grid, other.ncomp
            )))
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (x, &y) in self.values.iter_mut().zip(&other.values) {
            *x = *x + a * y;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|x| *x = *x * a);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    /// Stacks the components of several fields on the same grid.
    pub fn concat(fields: &[&Self]) -> Self {
        let grid = fields[0].grid.clone();
        let ncomp: usize = fields.iter().map(|f| f.ncomp).sum();
        let mut values = Vec::with_capacity(grid.len() * ncomp);
        for idx in 0..grid.len() {
            for f in fields {
                values.extend_from_slice(f.point(idx));
            }
        }
        Self {
            grid,
            ncomp,
            values,
        }
    }

    /// Pointwise Euclidean norm over components.
    pub fn pointwise_norm(&self, idx: usize) -> T {
        self.point(idx)
            .iter()
            .fold(T::zero(), |a, &x| a + x * x)
            .sqrt()
    }

    pub fn max_pointwise_norm(&self) -> T {
        (0..self.grid.len())
            .map(|i| self.pointwise_norm(i))
            .fold(T::zero(), T::max)
    }

    pub fn spectrum(&self) -> Result<Spectrum<T>> {
        self.ensure_finite("forward transform")?;
        let n = self.grid.len();
        let mut data = vec![Complex::default(); n * self.ncomp];
        for c in 0..self.ncomp {
            let buf = &mut data[c * n..(c + 1) * n];
            for (idx, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(self.values[idx * self.ncomp + c], T::zero());
            }
            self.grid.fft_in_place(buf, false);
        }
        Ok(Spectrum {
            grid: self.grid.clone(),
            ncomp: self.ncomp,
            data,
        })
    }

    /// Per-axis first derivatives, one field per axis.
    pub fn gradient(&self) -> Result<Vec<Self>> {
        let s = self.spectrum()?;
        Ok((0..self.grid.dim).map(|a| s.derivative(a).to_field()).collect())
    }

    /// Gradient with the per-axis derivatives stacked into one field of `n·L` components.
    pub fn gradient_stacked(&self) -> Result<Self> {
        let g = self.gradient()?;
        Ok(Self::concat(&g.iter().collect::<Vec<_>>()))
    }

    pub fn laplacian(&self) -> Result<Self> {
        Ok(self.spectrum()?.laplacian().to_field())
    }

    pub fn bilaplacian(&self) -> Result<Self> {
        let g = &self.grid;
        Ok(self
            .spectrum()?
            .map_modes(|idx| {
                let k2 = g.wavenumber_sq(idx);
                Complex::new(k2 * k2, T::zero())
            })
            .to_field())
    }

    /// `(Σ_k (1+|κ|²)^s |f̂_k|²)^{1/2}` in the unitary convention.
    pub fn sobolev_norm(&self, s: u32) -> Result<T> {
        Ok(self.spectrum()?.sobolev_norm(s))
    }

    pub fn lebesgue_norm(&self, p: Lp) -> Result<T> {
        self.ensure_finite("lebesgue norm")?;
        let n = self.grid.len();
        let w = self.grid.cell_volume();
        Ok(match p {
            Lp::Two => {
                let s = (0..n).fold(T::zero(), |a, i| a + self.pointwise_norm(i).powi(2));
                (w * s).sqrt()
            }
            Lp::Four => {
                let s = (0..n).fold(T::zero(), |a, i| a + self.pointwise_norm(i).powi(4));
                (w * s).sqrt().sqrt()
            }
            Lp::Infinity => self.max_pointwise_norm(),
        })
    }

    /// Sup norm of the trigonometric interpolant, sampled on a refined grid.
    ///
    /// Two grids of the same box that both resolve a band-limited field give
    /// the same value here, unlike the plain sample maximum.
    pub fn sup_norm_refined(&self) -> Result<T> {
        Ok(self.upsampled()?.max_pointwise_norm())
    }

    /// Trigonometric interpolant sampled on the refined grid of the same box
    /// (`max(2M, 256)` points per axis in 1D, `max(2M, 128)` in 2D).
    pub fn upsampled(&self) -> Result<Self> {
        let fine = self.grid.refined().clone();
        Ok(self.spectrum()?.interpolate(&fine).to_field())
    }

    /// Zeroes modes with `|k_i| ≥ fraction · M/2` on any axis; `fraction ≥ 1` is the identity.
    pub fn dealias(&self, fraction: T) -> Result<Self> {
        if fraction >= T::one() {
            return Ok(self.clone());
        }
        Ok(self.spectrum()?.dealiased(fraction).to_field())
    }

    /// Samples `x ↦ f(λx)` for an integer factor `λ`; exact on the grid.
    pub fn rescaled(&self, lambda: usize) -> Self {
        let g = &self.grid;
        let m = g.points;
        let mut out = Self::zeros(g, self.ncomp);
        for idx in 0..g.len() {
            let ij = g.axis_indices(idx);
            let src = g.flat_index([(lambda * ij[0]) % m, (lambda * ij[1]) % m]);
            out.point_mut(idx).copy_from_slice(self.point(src));
        }
        out
    }

    /// Extracts one component as a scalar field.
    pub fn component(&self, c: usize) -> Self {
        let mut out = Self::zeros(&self.grid, 1);
        for idx in 0..self.grid.len() {
            out.values[idx] = self.values[idx * self.ncomp + c];
        }
        out
    }
}

/// Divergence of a per-axis stack of fields: `Σ_i ∂_i f_i`.
pub fn divergence<T: Scalar>(fields: &[GridField<T>]) -> Result<GridField<T>> {
    let mut acc: Option<Spectrum<T>> = None;
    for (a, f) in fields.iter().enumerate() {
        let d = f.spectrum()?.derivative(a);
        match acc.as_mut() {
            None => acc = Some(d),
            Some(s) => s.add_assign(&d),
        }
    }
    Ok(acc.expect("at least one axis").to_field())
}

impl<T: Scalar> Spectrum<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    /// Coefficient of component `c` at flat spectral index `idx`.
    pub fn coeff(&self, c: usize, idx: usize) -> Complex<T> {
        self.data[c * self.grid.len() + idx]
    }

    pub fn coeff_mut(&mut self, c: usize, idx: usize) -> &mut Complex<T> {
        let n = self.grid.len();
        &mut self.data[c * n + idx]
    }

    /// Multiplies every component by the same per-mode multiplier.
    pub fn map_modes(&self, mult: impl Fn(usize) -> Complex<T>) -> Self {
        let n = self.grid.len();
        let mut out = self.clone();
        for idx in 0..n {
            let m = mult(idx);
            for c in 0..self.ncomp {
                out.data[c * n + idx] = out.data[c * n + idx] * m;
            }
        }
        out
    }

    /// Spectral derivative along `axis`; the Nyquist mode of that axis is dropped.
    pub fn derivative(&self, axis: usize) -> Self {
        let g = &self.grid;
        self.map_modes(|idx| {
            if g.is_nyquist(g.modes(idx)[axis]) {
                Complex::default()
            } else {
                Complex::new(T::zero(), g.wavevector(idx)[axis])
            }
        })
    }

    pub fn laplacian(&self) -> Self {
        let g = &self.grid;
        self.map_modes(|idx| Complex::new(-g.wavenumber_sq(idx), T::zero()))
    }

    pub fn dealiased(&self, fraction: T) -> Self {
        if fraction >= T::one() {
            return self.clone();
        }
        let g = &self.grid;
        let cut = fraction * T::of_usize(g.points) / T::lit(2.0);
        self.map_modes(|idx| {
            let m = g.modes(idx);
            let keep = m[..g.dim]
                .iter()
                .all(|&k| T::from_i64(k.abs()).unwrap() < cut);
            if keep {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::default()
            }
        })
    }

    /// Reads the components as `dim` consecutive blocks of equal width and
    /// returns `Σ_i ∂_i (block i)`, the divergence of a stacked per-axis field.
    pub fn divergence_of_blocks(&self) -> Self {
        let g = &self.grid;
        let n = g.len();
        let width = self.ncomp / g.dim;
        let mut data = vec![Complex::default(); n * width];
        for axis in 0..g.dim {
            for idx in 0..n {
                if g.is_nyquist(g.modes(idx)[axis]) {
                    continue;
                }
                let m = Complex::new(T::zero(), g.wavevector(idx)[axis]);
                for c in 0..width {
                    let src = self.data[(axis * width + c) * n + idx];
                    data[c * n + idx] = data[c * n + idx] + src * m;
                }
            }
        }
        Spectrum {
            grid: g.clone(),
            ncomp: width,
            data,
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn scale(&mut self, s: T) {
        self.data.iter_mut().for_each(|a| *a = *a * s);
    }

    pub fn sobolev_norm(&self, s: u32) -> T {
        let g = &self.grid;
        let n = g.len();
        let mut acc = T::zero();
        for idx in 0..n {
            let w = (T::one() + g.wavenumber_sq(idx)).powi(s as i32);
            let e = (0..self.ncomp).fold(T::zero(), |a, c| a + self.data[c * n + idx].norm_sqr());
            acc = acc + w * e;
        }
        let nf = T::of_usize(n);
        (acc * g.cell_volume() / nf).sqrt()
    }

    pub fn to_field(&self) -> GridField<T> {
        let g = &self.grid;
        let n = g.len();
        let inv_n = T::one() / T::of_usize(n);
        let mut values = vec![T::zero(); n * self.ncomp];
        let mut buf = vec![Complex::default(); n];
        for c in 0..self.ncomp {
            buf.copy_from_slice(&self.data[c * n..(c + 1) * n]);
            g.fft_in_place(&mut buf, true);
            for (idx, b) in buf.iter().enumerate() {
                values[idx * self.ncomp + c] = b.re * inv_n;
            }
        }
        GridField {
            grid: g.clone(),
            ncomp: self.ncomp,
            values,
        }
    }

    /// Trigonometric interpolation onto a finer grid of the same box.
    pub fn interpolate(&self, fine: &Grid<T>) -> Self {
        let g = &self.grid;
        let (m, f) = (g.points, fine.points);
        debug_assert!(f >= m && fine.dim == g.dim);
        // Split the Nyquist coefficient symmetrically so real fields stay real.
        let targets = |k: i64| -> Vec<(usize, T)> {
            let wrap = |k: i64| k.rem_euclid(f as i64) as usize;
            if g.is_nyquist(k) && f > m {
                let half = T::lit(0.5);
                vec![(wrap(k), half), (wrap(-k), half)]
            } else {
                vec![(wrap(k), T::one())]
            }
        };
        let nf = fine.len();
        let scale = T::of_usize(nf) / T::of_usize(g.len());
        let mut data = vec![Complex::default(); nf * self.ncomp];
        for idx in 0..g.len() {
            let k = g.modes(idx);
            let ti = targets(k[0]);
            let tj = if g.dim == 2 { targets(k[1]) } else { vec![(0, T::one())] };
            for &(a, wa) in &ti {
                for &(b, wb) in &tj {
                    let fidx = fine.flat_index([a, b]);
                    for c in 0..self.ncomp {
                        data[c * nf + fidx] =
                            data[c * nf + fidx] + self.data[c * g.len() + idx] * (wa * wb * scale);
                    }
                }
            }
        }
        Spectrum {
            grid: fine.clone(),
            ncomp: self.ncomp,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_diff(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::<f64>::periodic(3, 16).is_err());
        assert!(Grid::<f64>::periodic(1, 6).is_err());
        assert!(Grid::<f64>::periodic(1, 15).is_err());
        assert!(Grid::<f64>::new(1, 16, -1.0).is_err());
        assert!(Grid::<f64>::periodic(2, 8).is_ok());
    }

    #[test]
    fn gradient_of_sine() {
        let g = Grid::<f64>::periodic(1, 16).unwrap();
        let f = GridField::from_fn(&g, 1, |x| vec![x[0].sin()]);
        let d = &f.gradient().unwrap()[0];
        let exact = GridField::from_fn(&g, 1, |x| vec![x[0].cos()]);
        assert!(max_diff(d, &exact) <= 1e-13);

        let c = GridField::from_fn(&g, 2, |_| vec![3.0, -1.0]);
        assert!(c.gradient().unwrap()[0].max_pointwise_norm() <= 1e-14);
    }

    #[test]
    fn gradient_2d_against_fourth_order_differences() {
        let g = Grid::<f64>::periodic(2, 32).unwrap();
        let f = GridField::from_fn(&g, 1, |x| vec![(2.0 * x[0]).cos() * x[1].sin()]);
        let grad = f.gradient().unwrap();
        let ex = GridField::from_fn(&g, 1, |x| vec![-2.0 * (2.0 * x[0]).sin() * x[1].sin()]);
        let ey = GridField::from_fn(&g, 1, |x| vec![(2.0 * x[0]).cos() * x[1].cos()]);
        assert!(max_diff(&grad[0], &ex) <= 1e-12);
        assert!(max_diff(&grad[1], &ey) <= 1e-12);

        // fourth-order central differences agree to their truncation error
        let h = g.spacing();
        let m = g.points_per_axis();
        let v = f.values();
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            let [i, j] = g.axis_indices(idx);
            let at = |di: i64| v[g.flat_index([((i as i64 + di).rem_euclid(m as i64)) as usize, j])];
            let fd = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
            worst = worst.max((fd - grad[0].values()[idx]).abs());
        }
        assert!(worst < 2e-2, "fd oracle disagreement {worst}");
    }

    #[test]
    fn laplacian_multipliers() {
        let g = Grid::<f64>::periodic(1, 16).unwrap();
        let f = GridField::from_fn(&g, 1, |x| vec![x[0].cos()]);
        assert!(max_diff(&f.laplacian().unwrap(), &f.scaled(-1.0)) <= 1e-13);
        assert!(max_diff(&f.bilaplacian().unwrap(), &f) <= 1e-12);
        let f2 = GridField::from_fn(&g, 1, |x| vec![(2.0 * x[0]).cos()]);
        assert!(max_diff(&f2.laplacian().unwrap(), &f2.scaled(-4.0)) <= 1e-12);
        assert!(max_diff(&f2.bilaplacian().unwrap(), &f2.scaled(16.0)) <= 1e-11);
    }

    #[test]
    fn norms_of_sine() {
        let g = Grid::<f64>::periodic(1, 32).unwrap();
        let f = GridField::from_fn(&g, 1, |x| vec![x[0].sin()]);
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(f.sobolev_norm(0).unwrap(), pi.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(f.sobolev_norm(1).unwrap(), (2.0 * pi).sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(f.lebesgue_norm(Lp::Two).unwrap(), pi.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(
            f.lebesgue_norm(Lp::Four).unwrap(),
            (0.75 * pi).powf(0.25),
            epsilon = 1e-13
        );
        let c = GridField::from_fn(&g, 2, |_| vec![3.0, 4.0]);
        assert_eq!(c.lebesgue_norm(Lp::Infinity).unwrap(), 5.0);
        assert_eq!(GridField::zeros(&g, 3).sobolev_norm(3).unwrap(), 0.0);
    }

    #[test]
    fn dealias_examples() {
        let g = Grid::<f64>::periodic(1, 16).unwrap();
        let f = GridField::from_fn(&g, 1, |x| vec![(7.0 * x[0]).cos() + (2.0 * x[0]).sin()]);
        assert_eq!(f.dealias(1.0).unwrap(), f);
        let high = GridField::from_fn(&g, 1, |x| vec![(7.0 * x[0]).cos()]);
        assert!(high.dealias(2.0 / 3.0).unwrap().max_pointwise_norm() <= 1e-14);
        let low = GridField::from_fn(&g, 1, |x| vec![(2.0 * x[0]).sin() + x[0].cos()]);
        assert!(max_diff(&low.dealias(2.0 / 3.0).unwrap(), &low) <= 1e-14);
    }

    #[test]
    fn refined_sup_norm_is_resolution_independent() {
        let field = |m: usize| {
            let g = Grid::<f64>::periodic(2, m).unwrap();
            GridField::from_fn(&g, 1, |x| vec![(x[0] + 0.3).sin() * (2.0 * x[1] + 0.1).cos()])
        };
        let a = field(32).sup_norm_refined().unwrap();
        let b = field(64).sup_norm_refined().unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn rescale_is_exact_sampling() {
        let g = Grid::<f64>::periodic(1, 32).unwrap();
        let f = GridField::from_fn(&g, 1, |x| vec![x[0].sin()]);
        let e = GridField::from_fn(&g, 1, |x| vec![(3.0 * x[0]).sin()]);
        assert!(max_diff(&f.rescaled(3), &e) <= 1e-14);
    }

    #[test]
    fn f32_gradient_smoke() {
        let g = Grid::<f32>::periodic(1, 16).unwrap();
        let f = GridField::from_fn(&g, 1, |x| vec![x[0].sin()]);
        let d = &f.gradient().unwrap()[0];
        let worst = (0..g.len())
            .map(|i| (d.values()[i] - g.coords(i)[0].cos()).abs())
            .fold(0.0f32, f32::max);
        assert!(worst < 1e-5);
    }
}
