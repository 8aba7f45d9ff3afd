//! Monitored quantities: energy, growth bounds, the higher-order functional
//! `𝓔`, interpolation-inequality ratios, the logarithmic Sobolev bound on
//! `h = ‖∇u‖_∞`, Gronwall envelopes and the two-trajectory difference energy.
//!
//! Sup norms (and `L⁴` norms) are evaluated on the spectral interpolant over a
//! refined grid, so the ratios do not depend on where the samples happen to sit.

use crate::dynamics::{constraint_max, projector_form, tangent_max, tangential_max, SimulationState};
use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;
use crate::grid::{GridField, Lp};
use crate::scalar::Scalar;

/// Norms at or below this value count as zero in ratio denominators.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Interpolation-inequality names reported for two-dimensional runs, in CSV order.
pub const GN_NAMES_2D: [&str; 5] = ["eins_a", "eins_b", "zwei_a", "zwei_b", "drei"];
/// Names reported for one-dimensional runs, in CSV order.
pub const GN_NAMES_1D: [&str; 3] = ["easy", "n1_hess", "n1_vel"];

pub fn gn_names(dim: usize) -> &'static [&'static str] {
    if dim == 1 {
        &GN_NAMES_1D
    } else {
        &GN_NAMES_2D
    }
}

/// One time slice of every monitored quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub energy: f64,
    pub energy_rel_drift: f64,
    pub grad_l2_sq: f64,
    pub cal_e: f64,
    pub h: f64,
    pub constraint_max: f64,
    pub tangent_max: f64,
    pub ortho_residual: f64,
    pub gn: GnRatios,
    /// `None` in one dimension or for a constant map.
    pub bgw_ratio: Option<f64>,
    pub gronwall_envelope: f64,
    pub gronwall_violated: bool,
    /// `‖u(t) − u(0)‖_{L²}`.
    pub displacement_l2: f64,
}

/// Named ratios `lhs / rhs` of the interpolation inequalities.
#[derive(Clone, Debug, PartialEq)]
pub struct GnRatios {
    pub values: Vec<(&'static str, f64)>,
    /// Set when some denominator vanished and its ratio was reported as 0.
    pub degenerate: bool,
}

impl GnRatios {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

/// `½(‖u_t‖² + ‖Δu‖²)` by spectral quadrature.
pub fn energy<T: Scalar>(s: &SimulationState<T>) -> Result<T> {
    let vt = s.ut.sobolev_norm(0)?;
    let lap = s.u.spectrum()?.laplacian().sobolev_norm(0);
    Ok((vt * vt + lap * lap) / T::lit(2.0))
}

/// `‖∇u‖²_{L²}`.
pub fn grad_l2_sq<T: Scalar>(u: &GridField<T>) -> Result<T> {
    let s = u.spectrum()?;
    let g = u.grid();
    let mut acc = T::zero();
    for axis in 0..g.dim() {
        acc = acc + s.derivative(axis).sobolev_norm(0).powi(2);
    }
    Ok(acc)
}

/// Higher-order functional: `‖Δu_t‖ + ‖Δ²u‖` in 2D, `‖∇u_t‖ + ‖∇Δu‖` in 1D.
pub fn cal_e<T: Scalar>(s: &SimulationState<T>) -> Result<T> {
    if s.grid().dim() == 2 {
        let a = s.ut.spectrum()?.laplacian().sobolev_norm(0);
        let b = s.u.spectrum()?.laplacian().laplacian().sobolev_norm(0);
        Ok(a + b)
    } else {
        let a = s.ut.spectrum()?.derivative(0).sobolev_norm(0);
        let b = s.u.spectrum()?.laplacian().derivative(0).sobolev_norm(0);
        Ok(a + b)
    }
}

/// Energies of `u` and of `u_λ(x) = u(λx)`, `∂_t u_λ = λ² u_t(λx)` on the same box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingCheck {
    pub e_original: f64,
    pub e_scaled: f64,
    /// `λ⁴`: the exact ratio on a fixed periodic box.
    pub predicted_fixed_box: f64,
    /// `λ^{4−n}`: the ratio on the whole space.
    pub predicted_whole_space: f64,
    /// `E_scaled / E_original`.
    pub measured_fixed_box: f64,
    /// `λ^{−n} E_scaled / E_original`, comparable with `predicted_whole_space`.
    pub measured_whole_space: f64,
}

impl ScalingCheck {
    pub fn fixed_box_error(&self) -> f64 {
        (self.measured_fixed_box / self.predicted_fixed_box - 1.0).abs()
    }

    pub fn whole_space_error(&self) -> f64 {
        (self.measured_whole_space / self.predicted_whole_space - 1.0).abs()
    }
}

/// Rescales a state by an integer factor: `u(λx)` and `λ² u_t(λx)`.
pub fn rescale_state<T: Scalar>(s: &SimulationState<T>, lambda: usize) -> SimulationState<T> {
    let l2 = T::of_usize(lambda * lambda);
    SimulationState {
        u: s.u.rescaled(lambda),
        ut: s.ut.rescaled(lambda).scaled(l2),
        time: s.time,
    }
}

pub fn scaling_energy_check<T: Scalar>(s: &SimulationState<T>, lambda: usize) -> Result<ScalingCheck> {
    if lambda == 0 {
        return Err(Error::validation("lambda", "must be a positive integer"));
    }
    let e0 = energy(s)?.as_f64();
    let e1 = energy(&rescale_state(s, lambda))?.as_f64();
    let lam = lambda as f64;
    let n = s.grid().dim() as i32;
    let ratio = if e0 == 0.0 { 1.0 } else { e1 / e0 };
    Ok(ScalingCheck {
        e_original: e0,
        e_scaled: e1,
        predicted_fixed_box: lam.powi(4),
        predicted_whole_space: lam.powi(4 - n),
        measured_fixed_box: ratio,
        measured_whole_space: ratio * lam.powi(-n),
    })
}

struct RatioBuilder {
    values: Vec<(&'static str, f64)>,
    degenerate: bool,
}

impl RatioBuilder {
    fn push(&mut self, name: &'static str, lhs: f64, factors: &[(f64, f64)]) {
        let zero = factors.iter().any(|&(norm, _)| norm <= DEGENERATE_NORM);
        if zero {
            self.degenerate = true;
            self.values.push((name, 0.0));
        } else {
            let den: f64 = factors.iter().map(|&(norm, p)| norm.powf(p)).product();
            self.values.push((name, lhs / den));
        }
    }
}

fn l2<T: Scalar>(f: &GridField<T>) -> Result<f64> {
    Ok(f.sobolev_norm(0)?.as_f64())
}

fn fine_norms<T: Scalar>(f: &GridField<T>) -> Result<(f64, f64)> {
    let up = f.upsampled()?;
    Ok((
        up.lebesgue_norm(Lp::Infinity)?.as_f64(),
        up.lebesgue_norm(Lp::Four)?.as_f64(),
    ))
}

/// Ratios of the interpolation inequalities for the state's dimension.
pub fn gn_check<T: Scalar>(s: &SimulationState<T>) -> Result<GnRatios> {
    let g = s.grid();
    let su = s.u.spectrum()?;
    let sv = s.ut.spectrum()?;
    let mut r = RatioBuilder {
        values: Vec::new(),
        degenerate: false,
    };
    let stack = |fields: Vec<GridField<T>>| GridField::concat(&fields.iter().collect::<Vec<_>>());
    let grad = |sp: &crate::grid::Spectrum<T>| stack((0..g.dim()).map(|a| sp.derivative(a).to_field()).collect());

    let (vt_inf, _) = fine_norms(&s.ut)?;
    let vt2 = l2(&s.ut)?;
    let grad_u = grad(&su);
    let (gu_inf, gu_4) = fine_norms(&grad_u)?;
    let gu2 = l2(&grad_u)?;
    let lap_sp = su.laplacian();
    let lap = lap_sp.to_field();
    let lap2 = l2(&lap)?;

    if g.dim() == 2 {
        let (lap_inf, _) = fine_norms(&lap)?;
        let grad_lap2 = l2(&grad(&lap_sp))?;
        let bilap2 = lap_sp.laplacian().sobolev_norm(0).as_f64();
        let lap_vt2 = sv.laplacian().sobolev_norm(0).as_f64();
        let (_, grad_vt4) = fine_norms(&grad(&sv))?;
        r.push("eins_a", lap_inf + grad_lap2, &[(bilap2, 0.5), (lap2, 0.5)]);
        r.push("eins_b", vt_inf, &[(lap_vt2, 0.5), (vt2, 0.5)]);
        r.push("zwei_a", gu_inf, &[(bilap2, 1.0 / 3.0), (gu2, 2.0 / 3.0)]);
        r.push("zwei_b", gu_4, &[(bilap2, 1.0 / 6.0), (gu2, 5.0 / 6.0)]);
        r.push("drei", grad_vt4, &[(lap_vt2, 0.75), (vt2, 0.25)]);
    } else {
        let (lap_inf, _) = fine_norms(&lap)?;
        let d4 = lap_sp.laplacian().sobolev_norm(0).as_f64();
        let grad_vt2 = sv.derivative(0).sobolev_norm(0).as_f64();
        r.push("easy", gu_inf, &[(lap2, 0.5), (gu2, 0.5)]);
        r.push("n1_hess", lap_inf, &[(d4, 0.25), (lap2, 0.75)]);
        r.push("n1_vel", vt_inf, &[(grad_vt2, 0.5), (vt2, 0.5)]);
    }
    Ok(GnRatios {
        values: r.values,
        degenerate: r.degenerate,
    })
}

/// `h / [‖∇u‖_{H¹}(1 + log^{1/2}(1 + ‖∇u‖²_{H²}/‖∇u‖²_{H¹}))]` for two-dimensional states.
pub fn bgw_check<T: Scalar>(s: &SimulationState<T>) -> Result<f64> {
    let g = s.grid();
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: g.dim(),
        });
    }
    let grad = s.u.gradient_stacked()?;
    let gs = grad.spectrum()?;
    let h1 = gs.sobolev_norm(1).as_f64();
    if h1 <= DEGENERATE_NORM {
        return Err(Error::Degenerate("gradient vanishes identically"));
    }
    let h2 = gs.sobolev_norm(2).as_f64();
    let h = grad.sup_norm_refined()?.as_f64();
    let log_term = (1.0 + (h2 * h2) / (h1 * h1)).ln().sqrt();
    Ok(h / (h1 * (1.0 + log_term)))
}

/// Which Gronwall inequality bounds `𝓔`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GronwallForm {
    /// `(1 + 𝓔(t)) ≤ e^{Ct}(1 + 𝓔(0))`.
    Linear,
    /// `log(e + 𝓔²(t)) ≤ e^{Ct} log(e + 𝓔²(0))`.
    LogLog,
}

impl GronwallForm {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            GronwallForm::Linear
        } else {
            GronwallForm::LogLog
        }
    }

    /// The monitored quantity: `1 + 𝓔` or `log(e + 𝓔²)`.
    pub fn monitored(self, cal_e: f64) -> f64 {
        match self {
            GronwallForm::Linear => 1.0 + cal_e,
            GronwallForm::LogLog => (std::f64::consts::E + cal_e * cal_e).ln(),
        }
    }

    /// Admissible value of the monitored quantity at time `t` after `t0`.
    pub fn envelope(self, c: f64, elapsed: f64, cal_e0: f64) -> f64 {
        (c * elapsed).exp() * self.monitored(cal_e0)
    }
}

/// Relative slack allowed before an envelope counts as violated.
const ENVELOPE_SLACK: f64 = 1e-12;

/// Envelope value and violation flag for every record of a history.
pub fn gronwall_envelope(history: &[DiagnosticsRecord], c: f64, form: GronwallForm) -> Vec<(f64, bool)> {
    let Some(first) = history.first() else {
        return Vec::new();
    };
    history
        .iter()
        .map(|r| {
            let env = form.envelope(c, r.time - first.time, first.cal_e);
            let violated = !(form.monitored(r.cal_e) <= env * (1.0 + ENVELOPE_SLACK));
            (env, violated)
        })
        .collect()
}

/// Smallest `C` whose envelope contains the whole series `(t, 𝓔(t))`.
pub fn fit_gronwall_constant(series: &[(f64, f64)], form: GronwallForm) -> f64 {
    let Some(&(t0, e0)) = series.first() else {
        return 0.0;
    };
    let base = form.monitored(e0);
    series
        .iter()
        .filter(|(t, _)| *t > t0)
        .map(|&(t, e)| (form.monitored(e) / base).ln() / (t - t0))
        .fold(0.0, f64::max)
}

/// `(‖w_t‖² + ‖w‖²_{H²})^{1/2}` for `w = u_a − u_b`.
pub fn uniqueness_energy<T: Scalar>(a: &SimulationState<T>, b: &SimulationState<T>) -> Result<T> {
    a.u.check_shape(&b.u)?;
    a.ut.check_shape(&b.ut)?;
    let w = a.u.sub(&b.u);
    let wt = a.ut.sub(&b.ut);
    let x = wt.sobolev_norm(0)?;
    let y = w.sobolev_norm(2)?;
    Ok((x * x + y * y).sqrt())
}

/// Right side of `sup_t ‖∇u(t)‖ ≤ K √(1+T)(√E + ‖∇u₀‖)`.
pub fn grad_growth_bound(k: f64, horizon: f64, energy0: f64, grad0_l2: f64) -> f64 {
    k * (1.0 + horizon).sqrt() * (energy0.sqrt() + grad0_l2)
}

/// Right side of `sup_t ‖u(t) − u₀‖ ≤ K′ T √E`.
pub fn displacement_bound(k: f64, horizon: f64, energy0: f64) -> f64 {
    k * horizon * energy0.sqrt()
}

/// Produces [`DiagnosticsRecord`]s relative to a fixed initial state.
pub struct Monitor<T: Scalar> {
    manifold: ManifoldSpec<T>,
    dealias: T,
    u0: GridField<T>,
    t0: f64,
    energy0: f64,
    cal_e0: f64,
    gronwall_c: f64,
    form: GronwallForm,
}

impl<T: Scalar> Monitor<T> {
    pub fn new(manifold: &ManifoldSpec<T>, initial: &SimulationState<T>, dealias: T, gronwall_c: f64) -> Result<Self> {
        Ok(Self {
            manifold: *manifold,
            dealias,
            u0: initial.u.clone(),
            t0: initial.time.as_f64(),
            energy0: energy(initial)?.as_f64(),
            cal_e0: cal_e(initial)?.as_f64(),
            gronwall_c,
            form: GronwallForm::for_dim(initial.grid().dim()),
        })
    }

    pub fn initial_energy(&self) -> f64 {
        self.energy0
    }

    pub fn form(&self) -> GronwallForm {
        self.form
    }

    pub fn record(&self, s: &SimulationState<T>) -> Result<DiagnosticsRecord> {
        let time = s.time.as_f64();
        let e = energy(s)?.as_f64();
        let ce = cal_e(s)?.as_f64();
        let mut acc = projector_form(&self.manifold, &s.u, &s.ut, self.dealias)?;
        acc.axpy(-T::one(), &s.u.bilaplacian()?);
        let mut total = s.u.bilaplacian()?;
        total.axpy(T::one(), &acc);
        let ortho = tangential_max(&self.manifold, &s.u, &total).as_f64();
        let bgw = if s.grid().dim() == 2 {
            match bgw_check(s) {
                Ok(r) => Some(r),
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let env = self.form.envelope(self.gronwall_c, time - self.t0, self.cal_e0);
        let violated = !(self.form.monitored(ce) <= env * (1.0 + ENVELOPE_SLACK));
        Ok(DiagnosticsRecord {
            time,
            energy: e,
            energy_rel_drift: (e - self.energy0).abs() / self.energy0.max(f64::EPSILON),
            grad_l2_sq: grad_l2_sq(&s.u)?.as_f64(),
            cal_e: ce,
            h: s.u.gradient_stacked()?.sup_norm_refined()?.as_f64(),
            constraint_max: constraint_max(&self.manifold, &s.u).as_f64(),
            tangent_max: tangent_max(&self.manifold, s).as_f64(),
            ortho_residual: ortho,
            gn: gn_check(s)?,
            bgw_ratio: bgw,
            gronwall_envelope: env,
            gronwall_violated: violated,
            displacement_l2: s.u.sub(&self.u0).sobolev_norm(0)?.as_f64(),
        })
    }
}
