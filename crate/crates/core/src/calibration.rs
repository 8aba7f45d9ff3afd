//! Frozen empirical constants for the monitored inequalities.
//!
//! The shipped values live in `calibration.toml` next to the crate manifest
//! and are regenerated with `cargo run --release -p bwm-core --example calibrate`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{bgw_check, fit_gronwall_constant, gn_check, DiagnosticsRecord, GronwallForm};
use crate::dynamics::SimulationState;
use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;
use crate::grid::Grid;
use crate::initial::random_bandlimited;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Factor applied to observed maxima when freezing constants.
pub const CALIBRATION_MARGIN: f64 = 1.1;

/// Calibration file format understood by this build.
pub const CALIBRATION_VERSION: u32 = 1;

const FROZEN: &str = include_str!("../calibration.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: u32,
    pub gronwall: GronwallConstants,
    pub growth: GrowthConstants,
    pub bgw: BgwConstant,
    /// Upper bounds for each interpolation ratio, keyed by ratio name.
    pub gn: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallConstants {
    pub c_n1: f64,
    pub c_n2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub k_grad: f64,
    pub k_disp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BgwConstant {
    pub c_tilde: f64,
}

impl Calibration {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Calibration = toml::from_str(text).map_err(|e| Error::Format(format!("calibration: {e}")))?;
        if c.version != CALIBRATION_VERSION {
            return Err(Error::Format(format!(
                "calibration version {} is not supported (expected {CALIBRATION_VERSION})",
                c.version
            )));
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("calibration serializes")
    }

    /// The constants shipped with this build.
    pub fn frozen() -> Self {
        Self::from_toml(FROZEN).expect("bundled calibration file is valid")
    }

    pub fn gronwall_c(&self, dim: usize) -> f64 {
        if dim == 1 {
            self.gronwall.c_n1
        } else {
            self.gronwall.c_n2
        }
    }

    pub fn gn_bound(&self, name: &str) -> Option<f64> {
        self.gn.get(name).copied()
    }
}

/// Member `index` of a random band-limited ensemble on `Sphere(3)`, `M = 32`.
///
/// Band limit, amplitude and velocity scale are drawn from the same stream, so
/// distinct `seed`s give disjoint ensembles.
pub fn ensemble_state(dim: usize, index: u64, seed: u64) -> Result<SimulationState<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
    let k_max = rng.gen_range(1..=6);
    let amplitude = rng.gen_range(0.05..2.0);
    let velocity = rng.gen_range(0.0..2.0);
    let m = ManifoldSpec::sphere(3)?;
    let grid = Grid::periodic(dim, 32)?;
    random_bandlimited(&m, &grid, k_max, amplitude, velocity, rng.gen())
}

/// Running maxima of every calibrated quantity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Maxima {
    pub gn: BTreeMap<String, f64>,
    pub bgw: f64,
    pub c_n1: f64,
    pub c_n2: f64,
    pub k_grad: f64,
    pub k_disp: f64,
}

impl Maxima {
    fn bump(slot: &mut f64, v: f64) {
        if v > *slot {
            *slot = v;
        }
    }

    fn observe_gn<'a>(&mut self, values: impl IntoIterator<Item = (&'a str, f64)>) {
        for (name, v) in values {
            Self::bump(self.gn.entry(name.to_string()).or_insert(0.0), v);
        }
    }

    /// Componentwise maximum with another set of maxima.
    pub fn merge(&mut self, other: &Maxima) {
        self.observe_gn(other.gn.iter().map(|(k, v)| (k.as_str(), *v)));
        Self::bump(&mut self.bgw, other.bgw);
        Self::bump(&mut self.c_n1, other.c_n1);
        Self::bump(&mut self.c_n2, other.c_n2);
        Self::bump(&mut self.k_grad, other.k_grad);
        Self::bump(&mut self.k_disp, other.k_disp);
    }

    /// Interpolation and BGW ratios of a single state.
    pub fn observe_state(&mut self, s: &SimulationState<f64>) -> Result<()> {
        self.observe_gn(gn_check(s)?.values.iter().map(|&(k, v)| (k, v)));
        if s.grid().dim() == 2 {
            match bgw_check(s) {
                Ok(r) => Self::bump(&mut self.bgw, r),
                Err(Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Ratios, Gronwall constant and growth constants along a recorded run.
    pub fn observe_run(&mut self, dim: usize, records: &[DiagnosticsRecord]) {
        let Some(first) = records.first() else {
            return;
        };
        for r in records {
            self.observe_gn(r.gn.values.iter().map(|&(k, v)| (k, v)));
            if let Some(b) = r.bgw_ratio {
                Self::bump(&mut self.bgw, b);
            }
        }
        let form = GronwallForm::for_dim(dim);
        let series: Vec<(f64, f64)> = records.iter().map(|r| (r.time, r.cal_e)).collect();
        let c = fit_gronwall_constant(&series, form);
        Self::bump(if dim == 1 { &mut self.c_n1 } else { &mut self.c_n2 }, c);

        let (e0, g0) = (first.energy, first.grad_l2_sq.sqrt());
        if e0 > 0.0 {
            for r in records {
                let t = r.time - first.time;
                let grad_den = (1.0 + t).sqrt() * (e0.sqrt() + g0);
                Self::bump(&mut self.k_grad, r.grad_l2_sq.sqrt() / grad_den);
                if t > 0.0 {
                    Self::bump(&mut self.k_disp, r.displacement_l2 / (t * e0.sqrt()));
                }
            }
        }
    }

    /// Constants `margin × maxima`.
    pub fn to_calibration(&self, margin: f64) -> Calibration {
        Calibration {
            version: CALIBRATION_VERSION,
            gronwall: GronwallConstants {
                c_n1: margin * self.c_n1,
                c_n2: margin * self.c_n2,
            },
            growth: GrowthConstants {
                k_grad: margin * self.k_grad,
                k_disp: margin * self.k_disp,
            },
            bgw: BgwConstant {
                c_tilde: margin * self.bgw,
            },
            gn: self.gn.iter().map(|(k, v)| (k.clone(), margin * v)).collect(),
        }
    }

    /// Every observed ratio or growth constant above its frozen bound, with the
    /// observed value and the bound.
    pub fn exceedances(&self, cal: &Calibration) -> Vec<(String, f64, f64)> {
        let mut out = Vec::new();
        for (name, &v) in &self.gn {
            let bound = cal.gn_bound(name).unwrap_or(0.0);
            if v > bound {
                out.push((format!("gn_{name}"), v, bound));
            }
        }
        for (name, v, bound) in [
            ("bgw", self.bgw, cal.bgw.c_tilde),
            ("k_grad", self.k_grad, cal.growth.k_grad),
            ("k_disp", self.k_disp, cal.growth.k_disp),
        ] {
            if v > bound {
                out.push((name.to_string(), v, bound));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{GN_NAMES_1D, GN_NAMES_2D};

    #[test]
    fn bundled_file_covers_every_ratio() {
        let c = Calibration::frozen();
        for name in GN_NAMES_1D.iter().chain(GN_NAMES_2D.iter()) {
            assert!(c.gn_bound(name).is_some_and(|v| v > 0.0), "{name}");
        }
        assert_eq!(Calibration::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = Calibration::frozen().to_toml().replace("version = 1", "version = 99");
        assert!(Calibration::from_toml(&text).is_err());
    }
}
