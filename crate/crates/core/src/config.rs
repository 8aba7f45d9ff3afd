//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored; unknown and repeated keys are
//! parse errors. See the README for the full key list.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;
use crate::integrator::{Scheme, SchemeConfig};

/// Initial-data family.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `cos(ωt + κ·x) e_a + sin(ωt + κ·x) e_b` with `κ = 2π/ℓ (k, k₂)`.
    TravelingWave {
        k: i64,
        k2: i64,
        omega: f64,
        axes: (usize, usize),
    },
    /// `Π(p + A φ_σ e)` with velocity `P_u(B φ_σ e′)`.
    Bump {
        amplitude: f64,
        width: f64,
        base: Option<Vec<f64>>,
        direction: Option<Vec<f64>>,
        velocity: f64,
    },
    /// Random tangent Fourier data with modes `0 < |k|_∞ ≤ k_max`, pushed onto the manifold.
    RandomBandlimited {
        k_max: usize,
        amplitude: f64,
        velocity: f64,
    },
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::TravelingWave { .. } => "traveling_wave",
            InitialData::Bump { .. } => "bump",
            InitialData::RandomBandlimited { .. } => "random_bandlimited",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub grid_size: usize,
    pub length: f64,
    pub manifold: ManifoldSpec<f64>,
    pub scheme: SchemeConfig<f64>,
    pub t_end: f64,
    pub output_every: f64,
    pub initial: InitialData,
    pub seed: u64,
    pub csv: PathBuf,
    pub snapshot: Option<PathBuf>,
    /// Step sizes for the temporal convergence study.
    pub refine_dt: Vec<f64>,
    /// Grid sizes for the spatial convergence study.
    pub refine_m: Vec<usize>,
    /// Integer factor for the scaling study.
    pub lambda: usize,
    /// Perturbation sizes for the uniqueness study.
    pub deltas: Vec<f64>,
}

const KEYS: &[&str] = &[
    "dim",
    "grid_size",
    "length",
    "manifold",
    "tube_radius",
    "scheme",
    "dt",
    "reproject_every",
    "dealias_fraction",
    "t_end",
    "output_every",
    "initial",
    "wave_k",
    "wave_k2",
    "wave_omega",
    "wave_axes",
    "bump_amplitude",
    "bump_width",
    "bump_base",
    "bump_direction",
    "bump_velocity",
    "random_kmax",
    "random_amplitude",
    "random_velocity",
    "seed",
    "csv",
    "snapshot",
    "refine_dt",
    "refine_m",
    "lambda",
    "deltas",
];

struct Entries(Vec<(String, String, usize)>);

impl Entries {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.0
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
    }

    fn get<V>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<V, String>) -> Result<Option<V>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => parse(v).map(Some).map_err(|message| Error::Parse {
                line,
                message: format!("`{key}`: {message}"),
            }),
        }
    }

    fn required<V>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<V, String>) -> Result<V> {
        self.get(key, parse)?
            .ok_or_else(|| Error::validation(key, "required key is missing"))
    }
}

/// Parses a real number; `pi`, `2pi` and `2*pi` are accepted as multiples of π
/// and `a/b` as a quotient.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    if let Some((num, den)) = t.split_once('/') {
        return Ok(parse_real(num)? / parse_real(den)?);
    }
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = if head.is_empty() {
            1.0
        } else {
            head.parse::<f64>().map_err(|e| format!("{e} in `{s}`"))?
        };
        return Ok(factor * std::f64::consts::PI);
    }
    t.parse::<f64>().map_err(|e| format!("{e} in `{s}`"))
}

fn parse_uint(s: &str) -> std::result::Result<usize, String> {
    s.trim().parse::<usize>().map_err(|e| format!("{e} in `{s}`"))
}

fn parse_int(s: &str) -> std::result::Result<i64, String> {
    s.trim().parse::<i64>().map_err(|e| format!("{e} in `{s}`"))
}

fn parse_list<V>(s: &str, item: impl Fn(&str) -> std::result::Result<V, String>) -> std::result::Result<Vec<V>, String> {
    s.split(',').map(|p| item(p.trim())).collect()
}

fn parse_manifold(s: &str) -> std::result::Result<ManifoldSpec<f64>, String> {
    let (kind, args) = s.split_once(':').ok_or("expected `sphere:L` or `torus:R,r`")?;
    match kind.trim() {
        "sphere" => ManifoldSpec::sphere(parse_uint(args)?).map_err(|e| e.to_string()),
        "torus" => {
            let v = parse_list(args, parse_real)?;
            if v.len() != 2 {
                return Err("torus needs two radii `R,r`".into());
            }
            ManifoldSpec::torus(v[0], v[1]).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown manifold `{other}`")),
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Parse {
                line,
                message: format!("unknown key `{k}`"),
            });
        }
        if entries.iter().any(|(e, _, _)| e == k) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{k}`"),
            });
        }
        entries.push((k.to_string(), v.to_string(), line));
    }
    let e = Entries(entries);

    let dim = e.required("dim", parse_uint)?;
    if !(dim == 1 || dim == 2) {
        return Err(Error::validation("dim", format!("must be 1 or 2, got {dim}")));
    }
    let grid_size = e.required("grid_size", parse_uint)?;
    if grid_size < 8 || grid_size % 2 != 0 {
        return Err(Error::validation("grid_size", format!("must be even and >= 8, got {grid_size}")));
    }
    let length = e.get("length", parse_real)?.unwrap_or(std::f64::consts::TAU);
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::validation("length", format!("must be positive, got {length}")));
    }
    let mut manifold = e.required("manifold", parse_manifold)?;
    if let Some(r) = e.get("tube_radius", parse_real)? {
        manifold = manifold
            .with_tube_radius(r)
            .map_err(|err| Error::validation("tube_radius", err.to_string()))?;
    }

    let scheme_kind = e.get("scheme", |s| s.parse::<Scheme>())?.unwrap_or(Scheme::StrangSplit);
    let dt = e.required("dt", parse_real)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation("dt", format!("must be positive, got {dt}")));
    }
    let mut scheme = SchemeConfig::new(scheme_kind, dt);
    if let Some(k) = e.get("reproject_every", parse_uint)? {
        scheme.reproject_every = k;
    }
    if let Some(f) = e.get("dealias_fraction", parse_real)? {
        scheme.dealias_fraction = f;
    }
    scheme.validate()?;

    let t_end = e.required("t_end", parse_real)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::validation("t_end", format!("must be nonnegative, got {t_end}")));
    }
    let output_every = e.get("output_every", parse_real)?.unwrap_or(100.0 * dt);
    if !(output_every >= dt && output_every.is_finite()) {
        return Err(Error::validation(
            "output_every",
            format!("must be at least dt = {dt}, got {output_every}"),
        ));
    }

    let kind = e.required("initial", |s| Ok(s.to_string()))?;
    let initial = match kind.as_str() {
        "traveling_wave" => {
            if !manifold.is_sphere() {
                return Err(Error::validation("initial", "traveling_wave needs a sphere target"));
            }
            let axes = e
                .get("wave_axes", |s| parse_list(s, parse_uint))?
                .unwrap_or_else(|| vec![0, 1]);
            let l = manifold.ambient_dim();
            if axes.len() != 2 || axes[0] == axes[1] || axes.iter().any(|&a| a >= l) {
                return Err(Error::validation("wave_axes", format!("need two distinct axes below {l}")));
            }
            InitialData::TravelingWave {
                k: e.get("wave_k", parse_int)?.unwrap_or(1),
                k2: e.get("wave_k2", parse_int)?.unwrap_or(0),
                omega: e.get("wave_omega", parse_real)?.unwrap_or(1.0),
                axes: (axes[0], axes[1]),
            }
        }
        "bump" => {
            let vec_of = |key: &str| -> Result<Option<Vec<f64>>> {
                let v = e.get(key, |s| parse_list(s, parse_real))?;
                if let Some(v) = &v {
                    if v.len() != manifold.ambient_dim() {
                        return Err(Error::validation(key, format!("needs {} components", manifold.ambient_dim())));
                    }
                }
                Ok(v)
            };
            let width = e.get("bump_width", parse_real)?.unwrap_or(length / 8.0);
            if !(width > 0.0) {
                return Err(Error::validation("bump_width", "must be positive"));
            }
            InitialData::Bump {
                amplitude: e.get("bump_amplitude", parse_real)?.unwrap_or(0.3),
                width,
                base: vec_of("bump_base")?,
                direction: vec_of("bump_direction")?,
                velocity: e.get("bump_velocity", parse_real)?.unwrap_or(0.0),
            }
        }
        "random_bandlimited" => {
            let k_max = e.get("random_kmax", parse_uint)?.unwrap_or(4);
            if k_max == 0 || 2 * k_max >= grid_size {
                return Err(Error::validation("random_kmax", format!("must lie in 1..{}", grid_size / 2)));
            }
            let amplitude = e.get("random_amplitude", parse_real)?.unwrap_or(1.0);
            if !(amplitude >= 0.0) {
                return Err(Error::validation("random_amplitude", "must be nonnegative"));
            }
            InitialData::RandomBandlimited {
                k_max,
                amplitude,
                velocity: e.get("random_velocity", parse_real)?.unwrap_or(amplitude),
            }
        }
        other => {
            return Err(Error::validation(
                "initial",
                format!("unknown family `{other}` (traveling_wave, bump, random_bandlimited)"),
            ))
        }
    };

    let refine_dt = e
        .get("refine_dt", |s| parse_list(s, parse_real))?
        .unwrap_or_else(|| vec![4e-3, 2e-3, 1e-3]);
    if refine_dt.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::validation("refine_dt", "step sizes must be positive"));
    }
    let refine_m = e
        .get("refine_m", |s| parse_list(s, parse_uint))?
        .unwrap_or_else(|| vec![8, 16, 32]);
    if refine_m.iter().any(|&m| m < 8 || m % 2 != 0) {
        return Err(Error::validation("refine_m", "grid sizes must be even and >= 8"));
    }
    let lambda = e.get("lambda", parse_uint)?.unwrap_or(2);
    if lambda == 0 {
        return Err(Error::validation("lambda", "must be a positive integer"));
    }
    let deltas = e
        .get("deltas", |s| parse_list(s, parse_real))?
        .unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]);
    if deltas.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::validation("deltas", "perturbation sizes must be nonnegative"));
    }

    Ok(RunConfig {
        dim,
        grid_size,
        length,
        manifold,
        scheme,
        t_end,
        output_every,
        initial,
        seed: e.get("seed", |s| s.trim().parse::<u64>().map_err(|e| e.to_string()))?.unwrap_or(0),
        csv: e
            .get("csv", |s| Ok(PathBuf::from(s)))?
            .unwrap_or_else(|| PathBuf::from("diagnostics.csv")),
        snapshot: e.get("snapshot", |s| Ok(PathBuf::from(s)))?,
        refine_dt,
        refine_m,
        lambda,
        deltas,
    })
}
