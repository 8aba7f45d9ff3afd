//! Randomized property suite for the geometry and grid layers, reported as a
//! pass/fail table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{JetOrder, ManifoldSpec};
use crate::grid::{Grid, GridField, Lp};

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantResult {
    pub name: String,
    /// Worst observed violation.
    pub value: f64,
    pub tolerance: f64,
}

impl InvariantResult {
    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

/// Sample counts for the suite.
#[derive(Clone, Copy, Debug)]
pub struct SuiteSize {
    pub projector_points: usize,
    pub dp_points: usize,
    pub fields: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        Self {
            projector_points: 10_000,
            dp_points: 1_000,
            fields: 20,
        }
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// A random point on the manifold.
pub fn random_point(m: &ManifoldSpec<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let l = m.ambient_dim();
    let q: Vec<f64> = match m.kind() {
        crate::geometry::ManifoldKind::Sphere { .. } => unit_vector(rng, l),
        crate::geometry::ManifoldKind::TorusOfRevolution { major, minor } => {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = major + minor * b.cos();
            vec![rho * a.cos(), rho * a.sin(), minor * b.sin()]
        }
    };
    m.retract(&q).expect("sampled point lies on the manifold")
}

fn random_vector(rng: &mut ChaCha8Rng, l: usize, scale: f64) -> Vec<f64> {
    (0..l).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

fn manifolds() -> Vec<(&'static str, ManifoldSpec<f64>)> {
    vec![
        ("sphere3", ManifoldSpec::sphere(3).unwrap()),
        ("torus", ManifoldSpec::torus(2.0, 0.5).unwrap()),
    ]
}

fn projector_checks(size: SuiteSize, rng: &mut ChaCha8Rng, out: &mut Vec<InvariantResult>) -> Result<()> {
    for (label, m) in manifolds() {
        let l = m.ambient_dim();
        let (mut sym, mut idem, mut trace, mut annih, mut retr): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..size.projector_points {
            let p = random_point(&m, rng);
            let jet = m.tangent_projector(&p)?;
            let mut tr = 0.0;
            for i in 0..l {
                tr += jet.entry(i, i);
                for j in 0..l {
                    sym = sym.max((jet.entry(i, j) - jet.entry(j, i)).abs());
                    let sq: f64 = (0..l).map(|k| jet.entry(i, k) * jet.entry(k, j)).sum();
                    idem = idem.max((sq - jet.entry(i, j)).abs());
                }
            }
            trace = trace.max((tr - m.intrinsic_dim() as f64).abs());

            let v = jet.apply(&random_vector(rng, l, 1.0));
            let pv = jet.apply(&v);
            annih = annih.max(v.iter().zip(&pv).fold(0.0, |a, (x, y)| a.max((x - y).abs())));

            let offset = random_vector(rng, l, 0.3 * m.tube_radius() / (l as f64).sqrt());
            let q: Vec<f64> = p.iter().zip(&offset).map(|(a, b)| a + b).collect();
            let r1 = m.retract(&q)?;
            let r2 = m.retract(&r1)?;
            retr = retr.max(r1.iter().zip(&r2).fold(0.0, |a, (x, y)| a.max((x - y).abs())));
        }
        out.push(InvariantResult {
            name: format!("projector_symmetric[{label}]"),
            value: sym,
            tolerance: 1e-12,
        });
        out.push(InvariantResult {
            name: format!("projector_idempotent[{label}]"),
            value: idem,
            tolerance: 1e-10,
        });
        out.push(InvariantResult {
            name: format!("projector_trace[{label}]"),
            value: trace,
            tolerance: 1e-10,
        });
        out.push(InvariantResult {
            name: format!("tangent_annihilation[{label}]"),
            value: annih,
            tolerance: 1e-10,
        });
        out.push(InvariantResult {
            name: format!("retract_idempotent[{label}]"),
            value: retr,
            tolerance: 1e-12,
        });
    }
    Ok(())
}

/// Closed-form sphere `dP` against central differences of the projector field.
fn dp_check(size: SuiteSize, rng: &mut ChaCha8Rng, out: &mut Vec<InvariantResult>) -> Result<()> {
    let m = ManifoldSpec::sphere(3)?;
    let l = 3;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..size.dp_points {
        let p = random_point(&m, rng);
        let jet = m.projector_jet(&p, JetOrder::First)?;
        let w = jet.apply(&random_vector(rng, l, 1.0));
        let closed = jet.dp_along(&w);
        for j in 0..l {
            let e: Vec<f64> = (0..l).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            let shift = |s: f64| -> Vec<f64> {
                let q: Vec<f64> = p.iter().zip(&w).map(|(a, b)| a + s * b).collect();
                let mut col = vec![0.0; l];
                m.apply_projector(&q, &e, &mut col);
                col
            };
            let (plus, minus) = (shift(h), shift(-h));
            for i in 0..l {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                worst = worst.max((fd - closed[i * l + j]).abs());
            }
        }
    }
    out.push(InvariantResult {
        name: "sphere_dp_matches_fd".into(),
        value: worst,
        tolerance: 1e-7,
    });
    Ok(())
}

/// A random real trigonometric polynomial with modes `|k_i| ≤ kmax` together
/// with its exact gradient.
fn random_trig(grid: &Grid<f64>, kmax: i64, rng: &mut ChaCha8Rng) -> (GridField<f64>, Vec<GridField<f64>>) {
    let dim = grid.dim();
    let scale = std::f64::consts::TAU / grid.length();
    let mut terms = Vec::new();
    let ky_range = if dim == 2 { -kmax..=kmax } else { 0..=0 };
    for kx in -kmax..=kmax {
        for ky in ky_range.clone() {
            terms.push(([kx, ky], rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    let eval = |x: [f64; 2], deriv: Option<usize>| -> f64 {
        terms
            .iter()
            .map(|&(k, a, b)| {
                let kk = [k[0] as f64 * scale, k[1] as f64 * scale];
                let ph = kk[0] * x[0] + kk[1] * x[1];
                match deriv {
                    None => a * ph.cos() + b * ph.sin(),
                    Some(ax) => kk[ax] * (-a * ph.sin() + b * ph.cos()),
                }
            })
            .sum()
    };
    let f = GridField::from_fn(grid, 1, |x| vec![eval(x, None)]);
    let grad = (0..dim)
        .map(|ax| GridField::from_fn(grid, 1, |x| vec![eval(x, Some(ax))]))
        .collect();
    (f, grad)
}

fn max_abs(f: &GridField<f64>) -> f64 {
    f.values().iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn grid_checks(size: SuiteSize, rng: &mut ChaCha8Rng, out: &mut Vec<InvariantResult>) -> Result<()> {
    let (mut exact, mut parseval, mut commute, mut compose, mut monotone, mut linear): (f64, f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, f64::NEG_INFINITY, 0.0);
    for dim in [1, 2] {
        let m = if dim == 1 { 32 } else { 16 };
        let grid = Grid::periodic(dim, m)?;
        for _ in 0..size.fields {
            let (f, grad) = random_trig(&grid, (m / 2 - 1) as i64, rng);
            let scale = max_abs(&f).max(1.0);
            for (num, ex) in f.gradient()?.iter().zip(&grad) {
                exact = exact.max(max_abs(&num.sub(ex)) / (scale * (m / 2) as f64));
            }

            let l2 = f.lebesgue_norm(Lp::Two)?;
            parseval = parseval.max((f.sobolev_norm(0)? - l2).abs() / l2.max(1.0));

            let lg: Vec<_> = f.gradient()?.iter().map(|g| g.laplacian()).collect::<Result<_>>()?;
            let gl = f.laplacian()?.gradient()?;
            let kscale = ((m / 2) as f64).powi(3) * scale;
            for (a, b) in lg.iter().zip(&gl) {
                commute = commute.max(max_abs(&a.sub(b)) / kscale);
            }

            let bl = f.bilaplacian()?;
            let ll = f.laplacian()?.laplacian()?;
            compose = compose.max(max_abs(&bl.sub(&ll)) / (((m / 2) as f64).powi(4) * scale));

            for s in 0..4 {
                monotone = monotone.max(f.sobolev_norm(s)? - f.sobolev_norm(s + 1)?);
            }

            let (g, _) = random_trig(&grid, 3, rng);
            let a = rng.gen_range(-2.0..2.0);
            let mut comb = f.clone();
            comb.axpy(a, &g);
            let lhs = comb.laplacian()?;
            let mut rhs = f.laplacian()?;
            rhs.axpy(a, &g.laplacian()?);
            linear = linear.max(max_abs(&lhs.sub(&rhs)) / (((m / 2) as f64).powi(2) * scale));
        }
    }
    out.push(InvariantResult {
        name: "spectral_exactness".into(),
        value: exact,
        tolerance: 1e-12,
    });
    out.push(InvariantResult {
        name: "parseval".into(),
        value: parseval,
        tolerance: 1e-12,
    });
    out.push(InvariantResult {
        name: "laplacian_gradient_commute".into(),
        value: commute,
        tolerance: 1e-10,
    });
    out.push(InvariantResult {
        name: "bilaplacian_composition".into(),
        value: compose,
        tolerance: 1e-10,
    });
    out.push(InvariantResult {
        name: "sobolev_monotone".into(),
        value: monotone.max(0.0),
        tolerance: 0.0,
    });
    out.push(InvariantResult {
        name: "operator_linearity".into(),
        value: linear,
        tolerance: 1e-12,
    });
    Ok(())
}

/// Runs every property with the given sample sizes and seed.
pub fn run_suite(size: SuiteSize, seed: u64) -> Result<Vec<InvariantResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    projector_checks(size, &mut rng, &mut out)?;
    dp_check(size, &mut rng, &mut out)?;
    grid_checks(size, &mut rng, &mut out)?;
    Ok(out)
}
