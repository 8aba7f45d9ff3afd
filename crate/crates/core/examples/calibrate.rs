//! Regenerates `calibration.toml` from the calibration suite.
//!
//! cargo run --release -p bwm-core --example calibrate [-- OUTPUT]

use std::path::PathBuf;

use bwm_core::calibration::{ensemble_state, Calibration, Maxima, CALIBRATION_MARGIN};
use bwm_core::{parse_config, study};
use rayon::prelude::*;

const ENSEMBLE_SEED: u64 = 2;
const ENSEMBLE_SIZE: u64 = 1000;

fn random_run(dim: usize, seed: u64, amplitude: f64) -> String {
    format!(
        "dim = {dim}\ngrid_size = 64\nmanifold = sphere:3\ndt = 1e-3\nt_end = 10\noutput_every = 0.1\n\
         initial = random_bandlimited\nrandom_kmax = 4\nrandom_amplitude = {amplitude}\nrandom_velocity = 1\nseed = {seed}\n"
    )
}

fn wave_run(dim: usize, k: i64, omega: f64) -> String {
    let k2 = if dim == 2 { format!("wave_k2 = {k}\n") } else { String::new() };
    format!(
        "dim = {dim}\ngrid_size = 32\nmanifold = sphere:2\ndt = 1e-3\nt_end = 10\noutput_every = 0.1\n\
         initial = traveling_wave\nwave_k = {k}\n{k2}wave_omega = {omega}\n"
    )
}

fn suite() -> Vec<String> {
    let mut runs = Vec::new();
    for (dim, seeds) in [(1, 20), (2, 3)] {
        for (a, amplitude) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            for j in 0..seeds {
                runs.push(random_run(dim, 100 + 100 * a as u64 + j, amplitude));
            }
        }
        for (k, omega) in [(1, 1.0), (1, 2.0), (2, 2.0), (2, 3.0)] {
            runs.push(wave_run(dim, k, omega));
        }
    }
    for amplitude in [0.3, 0.4] {
        runs.push(format!(
            "dim = 2\ngrid_size = 64\nmanifold = sphere:3\ndt = 1e-3\nt_end = 1\noutput_every = 0.05\n\
             initial = bump\nbump_amplitude = {amplitude}\nbump_velocity = 0.5\n"
        ));
    }
    runs
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("calibration.toml"));
    let placeholder = Calibration::frozen();

    let per_run: Vec<Maxima> = suite()
        .par_iter()
        .map(|text| {
            let cfg = parse_config(text).expect("calibration config parses");
            let outcome = study::run(&cfg, None, false, &placeholder).expect("calibration run");
            assert!(outcome.blowup.is_none(), "calibration run blew up:\n{text}");
            let mut m = Maxima::default();
            m.observe_run(cfg.dim, &outcome.records);
            m
        })
        .collect();

    let per_field: Vec<Maxima> = [1, 2]
        .par_iter()
        .flat_map(|&dim| (0..ENSEMBLE_SIZE).into_par_iter().map(move |i| (dim, i)))
        .map(|(dim, i)| {
            let mut m = Maxima::default();
            m.observe_state(&ensemble_state(dim, i, ENSEMBLE_SEED).expect("ensemble state"))
                .expect("ensemble ratios");
            m
        })
        .collect();

    let mut total = Maxima::default();
    for m in per_run.iter().chain(&per_field) {
        total.merge(m);
    }
    let cal = total.to_calibration(CALIBRATION_MARGIN);
    std::fs::write(&out, cal.to_toml()).expect("write calibration file");
    println!("{}", cal.to_toml());
    println!("written to {}", out.display());
}
