use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bwm_core::invariants::{run_suite, SuiteSize};
use bwm_core::study::{self, ConvergenceReport, PerturbationReport, ScalingReport};
use bwm_core::{parse_config, Calibration, Error, RunConfig};
use clap::{Args, Parser, Subcommand};

/// Biharmonic wave map simulations and studies.
#[derive(Parser)]
#[command(name = "bwm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write its diagnostics CSV.
    Run(Common),
    /// Temporal and spatial error tables against the exact traveling wave.
    Convergence(Common),
    /// Compare a run with its parabolically rescaled counterpart.
    Scaling(Common),
    /// Track the difference energy of perturbed runs.
    Perturb(Common),
    /// Run the geometry and grid property suite.
    Invariants {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

const EXIT_USAGE: u8 = 1;
const EXIT_BLOWUP: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

enum Failure {
    Usage(String),
    Blowup(String),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if matches!(e, Error::DiscreteBlowup { .. }) {
            Failure::Blowup(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(c: &Common) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(&c.config)
        .map_err(|e| Failure::Usage(format!("{}: {e}", c.config.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", c.config.display())))?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&c.out)?;
    Ok(cfg)
}

fn write_table(out: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), Failure> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(out.join(name), text)?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format!("{v:.6e}"))
}

fn cmd_run(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let outcome = study::run(&cfg, Some(&c.out), true, &Calibration::frozen())?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if !c.quiet {
        if let Some(last) = outcome.records.last() {
            println!(
                "t = {:.6}  energy = {:.12e}  drift = {:.3e}  cal_E = {:.6e}  rows = {}",
                last.time,
                last.energy,
                last.energy_rel_drift,
                last.cal_e,
                outcome.records.len()
            );
        }
        if let Some(p) = &outcome.csv_path {
            println!("diagnostics: {}", p.display());
        }
    }
    match outcome.blowup {
        Some(e) => Err(Failure::Blowup(e.to_string())),
        None => Ok(()),
    }
}

fn print_convergence(r: &ConvergenceReport) -> String {
    let mut s = String::from("dt          sup error\n");
    for (dt, e) in &r.dt_rows {
        let _ = writeln!(s, "{dt:<11.3e} {e:.6e}");
    }
    let _ = writeln!(s, "temporal order: {}", opt(r.temporal_order));
    s.push_str("M     sup error\n");
    for (m, e) in &r.m_rows {
        let _ = writeln!(s, "{m:<5} {e:.6e}");
    }
    s
}

fn cmd_convergence(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let r = study::convergence(&cfg)?;
    let mut rows: Vec<String> = r.dt_rows.iter().map(|(dt, e)| format!("dt,{dt:.16e},{e:.16e}")).collect();
    rows.extend(r.m_rows.iter().map(|(m, e)| format!("M,{m},{e:.16e}")));
    write_table(&c.out, "convergence.csv", "kind,value,sup_error", &rows)?;
    if !c.quiet {
        print!("{}", print_convergence(&r));
    }
    match r.temporal_order {
        Some(p) if p < 1.9 => Err(Failure::Violation(format!("temporal order {p:.3} is below 1.9"))),
        _ => Ok(()),
    }
}

fn print_scaling(r: &ScalingReport) -> String {
    format!(
        "lambda = {}\nfixed-box energy ratio = {:.12e} (expected {:.12e})\nwhole-space energy ratio = {:.12e} (expected {:.12e})\ncorrespondence error = {:.6e} (tolerance {:.3e}, single-run error {:.3e})\n",
        r.lambda,
        r.check.measured_fixed_box,
        r.check.predicted_fixed_box,
        r.check.measured_whole_space,
        r.check.predicted_whole_space,
        r.correspondence_error,
        r.tolerance,
        r.single_run_error
    )
}

fn cmd_scaling(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let r = study::scaling(&cfg, cfg.lambda)?;
    write_table(
        &c.out,
        "scaling.csv",
        "lambda,fixed_box_ratio,whole_space_ratio,correspondence_error,tolerance,passed",
        &[format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.lambda,
            r.check.measured_fixed_box,
            r.check.measured_whole_space,
            r.correspondence_error,
            r.tolerance,
            u8::from(r.passed)
        )],
    )?;
    if !c.quiet {
        print!("{}", print_scaling(&r));
    }
    if r.passed {
        Ok(())
    } else {
        Err(Failure::Violation("scaling correspondence exceeds its tolerance".into()))
    }
}

fn print_perturbation(r: &PerturbationReport) -> String {
    let mut s = String::from("delta       E_w(0)        G\n");
    for row in &r.rows {
        match &row.error {
            Some(e) => {
                let _ = writeln!(s, "{:<11.3e} failed: {e}", row.delta);
            }
            None => {
                let _ = writeln!(s, "{:<11.3e} {:<13} {}", row.delta, opt(row.initial_difference), opt(row.growth));
            }
        }
    }
    let _ = writeln!(s, "spread = {}  linearity = {}", opt(r.spread), opt(r.linearity));
    s
}

fn cmd_perturb(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let r = study::perturbation(&cfg, &cfg.deltas)?;
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|row| {
            format!(
                "{:.16e},{},{},{}",
                row.delta,
                row.initial_difference.map_or("nan".into(), |v| format!("{v:.16e}")),
                row.growth.map_or("nan".into(), |v| format!("{v:.16e}")),
                row.error.as_deref().unwrap_or("")
            )
        })
        .collect();
    write_table(&c.out, "perturbation.csv", "delta,initial_difference,growth,error", &rows)?;
    if !c.quiet {
        print!("{}", print_perturbation(&r));
    }
    let usable = r.rows.iter().filter(|row| row.growth.is_some()).count();
    if usable < 2 || r.passed() {
        Ok(())
    } else {
        Err(Failure::Violation("perturbation growth is not uniform in delta".into()))
    }
}

fn cmd_invariants(seed: u64, quiet: bool) -> Result<(), Failure> {
    let results = run_suite(SuiteSize::default(), seed)?;
    if !quiet {
        for r in &results {
            println!(
                "{:<4} {:<36} {:.3e} <= {:.0e}",
                if r.passed() { "PASS" } else { "FAIL" },
                r.name,
                r.value,
                r.tolerance
            );
        }
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(format!("failed: {}", failed.join(", "))))
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("BWM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Convergence(c) => cmd_convergence(c),
        Command::Scaling(c) => cmd_scaling(c),
        Command::Perturb(c) => cmd_perturb(c),
        Command::Invariants { seed, quiet } => cmd_invariants(*seed, *quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Blowup(m)) => {
            eprintln!("discrete blow-up: {m}");
            ExitCode::from(EXIT_BLOWUP)
        }
        Err(Failure::Violation(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}
