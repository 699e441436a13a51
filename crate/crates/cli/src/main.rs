//! Command-line entry points:
//!
//! ```text
//! stiffpress simulate <config>                  run the configured solver
//! stiffpress limit <config>                     run the hyperbolic limit solver
//! stiffpress sweep <config> --m=<list> --K=<list>   exponent/capacity sweep
//! stiffpress diagnose <snapshot.csv> <config>   diagnostics for one snapshot
//! stiffpress selftest                           built-in verification
//! ```
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.
//! `STIFFPRESS_THREADS` caps sweep parallelism (default: machine parallelism).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use stiffpress::diagnostics::{default_mu_eps, mu_profile};
use stiffpress::output::{
    diagnostics_row, fmt_real, read_snapshot_density, write_snapshot_file, DIAGNOSTICS_HEADER,
};
use stiffpress::*;

const USAGE: &str = "usage:
  stiffpress simulate <config>
  stiffpress limit <config>
  stiffpress sweep <config> --m=<list> --K=<list>
  stiffpress diagnose <snapshot.csv> <config>
  stiffpress selftest

exit codes: 0 success, 1 configuration error, 2 numerical failure";

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            eprintln!("{USAGE}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() { EXIT_CONFIG } else { EXIT_NUMERICAL })
        }
        Err(CliError::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(CliError::SelfTestFailed) => ExitCode::from(EXIT_NUMERICAL),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

enum CliError {
    Usage(String),
    Solver(Error),
    Io(String),
    SelfTestFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn dispatch(args: &[String]) -> CliResult<()> {
    match args.first().map(String::as_str) {
        Some("simulate") => {
            let cfg = load_config(args, 1)?;
            run_and_write(&cfg, cfg.solver)
        }
        Some("limit") => {
            let cfg = load_config(args, 1)?;
            run_and_write(&cfg, SolverKind::Hyperbolic)
        }
        Some("sweep") => sweep_command(args),
        Some("diagnose") => diagnose_command(args),
        Some("selftest") => selftest_command(),
        Some(other) => Err(CliError::Usage(format!("unknown command `{other}`"))),
        None => Err(CliError::Usage("missing command".to_string())),
    }
}

fn load_config(args: &[String], index: usize) -> CliResult<RunConfig> {
    let path = args
        .get(index)
        .ok_or_else(|| CliError::Usage("missing <config> argument".to_string()))?;
    Ok(RunConfig::from_file(Path::new(path))?)
}

fn run_and_write(cfg: &RunConfig, kind: SolverKind) -> CliResult<()> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let diag_path = cfg.output_dir.join("diagnostics.csv");
    let mut diag = std::io::BufWriter::new(std::fs::File::create(&diag_path)?);
    writeln!(diag, "{DIAGNOSTICS_HEADER}")?;

    let mut stream_error: Option<std::io::Error> = None;
    let result = drive(cfg, kind, |rec| {
        if stream_error.is_none() {
            if let Err(e) = writeln!(diag, "{}", diagnostics_row(rec)) {
                stream_error = Some(e);
            }
        }
    })?;
    if let Some(e) = stream_error {
        return Err(e.into());
    }
    diag.flush()?;

    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    for snap in &result.snapshots {
        let path = write_snapshot_file(&cfg.output_dir, &snap.state, &grid)?;
        println!("wrote {}", path.display());
    }
    println!("wrote {}", diag_path.display());
    println!(
        "steps={} mass_drift_rel={} max_step_clip_mass={} u_range=[{},{}]",
        result.n_steps,
        fmt_real(result.mass_drift_rel()),
        fmt_real(result.totals.max_step_clip_mass),
        fmt_real(result.totals.u_min),
        fmt_real(result.totals.u_max),
    );
    Ok(())
}

fn parse_list(arg: &str, key: &str) -> CliResult<Vec<f64>> {
    let values: std::result::Result<Vec<f64>, _> = arg.split(',').map(|s| s.trim().parse::<f64>()).collect();
    values.map_err(|_| CliError::Usage(format!("cannot parse {key} list `{arg}`")))
}

fn sweep_command(args: &[String]) -> CliResult<()> {
    let cfg = load_config(args, 1)?;
    let mut m_list = None;
    let mut k_list = None;
    for arg in &args[2..] {
        if let Some(rest) = arg.strip_prefix("--m=") {
            m_list = Some(parse_list(rest, "--m")?);
        } else if let Some(rest) = arg.strip_prefix("--K=") {
            k_list = Some(parse_list(rest, "--K")?);
        } else {
            return Err(CliError::Usage(format!("unknown sweep argument `{arg}`")));
        }
    }
    let m_list = m_list.ok_or_else(|| CliError::Usage("missing --m=<list>".to_string()))?;
    let k_list = k_list.ok_or_else(|| CliError::Usage("missing --K=<list>".to_string()))?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    let opts = SweepOptions {
        threads: None, // resolved from STIFFPRESS_THREADS / machine parallelism
        output_root: Some(cfg.output_dir.clone()),
    };
    let rows = run_sweep_with_options(&cfg, &m_list, &k_list, &opts)?;
    let csv = sweep_csv(&rows);
    let path = cfg.output_dir.join("sweep.csv");
    std::fs::write(&path, &csv)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    let failures: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| !matches!(r.status, RowStatus::Ok))
        .collect();
    if !failures.is_empty() {
        for row in &failures {
            if let RowStatus::Failed(msg) = &row.status {
                eprintln!("row m={} K={} t={} failed: {msg}", row.m, row.k, row.t);
            }
        }
        return Err(CliError::Solver(Error::InvariantViolation(format!(
            "{} sweep row(s) failed; see sweep.csv",
            failures.len()
        ))));
    }
    Ok(())
}

fn diagnose_command(args: &[String]) -> CliResult<()> {
    let snapshot = args
        .get(1)
        .ok_or_else(|| CliError::Usage("missing <snapshot.csv> argument".to_string()))?;
    let cfg = load_config(args, 2)?;
    cfg.validate()?;
    let grid = cfg.grid()?;
    let density = read_snapshot_density(&PathBuf::from(snapshot))?;
    if density.len() != grid.n_cells() {
        return Err(CliError::Solver(Error::Usage(format!(
            "snapshot has {} cells but the config grid has {}",
            density.len(),
            grid.n_cells()
        ))));
    }
    // rebuild the consistent state: c and P are derived from u
    let state = SimState::from_density(0.0, density, &cfg.params, &grid)?;
    let rec = record_diagnostics(&state, &cfg.params, &grid, 1.0);
    println!("mass={}", fmt_real(rec.mass));
    println!("u_min={}", fmt_real(rec.u_min));
    println!("u_max={}", fmt_real(rec.u_max));
    println!("comp_residual_l1={}", fmt_real(rec.comp_residual_l1));
    println!("excess_sat_l2_sq_rate={}", fmt_real(rec.excess_sat_l2_sq_increment));
    println!("grad_P_energy_rate={}", fmt_real(rec.grad_p_energy_increment));
    println!("defect_rate={}", fmt_real(rec.defect_increment));
    println!("sat_product_P={}", fmt_real(rec.sat_product_p));
    println!("sat_product_gradP={}", fmt_real(rec.sat_product_grad_p));

    let kg = KineticGrid::with_defaults(cfg.params.capacity);
    println!(
        "kinetic_metric={}",
        fmt_real(kinetic_two_valued_metric(&state.density, &grid, &kg))
    );

    let prof = mu_profile(&state, &cfg.params, &grid, default_mu_eps(&state));
    let support = prof.pressure_support.iter().filter(|&&b| b).count();
    let saturated = prof.saturated_interior.iter().filter(|&&b| b).count();
    println!("mu_degenerate={}", prof.degenerate);
    println!("mu_support_cells={support}");
    println!("mu_saturated_cells={saturated}");
    if support > 0 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, &on) in prof.pressure_support.iter().enumerate() {
            if on {
                lo = lo.min(prof.mu[i]);
                hi = hi.max(prof.mu[i]);
            }
        }
        println!("mu_min_on_support={}", fmt_real(lo));
        println!("mu_max_on_support={}", fmt_real(hi));
    }
    if cfg.params.capacity < 1.0 {
        let bound = pressure_sup_bound_check(&cfg.params)?;
        println!("pressure_sup_bound={}", fmt_real(bound));
        println!("pressure_sup_ok={}", state.pressure.max() <= bound);
    }
    Ok(())
}

fn selftest_command() -> CliResult<()> {
    let report = selftest();
    for check in &report.checks {
        let tag = if check.passed { "ok  " } else { "FAIL" };
        println!("{tag} {} ({})", check.name, check.detail);
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!(
        "selftest: {} checks, {} failed",
        report.checks.len(),
        failed
    );
    if failed > 0 {
        return Err(CliError::SelfTestFailed);
    }
    Ok(())
}
