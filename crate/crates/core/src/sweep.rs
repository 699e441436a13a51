//! Experiment orchestration: exponent/capacity sweeps, comparison against
//! the hyperbolic limit profile, and the aggregate CSV.
//!
//! Rows may execute concurrently (capped by `STIFFPRESS_THREADS` or an
//! explicit thread count); every row is an independent pure computation and
//! the aggregate is sorted by `(m, K, t)` before emission, so the CSV bytes
//! do not depend on scheduling.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::RunConfig;
use crate::diagnostics::{complementarity_residual, kinetic_two_valued_metric, KineticGrid};
use crate::error::{Error, Result};
use crate::grid::{norm, Grid1D, Norm};
use crate::output::{fmt_real, write_snapshot_file};
use crate::pme::SimState;
use crate::run::{run_hyperbolic, run_pme, RunResult};

/// Summary metrics of one `(m, K)` run at one snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: f64,
    pub k: f64,
    pub t: f64,
    /// `||u_m - u_limit||_1` against the hyperbolic reference; only defined
    /// for `K <= 1`.
    pub l1_dist_to_limit: Option<f64>,
    /// Cumulative `int int |dP/dx|^2` up to `t`.
    pub grad_p_energy: f64,
    pub comp_residual_l1: f64,
    /// `||(u-1)_+||_{L2(Q_t)}`.
    pub excess_sat_total: f64,
    /// Max of the pressure over space and time up to `t`.
    pub max_p: f64,
    pub kinetic_metric: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// The run (or its limit reference) failed; failures are flagged, never
    /// dropped.
    Failed(String),
}

/// Per-time L1 distances between a run's snapshots and the hyperbolic limit
/// snapshots on the same grid and times. Refused for `K > 1`, where the
/// hyperbolic solver is not a valid limit reference.
pub fn compare_to_limit(
    snaps: &[SimState],
    snaps_limit: &[SimState],
    grid: &Grid1D,
    capacity: f64,
) -> Result<Vec<(f64, f64)>> {
    if capacity > 1.0 {
        return Err(Error::Usage(format!(
            "hyperbolic reference is only valid for K <= 1, got K = {capacity}"
        )));
    }
    if snaps.len() != snaps_limit.len() {
        return Err(Error::Usage(format!(
            "snapshot lists differ in length: {} vs {}",
            snaps.len(),
            snaps_limit.len()
        )));
    }
    let mut out = Vec::with_capacity(snaps.len());
    for (a, b) in snaps.iter().zip(snaps_limit) {
        if a.density.len() != grid.n_cells() || b.density.len() != grid.n_cells() {
            return Err(Error::Usage("snapshots do not live on the given grid".to_string()));
        }
        if (a.time - b.time).abs() > 1e-12 * a.time.abs().max(1.0) {
            return Err(Error::Usage(format!(
                "snapshot times differ: {} vs {}",
                a.time, b.time
            )));
        }
        let diff = field_sub(&a.density, &b.density);
        out.push((a.time, norm(&diff, grid, Norm::L1)));
    }
    Ok(out)
}

fn field_sub(a: &crate::grid::Field, b: &crate::grid::Field) -> crate::grid::Field {
    crate::grid::Field::new(a.iter().zip(b.iter()).map(|(x, y)| x - y).collect())
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker cap; falls back to `STIFFPRESS_THREADS`, then to the machine
    /// parallelism.
    pub threads: Option<usize>,
    /// When set, each run writes its snapshot files under
    /// `<root>/m<m>_K<K>/`.
    pub output_root: Option<PathBuf>,
}

/// Run the full `(m, K)` grid and return one row per `(m, K, snapshot time)`,
/// sorted by `(m, K, t)`. Individual run failures become flagged rows; the
/// remaining rows are still produced.
pub fn run_sweep(base: &RunConfig, m_list: &[f64], k_list: &[f64]) -> Result<Vec<SweepRow>> {
    run_sweep_with_options(base, m_list, k_list, &SweepOptions::default())
}

pub fn run_sweep_with_options(
    base: &RunConfig,
    m_list: &[f64],
    k_list: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    base.validate()?;
    if m_list.is_empty() || k_list.is_empty() {
        return Err(Error::Usage("empty m or K list".to_string()));
    }
    let threads = resolve_threads(opts.threads);

    // hyperbolic reference per subcritical capacity, shared across exponents
    let mut ref_capacities: Vec<f64> = k_list.iter().copied().filter(|&k| k <= 1.0).collect();
    ref_capacities.dedup_by(|a, b| a == b);
    let references: Vec<(f64, Result<RunResult>)> = parallel_map(&ref_capacities, threads, |&k| {
        let mut cfg = base.clone();
        cfg.params.capacity = k;
        (k, run_hyperbolic(&cfg))
    });

    let jobs: Vec<(f64, f64)> = m_list
        .iter()
        .flat_map(|&m| k_list.iter().map(move |&k| (m, k)))
        .collect();

    let results: Vec<Vec<SweepRow>> = parallel_map(&jobs, threads, |&(m, k)| {
        let reference = references
            .iter()
            .find(|(rk, _)| *rk == k)
            .map(|(_, res)| res);
        sweep_job(base, m, k, reference, opts)
    });

    let mut rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.m, a.k, a.t)
            .partial_cmp(&(b.m, b.k, b.t))
            .expect("finite sort keys")
    });
    Ok(rows)
}

fn sweep_job(
    base: &RunConfig,
    m: f64,
    k: f64,
    reference: Option<&Result<RunResult>>,
    opts: &SweepOptions,
) -> Vec<SweepRow> {
    let mut cfg = base.clone();
    cfg.params.m = m;
    cfg.params.capacity = k;

    let failed_rows = |msg: String| -> Vec<SweepRow> {
        base.snapshot_times
            .iter()
            .map(|&t| SweepRow {
                m,
                k,
                t,
                l1_dist_to_limit: None,
                grad_p_energy: 0.0,
                comp_residual_l1: 0.0,
                excess_sat_total: 0.0,
                max_p: 0.0,
                kinetic_metric: 0.0,
                status: RowStatus::Failed(msg.clone()),
            })
            .collect()
    };

    let grid = match cfg.grid() {
        Ok(g) => g,
        Err(e) => return failed_rows(e.to_string()),
    };
    let result = match run_pme(&cfg) {
        Ok(r) => r,
        Err(e) => return failed_rows(e.to_string()),
    };

    if let Some(root) = &opts.output_root {
        let dir = root.join(format!("m{m}_K{k}"));
        for snap in &result.snapshots {
            if let Err(e) = write_snapshot_file(&dir, &snap.state, &grid) {
                return failed_rows(format!("writing snapshot: {e}"));
            }
        }
    }

    let mut limit_status: Option<String> = None;
    let limit_states: Option<Vec<&SimState>> = match reference {
        Some(Ok(ref_run)) => Some(ref_run.snapshots.iter().map(|s| &s.state).collect()),
        Some(Err(e)) => {
            limit_status = Some(format!("hyperbolic reference: {e}"));
            None
        }
        None => None,
    };

    let kinetic = KineticGrid::with_defaults(k);
    result
        .snapshots
        .iter()
        .enumerate()
        .map(|(idx, snap)| {
            let state = &snap.state;
            let l1_dist_to_limit = limit_states.as_ref().and_then(|refs| {
                refs.get(idx).map(|r| {
                    let diff = field_sub(&state.density, &r.density);
                    norm(&diff, &grid, Norm::L1)
                })
            });
            let (_, comp_residual_l1) = complementarity_residual(state, &cfg.params, &grid);
            SweepRow {
                m,
                k,
                t: state.time,
                l1_dist_to_limit,
                grad_p_energy: snap.cumulative.grad_p_energy,
                comp_residual_l1,
                excess_sat_total: snap.cumulative.excess_sat_total(),
                max_p: snap.cumulative.max_pressure,
                kinetic_metric: kinetic_two_valued_metric(&state.density, &grid, &kinetic),
                status: match &limit_status {
                    Some(msg) => RowStatus::Failed(msg.clone()),
                    None => RowStatus::Ok,
                },
            }
        })
        .collect()
}

pub const SWEEP_HEADER: &str =
    "m,K,t,l1_dist_to_limit,grad_P_energy,comp_residual_l1,excess_sat_total,max_P,kinetic_metric,status";

/// Render the aggregate CSV. Failed rows keep their key columns and carry the
/// failure text in the `status` column.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let metrics = match &row.status {
            RowStatus::Ok => [
                row.l1_dist_to_limit.map(fmt_real).unwrap_or_default(),
                fmt_real(row.grad_p_energy),
                fmt_real(row.comp_residual_l1),
                fmt_real(row.excess_sat_total),
                fmt_real(row.max_p),
                fmt_real(row.kinetic_metric),
            ]
            .join(","),
            RowStatus::Failed(_) => ",,,,,".to_string(),
        };
        let status = match &row.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(msg) => format!("failed({})", msg.replace([',', '\n'], ";")),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_real(row.m),
            fmt_real(row.k),
            fmt_real(row.t),
            metrics,
            status
        ));
    }
    out
}

/// Explicit cap, else `STIFFPRESS_THREADS`, else machine parallelism.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| {
            std::env::var("STIFFPRESS_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Order-preserving parallel map over a work list with a fixed worker count.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let n = items.len();
    let workers = threads.max(1).min(n.max(1));
    if workers <= 1 || n <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= n {
                    break;
                }
                let result = f(&items[idx]);
                slots.lock().expect("worker poisoned the slots")[idx] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker poisoned the slots")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}
