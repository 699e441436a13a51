//! Plain-text run configuration: one `key=value` per line, `#` comments.
//!
//! Recognized keys (defaults in parentheses):
//! `x_min` (0), `x_max` (1), `n_cells` (200), `m` (2), `K` (1), `chi` (1),
//! `D` (1), `t_final` (1), `snapshot_times` (comma-separated, default
//! `t_final`), `cfl` (0.45), `dt_max_cap` (1e-2), `newton_tol` (1e-11),
//! `newton_max_iter` (50), `init` (`cosine`), `init_M` (0.5), `init_amp`
//! (0.01), `init_left`/`init_right`/`init_split` (step profile),
//! `init_csv` (path), `output_dir` (`out`), `solver` (`pme`).

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::pme::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub enum InitPreset {
    /// `u0 = M - amplitude * cos(pi (x - x_min) / L)`.
    Cosine { mean: f64, amplitude: f64 },
    /// `u0 = left` below `split`, `right` from `split` on.
    Step { left: f64, right: f64, split: f64 },
    /// One density value per non-comment line; must match `n_cells`.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Pme,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub params: ModelParams,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
    pub init: InitPreset,
    pub output_dir: PathBuf,
    pub solver: SolverKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            x_min: 0.0,
            x_max: 1.0,
            n_cells: 200,
            params: ModelParams::default(),
            t_final: 1.0,
            snapshot_times: vec![1.0],
            init: InitPreset::Cosine {
                mean: 0.5,
                amplitude: 0.01,
            },
            output_dir: PathBuf::from("out"),
            solver: SolverKind::Pme,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        parse_config(&text)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n_cells)
    }

    /// Build and validate the initial density on `grid`.
    pub fn initial_density(&self, grid: &Grid1D) -> Result<Field> {
        let u0 = match &self.init {
            InitPreset::Cosine { mean, amplitude } => {
                let length = self.x_max - self.x_min;
                let x_min = self.x_min;
                grid.sample(|x| {
                    mean - amplitude * (std::f64::consts::PI * (x - x_min) / length).cos()
                })
            }
            InitPreset::Step { left, right, split } => {
                let (l, r, s) = (*left, *right, *split);
                grid.sample(|x| if x < s { l } else { r })
            }
            InitPreset::Csv { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::config("init_csv", format!("cannot read {}: {e}", path.display()))
                })?;
                let mut values = Vec::new();
                for (lineno, line) in text.lines().enumerate() {
                    let line = strip_comment(line);
                    if line.is_empty() {
                        continue;
                    }
                    let v: f64 = line.parse().map_err(|_| {
                        Error::config(
                            "init_csv",
                            format!("line {}: `{line}` is not a number", lineno + 1),
                        )
                    })?;
                    values.push(v);
                }
                if values.len() != grid.n_cells() {
                    return Err(Error::config(
                        "init_csv",
                        format!(
                            "expected {} values, found {}",
                            grid.n_cells(),
                            values.len()
                        ),
                    ));
                }
                Field::new(values)
            }
        };
        if !u0.is_finite() {
            return Err(Error::config("init", "initial density is not finite".to_string()));
        }
        if u0.min() < 0.0 || u0.max() > self.params.capacity {
            return Err(Error::config(
                "init",
                format!(
                    "initial density range [{}, {}] leaves [0, K] with K = {}",
                    u0.min(),
                    u0.max(),
                    self.params.capacity
                ),
            ));
        }
        Ok(u0)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        Grid1D::new(self.x_min, self.x_max, self.n_cells)?;
        if self.t_final.is_nan() || self.t_final < 0.0 {
            return Err(Error::config("t_final", format!("must be >= 0, got {}", self.t_final)));
        }
        for pair in self.snapshot_times.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::config(
                    "snapshot_times",
                    format!("times must be strictly increasing, got {} then {}", pair[0], pair[1]),
                ));
            }
        }
        if let (Some(&first), Some(&last)) = (self.snapshot_times.first(), self.snapshot_times.last()) {
            if first < 0.0 || last > self.t_final {
                return Err(Error::config(
                    "snapshot_times",
                    format!("times must lie in [0, {}]", self.t_final),
                ));
            }
        }
        if let InitPreset::Cosine { mean, amplitude } = self.init {
            let lo = mean - amplitude.abs();
            let hi = mean + amplitude.abs();
            if lo < 0.0 || hi > self.params.capacity {
                return Err(Error::config(
                    "init_M",
                    format!("cosine profile range [{lo}, {hi}] leaves [0, K]"),
                ));
            }
        }
        if let InitPreset::Step { left, right, .. } = self.init {
            let lo = left.min(right);
            let hi = left.max(right);
            if lo < 0.0 || hi > self.params.capacity {
                return Err(Error::config(
                    "init_left",
                    format!("step profile range [{lo}, {hi}] leaves [0, K]"),
                ));
            }
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

/// Parse a configuration document; unknown keys, malformed values and
/// invariant violations are reported against the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut saw_snapshots = false;
    let mut saw_t_final = false;
    // step / csv parameters arrive before `init` in no particular order
    let mut step_left = 0.25f64;
    let mut step_right = 0.75f64;
    let mut step_split = 0.5f64;
    let mut csv_path: Option<PathBuf> = None;
    let mut init_kind: Option<String> = None;
    let mut init_mean = 0.5f64;
    let mut init_amp = 0.01f64;

    for raw in text.lines() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config("config", format!("expected key=value, got `{line}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let num = |key: &str, value: &str| -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::config(key, format!("`{value}` is not a number")))
        };
        match key {
            "x_min" => cfg.x_min = num(key, value)?,
            "x_max" => cfg.x_max = num(key, value)?,
            "n_cells" => {
                cfg.n_cells = value
                    .parse()
                    .map_err(|_| Error::config(key, format!("`{value}` is not a cell count")))?
            }
            "m" => cfg.params.m = num(key, value)?,
            "K" => cfg.params.capacity = num(key, value)?,
            "chi" => cfg.params.chi = num(key, value)?,
            "D" => cfg.params.diffusivity = num(key, value)?,
            "t_final" => {
                cfg.t_final = num(key, value)?;
                saw_t_final = true;
            }
            "snapshot_times" => {
                cfg.snapshot_times = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<Vec<_>>>()?;
                saw_snapshots = true;
            }
            "cfl" => cfg.params.cfl = num(key, value)?,
            "dt_max_cap" => cfg.params.dt_max_cap = num(key, value)?,
            "newton_tol" => cfg.params.newton_tol = num(key, value)?,
            "newton_max_iter" => {
                cfg.params.newton_max_iter = value
                    .parse()
                    .map_err(|_| Error::config(key, format!("`{value}` is not a count")))?
            }
            "init" => init_kind = Some(value.to_string()),
            "init_M" => init_mean = num(key, value)?,
            "init_amp" => init_amp = num(key, value)?,
            "init_left" => step_left = num(key, value)?,
            "init_right" => step_right = num(key, value)?,
            "init_split" => step_split = num(key, value)?,
            "init_csv" => csv_path = Some(PathBuf::from(value)),
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "solver" => {
                cfg.solver = match value {
                    "pme" => SolverKind::Pme,
                    "hyperbolic" => SolverKind::Hyperbolic,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("`{other}` is not one of pme|hyperbolic"),
                        ))
                    }
                }
            }
            other => {
                return Err(Error::config(other, "unknown key".to_string()));
            }
        }
    }

    cfg.init = match init_kind.as_deref() {
        None | Some("cosine") => InitPreset::Cosine {
            mean: init_mean,
            amplitude: init_amp,
        },
        Some("step") => InitPreset::Step {
            left: step_left,
            right: step_right,
            split: step_split,
        },
        Some("csv") => InitPreset::Csv {
            path: csv_path
                .ok_or_else(|| Error::config("init_csv", "required for init=csv".to_string()))?,
        },
        Some(other) => {
            return Err(Error::config(
                "init",
                format!("`{other}` is not one of cosine|step|csv"),
            ))
        }
    };

    if saw_t_final && !saw_snapshots {
        cfg.snapshot_times = vec![cfg.t_final];
    }

    cfg.validate()?;
    Ok(cfg)
}
