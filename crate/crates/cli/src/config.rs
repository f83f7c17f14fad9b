//! TOML run configuration. A config has four sections — `[grid]`,
//! `[problem]`, and optionally `[solver]`, `[sweep]`, `[check]` — and every
//! structural precondition is enforced here, at parse time, so the
//! commands only ever see a valid [`ProblemSpec`].
//!
//! Coefficients (`potentials`, `beta` entries) are either numbers or
//! expression strings over `x`; see [`crate::expr`] for the grammar.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;
use solwave::discretize::Grid;
use solwave::problem::{Coefficient, Decomposition, ProblemSpec};
use solwave::solver::SolverConfig;

use crate::expr;

/// Ladder used when `[sweep]` names a target but no values: the
/// competition strength marches toward -∞ one decade at a time.
pub const DEFAULT_SWEEP: [f64; 4] = [-1.0, -10.0, -100.0, -1000.0];

#[derive(Clone, Debug)]
pub struct ConfigError {
    /// Field path (`problem.beta[1][2]`) or `config` for file-level issues.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: RawGrid,
    problem: RawProblem,
    #[serde(default)]
    solver: RawSolver,
    sweep: Option<RawSweep>,
    check: Option<RawCheck>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default = "interval_kind")]
    kind: String,
    size: f64,
    n: usize,
    dimension: Option<usize>,
}

fn interval_kind() -> String {
    "interval".to_owned()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    components: usize,
    /// Decomposition bounds `0 = a_0 < … < a_m = components`; singleton
    /// groups when omitted.
    groups: Option<Vec<usize>>,
    potentials: Vec<toml::Value>,
    beta: Vec<Vec<toml::Value>>,
    mu: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    max_iters: Option<usize>,
    step0: Option<f64>,
    armijo_c: Option<f64>,
    backtrack: Option<f64>,
    tol_tangent_grad: Option<f64>,
    tol_nehari: Option<f64>,
    enforce_nonneg: Option<bool>,
    require_e: Option<bool>,
    restarts: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    /// `beta[i][j]` with 1-based component indices; cross-group pairs only.
    target: String,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    ratio: Option<f64>,
    count: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    solution: Option<String>,
}

/// Cross-group coupling swept over a strictly monotone list of values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub i: usize,
    pub j: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub solver: SolverConfig,
    pub sweep: Option<SweepPlan>,
    pub check_solution: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
}

fn coefficient(grid: &Grid, value: &toml::Value, path: &str) -> Result<Coefficient, ConfigError> {
    match value {
        toml::Value::Integer(v) => Ok(Coefficient::constant(grid.n_interior(), *v as f64)),
        toml::Value::Float(v) => Ok(Coefficient::constant(grid.n_interior(), *v)),
        toml::Value::String(src) => {
            let ast = expr::parse(src).map_err(|e| ConfigError::new(path, e))?;
            Ok(Coefficient::from_fn(grid, |x| ast.eval(x)))
        }
        other => Err(ConfigError::new(
            path,
            format!("expected a number or an expression string, got {}", other.type_str()),
        )),
    }
}

fn build_grid(raw: &RawGrid, grid_n: Option<usize>) -> Result<Grid, ConfigError> {
    let n = grid_n.unwrap_or(raw.n);
    match raw.kind.as_str() {
        "interval" => {
            if raw.dimension.is_some() {
                return Err(ConfigError::new("grid.dimension", "only radial_ball grids take one"));
            }
            Grid::interval(raw.size, n).map_err(|e| ConfigError::new("grid", e))
        }
        "radial_ball" => {
            let dim = raw.dimension.ok_or_else(|| {
                ConfigError::new("grid.dimension", "radial_ball grids need a dimension (1-3)")
            })?;
            Grid::radial_ball(raw.size, dim as u32, n).map_err(|e| ConfigError::new("grid", e))
        }
        other => Err(ConfigError::new(
            "grid.kind",
            format!("unknown kind `{other}` (expected interval or radial_ball)"),
        )),
    }
}

fn parse_sweep_target(target: &str, d: usize) -> Result<(usize, usize), ConfigError> {
    let path = "sweep.target";
    let bad = || {
        ConfigError::new(path, format!("`{target}` does not match beta[i][j] with 1-based indices"))
    };
    let rest = target.strip_prefix("beta[").ok_or_else(bad)?;
    let (i_str, rest) = rest.split_once("][").ok_or_else(bad)?;
    let j_str = rest.strip_suffix(']').ok_or_else(bad)?;
    let i: usize = i_str.parse().map_err(|_| bad())?;
    let j: usize = j_str.parse().map_err(|_| bad())?;
    if i == 0 || j == 0 || i > d || j > d {
        return Err(ConfigError::new(path, format!("indices must lie in 1..={d}")));
    }
    if i == j {
        return Err(ConfigError::new(path, "diagonal couplings cannot be swept"));
    }
    Ok((i - 1, j - 1))
}

fn build_sweep(raw: &RawSweep, spec: &ProblemSpec) -> Result<SweepPlan, ConfigError> {
    let (i, j) = parse_sweep_target(&raw.target, spec.d())?;
    if spec.decomposition().same_group(i, j) {
        return Err(ConfigError::new(
            "sweep.target",
            format!(
                "beta[{}][{}] couples components of the same group; only cross-group pairs sweep",
                i + 1,
                j + 1
            ),
        ));
    }
    let ladder = [raw.start.is_some(), raw.ratio.is_some(), raw.count.is_some()];
    let values = match (&raw.values, ladder.iter().any(|&x| x)) {
        (Some(_), true) => {
            return Err(ConfigError::new(
                "sweep",
                "give either explicit values or a start/ratio/count ladder, not both",
            ));
        }
        (Some(v), false) => v.clone(),
        (None, true) => {
            let (Some(start), Some(ratio), Some(count)) = (raw.start, raw.ratio, raw.count) else {
                return Err(ConfigError::new("sweep", "a ladder needs start, ratio, and count"));
            };
            (0..count).map(|k| start * libm::pow(ratio, k as f64)).collect()
        }
        (None, false) => DEFAULT_SWEEP.to_vec(),
    };
    if values.is_empty() {
        return Err(ConfigError::new("sweep.values", "at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ConfigError::new("sweep.values", "values must be finite"));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    if values.len() > 1 && !increasing && !decreasing {
        return Err(ConfigError::new("sweep.values", "values must be strictly monotone"));
    }
    Ok(SweepPlan { i, j, values })
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    // The toml error Display already carries line/column context.
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::new("config", e))?;

    let grid = build_grid(&raw.grid, overrides.grid_n)?;
    let d = raw.problem.components;
    if d == 0 {
        return Err(ConfigError::new("problem.components", "at least one component"));
    }

    let decomposition = match &raw.problem.groups {
        None => Decomposition::singletons(d),
        Some(bounds) => {
            let dec = Decomposition::new(bounds.clone())
                .map_err(|e| ConfigError::new("problem.groups", e))?;
            if dec.d() != d {
                return Err(ConfigError::new(
                    "problem.groups",
                    format!("bounds end at {} but there are {d} components", dec.d()),
                ));
            }
            dec
        }
    };

    if raw.problem.potentials.len() != d {
        return Err(ConfigError::new(
            "problem.potentials",
            format!("expected {d} entries, got {}", raw.problem.potentials.len()),
        ));
    }
    let mut potentials = Vec::with_capacity(d);
    for (i, v) in raw.problem.potentials.iter().enumerate() {
        potentials.push(coefficient(&grid, v, &format!("problem.potentials[{}]", i + 1))?);
    }

    if raw.problem.beta.len() != d {
        return Err(ConfigError::new(
            "problem.beta",
            format!("expected {d} rows, got {}", raw.problem.beta.len()),
        ));
    }
    let mut couplings = Vec::with_capacity(d);
    for (i, row) in raw.problem.beta.iter().enumerate() {
        if row.len() != d {
            return Err(ConfigError::new(
                format!("problem.beta[{}]", i + 1),
                format!("expected {d} entries, got {}", row.len()),
            ));
        }
        let mut out = Vec::with_capacity(d);
        for (j, v) in row.iter().enumerate() {
            out.push(coefficient(&grid, v, &format!("problem.beta[{}][{}]", i + 1, j + 1))?);
        }
        couplings.push(out);
    }

    let spec = ProblemSpec::new(grid, decomposition, potentials, couplings, raw.problem.mu.clone())
        .map_err(|e| ConfigError::new("problem", e))?;

    let mut solver = SolverConfig::for_spec(&spec);
    let s = &raw.solver;
    if let Some(v) = s.max_iters {
        solver.max_iters = v;
    }
    if let Some(v) = s.step0 {
        solver.step0 = v;
    }
    if let Some(v) = s.armijo_c {
        solver.armijo_c = v;
    }
    if let Some(v) = s.backtrack {
        solver.backtrack = v;
    }
    if let Some(v) = s.tol_tangent_grad {
        solver.tol_tangent_grad = v;
    }
    if let Some(v) = s.tol_nehari {
        solver.tol_nehari = v;
    }
    if let Some(v) = s.enforce_nonneg {
        solver.enforce_nonneg = v;
    }
    if let Some(v) = s.require_e {
        solver.require_e = v;
    }
    if let Some(v) = s.restarts {
        solver.restarts = v;
    }
    if let Some(v) = s.seed {
        solver.rng_seed = v;
    }
    if let Some(v) = overrides.seed {
        solver.rng_seed = v;
    }
    if solver.max_iters == 0
        || solver.restarts == 0
        || !(solver.step0 > 0.0)
        || !(solver.armijo_c > 0.0 && solver.armijo_c < 1.0)
        || !(solver.backtrack > 0.0 && solver.backtrack < 1.0)
        || !(solver.tol_tangent_grad > 0.0)
        || !(solver.tol_nehari > 0.0)
    {
        return Err(ConfigError::new("solver", "tolerances, steps, and counts must be positive"));
    }

    let sweep = raw.sweep.as_ref().map(|s| build_sweep(s, &spec)).transpose()?;
    let check_solution = raw.check.as_ref().and_then(|c| c.solution.as_ref()).map(PathBuf::from);

    Ok(RunConfig { spec, solver, sweep, check_solution })
}
