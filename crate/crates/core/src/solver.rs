//! Constrained minimization of the energy over the Nehari-type set
//! (intersected with the diagonal-dominance cone unless the cross-group
//! couplings are purely competitive, where the cone constraint is
//! redundant).
//!
//! The iteration is projected gradient descent in the problem's own metric:
//! the raw L² gradient is lifted through the `(-Δ + V_i)` Riesz maps — the
//! gradient with respect to the `inner_h1` inner product the energy is
//! built from — then projected onto the tangent space of the constraint
//! set, and the step is chosen by backtracking on the composed map
//! `α ↦ J(project(u + αv))`, so every accepted iterate sits on the
//! constraint set. Descent is guaranteed because the scaling directions are
//! energy-neutral (`⟨∇J, û_h⟩ = G_h = 0` on the constraint set), so tangent
//! projection cannot destroy the negative slope of the preconditioned
//! direction.
//!
//! Nonnegativity is enforced by componentwise absolute value before each
//! projection: the energy is even in each component, edge differences can
//! only shrink under `|·|`, and the interaction integrals are invariant, so
//! the projected energy never increases (asserted in debug builds).

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::discretize::{norm_l4_sq, riesz_h1, Field};
use crate::nehari::{
    constraint_gradient, energy, gradient, group_norms_sq, is_in_e, nehari_residuals,
    project_to_nehari, state_inner_l2, state_norm_l2, tangent_project, EMembership, NehariError,
    State,
};
use crate::problem::{validate, ProblemSpec};

/// Tuning knobs for [`minimize`] and [`multi_start`].
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Initial line-search step for the first iteration.
    pub step0: f64,
    /// Armijo sufficient-decrease constant, in (0,1).
    pub armijo_c: f64,
    /// Step shrink factor per rejected trial, in (0,1).
    pub backtrack: f64,
    /// Stop when the tangent gradient's L² norm falls below this times the
    /// state's H¹ norm.
    pub tol_tangent_grad: f64,
    /// Stop tolerance on the relative constraint residuals max |G_h|/b_h.
    pub tol_nehari: f64,
    /// Replace components by their absolute values before each projection.
    pub enforce_nonneg: bool,
    /// Keep iterates inside the diagonal-dominance cone by step rejection.
    /// [`SolverConfig::for_spec`] switches this off under pure cross-group
    /// competition, where minimizing without the cone is safe.
    pub require_e: bool,
    /// Independent seeded starts used by [`multi_start`].
    pub restarts: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 30_000,
            step0: 0.1,
            armijo_c: 1e-4,
            backtrack: 0.5,
            tol_tangent_grad: 1e-7,
            tol_nehari: 1e-10,
            enforce_nonneg: true,
            require_e: true,
            restarts: 8,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    /// Defaults with `require_e` derived from the coupling sign structure:
    /// the cone constraint is dropped when every cross-group coupling is
    /// nonpositive.
    pub fn for_spec(spec: &ProblemSpec) -> Self {
        SolverConfig { require_e: !validate(spec).pure_competition_k2, ..SolverConfig::default() }
    }

    fn assert_valid(&self) {
        assert!(self.max_iters > 0);
        assert!(self.step0 > 0.0 && self.step0.is_finite());
        assert!(self.armijo_c > 0.0 && self.armijo_c < 1.0);
        assert!(self.backtrack > 0.0 && self.backtrack < 1.0);
        assert!(self.tol_tangent_grad > 0.0);
        assert!(self.tol_nehari > 0.0);
        assert!(self.restarts > 0);
    }
}

/// One accepted iterate: energy after the step and the (post-projection)
/// relative constraint residual.
#[derive(Clone, Copy, Debug)]
pub struct IterRecord {
    pub energy: f64,
    pub residual: f64,
    /// Accepted line-search step; 0 for the initial projection record.
    pub step: f64,
}

/// Full outcome of one minimization run.
#[derive(Clone, Debug)]
pub struct SolverResult {
    pub state: State,
    pub energy: f64,
    /// Accepted steps taken (0 when the start already met the tolerances).
    pub iterations: usize,
    /// L² norm of the tangent-projected L² gradient at the final state.
    pub tangent_grad_norm: f64,
    /// max_h |G_h| / b_h at the final state.
    pub nehari_residual: f64,
    pub in_e: EMembership,
    /// Euclidean norm of the least-squares Lagrange multipliers; NaN if the
    /// multiplier system was singular.
    pub multiplier_norm: f64,
    /// Squared L⁴ norm of each component.
    pub component_l4: Vec<f64>,
    pub converged: bool,
    /// Energy/residual after the initial projection and after each
    /// accepted step. Acceptance is nonmonotone (spectral steps are allowed
    /// to overshoot briefly), so energies need not decrease stepwise; the
    /// final `energy` is the best one seen.
    pub history: Vec<IterRecord>,
}

/// Per-restart summary kept by [`multi_start`] for reporting.
#[derive(Clone, Debug)]
pub struct RestartDiagnostic {
    pub index: usize,
    pub style: &'static str,
    pub converged: bool,
    pub energy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub enum SolverError {
    /// The state could not be placed (or kept) on the constraint set;
    /// callers should restart from a different guess.
    Projection(NehariError),
    /// The initial projected state violates the dominance constraint while
    /// `require_e` is set.
    OutsideCone,
    /// All guess attempts for the requested style failed to project.
    GuessFailed(NehariError),
    /// No restart converged. Carries what happened per restart and the best
    /// unconverged iterate, if any run produced one.
    AllRestartsFailed {
        attempts: Vec<RestartDiagnostic>,
        best: Option<Box<SolverResult>>,
    },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Projection(e) => write!(f, "projection failed: {e}"),
            SolverError::OutsideCone => write!(f, "initial state violates the dominance constraint"),
            SolverError::GuessFailed(e) => write!(f, "could not build a projectable guess: {e}"),
            SolverError::AllRestartsFailed { attempts, .. } => {
                write!(f, "none of {} restarts converged", attempts.len())
            }
        }
    }
}

impl core::error::Error for SolverError {}

/// How to build a starting state.
#[derive(Clone, Debug)]
pub enum GuessStyle {
    /// `d` nonnegative bump profiles on pairwise-disjoint node windows, so
    /// all cross products vanish nodewise — projectable for every
    /// admissible coupling matrix.
    SegregatedBumps,
    /// Smoothed positive noise; may fail to project under strong
    /// competition (retried, then reported).
    RandomPositive,
    /// Reuse (and re-project) an existing state, e.g. along a sweep.
    Warm(State),
}

impl GuessStyle {
    fn name(&self) -> &'static str {
        match self {
            GuessStyle::SegregatedBumps => "segregated_bumps",
            GuessStyle::RandomPositive => "random_positive",
            GuessStyle::Warm(_) => "warm",
        }
    }
}

fn neg(s: &State) -> State {
    let comps = s
        .components()
        .iter()
        .map(|f| Field::from_values(f.values().iter().map(|v| -v).collect()))
        .collect();
    State::new(comps)
}

fn axpy(u: &State, alpha: f64, v: &State) -> State {
    let comps = (0..u.d())
        .map(|i| {
            let a = u.component(i).values();
            let b = v.component(i).values();
            Field::from_values(a.iter().zip(b).map(|(x, y)| x + alpha * y).collect())
        })
        .collect();
    State::new(comps)
}

/// Riesz lift: solves `(-Δ + V_i + Σ_{j≠i} β_ij⁻ u_j²) g̃_i = g_i` per
/// component. The extra zero-order term is the competitive part of the
/// interaction curvature at `u`; without it the lift is blind to strong
/// segregation, whose `|β| u_j²` stiffness concentrates in the interface
/// and pins the step length at `1/|β|`.
fn sobolev_lift(spec: &ProblemSpec, u: &State, g: &State) -> State {
    let grid = spec.grid();
    let n = grid.n_interior();
    let comps = (0..g.d())
        .map(|i| {
            let mut w = spec.potential(i).values().to_vec();
            for j in 0..u.d() {
                if j == i {
                    continue;
                }
                let beta = spec.coupling(i, j).values();
                let uj = u.component(j).values();
                for k in 0..n {
                    let competitive = (-beta[k]).max(0.0);
                    w[k] += competitive * uj[k] * uj[k];
                }
            }
            riesz_h1(grid, &Field::from_values(w), g.component(i))
        })
        .collect();
    State::new(comps)
}

fn relative_residual(spec: &ProblemSpec, u: &State) -> f64 {
    let b = group_norms_sq(spec, u);
    nehari_residuals(spec, u)
        .iter()
        .zip(&b)
        .map(|(g, bh)| libm::fabs(*g) / bh)
        .fold(0.0, f64::max)
}

/// Least-squares Lagrange multipliers: fits `∇J ≈ Σ_h μ_h ∇G_h` in L² by
/// solving the Gram system `Γμ = ρ`, `Γ_hk = ⟨∇G_h, ∇G_k⟩`,
/// `ρ_h = ⟨∇G_h, ∇J⟩`. The group-scaling directions are useless for this
/// fit — `⟨∇J, û_h⟩ = G_h` vanishes identically on the constraint set — so
/// the full constraint gradients are used instead; at a constrained
/// critical point the fit is exact and, since such a point is a free
/// critical point whenever the interaction matrix is nonsingular, the
/// multipliers vanish there. Away from criticality they are genuinely
/// nonzero, which makes `‖μ‖` a usable convergence diagnostic.
pub fn lagrange_multipliers(spec: &ProblemSpec, u: &State) -> Result<Vec<f64>, NehariError> {
    let m = spec.m();
    let grads: Vec<State> = (0..m).map(|h| constraint_gradient(spec, u, h)).collect();
    let g = gradient(spec, u);
    let mut gram = vec![0.0; m * m];
    for h in 0..m {
        for k in h..m {
            let v = state_inner_l2(spec.grid(), &grads[h], &grads[k]);
            gram[h * m + k] = v;
            gram[k * m + h] = v;
        }
    }
    let rho: Vec<f64> = (0..m)
        .map(|h| state_inner_l2(spec.grid(), &grads[h], &g))
        .collect();
    crate::linalg::solve_dense(gram, rho, m).ok_or(NehariError::SingularTangentSystem)
}

/// Builds a starting state and projects it onto the constraint set.
/// Deterministic in `(spec, seed, style)`. Random styles retry with fresh
/// draws when the projection fails.
pub fn initial_guess(spec: &ProblemSpec, seed: u64, style: &GuessStyle) -> Result<State, SolverError> {
    const ATTEMPTS: usize = 20;
    match style {
        GuessStyle::Warm(s) => project_to_nehari(spec, s).map_err(SolverError::GuessFailed),
        GuessStyle::SegregatedBumps | GuessStyle::RandomPositive => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut last = NehariError::ZeroGroupNorm(0);
            for _ in 0..ATTEMPTS {
                let raw = match style {
                    GuessStyle::SegregatedBumps => segregated_bumps(spec, &mut rng),
                    _ => random_positive(spec, &mut rng),
                };
                match project_to_nehari(spec, &raw) {
                    Ok(p) => return Ok(p),
                    Err(e) => last = e,
                }
            }
            Err(SolverError::GuessFailed(last))
        }
    }
}

fn segregated_bumps(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> State {
    let d = spec.d();
    let n = spec.grid().n_interior();
    assert!(n >= 6 * d, "grid too coarse for {d} disjoint bumps on {n} nodes");
    let base = n / d;
    let margin = (base / 8).max(1);
    let mut comps = Vec::with_capacity(d);
    for i in 0..d {
        let lo0 = i * base;
        let hi0 = if i + 1 == d { n } else { (i + 1) * base };
        let jl = rng.gen_range(0..=margin);
        let jr = rng.gen_range(0..=margin);
        let mut lo = lo0 + margin + jl;
        let mut hi = hi0.saturating_sub(margin + jr);
        if hi < lo + 3 {
            lo = lo0 + 1;
            hi = hi0 - 1;
        }
        let amp = 0.8 + 0.4 * rng.gen::<f64>();
        let width = (hi - lo + 1) as f64;
        let mut vals = vec![0.0; n];
        for (k, v) in vals.iter_mut().enumerate().take(hi).skip(lo) {
            let s = libm::sin(PI * (k - lo + 1) as f64 / width);
            *v = amp * s * s;
        }
        comps.push(Field::from_values(vals));
    }
    State::new(comps)
}

fn random_positive(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> State {
    let d = spec.d();
    let n = spec.grid().n_interior();
    let mut comps = Vec::with_capacity(d);
    for _ in 0..d {
        let mut vals: Vec<f64> = (0..n).map(|_| 0.2 + rng.gen::<f64>()).collect();
        for _ in 0..3 {
            let old = vals.clone();
            for k in 0..n {
                let left = if k == 0 { 0.0 } else { old[k - 1] };
                let right = if k + 1 == n { 0.0 } else { old[k + 1] };
                vals[k] = 0.25 * (left + 2.0 * old[k] + right);
            }
        }
        comps.push(Field::from_values(vals));
    }
    State::new(comps)
}

/// Minimizes the energy over the constraint set starting from `u0`
/// (projected first; componentwise `|·|` applied when `enforce_nonneg`).
///
/// One backtracking pass along `dir` from `*u`: up to 60 halvings looking
/// for sufficient decrease of the projected (and optionally rectified)
/// trial below the reference energy `e_ref` (the largest recently accepted
/// energy — the nonmonotone rule that lets spectral steps breathe). On
/// success commits the trial into `u`/`energy_u` and returns the accepted
/// step.
#[allow(clippy::too_many_arguments)]
fn search_step(
    spec: &ProblemSpec,
    config: &SolverConfig,
    prep: &impl Fn(&State) -> State,
    dir: &State,
    slope: f64,
    alpha0: f64,
    e_ref: f64,
    u: &mut State,
    energy_u: &mut f64,
    step_cap: &mut f64,
) -> Option<f64> {
    let mut alpha = alpha0;
    for _ in 0..60 {
        let z = axpy(u, alpha, dir);
        if !z.is_finite() {
            alpha *= config.backtrack;
            continue;
        }
        let trial = match project_to_nehari(spec, &prep(&z)) {
            Ok(t) => t,
            Err(_) => {
                alpha *= config.backtrack;
                continue;
            }
        };
        if config.require_e && !is_in_e(spec, &trial).ok {
            // The cone is open: short enough steps stay inside. Cap future
            // steps so the iteration hugs the boundary instead of bouncing
            // off it.
            *step_cap = alpha * 0.5;
            alpha *= config.backtrack;
            continue;
        }
        let e_trial = energy(spec, &trial);
        if e_trial <= e_ref + config.armijo_c * alpha * slope {
            #[cfg(debug_assertions)]
            if config.enforce_nonneg {
                // |·| before projection must not cost energy.
                if let Ok(plain) = project_to_nehari(spec, &z) {
                    let ep = energy(spec, &plain);
                    debug_assert!(
                        e_trial <= ep + 1e-12 * (1.0 + libm::fabs(ep)),
                        "abs-projection increased energy: {e_trial} > {ep}"
                    );
                }
            }
            *u = trial;
            *energy_u = e_trial;
            return Some(alpha);
        }
        alpha *= config.backtrack;
        if alpha < 1e-18 {
            return None;
        }
    }
    None
}

/// Returns `Ok` with `converged = false` when the line search stagnates or
/// the iteration budget runs out — the returned state is the best-energy
/// iterate seen. Hard `Err`s (projection failure, singular tangent system)
/// are restart signals.
pub fn minimize(spec: &ProblemSpec, config: &SolverConfig, u0: &State) -> Result<SolverResult, SolverError> {
    config.assert_valid();
    // Nonmonotone window: sufficient decrease is measured against the worst
    // of this many recent energies, which lets spectral steps through.
    const NONMONO: usize = 8;
    let grid = spec.grid();
    let prep = |s: &State| if config.enforce_nonneg { s.abs() } else { s.clone() };

    let mut u = project_to_nehari(spec, &prep(u0)).map_err(SolverError::Projection)?;
    if config.require_e && !is_in_e(spec, &u).ok {
        return Err(SolverError::OutsideCone);
    }
    let mut energy_u = energy(spec, &u);
    let mut history =
        vec![IterRecord { energy: energy_u, residual: relative_residual(spec, &u), step: 0.0 }];

    let mut alpha_seed = config.step0;
    let mut step_cap = 1e3;
    let mut converged = false;
    let mut tangent_grad_norm = f64::NAN;
    let mut recent = [energy_u; NONMONO];
    let mut recent_at = 0;
    let mut best = (energy_u, u.clone());
    // Last (state, direction) pair behind the spectral step length.
    let mut prev_bb: Option<(State, State)> = None;
    let mut bb_flip = false;

    for _ in 0..config.max_iters {
        let g = gradient(spec, &u);
        let b = group_norms_sq(spec, &u);
        let h1_scale = libm::sqrt(b.iter().sum::<f64>());
        let vt = tangent_project(spec, &u, &neg(&g)).map_err(SolverError::Projection)?;
        tangent_grad_norm = state_norm_l2(grid, &vt);
        let residual = relative_residual(spec, &u);
        if tangent_grad_norm <= config.tol_tangent_grad * h1_scale && residual <= config.tol_nehari {
            converged = true;
            break;
        }

        let lifted = sobolev_lift(spec, &u, &g);
        let mut dir = tangent_project(spec, &u, &neg(&lifted)).map_err(SolverError::Projection)?;
        if !dir.is_finite() {
            break;
        }
        let mut slope = state_inner_l2(grid, &g, &dir);
        let mut on_fallback = false;
        if !(slope < 0.0) {
            // Preconditioned direction lost descent to roundoff; fall back
            // to the plain tangent gradient.
            dir = vt.clone();
            slope = state_inner_l2(grid, &g, &dir);
            on_fallback = true;
        }
        if !(slope < 0.0) {
            break;
        }

        // Barzilai–Borwein step length from the last displacement and
        // direction change. Plain preconditioned descent crawls through the
        // shallow valleys this problem develops (nearly-translatable bump
        // configurations); the spectral step adapts to that curvature.
        let mut alpha0 = alpha_seed;
        if !on_fallback {
            if let Some((u_prev, dir_prev)) = &prev_bb {
                let s = axpy(&u, -1.0, u_prev);
                let y = axpy(dir_prev, -1.0, &dir);
                let ss = state_inner_l2(grid, &s, &s);
                let sy = state_inner_l2(grid, &s, &y);
                let yy = state_inner_l2(grid, &y, &y);
                if ss > 0.0 {
                    // Alternate the two spectral formulas; a single one can
                    // lock into a cycle and crawl.
                    bb_flip = !bb_flip;
                    let bb = if sy > 0.0 {
                        if bb_flip && yy > 0.0 { sy / yy } else { ss / sy }
                    } else {
                        // Negative curvature along the last segment: take
                        // the longest step the search will consider.
                        1e3
                    };
                    if bb.is_finite() {
                        alpha0 = bb.clamp(1e-10, 1e3);
                    }
                }
            }
        }
        let alpha0 = alpha0.min(step_cap);
        let e_ref = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        // Backtracking from the spectral seed; near the plateau the
        // preconditioned direction can lose its descent quality to
        // cancellation, so a stalled search gets one retry along the plain
        // tangent gradient before the iteration gives up.
        let u_at_eval = u.clone();
        let mut step = search_step(
            spec, config, &prep, &dir, slope, alpha0, e_ref, &mut u, &mut energy_u, &mut step_cap,
        );
        let mut accepted_on_fallback = on_fallback;
        if step.is_none() && !on_fallback {
            let slope_vt = state_inner_l2(grid, &g, &vt);
            if slope_vt < 0.0 {
                step = search_step(
                    spec, config, &prep, &vt, slope_vt, alpha0, e_ref, &mut u, &mut energy_u,
                    &mut step_cap,
                );
                accepted_on_fallback = true;
            }
        }
        let Some(alpha) = step else { break };
        prev_bb = if accepted_on_fallback { None } else { Some((u_at_eval, dir)) };
        alpha_seed = (alpha * 2.0).min(1e3);
        recent_at = (recent_at + 1) % NONMONO;
        recent[recent_at] = energy_u;
        if energy_u < best.0 {
            best = (energy_u, u.clone());
        }
        history.push(IterRecord {
            energy: energy_u,
            residual: relative_residual(spec, &u),
            step: alpha,
        });
    }

    if !converged && best.0 < energy_u {
        // The budget ran out mid-overshoot; report the best iterate instead.
        u = best.1;
        energy_u = best.0;
        let g = gradient(spec, &u);
        let vt = tangent_project(spec, &u, &neg(&g)).map_err(SolverError::Projection)?;
        tangent_grad_norm = state_norm_l2(grid, &vt);
    }

    let multiplier_norm = match lagrange_multipliers(spec, &u) {
        Ok(mu) => libm::sqrt(mu.iter().map(|x| x * x).sum()),
        Err(_) => f64::NAN,
    };
    let component_l4 = (0..u.d()).map(|i| norm_l4_sq(grid, u.component(i))).collect();
    let iterations = history.len() - 1;
    Ok(SolverResult {
        energy: energy_u,
        iterations,
        tangent_grad_norm,
        nehari_residual: relative_residual(spec, &u),
        in_e: is_in_e(spec, &u),
        multiplier_norm,
        component_l4,
        converged,
        history,
        state: u,
    })
}

/// Outcome of [`multi_start`]: the winning run plus a per-restart summary.
#[derive(Clone, Debug)]
pub struct MultiStart {
    pub best: SolverResult,
    pub attempts: Vec<RestartDiagnostic>,
}

fn derive_seed(base: u64, k: usize) -> u64 {
    // Seeds depend only on (base, k), so enlarging `restarts` keeps the
    // earlier runs bit-identical.
    base ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k as u64 + 1)
}

/// Runs `config.restarts` independent minimizations from seeded guesses,
/// alternating guess styles, and returns the lowest-energy converged run.
/// Ties break toward smaller tangent gradient, then earlier seed. Errors
/// only when no restart converged, carrying each restart's outcome and the
/// best unconverged iterate.
pub fn multi_start(spec: &ProblemSpec, config: &SolverConfig) -> Result<MultiStart, SolverError> {
    config.assert_valid();
    let mut attempts = Vec::with_capacity(config.restarts);
    let mut best: Option<SolverResult> = None;
    let mut best_failed: Option<SolverResult> = None;

    for k in 0..config.restarts {
        let style = if k % 2 == 0 { GuessStyle::SegregatedBumps } else { GuessStyle::RandomPositive };
        let seed = derive_seed(config.rng_seed, k);
        let outcome = initial_guess(spec, seed, &style).and_then(|u0| minimize(spec, config, &u0));
        match outcome {
            Ok(res) => {
                attempts.push(RestartDiagnostic {
                    index: k,
                    style: style.name(),
                    converged: res.converged,
                    energy: Some(res.energy),
                    error: None,
                });
                if res.converged {
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            res.energy < b.energy
                                || (res.energy == b.energy && res.tangent_grad_norm < b.tangent_grad_norm)
                        }
                    };
                    if better {
                        best = Some(res);
                    }
                } else {
                    let better = best_failed.as_ref().map_or(true, |b| res.energy < b.energy);
                    if better {
                        best_failed = Some(res);
                    }
                }
            }
            Err(e) => attempts.push(RestartDiagnostic {
                index: k,
                style: style.name(),
                converged: false,
                energy: None,
                error: Some(format!("{e}")),
            }),
        }
    }

    match best {
        Some(best) => {
            let best = lattice_polish(spec, config, best, &mut attempts);
            Ok(MultiStart { best, attempts })
        }
        None => Err(SolverError::AllRestartsFailed { attempts, best: best_failed.map(Box::new) }),
    }
}

fn shift_by_one(f: &Field, to_the_right: bool) -> Field {
    let v = f.values();
    let n = v.len();
    let mut out = vec![0.0; n];
    if to_the_right {
        out[1..n].copy_from_slice(&v[..n - 1]);
    } else {
        out[..n - 1].copy_from_slice(&v[1..n]);
    }
    Field::from_values(out)
}

/// Walks the converged state through single-node component translations,
/// keeping re-minimized shifts that lower the energy. The discrete grid
/// pins bump positions — translation costs next to nothing in the
/// continuum, but on the grid each registration is its own shallow local
/// minimum, and gradient descent cannot hop between them.
fn lattice_polish(
    spec: &ProblemSpec,
    config: &SolverConfig,
    mut best: SolverResult,
    attempts: &mut Vec<RestartDiagnostic>,
) -> SolverResult {
    if !best.converged {
        return best;
    }
    let d = spec.d();
    let n = spec.grid().n_interior();
    for _round in 0..n {
        let mut improved = false;
        for i in 0..d {
            for to_the_right in [false, true] {
                let mut comps: Vec<Field> = best.state.components().to_vec();
                comps[i] = shift_by_one(&comps[i], to_the_right);
                let Ok(w) = minimize(spec, config, &State::new(comps)) else { continue };
                if w.converged && w.energy < best.energy - 1e-14 * (1.0 + libm::fabs(best.energy)) {
                    attempts.push(RestartDiagnostic {
                        index: attempts.len(),
                        style: "lattice_shift",
                        converged: true,
                        energy: Some(w.energy),
                        error: None,
                    });
                    best = w;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Grid;
    use crate::nehari::{interaction_matrix, PsiStatus};
    use crate::problem::Decomposition;
    use approx::assert_relative_eq;

    fn scalar_spec() -> ProblemSpec {
        let g = Grid::interval(8.0, 90).unwrap();
        ProblemSpec::from_constants(g, Decomposition::single_group(1), &[1.0], &[vec![1.0]]).unwrap()
    }

    fn competitive_spec(beta12: f64, n: usize) -> ProblemSpec {
        let g = Grid::interval(8.0, n).unwrap();
        ProblemSpec::from_constants(
            g,
            Decomposition::singletons(2),
            &[1.0, 1.0],
            &[vec![1.0, beta12], vec![beta12, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn scalar_ground_state_converges() {
        let spec = scalar_spec();
        let config = SolverConfig::for_spec(&spec);
        let u0 = initial_guess(&spec, 7, &GuessStyle::SegregatedBumps).unwrap();
        let res = minimize(&spec, &config, &u0).unwrap();
        assert!(res.converged, "solver did not converge: {} iters", res.iterations);
        assert!(res.nehari_residual <= config.tol_nehari);
        // Natural-constraint behavior: multipliers and free gradient tiny.
        let b: f64 = group_norms_sq(&spec, &res.state).iter().sum();
        assert!(res.multiplier_norm <= 1e-5 * b, "multipliers {} vs {}", res.multiplier_norm, b);
        let free = state_norm_l2(spec.grid(), &gradient(&spec, &res.state));
        let unorm = state_norm_l2(spec.grid(), &res.state);
        assert!(free <= 1e-4 * unorm, "free gradient {free} vs state norm {unorm}");
        // The reported energy is the best the iteration ever saw.
        let least =
            res.history.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
        assert!(res.energy <= least + 1e-12 * least.abs());
        // Ground state is single-signed.
        assert!(res.state.component(0).min() >= 0.0);
    }

    #[test]
    fn determinism_same_seed_same_bits() {
        let spec = competitive_spec(-1.5, 70);
        let config = SolverConfig { restarts: 2, ..SolverConfig::for_spec(&spec) };
        let a = multi_start(&spec, &config).unwrap();
        let b = multi_start(&spec, &config).unwrap();
        assert_eq!(a.best.energy.to_bits(), b.best.energy.to_bits());
        assert_eq!(a.best.iterations, b.best.iterations);
    }

    #[test]
    fn warm_start_on_converged_state_is_a_fixed_point() {
        let spec = scalar_spec();
        let config = SolverConfig::for_spec(&spec);
        let u0 = initial_guess(&spec, 3, &GuessStyle::SegregatedBumps).unwrap();
        let res = minimize(&spec, &config, &u0).unwrap();
        assert!(res.converged);
        let again = minimize(&spec, &config, &res.state).unwrap();
        assert_eq!(again.iterations, 0, "converged state should satisfy tolerances immediately");
        assert_relative_eq!(again.energy, res.energy, max_relative = 1e-12);
    }

    #[test]
    fn segregated_guess_is_diagonal_and_deterministic() {
        let spec = competitive_spec(-2.0, 80);
        let a = initial_guess(&spec, 11, &GuessStyle::SegregatedBumps).unwrap();
        let b = initial_guess(&spec, 11, &GuessStyle::SegregatedBumps).unwrap();
        assert_eq!(a, b);
        let mat = interaction_matrix(&spec, &a);
        assert_eq!(mat.entry(0, 1), 0.0, "windows must not overlap");
        assert!(is_in_e(&spec, &a).ok);
        assert!(relative_residual(&spec, &a) <= 1e-10);
    }

    #[test]
    fn pure_competition_lands_inside_cone_without_enforcement() {
        let spec = competitive_spec(-3.0, 80);
        let config = SolverConfig::for_spec(&spec);
        assert!(!config.require_e, "pure competition should drop the cone constraint");
        let ms = multi_start(&spec, &config).unwrap();
        assert!(ms.best.converged);
        assert!(ms.best.in_e.ok, "competitive minimizer should be diagonally dominant");
        assert!(ms.best.component_l4.iter().all(|&x| x > 1e-3));
    }

    #[test]
    fn multi_start_single_restart_matches_minimize() {
        let spec = scalar_spec();
        let config = SolverConfig { restarts: 1, ..SolverConfig::for_spec(&spec) };
        let ms = multi_start(&spec, &config).unwrap();
        let u0 = initial_guess(&spec, derive_seed(config.rng_seed, 0), &GuessStyle::SegregatedBumps).unwrap();
        let direct = minimize(&spec, &config, &u0).unwrap();
        assert_eq!(ms.best.energy.to_bits(), direct.energy.to_bits());
        assert_eq!(ms.attempts.len(), 1);
    }

    #[test]
    fn nested_restart_sets_are_monotone() {
        let spec = competitive_spec(-1.0, 60);
        let few = SolverConfig { restarts: 2, ..SolverConfig::for_spec(&spec) };
        let many = SolverConfig { restarts: 4, ..SolverConfig::for_spec(&spec) };
        let a = multi_start(&spec, &few).unwrap();
        let b = multi_start(&spec, &many).unwrap();
        assert!(b.best.energy <= a.best.energy + 1e-12 * a.best.energy.abs());
    }

    #[test]
    fn multiplier_norm_is_large_off_criticality() {
        // Fresh projected noise is on the constraint set but far from
        // critical; the least-squares multipliers must see that.
        let spec = competitive_spec(-0.5, 70);
        let guess = initial_guess(&spec, 42, &GuessStyle::RandomPositive).unwrap();
        let mu = lagrange_multipliers(&spec, &guess).unwrap();
        let norm = libm::sqrt(mu.iter().map(|x| x * x).sum());
        let b: f64 = group_norms_sq(&spec, &guess).iter().sum();
        assert!(norm > 1e-3 * b, "noise should not look critical: {norm} vs scale {b}");
    }

    #[test]
    fn unprojectable_start_is_a_restart_signal() {
        // Strong competition with heavy overlap: Ψ is unbounded for the
        // all-ones-ish state, so projection must fail.
        let spec = competitive_spec(-50.0, 60);
        let n = spec.grid().n_interior();
        let flat = State::new(vec![
            Field::from_fn(spec.grid(), |x| (x * (8.0 - x)) / 16.0),
            Field::from_fn(spec.grid(), |x| (x * (8.0 - x)) / 16.0),
        ]);
        assert_eq!(flat.n(), n);
        let config = SolverConfig::for_spec(&spec);
        match minimize(&spec, &config, &flat) {
            Err(SolverError::Projection(NehariError::ProjectionFailed(PsiStatus::Unbounded)))
            | Err(SolverError::GuessFailed(_)) => {}
            other => panic!("expected unbounded projection failure, got {other:?}"),
        }
    }
}
