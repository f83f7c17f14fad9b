//! The four subcommands. Each returns `Ok(())` or a [`CliError`] whose
//! exit code follows the contract: 2 config/IO trouble, 3 convergence
//! failure, 4 violated invariant. Outputs are written before convergence
//! errors are raised, so a failed run still leaves its diagnostics behind.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use solwave::analysis::{bounds_report, second_variation_test, segregation_record};
use solwave::discretize::{describe, norm_l4_sq, Field, Grid};
use solwave::nehari::{
    gradient, group_norms_sq, is_in_e, nehari_residuals, state_inner_l2, InteractionMatrix,
    PsiStatus, State,
};
use solwave::oracle::{brute_force_psi_max, eig_min_sym, fd_directional, small_instance_ground_state};
use solwave::problem::{detect_nonexistence, validate, Decomposition, ProblemSpec};
use solwave::solver::{
    lagrange_multipliers, minimize, multi_start, MultiStart, SolverConfig, SolverError,
    SolverResult,
};

use crate::config::RunConfig;
use crate::report::{
    self, read_solution_csv, svg_components, svg_loglog, write_solution_csv, write_sweep_csv,
    FORMAT_VERSION,
};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Convergence(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Convergence(m) => write!(f, "convergence: {m}"),
            CliError::Invariant(m) => write!(f, "invariant: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn io_err(e: impl fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value is always serializable");
    text.push('\n');
    fs::write(path, text).map_err(io_err)
}

fn solve_error(e: SolverError) -> CliError {
    CliError::Convergence(e.to_string())
}

fn hypotheses_json(spec: &ProblemSpec) -> Value {
    let rep = validate(spec);
    json!({
        "h0_ok": rep.h0_ok,
        "h1_ok": rep.h1_ok,
        "max_pos_part_k2": rep.max_pos_part_k2,
        "min_competition_k2": rep.min_competition_k2,
        "pure_competition_k2": rep.pure_competition_k2,
        "nonexistence_pairs": rep.nonexistence_pairs,
    })
}

fn result_json(spec: &ProblemSpec, ms: &MultiStart) -> Value {
    let best = &ms.best;
    let bounds = bounds_report(spec, &best.state);
    let max_l4 = best.component_l4.iter().cloned().fold(0.0f64, f64::max);
    let min_l4 = best.component_l4.iter().cloned().fold(f64::INFINITY, f64::min);
    let detector = detect_nonexistence(spec);
    // A collapsed component together with a structurally dominated pair is
    // the expected signature of a regime with no fully nontrivial least
    // energy state.
    let collapsed = min_l4 < 1e-3 * max_l4;
    let nonexistence_consistent = !detector.is_empty() && (collapsed || !best.converged);
    json!({
        "format_version": FORMAT_VERSION,
        "grid": describe(spec.grid()),
        "groups": spec.decomposition().bounds(),
        "energy": best.energy,
        "iterations": best.iterations,
        "converged": best.converged,
        "tangent_grad_norm": best.tangent_grad_norm,
        "nehari_residual": best.nehari_residual,
        "multiplier_norm": best.multiplier_norm,
        "component_l4": best.component_l4,
        "in_e": { "ok": best.in_e.ok, "margins": best.in_e.margins },
        "bounds": {
            "valid": bounds.valid,
            "total_h1": bounds.total_h1,
            "group_l4": bounds.group_l4,
            "competitive_mass": bounds.competitive_mass,
            "cooperative_mass": bounds.cooperative_mass,
            "energy_identity_gap": bounds.energy_identity_gap,
            "sobolev_constant": bounds.sobolev_constant,
            "sobolev_gap": bounds.sobolev_gap,
        },
        "hypotheses": hypotheses_json(spec),
        "nonexistence_consistent": nonexistence_consistent,
        "restarts": ms
            .attempts
            .iter()
            .map(|a| {
                json!({
                    "index": a.index,
                    "style": a.style,
                    "converged": a.converged,
                    "energy": a.energy,
                    "error": a.error,
                })
            })
            .collect::<Vec<_>>(),
    })
}

fn reload_and_verify(path: &Path, grid: &Grid, state: &State) -> Result<(), CliError> {
    let (coords, cols) = read_solution_csv(path).map_err(CliError::Io)?;
    let ok = coords.len() == grid.n_interior()
        && cols.len() == state.d()
        && coords
            .iter()
            .enumerate()
            .all(|(k, x)| x.to_bits() == grid.node_coord(k).to_bits())
        && (0..state.d()).all(|i| {
            cols[i]
                .iter()
                .zip(state.component(i).values())
                .all(|(a, b)| a.to_bits() == b.to_bits())
        });
    if ok {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("{} did not round-trip bitwise", path.display())))
    }
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err)?;
    let ms = multi_start(&cfg.spec, &cfg.solver).map_err(solve_error)?;
    let best = &ms.best;

    let csv = out.join("solution.csv");
    write_solution_csv(&csv, cfg.spec.grid(), &best.state).map_err(io_err)?;
    reload_and_verify(&csv, cfg.spec.grid(), &best.state)?;
    write_json(&out.join("result.json"), &result_json(&cfg.spec, &ms))?;
    fs::write(
        out.join("components.svg"),
        svg_components(cfg.spec.grid(), &best.state, "components"),
    )
    .map_err(io_err)?;

    println!(
        "solve: energy {} after {} iterations, converged = {}, outputs in {}",
        report::fmt_f64(best.energy),
        best.iterations,
        best.converged,
        out.display()
    );
    if !best.converged {
        return Err(CliError::Convergence(format!(
            "best of {} restarts stopped with tangent gradient {}",
            ms.attempts.len(),
            report::fmt_f64(best.tangent_grad_norm)
        )));
    }
    Ok(())
}

struct SweepPoint {
    b: f64,
    warm_energy: Option<f64>,
    fresh_energy: Option<f64>,
    used: &'static str,
    converged: bool,
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path, parallel_fresh: bool) -> Result<(), CliError> {
    let plan = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep requires a [sweep] section".into()))?;
    fs::create_dir_all(out).map_err(io_err)?;

    let specs: Vec<ProblemSpec> =
        plan.values.iter().map(|&v| cfg.spec.with_coupling_constant(plan.i, plan.j, v)).collect();
    // Adapt the cone policy per point: a sweep can cross from cooperation
    // into competition, where enforcing the open cone is wrong.
    let configs: Vec<SolverConfig> = specs
        .iter()
        .map(|s| {
            let mut c = cfg.solver.clone();
            c.require_e = cfg.solver.require_e && !validate(s).pure_competition_k2;
            c
        })
        .collect();

    let fresh: Vec<Result<MultiStart, SolverError>> = if parallel_fresh {
        specs.par_iter().zip(configs.par_iter()).map(|(s, c)| multi_start(s, c)).collect()
    } else {
        specs.iter().zip(configs.iter()).map(|(s, c)| multi_start(s, c)).collect()
    };

    let mut rows = Vec::new();
    let mut log: Vec<SweepPoint> = Vec::new();
    let mut prev: Option<State> = None;
    let mut violation: Option<String> = None;
    let mut all_converged = true;
    let mut last_state: Option<State> = None;

    for (k, (spec_k, &b)) in specs.iter().zip(&plan.values).enumerate() {
        let fresh_best: Option<&SolverResult> = fresh[k].as_ref().ok().map(|m| &m.best);
        let warm: Option<SolverResult> =
            prev.as_ref().and_then(|p| minimize(spec_k, &configs[k], p).ok());

        if let (Some(w), Some(f)) = (&warm, fresh_best) {
            if w.energy > f.energy + 1e-8 {
                violation = Some(format!(
                    "warm start at b = {} found {} but a fresh multi-start found {}",
                    report::fmt_f64(b),
                    report::fmt_f64(w.energy),
                    report::fmt_f64(f.energy)
                ));
            }
        }

        let (chosen, used): (&SolverResult, &'static str) = match (&warm, fresh_best) {
            (Some(w), Some(f)) if w.energy <= f.energy => (w, "warm"),
            (_, Some(f)) => (f, "fresh"),
            (Some(w), None) => (w, "warm"),
            (None, None) => {
                log.push(SweepPoint {
                    b,
                    warm_energy: None,
                    fresh_energy: None,
                    used: "none",
                    converged: false,
                });
                write_sweep_log(out, &log)?;
                return Err(CliError::Convergence(format!(
                    "no feasible state at b = {}",
                    report::fmt_f64(b)
                )));
            }
        };
        all_converged &= chosen.converged;
        log.push(SweepPoint {
            b,
            warm_energy: warm.as_ref().map(|w| w.energy),
            fresh_energy: fresh_best.map(|f| f.energy),
            used,
            converged: chosen.converged,
        });
        rows.push(segregation_record(spec_k, &chosen.state, b));
        prev = Some(chosen.state.clone());
        last_state = Some(chosen.state.clone());
    }

    write_sweep_csv(&out.join("sweep.csv"), &cfg.spec.decomposition().k2_pairs(), &rows)
        .map_err(io_err)?;
    write_sweep_log(out, &log)?;
    if let Some(state) = &last_state {
        write_solution_csv(&out.join("final_state.csv"), cfg.spec.grid(), state).map_err(io_err)?;
    }

    // Overlap of the swept pair against |b|, both on log axes.
    let pairs = cfg.spec.decomposition().k2_pairs();
    let key = (plan.i.min(plan.j), plan.i.max(plan.j));
    let col = pairs.iter().position(|&p| p == key).expect("validated as a cross-group pair");
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.b, r.overlaps[col])).collect();
    fs::write(
        out.join("overlap.svg"),
        svg_loglog(&pts, "overlap decay", "log10 |b|", "log10 overlap"),
    )
    .map_err(io_err)?;

    for p in &log {
        println!(
            "sweep b = {:>12}: used {:>5}, energy {}, converged = {}",
            report::fmt_f64(p.b),
            p.used,
            p.warm_energy
                .or(p.fresh_energy)
                .map_or_else(|| "-".to_owned(), report::fmt_f64),
            p.converged
        );
    }

    if let Some(msg) = violation {
        return Err(CliError::Invariant(msg));
    }
    if !all_converged {
        return Err(CliError::Convergence("one or more sweep points did not converge".into()));
    }
    Ok(())
}

fn write_sweep_log(out: &Path, log: &[SweepPoint]) -> Result<(), CliError> {
    let points: Vec<Value> = log
        .iter()
        .map(|p| {
            json!({
                "b": p.b,
                "warm_energy": p.warm_energy,
                "fresh_energy": p.fresh_energy,
                "used": p.used,
                "converged": p.converged,
            })
        })
        .collect();
    write_json(&out.join("sweep.json"), &json!({ "format_version": FORMAT_VERSION, "points": points }))
}

pub fn cmd_check(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err)?;
    let spec = &cfg.spec;
    let hypotheses = hypotheses_json(spec);
    let detector = detect_nonexistence(spec);
    println!("hypotheses: {hypotheses}");
    if !detector.is_empty() {
        let shown: Vec<(usize, usize)> = detector.iter().map(|&(i, j)| (i + 1, j + 1)).collect();
        println!("dominated pairs (no fully nontrivial minimizer expected): {shown:?}");
    }

    let mut battery: Vec<(&str, bool)> = Vec::new();
    let mut failures = Vec::new();
    if let Some(path) = &cfg.check_solution {
        let (_, cols) = read_solution_csv(path).map_err(CliError::Io)?;
        if cols.len() != spec.d() {
            return Err(CliError::Config(format!(
                "solution has {} components, config expects {}",
                cols.len(),
                spec.d()
            )));
        }
        if cols[0].len() != spec.grid().n_interior() {
            return Err(CliError::Config(format!(
                "solution has {} nodes, grid expects {}",
                cols[0].len(),
                spec.grid().n_interior()
            )));
        }
        let u = State::new(cols.into_iter().map(Field::from_values).collect());

        let b = group_norms_sq(spec, &u);
        let res = nehari_residuals(spec, &u);
        let on_manifold = res.iter().zip(&b).all(|(r, bh)| r.abs() <= 1e-8 * (1.0 + bh));
        battery.push(("on_constraint_set", on_manifold));

        let membership = is_in_e(spec, &u);
        battery.push(("interaction_matrix_dominant", membership.ok));

        let bounds = bounds_report(spec, &u);
        battery.push(("a_priori_bounds", bounds.valid && bounds.sobolev_holds()));
        battery.push(("competition_dominated", bounds.competition_dominated()));

        let b_total: f64 = b.iter().sum();
        let multiplier_small = lagrange_multipliers(spec, &u)
            .map(|lam| {
                let norm = libm::sqrt(lam.iter().map(|l| l * l).sum::<f64>());
                norm <= 1e-5 * b_total
            })
            .unwrap_or(false);
        battery.push(("multipliers_vanish", multiplier_small));

        let l4: Vec<f64> = (0..spec.d()).map(|i| norm_l4_sq(spec.grid(), u.component(i))).collect();
        let max_l4 = l4.iter().cloned().fold(0.0f64, f64::max);
        let mut variations = Vec::new();
        for zero in 0..spec.d() {
            if l4[zero] > 1e-6 * max_l4 {
                continue;
            }
            let dec = spec.decomposition();
            for donor in dec.group_members(dec.group_of(zero)) {
                if donor == zero || l4[donor] <= 1e-6 * max_l4 {
                    continue;
                }
                if let Ok(v) = second_variation_test(spec, &u, zero, donor) {
                    variations.push(json!({
                        "zero": zero + 1,
                        "donor": donor + 1,
                        "value": v,
                        "unstable": v < 0.0,
                    }));
                }
            }
        }
        for (name, ok) in &battery {
            println!("check {name}: {}", if *ok { "PASS" } else { "FAIL" });
            if !ok {
                failures.push((*name).to_owned());
            }
        }
        for v in &variations {
            println!("second variation {v}");
        }
        write_json(
            &out.join("check.json"),
            &json!({
                "format_version": FORMAT_VERSION,
                "hypotheses": hypotheses,
                "battery": battery
                    .iter()
                    .map(|(n, ok)| json!({ "name": n, "ok": ok }))
                    .collect::<Vec<_>>(),
                "second_variation": variations,
            }),
        )?;
    } else {
        write_json(
            &out.join("check.json"),
            &json!({ "format_version": FORMAT_VERSION, "hypotheses": hypotheses }),
        )?;
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("failed checks: {}", failures.join(", "))))
    }
}

pub fn cmd_oracle(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.rng_seed ^ 0xa11c_e5ed);
    let mut table: Vec<(String, bool, String)> = Vec::new();

    // Active-set scaling maximizer against plain grid search.
    let mut worst = 0.0f64;
    let mut ok = true;
    for m in [2usize, 3] {
        let cases = if m == 2 { 12 } else { 6 };
        for _ in 0..cases {
            let mut mat = vec![0.0; m * m];
            for h in 0..m {
                mat[h * m + h] = 1.0 + rng.gen::<f64>();
            }
            let cap = 0.4 / (m - 1) as f64;
            for h in 0..m {
                for k in h + 1..m {
                    let v = (2.0 * rng.gen::<f64>() - 1.0) * cap;
                    mat[h * m + k] = v;
                    mat[k * m + h] = v;
                }
            }
            let b: Vec<f64> = (0..m).map(|_| 0.5 + 1.5 * rng.gen::<f64>()).collect();
            let fast = solwave::nehari::orthant_max(&InteractionMatrix::from_entries(m, mat.clone()), &b)
                .expect("dominant instance");
            if fast.status != PsiStatus::Interior {
                ok = false;
                continue;
            }
            let slow = brute_force_psi_max(&mat, m, &b, 4.0, if m == 2 { 400 } else { 160 });
            for h in 0..m {
                let diff = (fast.t[h] - slow[h]).abs();
                worst = worst.max(diff);
                ok &= diff <= 1e-3 * (1.0 + fast.t[h].abs());
            }
        }
    }
    table.push(("scaling maximizer vs grid search".into(), ok, format!("worst |Δt| = {worst:.2e}")));

    // Directional derivatives of the energy against the nodal gradient.
    let probe = ProblemSpec::from_constants(
        Grid::interval(6.0, 48).expect("static grid"),
        Decomposition::singletons(2),
        &[1.0, 1.5],
        &[vec![1.0, -0.6], vec![-0.6, 1.2]],
    )
    .expect("static spec");
    let mut ok = true;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let smooth = |rng: &mut ChaCha8Rng| {
            let a = rng.gen::<f64>();
            let ph = rng.gen::<f64>();
            Field::from_fn(probe.grid(), |x| {
                0.3 + a * libm::sin(x + ph) * libm::sin(x + ph) * 0.5
            })
        };
        let u = State::new(vec![smooth(&mut rng), smooth(&mut rng)]);
        let phi = State::new(vec![smooth(&mut rng), smooth(&mut rng)]);
        let fd = fd_directional(&probe, &u, &phi, 1e-5);
        let exact = state_inner_l2(probe.grid(), &gradient(&probe, &u), &phi);
        let rel = (fd - exact).abs() / (1.0 + exact.abs());
        worst = worst.max(rel);
        ok &= rel <= 1e-5;
    }
    table.push(("finite differences vs gradient".into(), ok, format!("worst rel = {worst:.2e}")));

    // Strict dominance forces a positive spectrum.
    let mut ok = true;
    let mut least = f64::INFINITY;
    for _ in 0..10 {
        let m = 3;
        let mut mat = vec![0.0; m * m];
        for h in 0..m {
            mat[h * m + h] = 1.0 + 2.0 * rng.gen::<f64>();
        }
        for h in 0..m {
            for k in h + 1..m {
                let v = (2.0 * rng.gen::<f64>() - 1.0) * 0.45;
                mat[h * m + k] = v;
                mat[k * m + h] = v;
            }
        }
        let lam = eig_min_sym(&mat, m).expect("symmetric by construction");
        least = least.min(lam);
        ok &= lam > 0.0;
    }
    table.push(("dominance implies positive spectrum".into(), ok, format!("min λ = {least:.3}")));

    // Full solver against the tiny-grid reference minimizer.
    let mut ok = true;
    let mut worst = 0.0f64;
    for (label, spec) in [
        (
            "d=1",
            ProblemSpec::from_constants(
                Grid::interval(20.0, 20).expect("static grid"),
                Decomposition::single_group(1),
                &[1.0],
                &[vec![2.0]],
            )
            .expect("static spec"),
        ),
        (
            "d=2",
            ProblemSpec::from_constants(
                Grid::interval(20.0, 20).expect("static grid"),
                Decomposition::singletons(2),
                &[1.0, 1.0],
                &[vec![1.0, -0.8], vec![-0.8, 1.5]],
            )
            .expect("static spec"),
        ),
    ] {
        let mut config = SolverConfig::for_spec(&spec);
        config.rng_seed = cfg.solver.rng_seed;
        let fast = multi_start(&spec, &config).map_err(solve_error)?;
        let (slow_e, _) = small_instance_ground_state(&spec)
            .expect("instance is within the reference size limits");
        let rel = (fast.best.energy - slow_e).abs() / slow_e.abs();
        worst = worst.max(rel);
        ok &= rel <= 1e-4;
        let _ = label;
    }
    table.push(("solver vs reference minimizer".into(), ok, format!("worst rel = {worst:.2e}")));

    let mut all_ok = true;
    for (name, ok, detail) in &table {
        println!("oracle {name}: {} ({detail})", if *ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    }
    write_json(
        &out.join("oracle.json"),
        &json!({
            "format_version": FORMAT_VERSION,
            "checks": table
                .iter()
                .map(|(n, ok, d)| json!({ "name": n, "ok": ok, "detail": d }))
                .collect::<Vec<_>>(),
        }),
    )?;
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Invariant("oracle cross-validation failed".into()))
    }
}
