//! Acceptance battery: the structural claims the library stands on, checked
//! end to end at pinned tolerances. One test per criterion, each printing a
//! single PASS line so a full run reads as a checklist.

use std::fs;
use std::process::Command;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use solwave::analysis::{second_variation_test, segregation_record};
use solwave::discretize::{norm_l2, norm_l4_sq, Field, Grid};
use solwave::nehari::{
    energy, gradient, group_norms_sq, interaction_matrix, is_in_e, nehari_residuals, orthant_max,
    project_to_nehari, state_inner_l2, state_norm_l2, InteractionMatrix, PsiStatus, State,
};
use solwave::oracle::{brute_force_psi_max, eig_min_sym, fd_directional, small_instance_ground_state};
use solwave::problem::{detect_nonexistence, Coefficient, Decomposition, ProblemSpec};
use solwave::solver::{minimize, multi_start, SolverConfig};

fn random_grid(rng: &mut ChaCha8Rng) -> Grid {
    if rng.gen::<f64>() < 0.7 {
        let size = 5.0 + 10.0 * rng.gen::<f64>();
        let n = 24 + rng.gen_range(0..30);
        Grid::interval(size, n).unwrap()
    } else {
        let r = 4.0 + 4.0 * rng.gen::<f64>();
        let n = 24 + rng.gen_range(0..24);
        Grid::radial_ball(r, 3, n).unwrap()
    }
}

/// Random spec with d ≤ 4 components in m ≤ 3 groups: strong diagonals,
/// weak same-group couplings, competitive cross-group couplings.
fn random_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let d = 1 + rng.gen_range(0..4usize);
    let mut sizes = Vec::new();
    let mut left = d;
    while left > 0 && sizes.len() < 2 {
        let take = 1 + rng.gen_range(0..left);
        sizes.push(take);
        left -= take;
    }
    if left > 0 {
        sizes.push(left);
    }
    let grid = random_grid(rng);
    let n = grid.n_interior();
    let mut bounds = vec![0];
    for s in sizes {
        bounds.push(bounds.last().unwrap() + s);
    }
    let dec = Decomposition::new(bounds).unwrap();
    let potentials: Vec<Coefficient> =
        (0..d).map(|_| Coefficient::constant(n, 0.5 + 1.5 * rng.gen::<f64>())).collect();
    let mut beta = vec![vec![0.0; d]; d];
    for i in 0..d {
        beta[i][i] = 1.0 + rng.gen::<f64>();
        for j in i + 1..d {
            let v = if dec.same_group(i, j) {
                0.4 * (2.0 * rng.gen::<f64>() - 1.0)
            } else {
                -1.5 * rng.gen::<f64>()
            };
            beta[i][j] = v;
            beta[j][i] = v;
        }
    }
    let couplings: Vec<Vec<Coefficient>> = beta
        .iter()
        .map(|row| row.iter().map(|&v| Coefficient::constant(n, v)).collect())
        .collect();
    ProblemSpec::new(grid, dec, potentials, couplings, None).unwrap()
}

fn random_state(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> State {
    let comps = (0..spec.d())
        .map(|_| {
            let amp = 0.4 + rng.gen::<f64>();
            let freq = 1.0 + 2.0 * rng.gen::<f64>();
            let phase = rng.gen::<f64>();
            let size = spec.grid().size();
            Field::from_fn(spec.grid(), |x| {
                let envelope = libm::sin(core::f64::consts::PI * x / size);
                amp * envelope * envelope * (1.2 + libm::sin(freq * x + phase))
            })
        })
        .collect();
    State::new(comps)
}

fn dominant_matrix(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut mat = vec![0.0; m * m];
    for h in 0..m {
        mat[h * m + h] = 1.0 + rng.gen::<f64>();
    }
    if m > 1 {
        let cap = 0.4 / (m - 1) as f64;
        for h in 0..m {
            for k in h + 1..m {
                let v = (2.0 * rng.gen::<f64>() - 1.0) * cap;
                mat[h * m + k] = v;
                mat[k * m + h] = v;
            }
        }
    }
    mat
}

#[test]
fn c01_projection_lands_on_the_constraint_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut done = 0;
    let mut attempts = 0;
    let mut worst = 0.0f64;
    while done < 100 {
        attempts += 1;
        assert!(attempts < 2000, "only {done} projectable draws in {attempts} attempts");
        let spec = random_spec(&mut rng);
        let u = random_state(&spec, &mut rng);
        let Ok(p) = project_to_nehari(&spec, &u) else { continue };
        let b = group_norms_sq(&spec, &p);
        let res = nehari_residuals(&spec, &p);
        for (r, bh) in res.iter().zip(&b) {
            worst = worst.max(r.abs() / bh);
        }
        done += 1;
    }
    assert!(worst <= 1e-10, "worst relative constraint residual {worst:.2e} > 1e-10");
    println!("acceptance c01 projection residual <= 1e-10 over 100 random states: PASS ({worst:.2e})");
}

#[test]
fn c02_scaling_maximizer_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let m = if case < 30 { 2 } else { 3 };
        let mat = dominant_matrix(&mut rng, m);
        let b: Vec<f64> = (0..m).map(|_| 0.5 + 1.5 * rng.gen::<f64>()).collect();
        let fast = orthant_max(&InteractionMatrix::from_entries(m, mat.clone()), &b).unwrap();
        assert_eq!(fast.status, PsiStatus::Interior, "dominant instance must be interior");
        let slow = brute_force_psi_max(&mat, m, &b, 4.0, if m == 2 { 400 } else { 160 });
        for h in 0..m {
            let diff = (fast.t[h] - slow[h]).abs();
            worst = worst.max(diff);
            assert!(
                diff <= 1e-3,
                "case {case}: component {h} differs by {diff:.2e} (fast {}, brute {})",
                fast.t[h],
                slow[h]
            );
        }
    }
    // Decoupled groups: the maximizer is exactly b_h / M_hh.
    let mut worst_diag = 0.0f64;
    for _ in 0..10 {
        let m = 3;
        let mut mat = vec![0.0; m * m];
        for h in 0..m {
            mat[h * m + h] = 0.5 + 2.0 * rng.gen::<f64>();
        }
        let b: Vec<f64> = (0..m).map(|_| 0.5 + 1.5 * rng.gen::<f64>()).collect();
        let fast = orthant_max(&InteractionMatrix::from_entries(m, mat.clone()), &b).unwrap();
        for h in 0..m {
            let exact = b[h] / mat[h * m + h];
            worst_diag = worst_diag.max((fast.t[h] - exact).abs());
        }
    }
    assert!(worst_diag <= 1e-12, "diagonal maximizer off by {worst_diag:.2e} > 1e-12");
    println!(
        "acceptance c02 scaling maximizer vs brute force (50 cases, diagonal exact): PASS ({worst:.2e}, {worst_diag:.2e})"
    );
}

#[test]
fn c03_finite_difference_gradient_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let grid = Grid::interval(8.0, 32).unwrap();
    let n = grid.n_interior();
    let dec = Decomposition::new(vec![0, 2, 3]).unwrap();
    let beta = [
        vec![1.0, 0.3, -0.7],
        vec![0.3, 1.4, -0.2],
        vec![-0.7, -0.2, 1.1],
    ];
    let spec = ProblemSpec::new(
        grid,
        dec,
        (0..3).map(|i| Coefficient::constant(n, 1.0 + 0.3 * i as f64)).collect(),
        beta.iter()
            .map(|row| row.iter().map(|&v| Coefficient::constant(n, v)).collect())
            .collect(),
        None,
    )
    .unwrap();
    let mut worst = 0.0f64;
    for pair in 0..20 {
        let u = random_state(&spec, &mut rng);
        let phi = random_state(&spec, &mut rng);
        let fd = fd_directional(&spec, &u, &phi, 1e-5);
        let exact = state_inner_l2(spec.grid(), &gradient(&spec, &u), &phi);
        let rel = (fd - exact).abs() / (1.0 + exact.abs());
        worst = worst.max(rel);
        assert!(rel <= 1e-5, "pair {pair}: finite differences disagree by {rel:.2e}");
    }
    println!("acceptance c03 finite-difference gradient check on 20 pairs: PASS ({worst:.2e})");
}

#[test]
fn c04_energy_identity_on_the_constraint_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut done = 0;
    let mut worst = 0.0f64;
    let mut attempts = 0;
    while done < 50 {
        attempts += 1;
        assert!(attempts < 1000);
        let spec = random_spec(&mut rng);
        let u = random_state(&spec, &mut rng);
        let Ok(p) = project_to_nehari(&spec, &u) else { continue };
        let e = energy(&spec, &p);
        let b: f64 = group_norms_sq(&spec, &p).iter().sum();
        let gap = (e - 0.25 * b).abs() / (1.0 + e.abs());
        worst = worst.max(gap);
        done += 1;
    }
    assert!(worst <= 1e-10, "energy identity gap {worst:.2e} > 1e-10");
    println!("acceptance c04 energy identity J = (1/4)sum b on 50 states: PASS ({worst:.2e})");
}

#[test]
fn c05_constrained_critical_points_are_free_critical_points() {
    let grid = Grid::interval(12.0, 120).unwrap();
    let scalar = ProblemSpec::from_constants(
        grid.clone(),
        Decomposition::single_group(1),
        &[1.0],
        &[vec![1.0]],
    )
    .unwrap();
    let pair = ProblemSpec::from_constants(
        grid,
        Decomposition::singletons(2),
        &[1.0, 1.3],
        &[vec![1.0, -1.2], vec![-1.2, 1.5]],
    )
    .unwrap();
    let mut worst_mult = 0.0f64;
    let mut worst_free = 0.0f64;
    for (label, spec) in [("scalar", &scalar), ("pair", &pair)] {
        let config = SolverConfig { rng_seed: 5, ..SolverConfig::for_spec(spec) };
        let ms = multi_start(spec, &config).unwrap();
        assert!(ms.best.converged, "{label}: solver did not converge");
        let b: f64 = group_norms_sq(spec, &ms.best.state).iter().sum();
        let mult_rel = ms.best.multiplier_norm / b;
        let free = state_norm_l2(spec.grid(), &gradient(spec, &ms.best.state));
        let unorm = state_norm_l2(spec.grid(), &ms.best.state);
        let free_rel = free / unorm;
        worst_mult = worst_mult.max(mult_rel);
        worst_free = worst_free.max(free_rel);
        assert!(mult_rel <= 1e-5, "{label}: multiplier norm {mult_rel:.2e} of sum b");
        assert!(free_rel <= 1e-4, "{label}: free gradient {free_rel:.2e} of state norm");
    }
    println!(
        "acceptance c05 multipliers <= 1e-5*b and free gradient <= 1e-4*|u| at converged minimizers: PASS ({worst_mult:.2e}, {worst_free:.2e})"
    );
}

#[test]
fn c06_cone_membership_certifies_positive_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut inside = 0;
    let mut checked = 0;
    while checked < 200 {
        checked += 1;
        let spec = random_spec(&mut rng);
        let u = random_state(&spec, &mut rng);
        let membership = is_in_e(&spec, &u);
        if !membership.ok {
            continue;
        }
        inside += 1;
        let mat = interaction_matrix(&spec, &u);
        let lam = eig_min_sym(mat.entries(), mat.m()).unwrap();
        assert!(
            lam > 0.0,
            "state in the dominance cone but smallest eigenvalue is {lam:.3e}"
        );
    }
    assert!(inside >= 20, "only {inside} of {checked} draws landed in the cone; test is too weak");
    println!(
        "acceptance c06 dominance cone implies positive interaction spectrum: PASS ({inside}/{checked} in cone, 0 violations)"
    );
}

#[test]
fn c07_segregation_ladder() {
    // Box choice matters here: the components must be forced to share the
    // domain at b = -1, otherwise they separate spatially for free and the
    // ladder never probes the interface regime. On the length-8 box the
    // competitive mass decreases monotonically along the whole ladder and
    // n = 400 keeps the b = -1000 transition layer resolved.
    let n = 400;
    let spec0 = ProblemSpec::from_constants(
        Grid::interval(8.0, n).unwrap(),
        Decomposition::singletons(2),
        &[1.0, 1.0],
        &[vec![1.0, -1.0], vec![-1.0, 1.0]],
    )
    .unwrap();
    let ladder = [-1.0, -10.0, -100.0, -1000.0];
    let mut rows = Vec::new();
    let mut states = Vec::new();
    let mut prev: Option<State> = None;
    for &b in &ladder {
        let spec = spec0.with_coupling_constant(0, 1, b);
        let config = SolverConfig { rng_seed: 7, restarts: 4, ..SolverConfig::for_spec(&spec) };
        let fresh = multi_start(&spec, &config).unwrap();
        let chosen = match &prev {
            Some(p) => {
                let warm = minimize(&spec, &config, p).unwrap();
                if warm.converged && warm.energy <= fresh.best.energy { warm } else { fresh.best }
            }
            None => fresh.best,
        };
        assert!(chosen.converged, "ladder point b = {b} did not converge");
        rows.push(segregation_record(&spec, &chosen.state, b));
        prev = Some(chosen.state.clone());
        states.push((spec, chosen.state));
    }
    for r in &rows {
        println!(
            "  ladder b = {:8}: overlap {:.4e}, competitive mass {:.4e}, energy {:.9}",
            r.b, r.overlaps[0], r.competitive_mass, r.energy
        );
    }
    let first = rows[0].overlaps[0];
    let last = rows[3].overlaps[0];
    assert!(
        last < 1e-2 * first,
        "overlap failed to collapse: {last:.3e} vs 1e-2 * {first:.3e}"
    );
    assert!(
        rows[3].competitive_mass < rows[2].competitive_mass,
        "competitive mass not decreasing on the last two points: {} vs {}",
        rows[3].competitive_mass,
        rows[2].competitive_mass
    );
    let (spec_last, u_last) = &states[3];
    let b_h = group_norms_sq(spec_last, u_last);
    for (h, (r, bh)) in rows[3].limit_nehari_residuals.iter().zip(&b_h).enumerate() {
        assert!(
            r.abs() <= 1e-2 * bh,
            "limit system residual in group {h}: {r:.3e} vs 1e-2 * {bh:.3e}"
        );
    }
    println!(
        "acceptance c07 segregation ladder (overlap {first:.2e} -> {last:.2e}, competitive mass {:.2e} -> {:.2e}): PASS",
        rows[2].competitive_mass, rows[3].competitive_mass
    );
}

#[test]
fn c08_unconstrained_competitive_minimizer_stays_in_the_cone() {
    let spec = ProblemSpec::from_constants(
        Grid::interval(16.0, 120).unwrap(),
        Decomposition::singletons(2),
        &[1.0, 1.0],
        &[vec![1.0, -2.0], vec![-2.0, 1.2]],
    )
    .unwrap();
    let mut config = SolverConfig::for_spec(&spec);
    assert!(!config.require_e, "pure competition should drop the cone constraint by default");
    config.rng_seed = 9;
    let ms = multi_start(&spec, &config).unwrap();
    assert!(ms.best.converged);
    assert!(
        ms.best.in_e.ok,
        "converged competitive minimizer left the dominance cone: margins {:?}",
        ms.best.in_e.margins
    );
    println!("acceptance c08 free competitive minimizer lands in the dominance cone: PASS");
}

#[test]
fn c09_dominated_pair_collapses_to_a_semi_trivial_state() {
    let spec = ProblemSpec::from_constants(
        Grid::interval(16.0, 160).unwrap(),
        Decomposition::singletons(2),
        &[1.0, 1.0],
        &[vec![1.0, 1.5], vec![1.5, 2.0]],
    )
    .unwrap();
    let detector = detect_nonexistence(&spec);
    assert_eq!(detector, vec![(0, 1)], "detector must flag the dominated pair (1,2)");
    let config = SolverConfig { require_e: false, rng_seed: 13, ..SolverConfig::for_spec(&spec) };
    let consistent = match multi_start(&spec, &config) {
        Ok(ms) => {
            let max_l4 = ms.best.component_l4.iter().cloned().fold(0.0f64, f64::max);
            let min_l4 = ms.best.component_l4.iter().cloned().fold(f64::INFINITY, f64::min);
            min_l4 < 1e-3 * max_l4 || !ms.best.converged
        }
        // No feasible fully nontrivial state at all is consistent too.
        Err(_) => true,
    };
    assert!(consistent, "minimizer kept both components alive despite domination");
    println!("acceptance c09 dominated pair collapses (detector fires on (1,2)): PASS");
}

#[test]
fn c10_second_variation_sign_tracks_the_coupling() {
    let grid = Grid::interval(20.0, 160).unwrap();
    let scalar = ProblemSpec::from_constants(
        grid.clone(),
        Decomposition::single_group(1),
        &[1.0],
        &[vec![1.0]],
    )
    .unwrap();
    let config = SolverConfig { rng_seed: 3, ..SolverConfig::for_spec(&scalar) };
    let ms = multi_start(&scalar, &config).unwrap();
    assert!(ms.best.converged);
    let w = ms.best.state.component(0).clone();
    let zero = Field::from_values(vec![0.0; w.len()]);
    let semi_trivial = State::new(vec![w, zero]);

    let mut values = Vec::new();
    for beta12 in [3.0, 0.0] {
        let spec = ProblemSpec::from_constants(
            grid.clone(),
            Decomposition::single_group(2),
            &[1.0, 1.0],
            &[vec![1.0, beta12], vec![beta12, 1.0]],
        )
        .unwrap();
        let v = second_variation_test(&spec, &semi_trivial, 1, 0).unwrap();
        values.push((beta12, v));
    }
    assert!(values[0].1 < 0.0, "strong cooperation should destabilize: {:?}", values[0]);
    assert!(values[1].1 > 0.0, "decoupled slot should be stable: {:?}", values[1]);
    println!(
        "acceptance c10 second variation signs (beta12=3: {:.3e}, beta12=0: {:.3e}): PASS",
        values[0].1, values[1].1
    );
}

#[test]
fn c11_solver_matches_the_reference_minimizer() {
    let grid = Grid::interval(20.0, 20).unwrap();
    let n = grid.n_interior();
    let _ = n;
    let cases: Vec<(&str, ProblemSpec)> = vec![
        (
            "scalar",
            ProblemSpec::from_constants(
                grid.clone(),
                Decomposition::single_group(1),
                &[1.0],
                &[vec![2.0]],
            )
            .unwrap(),
        ),
        (
            "competitive pair",
            ProblemSpec::from_constants(
                grid.clone(),
                Decomposition::singletons(2),
                &[1.0, 1.0],
                &[vec![1.0, -0.8], vec![-0.8, 1.5]],
            )
            .unwrap(),
        ),
        (
            "cooperative group",
            ProblemSpec::from_constants(
                grid.clone(),
                Decomposition::single_group(2),
                &[1.0, 1.0],
                &[vec![1.0, 0.4], vec![0.4, 1.2]],
            )
            .unwrap(),
        ),
        (
            "trapped pair",
            ProblemSpec::from_constants(
                grid.clone(),
                Decomposition::singletons(2),
                &[1.0, 1.3],
                &[vec![1.0, -1.5], vec![-1.5, 1.0]],
            )
            .unwrap(),
        ),
        (
            "lopsided wells",
            ProblemSpec::from_constants(
                grid.clone(),
                Decomposition::singletons(2),
                &[1.0, 2.0],
                &[vec![1.0, -0.3], vec![-0.3, 1.0]],
            )
            .unwrap(),
        ),
    ];
    let mut worst = 0.0f64;
    for (k, (label, spec)) in cases.iter().enumerate() {
        let (e_ref, _) = small_instance_ground_state(spec).unwrap();
        let config = SolverConfig { rng_seed: 100 + k as u64, ..SolverConfig::for_spec(spec) };
        let ms = multi_start(spec, &config).unwrap();
        assert!(ms.best.converged, "{label}: solver did not converge");
        let rel = (ms.best.energy - e_ref).abs() / e_ref.abs();
        worst = worst.max(rel);
        assert!(
            rel <= 1e-4,
            "{label}: solver energy {} vs reference {} (rel {rel:.2e})",
            ms.best.energy,
            e_ref
        );
    }
    println!("acceptance c11 solver vs reference minimizer on 5 tiny instances: PASS ({worst:.2e})");
}

#[test]
fn c12_solve_runs_are_byte_identical() {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/pair.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = Command::new(env!("CARGO_BIN_EXE_solwave"))
            .args(["solve", "--config", config, "--out", dir.path().to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let xa = fs::read(a.path().join("solution.csv")).unwrap();
    let xb = fs::read(b.path().join("solution.csv")).unwrap();
    assert_eq!(xa, xb, "solution.csv differs between runs");
    let ja = fs::read(a.path().join("result.json")).unwrap();
    let jb = fs::read(b.path().join("result.json")).unwrap();
    assert_eq!(ja, jb, "result.json differs between runs");
    println!("acceptance c12 repeated solve runs byte-identical: PASS");
}

#[test]
fn desk_scale_solves_stay_under_budget() {
    use std::time::Instant;
    // Radial three-component system at desk scale; the suite's budget
    // depends on these staying fast. All-singleton competition, so the
    // constraint keeps every component alive.
    let spec = ProblemSpec::from_constants(
        Grid::radial_ball(10.0, 3, 300).unwrap(),
        Decomposition::singletons(3),
        &[1.0, 1.1, 1.0],
        &[
            vec![1.0, -0.4, -0.8],
            vec![-0.4, 1.2, -0.5],
            vec![-0.8, -0.5, 1.0],
        ],
    )
    .unwrap();
    let config = SolverConfig { rng_seed: 21, restarts: 4, ..SolverConfig::for_spec(&spec) };
    let t0 = Instant::now();
    let ms = multi_start(&spec, &config).unwrap();
    let dt = t0.elapsed();
    assert!(ms.best.converged, "radial three-component run did not converge");
    assert!(dt.as_secs_f64() < 5.0, "multi-start took {dt:?}, budget is 5 s");
    let l4: Vec<f64> =
        (0..3).map(|i| norm_l4_sq(spec.grid(), ms.best.state.component(i))).collect();
    assert!(l4.iter().all(|&v| v > 1e-6), "a component collapsed: {l4:?}");
    let _ = norm_l2(spec.grid(), ms.best.state.component(0));
    println!("desk-scale radial solve in {dt:?}: PASS");
}
