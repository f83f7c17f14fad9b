//! Brute-force reference implementations used to cross-validate the main
//! code paths. Everything here is deliberately primitive: grid search
//! instead of active sets, Cramer's rule instead of elimination, plain
//! projected descent instead of tangent-space steps, and energy/interaction
//! assembly written from scratch on top of the quadrature primitives. Slow
//! is fine; agreeing with the fast path for the wrong reason is not.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::discretize::{apply_laplacian, integrate, quad_with, Field};
use crate::nehari::{energy, State};
use crate::problem::ProblemSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum OracleError {
    /// The reference minimizer is restricted to tiny instances.
    TooLarge { n: usize, d: usize },
    /// Input matrix asymmetric beyond 1e-10 relative.
    Asymmetric { h: usize, k: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { n, d } => {
                write!(f, "reference minimizer wants n ≤ 24 and d ≤ 3, got n = {n}, d = {d}")
            }
            OracleError::Asymmetric { h, k } => write!(f, "matrix asymmetric at ({h},{k})"),
        }
    }
}

impl core::error::Error for OracleError {}

fn psi_raw(mat: &[f64], m: usize, b: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for h in 0..m {
        s += 0.5 * b[h] * t[h];
        for k in 0..m {
            s -= 0.25 * mat[h * m + k] * t[h] * t[k];
        }
    }
    s
}

/// Maximizes `½b·t − ¼tᵀMt` over the uniform grid `{lo..hi}^m` with
/// `n_grid` cells per axis, then refines once in a ±2-cell window around
/// the winner. `mat` is row-major `m×m`, `m ≤ 3`.
pub fn brute_force_psi_max(mat: &[f64], m: usize, b: &[f64], t_max: f64, n_grid: usize) -> Vec<f64> {
    assert!(m >= 1 && m <= 3, "grid search is for m ≤ 3");
    assert_eq!(mat.len(), m * m);
    assert_eq!(b.len(), m);
    assert!(t_max > 0.0 && n_grid >= 2);

    let search = |lo: &[f64], hi: &[f64]| -> Vec<f64> {
        let mut idx = vec![0usize; m];
        let mut best_val = f64::NEG_INFINITY;
        let mut best_t = vec![0.0; m];
        let mut t = vec![0.0; m];
        loop {
            for h in 0..m {
                t[h] = lo[h] + (hi[h] - lo[h]) * idx[h] as f64 / n_grid as f64;
            }
            let v = psi_raw(mat, m, b, &t);
            if v > best_val {
                best_val = v;
                best_t.copy_from_slice(&t);
            }
            // Odometer increment.
            let mut carry = 0;
            loop {
                idx[carry] += 1;
                if idx[carry] <= n_grid {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
                if carry == m {
                    return best_t;
                }
            }
        }
    };

    let lo0 = vec![0.0; m];
    let hi0 = vec![t_max; m];
    let coarse = search(&lo0, &hi0);
    let cell = t_max / n_grid as f64;
    let lo1: Vec<f64> = coarse.iter().map(|&t| (t - 2.0 * cell).max(0.0)).collect();
    let hi1: Vec<f64> = coarse.iter().map(|&t| t + 2.0 * cell).collect();
    search(&lo1, &hi1)
}

/// Central finite-difference approximation of the L² gradient of the
/// energy: perturbs every nodal coefficient of every component and divides
/// by its quadrature weight, so the result is comparable to the nodal
/// gradient field.
pub fn fd_gradient(spec: &ProblemSpec, u: &State, eps: f64) -> State {
    assert!(eps > 0.0);
    let grid = spec.grid();
    let n = grid.n_interior();
    let ang = grid.angular_factor();
    let mut comps = Vec::with_capacity(u.d());
    for i in 0..u.d() {
        let mut g = vec![0.0; n];
        for k in 0..n {
            let mut plus = u.clone();
            plus.component_mut(i).values_mut()[k] += eps;
            let mut minus = u.clone();
            minus.component_mut(i).values_mut()[k] -= eps;
            let secant = (energy(spec, &plus) - energy(spec, &minus)) / (2.0 * eps);
            g[k] = secant / (ang * grid.weights()[k]);
        }
        comps.push(Field::from_values(g));
    }
    State::new(comps)
}

/// Central difference of the energy along a direction:
/// `(J(u+εφ) − J(u−εφ)) / 2ε`.
pub fn fd_directional(spec: &ProblemSpec, u: &State, phi: &State, eps: f64) -> f64 {
    assert!(eps > 0.0);
    let axpy = |s: f64| {
        let comps = (0..u.d())
            .map(|i| {
                let a = u.component(i).values();
                let b = phi.component(i).values();
                Field::from_values(a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            })
            .collect();
        State::new(comps)
    };
    (energy(spec, &axpy(eps)) - energy(spec, &axpy(-eps))) / (2.0 * eps)
}

/// Central second difference of the energy along a direction:
/// `(J(u+εv) − 2J(u) + J(u−εv)) / ε²`.
pub fn fd_second(spec: &ProblemSpec, u: &State, v: &State, eps: f64) -> f64 {
    assert!(eps > 0.0);
    let axpy = |s: f64| {
        let comps = (0..u.d())
            .map(|i| {
                let a = u.component(i).values();
                let b = v.component(i).values();
                Field::from_values(a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            })
            .collect();
        State::new(comps)
    };
    (energy(spec, &axpy(eps)) + energy(spec, &axpy(-eps)) - 2.0 * energy(spec, u)) / (eps * eps)
}

/// Smallest eigenvalue of a symmetric matrix (row-major, `m ≤ 16`) by
/// values-only cyclic Jacobi. Asymmetry beyond 1e-10 relative errors out.
pub fn eig_min_sym(mat: &[f64], m: usize) -> Result<f64, OracleError> {
    assert!(m >= 1 && m <= 16);
    assert_eq!(mat.len(), m * m);
    let scale = mat.iter().fold(0.0f64, |a, &x| a.max(libm::fabs(x)));
    for h in 0..m {
        for k in h + 1..m {
            if libm::fabs(mat[h * m + k] - mat[k * m + h]) > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                return Err(OracleError::Asymmetric { h, k });
            }
        }
    }
    let mut a = mat.to_vec();
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..m {
            for q in p + 1..m {
                off += a[p * m + q] * a[p * m + q];
            }
        }
        if libm::sqrt(off) <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if libm::fabs(apq) <= 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Ok((0..m).map(|i| a[i * m + i]).fold(f64::INFINITY, f64::min))
}

// ---------------------------------------------------------------------
// Tiny-grid reference minimizer, assembled from scratch on the quadrature
// primitives (no reuse of the production energy/interaction/projection).
// ---------------------------------------------------------------------

fn h1_norm_sq(spec: &ProblemSpec, f: &Field, i: usize) -> f64 {
    let lap = apply_laplacian(spec.grid(), f);
    let kinetic = integrate(
        spec.grid(),
        &Field::from_values(
            lap.values().iter().zip(f.values()).map(|(l, x)| l * x).collect(),
        ),
    );
    let vi = spec.potential(i).values();
    kinetic + quad_with(spec.grid(), |k| vi[k] * f.values()[k] * f.values()[k])
}

fn reference_group_norms(spec: &ProblemSpec, u: &State) -> Vec<f64> {
    let dec = spec.decomposition();
    (0..dec.m())
        .map(|h| dec.group_members(h).map(|i| h1_norm_sq(spec, u.component(i), i)).sum())
        .collect()
}

fn reference_interaction(spec: &ProblemSpec, u: &State) -> Vec<f64> {
    let dec = spec.decomposition();
    let m = dec.m();
    let mut mat = vec![0.0; m * m];
    for h in 0..m {
        for k in 0..m {
            let mut s = 0.0;
            for i in dec.group_members(h) {
                for j in dec.group_members(k) {
                    let beta = spec.coupling(i, j).values();
                    let ui = u.component(i).values();
                    let uj = u.component(j).values();
                    s += quad_with(spec.grid(), |x| {
                        beta[x] * ui[x] * ui[x] * uj[x] * uj[x]
                    });
                }
            }
            mat[h * m + k] = s;
        }
    }
    mat
}

fn reference_energy(spec: &ProblemSpec, u: &State) -> f64 {
    let b = reference_group_norms(spec, u);
    let mat = reference_interaction(spec, u);
    0.5 * b.iter().sum::<f64>() - 0.25 * mat.iter().sum::<f64>()
}

fn reference_gradient(spec: &ProblemSpec, u: &State) -> State {
    let d = spec.d();
    let n = u.n();
    let mut comps = Vec::with_capacity(d);
    for i in 0..d {
        let lap = apply_laplacian(spec.grid(), u.component(i));
        let vi = spec.potential(i).values();
        let ui = u.component(i).values();
        let mut g: Vec<f64> = (0..n).map(|k| lap.values()[k] + vi[k] * ui[k]).collect();
        for j in 0..d {
            let beta = spec.coupling(i, j).values();
            let uj = u.component(j).values();
            for k in 0..n {
                g[k] -= beta[k] * uj[k] * uj[k] * ui[k];
            }
        }
        comps.push(Field::from_values(g));
    }
    State::new(comps)
}

/// Cramer's rule for systems up to 3×3; `None` on a degenerate matrix.
fn solve_small(mat: &[f64], b: &[f64], m: usize) -> Option<Vec<f64>> {
    let scale = mat.iter().fold(0.0f64, |a, &x| a.max(libm::fabs(x))).max(f64::MIN_POSITIVE);
    match m {
        1 => {
            if libm::fabs(mat[0]) <= 1e-14 * scale {
                None
            } else {
                Some(vec![b[0] / mat[0]])
            }
        }
        2 => {
            let det = mat[0] * mat[3] - mat[1] * mat[2];
            if libm::fabs(det) <= 1e-14 * scale * scale {
                return None;
            }
            Some(vec![
                (b[0] * mat[3] - b[1] * mat[1]) / det,
                (mat[0] * b[1] - mat[2] * b[0]) / det,
            ])
        }
        3 => {
            let det3 = |a: &[f64; 9]| {
                a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                    + a[2] * (a[3] * a[7] - a[4] * a[6])
            };
            let base: [f64; 9] = core::array::from_fn(|i| mat[i]);
            let det = det3(&base);
            if libm::fabs(det) <= 1e-14 * scale * scale * scale {
                return None;
            }
            let mut out = vec![0.0; 3];
            for col in 0..3 {
                let mut rep = base;
                for row in 0..3 {
                    rep[row * 3 + col] = b[row];
                }
                out[col] = det3(&rep) / det;
            }
            Some(out)
        }
        _ => unreachable!("reference path handles at most 3 groups"),
    }
}

/// Group-scales `u` onto the constraint set via its own interior solve;
/// `None` when the scaling system degenerates or leaves the open orthant.
fn reference_project(spec: &ProblemSpec, u: &State) -> Option<State> {
    let b = reference_group_norms(spec, u);
    if !b.iter().all(|&x| x > 0.0) {
        return None;
    }
    let m = spec.m();
    let mat = reference_interaction(spec, u);
    let t = solve_small(&mat, &b, m)?;
    if !t.iter().all(|&x| x > 0.0 && x.is_finite()) {
        return None;
    }
    let dec = spec.decomposition();
    let comps = (0..spec.d())
        .map(|i| {
            let s = libm::sqrt(t[dec.group_of(i)]);
            Field::from_values(u.component(i).values().iter().map(|v| s * v).collect())
        })
        .collect();
    Some(State::new(comps))
}

/// Reference ground-state search on a tiny instance (`n ≤ 24`, `d ≤ 3`):
/// 200 seeded restarts of plain projected gradient descent with adaptive
/// tiny steps, absolute values keeping iterates nonnegative. Returns the
/// best energy found with its state. Deterministic; roughly two orders of
/// magnitude slower than the production path, by design.
pub fn small_instance_ground_state(spec: &ProblemSpec) -> Result<(f64, State), OracleError> {
    let n = spec.grid().n_interior();
    let d = spec.d();
    if n > 24 || d > 3 {
        return Err(OracleError::TooLarge { n, d });
    }
    const RESTARTS: u64 = 200;
    const ITERS: usize = 1500;

    let mut best: Option<(f64, State)> = None;
    for r in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0c0f_fee5 ^ r.wrapping_mul(0x9e37_79b9));
        let raw = State::new(
            (0..d)
                .map(|_| Field::from_values((0..n).map(|_| 0.1 + rng.gen::<f64>()).collect()))
                .collect(),
        );
        let Some(mut u) = reference_project(spec, &raw) else { continue };
        let mut e = reference_energy(spec, &u);
        let mut eta = 0.05;
        for _ in 0..ITERS {
            let g = reference_gradient(spec, &u);
            let z = State::new(
                (0..d)
                    .map(|i| {
                        let a = u.component(i).values();
                        let gg = g.component(i).values();
                        Field::from_values(
                            a.iter().zip(gg).map(|(x, y)| libm::fabs(x - eta * y)).collect(),
                        )
                    })
                    .collect(),
            );
            match reference_project(spec, &z) {
                Some(t) => {
                    let et = reference_energy(spec, &t);
                    if et < e {
                        u = t;
                        e = et;
                        eta = (eta * 1.1).min(0.2);
                        continue;
                    }
                }
                None => {}
            }
            eta *= 0.5;
            if eta < 1e-10 {
                break;
            }
        }
        if best.as_ref().map_or(true, |(be, _)| e < *be) {
            best = Some((e, u));
        }
    }
    Ok(best.expect("at least one restart must project on a valid spec"))
}
