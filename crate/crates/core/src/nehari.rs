//! Variational geometry of the coupled system: energy, gradient, the
//! group-interaction matrix, constraint residuals, the scaling quadratic Ψ
//! and its maximizer over the closed positive orthant, the induced
//! projection onto the constraint set, and tangent-space projection.
//!
//! For a state `u` with group norms `b_h = Σ_{i∈I_h} ‖u_i‖²_{V_i}` and
//! interaction matrix `M_hk = Σ_{(i,j)∈I_h×I_k} ∫ β_ij u_i² u_j²`, the
//! constraint set is `G_h(u) = b_h − Σ_k M_hk = 0` with `b_h > 0`, and
//! group-scaling by `√t_h` turns the energy into the quadratic
//! `Ψ(t) = ½ b·t − ¼ tᵀM t`. On the constraint set the energy collapses to
//! `J = ¼ Σ_h b_h`, which is what makes minimization there meaningful.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::discretize::{self, apply_laplacian, inner_h1, Field, Grid};
use crate::linalg::solve_dense;
use crate::problem::ProblemSpec;

/// A `d`-tuple of fields on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    components: Vec<Field>,
}

impl State {
    pub fn new(components: Vec<Field>) -> Self {
        assert!(!components.is_empty(), "a state needs at least one component");
        let n = components[0].len();
        assert!(
            components.iter().all(|f| f.len() == n),
            "all components must live on the same grid"
        );
        // Finiteness is a soft invariant: transient overflow (e.g. a wild
        // line-search trial) is detected by callers via `is_finite` and
        // rejected, rather than panicking here.
        State { components }
    }

    pub fn zeros(d: usize, n: usize) -> Self {
        State::new(vec![Field::zeros(n); d])
    }

    /// Number of components.
    pub fn d(&self) -> usize {
        self.components.len()
    }

    /// Nodes per component.
    pub fn n(&self) -> usize {
        self.components[0].len()
    }

    pub fn component(&self, i: usize) -> &Field {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut Field {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    /// Componentwise absolute value.
    pub fn abs(&self) -> State {
        let comps = self
            .components
            .iter()
            .map(|f| Field::from_values(f.values().iter().map(|v| libm::fabs(*v)).collect()))
            .collect();
        State::new(comps)
    }

    pub fn is_finite(&self) -> bool {
        self.components
            .iter()
            .all(|f| f.values().iter().all(|v| v.is_finite()))
    }
}

/// `Σ_i ∫ a_i b_i` — the flat L² pairing of two states.
pub fn state_inner_l2(grid: &Grid, a: &State, b: &State) -> f64 {
    assert_eq!(a.d(), b.d());
    let mut s = 0.0;
    for i in 0..a.d() {
        let ai = a.component(i).values();
        let bi = b.component(i).values();
        s += discretize::quad_with(grid, |k| ai[k] * bi[k]);
    }
    s
}

pub fn state_norm_l2(grid: &Grid, a: &State) -> f64 {
    libm::sqrt(state_inner_l2(grid, a, a))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NehariError {
    /// Active-set enumeration over 2^m supports is capped at m = 8.
    TooManyGroups(usize),
    /// A group with `‖u_h‖ = 0` cannot be scaled onto the constraint set.
    ZeroGroupNorm(usize),
    /// Ψ is unbounded above on the orthant, or its maximizer has a zero
    /// coordinate: no usable scaling exists. Callers restart elsewhere.
    ProjectionFailed(PsiStatus),
    /// The tangent system is numerically singular; the state is outside the
    /// diagonal-dominance region where the constraint gradients are
    /// independent.
    SingularTangentSystem,
}

impl fmt::Display for NehariError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NehariError::TooManyGroups(m) => write!(f, "{m} groups exceed the active-set limit of 8"),
            NehariError::ZeroGroupNorm(h) => write!(f, "group {h} is identically zero"),
            NehariError::ProjectionFailed(s) => write!(f, "no usable scaling onto the constraint set (status {s:?})"),
            NehariError::SingularTangentSystem => {
                write!(f, "tangent system singular; state is outside the dominance region")
            }
        }
    }
}

impl core::error::Error for NehariError {}

/// Group-interaction matrix `M_hk = Σ_{(i,j)∈I_h×I_k} ∫ β_ij u_i² u_j²`,
/// symmetric by symmetry of `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrix {
    m: usize,
    entries: Vec<f64>, // row-major m×m, symmetrized
}

impl InteractionMatrix {
    /// Wraps raw entries, enforcing symmetry: asymmetry beyond 1e-10
    /// relative to the largest entry indicates corrupted input and panics;
    /// roundoff-level asymmetry is averaged away.
    pub fn from_entries(m: usize, mut entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), m * m, "need m*m entries");
        let scale = entries.iter().fold(0.0f64, |a, &b| a.max(libm::fabs(b)));
        for h in 0..m {
            for k in h + 1..m {
                let a = entries[h * m + k];
                let b = entries[k * m + h];
                assert!(
                    libm::fabs(a - b) <= 1e-10 * scale.max(f64::MIN_POSITIVE),
                    "interaction matrix asymmetric at ({h},{k}): {a} vs {b}"
                );
                let avg = 0.5 * (a + b);
                entries[h * m + k] = avg;
                entries[k * m + h] = avg;
            }
        }
        InteractionMatrix { m, entries }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, h: usize, k: usize) -> f64 {
        self.entries[h * self.m + k]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `Σ_k M_hk` for each row.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.m)
            .map(|h| (0..self.m).map(|k| self.entry(h, k)).sum())
            .collect()
    }

    /// Strict diagonal-dominance margins `M_hh − Σ_{k≠h} |M_hk|`.
    pub fn dominance_margins(&self) -> Vec<f64> {
        (0..self.m)
            .map(|h| {
                let off: f64 = (0..self.m)
                    .filter(|&k| k != h)
                    .map(|k| libm::fabs(self.entry(h, k)))
                    .sum();
                self.entry(h, h) - off
            })
            .collect()
    }
}

/// `b_h = Σ_{i∈I_h} inner_h1(u_i, u_i, V_i)` for each group.
pub fn group_norms_sq(spec: &ProblemSpec, u: &State) -> Vec<f64> {
    assert_eq!(u.d(), spec.d(), "state/spec component mismatch");
    let dec = spec.decomposition();
    (0..dec.m())
        .map(|h| {
            dec.group_members(h)
                .map(|i| inner_h1(spec.grid(), u.component(i), u.component(i), spec.potential(i)))
                .sum()
        })
        .collect()
}

/// Assembles `M(B, u)`.
pub fn interaction_matrix(spec: &ProblemSpec, u: &State) -> InteractionMatrix {
    assert_eq!(u.d(), spec.d(), "state/spec component mismatch");
    let d = spec.d();
    let grid = spec.grid();
    // Pairwise quartic integrals q_ij = ∫ β_ij u_i² u_j², mirrored exactly.
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let beta = spec.coupling(i, j).values();
            let ui = u.component(i).values();
            let uj = u.component(j).values();
            let val = discretize::quad_with(grid, |k| {
                let a = ui[k] * ui[k];
                let b = uj[k] * uj[k];
                beta[k] * a * b
            });
            q[i * d + j] = val;
            q[j * d + i] = val;
        }
    }
    let dec = spec.decomposition();
    let m = dec.m();
    let mut entries = vec![0.0; m * m];
    for h in 0..m {
        for k in 0..m {
            let mut s = 0.0;
            for i in dec.group_members(h) {
                for j in dec.group_members(k) {
                    s += q[i * d + j];
                }
            }
            entries[h * m + k] = s;
        }
    }
    InteractionMatrix::from_entries(m, entries)
}

/// Total energy `J(u) = ½ Σ_h b_h − ¼ Σ_hk M_hk`.
pub fn energy(spec: &ProblemSpec, u: &State) -> f64 {
    let b = group_norms_sq(spec, u);
    let mat = interaction_matrix(spec, u);
    let mut s = 0.0;
    for &bh in &b {
        s += 0.5 * bh;
    }
    for &e in mat.entries() {
        s -= 0.25 * e;
    }
    s
}

/// L² gradient of the energy: component `i` is
/// `-Δu_i + V_i u_i − (Σ_j β_ij u_j²) u_i`.
pub fn gradient(spec: &ProblemSpec, u: &State) -> State {
    assert_eq!(u.d(), spec.d(), "state/spec component mismatch");
    let d = spec.d();
    let n = u.n();
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let lap = apply_laplacian(spec.grid(), u.component(i));
        let vi = spec.potential(i).values();
        let ui = u.component(i).values();
        let mut g = vec![0.0; n];
        for k in 0..n {
            g[k] = lap.values()[k] + vi[k] * ui[k];
        }
        for j in 0..d {
            let beta = spec.coupling(i, j).values();
            let uj = u.component(j).values();
            for k in 0..n {
                g[k] -= beta[k] * uj[k] * uj[k] * ui[k];
            }
        }
        out.push(Field::from_values(g));
    }
    State::new(out)
}

/// Constraint residuals `G_h(u) = b_h − Σ_k M_hk`. Membership in the
/// constraint set means all residuals vanish *and* all `b_h > 0`.
pub fn nehari_residuals(spec: &ProblemSpec, u: &State) -> Vec<f64> {
    let b = group_norms_sq(spec, u);
    let mat = interaction_matrix(spec, u);
    let rows = mat.row_sums();
    b.iter().zip(rows).map(|(&bh, rh)| bh - rh).collect()
}

/// Membership in the open dominance cone: `M(B,u)` strictly diagonally
/// dominant. The margins are the slack per row, useful diagnostics near the
/// cone boundary.
#[derive(Clone, Debug)]
pub struct EMembership {
    pub ok: bool,
    pub margins: Vec<f64>,
}

pub fn is_in_e(spec: &ProblemSpec, u: &State) -> EMembership {
    let mat = interaction_matrix(spec, u);
    let margins = mat.dominance_margins();
    EMembership { ok: margins.iter().all(|&x| x > 0.0), margins }
}

/// Scales group `h` of `u` by `√t_h`.
pub fn scale_groups(spec: &ProblemSpec, u: &State, t: &[f64]) -> State {
    let dec = spec.decomposition();
    assert_eq!(t.len(), dec.m(), "one scale per group");
    assert!(t.iter().all(|&x| x >= 0.0), "group scales must be nonnegative");
    let mut comps = Vec::with_capacity(u.d());
    for i in 0..u.d() {
        let s = libm::sqrt(t[dec.group_of(i)]);
        comps.push(Field::from_values(
            u.component(i).values().iter().map(|v| s * v).collect(),
        ));
    }
    State::new(comps)
}

/// `Ψ(t) = ½ b·t − ¼ tᵀ M t`, the energy of the group-scaled state.
pub fn psi(spec: &ProblemSpec, u: &State, t: &[f64]) -> f64 {
    let b = group_norms_sq(spec, u);
    let mat = interaction_matrix(spec, u);
    assert_eq!(t.len(), b.len(), "one scale per group");
    assert!(t.iter().all(|&x| x >= 0.0), "group scales must be nonnegative");
    psi_of(&mat, &b, t)
}

fn psi_of(mat: &InteractionMatrix, b: &[f64], t: &[f64]) -> f64 {
    let m = mat.m();
    let mut s = 0.0;
    for h in 0..m {
        s += 0.5 * b[h] * t[h];
        for k in 0..m {
            s -= 0.25 * mat.entry(h, k) * t[h] * t[k];
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiStatus {
    /// Maximizer has every coordinate positive (the useful case).
    Interior,
    /// Maximizer lives on a face: some group's scaling is zero.
    Boundary,
    /// Ψ grows without bound along an orthant ray.
    Unbounded,
}

/// Result of maximizing Ψ over the closed positive orthant. For
/// [`PsiStatus::Unbounded`] `t` holds a unit ray of unbounded growth and
/// `value` is infinite.
#[derive(Clone, Debug)]
pub struct PsiMax {
    pub t: Vec<f64>,
    pub status: PsiStatus,
    pub value: f64,
}

/// Maximizes `Ψ(t) = ½ b·t − ¼ tᵀMt` over `t ≥ 0` by exhaustive active-set
/// enumeration — every one of the `2^m − 1` nonempty supports is examined,
/// which keeps each first-order case auditable. Requires `m ≤ 8` and
/// `b > 0`.
///
/// Unboundedness is decided by a copositivity criterion: Ψ is unbounded
/// above iff some principal submatrix `M_SS` has an eigenpair `(λ ≤ 0, v)`
/// with `v` strictly positive — then `t_S = s·v` is a ray along which Ψ
/// grows linearly (λ = 0) or quadratically (λ < 0). Eigenvalues within
/// `1e-12 · Σ|M_hh|` of zero are treated as degenerate.
pub fn orthant_max(mat: &InteractionMatrix, b: &[f64]) -> Result<PsiMax, NehariError> {
    let m = mat.m();
    assert_eq!(b.len(), m, "one norm per group");
    if m > 8 {
        return Err(NehariError::TooManyGroups(m));
    }
    for (h, &bh) in b.iter().enumerate() {
        if !(bh > 0.0) {
            return Err(NehariError::ZeroGroupNorm(h));
        }
    }
    let tau = 1e-12 * (0..m).map(|h| libm::fabs(mat.entry(h, h))).sum::<f64>();

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for mask in 1u32..1 << m {
        let support: Vec<usize> = (0..m).filter(|h| mask >> h & 1 == 1).collect();
        let k = support.len();
        let mut sub = vec![0.0; k * k];
        for (a, &h) in support.iter().enumerate() {
            for (c, &l) in support.iter().enumerate() {
                sub[a * k + c] = mat.entry(h, l);
            }
        }
        let (vals, vecs) = sym_eigen(&sub, k);

        // Copositivity witness: nonpositive eigenvalue with a strictly
        // positive eigenvector spans an unbounded ray.
        for e in 0..k {
            if vals[e] <= tau {
                let mut v = vecs[e].clone();
                if v.iter().sum::<f64>() < 0.0 {
                    for x in &mut v {
                        *x = -*x;
                    }
                }
                if v.iter().all(|&x| x > 0.0) {
                    let mut ray = vec![0.0; m];
                    for (a, &h) in support.iter().enumerate() {
                        ray[h] = v[a];
                    }
                    return Ok(PsiMax { t: ray, status: PsiStatus::Unbounded, value: f64::INFINITY });
                }
            }
        }
        if vals.iter().any(|&l| l <= tau) {
            // Degenerate or indefinite on this support without a clean ray
            // witness; no stationary candidate here.
            continue;
        }

        let bs: Vec<f64> = support.iter().map(|&h| b[h]).collect();
        let Some(ts) = solve_dense(sub, bs, k) else { continue };
        if !ts.iter().all(|&t| t > 0.0) {
            continue;
        }
        let mut t = vec![0.0; m];
        for (a, &h) in support.iter().enumerate() {
            t[h] = ts[a];
        }
        // Off-support first-order condition: ∂_h Ψ = ½(b_h − (Mt)_h) ≤ 0.
        let mut feasible = true;
        for h in (0..m).filter(|h| mask >> h & 1 == 0) {
            let mt: f64 = (0..m).map(|l| mat.entry(h, l) * t[l]).sum();
            let scale: f64 = (0..m).map(|l| libm::fabs(mat.entry(h, l) * t[l])).sum();
            if b[h] - mt > 1e-10 * (libm::fabs(b[h]) + scale) + tau {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        // At a stationary point Ψ = ¼ b·t.
        let value = 0.25 * (0..m).map(|h| b[h] * t[h]).sum::<f64>();
        if best.as_ref().map_or(true, |(bv, _, _)| value > *bv) {
            best = Some((value, t, k == m));
        }
    }

    match best {
        Some((value, t, interior)) => Ok(PsiMax {
            t,
            status: if interior { PsiStatus::Interior } else { PsiStatus::Boundary },
            value,
        }),
        // No stationary support and no clean ray witness: a razor-edge
        // degenerate matrix. Treat as unbounded so callers restart.
        None => Ok(PsiMax { t: vec![0.0; m], status: PsiStatus::Unbounded, value: f64::INFINITY }),
    }
}

/// Maximizes Ψ for the given state. Errors if some group vanishes.
pub fn maximize_psi(spec: &ProblemSpec, u: &State) -> Result<PsiMax, NehariError> {
    let b = group_norms_sq(spec, u);
    let mat = interaction_matrix(spec, u);
    orthant_max(&mat, &b)
}

/// Projects onto the constraint set by group scaling: requires the Ψ
/// maximizer to be interior (every group kept). A boundary or unbounded
/// outcome is a projection failure — the caller should restart from a
/// different state.
pub fn project_to_nehari(spec: &ProblemSpec, u: &State) -> Result<State, NehariError> {
    let max = maximize_psi(spec, u)?;
    match max.status {
        PsiStatus::Interior => Ok(scale_groups(spec, u, &max.t)),
        status => Err(NehariError::ProjectionFailed(status)),
    }
}

/// Pairings `⟨∇G_h(u), w⟩` of the constraint differentials with a state:
///
/// ```text
/// ⟨∇G_h, w⟩ = 2 Σ_{i∈I_h} inner_h1(u_i, w_i, V_i)
///           − 2 Σ_{i∈I_h} Σ_j ∫ β_ij u_i u_j (w_i u_j + u_i w_j)
/// ```
pub fn constraint_pairing(spec: &ProblemSpec, u: &State, w: &State) -> Vec<f64> {
    assert_eq!(u.d(), spec.d());
    assert_eq!(w.d(), spec.d());
    let dec = spec.decomposition();
    let grid = spec.grid();
    let d = spec.d();
    let mut out = vec![0.0; dec.m()];
    for h in 0..dec.m() {
        let mut s = 0.0;
        for i in dec.group_members(h) {
            s += 2.0 * inner_h1(grid, u.component(i), w.component(i), spec.potential(i));
            for j in 0..d {
                let beta = spec.coupling(i, j).values();
                let ui = u.component(i).values();
                let uj = u.component(j).values();
                let wi = w.component(i).values();
                let wj = w.component(j).values();
                s -= 2.0
                    * discretize::quad_with(grid, |k| {
                        beta[k] * ui[k] * uj[k] * (wi[k] * uj[k] + ui[k] * wj[k])
                    });
            }
        }
        out[h] = s;
    }
    out
}

/// L² representative of `∇G_h(u)`: component `i` is
/// `1_{i∈I_h} [2(-Δu_i + V_i u_i) − 2(Σ_j β_ij u_j²)u_i] − 2(Σ_{i'∈I_h} β_{i'i} u_{i'}²)u_i`.
pub fn constraint_gradient(spec: &ProblemSpec, u: &State, h: usize) -> State {
    assert_eq!(u.d(), spec.d());
    let dec = spec.decomposition();
    assert!(h < dec.m());
    let d = spec.d();
    let n = u.n();
    let mut comps = Vec::with_capacity(d);
    for i in 0..d {
        let mut g = vec![0.0; n];
        if dec.group_of(i) == h {
            let lap = apply_laplacian(spec.grid(), u.component(i));
            let vi = spec.potential(i).values();
            let ui = u.component(i).values();
            for k in 0..n {
                g[k] = 2.0 * (lap.values()[k] + vi[k] * ui[k]);
            }
            for j in 0..d {
                let beta = spec.coupling(i, j).values();
                let uj = u.component(j).values();
                for k in 0..n {
                    g[k] -= 2.0 * beta[k] * uj[k] * uj[k] * ui[k];
                }
            }
        }
        let ui = u.component(i).values();
        for ip in dec.group_members(h) {
            let beta = spec.coupling(ip, i).values();
            let uip = u.component(ip).values();
            for k in 0..n {
                g[k] -= 2.0 * beta[k] * uip[k] * uip[k] * ui[k];
            }
        }
        comps.push(Field::from_values(g));
    }
    State::new(comps)
}

/// The state equal to `u` on group `h` and zero elsewhere — the scaling
/// direction used as the transversal basis for tangent projection.
pub fn group_direction(spec: &ProblemSpec, u: &State, h: usize) -> State {
    let dec = spec.decomposition();
    assert!(h < dec.m());
    let mut comps = Vec::with_capacity(u.d());
    for i in 0..u.d() {
        if dec.group_of(i) == h {
            comps.push(u.component(i).clone());
        } else {
            comps.push(Field::zeros(u.n()));
        }
    }
    State::new(comps)
}

/// Removes from `w` its component transversal to the constraint set at `u`:
/// returns `v = w − Σ_h c_h û_h` (û_h the group directions) with
/// `⟨∇G_h, v⟩ = 0` for every `h`. The m×m system has entries
/// `⟨∇G_h, û_k⟩ = 2δ_hk G_h − 2M_hk`, which reduces to `−2M` on the
/// constraint set; it is solvable whenever `M` is nonsingular, in
/// particular on the dominance cone.
pub fn tangent_project(spec: &ProblemSpec, u: &State, w: &State) -> Result<State, NehariError> {
    let m = spec.m();
    let b = group_norms_sq(spec, u);
    let mat = interaction_matrix(spec, u);
    let rows = mat.row_sums();
    let mut a = vec![0.0; m * m];
    for h in 0..m {
        let g_h = b[h] - rows[h];
        for k in 0..m {
            a[h * m + k] = -2.0 * mat.entry(h, k);
            if h == k {
                a[h * m + k] += 2.0 * g_h;
            }
        }
    }
    let r = constraint_pairing(spec, u, w);
    let c = solve_dense(a, r, m).ok_or(NehariError::SingularTangentSystem)?;
    let mut v = w.clone();
    let dec = spec.decomposition();
    for i in 0..u.d() {
        let ch = c[dec.group_of(i)];
        let ui = u.component(i).values();
        let vi = v.component_mut(i).values_mut();
        for k in 0..vi.len() {
            vi[k] -= ch * ui[k];
        }
    }
    Ok(v)
}

/// Eigenvalues and orthonormal eigenvectors of a small symmetric matrix
/// (row-major), by cyclic Jacobi rotations. Ascending order is not
/// guaranteed; pairs are returned as `(values[e], vectors[e])`.
fn sym_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(a.len(), n * n);
    assert!(n <= 16, "Jacobi eigensolver is for small matrices");
    if n == 1 {
        return (vec![a[0]], vec![vec![1.0]]);
    }
    let mut b = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |acc, &x| acc.max(libm::fabs(x)));
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += b[p * n + q] * b[p * n + q];
            }
        }
        if libm::sqrt(off) <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = b[p * n + q];
                if libm::fabs(apq) <= 1e-300 {
                    continue;
                }
                let theta = (b[q * n + q] - b[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let bkp = b[k * n + p];
                    let bkq = b[k * n + q];
                    b[k * n + p] = c * bkp - s * bkq;
                    b[k * n + q] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let bpk = b[p * n + k];
                    let bqk = b[q * n + k];
                    b[p * n + k] = c * bpk - s * bqk;
                    b[q * n + k] = s * bpk + c * bqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| b[i * n + i]).collect();
    let vectors = (0..n)
        .map(|e| (0..n).map(|r| v[r * n + e]).collect())
        .collect();
    (values, vectors)
}
