//! Read-only diagnostics on computed states: the energy identity, mass and
//! Sobolev inequalities, pairwise overlaps, the segregated limit
//! functional, and the second-variation instability test for semi-trivial
//! states (states with an identically zero component).

use alloc::vec::Vec;
use core::fmt;

use crate::discretize::{inner_h1, norm_l4_sq, quad_with, sobolev_constant};
use crate::nehari::{energy, group_norms_sq, interaction_matrix, State};
use crate::problem::ProblemSpec;

/// Raw quantities behind the a-priori bounds, with the two sign checks that
/// are assertable without non-explicit constants.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    /// False when the state's constraint residual exceeds 1e-8 relative —
    /// every other field is still filled, but the inequalities only carry
    /// meaning on the constraint set.
    pub valid: bool,
    /// `Σ_i ‖u_i‖²_{V_i}`.
    pub total_h1: f64,
    /// `Σ_{i∈I_h} |u_i|₄²` per group.
    pub group_l4: Vec<f64>,
    /// `Σ_{ij} ∫ β_ij⁻ (u_i u_j)²` — the competing part of the interaction.
    pub competitive_mass: f64,
    /// `Σ_{ij} ∫ β_ij⁺ (u_i u_j)²` — the cooperating part.
    pub cooperative_mass: f64,
    /// `|J(u) − ¼ total_h1|`; vanishes on the constraint set.
    pub energy_identity_gap: f64,
    /// The numerically computed constant of `S·|u|₄² ≤ ‖u‖²_V`, minimized
    /// over components (duplicate potentials are solved once).
    pub sobolev_constant: f64,
    /// `‖u_h‖² − S·Σ_{i∈I_h}|u_i|₄²` per group; nonnegative up to solver
    /// precision in the constant.
    pub sobolev_gap: Vec<f64>,
}

impl BoundsReport {
    /// The constraint identity forces the cooperative part to pay for the
    /// competitive part: `competitive ≤ cooperative` on the constraint set.
    pub fn competition_dominated(&self) -> bool {
        self.competitive_mass <= self.cooperative_mass + 1e-8 * (1.0 + self.cooperative_mass)
    }

    /// Group-wise discrete Sobolev inequality with slack for the computed
    /// constant.
    pub fn sobolev_holds(&self) -> bool {
        self.sobolev_gap.iter().all(|&g| g >= -1e-9)
    }
}

pub fn bounds_report(spec: &ProblemSpec, u: &State) -> BoundsReport {
    let grid = spec.grid();
    let dec = spec.decomposition();
    let d = spec.d();

    let b = group_norms_sq(spec, u);
    let total_h1: f64 = b.iter().sum();
    let comp_l4: Vec<f64> = (0..d).map(|i| norm_l4_sq(grid, u.component(i))).collect();
    let group_l4: Vec<f64> = (0..dec.m())
        .map(|h| dec.group_members(h).map(|i| comp_l4[i]).sum())
        .collect();

    let mut competitive_mass = 0.0;
    let mut cooperative_mass = 0.0;
    for i in 0..d {
        for j in 0..d {
            let beta = spec.coupling(i, j).values();
            let ui = u.component(i).values();
            let uj = u.component(j).values();
            let plus = quad_with(grid, |k| {
                let prod = ui[k] * uj[k];
                beta[k].max(0.0) * prod * prod
            });
            let minus = quad_with(grid, |k| {
                let prod = ui[k] * uj[k];
                (-beta[k]).max(0.0) * prod * prod
            });
            cooperative_mass += plus;
            competitive_mass += minus;
        }
    }

    let energy_identity_gap = libm::fabs(energy(spec, u) - 0.25 * total_h1);

    // Residual-based validity: the inequalities below are consequences of
    // the constraint identity, meaningless far from the set.
    let mat = interaction_matrix(spec, u);
    let rows = mat.row_sums();
    let rel_res = b
        .iter()
        .zip(&rows)
        .map(|(&bh, &rh)| if bh > 0.0 { libm::fabs(bh - rh) / bh } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let valid = rel_res <= 1e-8 && b.iter().all(|&x| x > 0.0);

    // One Sobolev solve per distinct potential.
    let mut constants: Vec<Option<f64>> = alloc::vec![None; d];
    for i in 0..d {
        if constants[i].is_some() {
            continue;
        }
        let s = sobolev_constant(grid, Some(spec.potential(i))).value;
        for j in i..d {
            if constants[j].is_none() && spec.potential(j) == spec.potential(i) {
                constants[j] = Some(s);
            }
        }
    }
    let sobolev_const = constants
        .iter()
        .map(|c| c.unwrap())
        .fold(f64::INFINITY, f64::min);
    let sobolev_gap: Vec<f64> = (0..dec.m())
        .map(|h| b[h] - sobolev_const * group_l4[h])
        .collect();

    let report = BoundsReport {
        valid,
        total_h1,
        group_l4,
        competitive_mass,
        cooperative_mass,
        energy_identity_gap,
        sobolev_constant: sobolev_const,
        sobolev_gap,
    };
    if report.valid {
        debug_assert!(report.competition_dominated(), "constraint identity violated");
        debug_assert!(report.sobolev_holds(), "discrete Sobolev inequality violated");
    }
    report
}

/// Pairwise overlap integrals, row-major `d×d`: entry `(i,j)` is
/// `∫ (u_i u_j)²`; the diagonal holds `∫ u_i⁴`.
pub fn overlap_matrix(spec: &ProblemSpec, u: &State) -> Vec<f64> {
    let d = spec.d();
    let grid = spec.grid();
    let mut out = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let ui = u.component(i).values();
            let uj = u.component(j).values();
            let v = quad_with(grid, |k| {
                let p = ui[k] * uj[k];
                p * p
            });
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
    out
}

/// Energy of the segregated limit functional — same-group interactions
/// only, cross-group couplings dropped — together with its constraint
/// residuals `‖u_h‖² − M_hh`. A fully segregated state has limit energy
/// equal to its energy; along a competition sweep the residuals measure how
/// far the computed states are from the limit constraint set.
pub fn limit_energy_and_residuals(spec: &ProblemSpec, u: &State) -> (f64, Vec<f64>) {
    let b = group_norms_sq(spec, u);
    let mat = interaction_matrix(spec, u);
    let m = mat.m();
    let mut j_inf = 0.0;
    let mut residuals = Vec::with_capacity(m);
    for h in 0..m {
        j_inf += 0.5 * b[h] - 0.25 * mat.entry(h, h);
        residuals.push(b[h] - mat.entry(h, h));
    }
    (j_inf, residuals)
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnalysisError {
    /// The designated zero component carries too much mass for a
    /// semi-trivial test: `|u_i|₄²` must be ≤ 1e-6 times the largest
    /// component's.
    ComponentNotZero { index: usize, l4_sq: f64, threshold: f64 },
    /// The donor must share the zero component's group.
    DonorNotInGroup { zero_index: usize, donor_index: usize },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::ComponentNotZero { index, l4_sq, threshold } => write!(
                f,
                "component {index} is not numerically zero (|u|₄² = {l4_sq}, threshold {threshold})"
            ),
            AnalysisError::DonorNotInGroup { zero_index, donor_index } => write!(
                f,
                "donor {donor_index} is not in the same group as zero component {zero_index}"
            ),
        }
    }
}

impl core::error::Error for AnalysisError {}

/// Second variation of the energy at a semi-trivial state `u` (component
/// `zero_index` numerically zero) along the test direction that copies the
/// donor component into the zero slot: `v_{zero} = u_{donor}`, zero
/// elsewhere. That direction is tangent to the constraint set by
/// construction, and the second variation specializes to
///
/// ```text
/// D²J(u)[v,v] = ‖u_donor‖²_{V_zero} − Σ_k ∫ β_{zero,k} (u_donor u_k)².
/// ```
///
/// A negative value certifies that the semi-trivial state is not a
/// constrained local minimum: energy can be lowered by populating the empty
/// slot.
pub fn second_variation_test(
    spec: &ProblemSpec,
    u: &State,
    zero_index: usize,
    donor_index: usize,
) -> Result<f64, AnalysisError> {
    let d = spec.d();
    assert!(zero_index < d && donor_index < d, "component index out of range");
    assert!(zero_index != donor_index, "donor must differ from the zero slot");
    let grid = spec.grid();

    let l4: Vec<f64> = (0..d).map(|i| norm_l4_sq(grid, u.component(i))).collect();
    let max_l4 = l4.iter().fold(0.0f64, |a, &b| a.max(b));
    let threshold = 1e-6 * max_l4;
    if l4[zero_index] > threshold {
        return Err(AnalysisError::ComponentNotZero {
            index: zero_index,
            l4_sq: l4[zero_index],
            threshold,
        });
    }
    if !spec.decomposition().same_group(zero_index, donor_index) {
        return Err(AnalysisError::DonorNotInGroup { zero_index, donor_index });
    }

    let w = u.component(donor_index);
    let mut value = inner_h1(grid, w, w, spec.potential(zero_index));
    for k in 0..d {
        let beta = spec.coupling(zero_index, k).values();
        let uk = u.component(k).values();
        let ww = w.values();
        value -= quad_with(grid, |x| {
            let p = ww[x] * uk[x];
            beta[x] * p * p
        });
    }
    Ok(value)
}

/// One row of a competition sweep: the swept coupling magnitude, the
/// state's energy, its cross-group overlaps (ordered like
/// `decomposition.k2_pairs()`), masses, and the segregated-limit
/// diagnostics.
#[derive(Clone, Debug)]
pub struct SegregationRecord {
    pub b: f64,
    pub energy: f64,
    pub overlaps: Vec<f64>,
    pub competitive_mass: f64,
    pub limit_energy: f64,
    pub limit_nehari_residuals: Vec<f64>,
    pub min_component_l4: f64,
}

pub fn segregation_record(spec: &ProblemSpec, u: &State, b: f64) -> SegregationRecord {
    let grid = spec.grid();
    let d = spec.d();
    let over = overlap_matrix(spec, u);
    let overlaps = spec
        .decomposition()
        .k2_pairs()
        .iter()
        .map(|&(i, j)| over[i * d + j])
        .collect();
    let mut competitive_mass = 0.0;
    for i in 0..d {
        for j in 0..d {
            let beta = spec.coupling(i, j).values();
            let ui = u.component(i).values();
            let uj = u.component(j).values();
            competitive_mass += quad_with(grid, |k| {
                let p = ui[k] * uj[k];
                (-beta[k]).max(0.0) * p * p
            });
        }
    }
    let (limit_energy, limit_nehari_residuals) = limit_energy_and_residuals(spec, u);
    let min_component_l4 = (0..d)
        .map(|i| norm_l4_sq(grid, u.component(i)))
        .fold(f64::INFINITY, f64::min);
    SegregationRecord {
        b,
        energy: energy(spec, u),
        overlaps,
        competitive_mass,
        limit_energy,
        limit_nehari_residuals,
        min_component_l4,
    }
}
