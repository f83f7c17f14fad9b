//! Problem data: potentials `V_i`, coupling coefficients `β_ij`, and the
//! grouping of components, plus hypothesis checks and detection of
//! configurations that admit no fully nontrivial nonnegative solution.
//!
//! The system under study is
//!
//! ```text
//! -Δu_i + V_i u_i = Σ_j β_ij u_j² u_i,   i = 1..d,
//! ```
//!
//! with `β` symmetric and `β_ii` bounded below by positive constants. The
//! components are partitioned into `m` groups; couplings inside a group are
//! expected to cooperate (`β_ij ≥ 0`), couplings across groups may compete.
//! Group structure is described by a cut vector `0 = a₀ < a₁ < … < a_m = d`:
//! group `h` holds components `a_h..a_{h+1}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::discretize::{Field, Grid};

/// Partition of component indices `0..d` into consecutive groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    // 0 = bounds[0] < bounds[1] < ... < bounds[m] = d
    bounds: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProblemError {
    BadDecomposition(String),
    ShapeMismatch(String),
    AsymmetricCoupling { i: usize, j: usize },
    NonPositiveDiagonal { i: usize },
    NegativePotential { i: usize },
    BadMu { i: usize },
    NonFinite(String),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::BadDecomposition(msg) => write!(f, "bad decomposition: {msg}"),
            ProblemError::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            ProblemError::AsymmetricCoupling { i, j } => {
                write!(f, "coupling ({i},{j}) differs from ({j},{i}); the matrix must be symmetric")
            }
            ProblemError::NonPositiveDiagonal { i } => {
                write!(f, "self-interaction coefficient of component {i} must be positive everywhere")
            }
            ProblemError::NegativePotential { i } => {
                write!(f, "potential of component {i} must be nonnegative (see crate docs)")
            }
            ProblemError::BadMu { i } => {
                write!(f, "mu[{i}] must satisfy 0 < mu[{i}] <= min of the diagonal coefficient")
            }
            ProblemError::NonFinite(what) => write!(f, "{what} contains a non-finite value"),
        }
    }
}

impl core::error::Error for ProblemError {}

impl Decomposition {
    /// Builds from the full cut vector `(0, a₁, …, d)`.
    pub fn new(bounds: Vec<usize>) -> Result<Self, ProblemError> {
        if bounds.len() < 2 {
            return Err(ProblemError::BadDecomposition(String::from(
                "need at least (0, d)",
            )));
        }
        if bounds[0] != 0 {
            return Err(ProblemError::BadDecomposition(String::from("must start at 0")));
        }
        if !bounds.windows(2).all(|w| w[0] < w[1]) {
            return Err(ProblemError::BadDecomposition(String::from(
                "cuts must be strictly increasing",
            )));
        }
        Ok(Decomposition { bounds })
    }

    /// Every component in its own group (`m = d`).
    pub fn singletons(d: usize) -> Self {
        Decomposition { bounds: (0..=d).collect() }
    }

    /// All components in one group (`m = 1`).
    pub fn single_group(d: usize) -> Self {
        assert!(d >= 1);
        Decomposition { bounds: vec![0, d] }
    }

    /// Number of components.
    pub fn d(&self) -> usize {
        *self.bounds.last().unwrap()
    }

    /// Number of groups.
    pub fn m(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Group index of component `i`.
    pub fn group_of(&self, i: usize) -> usize {
        assert!(i < self.d(), "component index {i} out of range");
        // bounds is short (m+1 entries); linear scan is fine.
        let mut h = 0;
        while self.bounds[h + 1] <= i {
            h += 1;
        }
        h
    }

    /// Component indices of group `h`.
    pub fn group_members(&self, h: usize) -> Range<usize> {
        assert!(h < self.m(), "group index {h} out of range");
        self.bounds[h]..self.bounds[h + 1]
    }

    pub fn same_group(&self, i: usize, j: usize) -> bool {
        self.group_of(i) == self.group_of(j)
    }

    /// Off-diagonal pairs `(i, j)`, `i < j`, inside a common group.
    pub fn k1_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for h in 0..self.m() {
            let r = self.group_members(h);
            for i in r.clone() {
                for j in i + 1..r.end {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Pairs `(i, j)`, `i < j`, in different groups.
    pub fn k2_pairs(&self) -> Vec<(usize, usize)> {
        let d = self.d();
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                if !self.same_group(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }
}

/// A scalar coefficient on the grid. Constants keep their exact value next
/// to the broadcast field so reports (suprema, sign checks) don't pick up
/// sampling noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    field: Field,
    constant: Option<f64>,
}

impl Coefficient {
    pub fn constant(n: usize, value: f64) -> Self {
        Coefficient { field: Field::constant(n, value), constant: Some(value) }
    }

    pub fn varying(field: Field) -> Self {
        Coefficient { field, constant: None }
    }

    pub fn from_fn(grid: &Grid, f: impl FnMut(f64) -> f64) -> Self {
        Coefficient { field: Field::from_fn(grid, f), constant: None }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    /// Largest value taken (exact for constants, nodal max otherwise).
    pub fn sup(&self) -> f64 {
        match self.constant {
            Some(c) => c,
            None => self.field.max(),
        }
    }

    /// Smallest value taken (exact for constants, nodal min otherwise).
    pub fn inf(&self) -> f64 {
        match self.constant {
            Some(c) => c,
            None => self.field.min(),
        }
    }
}

/// Validated problem data. Construction enforces the structural rules
/// (symmetry, positive diagonal, potential sign, `mu` bounds, shapes);
/// everything else about a spec is immutable afterwards, so values can be
/// shared freely across threads.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    grid: Grid,
    decomposition: Decomposition,
    potentials: Vec<Coefficient>,
    couplings: Vec<Vec<Coefficient>>,
    mu: Vec<f64>,
}

impl ProblemSpec {
    /// Builds and validates a spec. `mu = None` derives `mu_i` as the
    /// minimum of the diagonal coefficient `β_ii`; explicit values must lie
    /// in `(0, min β_ii]`.
    ///
    /// `couplings` must be exactly symmetric: entry `(i,j)` equal to `(j,i)`
    /// value for value. Potentials must be nonnegative — stricter than the
    /// continuum theory needs, but it keeps every `inner_h1` form positive
    /// definite without estimating the principal Dirichlet eigenvalue.
    pub fn new(
        grid: Grid,
        decomposition: Decomposition,
        potentials: Vec<Coefficient>,
        couplings: Vec<Vec<Coefficient>>,
        mu: Option<Vec<f64>>,
    ) -> Result<Self, ProblemError> {
        let d = decomposition.d();
        let n = grid.n_interior();
        if potentials.len() != d {
            return Err(ProblemError::ShapeMismatch(format!(
                "{} potentials for {} components",
                potentials.len(),
                d
            )));
        }
        if couplings.len() != d || couplings.iter().any(|row| row.len() != d) {
            return Err(ProblemError::ShapeMismatch(format!("coupling matrix must be {d}x{d}")));
        }
        for (i, p) in potentials.iter().enumerate() {
            if p.field().len() != n {
                return Err(ProblemError::ShapeMismatch(format!(
                    "potential {i} has {} values, grid has {n} nodes",
                    p.field().len()
                )));
            }
            if p.field().values().iter().any(|v| !v.is_finite()) {
                return Err(ProblemError::NonFinite(format!("potential {i}")));
            }
            if p.inf() < 0.0 {
                return Err(ProblemError::NegativePotential { i });
            }
        }
        for i in 0..d {
            for j in 0..d {
                let c = &couplings[i][j];
                if c.field().len() != n {
                    return Err(ProblemError::ShapeMismatch(format!(
                        "coupling ({i},{j}) has {} values, grid has {n} nodes",
                        c.field().len()
                    )));
                }
                if c.field().values().iter().any(|v| !v.is_finite()) {
                    return Err(ProblemError::NonFinite(format!("coupling ({i},{j})")));
                }
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                if couplings[i][j].field() != couplings[j][i].field() {
                    return Err(ProblemError::AsymmetricCoupling { i, j });
                }
            }
        }
        for i in 0..d {
            if couplings[i][i].inf() <= 0.0 {
                return Err(ProblemError::NonPositiveDiagonal { i });
            }
        }
        let mu = match mu {
            Some(mu) => {
                if mu.len() != d {
                    return Err(ProblemError::ShapeMismatch(format!(
                        "{} mu values for {d} components",
                        mu.len()
                    )));
                }
                for i in 0..d {
                    if !(mu[i] > 0.0) || !mu[i].is_finite() || mu[i] > couplings[i][i].inf() {
                        return Err(ProblemError::BadMu { i });
                    }
                }
                mu
            }
            None => (0..d).map(|i| couplings[i][i].inf()).collect(),
        };
        Ok(ProblemSpec { grid, decomposition, potentials, couplings, mu })
    }

    /// Convenience constructor: constant potentials and couplings.
    pub fn from_constants(
        grid: Grid,
        decomposition: Decomposition,
        potentials: &[f64],
        couplings: &[Vec<f64>],
    ) -> Result<Self, ProblemError> {
        let n = grid.n_interior();
        let pot = potentials.iter().map(|&v| Coefficient::constant(n, v)).collect();
        let coup = couplings
            .iter()
            .map(|row| row.iter().map(|&b| Coefficient::constant(n, b)).collect())
            .collect();
        ProblemSpec::new(grid, decomposition, pot, coup, None)
    }

    /// Copy with the coupling `(i, j)` (and `(j, i)`) replaced by a
    /// constant. The workhorse of competition sweeps.
    pub fn with_coupling_constant(&self, i: usize, j: usize, value: f64) -> Self {
        assert!(i != j, "use the constructor to change a diagonal coefficient");
        assert!(i < self.d() && j < self.d());
        assert!(value.is_finite());
        let mut out = self.clone();
        let c = Coefficient::constant(self.grid.n_interior(), value);
        out.couplings[i][j] = c.clone();
        out.couplings[j][i] = c;
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn d(&self) -> usize {
        self.decomposition.d()
    }

    pub fn m(&self) -> usize {
        self.decomposition.m()
    }

    pub fn potential(&self, i: usize) -> &Field {
        self.potentials[i].field()
    }

    pub fn potential_coeff(&self, i: usize) -> &Coefficient {
        &self.potentials[i]
    }

    pub fn coupling(&self, i: usize, j: usize) -> &Field {
        self.couplings[i][j].field()
    }

    pub fn coupling_coeff(&self, i: usize, j: usize) -> &Coefficient {
        &self.couplings[i][j]
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
}

/// Soft hypothesis summary. Structural problems are caught at construction;
/// these fields report the sign structure the theory cares about.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    /// Symmetry and positive-diagonal lower bounds (re-checked, true for
    /// every successfully constructed spec).
    pub h0_ok: bool,
    /// Nonnegative couplings on all same-group pairs.
    pub h1_ok: bool,
    /// `max over cross-group pairs of sup β_ij⁺` — 0 when no cross-group
    /// coupling is ever positive (or there are no cross-group pairs).
    pub max_pos_part_k2: f64,
    /// `−max over cross-group pairs of sup β_ij`: the competition strength
    /// guaranteed across every cross-group pair (weakest link). Negative
    /// when some pair cooperates somewhere; 0 when there are no pairs.
    pub min_competition_k2: f64,
    /// All cross-group couplings `≤ 0` everywhere (vacuously true for a
    /// single group).
    pub pure_competition_k2: bool,
    /// Ordered pairs from [`detect_nonexistence`].
    pub nonexistence_pairs: Vec<(usize, usize)>,
}

/// Checks the sign hypotheses and summarizes the cross-group coupling
/// structure. Pure and idempotent.
pub fn validate(spec: &ProblemSpec) -> HypothesisReport {
    let d = spec.d();
    let mut h0_ok = true;
    for i in 0..d {
        if !(spec.mu()[i] > 0.0) || spec.coupling_coeff(i, i).inf() < spec.mu()[i] {
            h0_ok = false;
        }
        for j in i + 1..d {
            if spec.coupling(i, j) != spec.coupling(j, i) {
                h0_ok = false;
            }
        }
    }

    let h1_ok = spec
        .decomposition()
        .k1_pairs()
        .iter()
        .all(|&(i, j)| spec.coupling_coeff(i, j).inf() >= 0.0);

    let k2 = spec.decomposition().k2_pairs();
    let mut max_pos_part = 0.0f64;
    let mut max_sup = f64::NEG_INFINITY;
    for &(i, j) in &k2 {
        let sup = spec.coupling_coeff(i, j).sup();
        max_pos_part = max_pos_part.max(sup.max(0.0));
        max_sup = max_sup.max(sup);
    }
    let (min_competition_k2, pure_competition_k2) = if k2.is_empty() {
        (0.0, true)
    } else {
        (-max_sup, max_sup <= 0.0)
    };

    HypothesisReport {
        h0_ok,
        h1_ok,
        max_pos_part_k2: max_pos_part,
        min_competition_k2,
        pure_competition_k2,
        nonexistence_pairs: detect_nonexistence(spec),
    }
}

/// Finds ordered pairs `(i, j)` for which no solution with both `u_i` and
/// `u_j` nonnegative and nontrivial can exist: `V_i ≥ V_j` everywhere and
/// `β_ik ≤ β_jk` everywhere for every `k`, with strict inequality at some
/// node (all nodes carry positive quadrature weight). In that configuration
/// component `i` is dominated by component `j` and must vanish.
pub fn detect_nonexistence(spec: &ProblemSpec) -> Vec<(usize, usize)> {
    let d = spec.d();
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut dominated = true;
            let mut strict = false;
            let vi = spec.potential(i).values();
            let vj = spec.potential(j).values();
            for (a, b) in vi.iter().zip(vj) {
                if a < b {
                    dominated = false;
                    break;
                }
                if a > b {
                    strict = true;
                }
            }
            if dominated {
                'rows: for k in 0..d {
                    let bik = spec.coupling(i, k).values();
                    let bjk = spec.coupling(j, k).values();
                    for (a, b) in bik.iter().zip(bjk) {
                        if a > b {
                            dominated = false;
                            break 'rows;
                        }
                        if a < b {
                            strict = true;
                        }
                    }
                }
            }
            if dominated && strict {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Grid;

    fn grid() -> Grid {
        Grid::interval(1.0, 16).unwrap()
    }

    #[test]
    fn decomposition_rules() {
        assert!(Decomposition::new(vec![0, 2, 3]).is_ok());
        assert!(Decomposition::new(vec![1, 3]).is_err());
        assert!(Decomposition::new(vec![0, 2, 2]).is_err());
        assert!(Decomposition::new(vec![0]).is_err());

        let dec = Decomposition::new(vec![0, 2, 3]).unwrap();
        assert_eq!(dec.d(), 3);
        assert_eq!(dec.m(), 2);
        assert_eq!(dec.group_of(0), 0);
        assert_eq!(dec.group_of(1), 0);
        assert_eq!(dec.group_of(2), 1);
        assert_eq!(dec.group_members(0), 0..2);
        assert_eq!(dec.k1_pairs(), vec![(0, 1)]);
        assert_eq!(dec.k2_pairs(), vec![(0, 2), (1, 2)]);
        assert!(dec.same_group(0, 1));
        assert!(!dec.same_group(1, 2));

        let singles = Decomposition::singletons(3);
        assert!(singles.k1_pairs().is_empty());
        assert_eq!(singles.k2_pairs().len(), 3);
        assert_eq!(Decomposition::single_group(3).k2_pairs(), vec![]);
    }

    #[test]
    fn constructor_enforces_structure() {
        let g = grid();
        let dec = Decomposition::singletons(2);

        let ok = ProblemSpec::from_constants(
            g.clone(),
            dec.clone(),
            &[1.0, 1.0],
            &[vec![1.0, -1.0], vec![-1.0, 1.0]],
        );
        assert!(ok.is_ok());
        // mu derived from the diagonal.
        assert_eq!(ok.unwrap().mu(), &[1.0, 1.0]);

        let asym = ProblemSpec::from_constants(
            g.clone(),
            dec.clone(),
            &[1.0, 1.0],
            &[vec![1.0, -1.0], vec![-2.0, 1.0]],
        );
        assert!(matches!(asym.unwrap_err(), ProblemError::AsymmetricCoupling { i: 0, j: 1 }));

        let bad_diag = ProblemSpec::from_constants(
            g.clone(),
            dec.clone(),
            &[1.0, 1.0],
            &[vec![0.0, -1.0], vec![-1.0, 1.0]],
        );
        assert!(matches!(bad_diag.unwrap_err(), ProblemError::NonPositiveDiagonal { i: 0 }));

        let bad_pot = ProblemSpec::from_constants(
            g.clone(),
            dec.clone(),
            &[-0.5, 1.0],
            &[vec![1.0, -1.0], vec![-1.0, 1.0]],
        );
        assert!(matches!(bad_pot.unwrap_err(), ProblemError::NegativePotential { i: 0 }));

        let n = g.n_interior();
        let coeff = |v: f64| Coefficient::constant(n, v);
        let bad_mu = ProblemSpec::new(
            g.clone(),
            dec.clone(),
            vec![coeff(1.0), coeff(1.0)],
            vec![vec![coeff(1.0), coeff(-1.0)], vec![coeff(-1.0), coeff(1.0)]],
            Some(vec![1.5, 0.5]),
        );
        assert!(matches!(bad_mu.unwrap_err(), ProblemError::BadMu { i: 0 }));
    }

    #[test]
    fn validate_reports_sign_structure() {
        let g = grid();
        // Two singleton groups, pure competition.
        let spec = ProblemSpec::from_constants(
            g.clone(),
            Decomposition::singletons(2),
            &[1.0, 1.0],
            &[vec![1.0, -1.0], vec![-1.0, 1.0]],
        )
        .unwrap();
        let rep = validate(&spec);
        assert!(rep.h0_ok);
        assert!(rep.h1_ok, "no same-group pairs to violate");
        assert!(rep.pure_competition_k2);
        assert_eq!(rep.max_pos_part_k2, 0.0);
        assert_eq!(rep.min_competition_k2, 1.0);

        // Grouped d=3 with a negative same-group coupling.
        let spec = ProblemSpec::from_constants(
            g.clone(),
            Decomposition::new(vec![0, 2, 3]).unwrap(),
            &[1.0, 1.0, 1.0],
            &[
                vec![1.0, -0.1, -1.0],
                vec![-0.1, 1.0, -1.0],
                vec![-1.0, -1.0, 1.0],
            ],
        )
        .unwrap();
        assert!(!validate(&spec).h1_ok);
    }

    #[test]
    fn validate_varying_cross_coupling() {
        let g = grid();
        let n = g.n_interior();
        let cross = Coefficient::from_fn(&g, |x| 0.5 - x);
        let one = Coefficient::constant(n, 1.0);
        let spec = ProblemSpec::new(
            g.clone(),
            Decomposition::singletons(2),
            vec![one.clone(), one.clone()],
            vec![vec![one.clone(), cross.clone()], vec![cross, one.clone()]],
            None,
        )
        .unwrap();
        let rep = validate(&spec);
        // Nodal max of 0.5 - x is at the first node x = h.
        let expect = 0.5 - g.spacing();
        assert!((rep.max_pos_part_k2 - expect).abs() < 1e-14);
        assert!(!rep.pure_competition_k2);
        assert_eq!(rep.min_competition_k2, -rep.max_pos_part_k2);
    }

    #[test]
    fn nonexistence_detection() {
        let g = grid();
        // Coupling strictly between the two diagonals dominates component 0.
        let spec = ProblemSpec::from_constants(
            g.clone(),
            Decomposition::singletons(2),
            &[1.0, 1.0],
            &[vec![1.0, 1.5], vec![1.5, 2.0]],
        )
        .unwrap();
        let pairs = detect_nonexistence(&spec);
        assert_eq!(pairs, vec![(0, 1)]);

        // Fully symmetric spec: nothing is strictly dominated.
        let spec = ProblemSpec::from_constants(
            g.clone(),
            Decomposition::singletons(2),
            &[1.0, 1.0],
            &[vec![1.0, 0.5], vec![0.5, 1.0]],
        )
        .unwrap();
        assert!(detect_nonexistence(&spec).is_empty());

        // Potential comparison with identical couplings: only the component
        // sitting in the strictly larger well is flagged.
        let n = g.n_interior();
        let one = Coefficient::constant(n, 1.0);
        let spec = ProblemSpec::new(
            g.clone(),
            Decomposition::singletons(2),
            vec![Coefficient::from_fn(&g, |x| 1.0 + x * x), one.clone()],
            vec![vec![one.clone(), one.clone()], vec![one.clone(), one.clone()]],
            None,
        )
        .unwrap();
        assert_eq!(detect_nonexistence(&spec), vec![(0, 1)]);
    }

    #[test]
    fn sweep_override_is_symmetric() {
        let g = grid();
        let spec = ProblemSpec::from_constants(
            g,
            Decomposition::singletons(2),
            &[1.0, 1.0],
            &[vec![1.0, -1.0], vec![-1.0, 1.0]],
        )
        .unwrap();
        let swept = spec.with_coupling_constant(0, 1, -25.0);
        assert_eq!(swept.coupling_coeff(0, 1).as_constant(), Some(-25.0));
        assert_eq!(swept.coupling(0, 1), swept.coupling(1, 0));
        assert_eq!(swept.coupling_coeff(0, 0).as_constant(), Some(1.0));
        // Original untouched.
        assert_eq!(spec.coupling_coeff(0, 1).as_constant(), Some(-1.0));
    }
}
