//! Spatial discretization on an interval or a radially symmetric ball.
//!
//! Both geometries reduce to one radial/axial coordinate with `n` interior
//! nodes at `(k+1)·h`, homogeneous Dirichlet data at the outer boundary, and
//! quadrature weights `h` (interval) or `h·r^(N-1)` (ball, times the surface
//! measure of the unit sphere). The Dirichlet Laplacian is the second-order
//! central stencil; on the ball the first interior node uses a reflection
//! ghost (`u(-r₁) = u(r₁)`, Neumann-like at the origin).
//!
//! The discrete stiffness form used by [`inner_h1`] is assembled over edges
//! with coefficients chosen so that summation by parts is exact:
//! `inner_h1(u, v, V) = integrate(apply_laplacian(u)·v) + integrate(V·u·v)`
//! up to roundoff, for every pair of fields. Everything downstream (energy
//! identities, constraint gradients, multiplier estimates) leans on that
//! exactness.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// Interval `(0, L)` with Dirichlet ends, ambient dimension 1.
    Interval,
    /// Ball of radius `R` in dimension `N ∈ {1,2,3}`, radially symmetric
    /// fields, Dirichlet at `r = R`, symmetric treatment at the origin.
    RadialBall,
}

/// Uniform one-coordinate grid. Interior nodes sit at `(k+1)·spacing`,
/// `k = 0..n_interior`; boundary nodes are implicit and carry value zero.
#[derive(Clone, Debug)]
pub struct Grid {
    kind: GridKind,
    size: f64,
    dimension: u32,
    n_interior: usize,
    spacing: f64,
    weights: Vec<f64>,
    angular: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridError {
    NonPositiveSize,
    TooFewNodes,
    BadDimension(u32),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::NonPositiveSize => write!(f, "domain size must be positive and finite"),
            GridError::TooFewNodes => write!(f, "need at least 3 interior nodes"),
            GridError::BadDimension(n) => write!(f, "dimension {n} unsupported (want 1, 2, or 3)"),
        }
    }
}

impl core::error::Error for GridError {}

impl Grid {
    /// Interval `(0, length)` with `n_interior` interior nodes.
    pub fn interval(length: f64, n_interior: usize) -> Result<Self, GridError> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(GridError::NonPositiveSize);
        }
        if n_interior < 3 {
            return Err(GridError::TooFewNodes);
        }
        let spacing = length / (n_interior + 1) as f64;
        let weights = vec![spacing; n_interior];
        Ok(Grid {
            kind: GridKind::Interval,
            size: length,
            dimension: 1,
            n_interior,
            spacing,
            weights,
            angular: 1.0,
        })
    }

    /// Ball of radius `radius` in dimension `dimension`, radial fields.
    pub fn radial_ball(radius: f64, dimension: u32, n_interior: usize) -> Result<Self, GridError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GridError::NonPositiveSize);
        }
        if n_interior < 3 {
            return Err(GridError::TooFewNodes);
        }
        let angular = match dimension {
            1 => 2.0,
            2 => 2.0 * PI,
            3 => 4.0 * PI,
            other => return Err(GridError::BadDimension(other)),
        };
        let spacing = radius / (n_interior + 1) as f64;
        let mut weights = Vec::with_capacity(n_interior);
        for k in 0..n_interior {
            let r = (k + 1) as f64 * spacing;
            let rw = match dimension {
                1 => 1.0,
                2 => r,
                _ => r * r,
            };
            weights.push(spacing * rw);
        }
        Ok(Grid {
            kind: GridKind::RadialBall,
            size: radius,
            dimension,
            n_interior,
            spacing,
            weights,
            angular,
        })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Interval length or ball radius.
    pub fn size(&self) -> f64 {
        self.size
    }

    /// Ambient dimension `N` (1 for intervals).
    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weights per interior node, excluding the angular factor.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Surface measure of the unit sphere (1 for intervals): `integrate`
    /// multiplies the weighted nodal sum by this constant.
    pub fn angular_factor(&self) -> f64 {
        self.angular
    }

    /// Coordinate of interior node `k` (the `x` or `r` value).
    pub fn node_coord(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.spacing
    }

    /// Stiffness coefficient of edge `j` joining nodes `j` and `j+1`
    /// (node `n_interior` is the Dirichlet boundary). On the ball the edge
    /// below the first node is absent: the origin is a natural boundary.
    fn edge_coeff(&self, j: usize) -> f64 {
        let h = self.spacing;
        match self.kind {
            GridKind::Interval => 1.0 / h,
            GridKind::RadialBall => {
                let k = (j + 1) as f64;
                match self.dimension {
                    1 => 1.0 / h,
                    2 => k + 0.5,
                    _ => h * k * (k + 1.0),
                }
            }
        }
    }
}

/// Nodal values of a scalar function at the interior nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn zeros(n: usize) -> Self {
        Field { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field { values: vec![c; n] }
    }

    /// Samples `f` at the node coordinates of `grid`.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..grid.n_interior()).map(|k| f(grid.node_coord(k))).collect();
        Field { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }
}

fn check_len(grid: &Grid, f: &Field, what: &str) {
    assert_eq!(
        f.len(),
        grid.n_interior(),
        "{what}: field has {} values, grid has {} interior nodes",
        f.len(),
        grid.n_interior()
    );
}

/// Applies the negative Dirichlet Laplacian: `-u''` on intervals,
/// `-(u'' + (N-1)/r · u')` on balls with the origin ghost `u(-r₁) = u(r₁)`.
pub fn apply_laplacian(grid: &Grid, u: &Field) -> Field {
    check_len(grid, u, "apply_laplacian");
    let n = grid.n_interior();
    let h = grid.spacing();
    let uu = u.values();
    let mut out = vec![0.0; n];
    match grid.kind() {
        GridKind::Interval => {
            let h2 = h * h;
            for k in 0..n {
                let left = if k == 0 { 0.0 } else { uu[k - 1] };
                let right = if k + 1 == n { 0.0 } else { uu[k + 1] };
                out[k] = (2.0 * uu[k] - left - right) / h2;
            }
        }
        GridKind::RadialBall => {
            let h2 = h * h;
            let nd = grid.dimension() as f64;
            // Origin-adjacent node: the reflection ghost collapses the
            // stencil to a one-sided difference with weight (N+1)/2.
            out[0] = (nd + 1.0) / (2.0 * h2) * (uu[0] - if n > 1 { uu[1] } else { 0.0 });
            for k in 1..n {
                let left = uu[k - 1];
                let right = if k + 1 == n { 0.0 } else { uu[k + 1] };
                let r = grid.node_coord(k);
                out[k] = (2.0 * uu[k] - left - right) / h2
                    - (nd - 1.0) / r * (right - left) / (2.0 * h);
            }
        }
    }
    Field::from_values(out)
}

/// Quadrature: `∫ f` over the domain, including the angular factor.
pub fn integrate(grid: &Grid, f: &Field) -> f64 {
    check_len(grid, f, "integrate");
    let mut s = 0.0;
    for (w, v) in grid.weights().iter().zip(f.values()) {
        s += w * v;
    }
    grid.angular_factor() * s
}

/// Quadrature of a nodal expression without materializing a field.
pub(crate) fn quad_with(grid: &Grid, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut s = 0.0;
    for (k, w) in grid.weights().iter().enumerate() {
        s += w * f(k);
    }
    grid.angular_factor() * s
}

/// H¹-type bilinear form: edge-based stiffness plus `∫ V u v`. Symmetric by
/// construction and, by summation by parts, equal to
/// `integrate(apply_laplacian(u)·v) + integrate(V·u·v)` up to roundoff.
pub fn inner_h1(grid: &Grid, u: &Field, v: &Field, zero_order: &Field) -> f64 {
    check_len(grid, u, "inner_h1");
    check_len(grid, v, "inner_h1");
    check_len(grid, zero_order, "inner_h1");
    let n = grid.n_interior();
    let uu = u.values();
    let vv = v.values();
    let mut s = 0.0;
    // Products are grouped (u-factor · v-factor) first so the form is
    // symmetric down to the last bit.
    match grid.kind() {
        GridKind::Interval => {
            // Boundary edges see the implicit zero nodes.
            s += grid.edge_coeff(0) * (uu[0] * vv[0]);
            for j in 0..n - 1 {
                s += grid.edge_coeff(j) * ((uu[j + 1] - uu[j]) * (vv[j + 1] - vv[j]));
            }
            s += grid.edge_coeff(n - 1) * (uu[n - 1] * vv[n - 1]);
        }
        GridKind::RadialBall => {
            for j in 0..n - 1 {
                s += grid.edge_coeff(j) * ((uu[j + 1] - uu[j]) * (vv[j + 1] - vv[j]));
            }
            s += grid.edge_coeff(n - 1) * (uu[n - 1] * vv[n - 1]);
        }
    }
    let mut z = 0.0;
    for (k, w) in grid.weights().iter().enumerate() {
        z += w * zero_order.values()[k] * (uu[k] * vv[k]);
    }
    grid.angular_factor() * s + grid.angular_factor() * z
}

/// `|u|₄² = (∫ u⁴)^(1/2)`, the squared L⁴ norm.
pub fn norm_l4_sq(grid: &Grid, u: &Field) -> f64 {
    check_len(grid, u, "norm_l4_sq");
    libm::sqrt(quad_with(grid, |k| {
        let x = u.values()[k];
        x * x * x * x
    }))
}

/// Discrete L² norm `(∫ u²)^(1/2)`.
pub fn norm_l2(grid: &Grid, u: &Field) -> f64 {
    check_len(grid, u, "norm_l2");
    libm::sqrt(quad_with(grid, |k| {
        let x = u.values()[k];
        x * x
    }))
}

/// Solves `(-Δ + V) x = rhs` (Dirichlet) — the Riesz map of the `inner_h1`
/// form. Used as an elliptic preconditioner; requires `V ≥ 0`.
pub(crate) fn riesz_h1(grid: &Grid, zero_order: &Field, rhs: &Field) -> Field {
    check_len(grid, rhs, "riesz_h1");
    check_len(grid, zero_order, "riesz_h1");
    let n = grid.n_interior();
    let w = grid.weights();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1]; // edge between k and k+1
    match grid.kind() {
        GridKind::Interval => {
            for k in 0..n {
                diag[k] = grid.edge_coeff(0) * 2.0 + w[k] * zero_order.values()[k];
            }
            for j in 0..n - 1 {
                off[j] = -grid.edge_coeff(j);
            }
        }
        GridKind::RadialBall => {
            for k in 0..n {
                let below = if k == 0 { 0.0 } else { grid.edge_coeff(k - 1) };
                diag[k] = below + grid.edge_coeff(k) + w[k] * zero_order.values()[k];
            }
            for j in 0..n - 1 {
                off[j] = -grid.edge_coeff(j);
            }
        }
    }
    // Thomas sweep; the matrix is symmetric positive definite.
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut b = vec![0.0; n];
    for k in 0..n {
        b[k] = w[k] * rhs.values()[k];
    }
    d[0] = diag[0];
    for k in 1..n {
        c[k - 1] = off[k - 1] / d[k - 1];
        d[k] = diag[k] - off[k - 1] * c[k - 1];
        b[k] -= c[k - 1] * b[k - 1];
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = (b[k] - off[k] * x[k + 1]) / d[k];
    }
    Field::from_values(x)
}

/// Outcome of the Sobolev-constant minimization.
#[derive(Clone, Debug)]
pub struct SobolevEstimate {
    /// Best value of `inner_h1(u,u,V) / |u|₄²` found.
    pub value: f64,
    /// False when the best run hit the iteration cap before stagnating.
    pub converged: bool,
    pub iterations: usize,
}

/// Numerical Sobolev constant: minimizes the quotient
/// `inner_h1(u, u, V) / |u|₄²` by normalized gradient descent from several
/// deterministic starts (one smooth fundamental-mode profile, the rest
/// seeded noise). With `zero_order = None` the quotient uses the pure
/// gradient form, giving the constant of `S·|u|₄² ≤ ∫|∇u|²`.
pub fn sobolev_constant(grid: &Grid, zero_order: Option<&Field>) -> SobolevEstimate {
    const STARTS: u64 = 5;
    let n = grid.n_interior();
    let v = match zero_order {
        Some(f) => f.clone(),
        None => Field::zeros(n),
    };

    let mut best: Option<SobolevEstimate> = None;
    for s in 0..STARTS {
        let mut u = if s == 0 {
            Field::from_fn(grid, |x| libm::sin(PI * x / grid.size()))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x50b0_1e5c ^ s);
            let mut f = Field::from_values((0..n).map(|_| 0.2 + rng.gen::<f64>()).collect());
            for _ in 0..3 {
                smooth_pass(&mut f);
            }
            f
        };
        let est = descend_quotient(grid, &v, &mut u);
        let better = match &best {
            None => true,
            Some(b) => est.value < b.value,
        };
        if better {
            best = Some(est);
        }
    }
    best.expect("at least one start")
}

fn smooth_pass(f: &mut Field) {
    let n = f.len();
    let old = f.values().to_vec();
    for k in 0..n {
        let left = if k == 0 { 0.0 } else { old[k - 1] };
        let right = if k + 1 == n { 0.0 } else { old[k + 1] };
        f.values_mut()[k] = 0.25 * (left + 2.0 * old[k] + right);
    }
}

fn descend_quotient(grid: &Grid, v: &Field, u: &mut Field) -> SobolevEstimate {
    const MAX_ITERS: usize = 8000;
    const CHECK_EVERY: usize = 50;
    const STAG_TOL: f64 = 1e-8;

    let normalize = |u: &mut Field| {
        let q = norm_l4_sq(grid, u);
        let f = 1.0 / libm::sqrt(q);
        for x in u.values_mut() {
            *x *= f;
        }
    };
    normalize(u);
    let mut r = inner_h1(grid, u, u, v);
    let mut eta = 0.05 / r.max(1.0);
    let mut checkpoint = r;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..MAX_ITERS {
        iterations = it + 1;
        let lap = apply_laplacian(grid, u);
        let mut trial = u.clone();
        for k in 0..u.len() {
            let uk = u.values()[k];
            let g = 2.0 * (lap.values()[k] + v.values()[k] * uk - r * uk * uk * uk);
            trial.values_mut()[k] = uk - eta * g;
        }
        normalize(&mut trial);
        let rt = inner_h1(grid, &trial, &trial, v);
        if rt < r {
            *u = trial;
            r = rt;
            eta *= 1.2;
        } else {
            eta *= 0.5;
            if eta < 1e-17 {
                converged = true;
                break;
            }
        }
        if (it + 1) % CHECK_EVERY == 0 {
            if checkpoint - r <= STAG_TOL * libm::fabs(r) {
                converged = true;
                break;
            }
            checkpoint = r;
        }
    }

    // Fixed-point polish: the minimizer solves (-Δ + V)u = R u³ with
    // |u|₄² = 1, so inverse iteration u ← normalize((-Δ+V)⁻¹ u³) sharpens
    // the quotient to near machine precision once the descent has located
    // the basin. Crude stagnation of the descent alone can overestimate
    // the constant enough to flip downstream gap signs.
    const POLISH: usize = 150;
    for _ in 0..POLISH {
        iterations += 1;
        let cube = Field::from_values(u.values().iter().map(|x| x * x * x).collect());
        let mut next = riesz_h1(grid, v, &cube);
        if !next.values().iter().all(|x| x.is_finite()) {
            break;
        }
        normalize(&mut next);
        let rn = inner_h1(grid, &next, &next, v);
        if !rn.is_finite() {
            break;
        }
        let gain = r - rn;
        if rn < r {
            *u = next;
            r = rn;
        }
        if libm::fabs(gain) <= 1e-14 * libm::fabs(r) {
            converged = true;
            break;
        }
    }
    SobolevEstimate { value: r, converged, iterations }
}

/// Human-readable one-liner for diagnostics.
pub fn describe(grid: &Grid) -> String {
    use alloc::format;
    match grid.kind() {
        GridKind::Interval => format!(
            "interval (0, {}) with {} interior nodes, h = {}",
            grid.size(),
            grid.n_interior(),
            grid.spacing()
        ),
        GridKind::RadialBall => format!(
            "ball of radius {} in dimension {}, {} interior nodes, h = {}",
            grid.size(),
            grid.dimension(),
            grid.n_interior(),
            grid.spacing()
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wavy(grid: &Grid, a: f64, b: f64) -> Field {
        Field::from_fn(grid, |x| {
            libm::sin(a * PI * x / grid.size()) + 0.3 * libm::cos(b * x)
        })
    }

    #[test]
    fn interval_rejects_bad_input() {
        assert_eq!(Grid::interval(0.0, 10).unwrap_err(), GridError::NonPositiveSize);
        assert_eq!(Grid::interval(f64::NAN, 10).unwrap_err(), GridError::NonPositiveSize);
        assert_eq!(Grid::interval(1.0, 1).unwrap_err(), GridError::TooFewNodes);
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::interval(1.0, 57).unwrap();
        assert_relative_eq!(g.spacing() * 58.0, 1.0, max_relative = 1e-12);
        assert!(g.weights().iter().all(|&w| w > 0.0));
        assert!(g.weights().iter().all(|&w| w == g.spacing()));

        let g = Grid::radial_ball(2.0, 3, 40).unwrap();
        assert_relative_eq!(g.spacing() * 41.0, 2.0, max_relative = 1e-12);
        for k in 0..g.n_interior() {
            let r = g.node_coord(k);
            assert_relative_eq!(g.weights()[k], g.spacing() * r * r, max_relative = 1e-12);
        }
        assert!(Grid::radial_ball(1.0, 4, 10).is_err());
        assert!(Grid::interval(5.0, 2).is_err());
    }

    #[test]
    fn interval_discrete_eigenpair_is_exact() {
        let l = 1.0;
        let g = Grid::interval(l, 64).unwrap();
        let u = Field::from_fn(&g, |x| libm::sin(PI * x / l));
        let lam = 2.0 / (g.spacing() * g.spacing()) * (1.0 - libm::cos(PI * g.spacing() / l));
        let lap = apply_laplacian(&g, &u);
        for k in 0..g.n_interior() {
            assert_relative_eq!(lap.values()[k], lam * u.values()[k], max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn radial_ball_eigenfunction_second_order() {
        // u = sin(πr/R)/r is the first radial Dirichlet eigenfunction of
        // the 3-ball with eigenvalue (π/R)².
        let r_max = 1.0;
        let err_for = |n: usize| {
            let g = Grid::radial_ball(r_max, 3, n).unwrap();
            let u = Field::from_fn(&g, |r| libm::sin(PI * r / r_max) / r);
            let lap = apply_laplacian(&g, &u);
            let lam = (PI / r_max) * (PI / r_max);
            let mut worst = 0.0f64;
            for k in 0..n {
                worst = worst.max(libm::fabs(lap.values()[k] - lam * u.values()[k]));
            }
            worst / lam
        };
        let e64 = err_for(64);
        let e128 = err_for(128);
        assert!(e64 < 5e-3, "coarse error too large: {e64}");
        assert!(e128 < 0.35 * e64, "not second order: {e64} -> {e128}");
    }

    #[test]
    fn integrate_constant_interval() {
        let n = 37;
        let g = Grid::interval(1.0, n).unwrap();
        let one = Field::constant(n, 1.0);
        // All weights equal the spacing, so the sum is exactly n·h.
        assert_relative_eq!(integrate(&g, &one), n as f64 / (n + 1) as f64, max_relative = 1e-14);
    }

    #[test]
    fn integrate_matches_antiderivative() {
        // The rule is built for fields that vanish at the boundary, so both
        // integrands do; there it is second-order accurate.
        let g = Grid::interval(2.0, 4000).unwrap();
        let f = Field::from_fn(&g, |x| x * (2.0 - x) * libm::exp(-x));
        // ∫₀² x(2-x)e^-x dx = 4e^-2
        let exact = 4.0 * libm::exp(-2.0);
        assert_relative_eq!(integrate(&g, &f), exact, max_relative = 1e-5);

        // ∫_{B₁} (1-|x|²) dx = 8π/15 in three dimensions.
        let g = Grid::radial_ball(1.0, 3, 4000).unwrap();
        let f = Field::from_fn(&g, |r| 1.0 - r * r);
        assert_relative_eq!(integrate(&g, &f), 8.0 * PI / 15.0, max_relative = 1e-5);
    }

    #[test]
    fn summation_by_parts_is_exact() {
        let grids = [
            Grid::interval(1.7, 83).unwrap(),
            Grid::radial_ball(2.3, 1, 61).unwrap(),
            Grid::radial_ball(2.3, 2, 61).unwrap(),
            Grid::radial_ball(2.3, 3, 61).unwrap(),
        ];
        for g in &grids {
            let u = wavy(g, 1.0, 3.0);
            let v = wavy(g, 2.0, 5.0);
            let pot = Field::from_fn(g, |x| 1.0 + x * x);
            let zero = Field::zeros(g.n_interior());
            let lhs = inner_h1(g, &u, &v, &pot);
            let lap = apply_laplacian(g, &u);
            let rhs = quad_with(g, |k| (lap.values()[k] + pot.values()[k] * u.values()[k]) * v.values()[k]);
            let scale = inner_h1(g, &u, &u, &zero).max(inner_h1(g, &v, &v, &zero));
            assert!(
                libm::fabs(lhs - rhs) <= 1e-12 * scale,
                "SBP violated on {:?}: {lhs} vs {rhs}",
                g.kind()
            );
            // Symmetry of the form.
            assert_eq!(lhs, inner_h1(g, &v, &u, &pot));
        }
    }

    #[test]
    fn laplacian_is_linear() {
        let g = Grid::radial_ball(1.0, 3, 50).unwrap();
        let u = wavy(&g, 1.0, 2.0);
        let v = wavy(&g, 3.0, 7.0);
        let mut combo = Field::zeros(50);
        for k in 0..50 {
            combo.values_mut()[k] = 2.5 * u.values()[k] - 1.25 * v.values()[k];
        }
        let direct = apply_laplacian(&g, &combo);
        let lu = apply_laplacian(&g, &u);
        let lv = apply_laplacian(&g, &v);
        for k in 0..50 {
            let expect = 2.5 * lu.values()[k] - 1.25 * lv.values()[k];
            assert_relative_eq!(direct.values()[k], expect, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn l4_norm_scaling() {
        let g = Grid::interval(1.0, 40).unwrap();
        let u = wavy(&g, 1.0, 4.0);
        let mut su = u.clone();
        for x in su.values_mut() {
            *x *= 3.0;
        }
        assert_relative_eq!(norm_l4_sq(&g, &su), 9.0 * norm_l4_sq(&g, &u), max_relative = 1e-13);
    }

    #[test]
    fn riesz_inverts_operator() {
        for g in [Grid::interval(2.0, 70).unwrap(), Grid::radial_ball(2.0, 3, 70).unwrap()] {
            let pot = Field::from_fn(&g, |x| 0.5 + x);
            let x = wavy(&g, 1.0, 2.0);
            let mut rhs = apply_laplacian(&g, &x);
            for k in 0..g.n_interior() {
                rhs.values_mut()[k] += pot.values()[k] * x.values()[k];
            }
            let back = riesz_h1(&g, &pot, &rhs);
            for k in 0..g.n_interior() {
                assert_relative_eq!(back.values()[k], x.values()[k], max_relative = 1e-9, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sobolev_constant_basic_properties() {
        let g = Grid::interval(1.0, 200).unwrap();
        let est = sobolev_constant(&g, None);
        assert!(est.value > 0.0);
        assert!(est.converged, "quotient descent did not stagnate");

        // The quotient of any particular field is an upper bound.
        let zero = Field::zeros(200);
        let phi = Field::from_fn(&g, |x| libm::sin(PI * x));
        let quot = inner_h1(&g, &phi, &phi, &zero) / norm_l4_sq(&g, &phi);
        assert!(est.value <= quot * (1.0 + 1e-10));

        // Lower-bound property on assorted fields.
        for f in [wavy(&g, 2.0, 9.0), wavy(&g, 5.0, 1.0)] {
            let q = inner_h1(&g, &f, &f, &zero) / norm_l4_sq(&g, &f);
            assert!(est.value <= q * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sobolev_constant_mesh_consistency() {
        let coarse = sobolev_constant(&Grid::interval(1.0, 30).unwrap(), None);
        let fine = sobolev_constant(&Grid::interval(1.0, 200).unwrap(), None);
        let rel = libm::fabs(coarse.value - fine.value) / fine.value;
        assert!(rel < 0.02, "meshes disagree: {} vs {} ({rel})", coarse.value, fine.value);
    }

    #[test]
    fn sobolev_constant_with_zero_order_term() {
        let g = Grid::interval(1.0, 60).unwrap();
        let pot = Field::constant(60, 2.0);
        let plain = sobolev_constant(&g, None);
        let weighted = sobolev_constant(&g, Some(&pot));
        assert!(weighted.value > plain.value);
    }

    #[test]
    #[should_panic(expected = "integrate")]
    fn dimension_mismatch_panics() {
        let g = Grid::interval(1.0, 10).unwrap();
        let f = Field::zeros(11);
        integrate(&g, &f);
    }
}
