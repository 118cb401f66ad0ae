//! Boundary grids in Hopf coordinates and integration of weight `(-2,-2)`
//! densities against `theta ^ d theta`.
//!
//! Nodes sit at `center + r(omega) omega` with
//! `omega = (cos eta e^{i xi1}, sin eta e^{i xi2})`. The angles `xi1, xi2`
//! use the periodic trapezoidal rule; `eta in [0, pi/2]` uses Gauss–Legendre.
//!
//! The integrands of the closure identity `I_2 = c I_1` and of its polarized
//! form are built here as expressions; evaluating them over a grid is left
//! to the caller, which may do it in parallel.

use alloc::vec::Vec;

use crate::automorphism::{
    automorphism_residual, check_anti_cr, potential_from_field, prolong, AutomorphismError, HoloField, Potential,
    PotentialSource,
};
use crate::calculus::{cov_diff, Weighted};
use crate::expr::{Binding, EvalError, Expr, ExprPool, Tape, VarId, C64};
use crate::geometry::{hopf_direction, Dir, Frame, GeometryError, Hypersurface, OneForm, RaySolver};
use crate::invariants::Invariants;
use crate::tractor::{
    kappa1b0_explicit, kappa_bar_divergence, mat_mul, mat_trace, Connection, Curv, Mat3, TractorData,
};

const TAU: f64 = 2.0 * core::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("grid sizes must be at least 1 (got {0}x{1})")]
    EmptyGrid(usize, usize),
    #[error("theta ^ d theta changes sign on the grid")]
    NonContactOrientation,
    #[error("only weight (-2,-2) scalar densities can be integrated (got {indices} indices, weight {weight:?})")]
    WeightMismatch { indices: usize, weight: (i32, i32) },
    #[error("the potential does not solve the automorphism equation (residual {0:e})")]
    NotASolution(f64),
    #[error(transparent)]
    Automorphism(#[from] AutomorphismError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Gauss–Legendre nodes and weights on `[a, b]`, nodes increasing.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (t * p - pm) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
    for (xi, wi) in x.iter_mut().zip(w.iter_mut()) {
        *xi = m + h * *xi;
        *wi *= h;
    }
    (x, w)
}

/// Cascade summation; independent of thread count and chunking.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn pairwise_sum_c(v: &[C64]) -> C64 {
    if v.len() <= 16 {
        return v.iter().fold(C64::new(0.0, 0.0), |s, &x| s + x);
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum_c(a) + pairwise_sum_c(b)
}

/// One grid node: the point and the coordinate tangents
/// `d/d eta, d/d xi1, d/d xi2` as `(dz1, dz2)` components.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub r: f64,
    pub point: [C64; 2],
    pub tangents: [[C64; 2]; 3],
    /// Parameter-space cell measure.
    pub cell: f64,
}

#[derive(Clone, Debug)]
pub struct SurfaceGrid {
    pub n_eta: usize,
    pub n_xi: usize,
    pub nodes: Vec<Node>,
    /// Quadrature weights for `theta ^ d theta`, all positive.
    pub weights: Vec<f64>,
}

fn d_rho(grad: &[C64; 2], v: &[C64; 2]) -> f64 {
    2.0 * (grad[0] * v[0] + grad[1] * v[1]).re
}

/// Nodes of the `n_eta x n_xi x n_xi` Hopf lattice on `M`, without weights.
pub fn grid_nodes(
    pool: &mut ExprPool,
    h: &Hypersurface,
    n_eta: usize,
    n_xi: usize,
) -> Result<Vec<Node>, QuadratureError> {
    if n_eta == 0 || n_xi == 0 {
        return Err(QuadratureError::EmptyGrid(n_eta, n_xi));
    }
    let solver = RaySolver::new(pool, h)?;
    let (etas, wetas) = gauss_legendre(n_eta, 0.0, core::f64::consts::FRAC_PI_2);
    let dxi = TAU / n_xi as f64;
    let mut nodes = Vec::with_capacity(n_eta * n_xi * n_xi);
    for (&eta, &we) in etas.iter().zip(&wetas) {
        let (se, ce) = (libm::sin(eta), libm::cos(eta));
        for j in 0..n_xi {
            let xi1 = dxi * (j as f64 + 0.5);
            for k in 0..n_xi {
                let xi2 = dxi * (k as f64 + 0.5);
                let om = hopf_direction(eta, xi1, xi2);
                let hit = solver.solve(om)?;
                let e1 = C64::from_polar(1.0, xi1);
                let e2 = C64::from_polar(1.0, xi2);
                let dom = [
                    [e1 * (-se), e2 * ce],
                    [e1 * C64::new(0.0, ce), C64::new(0.0, 0.0)],
                    [C64::new(0.0, 0.0), e2 * C64::new(0.0, se)],
                ];
                let radial = d_rho(&hit.grad, &om);
                let tangents = dom.map(|d| {
                    let dr = -hit.r * d_rho(&hit.grad, &d) / radial;
                    [om[0] * dr + d[0] * hit.r, om[1] * dr + d[1] * hit.r]
                });
                nodes.push(Node {
                    r: hit.r,
                    point: hit.point,
                    tangents,
                    cell: we * dxi * dxi,
                });
            }
        }
    }
    Ok(nodes)
}

/// Evaluates `theta`, `d theta` from the symbolic coefficients of a 1-form.
pub struct FormEvaluator {
    tape: Tape,
}

impl FormEvaluator {
    pub fn new(pool: &mut ExprPool, theta: &OneForm) -> Self {
        let mut roots = Vec::with_capacity(20);
        roots.extend_from_slice(&theta.0);
        for v in VarId::ALL {
            for b in 0..4 {
                roots.push(pool.wirtinger_diff(theta.0[b], v));
            }
        }
        FormEvaluator {
            tape: pool.compile(&roots),
        }
    }

    /// `(theta ^ d theta)(t0, t1, t2)` at `p` for real tangents given by
    /// their `(dz1, dz2)` components.
    pub fn volume(&self, p: [C64; 2], t: &[[C64; 2]; 3]) -> Result<f64, EvalError> {
        let v = self.tape.eval(Binding::Paired(p[0], p[1]))?;
        let full = |x: &[C64; 2]| [x[0], x[1], x[0].conj(), x[1].conj()];
        let ts = [full(&t[0]), full(&t[1]), full(&t[2])];
        let th = |x: &[C64; 4]| (0..4).fold(C64::new(0.0, 0.0), |s, b| s + v[b] * x[b]);
        // d theta(x, y) = sum_{a,b} d_a theta_b (x^a y^b - y^a x^b)
        let dth = |x: &[C64; 4], y: &[C64; 4]| {
            let mut s = C64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    s += v[4 + 4 * a + b] * (x[a] * y[b] - y[a] * x[b]);
                }
            }
            s
        };
        let vol = th(&ts[0]) * dth(&ts[1], &ts[2]) - th(&ts[1]) * dth(&ts[0], &ts[2])
            + th(&ts[2]) * dth(&ts[0], &ts[1]);
        Ok(vol.re)
    }
}

/// Positive weights of `theta ^ d theta` at the nodes.
pub fn form_weights(
    pool: &mut ExprPool,
    theta: &OneForm,
    nodes: &[Node],
) -> Result<Vec<f64>, QuadratureError> {
    let fe = FormEvaluator::new(pool, theta);
    let raw = nodes
        .iter()
        .map(|n| fe.volume(n.point, &n.tangents).map(|v| v * n.cell))
        .collect::<Result<Vec<f64>, _>>()?;
    orient(raw)
}

/// Flips the weights to be positive; fails if they change sign.
pub fn orient(mut raw: Vec<f64>) -> Result<Vec<f64>, QuadratureError> {
    let pos = raw.iter().all(|&w| w > 0.0);
    let neg = raw.iter().all(|&w| w < 0.0);
    if !(pos || neg) {
        return Err(QuadratureError::NonContactOrientation);
    }
    if neg {
        raw.iter_mut().for_each(|w| *w = -*w);
    }
    Ok(raw)
}

impl SurfaceGrid {
    /// Grid on `M` with weights for the contact form `theta`.
    pub fn build(
        pool: &mut ExprPool,
        h: &Hypersurface,
        theta: &OneForm,
        n_eta: usize,
        n_xi: usize,
    ) -> Result<SurfaceGrid, QuadratureError> {
        let nodes = grid_nodes(pool, h, n_eta, n_xi)?;
        let weights = form_weights(pool, theta, &nodes)?;
        Ok(SurfaceGrid {
            n_eta,
            n_xi,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn points(&self) -> Vec<[C64; 2]> {
        self.nodes.iter().map(|n| n.point).collect()
    }

    pub fn total_measure(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `sum_i w_i f_i` for values already evaluated at the nodes.
    pub fn integrate_values(&self, values: &[C64]) -> C64 {
        assert_eq!(values.len(), self.weights.len());
        let t: Vec<C64> = values.iter().zip(&self.weights).map(|(&f, &w)| f * w).collect();
        pairwise_sum_c(&t)
    }

    /// Weights for `e^upsilon theta`, from the values of `upsilon`.
    pub fn rescaled_weights(&self, upsilon: &[C64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(upsilon)
            .map(|(&w, u)| w * libm::exp(2.0 * u.re))
            .collect()
    }
}

/// Refuses anything but a scalar weight `(-2,-2)` density.
pub fn check_density(f: &Weighted) -> Result<(), QuadratureError> {
    if !f.indices.is_empty() || f.weight != (-2, -2) {
        return Err(QuadratureError::WeightMismatch {
            indices: f.indices.len(),
            weight: f.weight,
        });
    }
    Ok(())
}

/// `int_M f theta ^ d theta`, evaluating serially.
pub fn integrate_density(
    pool: &ExprPool,
    f: &Weighted,
    grid: &SurfaceGrid,
) -> Result<C64, QuadratureError> {
    check_density(f)?;
    let vals = eval_nodes(pool, &[f.value], &grid.points())?;
    let col: Vec<C64> = vals.iter().map(|r| r[0]).collect();
    Ok(grid.integrate_values(&col))
}

/// Values of each root at each point, serially.
pub fn eval_nodes(
    pool: &ExprPool,
    roots: &[Expr],
    points: &[[C64; 2]],
) -> Result<Vec<Vec<C64>>, EvalError> {
    crate::geometry::eval_at_points(pool, roots, points)
}

/// `c` in `I_2 = c I_1`, fixed once by the audit on the real ellipsoid.
pub const CLOSURE_CONSTANT: C64 = C64::new(0.0, 1.0);

/// `int theta ^ d theta` over the unit sphere for the volume normalized
/// `theta`: twice the Euclidean volume `2 pi^2`.
pub const SPHERE_MEASURE: f64 = 4.0 * core::f64::consts::PI * core::f64::consts::PI;

/// Residual above which a potential is refused by the closure report.
pub const SOLUTION_TOLERANCE: f64 = 1e-6;

/// Pointwise and integrated quantities of the closure identity.
#[derive(Clone, Debug)]
pub struct ClosureIntegrands {
    pub u: Potential,
    /// `nabla_1 nabla_1 u + i A_11 u`, checked before anything else.
    pub residual: Expr,
    /// `u^2 |Q|^2`.
    pub i1: Expr,
    /// `tr(s (nabla^1bar kappa_1bar0) s)` through the tractor connection.
    pub i2: Expr,
    /// `kappa_1bar0 kappa_10` from the commutator matrices; the zero matrix.
    pub zero_product: Mat3,
    /// `kappa_10 kappa_1bar0`; only the bottom-left entry, `-|Q|^2`, is
    /// non-zero.
    pub single_product: Mat3,
    pub q_norm_sq: Expr,
    /// `tr(kappa_10 kappa_1bar0 s)` and the expected `-i u |Q|^2`.
    pub trace_lhs: Expr,
    pub trace_rhs: Expr,
    /// `Z_A kappa_1bar0` (top row) then `kappa_1bar0 Z^B` (last column).
    pub z_annihilation: [Expr; 6],
    /// `nabla^1bar tr(s kappa_1bar0 s)`: a total divergence.
    pub divergence: Expr,
}

impl ClosureIntegrands {
    /// Everything the closure report evaluates, for the field `x`.
    pub fn build(pool: &mut ExprPool, frame: &Frame, inv: &Invariants, x: &HoloField) -> Self {
        let u = potential_from_field(pool, x, frame);
        Self::from_potential(pool, frame, inv, u)
    }

    pub fn from_potential(pool: &mut ExprPool, frame: &Frame, inv: &Invariants, u: Potential) -> Self {
        let conn = Connection::new(pool, frame, TractorData::from_invariants(inv));
        let residual = automorphism_residual(pool, &u, frame);
        let p = prolong(pool, &u, frame, inv, None);
        let s = p.s.m;

        let uu = pool.mul(u.value(), u.value());
        let i1 = pool.mul(uu, inv.q_norm_sq.value);

        let e1b0 = kappa1b0_explicit(pool, inv);
        let k = kappa_bar_divergence(pool, &conn, &e1b0);
        let sk = mat_mul(pool, &s, &k.m);
        let sks = mat_mul(pool, &sk, &s);
        let i2 = mat_trace(pool, &sks);

        let k10 = conn.curvature_matrix(pool, Curv::OneZero);
        let k1b0 = conn.curvature_matrix(pool, Curv::BarZero);
        let zero_product = mat_mul(pool, &k1b0, &k10);
        let single_product = mat_mul(pool, &k10, &k1b0);
        let ks = mat_mul(pool, &single_product, &s);
        let trace_lhs = mat_trace(pool, &ks);
        let iu = pool.scale(C64::new(0.0, -1.0), u.value());
        let trace_rhs = pool.mul(iu, inv.q_norm_sq.value);
        let z_annihilation = [k1b0[0][0], k1b0[0][1], k1b0[0][2], k1b0[0][2], k1b0[1][2], k1b0[2][2]];

        let ske = mat_mul(pool, &s, &e1b0);
        let skes = mat_mul(pool, &ske, &s);
        let f = Weighted::new(mat_trace(pool, &skes), &[Dir::Bar], (-1, -1));
        let divergence = cov_diff(pool, frame, &f, Dir::One).value;

        ClosureIntegrands {
            u,
            residual,
            i1,
            i2,
            zero_product,
            single_product,
            q_norm_sq: inv.q_norm_sq.value,
            trace_lhs,
            trace_rhs,
            z_annihilation,
            divergence,
        }
    }

    /// `I_1`, `I_2` and the divergence as weight `(-2,-2)` densities.
    pub fn densities(&self) -> [Weighted; 3] {
        [self.i1, self.i2, self.divergence].map(|e| Weighted::scalar(e, (-2, -2)))
    }
}

/// Refuses a potential whose automorphism residual exceeds `tol`.
pub fn require_solution(max_residual: f64, tol: f64) -> Result<(), QuadratureError> {
    if max_residual.is_nan() || max_residual > tol {
        return Err(QuadratureError::NotASolution(max_residual));
    }
    Ok(())
}

/// Integrands of the polarized closure identity for two fields and an
/// anti-CR multiplier `f`.
#[derive(Clone, Debug)]
pub struct PolarizedIntegrands {
    /// `u1^2 |Q|^2`, `u2^2 |Q|^2`, `(u1 + u2)^2 |Q|^2`, `u1 u2 |Q|^2`.
    pub squares: [Expr; 4],
    /// `f u1 u2 |Q|^2`.
    pub weighted: Expr,
    /// Automorphism residuals of `u1`, `u2` and `f u1`.
    pub residuals: [Expr; 3],
}

impl PolarizedIntegrands {
    pub fn build(
        pool: &mut ExprPool,
        frame: &Frame,
        inv: &Invariants,
        x1: &HoloField,
        x2: &HoloField,
        f: Expr,
    ) -> Result<Self, QuadratureError> {
        check_anti_cr(pool, f)?;
        let u1 = potential_from_field(pool, x1, frame);
        let u2 = potential_from_field(pool, x2, frame);
        let q = inv.q_norm_sq.value;
        let sq = |pool: &mut ExprPool, a: Expr, b: Expr| {
            let ab = pool.mul(a, b);
            pool.mul(ab, q)
        };
        let sum = pool.add(u1.value(), u2.value());
        let squares = [
            sq(pool, u1.value(), u1.value()),
            sq(pool, u2.value(), u2.value()),
            sq(pool, sum, sum),
            sq(pool, u1.value(), u2.value()),
        ];
        let weighted = pool.mul(f, squares[3]);
        let fu1 = Potential {
            u: Weighted::scalar(pool.mul(f, u1.value()), (1, 1)),
            source: PotentialSource::FromField,
        };
        let residuals = [
            automorphism_residual(pool, &u1, frame),
            automorphism_residual(pool, &u2, frame),
            automorphism_residual(pool, &fu1, frame),
        ];
        Ok(PolarizedIntegrands {
            squares,
            weighted,
            residuals,
        })
    }
}
