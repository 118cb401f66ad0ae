//! Contact form, adapted unitary frame, Reeb field and Tanaka–Webster
//! connection of a level set `M = {rho = 0}`.
//!
//! Vector fields and 1-forms are stored as four ambient coefficient
//! expressions in the basis `d/dz1, d/dz2, d/dzb1, d/dzb2` (resp.
//! `dz1, dz2, dzb1, dzb2`). All fields built here annihilate `d rho`, so they
//! are tangent to every level set and the construction is valid on a whole
//! neighbourhood of `M`, not just on `M`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Binding, EvalError, Expr, ExprPool, Tape, VarId, C64};

/// Number of boundary points used by the orientation / pseudoconvexity audit.
pub const AUDIT_POINTS: usize = 64;
const AUDIT_SEED: u64 = 0x0c0f_fee5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("theta ^ d theta vanishes at {0:?}")]
    DegenerateContact([C64; 2]),
    #[error("Levi form is not definite (h = {h:e} at {point:?})")]
    FrameDegeneracy { point: [C64; 2], h: f64 },
    #[error("defining function is not real: |conj(rho) - rho| = {defect:e} at {point:?}")]
    NotReal { point: [C64; 2], defect: f64 },
    #[error("rho(center) = {0:e} does not separate the center from M")]
    CenterOutside(f64),
    #[error("ray from the center along {dir:?} does not meet M ({reason})")]
    NewtonFailure { dir: [C64; 2], reason: &'static str },
    #[error("structure equation residual {0:e}")]
    StructureResidual(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Ambient complex vector field `sum_a X^a d/dx^a` over `z1, z2, zb1, zb2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VectorField(pub [Expr; 4]);

/// Ambient complex 1-form over `dz1, dz2, dzb1, dzb2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OneForm(pub [Expr; 4]);

impl VectorField {
    pub fn zero(pool: &ExprPool) -> Self {
        VectorField([pool.zero(); 4])
    }

    /// Holomorphic field `a1 d/dz1 + a2 d/dz2`.
    pub fn holomorphic(pool: &ExprPool, a1: Expr, a2: Expr) -> Self {
        VectorField([a1, a2, pool.zero(), pool.zero()])
    }

    /// Directional derivative `X f`.
    pub fn apply(&self, pool: &mut ExprPool, f: Expr) -> Expr {
        let mut terms = Vec::with_capacity(4);
        for (k, v) in VarId::ALL.into_iter().enumerate() {
            let c = self.0[k];
            if pool.is_zero(c) {
                continue;
            }
            let d = pool.wirtinger_diff(f, v);
            if !pool.is_zero(d) {
                terms.push(pool.mul(c, d));
            }
        }
        pool.add_all(&terms)
    }

    /// Conjugate field (coefficients mirrored and slots swapped).
    pub fn conj(&self, pool: &mut ExprPool) -> Self {
        let m: [Expr; 4] = core::array::from_fn(|k| pool.mirror(self.0[k]));
        VectorField([m[2], m[3], m[0], m[1]])
    }

    pub fn scale(&self, pool: &mut ExprPool, f: Expr) -> Self {
        VectorField(core::array::from_fn(|k| pool.mul(f, self.0[k])))
    }

    pub fn add(&self, pool: &mut ExprPool, other: &Self) -> Self {
        VectorField(core::array::from_fn(|k| pool.add(self.0[k], other.0[k])))
    }

    pub fn sub(&self, pool: &mut ExprPool, other: &Self) -> Self {
        VectorField(core::array::from_fn(|k| pool.sub(self.0[k], other.0[k])))
    }

    /// Lie bracket `[X, Y]^a = X(Y^a) - Y(X^a)`.
    pub fn bracket(&self, pool: &mut ExprPool, other: &Self) -> Self {
        VectorField(core::array::from_fn(|k| {
            let a = self.apply(pool, other.0[k]);
            let b = other.apply(pool, self.0[k]);
            pool.sub(a, b)
        }))
    }
}

impl OneForm {
    /// Contraction `form(X)`.
    pub fn pair(&self, pool: &mut ExprPool, x: &VectorField) -> Expr {
        let mut terms = Vec::with_capacity(4);
        for k in 0..4 {
            if !pool.is_zero(self.0[k]) && !pool.is_zero(x.0[k]) {
                terms.push(pool.mul(self.0[k], x.0[k]));
            }
        }
        pool.add_all(&terms)
    }

    pub fn conj(&self, pool: &mut ExprPool) -> Self {
        let m: [Expr; 4] = core::array::from_fn(|k| pool.mirror(self.0[k]));
        OneForm([m[2], m[3], m[0], m[1]])
    }

    pub fn scale(&self, pool: &mut ExprPool, f: Expr) -> Self {
        OneForm(core::array::from_fn(|k| pool.mul(f, self.0[k])))
    }

    /// Exterior derivative evaluated on a pair: `d a (X, Y)`.
    pub fn d_pair(&self, pool: &mut ExprPool, x: &VectorField, y: &VectorField) -> Expr {
        let ay = self.pair(pool, y);
        let ax = self.pair(pool, x);
        let xay = x.apply(pool, ay);
        let yax = y.apply(pool, ax);
        let br = x.bracket(pool, y);
        let abr = self.pair(pool, &br);
        let s = pool.sub(xay, yax);
        pool.sub(s, abr)
    }
}

/// Defining data of a hypersurface.
#[derive(Clone, Debug)]
pub struct Hypersurface {
    pub rho: Expr,
    /// Star-shape anchor with `rho(center) < 0`.
    pub center: [C64; 2],
    pub name: String,
}

/// Solves `rho(center + r dir) = 0` for `r > 0`.
#[derive(Clone, Debug)]
pub struct RaySolver {
    tape: Tape,
    center: [C64; 2],
    /// `-sign(rho(center))`, so that `side * rho` is negative at the center.
    side: f64,
}

/// A boundary point together with the radial data used by the quadrature.
#[derive(Clone, Copy, Debug)]
pub struct RayHit {
    pub r: f64,
    pub point: [C64; 2],
    /// `(rho_1, rho_2)` at the point.
    pub grad: [C64; 2],
}

impl RaySolver {
    pub fn new(pool: &mut ExprPool, h: &Hypersurface) -> Result<Self, GeometryError> {
        let r1 = pool.wirtinger_diff(h.rho, VarId::Z1);
        let r2 = pool.wirtinger_diff(h.rho, VarId::Z2);
        let tape = pool.compile(&[h.rho, r1, r2]);
        let mut s = RaySolver {
            tape,
            center: h.center,
            side: 1.0,
        };
        let v = s.eval_at(h.center)?;
        // only a sign change along each ray is needed; a center with
        // rho > 0 (reversed orientation) is accepted and audited later
        if !(v[0].re != 0.0 && v[0].re.is_finite()) {
            return Err(GeometryError::CenterOutside(v[0].re));
        }
        s.side = if v[0].re < 0.0 { 1.0 } else { -1.0 };
        Ok(s)
    }

    fn eval_at(&self, p: [C64; 2]) -> Result<[C64; 3], EvalError> {
        let v = self.tape.eval(Binding::Paired(p[0], p[1]))?;
        Ok([v[0], v[1], v[2]])
    }

    fn along(&self, dir: [C64; 2], r: f64) -> Result<(f64, f64, [C64; 2], [C64; 2]), EvalError> {
        let p = [self.center[0] + dir[0] * r, self.center[1] + dir[1] * r];
        let v = self.eval_at(p)?;
        // d rho(v) = 2 Re sum rho_j v^j
        let dr = 2.0 * (v[1] * dir[0] + v[2] * dir[1]).re;
        Ok((self.side * v[0].re, self.side * dr, p, [v[1], v[2]]))
    }

    /// Safeguarded Newton iteration with a bisection fallback.
    pub fn solve(&self, dir: [C64; 2]) -> Result<RayHit, GeometryError> {
        let fail = |reason| GeometryError::NewtonFailure { dir, reason };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut k = 0;
        while self.along(dir, hi)?.0 <= 0.0 {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > 60 {
                return Err(fail("no sign change"));
            }
        }
        let mut r = 0.5 * (lo + hi);
        for _ in 0..50 {
            let (f, df, p, grad) = self.along(dir, r)?;
            if f.abs() < 1e-14 {
                return Ok(RayHit { r, point: p, grad });
            }
            if f < 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let mut next = r - f / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-16 * r.max(1.0) {
                let (_, _, p, grad) = self.along(dir, next)?;
                return Ok(RayHit {
                    r: next,
                    point: p,
                    grad,
                });
            }
            r = next;
        }
        Err(fail("no convergence in 50 iterations"))
    }
}

/// Hopf direction `(cos eta e^{i xi1}, sin eta e^{i xi2})`.
pub fn hopf_direction(eta: f64, xi1: f64, xi2: f64) -> [C64; 2] {
    [
        C64::from_polar(libm::cos(eta), xi1),
        C64::from_polar(libm::sin(eta), xi2),
    ]
}

/// `n` boundary points along directions uniformly distributed on `S^3`.
pub fn sample_boundary(
    solver: &RaySolver,
    seed: u64,
    n: usize,
) -> Result<Vec<[C64; 2]>, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 2.0 * core::f64::consts::PI;
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let eta = libm::acos(libm::sqrt(u));
            let xi1 = tau * rng.gen::<f64>();
            let xi2 = tau * rng.gen::<f64>();
            solver.solve(hopf_direction(eta, xi1, xi2)).map(|h| h.point)
        })
        .collect()
}

/// Evaluates each root at each point.
pub fn eval_at_points(
    pool: &ExprPool,
    roots: &[Expr],
    points: &[[C64; 2]],
) -> Result<Vec<Vec<C64>>, EvalError> {
    pool.compile(roots).eval_points(points)
}

/// Contact form together with the orientation sign chosen by the audit.
#[derive(Clone, Copy, Debug)]
pub struct Contact {
    pub theta: OneForm,
    /// `theta = sign * (i/2)(d rho - dbar rho)`.
    pub sign: f64,
}

/// Unnormalized `(1,0)` field `rho_2 d/dz1 - rho_1 d/dz2`.
fn unnormalized_w(pool: &mut ExprPool, rho: Expr) -> VectorField {
    let r1 = pool.wirtinger_diff(rho, VarId::Z1);
    let r2 = pool.wirtinger_diff(rho, VarId::Z2);
    let m1 = pool.neg(r1);
    VectorField::holomorphic(pool, r2, m1)
}

/// Levi form `sum rho_{j kbar} W^j conj(W^k)` on the field `W`.
fn levi(pool: &mut ExprPool, rho: Expr, w: &VectorField) -> Expr {
    let wb = w.conj(pool);
    let mut terms = Vec::new();
    for (j, vj) in [VarId::Z1, VarId::Z2].into_iter().enumerate() {
        let dj = pool.wirtinger_diff(rho, vj);
        for (k, vk) in [VarId::Zb1, VarId::Zb2].into_iter().enumerate() {
            let djk = pool.wirtinger_diff(dj, vk);
            if pool.is_zero(djk) {
                continue;
            }
            terms.push(pool.mul_all(&[djk, w.0[j], wb.0[k + 2]]));
        }
    }
    pool.add_all(&terms)
}

/// Builds `theta = s (i/2)(d rho - dbar rho)`, picking `s` so that the Levi
/// form of `theta` is positive on the sampled boundary points.
pub fn contact_form(pool: &mut ExprPool, h: &Hypersurface) -> Result<Contact, GeometryError> {
    let solver = RaySolver::new(pool, h)?;
    let points = sample_boundary(&solver, AUDIT_SEED, AUDIT_POINTS)?;
    let rho_bar = pool.mirror(h.rho);
    let w = unnormalized_w(pool, h.rho);
    let l = levi(pool, h.rho, &w);
    let vals = eval_at_points(pool, &[h.rho, rho_bar, l], &points)?;
    let mut pos = 0;
    let mut neg = 0;
    for (p, v) in points.iter().zip(&vals) {
        let defect = (v[1] - v[0]).norm();
        if defect > 1e-12 * v[0].norm().max(1.0) {
            return Err(GeometryError::NotReal {
                point: *p,
                defect,
            });
        }
        let lv = v[2].re;
        if lv.abs() <= 1e-14 * (1.0 + v[2].norm()) || lv.abs() < 1e-300 {
            return Err(GeometryError::DegenerateContact(*p));
        }
        if lv > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    if pos > 0 && neg > 0 {
        let k = vals.iter().position(|v| v[2].re < 0.0).unwrap_or(0);
        return Err(GeometryError::FrameDegeneracy {
            point: points[k],
            h: vals[k][2].re,
        });
    }
    // d theta(W, conj W) = -s i L(W); positivity of h needs s = -sign(L)
    let sign = if pos > 0 { -1.0 } else { 1.0 };
    Ok(Contact {
        theta: raw_theta(pool, h.rho, sign),
        sign,
    })
}

fn raw_theta(pool: &mut ExprPool, rho: Expr, sign: f64) -> OneForm {
    let c = C64::new(0.0, 0.5 * sign);
    OneForm(core::array::from_fn(|k| {
        let d = pool.wirtinger_diff(rho, VarId::ALL[k]);
        if k < 2 {
            pool.scale(c, d)
        } else {
            pool.scale(-c, d)
        }
    }))
}

/// Pseudohermitian frame `(theta, Z1, T, theta^1)` with `h_{11bar} = 1`
/// and the Tanaka–Webster connection `omega = alpha theta + beta theta^1
/// + gamma theta^1bar` with torsion `A^1_1bar` and `A_11`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub rho: Expr,
    pub sign: f64,
    /// Conformal factor relative to the base contact form (`0` unless
    /// produced by [`Frame::rescale`]).
    pub upsilon: Expr,
    pub theta: OneForm,
    pub z1: VectorField,
    pub z1b: VectorField,
    pub t: VectorField,
    pub theta1: OneForm,
    pub theta1b: OneForm,
    pub alpha: Expr,
    pub beta: Expr,
    pub gamma: Expr,
    /// `A^1_{1bar}`.
    pub a_up: Expr,
    /// `A_{11}`.
    pub a11: Expr,
}

impl Frame {
    /// Builds the adapted frame for the audited contact form of `h`.
    pub fn build(pool: &mut ExprPool, h: &Hypersurface) -> Result<Frame, GeometryError> {
        let c = contact_form(pool, h)?;
        Ok(Self::from_contact(pool, h.rho, c))
    }

    pub fn from_contact(pool: &mut ExprPool, rho: Expr, c: Contact) -> Frame {
        let s = c.sign;
        let w = unnormalized_w(pool, rho);
        let l = levi(pool, rho, &w);
        let hw = pool.scale_re(-s, l);
        // lambda = h^{-1/2}
        let sq = pool.sqrt(hw);
        let lambda = pool.pow(sq, -1).expect("sqrt node is not zero");
        let z1 = w.scale(pool, lambda);

        // Reeb field: rho_j T^j = -s i, sum_j m_j T^j = 0
        let wb = w.conj(pool);
        let r1 = pool.wirtinger_diff(rho, VarId::Z1);
        let r2 = pool.wirtinger_diff(rho, VarId::Z2);
        let m: [Expr; 2] = core::array::from_fn(|j| {
            let dj = pool.wirtinger_diff(rho, VarId::ALL[j]);
            let a = pool.wirtinger_diff(dj, VarId::Zb1);
            let b = pool.wirtinger_diff(dj, VarId::Zb2);
            let ta = pool.mul(a, wb.0[2]);
            let tb = pool.mul(b, wb.0[3]);
            pool.add(ta, tb)
        });
        let p = pool.mul(r1, m[1]);
        let q = pool.mul(r2, m[0]);
        let det = pool.sub(p, q);
        let inv = pool.pow(det, -1).expect("symbolic determinant is not zero");
        let t1 = pool.mul_all(&[m[1], inv]);
        let t1 = pool.scale(C64::new(0.0, -s), t1);
        let t2 = pool.mul_all(&[m[0], inv]);
        let t2 = pool.scale(C64::new(0.0, s), t2);
        let t1b = pool.mirror(t1);
        let t2b = pool.mirror(t2);
        let t = VectorField([t1, t2, t1b, t2b]);
        let zero = pool.zero();
        Self::from_parts(pool, rho, s, zero, c.theta, z1, t)
    }

    /// Completes a frame from `theta`, a normalized `Z1` and the Reeb field.
    pub fn from_parts(
        pool: &mut ExprPool,
        rho: Expr,
        sign: f64,
        upsilon: Expr,
        theta: OneForm,
        z1: VectorField,
        t: VectorField,
    ) -> Frame {
        let z1b = z1.conj(pool);
        // theta^1 = c1 dz1 + c2 dz2 with theta^1(Z1) = 1, theta^1(T) = 0
        let a = pool.mul(z1.0[0], t.0[1]);
        let b = pool.mul(z1.0[1], t.0[0]);
        let d = pool.sub(a, b);
        let dinv = pool.pow(d, -1).expect("frame determinant is not zero");
        let c1 = pool.mul(t.0[1], dinv);
        let c2 = pool.mul(t.0[0], dinv);
        let c2 = pool.neg(c2);
        let zero = pool.zero();
        let theta1 = OneForm([c1, c2, zero, zero]);
        let theta1b = theta1.conj(pool);

        let tz = t.bracket(pool, &z1);
        let alpha = theta1.pair(pool, &tz);
        let tzb = t.bracket(pool, &z1b);
        let a_up = theta1.pair(pool, &tzb);
        let a_up = pool.neg(a_up);
        let zz = z1.bracket(pool, &z1b);
        let gamma = theta1.pair(pool, &zz);
        let gamma = pool.neg(gamma);
        let gb = pool.mirror(gamma);
        let beta = pool.neg(gb);
        let a11 = pool.mirror(a_up);
        Frame {
            rho,
            sign,
            upsilon,
            theta,
            z1,
            z1b,
            t,
            theta1,
            theta1b,
            alpha,
            beta,
            gamma,
            a_up,
            a11,
        }
    }

    /// Frame of `e^upsilon theta` with `Z1' = e^{-upsilon/2} Z1`.
    pub fn rescale(&self, pool: &mut ExprPool, upsilon: Expr) -> Frame {
        let e = pool.exp(upsilon);
        let half = pool.scale_re(-0.5, upsilon);
        let eh = pool.exp(half);
        let mu = pool.neg(upsilon);
        let em = pool.exp(mu);
        let theta = self.theta.scale(pool, e);
        let z1 = self.z1.scale(pool, eh);
        // T' = e^{-u}(T - i u^1 Z1 + i u^1bar Z1bar), u^1 = Z1bar u
        let up1 = self.z1b.apply(pool, upsilon);
        let up1b = self.z1.apply(pool, upsilon);
        let a = pool.scale(C64::new(0.0, -1.0), up1);
        let b = pool.scale(C64::new(0.0, 1.0), up1b);
        let za = self.z1.scale(pool, a);
        let zb = self.z1b.scale(pool, b);
        let t = self.t.add(pool, &za).add(pool, &zb).scale(pool, em);
        let total = pool.add(self.upsilon, upsilon);
        Frame::from_parts(pool, self.rho, self.sign, total, theta, z1, t)
    }

    /// `omega_1^1(X)`.
    pub fn omega(&self, pool: &mut ExprPool, x: &VectorField) -> Expr {
        let a = self.theta.pair(pool, x);
        let b = self.theta1.pair(pool, x);
        let c = self.theta1b.pair(pool, x);
        let terms = [
            pool.mul(self.alpha, a),
            pool.mul(self.beta, b),
            pool.mul(self.gamma, c),
        ];
        pool.add_all(&terms)
    }

    /// Frame field for a direction.
    pub fn field(&self, dir: Dir) -> &VectorField {
        match dir {
            Dir::One => &self.z1,
            Dir::Bar => &self.z1b,
            Dir::Zero => &self.t,
        }
    }

    /// `omega_1^1` evaluated on the frame field of `dir`.
    pub fn omega_dir(&self, dir: Dir) -> Expr {
        match dir {
            Dir::One => self.beta,
            Dir::Bar => self.gamma,
            Dir::Zero => self.alpha,
        }
    }

    /// Ambient residual vectors of the bracket identities
    /// `[Z1bar, Z1] = i T + omega(Z1bar) Z1 - omegabar(Z1) Z1bar` and
    /// `[Z1bar, T] = A^1_1bar Z1 - omegabar(T) Z1bar`, with
    /// `omegabar = -omega`.
    pub fn bracket_residuals(&self, pool: &mut ExprPool) -> [VectorField; 2] {
        let lhs = self.z1b.bracket(pool, &self.z1);
        let i = pool.imag_unit();
        let it = self.t.scale(pool, i);
        let g = self.z1.scale(pool, self.gamma);
        let b = self.z1b.scale(pool, self.beta);
        let rhs = it.add(pool, &g).add(pool, &b);
        let r1 = lhs.sub(pool, &rhs);

        let lhs = self.z1b.bracket(pool, &self.t);
        let a = self.z1.scale(pool, self.a_up);
        let b = self.z1b.scale(pool, self.alpha);
        let rhs = a.add(pool, &b);
        let r2 = lhs.sub(pool, &rhs);
        [r1, r2]
    }

    /// Duality residuals `theta(T)-1, theta(Z1), theta^1(Z1)-1, theta^1(T),
    /// theta^1(Z1bar)`.
    pub fn duality_residuals(&self, pool: &mut ExprPool) -> [Expr; 5] {
        let one = pool.one();
        let a = self.theta.pair(pool, &self.t);
        let a = pool.sub(a, one);
        let b = self.theta.pair(pool, &self.z1);
        let c = self.theta1.pair(pool, &self.z1);
        let c = pool.sub(c, one);
        let d = self.theta1.pair(pool, &self.t);
        let e = self.theta1.pair(pool, &self.z1b);
        [a, b, c, d, e]
    }

    /// `d theta(T, Z1)` and `d theta(Z1, Z1bar) - i`: Reeb and
    /// normalization residuals.
    pub fn reeb_residuals(&self, pool: &mut ExprPool) -> [Expr; 2] {
        let a = self.theta.d_pair(pool, &self.t, &self.z1);
        let b = self.theta.d_pair(pool, &self.z1, &self.z1b);
        let i = pool.imag_unit();
        let b = pool.sub(b, i);
        [a, b]
    }
}

/// Frame directions `1`, `1bar`, `0` (`Z1`, `Z1bar`, `T`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    One,
    Bar,
    Zero,
}

impl Dir {
    pub fn conj(self) -> Dir {
        match self {
            Dir::One => Dir::Bar,
            Dir::Bar => Dir::One,
            Dir::Zero => Dir::Zero,
        }
    }
}
