//! Holomorphic vector fields, their weight `(1,1)` potentials, approximate
//! tangency, and the prolonged tractor endomorphism of a solution of
//! `nabla_1 nabla_1 u + i A_11 u = 0`.

use alloc::vec::Vec;

use crate::calculus::{cov_diff, cov_path, Weighted};
use crate::expr::{Expr, ExprPool, VarId, C64};
use crate::geometry::{Dir, Frame, VectorField};
use crate::invariants::Invariants;
use crate::tractor::{mat_scale, mat_sub, Connection, Endo, Mat3};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AutomorphismError {
    #[error("component a{component} of the vector field depends on zb{var}")]
    NotHolomorphic { component: usize, var: usize },
    #[error("function depends on z{0}, so it is not anti-CR")]
    NotAntiCr(usize),
}

/// Ambient field `a1 d/dz1 + a2 d/dz2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HoloField {
    pub a1: Expr,
    pub a2: Expr,
    pub declared_holomorphic: bool,
}

impl HoloField {
    /// Builds a field and verifies symbolically that `d a^k / d zb^j = 0`.
    pub fn new(pool: &mut ExprPool, a1: Expr, a2: Expr) -> Result<Self, AutomorphismError> {
        for (component, a) in [(1, a1), (2, a2)] {
            for (var, v) in [(1, VarId::Zb1), (2, VarId::Zb2)] {
                let d = pool.wirtinger_diff(a, v);
                if !pool.is_zero(d) {
                    return Err(AutomorphismError::NotHolomorphic { component, var });
                }
            }
        }
        Ok(HoloField {
            a1,
            a2,
            declared_holomorphic: true,
        })
    }

    /// Field taken as given, with no holomorphy check.
    pub fn unchecked(a1: Expr, a2: Expr) -> Self {
        HoloField {
            a1,
            a2,
            declared_holomorphic: false,
        }
    }

    pub fn vector_field(&self, pool: &ExprPool) -> VectorField {
        VectorField::holomorphic(pool, self.a1, self.a2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialSource {
    FromField,
    UserSupplied,
}

/// Weight `(1,1)` density `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Potential {
    pub u: Weighted,
    pub source: PotentialSource,
}

impl Potential {
    pub fn user(u: Expr) -> Self {
        Potential {
            u: Weighted::scalar(u, (1, 1)),
            source: PotentialSource::UserSupplied,
        }
    }

    pub fn value(&self) -> Expr {
        self.u.value
    }
}

/// Coefficients of `X = x0 xi + x1 Z_1` with `xi` the `(1,0)` part of `T`,
/// and the determinant of the solve.
#[derive(Clone, Copy, Debug)]
pub struct Decomposition {
    pub x0: Expr,
    pub x1: Expr,
    pub det: Expr,
}

/// Solves `X = x0 xi + x1 Z_1` by Cramer's rule in the `dz1, dz2` basis.
pub fn decompose(pool: &mut ExprPool, x: &HoloField, frame: &Frame) -> Decomposition {
    let (xi1, xi2) = (frame.t.0[0], frame.t.0[1]);
    let (z1, z2) = (frame.z1.0[0], frame.z1.0[1]);
    let a = pool.mul(xi1, z2);
    let b = pool.mul(xi2, z1);
    let det = pool.sub(a, b);
    let inv = pool.recip(det).expect("xi and Z_1 are independent");
    let n0a = pool.mul(x.a1, z2);
    let n0b = pool.mul(x.a2, z1);
    let n0 = pool.sub(n0a, n0b);
    let n1a = pool.mul(xi1, x.a2);
    let n1b = pool.mul(xi2, x.a1);
    let n1 = pool.sub(n1a, n1b);
    Decomposition {
        x0: pool.mul(n0, inv),
        x1: pool.mul(n1, inv),
        det,
    }
}

/// `u = conj(x0)` where `X = x0 xi + x1 Z_1`; on `M`, `x0 = theta(X_M)`.
pub fn potential_from_field(pool: &mut ExprPool, x: &HoloField, frame: &Frame) -> Potential {
    let d = decompose(pool, x, frame);
    Potential {
        u: Weighted::scalar(pool.mirror(d.x0), (1, 1)),
        source: PotentialSource::FromField,
    }
}

/// `nabla_1 nabla_1 u + i A_11 u`.
pub fn automorphism_residual(pool: &mut ExprPool, u: &Potential, frame: &Frame) -> Expr {
    let dd = cov_path(pool, frame, &u.u, &[Dir::One, Dir::One]).value;
    let au = pool.mul(frame.a11, u.u.value);
    let au = pool.scale(I, au);
    pool.add(dd, au)
}

/// Field along `M` rebuilt from a potential, with its CR defect.
#[derive(Clone, Copy, Debug)]
pub struct FieldAlongM {
    /// `a^k = f T z^k + i f^1 Z_1 z^k`, `f = conj(u)`.
    pub a: [Expr; 2],
    /// `Z_1bar a^k`; vanishes when `u` solves the automorphism equation.
    pub cr_defect: [Expr; 2],
}

pub fn field_from_potential(pool: &mut ExprPool, u: &Potential, frame: &Frame) -> FieldAlongM {
    let f = pool.mirror(u.u.value);
    let f1 = frame.z1b.apply(pool, f);
    let if1 = pool.scale(I, f1);
    let a: [Expr; 2] = core::array::from_fn(|k| {
        let p = pool.mul(f, frame.t.0[k]);
        let q = pool.mul(if1, frame.z1.0[k]);
        pool.add(p, q)
    });
    let cr_defect = core::array::from_fn(|k| frame.z1b.apply(pool, a[k]));
    FieldAlongM { a, cr_defect }
}

/// Residuals of the Lie derivative identity for `V = f T + i f^1 Z_1`.
#[derive(Clone, Copy, Debug)]
pub struct LieCheck {
    /// `theta^1([V, Z_1bar]) + i (nabla_1bar nabla^1 f - i A_1bar^1 f)`.
    pub residual: Expr,
    /// `theta([V, Z_1bar])`.
    pub theta_part: Expr,
}

/// Holds for every weight `(1,1)` density `f`, solution or not.
pub fn lie_symmetry_check(pool: &mut ExprPool, f: Expr, frame: &Frame) -> LieCheck {
    let fw = Weighted::scalar(f, (1, 1));
    let up = cov_diff(pool, frame, &fw, Dir::Bar);
    let dd = cov_diff(pool, frame, &up, Dir::Bar).value;
    let ab = pool.mirror(frame.a11);
    let af = pool.mul(ab, f);
    let af = pool.scale(-I, af);
    let op = pool.add(dd, af);
    let v = {
        let ft = frame.t.scale(pool, f);
        let g = pool.scale(I, up.value);
        let gz = frame.z1.scale(pool, g);
        ft.add(pool, &gz)
    };
    let br = v.bracket(pool, &frame.z1b);
    let lhs = frame.theta1.pair(pool, &br);
    let iop = pool.scale(I, op);
    LieCheck {
        residual: pool.add(lhs, iop),
        theta_part: frame.theta.pair(pool, &br),
    }
}

/// Pointwise approximate-tangency predicates of `u` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TangencyFlags {
    pub approx: bool,
    pub strict: bool,
}

/// `(Im u)^2 <= eps (Re u)^2` and its strict version.
pub fn tangency_flags(u: C64, eps: f64) -> TangencyFlags {
    let lhs = u.im * u.im;
    let rhs = eps * u.re * u.re;
    TangencyFlags {
        approx: lhs <= rhs,
        strict: lhs < rhs,
    }
}

/// Weighted fractions of a tangency classification.
#[derive(Clone, Debug, PartialEq)]
pub struct TangencySummary {
    pub epsilon: f64,
    pub fraction: f64,
    pub strict_fraction: f64,
    /// Points where strict 1-approximate tangency and `Re u^2 > 0`
    /// disagree (only meaningful for `epsilon == 1`).
    pub predicate_mismatches: usize,
}

/// Classifies the values `u` against quadrature weights `w`.
pub fn tangency_classify(u: &[C64], w: &[f64], eps: f64) -> TangencySummary {
    let total = crate::quadrature::pairwise_sum(w);
    let mut a = Vec::with_capacity(u.len());
    let mut s = Vec::with_capacity(u.len());
    let mut mismatches = 0;
    for (&x, &wi) in u.iter().zip(w) {
        let f = tangency_flags(x, eps);
        a.push(if f.approx { wi } else { 0.0 });
        s.push(if f.strict { wi } else { 0.0 });
        let re_sq = (x * x).re > 0.0;
        if f.strict != re_sq {
            mismatches += 1;
        }
    }
    TangencySummary {
        epsilon: eps,
        fraction: crate::quadrature::pairwise_sum(&a) / total,
        strict_fraction: crate::quadrature::pairwise_sum(&s) / total,
        predicate_mismatches: if eps == 1.0 { mismatches } else { 0 },
    }
}

/// Prolonged section and its named entries.
#[derive(Clone, Debug)]
pub struct Prolongation {
    pub s: Endo,
    pub upsilon1: Expr,
    pub mu: Expr,
    pub xi: Expr,
    pub chi: Expr,
    pub eta1: Expr,
    pub lambda: Expr,
    pub nu: Expr,
}

/// Builds `s = [[mu, ups_1, iu], [nu, chi - mu, -xi], [i lambda, -eta_1,
/// -chi]]` from `u`. `nu` (an upper `1`, stored as a lower `1bar` of weight
/// `(0,0)`) is free and defaults to zero.
pub fn prolong(
    pool: &mut ExprPool,
    u: &Potential,
    frame: &Frame,
    inv: &Invariants,
    nu: Option<Expr>,
) -> Prolongation {
    let uv = u.u.value;
    let r = inv.r.value;
    let d1u = cov_diff(pool, frame, &u.u, Dir::One);
    let ups = Weighted::new(pool.scale(I, d1u.value), &[Dir::One], (1, 1));
    let d0u = cov_diff(pool, frame, &u.u, Dir::Zero).value;
    let dups = cov_diff(pool, frame, &ups, Dir::Bar).value;
    let ur = pool.mul(uv, r);
    let mu = {
        let q = pool.scale(C64::new(0.0, -0.25), ur);
        let m = pool.neg(dups);
        let s = pool.add_all(&[d0u, m, q]);
        pool.scale_re(1.0 / 3.0, s)
    };
    let dbu = cov_diff(pool, frame, &u.u, Dir::Bar).value;
    let xi = Weighted::new(pool.scale(-I, dbu), &[Dir::Bar], (1, 1));
    let d1xi = cov_diff(pool, frame, &xi, Dir::One).value;
    let chi = {
        let q = pool.scale(C64::new(0.0, 0.25), ur);
        let m = pool.neg(d1xi);
        let s = pool.add_all(&[mu, m, q]);
        pool.scale_re(0.5, s)
    };
    let chi_w = Weighted::scalar(chi, (0, 0));
    let d1chi = cov_diff(pool, frame, &chi_w, Dir::One).value;
    let eta1 = {
        let ax = pool.mul(frame.a11, xi.value);
        let ax = pool.scale(-I, ax);
        let ut = pool.mul(uv, inv.t1.value);
        let ut = pool.scale(I, ut);
        pool.add_all(&[d1chi, ax, ut])
    };
    let nu = nu.unwrap_or_else(|| pool.zero());
    let nu_w = Weighted::new(nu, &[Dir::Bar], (0, 0));
    let d1nu = cov_diff(pool, frame, &nu_w, Dir::One).value;
    let lambda = {
        let two_mu = pool.scale_re(2.0, mu);
        let m = pool.sub(two_mu, chi);
        let rm = pool.mul(r, m);
        let rm = pool.scale_re(0.25, rm);
        let xt = pool.mul(xi.value, inv.t1.value);
        let xt = pool.neg(xt);
        let s = pool.add_all(&[d1nu, rm, xt]);
        pool.scale(I, s)
    };
    let iu = pool.scale(I, uv);
    let cm = pool.sub(chi, mu);
    let mxi = pool.neg(xi.value);
    let il = pool.scale(I, lambda);
    let meta = pool.neg(eta1);
    let mchi = pool.neg(chi);
    let m: Mat3 = [[mu, ups.value, iu], [nu, cm, mxi], [il, meta, mchi]];
    Prolongation {
        s: Endo::new(m),
        upsilon1: ups.value,
        mu,
        xi: xi.value,
        chi,
        eta1,
        lambda,
        nu,
    }
}

/// `nabla_1 s - u kappa_10`. When `u` is a solution every entry except the
/// bottom-left one vanishes.
pub fn prolong_residual(
    pool: &mut ExprPool,
    conn: &Connection,
    s: &Endo,
    u: &Potential,
    kappa10: &Mat3,
) -> Mat3 {
    let d = conn.derive_endo(pool, s, Dir::One);
    let uk = mat_scale(pool, u.u.value, kappa10);
    mat_sub(pool, &d.m, &uk)
}

/// Checks that `f` is anti-CR (`d f / d z^j = 0` symbolically).
pub fn check_anti_cr(pool: &mut ExprPool, f: Expr) -> Result<(), AutomorphismError> {
    for (j, v) in [(1, VarId::Z1), (2, VarId::Z2)] {
        let d = pool.wirtinger_diff(f, v);
        if !pool.is_zero(d) {
            return Err(AutomorphismError::NotAntiCr(j));
        }
    }
    Ok(())
}
