//! Named pseudohermitian and CR invariants, built as weighted components.

use crate::calculus::{cov_diff, cov_path, divergence_a, Weighted};
use crate::expr::{Expr, ExprPool, VarId, C64};
use crate::geometry::{Dir, Frame};

const I: C64 = C64::new(0.0, 1.0);

/// Webster scalar curvature `R = d omega(Z1, Z1bar)`, weight `(-1,-1)`.
pub fn scalar_curvature(pool: &mut ExprPool, frame: &Frame) -> Weighted {
    let a = frame.z1.apply(pool, frame.gamma);
    let b = frame.z1b.apply(pool, frame.beta);
    let br = frame.z1.bracket(pool, &frame.z1b);
    let c = frame.omega(pool, &br);
    let ab = pool.sub(a, b);
    Weighted::scalar(pool.sub(ab, c), (-1, -1))
}

/// `d omega(Z1, T) - nabla^1 A_11`; vanishes by the structure equation.
pub fn structure_crosscheck(pool: &mut ExprPool, frame: &Frame) -> Expr {
    let a = frame.z1.apply(pool, frame.alpha);
    let b = frame.t.apply(pool, frame.beta);
    let br = frame.z1.bracket(pool, &frame.t);
    let c = frame.omega(pool, &br);
    let ab = pool.sub(a, b);
    let dw = pool.sub(ab, c);
    let div = divergence_a(pool, frame);
    pool.sub(dw, div)
}

/// `R` recovered from the Ricci identity applied to the upper-index field
/// with component `v` (stored as a lower `1bar`).
pub fn ricci_curvature(pool: &mut ExprPool, frame: &Frame, v: Expr) -> Expr {
    let t = Weighted::new(v, &[Dir::Bar], (1, 1));
    let ab = cov_path(pool, frame, &t, &[Dir::Bar, Dir::One]).value;
    let ba = cov_path(pool, frame, &t, &[Dir::One, Dir::Bar]).value;
    let d0 = cov_diff(pool, frame, &t, Dir::Zero).value;
    let comm = pool.sub(ab, ba);
    let d0 = pool.scale(I, d0);
    let num = pool.add(comm, d0);
    let inv = pool.pow(v, -1).expect("test field is not zero");
    pool.mul(num, inv)
}

/// `A_11` as a component with index word `11`.
pub fn torsion(frame: &Frame) -> Weighted {
    Weighted::new(frame.a11, &[Dir::One, Dir::One], (0, 0))
}

/// `T_1 = (nabla_1 R - 4i nabla^1 A_11) / 12`.
pub fn t1(pool: &mut ExprPool, frame: &Frame, r: &Weighted) -> Weighted {
    let d1r = cov_diff(pool, frame, r, Dir::One).value;
    let div = divergence_a(pool, frame);
    let x = pool.scale(C64::new(0.0, -4.0), div);
    let s = pool.add(d1r, x);
    Weighted::new(pool.scale_re(1.0 / 12.0, s), &[Dir::One], (-1, -1))
}

/// `S = -(nabla^1 T_1 + nabla^1bar T_1bar + R^2/16 - A^11 A_11)`.
pub fn s_density(pool: &mut ExprPool, frame: &Frame, r: &Weighted, t1: &Weighted) -> Weighted {
    let d = cov_diff(pool, frame, t1, Dir::Bar).value;
    let db = pool.mirror(d);
    let r2 = pool.mul(r.value, r.value);
    let r2 = pool.scale_re(1.0 / 16.0, r2);
    let ab = pool.mirror(frame.a11);
    let aa = pool.mul(frame.a11, ab);
    let aa = pool.neg(aa);
    let s = pool.add_all(&[d, db, r2, aa]);
    Weighted::scalar(pool.neg(s), (-2, -2))
}

/// Cartan tensor
/// `Q_11 = -(1/6) nabla_1 nabla_1 R - (i/2) R A_11 + nabla_0 A_11
///         + (2i/3) nabla_1 nabla^1 A_11`, weight `(-1,-1)`.
pub fn cartan_q(pool: &mut ExprPool, frame: &Frame, r: &Weighted) -> Weighted {
    let a = torsion(frame);
    let d11r = cov_path(pool, frame, r, &[Dir::One, Dir::One]).value;
    let ra = pool.mul(r.value, a.value);
    let d0a = cov_diff(pool, frame, &a, Dir::Zero).value;
    let d1da = cov_path(pool, frame, &a, &[Dir::Bar, Dir::One]).value;
    let terms = [
        pool.scale_re(-1.0 / 6.0, d11r),
        pool.scale(C64::new(0.0, -0.5), ra),
        d0a,
        pool.scale(C64::new(0.0, 2.0 / 3.0), d1da),
    ];
    Weighted::new(pool.add_all(&terms), &[Dir::One, Dir::One], (-1, -1))
}

/// `Y_1 = -i nabla^1 Q_11`, weight `(-2,-2)`.
pub fn y1(pool: &mut ExprPool, frame: &Frame, q: &Weighted) -> Weighted {
    let d = cov_diff(pool, frame, q, Dir::Bar).value;
    Weighted::new(pool.scale(-I, d), &[Dir::One], (-2, -2))
}

/// Obstruction density `(nabla^1 nabla^1 Q_11 - i A^11 Q_11) / 3`,
/// weight `(-3,-3)`.
pub fn obstruction(pool: &mut ExprPool, frame: &Frame, q: &Weighted) -> Weighted {
    let d = cov_diff(pool, frame, q, Dir::Bar);
    let d = d.contract(0, 1).expect("1bar then 1");
    let dd = cov_diff(pool, frame, &d, Dir::Bar).value;
    let ab = pool.mirror(frame.a11);
    let aq = pool.mul(ab, q.value);
    let aq = pool.scale(-I, aq);
    let s = pool.add(dd, aq);
    Weighted::scalar(pool.scale_re(1.0 / 3.0, s), (-3, -3))
}

/// `|Q|^2 = Q_11 Q^11`, weight `(-4,-4)`.
pub fn q_norm_sq(pool: &mut ExprPool, q: &Weighted) -> Weighted {
    let qb = pool.mirror(q.value);
    Weighted::scalar(pool.mul(q.value, qb), (-4, -4))
}

/// `nabla_0 R - 2 Re(nabla^1 nabla^1 A_11)`.
pub fn bianchi_residual(pool: &mut ExprPool, frame: &Frame, r: &Weighted) -> Expr {
    let d0r = cov_diff(pool, frame, r, Dir::Zero).value;
    let a = torsion(frame);
    let d = cov_diff(pool, frame, &a, Dir::Bar);
    let d = d.contract(0, 1).expect("1bar then 1");
    let dd = cov_diff(pool, frame, &d, Dir::Bar).value;
    let re = pool.re(dd);
    let re2 = pool.scale_re(2.0, re);
    pool.sub(d0r, re2)
}

/// All invariants of one frame, built once and shared.
#[derive(Clone, Debug)]
pub struct Invariants {
    pub r: Weighted,
    pub a11: Weighted,
    pub t1: Weighted,
    pub s: Weighted,
    pub q11: Weighted,
    pub y1: Weighted,
    pub obstruction: Weighted,
    pub q_norm_sq: Weighted,
}

impl Invariants {
    pub fn build(pool: &mut ExprPool, frame: &Frame) -> Self {
        let r = scalar_curvature(pool, frame);
        let t1v = t1(pool, frame, &r);
        let s = s_density(pool, frame, &r, &t1v);
        let q11 = cartan_q(pool, frame, &r);
        let y = y1(pool, frame, &q11);
        let o = obstruction(pool, frame, &q11);
        let qn = q_norm_sq(pool, &q11);
        Invariants {
            r,
            a11: torsion(frame),
            t1: t1v,
            s,
            q11,
            y1: y,
            obstruction: o,
            q_norm_sq: qn,
        }
    }
}

/// Monge–Ampère operator
/// `J(u) = det [[u, u_{zbar k}], [u_{z j}, u_{z j zbar k}]]` in `C^2`.
pub fn monge_ampere_j(pool: &mut ExprPool, u: Expr) -> Expr {
    let hol = [VarId::Z1, VarId::Z2];
    let anti = [VarId::Zb1, VarId::Zb2];
    let mut m = [[u; 3]; 3];
    for k in 0..2 {
        m[0][k + 1] = pool.wirtinger_diff(u, anti[k]);
    }
    for j in 0..2 {
        let dj = pool.wirtinger_diff(u, hol[j]);
        m[j + 1][0] = dj;
        for k in 0..2 {
            m[j + 1][k + 1] = pool.wirtinger_diff(dj, anti[k]);
        }
    }
    det3(pool, &m)
}

/// Cofactor expansion of a 3x3 determinant.
pub fn det3(pool: &mut ExprPool, m: &[[Expr; 3]; 3]) -> Expr {
    let mut terms = alloc::vec::Vec::with_capacity(6);
    for (p, sign) in [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([2, 1, 0], -1.0),
        ([1, 0, 2], -1.0),
    ] {
        let t = pool.mul_all(&[m[0][p[0]], m[1][p[1]], m[2][p[2]]]);
        terms.push(pool.scale_re(sign, t));
    }
    pool.add_all(&terms)
}
