//! Standard CR tractors in a fixed contact-form scale.
//!
//! A tractor is the column `(sigma, mu, rho)` and an endomorphism is a 3x3
//! matrix `m[B][A]` acting on columns (row = upper index `B`, column = lower
//! index `A`). `mu` is the component `mu^1`, stored as a lower `1bar`.

use alloc::vec::Vec;

use crate::calculus::{connection_factor, Weighted};
use crate::expr::{Expr, ExprPool, C64};
use crate::geometry::{Dir, Frame};
use crate::invariants::Invariants;

const I: C64 = C64::new(0.0, 1.0);

pub type Mat3 = [[Expr; 3]; 3];

/// Tractor field with an extra index word (for tractor-valued forms such
/// as `nabla_1 v`) and a density weight offset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tractor {
    pub comps: [Expr; 3],
    pub extra: Vec<Dir>,
    pub offset: (i32, i32),
}

impl Tractor {
    pub fn new(sigma: Expr, mu: Expr, rho: Expr) -> Self {
        Tractor {
            comps: [sigma, mu, rho],
            extra: Vec::new(),
            offset: (0, 0),
        }
    }

    /// Canonical tractor `Z = (0, 0, 1)`, weight offset `(1, 0)`.
    pub fn canonical(pool: &ExprPool) -> Self {
        Tractor {
            comps: [pool.zero(), pool.zero(), pool.one()],
            extra: Vec::new(),
            offset: (1, 0),
        }
    }

    pub fn sigma(&self) -> Expr {
        self.comps[0]
    }

    pub fn mu(&self) -> Expr {
        self.comps[1]
    }

    pub fn rho(&self) -> Expr {
        self.comps[2]
    }

    /// Component weights `(0,1)`, `(0,1)` for the stored `mu_1bar`, and
    /// `(-1,0)`, shifted by the offset.
    pub fn component(&self, k: usize) -> Weighted {
        let (w, idx): ((i32, i32), &[Dir]) = match k {
            0 => ((0, 1), &[]),
            1 => ((0, 1), &[Dir::Bar]),
            _ => ((-1, 0), &[]),
        };
        let mut indices = self.extra.clone();
        indices.extend_from_slice(idx);
        Weighted {
            value: self.comps[k],
            indices,
            weight: (w.0 + self.offset.0, w.1 + self.offset.1),
        }
    }
}

/// Tractor metric `h(v, w) = sigma_v conj(rho_w) + rho_v conj(sigma_w)
/// + mu_v conj(mu_w)`.
pub fn metric_pair(pool: &mut ExprPool, v: &Tractor, w: &Tractor) -> Expr {
    let wb: [Expr; 3] = core::array::from_fn(|k| pool.mirror(w.comps[k]));
    let terms = [
        pool.mul(v.comps[0], wb[2]),
        pool.mul(v.comps[2], wb[0]),
        pool.mul(v.comps[1], wb[1]),
    ];
    pool.add_all(&terms)
}

/// Curvature data the tractor connection depends on.
#[derive(Clone, Copy, Debug)]
pub struct TractorData {
    pub r: Expr,
    pub a11: Expr,
    pub t1: Expr,
    pub s: Expr,
}

impl TractorData {
    pub fn from_invariants(inv: &Invariants) -> Self {
        TractorData {
            r: inv.r.value,
            a11: inv.a11.value,
            t1: inv.t1.value,
            s: inv.s.value,
        }
    }
}

/// The tractor connection of one frame, in matrix form
/// `nabla_X v = X(v) + C_X v` (plus the usual corrections for the extra
/// indices and the weight offset).
#[derive(Clone, Debug)]
pub struct Connection {
    pub frame: Frame,
    pub data: TractorData,
    gamma: [Mat3; 3],
}

fn dir_index(d: Dir) -> usize {
    match d {
        Dir::One => 0,
        Dir::Bar => 1,
        Dir::Zero => 2,
    }
}

impl Connection {
    pub fn new(pool: &mut ExprPool, frame: &Frame, data: TractorData) -> Self {
        let z = pool.zero();
        let one = pool.one();
        let TractorData { r, a11, t1, s } = data;
        let a11b = pool.mirror(a11);
        let t1b = pool.mirror(t1);
        let r4 = pool.scale_re(0.25, r);
        let mr4 = pool.neg(r4);
        let mt1 = pool.neg(t1);
        let mia = pool.scale(-I, a11);
        let miab = pool.scale(-I, a11b);
        let mone = pool.neg(one);
        // density parts diag(-1/3, 2/3, -1/3) omega are added in `c_matrix`
        let g1 = [[z, z, z], [r4, z, one], [mt1, mia, z]];
        let g1b = [[z, mone, z], [miab, z, z], [t1b, mr4, z]];
        let r12 = pool.scale(C64::new(0.0, -1.0 / 12.0), r);
        let r6 = pool.scale(C64::new(0.0, 1.0 / 6.0), r);
        let i1 = pool.imag_unit();
        let tb2 = pool.scale(C64::new(0.0, -2.0), t1b);
        let is = pool.scale(-I, s);
        let t2 = pool.scale(C64::new(0.0, -2.0), t1);
        let g0 = [[r12, z, i1], [tb2, r6, z], [is, t2, r12]];
        Connection {
            frame: frame.clone(),
            data,
            gamma: [g1, g1b, g0],
        }
    }

    /// `C_X` including the weight parts of the components.
    pub fn c_matrix(&self, pool: &mut ExprPool, dir: Dir) -> Mat3 {
        let mut m = self.gamma[dir_index(dir)];
        let w = self.frame.omega_dir(dir);
        for (k, c) in [-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0].into_iter().enumerate() {
            let d = pool.scale_re(c, w);
            m[k][k] = pool.add(m[k][k], d);
        }
        m
    }

    /// `nabla_dir v`; the new index is prepended to `v.extra`.
    pub fn derive(&self, pool: &mut ExprPool, v: &Tractor, dir: Dir) -> Tractor {
        let c = self.c_matrix(pool, dir);
        let x = *self.frame.field(dir);
        let w = self.frame.omega_dir(dir);
        let k = connection_factor(&v.extra, v.offset);
        let comps = core::array::from_fn(|b| {
            let mut terms = Vec::with_capacity(5);
            terms.push(x.apply(pool, v.comps[b]));
            for a in 0..3 {
                if !pool.is_zero(c[b][a]) && !pool.is_zero(v.comps[a]) {
                    terms.push(pool.mul(c[b][a], v.comps[a]));
                }
            }
            if k != 0.0 {
                let t = pool.mul(w, v.comps[b]);
                terms.push(pool.scale_re(k, t));
            }
            pool.add_all(&terms)
        });
        let mut extra = Vec::with_capacity(v.extra.len() + 1);
        extra.push(dir);
        extra.extend_from_slice(&v.extra);
        Tractor {
            comps,
            extra,
            offset: v.offset,
        }
    }

    /// Applies `dirs` left to right (`[a, b]` gives `nabla_b nabla_a v`).
    pub fn derive_path(&self, pool: &mut ExprPool, v: &Tractor, dirs: &[Dir]) -> Tractor {
        let mut cur = v.clone();
        for &d in dirs {
            cur = self.derive(pool, &cur, d);
        }
        cur
    }

    /// `nabla_dir m` for an endomorphism with extra index word and weight.
    pub fn derive_endo(&self, pool: &mut ExprPool, m: &Endo, dir: Dir) -> Endo {
        let c = self.c_matrix(pool, dir);
        let x = *self.frame.field(dir);
        let w = self.frame.omega_dir(dir);
        let k = connection_factor(&m.extra, m.weight);
        let cm = mat_mul(pool, &c, &m.m);
        let mc = mat_mul(pool, &m.m, &c);
        let out = core::array::from_fn(|b| {
            core::array::from_fn(|a| {
                let mut terms = Vec::with_capacity(4);
                terms.push(x.apply(pool, m.m[b][a]));
                terms.push(cm[b][a]);
                terms.push(pool.neg(mc[b][a]));
                if k != 0.0 {
                    let t = pool.mul(w, m.m[b][a]);
                    terms.push(pool.scale_re(k, t));
                }
                pool.add_all(&terms)
            })
        });
        let mut extra = Vec::with_capacity(m.extra.len() + 1);
        extra.push(dir);
        extra.extend_from_slice(&m.extra);
        Endo {
            m: out,
            extra,
            weight: m.weight,
        }
    }

    /// Curvature operator applied to `v`:
    /// * `(1,1bar)`: `nabla_1 nabla_1bar - nabla_1bar nabla_1 + i nabla_0`
    /// * `(1,0)`: `nabla_1 nabla_0 - nabla_0 nabla_1 - A_11 nabla_1bar`
    /// * `(1bar,0)`: `nabla_1bar nabla_0 - nabla_0 nabla_1bar
    ///   - A_1bar1bar nabla_1`
    pub fn curvature_apply(&self, pool: &mut ExprPool, v: &Tractor, which: Curv) -> [Expr; 3] {
        let (a, b) = match which {
            Curv::OneBar => (Dir::One, Dir::Bar),
            Curv::OneZero => (Dir::One, Dir::Zero),
            Curv::BarZero => (Dir::Bar, Dir::Zero),
        };
        let ab = self.derive_path(pool, v, &[b, a]);
        let ba = self.derive_path(pool, v, &[a, b]);
        let (extra_dir, coef) = match which {
            Curv::OneBar => (Dir::Zero, I),
            Curv::OneZero => (Dir::Bar, C64::new(-1.0, 0.0)),
            Curv::BarZero => (Dir::One, C64::new(-1.0, 0.0)),
        };
        let e = self.derive(pool, v, extra_dir);
        let tor = match which {
            Curv::OneBar => pool.one(),
            Curv::OneZero => self.frame.a11,
            Curv::BarZero => pool.mirror(self.frame.a11),
        };
        core::array::from_fn(|k| {
            let d = pool.sub(ab.comps[k], ba.comps[k]);
            let t = pool.mul(tor, e.comps[k]);
            let t = pool.scale(coef, t);
            pool.add(d, t)
        })
    }

    /// Curvature matrix from its commutator definition, applied column by
    /// column to the constant frame tractors.
    pub fn curvature_matrix(&self, pool: &mut ExprPool, which: Curv) -> Mat3 {
        let z = pool.zero();
        let mut m = [[z; 3]; 3];
        for a in 0..3 {
            let mut comps = [z; 3];
            comps[a] = pool.one();
            let col = self.curvature_apply(
                pool,
                &Tractor {
                    comps,
                    extra: Vec::new(),
                    offset: (0, 0),
                },
                which,
            );
            for b in 0..3 {
                m[b][a] = col[b];
            }
        }
        m
    }
}

/// Which tractor curvature component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curv {
    OneBar,
    OneZero,
    BarZero,
}

/// Endomorphism-valued component with an extra index word and weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endo {
    pub m: Mat3,
    pub extra: Vec<Dir>,
    pub weight: (i32, i32),
}

impl Endo {
    pub fn new(m: Mat3) -> Self {
        Endo {
            m,
            extra: Vec::new(),
            weight: (0, 0),
        }
    }

    pub fn trace(&self, pool: &mut ExprPool) -> Expr {
        pool.add_all(&[self.m[0][0], self.m[1][1], self.m[2][2]])
    }

    pub fn apply(&self, pool: &mut ExprPool, v: &[Expr; 3]) -> [Expr; 3] {
        core::array::from_fn(|b| {
            let t: Vec<Expr> = (0..3).map(|a| pool.mul(self.m[b][a], v[a])).collect();
            pool.add_all(&t)
        })
    }
}

pub fn mat_mul(pool: &mut ExprPool, a: &Mat3, b: &Mat3) -> Mat3 {
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let mut t = Vec::with_capacity(3);
            for k in 0..3 {
                if !pool.is_zero(a[i][k]) && !pool.is_zero(b[k][j]) {
                    t.push(pool.mul(a[i][k], b[k][j]));
                }
            }
            pool.add_all(&t)
        })
    })
}

pub fn mat_sub(pool: &mut ExprPool, a: &Mat3, b: &Mat3) -> Mat3 {
    core::array::from_fn(|i| core::array::from_fn(|j| pool.sub(a[i][j], b[i][j])))
}

pub fn mat_scale(pool: &mut ExprPool, f: Expr, a: &Mat3) -> Mat3 {
    core::array::from_fn(|i| core::array::from_fn(|j| pool.mul(f, a[i][j])))
}

pub fn mat_trace(pool: &mut ExprPool, a: &Mat3) -> Expr {
    pool.add_all(&[a[0][0], a[1][1], a[2][2]])
}

/// `kappa_10` from the explicit formula: bottom row `(Y_1, i Q_11, 0)`.
pub fn kappa10_explicit(pool: &mut ExprPool, inv: &Invariants) -> Mat3 {
    let z = pool.zero();
    let iq = pool.scale(I, inv.q11.value);
    [[z, z, z], [z, z, z], [inv.y1.value, iq, z]]
}

/// `kappa_1bar0` from the explicit formula: first column
/// `(0, i conj(Q_11), -conj(Y_1))`.
pub fn kappa1b0_explicit(pool: &mut ExprPool, inv: &Invariants) -> Mat3 {
    let z = pool.zero();
    let qb = pool.mirror(inv.q11.value);
    let iqb = pool.scale(I, qb);
    let yb = pool.mirror(inv.y1.value);
    let myb = pool.neg(yb);
    [[z, z, z], [iqb, z, z], [myb, z, z]]
}

/// `-H conj(m)^T H` with `H` the antidiagonal metric matrix.
pub fn metric_adjoint(pool: &mut ExprPool, m: &Mat3) -> Mat3 {
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let x = pool.mirror(m[2 - j][2 - i]);
            pool.neg(x)
        })
    })
}

/// `nabla^1 kappa_10` (numerically `nabla_1bar kappa_10`). Its only
/// non-zero entry is the bottom-left one, `-3i O`.
pub fn kappa_divergence(pool: &mut ExprPool, conn: &Connection, kappa10: &Mat3) -> Endo {
    let k = Endo {
        m: *kappa10,
        extra: alloc::vec![Dir::One, Dir::Zero],
        weight: (0, 0),
    };
    conn.derive_endo(pool, &k, Dir::Bar)
}

/// `nabla^1bar kappa_1bar0` (numerically `nabla_1 kappa_1bar0`).
pub fn kappa_bar_divergence(pool: &mut ExprPool, conn: &Connection, kappa1b0: &Mat3) -> Endo {
    let k = Endo {
        m: *kappa1b0,
        extra: alloc::vec![Dir::Bar, Dir::Zero],
        weight: (0, 0),
    };
    conn.derive_endo(pool, &k, Dir::One)
}

/// Change of scale `theta -> e^upsilon theta` on the components, with the
/// derivatives of `upsilon` taken in the source frame:
/// `sigma' = sigma`, `mu' = mu + u^1 sigma`,
/// `rho' = rho - u_1 mu - (u^1 u_1 - i u_0) sigma / 2`.
pub fn transform(pool: &mut ExprPool, frame: &Frame, v: &Tractor, upsilon: Expr) -> Tractor {
    let u1 = frame.z1.apply(pool, upsilon);
    let u1up = frame.z1b.apply(pool, upsilon);
    let u0 = frame.t.apply(pool, upsilon);
    let [s, m, r] = v.comps;
    let us = pool.mul(u1up, s);
    let mu = pool.add(m, us);
    let a = pool.mul(u1up, u1);
    let b = pool.scale(-I, u0);
    let c = pool.add(a, b);
    let c = pool.scale_re(-0.5, c);
    let cs = pool.mul(c, s);
    let um = pool.mul(u1, m);
    let um = pool.neg(um);
    let rho = pool.add_all(&[r, um, cs]);
    Tractor {
        comps: [s, mu, rho],
        extra: v.extra.clone(),
        offset: v.offset,
    }
}
