//! Weighted Tanaka–Webster covariant derivatives on components.
//!
//! All indices are stored covariantly. With `h_{11bar} = 1` an upper `1` is
//! stored as a lower `1bar` whose density weight is raised by `(1,1)`, so
//! raising and contracting never change a component's value, only its
//! index word and weight.

use alloc::vec::Vec;

use crate::expr::{Expr, ExprPool, C64};
use crate::geometry::{Dir, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CalculusError {
    #[error("commutator identities are only implemented up to rank one (got rank {0})")]
    UnsupportedRank(usize),
    #[error("indices {0} and {1} cannot be contracted")]
    BadContraction(usize, usize),
}

/// A component with index word over `{1, 1bar, 0}` and CR weight `(w, w')`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weighted {
    pub value: Expr,
    pub indices: Vec<Dir>,
    pub weight: (i32, i32),
}

impl Weighted {
    pub fn scalar(value: Expr, weight: (i32, i32)) -> Self {
        Weighted {
            value,
            indices: Vec::new(),
            weight,
        }
    }

    pub fn new(value: Expr, indices: &[Dir], weight: (i32, i32)) -> Self {
        Weighted {
            value,
            indices: indices.to_vec(),
            weight,
        }
    }

    pub fn conj(&self, pool: &mut ExprPool) -> Self {
        Weighted {
            value: pool.mirror(self.value),
            indices: self.indices.iter().map(|d| d.conj()).collect(),
            weight: (self.weight.1, self.weight.0),
        }
    }

    pub fn mul(&self, pool: &mut ExprPool, other: &Self) -> Self {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        Weighted {
            value: pool.mul(self.value, other.value),
            indices,
            weight: (self.weight.0 + other.weight.0, self.weight.1 + other.weight.1),
        }
    }

    pub fn scale(&self, pool: &mut ExprPool, c: C64) -> Self {
        Weighted {
            value: pool.scale(c, self.value),
            ..self.clone()
        }
    }

    /// Contracts a `1` slot with a `1bar` slot through `h^{1 1bar}`.
    pub fn contract(&self, i: usize, j: usize) -> Result<Self, CalculusError> {
        let (a, b) = (self.indices.get(i), self.indices.get(j));
        let ok = i != j
            && matches!(
                (a, b),
                (Some(Dir::One), Some(Dir::Bar)) | (Some(Dir::Bar), Some(Dir::One))
            );
        if !ok {
            return Err(CalculusError::BadContraction(i, j));
        }
        let indices = self
            .indices
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, &d)| d)
            .collect();
        Ok(Weighted {
            value: self.value,
            indices,
            weight: (self.weight.0 - 1, self.weight.1 - 1),
        })
    }

    /// Replaces a `0` slot by the weight `(-1,-1)` it trivializes to.
    pub fn trivialize_zero(&self, i: usize) -> Self {
        assert_eq!(self.indices[i], Dir::Zero, "slot {i} is not a 0 index");
        let mut indices = self.indices.clone();
        indices.remove(i);
        Weighted {
            value: self.value,
            indices,
            weight: (self.weight.0 - 1, self.weight.1 - 1),
        }
    }

    /// Connection coefficient multiplying `omega_1^1(dir)`.
    pub fn connection_factor(&self) -> f64 {
        connection_factor(&self.indices, self.weight)
    }
}

/// `-(#1) + (#1bar) + (w - w')/3`: the multiple of `omega_1^1(X)` added to
/// `X(value)` by `nabla_X`.
pub fn connection_factor(indices: &[Dir], weight: (i32, i32)) -> f64 {
    let mut k = (weight.0 - weight.1) as f64 / 3.0;
    for d in indices {
        match d {
            Dir::One => k -= 1.0,
            Dir::Bar => k += 1.0,
            Dir::Zero => {}
        }
    }
    k
}

/// Sums of components with identical index word and weight.
pub fn sum(pool: &mut ExprPool, terms: &[Weighted]) -> Weighted {
    let first = &terms[0];
    debug_assert!(terms
        .iter()
        .all(|t| t.indices == first.indices && t.weight == first.weight));
    let vals: Vec<Expr> = terms.iter().map(|t| t.value).collect();
    Weighted {
        value: pool.add_all(&vals),
        indices: first.indices.clone(),
        weight: first.weight,
    }
}

/// `nabla_dir t`; the new index is prepended.
pub fn cov_diff(pool: &mut ExprPool, frame: &Frame, t: &Weighted, dir: Dir) -> Weighted {
    let x = *frame.field(dir);
    let d = x.apply(pool, t.value);
    let k = t.connection_factor();
    let value = if k == 0.0 || pool.is_zero(t.value) {
        d
    } else {
        let w = frame.omega_dir(dir);
        let c = pool.mul(w, t.value);
        let c = pool.scale_re(k, c);
        pool.add(d, c)
    };
    let mut indices = Vec::with_capacity(t.indices.len() + 1);
    indices.push(dir);
    indices.extend_from_slice(&t.indices);
    Weighted {
        value,
        indices,
        weight: t.weight,
    }
}

/// Iterated derivative; `dirs` are applied left to right, so
/// `cov_path(t, [a, b])` is `nabla_b nabla_a t`.
pub fn cov_path(pool: &mut ExprPool, frame: &Frame, t: &Weighted, dirs: &[Dir]) -> Weighted {
    let mut cur = t.clone();
    for &d in dirs {
        cur = cov_diff(pool, frame, &cur, d);
    }
    cur
}

/// Commutator pairs checked by [`commutator_residual`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pair {
    OneBar,
    OneZero,
    BarZero,
}

/// LHS - RHS of the commutation identity for `pair` on a scalar, density or
/// one-index tensor, given the scalar curvature `r` and torsion `A_11`.
///
/// * `(1, 1bar)`: `[nabla_1, nabla_1bar] t + i nabla_0 t = c R t` where `c`
///   is `(w - w')/3` for densities, `+1` for an upper `1` (stored as lower
///   `1bar`) and `-1` for a lower `1`.
/// * `(1, 0)`: `[nabla_1, nabla_0] t = A_11 nabla_1bar t + c (nabla^1 A_11) t`
///   with the same `c`; `(1bar, 0)` is its conjugate.
pub fn commutator_residual(
    pool: &mut ExprPool,
    frame: &Frame,
    r: Expr,
    t: &Weighted,
    pair: Pair,
) -> Result<Expr, CalculusError> {
    if t.indices.len() > 1 {
        return Err(CalculusError::UnsupportedRank(t.indices.len()));
    }
    let (a, b) = match pair {
        Pair::OneBar => (Dir::One, Dir::Bar),
        Pair::OneZero => (Dir::One, Dir::Zero),
        Pair::BarZero => (Dir::Bar, Dir::Zero),
    };
    let ab = cov_path(pool, frame, t, &[b, a]).value;
    let ba = cov_path(pool, frame, t, &[a, b]).value;
    let comm = pool.sub(ab, ba);
    let dens = (t.weight.0 - t.weight.1) as f64 / 3.0;
    // curvature weight of the single index: a lower 1bar behaves as an
    // upper 1 (sign +1), a lower 1 as sign -1
    let idx = t.indices.first().copied();
    let v = t.value;
    let a11 = frame.a11;
    let a11b = pool.mirror(a11);
    let rhs = match pair {
        Pair::OneBar => {
            // [1,1bar] t = -i nabla_0 t + c R t
            let d0 = cov_diff(pool, frame, t, Dir::Zero).value;
            let d0 = pool.scale(C64::new(0.0, -1.0), d0);
            let c = dens
                + match idx {
                    Some(Dir::Bar) => 1.0,
                    Some(Dir::One) => -1.0,
                    _ => 0.0,
                };
            let rt = pool.mul(r, v);
            let rt = pool.scale_re(c, rt);
            pool.add(d0, rt)
        }
        Pair::OneZero => {
            // [1,0] t = A_11 nabla_1bar t + c (nabla^1 A_11) t
            let d1b = cov_diff(pool, frame, t, Dir::Bar).value;
            let tor = pool.mul(a11, d1b);
            let div = divergence_a(pool, frame);
            let mut terms = alloc::vec![tor];
            let c = dens
                + match idx {
                    Some(Dir::Bar) => 1.0,
                    Some(Dir::One) => -1.0,
                    _ => 0.0,
                };
            if c != 0.0 {
                let x = pool.mul(div, v);
                terms.push(pool.scale_re(c, x));
            }
            pool.add_all(&terms)
        }
        Pair::BarZero => {
            let d1 = cov_diff(pool, frame, t, Dir::One).value;
            let tor = pool.mul(a11b, d1);
            let div = divergence_a(pool, frame);
            let divb = pool.mirror(div);
            let mut terms = alloc::vec![tor];
            let c = dens
                + match idx {
                    Some(Dir::Bar) => 1.0,
                    Some(Dir::One) => -1.0,
                    _ => 0.0,
                };
            if c != 0.0 {
                let x = pool.mul(divb, v);
                terms.push(pool.scale_re(-c, x));
            }
            pool.add_all(&terms)
        }
    };
    Ok(pool.sub(comm, rhs))
}

/// `nabla^1 A_11` (numerically `nabla_1bar A_11`).
pub fn divergence_a(pool: &mut ExprPool, frame: &Frame) -> Expr {
    let a = Weighted::new(frame.a11, &[Dir::One, Dir::One], (0, 0));
    cov_diff(pool, frame, &a, Dir::Bar).value
}
