use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::{EvalError, Expr, ExprPool, Op, C64};

/// Denominators smaller than this in modulus are treated as zero.
const DIV_THRESHOLD: f64 = 1e-300;
/// Allowed imaginary part (relative to `max(1, |re|)`) of a `Sqrt` argument.
const SQRT_IMAG_TOL: f64 = 1e-9;

/// Values for the four coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Binding {
    /// Physical point: `zb_j` is bound to `conj(z_j)`.
    Paired(C64, C64),
    /// `(z1, z2, zb1, zb2)` bound independently. `Sqrt` takes the principal
    /// branch without a domain check since the argument need not be real.
    Independent([C64; 4]),
}

impl Binding {
    fn values(&self) -> [C64; 4] {
        match *self {
            Binding::Paired(a, b) => [a, b, a.conj(), b.conj()],
            Binding::Independent(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Instr {
    op: Op,
    value: C64,
    start: u32,
    len: u32,
}

/// A set of expressions flattened into a straight-line program over the
/// union of their DAGs. Each shared node is computed once per point.
#[derive(Clone, Debug)]
pub struct Tape {
    instrs: Vec<Instr>,
    args: Vec<u32>,
    roots: Vec<u32>,
}

fn powi(b: C64, n: i32) -> C64 {
    let mut e = n.unsigned_abs();
    let mut base = b;
    let mut acc = C64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if n < 0 {
        acc.inv()
    } else {
        acc
    }
}

impl Tape {
    /// Number of instructions.
    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    /// Scratch buffer sized for this tape.
    pub fn scratch(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.instrs.len()]
    }

    /// Evaluates every root, writing them into `out` in root order.
    pub fn eval_into(
        &self,
        binding: Binding,
        scratch: &mut [C64],
        out: &mut [C64],
    ) -> Result<(), EvalError> {
        let vars = binding.values();
        let paired = matches!(binding, Binding::Paired(..));
        for (slot, ins) in self.instrs.iter().enumerate() {
            let a = &self.args[ins.start as usize..(ins.start + ins.len) as usize];
            let v = match ins.op {
                Op::Const => ins.value,
                Op::Var(x) => vars[x.slot()],
                Op::Add => {
                    let mut s = C64::new(0.0, 0.0);
                    for &k in a {
                        s += scratch[k as usize];
                    }
                    s
                }
                Op::Mul => {
                    let mut p = scratch[a[0] as usize];
                    for &k in &a[1..] {
                        p *= scratch[k as usize];
                    }
                    p
                }
                Op::Neg => -scratch[a[0] as usize],
                Op::Pow(n) => {
                    let b = scratch[a[0] as usize];
                    match n {
                        2 => b * b,
                        -1 => {
                            let d = b.norm_sqr();
                            if b.re.abs().max(b.im.abs()) < DIV_THRESHOLD {
                                return Err(EvalError::DivisionByZero(b.norm()));
                            }
                            C64::new(b.re / d, -b.im / d)
                        }
                        _ => {
                            if n < 0 && b.re.abs().max(b.im.abs()) < DIV_THRESHOLD {
                                return Err(EvalError::DivisionByZero(b.norm()));
                            }
                            powi(b, n)
                        }
                    }
                }
                Op::Sqrt => {
                    let b = scratch[a[0] as usize];
                    if paired {
                        let tol = SQRT_IMAG_TOL * b.re.abs().max(1.0);
                        if !(b.re > 0.0) || b.im.abs() > tol {
                            return Err(EvalError::SqrtDomain { re: b.re, im: b.im });
                        }
                        C64::new(libm::sqrt(b.re), 0.0)
                    } else {
                        b.sqrt()
                    }
                }
                Op::Conj => scratch[a[0] as usize].conj(),
                Op::Exp => scratch[a[0] as usize].exp(),
            };
            scratch[slot] = v;
        }
        for (o, &r) in out.iter_mut().zip(&self.roots) {
            *o = scratch[r as usize];
        }
        Ok(())
    }

    /// Allocating convenience wrapper around [`Tape::eval_into`].
    pub fn eval(&self, binding: Binding) -> Result<Vec<C64>, EvalError> {
        let mut scratch = self.scratch();
        let mut out = vec![C64::new(0.0, 0.0); self.roots.len()];
        self.eval_into(binding, &mut scratch, &mut out)?;
        Ok(out)
    }
}

impl ExprPool {
    /// Flattens the DAGs under `roots` into a [`Tape`].
    pub fn compile(&self, roots: &[Expr]) -> Tape {
        let order = self.reachable(roots);
        let mut slot_of: HashMap<Expr, u32> = HashMap::with_capacity(order.len());
        let mut instrs = Vec::with_capacity(order.len());
        let mut args = Vec::new();
        for (slot, &e) in order.iter().enumerate() {
            slot_of.insert(e, slot as u32);
            let start = args.len() as u32;
            for k in self.args(e) {
                args.push(slot_of[k]);
            }
            let n = &self.nodes[e.index()];
            instrs.push(Instr {
                op: n.op,
                value: n.value,
                start,
                len: n.len,
            });
        }
        let roots = roots.iter().map(|r| slot_of[r]).collect();
        Tape {
            instrs,
            args,
            roots,
        }
    }

    /// Evaluates at the point `(z1, z2)` with `zb_j = conj(z_j)`.
    pub fn eval(&self, e: Expr, z1: C64, z2: C64) -> Result<C64, EvalError> {
        Ok(self.compile(&[e]).eval(Binding::Paired(z1, z2))?[0])
    }

    /// Evaluates with all four coordinates bound independently.
    pub fn eval_independent(&self, e: Expr, vals: [C64; 4]) -> Result<C64, EvalError> {
        Ok(self.compile(&[e]).eval(Binding::Independent(vals))?[0])
    }
}


/// Number of points evaluated together by [`Tape::eval_lanes`].
pub const LANES: usize = 8;

impl Tape {
    /// Scratch buffer for [`Tape::eval_lanes`].
    pub fn lane_scratch(&self) -> Vec<[C64; LANES]> {
        vec![[C64::new(0.0, 0.0); LANES]; self.instrs.len()]
    }

    /// Evaluates up to [`LANES`] physical points at once; `out[r][l]` is
    /// root `r` at point `l`. Unused lanes repeat the last point.
    pub fn eval_lanes(
        &self,
        points: &[[C64; 2]],
        scratch: &mut [[C64; LANES]],
        out: &mut [[C64; LANES]],
    ) -> Result<(), EvalError> {
        assert!(!points.is_empty() && points.len() <= LANES);
        let mut vars = [[C64::new(0.0, 0.0); LANES]; 4];
        for l in 0..LANES {
            let p = points[l.min(points.len() - 1)];
            vars[0][l] = p[0];
            vars[1][l] = p[1];
            vars[2][l] = p[0].conj();
            vars[3][l] = p[1].conj();
        }
        let zero = C64::new(0.0, 0.0);
        for slot in 0..self.instrs.len() {
            let ins = self.instrs[slot];
            let a = &self.args[ins.start as usize..(ins.start + ins.len) as usize];
            let v: [C64; LANES] = match ins.op {
                Op::Const => [ins.value; LANES],
                Op::Var(x) => vars[x.slot()],
                Op::Add => {
                    let mut s = scratch[a[0] as usize];
                    for &k in &a[1..] {
                        let y = &scratch[k as usize];
                        for l in 0..LANES {
                            s[l] += y[l];
                        }
                    }
                    s
                }
                Op::Mul => {
                    let mut p = scratch[a[0] as usize];
                    for &k in &a[1..] {
                        let y = &scratch[k as usize];
                        for l in 0..LANES {
                            p[l] *= y[l];
                        }
                    }
                    p
                }
                Op::Neg => scratch[a[0] as usize].map(|x| -x),
                Op::Pow(n) => {
                    let b = scratch[a[0] as usize];
                    let mut r = [zero; LANES];
                    for l in 0..LANES {
                        let x = b[l];
                        r[l] = match n {
                            2 => x * x,
                            _ => {
                                if n < 0 && x.re.abs().max(x.im.abs()) < DIV_THRESHOLD {
                                    return Err(EvalError::DivisionByZero(x.norm()));
                                }
                                if n == -1 {
                                    let d = x.norm_sqr();
                                    C64::new(x.re / d, -x.im / d)
                                } else {
                                    powi(x, n)
                                }
                            }
                        };
                    }
                    r
                }
                Op::Sqrt => {
                    let b = scratch[a[0] as usize];
                    let mut r = [zero; LANES];
                    for l in 0..LANES {
                        let x = b[l];
                        let tol = SQRT_IMAG_TOL * x.re.abs().max(1.0);
                        if !(x.re > 0.0) || x.im.abs() > tol {
                            return Err(EvalError::SqrtDomain { re: x.re, im: x.im });
                        }
                        r[l] = C64::new(libm::sqrt(x.re), 0.0);
                    }
                    r
                }
                Op::Conj => scratch[a[0] as usize].map(|x| x.conj()),
                Op::Exp => scratch[a[0] as usize].map(|x| x.exp()),
            };
            scratch[slot] = v;
        }
        for (o, &r) in out.iter_mut().zip(&self.roots) {
            *o = scratch[r as usize];
        }
        Ok(())
    }

    /// Evaluates every root at every point, batching [`LANES`] points.
    /// Row `i` of the result holds the roots at `points[i]`.
    pub fn eval_points(&self, points: &[[C64; 2]]) -> Result<Vec<Vec<C64>>, EvalError> {
        let mut scratch = self.lane_scratch();
        let mut out = vec![[C64::new(0.0, 0.0); LANES]; self.roots.len()];
        let mut rows = Vec::with_capacity(points.len());
        for chunk in points.chunks(LANES) {
            self.eval_lanes(chunk, &mut scratch, &mut out)?;
            for l in 0..chunk.len() {
                rows.push(out.iter().map(|r| r[l]).collect());
            }
        }
        Ok(rows)
    }
}
