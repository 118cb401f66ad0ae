//! Hash-consed symbolic expressions over the Wirtinger coordinates
//! `z1, z2, zb1, zb2`.
//!
//! Every node lives in an [`ExprPool`] and is addressed by a copyable
//! [`Expr`] handle. Constructors canonicalize as they intern: sums and
//! products are flattened and sorted, numeric coefficients and integer
//! powers are collected, constants are folded. Structurally equal trees
//! therefore share one handle, and mixed partial derivatives taken in
//! different orders usually land on the same node.
//!
//! Division is stored as a product with a negative integer power.

mod diff;
mod display;
mod eval;
mod parse;

use alloc::vec::Vec;
use core::hash::{BuildHasher, Hash, Hasher};

use hashbrown::{DefaultHashBuilder, HashMap, HashTable};
use num_complex::Complex64;

pub use self::display::Displayed;
pub use self::eval::{Binding, Tape, LANES};
pub use self::parse::{parse, ParseError};

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Handle to an interned node. Only meaningful together with the pool that
/// produced it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Expr(u32);

impl Expr {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ambient coordinate. `Zb1`/`Zb2` are the conjugates of `Z1`/`Z2`; they are
/// independent for differentiation and tied by conjugation for evaluation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum VarId {
    Z1,
    Z2,
    Zb1,
    Zb2,
}

impl VarId {
    pub const ALL: [VarId; 4] = [VarId::Z1, VarId::Z2, VarId::Zb1, VarId::Zb2];

    pub fn conj(self) -> VarId {
        match self {
            VarId::Z1 => VarId::Zb1,
            VarId::Z2 => VarId::Zb2,
            VarId::Zb1 => VarId::Z1,
            VarId::Zb2 => VarId::Z2,
        }
    }

    /// Position in the `(z1, z2, zb1, zb2)` ordering.
    pub fn slot(self) -> usize {
        self as usize
    }

    pub fn is_holomorphic(self) -> bool {
        matches!(self, VarId::Z1 | VarId::Z2)
    }

    pub fn name(self) -> &'static str {
        match self {
            VarId::Z1 => "z1",
            VarId::Z2 => "z2",
            VarId::Zb1 => "zb1",
            VarId::Zb2 => "zb2",
        }
    }
}

/// Canonical node kinds as stored in the pool.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Op {
    Const,
    Var(VarId),
    Add,
    Mul,
    Neg,
    Pow(i32),
    Sqrt,
    Conj,
    Exp,
}

/// Requested node kind for [`ExprPool::construct`]. Unlike [`Op`] this
/// includes `Div`, which is lowered to a product with a reciprocal.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Kind {
    Const(C64),
    Var(VarId),
    Add,
    Mul,
    Neg,
    Div,
    IntPow(i32),
    Sqrt,
    Conj,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("division by a syntactic zero")]
    ZeroDenominator,
    #[error("{kind:?} expects {expected} children, got {got}")]
    Arity {
        kind: Kind,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero (|denominator| = {0:e})")]
    DivisionByZero(f64),
    #[error("square root of an argument that is not positive real: {re} + {im}i")]
    SqrtDomain { re: f64, im: f64 },
}

#[derive(Clone, Copy, Debug)]
struct Node {
    op: Op,
    value: C64,
    start: u32,
    len: u32,
    hash: u64,
}

fn const_bits(c: C64) -> (u64, u64) {
    // +0.0 and -0.0 intern to the same node
    let re = if c.re == 0.0 { 0.0 } else { c.re };
    let im = if c.im == 0.0 { 0.0 } else { c.im };
    (re.to_bits(), im.to_bits())
}

/// Arena + interning table for expressions.
pub struct ExprPool {
    nodes: Vec<Node>,
    args: Vec<Expr>,
    table: HashTable<u32>,
    hasher: DefaultHashBuilder,
    diff_cache: HashMap<(Expr, VarId), Expr>,
    mirror_cache: HashMap<Expr, Expr>,
    zero: Expr,
    one: Expr,
}

impl Default for ExprPool {
    fn default() -> Self {
        Self::new()
    }
}

impl ExprPool {
    pub fn new() -> Self {
        let mut pool = ExprPool {
            nodes: Vec::new(),
            args: Vec::new(),
            table: HashTable::new(),
            hasher: DefaultHashBuilder::default(),
            diff_cache: HashMap::new(),
            mirror_cache: HashMap::new(),
            zero: Expr(0),
            one: Expr(0),
        };
        pool.zero = pool.intern(Op::Const, C64::new(0.0, 0.0), &[]);
        pool.one = pool.intern(Op::Const, C64::new(1.0, 0.0), &[]);
        pool
    }

    /// Number of interned nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn hash_key(&self, op: Op, value: C64, args: &[Expr]) -> u64 {
        let mut h = self.hasher.build_hasher();
        op.hash(&mut h);
        if op == Op::Const {
            const_bits(value).hash(&mut h);
        }
        args.hash(&mut h);
        h.finish()
    }

    fn intern(&mut self, op: Op, value: C64, args: &[Expr]) -> Expr {
        let hash = self.hash_key(op, value, args);
        let nodes = &self.nodes;
        let arena = &self.args;
        let bits = const_bits(value);
        let found = self.table.find(hash, |&id| {
            let n = &nodes[id as usize];
            n.op == op
                && (op != Op::Const || const_bits(n.value) == bits)
                && &arena[n.start as usize..(n.start + n.len) as usize] == args
        });
        if let Some(&id) = found {
            return Expr(id);
        }
        let id = u32::try_from(self.nodes.len()).expect("expression pool exhausted");
        let start = self.args.len() as u32;
        self.args.extend_from_slice(args);
        self.nodes.push(Node {
            op,
            value,
            start,
            len: args.len() as u32,
            hash,
        });
        let nodes = &self.nodes;
        self.table
            .insert_unique(hash, id, |&k| nodes[k as usize].hash);
        Expr(id)
    }

    // ---- inspection -------------------------------------------------------

    pub fn op(&self, e: Expr) -> Op {
        self.nodes[e.index()].op
    }

    pub fn args(&self, e: Expr) -> &[Expr] {
        let n = &self.nodes[e.index()];
        &self.args[n.start as usize..(n.start + n.len) as usize]
    }

    pub fn const_value(&self, e: Expr) -> Option<C64> {
        let n = &self.nodes[e.index()];
        (n.op == Op::Const).then_some(n.value)
    }

    pub fn is_zero(&self, e: Expr) -> bool {
        e == self.zero
    }

    pub fn is_one(&self, e: Expr) -> bool {
        e == self.one
    }

    /// Number of distinct nodes reachable from `roots`.
    pub fn dag_size(&self, roots: &[Expr]) -> usize {
        self.reachable(roots).len()
    }

    /// Reachable node ids in ascending (= topological) order.
    pub(crate) fn reachable(&self, roots: &[Expr]) -> Vec<Expr> {
        let mut seen = hashbrown::HashSet::new();
        let mut stack: Vec<Expr> = roots.to_vec();
        let mut out = Vec::new();
        while let Some(e) = stack.pop() {
            if !seen.insert(e) {
                continue;
            }
            out.push(e);
            stack.extend_from_slice(self.args(e));
        }
        out.sort_unstable();
        out
    }

    // ---- leaves -----------------------------------------------------------

    pub fn zero(&self) -> Expr {
        self.zero
    }

    pub fn one(&self) -> Expr {
        self.one
    }

    pub fn constant(&mut self, c: C64) -> Expr {
        self.intern(Op::Const, c, &[])
    }

    pub fn real(&mut self, x: f64) -> Expr {
        self.constant(C64::new(x, 0.0))
    }

    pub fn imag_unit(&mut self) -> Expr {
        self.constant(C64::new(0.0, 1.0))
    }

    pub fn var(&mut self, v: VarId) -> Expr {
        self.intern(Op::Var(v), C64::new(0.0, 0.0), &[])
    }

    // ---- generic constructor ---------------------------------------------

    /// Builds a node of the requested kind, applying the same
    /// simplifications as the dedicated constructors.
    pub fn construct(&mut self, kind: Kind, children: &[Expr]) -> Result<Expr, ExprError> {
        let arity = |expected: usize| -> Result<(), ExprError> {
            if children.len() == expected {
                Ok(())
            } else {
                Err(ExprError::Arity {
                    kind,
                    expected,
                    got: children.len(),
                })
            }
        };
        match kind {
            Kind::Const(c) => {
                arity(0)?;
                Ok(self.constant(c))
            }
            Kind::Var(v) => {
                arity(0)?;
                Ok(self.var(v))
            }
            Kind::Add => Ok(self.add_all(children)),
            Kind::Mul => Ok(self.mul_all(children)),
            Kind::Neg => {
                arity(1)?;
                Ok(self.neg(children[0]))
            }
            Kind::Div => {
                arity(2)?;
                self.div(children[0], children[1])
            }
            Kind::IntPow(n) => {
                arity(1)?;
                self.pow(children[0], n)
            }
            Kind::Sqrt => {
                arity(1)?;
                Ok(self.sqrt(children[0]))
            }
            Kind::Conj => {
                arity(1)?;
                Ok(self.conj(children[0]))
            }
            Kind::Exp => {
                arity(1)?;
                Ok(self.exp(children[0]))
            }
        }
    }

    // ---- sums -------------------------------------------------------------

    pub fn add(&mut self, a: Expr, b: Expr) -> Expr {
        self.add_all(&[a, b])
    }

    pub fn sub(&mut self, a: Expr, b: Expr) -> Expr {
        let nb = self.neg(b);
        self.add_all(&[a, nb])
    }

    /// Splits a canonical term into numeric coefficient and base; a `None`
    /// base stands for the constant 1.
    fn split_term(&mut self, e: Expr) -> (C64, Option<Expr>) {
        let n = self.nodes[e.index()];
        match n.op {
            Op::Const => (n.value, None),
            Op::Neg => (C64::new(-1.0, 0.0), Some(self.args[n.start as usize])),
            Op::Mul => {
                let first = self.args[n.start as usize];
                match self.const_value(first) {
                    Some(c) => {
                        let rest: Vec<Expr> =
                            self.args[n.start as usize + 1..(n.start + n.len) as usize].to_vec();
                        let base = if rest.len() == 1 {
                            rest[0]
                        } else {
                            self.intern(Op::Mul, C64::new(0.0, 0.0), &rest)
                        };
                        (c, Some(base))
                    }
                    None => (C64::new(1.0, 0.0), Some(e)),
                }
            }
            _ => (C64::new(1.0, 0.0), Some(e)),
        }
    }

    /// `c * base` for a base that carries no numeric coefficient.
    fn scale_base(&mut self, c: C64, base: Option<Expr>) -> Expr {
        let Some(base) = base else {
            return self.constant(c);
        };
        if c == C64::new(0.0, 0.0) {
            return self.zero;
        }
        if c == C64::new(1.0, 0.0) {
            return base;
        }
        if c == C64::new(-1.0, 0.0) {
            return self.intern(Op::Neg, C64::new(0.0, 0.0), &[base]);
        }
        let k = self.constant(c);
        let mut v = Vec::with_capacity(4);
        v.push(k);
        if self.op(base) == Op::Mul {
            v.extend_from_slice(self.args(base));
        } else {
            v.push(base);
        }
        self.intern(Op::Mul, C64::new(0.0, 0.0), &v)
    }

    /// Multiplies by a numeric constant.
    pub fn scale(&mut self, c: C64, e: Expr) -> Expr {
        let (k, base) = self.split_term(e);
        self.scale_base(c * k, base)
    }

    pub fn scale_re(&mut self, x: f64, e: Expr) -> Expr {
        self.scale(C64::new(x, 0.0), e)
    }

    pub fn add_all(&mut self, terms: &[Expr]) -> Expr {
        let mut constant = C64::new(0.0, 0.0);
        let mut acc: Vec<(Expr, C64)> = Vec::with_capacity(terms.len());
        let mut stack: Vec<Expr> = terms.to_vec();
        while let Some(t) = stack.pop() {
            if self.op(t) == Op::Add {
                stack.extend_from_slice(self.args(t));
                continue;
            }
            match self.split_term(t) {
                (c, None) => constant += c,
                (c, Some(b)) => acc.push((b, c)),
            }
        }
        acc.sort_unstable_by_key(|&(b, _)| b);
        let mut out: Vec<Expr> = Vec::with_capacity(acc.len() + 1);
        let mut i = 0;
        while i < acc.len() {
            let base = acc[i].0;
            let mut c = acc[i].1;
            let mut j = i + 1;
            while j < acc.len() && acc[j].0 == base {
                c += acc[j].1;
                j += 1;
            }
            if c != C64::new(0.0, 0.0) {
                let t = self.scale_base(c, Some(base));
                out.push(t);
            }
            i = j;
        }
        if constant != C64::new(0.0, 0.0) {
            let k = self.constant(constant);
            out.push(k);
        }
        match out.len() {
            0 => self.zero,
            1 => out[0],
            _ => {
                out.sort_unstable();
                self.intern(Op::Add, C64::new(0.0, 0.0), &out)
            }
        }
    }

    // ---- products ---------------------------------------------------------

    pub fn mul(&mut self, a: Expr, b: Expr) -> Expr {
        self.mul_all(&[a, b])
    }

    pub fn neg(&mut self, e: Expr) -> Expr {
        self.scale(C64::new(-1.0, 0.0), e)
    }

    pub fn mul_all(&mut self, factors: &[Expr]) -> Expr {
        let mut coef = C64::new(1.0, 0.0);
        let mut powers: Vec<(Expr, i32)> = Vec::with_capacity(factors.len());
        let mut exps: Vec<Expr> = Vec::new();
        let mut stack: Vec<(Expr, i32)> = factors.iter().map(|&f| (f, 1)).collect();
        while let Some((f, k)) = stack.pop() {
            let n = self.nodes[f.index()];
            match n.op {
                Op::Const => coef *= n.value.powi(k),
                Op::Neg => {
                    if k % 2 != 0 {
                        coef = -coef;
                    }
                    stack.push((self.args[n.start as usize], k));
                }
                Op::Mul => {
                    // nested products stay atomic (apart from their numeric
                    // coefficient) so that shared sub-products survive
                    // repeated differentiation
                    let all = &self.args[n.start as usize..(n.start + n.len) as usize];
                    match self.nodes[all[0].index()].op {
                        Op::Const => {
                            coef *= self.nodes[all[0].index()].value.powi(k);
                            if all.len() == 2 {
                                stack.push((all[1], k));
                            } else {
                                let rest: Vec<Expr> = all[1..].to_vec();
                                let base = self.intern(Op::Mul, C64::new(0.0, 0.0), &rest);
                                powers.push((base, k));
                            }
                        }
                        _ => powers.push((f, k)),
                    }
                }
                Op::Pow(m) => {
                    let base = self.args[n.start as usize];
                    if self.op(base) == Op::Sqrt && (m * k) % 2 == 0 {
                        let inner = self.args(base)[0];
                        stack.push((inner, m * k / 2));
                    } else {
                        powers.push((base, m * k));
                    }
                }
                Op::Exp => {
                    let a = self.args[n.start as usize];
                    let a = if k == 1 { a } else { self.scale_re(k as f64, a) };
                    exps.push(a);
                }
                _ => powers.push((f, k)),
            }
        }
        if coef == C64::new(0.0, 0.0) {
            return self.zero;
        }
        if !exps.is_empty() {
            let s = self.add_all(&exps);
            let e = self.exp(s);
            match self.const_value(e) {
                Some(v) => coef *= v,
                None => powers.push((e, 1)),
            }
        }
        powers.sort_unstable_by_key(|&(b, _)| b);
        let mut merged: Vec<(Expr, i32)> = Vec::with_capacity(powers.len());
        for (b, m) in powers {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += m,
                _ => merged.push((b, m)),
            }
        }
        merged.retain(|&(_, m)| m != 0);
        if let Some(pos) = merged
            .iter()
            .position(|&(b, m)| m % 2 == 0 && self.op(b) == Op::Sqrt)
        {
            // sqrt(x)^(2k) = x^k, then renormalize the whole product
            let (b, m) = merged[pos];
            let inner = self.args(b)[0];
            let mut all: Vec<Expr> = Vec::with_capacity(merged.len());
            all.push(self.pow_unchecked(inner, m / 2));
            for (k, &(b, m)) in merged.iter().enumerate() {
                if k != pos {
                    all.push(self.pow_unchecked(b, m));
                }
            }
            let prod = self.mul_all(&all);
            return self.scale(coef, prod);
        }
        let mut out: Vec<Expr> = Vec::with_capacity(merged.len());
        for (base, m) in merged {
            let f = if m == 1 {
                base
            } else {
                self.intern(Op::Pow(m), C64::new(0.0, 0.0), &[base])
            };
            out.push(f);
        }
        if out.is_empty() {
            return self.constant(coef);
        }
        out.sort_unstable();
        let base = self.build_mul(&out);
        self.scale_base(coef, Some(base))
    }

    fn build_mul(&mut self, sorted: &[Expr]) -> Expr {
        if sorted.len() == 1 {
            sorted[0]
        } else {
            self.intern(Op::Mul, C64::new(0.0, 0.0), sorted)
        }
    }

    pub fn div(&mut self, a: Expr, b: Expr) -> Result<Expr, ExprError> {
        let r = self.recip(b)?;
        Ok(self.mul(a, r))
    }

    pub fn recip(&mut self, b: Expr) -> Result<Expr, ExprError> {
        self.pow(b, -1)
    }

    /// Integer power. A negative power of a syntactic zero is rejected.
    pub fn pow(&mut self, b: Expr, n: i32) -> Result<Expr, ExprError> {
        if n < 0 && self.is_zero(b) {
            return Err(ExprError::ZeroDenominator);
        }
        Ok(self.pow_unchecked(b, n))
    }

    fn pow_unchecked(&mut self, b: Expr, n: i32) -> Expr {
        if n == 0 {
            return self.one;
        }
        if n == 1 {
            return b;
        }
        let node = self.nodes[b.index()];
        match node.op {
            Op::Const => self.constant(node.value.powi(n)),
            Op::Pow(m) => {
                let base = self.args[node.start as usize];
                self.pow_unchecked(base, m * n)
            }
            Op::Sqrt if n % 2 == 0 => {
                let inner = self.args[node.start as usize];
                self.pow_unchecked(inner, n / 2)
            }
            Op::Mul | Op::Neg | Op::Exp => self.mul_all_powered(b, n),
            _ => self.intern(Op::Pow(n), C64::new(0.0, 0.0), &[b]),
        }
    }

    fn mul_all_powered(&mut self, b: Expr, n: i32) -> Expr {
        // mul_all understands (factor, multiplicity) through Pow nodes only,
        // so expand products factor by factor
        let node = self.nodes[b.index()];
        match node.op {
            Op::Neg => {
                let inner = self.args[node.start as usize];
                let p = self.pow_unchecked(inner, n);
                if n % 2 == 0 {
                    p
                } else {
                    self.neg(p)
                }
            }
            Op::Exp => {
                let a = self.args[node.start as usize];
                let s = self.scale_re(n as f64, a);
                self.exp(s)
            }
            _ => {
                let fs: Vec<Expr> = self.args(b).to_vec();
                let ps: Vec<Expr> = fs.iter().map(|&f| self.pow_unchecked(f, n)).collect();
                self.mul_all(&ps)
            }
        }
    }

    // ---- unary ------------------------------------------------------------

    pub fn sqrt(&mut self, e: Expr) -> Expr {
        if let Some(c) = self.const_value(e) {
            if c.im == 0.0 && c.re >= 0.0 {
                return self.real(libm::sqrt(c.re));
            }
        }
        self.intern(Op::Sqrt, C64::new(0.0, 0.0), &[e])
    }

    pub fn exp(&mut self, e: Expr) -> Expr {
        if let Some(c) = self.const_value(e) {
            return self.constant(c.exp());
        }
        self.intern(Op::Exp, C64::new(0.0, 0.0), &[e])
    }

    /// Conjugation node. Folds constants, swaps variables and cancels a
    /// double conjugation; otherwise the node is kept as written.
    pub fn conj(&mut self, e: Expr) -> Expr {
        let n = self.nodes[e.index()];
        match n.op {
            Op::Const => self.constant(n.value.conj()),
            Op::Var(v) => self.var(v.conj()),
            Op::Conj => self.args[n.start as usize],
            _ => self.intern(Op::Conj, C64::new(0.0, 0.0), &[e]),
        }
    }

    /// Structural conjugate: pushes conjugation down to the leaves so the
    /// result contains no `Conj` nodes that `e` did not already hide.
    pub fn mirror(&mut self, e: Expr) -> Expr {
        if let Some(&m) = self.mirror_cache.get(&e) {
            return m;
        }
        let order: Vec<Expr> = self
            .reachable(&[e])
            .into_iter()
            .filter(|x| !self.mirror_cache.contains_key(x))
            .collect();
        for x in order {
            let n = self.nodes[x.index()];
            let kids: Vec<Expr> = self.args(x).iter().map(|k| self.mirror_cache[k]).collect();
            let m = match n.op {
                Op::Const => self.constant(n.value.conj()),
                Op::Var(v) => self.var(v.conj()),
                Op::Conj => self.args[n.start as usize],
                Op::Add => self.add_all(&kids),
                Op::Mul => self.mul_all(&kids),
                Op::Neg => self.neg(kids[0]),
                Op::Pow(k) => self.pow_unchecked(kids[0], k),
                Op::Sqrt => self.sqrt(kids[0]),
                Op::Exp => self.exp(kids[0]),
            };
            self.mirror_cache.insert(x, m);
        }
        self.mirror_cache[&e]
    }

    /// Real part as an expression: `(e + conj e) / 2`.
    pub fn re(&mut self, e: Expr) -> Expr {
        let m = self.mirror(e);
        let s = self.add(e, m);
        self.scale_re(0.5, s)
    }

    /// Imaginary part as an expression: `(e - conj e) / 2i`.
    pub fn im(&mut self, e: Expr) -> Expr {
        let m = self.mirror(e);
        let s = self.sub(e, m);
        self.scale(C64::new(0.0, -0.5), s)
    }

    /// Convenience: `|z1|^2 + |z2|^2` style sums of `z_j * zb_j`.
    pub fn norm_sq(&mut self, j: usize) -> Expr {
        let (a, b) = if j == 0 {
            (VarId::Z1, VarId::Zb1)
        } else {
            (VarId::Z2, VarId::Zb2)
        };
        let a = self.var(a);
        let b = self.var(b);
        self.mul(a, b)
    }

    pub fn display(&self, e: Expr) -> Displayed<'_> {
        Displayed { pool: self, root: e }
    }
}
