use alloc::vec::Vec;

use super::{Expr, ExprPool, Op, VarId, C64};

impl ExprPool {
    /// Wirtinger partial `∂e/∂v`, treating `z_j` and `zb_j` as independent.
    ///
    /// Results are memoized per `(node, variable)` for the lifetime of the
    /// pool, so repeated and nested differentiation shares work.
    pub fn wirtinger_diff(&mut self, e: Expr, v: VarId) -> Expr {
        if let Some(&d) = self.diff_cache.get(&(e, v)) {
            return d;
        }
        let order: Vec<Expr> = self
            .reachable(&[e])
            .into_iter()
            .filter(|x| !self.diff_cache.contains_key(&(*x, v)))
            .collect();
        for x in order {
            let d = self.diff_node(x, v);
            self.diff_cache.insert((x, v), d);
        }
        self.diff_cache[&(e, v)]
    }

    /// Derivative of one node; children are already in the cache.
    fn diff_node(&mut self, x: Expr, v: VarId) -> Expr {
        let op = self.op(x);
        let kids: Vec<Expr> = self.args(x).to_vec();
        let d = |p: &Self, k: Expr| p.diff_cache[&(k, v)];
        match op {
            Op::Const => self.zero(),
            Op::Var(w) => {
                if w == v {
                    self.one()
                } else {
                    self.zero()
                }
            }
            Op::Add => {
                let ds: Vec<Expr> = kids.iter().map(|&k| d(self, k)).collect();
                self.add_all(&ds)
            }
            Op::Mul => {
                let mut terms = Vec::with_capacity(kids.len());
                for i in 0..kids.len() {
                    let di = d(self, kids[i]);
                    if self.is_zero(di) {
                        continue;
                    }
                    let mut fs: Vec<Expr> = Vec::with_capacity(kids.len());
                    fs.extend(kids.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &k)| k));
                    fs.push(di);
                    terms.push(self.mul_all(&fs));
                }
                self.add_all(&terms)
            }
            Op::Neg => {
                let di = d(self, kids[0]);
                self.neg(di)
            }
            Op::Pow(n) => {
                let di = d(self, kids[0]);
                if self.is_zero(di) {
                    return self.zero();
                }
                let p = self.pow_unchecked(kids[0], n - 1);
                let k = self.real(n as f64);
                self.mul_all(&[k, p, di])
            }
            Op::Sqrt => {
                let di = d(self, kids[0]);
                if self.is_zero(di) {
                    return self.zero();
                }
                let half = self.constant(C64::new(0.5, 0.0));
                let r = self.pow_unchecked(x, -1);
                self.mul_all(&[half, di, r])
            }
            Op::Exp => {
                let di = d(self, kids[0]);
                self.mul(x, di)
            }
            Op::Conj => {
                let inner = self.wirtinger_diff(kids[0], v.conj());
                self.mirror(inner)
            }
        }
    }
}
