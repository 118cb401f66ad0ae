use core::fmt;

use super::{Expr, ExprPool, Op};

/// Infix rendering of an expression; output uses the parser's grammar
/// except for `exp(..)`.
pub struct Displayed<'a> {
    pub(super) pool: &'a ExprPool,
    pub(super) root: Expr,
}

impl Displayed<'_> {
    fn write(&self, f: &mut fmt::Formatter<'_>, e: Expr) -> fmt::Result {
        let p = self.pool;
        let args = p.args(e);
        match p.op(e) {
            Op::Const => {
                let c = p.const_value(e).unwrap_or_default();
                if c.im == 0.0 {
                    write!(f, "({})", c.re)
                } else {
                    write!(f, "({} + {}*i)", c.re, c.im)
                }
            }
            Op::Var(v) => f.write_str(v.name()),
            Op::Add => {
                f.write_str("(")?;
                for (k, &a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" + ")?;
                    }
                    self.write(f, a)?;
                }
                f.write_str(")")
            }
            Op::Mul => {
                f.write_str("(")?;
                for (k, &a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str("*")?;
                    }
                    self.write(f, a)?;
                }
                f.write_str(")")
            }
            Op::Neg => {
                // '-' binds tighter than '^' in the grammar
                f.write_str("(-(")?;
                self.write(f, args[0])?;
                f.write_str("))")
            }
            Op::Pow(n) if n < 0 => {
                f.write_str("(1/")?;
                self.write(f, args[0])?;
                write!(f, "^{})", -n)
            }
            Op::Pow(n) => {
                self.write(f, args[0])?;
                write!(f, "^{}", n)
            }
            Op::Sqrt => {
                f.write_str("sqrt(")?;
                self.write(f, args[0])?;
                f.write_str(")")
            }
            Op::Conj => {
                f.write_str("conj(")?;
                self.write(f, args[0])?;
                f.write_str(")")
            }
            Op::Exp => {
                f.write_str("exp(")?;
                self.write(f, args[0])?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Displayed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.root)
    }
}
