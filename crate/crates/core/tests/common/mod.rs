#![allow(dead_code)]

use cartanlab_core::automorphism::HoloField;
use cartanlab_core::expr::parse;
use cartanlab_core::geometry::{eval_at_points, sample_boundary, Frame, Hypersurface, RaySolver};
use cartanlab_core::invariants::Invariants;
use cartanlab_core::presets::FIELD_BATTERY;
use cartanlab_core::{Expr, ExprPool, C64};

pub struct Surface {
    pub pool: ExprPool,
    pub h: Hypersurface,
    pub frame: Frame,
    pub inv: Invariants,
    pub solver: RaySolver,
}

impl Surface {
    pub fn new(src: &str) -> Self {
        let mut pool = ExprPool::new();
        let h = Hypersurface::parse(&mut pool, src, src).unwrap();
        let frame = Frame::build(&mut pool, &h).unwrap();
        let inv = Invariants::build(&mut pool, &frame);
        let solver = RaySolver::new(&mut pool, &h).unwrap();
        Surface {
            pool,
            h,
            frame,
            inv,
            solver,
        }
    }

    pub fn points(&self, seed: u64, n: usize) -> Vec<[C64; 2]> {
        sample_boundary(&self.solver, seed, n).unwrap()
    }

    /// Values of `roots` at `points`, one row per point.
    pub fn eval(&self, roots: &[Expr], points: &[[C64; 2]]) -> Vec<Vec<C64>> {
        eval_at_points(&self.pool, roots, points).unwrap()
    }

    /// Max modulus of each root over the points.
    pub fn max_abs(&self, roots: &[Expr], points: &[[C64; 2]]) -> Vec<f64> {
        let rows = self.eval(roots, points);
        (0..roots.len())
            .map(|k| rows.iter().map(|r| r[k].norm()).fold(0.0, f64::max))
            .collect()
    }

    pub fn expr(&mut self, src: &str) -> Expr {
        parse(&mut self.pool, src).unwrap()
    }

    pub fn battery(&mut self) -> Vec<(&'static str, HoloField)> {
        FIELD_BATTERY
            .iter()
            .map(|&(name, a1, a2)| {
                let a1 = parse(&mut self.pool, a1).unwrap();
                let a2 = parse(&mut self.pool, a2).unwrap();
                (name, HoloField::new(&mut self.pool, a1, a2).unwrap())
            })
            .collect()
    }
}

pub fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}
