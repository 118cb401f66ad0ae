//! Parallel evaluation over points. Chunks are processed independently and
//! reassembled in order, so results do not depend on the thread count.

use cartanlab_core::expr::{EvalError, Tape};
use cartanlab_core::{Expr, ExprPool, C64};
use rayon::prelude::*;

const CHUNK: usize = 256;

/// Values of each root at each point, one row per point.
pub fn eval_rows(pool: &ExprPool, roots: &[Expr], points: &[[C64; 2]]) -> Result<Vec<Vec<C64>>, EvalError> {
    let tape = pool.compile(roots);
    map_rows(&tape, points, |r| r.to_vec())
}

/// Applies `f` to the row of root values at every point.
pub fn map_rows<T, F>(tape: &Tape, points: &[[C64; 2]], f: F) -> Result<Vec<T>, EvalError>
where
    T: Send,
    F: Fn(&[C64]) -> T + Sync,
{
    let chunks: Vec<Result<Vec<T>, EvalError>> = points
        .par_chunks(CHUNK)
        .map(|c| Ok(tape.eval_points(c)?.iter().map(|r| f(r)).collect()))
        .collect();
    let mut out = Vec::with_capacity(points.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Column `k` of a row table.
pub fn column(rows: &[Vec<C64>], k: usize) -> Vec<C64> {
    rows.iter().map(|r| r[k]).collect()
}

/// Largest modulus in column `k`.
pub fn max_abs(rows: &[Vec<C64>], k: usize) -> f64 {
    rows.iter().map(|r| r[k].norm()).fold(0.0, nan_max)
}

/// `max` that propagates NaN, so a NaN residual fails its check.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
