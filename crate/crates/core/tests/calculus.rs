mod common;

use cartanlab_core::calculus::{commutator_residual, cov_diff, cov_path, divergence_a, CalculusError, Pair, Weighted};
use cartanlab_core::geometry::Dir;
use cartanlab_core::invariants::{ricci_curvature, structure_crosscheck};
use cartanlab_core::presets::{ELLIPSOID, REAL_ELLIPSOID, SPHERE};
use cartanlab_core::Expr;
use common::{max, Surface};

/// Test functions standing in for tensor components.
const BATTERY: [&str; 5] = [
    "z1 + zb2^2 + 0.3*z1*zb1",
    "z2^2*zb1^2 - 0.7*i*zb2*z1",
    "zb1^3 - 2*i*z2",
    "1/(2 + z1*zb1)",
    "z1*z2*zb1 + 0.5*zb2",
];

/// Index word and weight of every commuted object.
fn kinds() -> Vec<(Vec<Dir>, (i32, i32))> {
    vec![
        (vec![], (0, 0)),
        (vec![Dir::Bar], (1, 1)),
        (vec![Dir::One], (0, 0)),
        (vec![], (2, -1)),
        (vec![], (1, 0)),
        (vec![Dir::Bar], (2, 1)),
    ]
}

fn residuals(s: &mut Surface) -> Vec<Expr> {
    let mut out = Vec::new();
    let r = s.inv.r.value;
    for src in BATTERY {
        let v = s.expr(src);
        for (idx, w) in kinds() {
            let t = Weighted::new(v, &idx, w);
            for p in [Pair::OneBar, Pair::OneZero, Pair::BarZero] {
                out.push(commutator_residual(&mut s.pool, &s.frame, r, &t, p).unwrap());
            }
        }
    }
    out
}

#[test]
fn commutators_vanish_on_three_surfaces() {
    for (src, n) in [(SPHERE, 500), (ELLIPSOID, 500), (REAL_ELLIPSOID, 100)] {
        let mut s = Surface::new(src);
        let res = residuals(&mut s);
        let pts = s.points(21, n);
        let m = s.max_abs(&res, &pts);
        assert!(max(&m) < 1e-8, "{src}: {:?}", m);
    }
}

#[test]
fn vector_commutator_torsion_term_matters() {
    // drop the divergence term from [1bar, 0] on an upper-1 vector: the
    // residual must become visible on a surface with torsion
    let mut s = Surface::new(REAL_ELLIPSOID);
    let v = s.expr(BATTERY[0]);
    let t = Weighted::new(v, &[Dir::Bar], (1, 1));
    let res = commutator_residual(&mut s.pool, &s.frame, s.inv.r.value, &t, Pair::BarZero).unwrap();
    let div = divergence_a(&mut s.pool, &s.frame);
    let divb = s.pool.mirror(div);
    let term = s.pool.mul(divb, v);
    let wrong = s.pool.sub(res, term);
    let pts = s.points(22, 50);
    let m = s.max_abs(&[res, term, wrong], &pts);
    assert!(m[0] < 1e-8);
    assert!(m[1] > 1e-3 && m[2] > 1e-3, "{:?}", m);
}

#[test]
fn ricci_identity_recovers_scalar_curvature() {
    for src in [SPHERE, ELLIPSOID, REAL_ELLIPSOID] {
        let mut s = Surface::new(src);
        let v = s.expr("2 + z1 + 0.5*zb2");
        let rr = ricci_curvature(&mut s.pool, &s.frame, v);
        let d = s.pool.sub(rr, s.inv.r.value);
        let cross = structure_crosscheck(&mut s.pool, &s.frame);
        let pts = s.points(23, 200);
        let m = s.max_abs(&[d, cross], &pts);
        assert!(m[0] < 1e-8 && m[1] < 1e-8, "{src}: {:?}", m);
    }
}

#[test]
fn sphere_scalar_curvature_is_constant() {
    let s = Surface::new(SPHERE);
    let pts = s.points(24, 200);
    let rows = s.eval(&[s.inv.r.value], &pts);
    let r0 = rows[0][0];
    assert!(r0.re > 0.0 && r0.im.abs() < 1e-12);
    for r in rows {
        assert!((r[0] - r0).norm() < 1e-10 * r0.norm());
    }
}

#[test]
fn zero_direction_is_the_reeb_field_on_scalars() {
    let mut s = Surface::new(REAL_ELLIPSOID);
    let v = s.expr(BATTERY[1]);
    let t = Weighted::scalar(v, (0, 0));
    let d0 = cov_diff(&mut s.pool, &s.frame, &t, Dir::Zero);
    assert_eq!(d0.indices, vec![Dir::Zero]);
    let tv = s.frame.t.apply(&mut s.pool, v);
    let diff = s.pool.sub(d0.value, tv);
    let pts = s.points(25, 50);
    assert!(s.max_abs(&[diff], &pts)[0] < 1e-13);

    // cov_path applies left to right and prepends indices
    let p = cov_path(&mut s.pool, &s.frame, &t, &[Dir::One, Dir::Bar]);
    assert_eq!(p.indices, vec![Dir::Bar, Dir::One]);
}

#[test]
fn contraction_and_rank_errors() {
    let mut s = Surface::new(SPHERE);
    let v = s.expr("z1");
    let t = Weighted::new(v, &[Dir::One, Dir::Bar, Dir::Zero], (0, 0));
    let c = t.contract(0, 1).unwrap();
    assert_eq!(c.indices, vec![Dir::Zero]);
    assert_eq!(c.weight, (-1, -1));
    assert_eq!(t.contract(0, 2), Err(CalculusError::BadContraction(0, 2)));
    assert_eq!(t.contract(1, 1), Err(CalculusError::BadContraction(1, 1)));
    let z = t.trivialize_zero(2);
    assert_eq!(z.indices, vec![Dir::One, Dir::Bar]);
    assert_eq!(z.weight, (-1, -1));

    let two = Weighted::new(v, &[Dir::One, Dir::One], (0, 0));
    let r = s.inv.r.value;
    assert_eq!(
        commutator_residual(&mut s.pool, &s.frame, r, &two, Pair::OneBar),
        Err(CalculusError::UnsupportedRank(2))
    );
}

#[test]
fn conjugation_swaps_weights_and_indices() {
    let mut s = Surface::new(SPHERE);
    let v = s.expr("z1*zb2");
    let t = Weighted::new(v, &[Dir::One, Dir::Zero], (2, -1));
    let c = t.conj(&mut s.pool);
    assert_eq!(c.indices, vec![Dir::Bar, Dir::Zero]);
    assert_eq!(c.weight, (-1, 2));
    assert_eq!(t.connection_factor(), 0.0);
    assert_eq!(c.connection_factor(), 0.0);
    let u = Weighted::new(v, &[Dir::Bar], (1, 1));
    assert_eq!(u.connection_factor(), 1.0);
}
