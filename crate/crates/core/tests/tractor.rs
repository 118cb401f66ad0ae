mod common;

use cartanlab_core::geometry::Dir;
use cartanlab_core::presets::{REAL_ELLIPSOID, SPHERE};
use cartanlab_core::tractor::{
    kappa10_explicit, kappa1b0_explicit, kappa_bar_divergence, kappa_divergence, mat_sub, metric_adjoint,
    metric_pair, transform, Connection, Curv, Mat3, Tractor, TractorData,
};
use cartanlab_core::{Expr, C64};
use common::{max, Surface};

fn flat(m: &Mat3) -> Vec<Expr> {
    m.iter().flatten().copied().collect()
}

fn connection(s: &mut Surface) -> Connection {
    Connection::new(&mut s.pool, &s.frame, TractorData::from_invariants(&s.inv))
}

fn test_tractors(s: &mut Surface) -> [Tractor; 2] {
    let v = Tractor::new(s.expr("z1 + 0.5*zb2"), s.expr("zb1*z2 - 1"), s.expr("0.3*i + z1*zb1"));
    let w = Tractor::new(s.expr("2 - i*zb1"), s.expr("z2^2"), s.expr("zb2 + z1*z2"));
    [v, w]
}

#[test]
fn metric_is_parallel() {
    for src in [SPHERE, REAL_ELLIPSOID] {
        let mut s = Surface::new(src);
        let conn = connection(&mut s);
        let [v, w] = test_tractors(&mut s);
        let h = metric_pair(&mut s.pool, &v, &w);
        let mut res = Vec::new();
        for d in [Dir::One, Dir::Bar, Dir::Zero] {
            let lhs = s.frame.field(d).apply(&mut s.pool, h);
            let dv = conn.derive(&mut s.pool, &v, d);
            let dw = conn.derive(&mut s.pool, &w, d.conj());
            let a = metric_pair(&mut s.pool, &dv, &w);
            let b = metric_pair(&mut s.pool, &v, &dw);
            let ab = s.pool.add(a, b);
            res.push(s.pool.sub(lhs, ab));
        }
        let pts = s.points(41, 200);
        let m = s.max_abs(&res, &pts);
        assert!(max(&m) < 1e-8, "{src}: {:?}", m);
    }
}

#[test]
fn curvature_matches_explicit_formulas() {
    let mut s = Surface::new(REAL_ELLIPSOID);
    let conn = connection(&mut s);
    let k11 = conn.curvature_matrix(&mut s.pool, Curv::OneBar);
    let k10 = conn.curvature_matrix(&mut s.pool, Curv::OneZero);
    let k1b0 = conn.curvature_matrix(&mut s.pool, Curv::BarZero);
    let e10 = kappa10_explicit(&mut s.pool, &s.inv);
    let e1b0 = kappa1b0_explicit(&mut s.pool, &s.inv);
    let d10 = mat_sub(&mut s.pool, &k10, &e10);
    let d1b0 = mat_sub(&mut s.pool, &k1b0, &e1b0);
    // the two components are metric adjoints of each other
    let adj = metric_adjoint(&mut s.pool, &k10);
    let dual = mat_sub(&mut s.pool, &adj, &k1b0);

    let pts = s.points(42, 100);
    let groups = [flat(&k11), flat(&d10), flat(&d1b0), flat(&dual), flat(&e10)];
    let m: Vec<f64> = groups.iter().map(|g| max(&s.max_abs(g, &pts))).collect();
    assert!(m[0] < 1e-7, "kappa_11bar {}", m[0]);
    assert!(m[1] < 1e-7, "kappa_10 {}", m[1]);
    assert!(m[2] < 1e-7, "kappa_1bar0 {}", m[2]);
    assert!(m[3] < 1e-7, "duality {}", m[3]);
    // and the comparison is not vacuous
    assert!(m[4] > 1e-3);
}

#[test]
fn sphere_tractor_curvature_vanishes() {
    let mut s = Surface::new(SPHERE);
    let conn = connection(&mut s);
    let mut roots = Vec::new();
    for c in [Curv::OneBar, Curv::OneZero, Curv::BarZero] {
        roots.extend(flat(&conn.curvature_matrix(&mut s.pool, c)));
    }
    let pts = s.points(43, 200);
    assert!(max(&s.max_abs(&roots, &pts)) < 1e-8);
}

#[test]
fn divergence_of_kappa_and_bianchi() {
    let mut s = Surface::new(REAL_ELLIPSOID);
    let conn = connection(&mut s);
    let e10 = kappa10_explicit(&mut s.pool, &s.inv);
    let e1b0 = kappa1b0_explicit(&mut s.pool, &s.inv);
    let div = kappa_divergence(&mut s.pool, &conn, &e10);
    let divb = kappa_bar_divergence(&mut s.pool, &conn, &e1b0);
    let bianchi = mat_sub(&mut s.pool, &div.m, &divb.m);
    let o = s.inv.obstruction.value;
    let m3io = s.pool.scale(C64::new(0.0, -3.0), o);

    let mut roots = flat(&div.m);
    roots.extend(flat(&bianchi));
    roots.push(m3io);
    let pts = s.points(44, 100);
    let rows = s.eval(&roots, &pts);
    let scale = rows.iter().map(|r| r[18].norm()).fold(0.0, f64::max);
    assert!(scale > 1e-4);
    for r in &rows {
        for (k, x) in r[..9].iter().enumerate() {
            if k == 6 {
                let rel = (x - r[18]).norm() / r[18].norm().max(1e-3 * scale);
                assert!(rel < 1e-6, "bottom-left {} vs {}", x, r[18]);
            } else {
                assert!(x.norm() < 1e-7 * scale.max(1.0), "entry {k}: {x}");
            }
        }
        assert!(max(&r[9..18].iter().map(|x| x.norm()).collect::<Vec<_>>()) < 1e-6);
    }
}

#[test]
fn scale_change_round_trip() {
    let mut s = Surface::new(REAL_ELLIPSOID);
    let [v, w] = test_tractors(&mut s);
    let ups = s.expr("0.1*(z1 + zb1) - 0.05*z2*zb2");
    let vh = transform(&mut s.pool, &s.frame, &v, ups);
    let wh = transform(&mut s.pool, &s.frame, &w, ups);
    let mups = s.pool.neg(ups);
    // components stay in the source trivialization, so the inverse uses
    // the same frame
    let back = transform(&mut s.pool, &s.frame, &vh, mups);
    let mut res: Vec<Expr> = (0..3).map(|k| s.pool.sub(back.comps[k], v.comps[k])).collect();
    // the metric is scale independent
    let h = metric_pair(&mut s.pool, &v, &w);
    let hh = metric_pair(&mut s.pool, &vh, &wh);
    res.push(s.pool.sub(h, hh));
    // the canonical tractor is fixed
    let z = Tractor::canonical(&s.pool);
    let zh = transform(&mut s.pool, &s.frame, &z, ups);
    res.extend((0..3).map(|k| s.pool.sub(zh.comps[k], z.comps[k])));
    let pts = s.points(45, 200);
    let m = s.max_abs(&res, &pts);
    assert!(max(&m) < 1e-10, "{:?}", m);
    let moved = s.pool.sub(vh.comps[2], v.comps[2]);
    assert!(s.max_abs(&[moved], &pts)[0] > 1e-3);
}

#[test]
fn tractor_component_weights() {
    let s = Surface::new(SPHERE);
    let z = Tractor::canonical(&s.pool);
    assert_eq!(z.component(0).weight, (1, 1));
    assert_eq!(z.component(1).indices, vec![Dir::Bar]);
    assert_eq!(z.component(2).weight, (0, 0));
    assert_eq!(z.rho(), s.pool.one());
    assert_eq!(z.sigma(), s.pool.zero());
}
