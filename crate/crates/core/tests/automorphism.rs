mod common;

use cartanlab_core::automorphism::{
    automorphism_residual, check_anti_cr, decompose, field_from_potential, lie_symmetry_check, potential_from_field,
    prolong, prolong_residual, tangency_classify, tangency_flags, AutomorphismError, HoloField, Potential,
    TangencyFlags,
};
use cartanlab_core::presets::{ELLIPSOID, PERTURBED_SPHERE, REAL_ELLIPSOID, SPHERE};
use cartanlab_core::quadrature::SurfaceGrid;
use cartanlab_core::tractor::{kappa10_explicit, Connection, TractorData};
use cartanlab_core::{Expr, C64};
use common::{max, Surface};

const I: C64 = C64::new(0.0, 1.0);

#[test]
fn battery_solves_the_automorphism_equation() {
    for src in [SPHERE, ELLIPSOID, PERTURBED_SPHERE, REAL_ELLIPSOID] {
        let mut s = Surface::new(src);
        let pts = s.points(51, 300);
        for (name, x) in s.battery() {
            let u = potential_from_field(&mut s.pool, &x, &s.frame);
            let r = automorphism_residual(&mut s.pool, &u, &s.frame);
            let m = s.max_abs(&[r, u.value()], &pts);
            assert!(m[0] < 1e-8, "{src} / {name}: {}", m[0]);
            assert!(m[1] > 1e-2, "{src} / {name}: trivial potential");
        }
    }
}

#[test]
fn sphere_potentials_in_closed_form() {
    let mut s = Surface::new(SPHERE);
    let pts = s.points(52, 200);
    // theta(i z.d) = 1/2 = theta(xi), so i Euler is exactly xi and u = 1;
    // theta(d1) = -(i/2) zb1 gives u = conj(2 theta(d1)) = i z1
    let want = [("i_euler", s.expr("1")), ("d1", s.expr("i*z1"))];
    let battery = s.battery();
    for (name, w) in want {
        let x = battery.iter().find(|(n, _)| *n == name).unwrap().1;
        let u = potential_from_field(&mut s.pool, &x, &s.frame);
        let d = s.pool.sub(u.value(), w);
        assert!(s.max_abs(&[d], &pts)[0] < 1e-12, "{name}");
    }
    // the rotation field z2 d1 - z1 d2 has Re X tangent to M: u is real
    let a1 = s.expr("z2");
    let a2 = s.expr("-z1");
    let x = HoloField::new(&mut s.pool, a1, a2).unwrap();
    let u = potential_from_field(&mut s.pool, &x, &s.frame);
    let im = s.pool.im(u.value());
    assert!(s.max_abs(&[im], &pts)[0] < 1e-10);
}

#[test]
fn decomposition_reassembles_the_field() {
    let mut s = Surface::new(REAL_ELLIPSOID);
    let pts = s.points(53, 200);
    for (_, x) in s.battery() {
        let d = decompose(&mut s.pool, &x, &s.frame);
        let mut res = Vec::new();
        for (k, a) in [(0, x.a1), (1, x.a2)] {
            let p = s.pool.mul(d.x0, s.frame.t.0[k]);
            let q = s.pool.mul(d.x1, s.frame.z1.0[k]);
            let pq = s.pool.add(p, q);
            res.push(s.pool.sub(pq, a));
        }
        assert!(max(&s.max_abs(&res, &pts)) < 1e-12);
        let rows = s.eval(&[d.det], &pts);
        assert!(rows.iter().all(|r| r[0].norm() > 1e-3));
    }
}

#[test]
fn field_potential_round_trip() {
    for src in [SPHERE, ELLIPSOID, REAL_ELLIPSOID] {
        let mut s = Surface::new(src);
        let pts = s.points(54, 200);
        for (name, x) in s.battery() {
            let u = potential_from_field(&mut s.pool, &x, &s.frame);
            let back = field_from_potential(&mut s.pool, &u, &s.frame);
            let d1 = s.pool.sub(back.a[0], x.a1);
            let d2 = s.pool.sub(back.a[1], x.a2);
            let m = s.max_abs(&[d1, d2, back.cr_defect[0], back.cr_defect[1]], &pts);
            assert!(m[0] < 1e-8 && m[1] < 1e-8, "{src} / {name}: {:?}", m);
            assert!(m[2] < 1e-7 && m[3] < 1e-7, "{src} / {name}: {:?}", m);
        }
    }
}

#[test]
fn negative_controls_are_detected() {
    let mut s = Surface::new(REAL_ELLIPSOID);
    let pts = s.points(55, 100);
    for src in ["1", "z1*zb1", "zb2"] {
        let u = Potential::user(s.expr(src));
        let r = automorphism_residual(&mut s.pool, &u, &s.frame);
        let back = field_from_potential(&mut s.pool, &u, &s.frame);
        let m = s.max_abs(&[r, back.cr_defect[0], back.cr_defect[1]], &pts);
        assert!(m[0] > 1e-3, "{src}: {:?}", m);
        assert!(m[1].max(m[2]) > 1e-6, "{src}: {:?}", m);
    }
}

#[test]
fn lie_identity_is_unconditional() {
    for src in [SPHERE, REAL_ELLIPSOID] {
        let mut s = Surface::new(src);
        let pts = s.points(56, 200);
        let mut fs: Vec<Expr> = Vec::new();
        for (_, x) in s.battery() {
            let u = potential_from_field(&mut s.pool, &x, &s.frame);
            fs.push(s.pool.mirror(u.value()));
        }
        for src in ["z1*zb2 + 0.4*zb1^2", "1/(3 + z1 + zb1)", "z2*zb2*z1 - 2*i"] {
            fs.push(s.expr(src));
        }
        for f in fs {
            let c = lie_symmetry_check(&mut s.pool, f, &s.frame);
            let m = s.max_abs(&[c.residual, c.theta_part], &pts);
            assert!(m[0] < 1e-7 && m[1] < 1e-7, "{src}: {:?}", m);
        }
    }
}

#[test]
fn holomorphy_checks() {
    let mut s = Surface::new(SPHERE);
    let a = s.expr("z1 + zb2");
    let b = s.expr("z2");
    assert_eq!(
        HoloField::new(&mut s.pool, b, a),
        Err(AutomorphismError::NotHolomorphic { component: 2, var: 2 })
    );
    assert!(!HoloField::unchecked(a, b).declared_holomorphic);
    let f = s.expr("zb1*zb2 + 3");
    assert_eq!(check_anti_cr(&mut s.pool, f), Ok(()));
    let g = s.expr("zb1 + z2");
    assert_eq!(check_anti_cr(&mut s.pool, g), Err(AutomorphismError::NotAntiCr(2)));
}

#[test]
fn tangency_predicates() {
    let f = |re: f64, im: f64, eps: f64| tangency_flags(C64::new(re, im), eps);
    assert_eq!(f(1.0, 0.0, 0.0), TangencyFlags { approx: true, strict: false });
    assert_eq!(f(1.0, 0.0, 0.5), TangencyFlags { approx: true, strict: true });
    assert_eq!(f(1.0, 1.0, 1.0), TangencyFlags { approx: true, strict: false });
    assert_eq!(f(0.5, 1.0, 1.0), TangencyFlags { approx: false, strict: false });
    assert_eq!(f(0.0, 0.0, 1.0), TangencyFlags { approx: true, strict: false });
}

#[test]
fn tangency_fractions_on_the_sphere() {
    let mut s = Surface::new(SPHERE);
    let g = SurfaceGrid::build(&mut s.pool, &s.h, &s.frame.theta, 32, 32).unwrap();
    let battery = s.battery();
    let d1 = battery.iter().find(|(n, _)| *n == "d1").unwrap().1;
    let u = potential_from_field(&mut s.pool, &d1, &s.frame);
    let vals: Vec<C64> = s.eval(&[u.value()], &g.points()).into_iter().map(|r| r[0]).collect();

    let one = tangency_classify(&vals, &g.weights, 1.0);
    assert!((one.strict_fraction - 0.5).abs() < 0.01, "{}", one.strict_fraction);
    assert_eq!(one.predicate_mismatches, 0);

    let mut last = (0.0, 0.0);
    for eps in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
        let t = tangency_classify(&vals, &g.weights, eps);
        assert!(t.fraction >= last.0 && t.strict_fraction >= last.1);
        assert!(t.strict_fraction <= t.fraction);
        last = (t.fraction, t.strict_fraction);
        for v in &vals {
            let a = tangency_flags(*v, eps);
            let b = tangency_flags(*v, 2.0 * eps + 0.1);
            assert!(!a.approx || b.approx);
        }
    }

    // a real constant potential is strictly tangent for every eps > 0
    let ones = vec![C64::new(1.0, 0.0); g.len()];
    assert_eq!(tangency_classify(&ones, &g.weights, 0.3).strict_fraction, 1.0);
    let t0 = tangency_classify(&ones, &g.weights, 0.0);
    assert_eq!((t0.fraction, t0.strict_fraction), (1.0, 0.0));
}

/// Indices of the structural zeros of `nabla_1 s - u kappa_10`.
const STRUCTURAL: [(usize, usize); 8] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)];

#[test]
fn prolongation_structure() {
    let mut s = Surface::new(REAL_ELLIPSOID);
    let conn = Connection::new(&mut s.pool, &s.frame, TractorData::from_invariants(&s.inv));
    let k10 = kappa10_explicit(&mut s.pool, &s.inv);
    let pts = s.points(57, 60);
    let nus = [None, Some(s.expr("z1"))];
    for (name, x) in s.battery() {
        let u = potential_from_field(&mut s.pool, &x, &s.frame);
        for nu in nus {
            let p = prolong(&mut s.pool, &u, &s.frame, &s.inv, nu);
            let res = prolong_residual(&mut s.pool, &conn, &p.s, &u, &k10);
            let d = conn.derive_endo(&mut s.pool, &p.s, cartanlab_core::geometry::Dir::One);
            let tr = p.s.trace(&mut s.pool);
            let iu = s.pool.scale(I, u.value());
            let top = s.pool.sub(p.s.m[0][2], iu);
            let uq = s.pool.mul(iu, s.inv.q11.value);
            let mid = s.pool.sub(d.m[2][1], uq);

            let mut roots: Vec<Expr> = STRUCTURAL.iter().map(|&(i, j)| res[i][j]).collect();
            roots.extend([tr, top, mid]);
            roots.extend(d.m.iter().flatten().copied());
            let rows = s.eval(&roots, &pts);
            let scale = rows
                .iter()
                .flat_map(|r| r[11..].iter().map(|x| x.norm()))
                .fold(1.0, f64::max);
            for r in &rows {
                let zeros = max(&r[..8].iter().map(|x| x.norm()).collect::<Vec<_>>());
                assert!(zeros < 1e-6 * scale, "{name} nu={nu:?}: {zeros}");
                assert!(r[8].norm() < 1e-10 && r[9].norm() == 0.0);
                assert!(r[10].norm() < 1e-6 * scale, "{name}: bottom middle {}", r[10]);
            }
        }
    }
}

#[test]
fn prolongation_on_the_sphere() {
    let mut s = Surface::new(SPHERE);
    let conn = Connection::new(&mut s.pool, &s.frame, TractorData::from_invariants(&s.inv));
    let k10 = kappa10_explicit(&mut s.pool, &s.inv);
    let x = s.battery()[0].1;
    let u = potential_from_field(&mut s.pool, &x, &s.frame);
    let p = prolong(&mut s.pool, &u, &s.frame, &s.inv, None);
    let res = prolong_residual(&mut s.pool, &conn, &p.s, &u, &k10);
    let roots: Vec<Expr> = res.iter().flatten().copied().collect();
    let pts = s.points(58, 200);
    assert!(max(&s.max_abs(&roots, &pts)) < 1e-7);
    // upsilon_1, xi vanish for the constant potential
    assert!(max(&s.max_abs(&[p.upsilon1, p.xi], &pts)) < 1e-12);
}
