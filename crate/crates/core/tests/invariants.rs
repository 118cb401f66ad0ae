mod common;

use cartanlab_core::expr::parse;
use cartanlab_core::invariants::{bianchi_residual, monge_ampere_j, Invariants};
use cartanlab_core::presets::{ELLIPSOID, PERTURBED_SPHERE, REAL_ELLIPSOID, SPHERE};
use cartanlab_core::{ExprPool, C64};
use common::{max, Surface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn sphere_is_flat() {
    let s = Surface::new(SPHERE);
    let pts = s.points(31, 1000);
    let rows = s.eval(
        &[s.frame.a11, s.inv.q11.value, s.inv.obstruction.value, s.inv.r.value],
        &pts,
    );
    for r in &rows {
        assert!(r[0].norm() < 1e-7 && r[1].norm() < 1e-7 && r[2].norm() < 1e-7);
    }
    let rv: Vec<f64> = rows.iter().map(|r| r[3].re).collect();
    let mean = rv.iter().sum::<f64>() / rv.len() as f64;
    let var = rv.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / rv.len() as f64;
    assert!(var.sqrt() / mean.abs() < 1e-9);
}

#[test]
fn ellipsoid_is_spherical_but_real_ellipsoid_is_not() {
    // |z1|^2 + 2|z2|^2 = 1 is a linear image of the sphere, and the volume
    // normalized form is a constant multiple of the pulled back one
    let e = Surface::new(ELLIPSOID);
    let pts = e.points(32, 300);
    let m = e.max_abs(&[e.inv.q11.value, e.inv.obstruction.value, e.frame.a11], &pts);
    assert!(max(&m) < 1e-7, "{:?}", m);

    for src in [REAL_ELLIPSOID, PERTURBED_SPHERE] {
        let s = Surface::new(src);
        let pts = s.points(33, 100);
        let m = s.max_abs(&[s.inv.q11.value, s.inv.obstruction.value], &pts);
        assert!(m[0] > 1e-3 && m[1] > 1e-4, "{src}: {:?}", m);
        let a = s.max_abs(&[s.frame.a11], &pts)[0];
        assert!(a > 1e-4, "{src}: A {a}");
    }
}

#[test]
fn bianchi_and_real_obstruction() {
    for src in [ELLIPSOID, REAL_ELLIPSOID, PERTURBED_SPHERE] {
        let mut s = Surface::new(src);
        let b = bianchi_residual(&mut s.pool, &s.frame, &s.inv.r);
        let o = s.inv.obstruction.value;
        let im = s.pool.im(o);
        let pts = s.points(34, 200);
        let rows = s.eval(&[b, im, o], &pts);
        let scale = rows.iter().map(|r| r[2].norm()).fold(0.0, f64::max);
        for r in &rows {
            assert!(r[0].norm() < 1e-7, "{src}: bianchi {}", r[0]);
            // relative to the obstruction's size on the surface; absolute
            // where it vanishes identically
            assert!(r[1].norm() < 1e-6 * scale.max(1e-2), "{src}: Im O {}", r[1]);
        }
    }
}

fn interior_points(seed: u64, n: usize, a: f64, b: f64) -> Vec<[C64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z: [f64; 4] = core::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if a * (z[0] * z[0] + z[1] * z[1]) + b * (z[2] * z[2] + z[3] * z[3]) < 0.98 {
            out.push([C64::new(z[0], z[1]), C64::new(z[2], z[3])]);
        }
    }
    out
}

#[test]
fn monge_ampere_anchors() {
    let mut pool = ExprPool::new();
    for (src, a, b, want) in [
        ("1 - z1*zb1 - z2*zb2", 1.0, 1.0, 1.0),
        ("1 - z1*zb1 - 2*z2*zb2", 1.0, 2.0, 2.0),
    ] {
        let u = parse(&mut pool, src).unwrap();
        let j = monge_ampere_j(&mut pool, u);
        for p in interior_points(35, 100, a, b) {
            let v = pool.eval(j, p[0], p[1]).unwrap();
            assert!((v - want).norm() < 1e-12, "{src}: {v}");
        }
    }
    // a solution of J(u) = 1 is not preserved by a non-trivial perturbation
    let u = parse(&mut pool, "1 - z1*zb1 - z2*zb2 + 0.1*z1*zb1*z2*zb2").unwrap();
    let j = monge_ampere_j(&mut pool, u);
    let p = [C64::new(0.3, 0.2), C64::new(-0.4, 0.1)];
    assert!((pool.eval(j, p[0], p[1]).unwrap() - 1.0).norm() > 1e-3);
}

#[test]
fn rescaling_covariance() {
    for src in [REAL_ELLIPSOID, PERTURBED_SPHERE] {
        let mut s = Surface::new(src);
        let pts = s.points(36, 150);
        for ups_src in ["0.1*(z1 + zb1)", "0.05*(z1*zb2 + zb1*z2) - 0.08*z2*zb2"] {
            let ups = s.expr(ups_src);
            let g = s.frame.rescale(&mut s.pool, ups);
            let hat = Invariants::build(&mut s.pool, &g);
            let roots = [
                s.inv.q11.value,
                hat.q11.value,
                s.inv.obstruction.value,
                hat.obstruction.value,
                s.inv.q_norm_sq.value,
                hat.q_norm_sq.value,
                ups,
            ];
            let mut worst = [0.0f64; 3];
            for r in s.eval(&roots, &pts) {
                let e = r[6].re;
                let laws = [(r[1], r[0], -2.0), (r[3], r[2], -3.0), (r[5], r[4], -4.0)];
                for (k, (h, b, p)) in laws.into_iter().enumerate() {
                    let want = b * (p * e).exp();
                    worst[k] = worst[k].max((h - want).norm() / want.norm());
                }
            }
            assert!(max(&worst) < 1e-6, "{src} / {ups_src}: {:?}", worst);
        }
    }
}
