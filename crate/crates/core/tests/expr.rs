use cartanlab_core::expr::{parse, Binding, EvalError, ExprError, Kind, ParseError};
use cartanlab_core::{Expr, ExprPool, VarId, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn construct_simplifies() {
    let mut p = ExprPool::new();
    let z1 = p.var(VarId::Z1);
    let z2 = p.var(VarId::Z2);
    let zero = p.construct(Kind::Const(c(0.0, 0.0)), &[]).unwrap();
    assert_eq!(p.construct(Kind::Add, &[zero, z1]).unwrap(), z1);
    let two = p.real(2.0);
    let three = p.real(3.0);
    let six = p.construct(Kind::Mul, &[two, three]).unwrap();
    assert_eq!(p.const_value(six), Some(c(6.0, 0.0)));
    let cz = p.construct(Kind::Conj, &[z2]).unwrap();
    assert_eq!(p.construct(Kind::Conj, &[cz]).unwrap(), z2);
    let one = p.one();
    assert_eq!(p.construct(Kind::Mul, &[one, z1]).unwrap(), z1);
    let d = p.sub(z1, z1);
    assert!(p.is_zero(d));
}

#[test]
fn division_by_syntactic_zero_is_rejected() {
    let mut p = ExprPool::new();
    let z1 = p.var(VarId::Z1);
    let zero = p.zero();
    assert_eq!(
        p.construct(Kind::Div, &[z1, zero]),
        Err(ExprError::ZeroDenominator)
    );
    let d = p.sub(z1, z1);
    assert_eq!(p.div(z1, d), Err(ExprError::ZeroDenominator));
    assert!(matches!(
        p.construct(Kind::Neg, &[z1, z1]),
        Err(ExprError::Arity { .. })
    ));
}

#[test]
fn wirtinger_examples() {
    let mut p = ExprPool::new();
    let z1 = p.var(VarId::Z1);
    let zb1 = p.var(VarId::Zb1);
    let prod = p.mul(z1, zb1);
    assert_eq!(p.wirtinger_diff(prod, VarId::Z1), zb1);
    let d = p.wirtinger_diff(z1, VarId::Zb1);
    assert!(p.is_zero(d));
    let sq = p.pow(z1, 2).unwrap();
    let csq = p.conj(sq);
    let d = p.wirtinger_diff(csq, VarId::Z1);
    assert!(p.is_zero(d));
    let d = p.wirtinger_diff(csq, VarId::Zb1);
    for z in [c(0.3, -0.7), c(1.1, 0.2)] {
        let v = p.eval(d, z, c(0.0, 0.0)).unwrap();
        assert!((v - z.conj() * 2.0).norm() < 1e-15);
    }
}

#[test]
fn eval_examples() {
    let mut p = ExprPool::new();
    let sphere = parse(&mut p, "z1*zb1 + z2*zb2 - 1").unwrap();
    assert_eq!(p.eval(sphere, c(1.0, 0.0), c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    let e = parse(&mut p, "conj(i*z1)").unwrap();
    assert_eq!(p.eval(e, c(1.0, 0.0), c(0.0, 0.0)).unwrap(), c(0.0, -1.0));
    assert_eq!(p.eval(e, c(0.0, 1.0), c(0.0, 0.0)).unwrap(), c(-1.0, 0.0));
}

#[test]
fn eval_errors() {
    let mut p = ExprPool::new();
    let e = parse(&mut p, "1/(z1*zb1)").unwrap();
    assert!(matches!(
        p.eval(e, c(0.0, 0.0), c(1.0, 0.0)),
        Err(EvalError::DivisionByZero(_))
    ));
    let s = parse(&mut p, "sqrt(z1*zb1 - 1)").unwrap();
    assert!(matches!(
        p.eval(s, c(0.5, 0.0), c(0.0, 0.0)),
        Err(EvalError::SqrtDomain { .. })
    ));
    let s = parse(&mut p, "sqrt(z1)").unwrap();
    assert!(matches!(
        p.eval(s, c(1.0, 0.1), c(0.0, 0.0)),
        Err(EvalError::SqrtDomain { .. })
    ));
    assert_eq!(p.eval(s, c(4.0, 0.0), c(0.0, 0.0)).unwrap(), c(2.0, 0.0));
}

#[test]
fn parse_examples() {
    let mut p = ExprPool::new();
    let e = parse(&mut p, "z1*zb1 + 2*z2*zb2 - 1").unwrap();
    let v = p.eval(e, c(0.6, 0.0), c(0.0, 0.4)).unwrap();
    assert!((v - c(0.36 + 0.32 - 1.0, 0.0)).norm() < 1e-15);

    let e = parse(&mut p, "conj(i*z1)").unwrap();
    let i = p.imag_unit();
    let z1 = p.var(VarId::Z1);
    let iz = p.mul(i, z1);
    assert_eq!(e, p.conj(iz));

    let err = parse(&mut p, "z1^-1").unwrap_err();
    assert_eq!(err.offset, 3);
    assert!(err.expected.contains(&"nonneg-integer"), "{err}");
}

#[test]
fn parse_errors_locate_the_problem() {
    let mut p = ExprPool::new();
    let cases: [(&str, usize); 6] = [
        ("", 0),
        ("z1 +", 4),
        ("z3", 0),
        ("(z1 + z2", 8),
        ("z1 z2", 3),
        ("sqrt(z1", 7),
    ];
    for (src, offset) in cases {
        let err: ParseError = parse(&mut p, src).unwrap_err();
        assert_eq!(err.offset, offset, "{src:?}: {err}");
    }
    assert!(parse(&mut p, "zb1^2.5").is_err());
    assert!(parse(&mut p, "1/0").is_err());
}

#[test]
fn parse_precedence_and_unary_minus() {
    let mut p = ExprPool::new();
    let z = c(0.3, 0.8);
    let w = c(-0.2, 0.5);
    let checks: [(&str, C64); 6] = [
        // unary minus is part of the atom, so it binds tighter than '^'
        ("-z1^2", z * z),
        ("2 - z1*z2 / 4", c(2.0, 0.0) - z * w / 4.0),
        ("(1 + i)^3", c(1.0, 1.0).powi(3)),
        ("-(-z2)", w),
        ("z1 - z2 - 1", z - w - 1.0),
        ("0 - z1^2", -(z * z)),
    ];
    for (src, want) in checks {
        let e = parse(&mut p, src).unwrap();
        let v = p.eval(e, z, w).unwrap();
        assert!((v - want).norm() < 1e-14, "{src}: {v} vs {want}");
    }
}

/// Central difference of `e` in the real or imaginary direction of `z_j`
/// at a physical point.
fn fd(p: &ExprPool, e: Expr, z: [C64; 2], j: usize, step: C64) -> C64 {
    let mut a = z;
    let mut b = z;
    a[j] += step;
    b[j] -= step;
    (p.eval(e, a[0], a[1]).unwrap() - p.eval(e, b[0], b[1]).unwrap()) / (2.0 * step.norm())
}

/// `d/dz = (d/dx - i d/dy)/2` and `d/dzb = (d/dx + i d/dy)/2`.
fn fd_wirtinger(p: &ExprPool, e: Expr, z: [C64; 2], v: VarId, h: f64) -> C64 {
    let j = v.slot() % 2;
    let dx = fd(p, e, z, j, c(h, 0.0));
    let dy = fd(p, e, z, j, c(0.0, h));
    let i = c(0.0, 1.0);
    if v.is_holomorphic() {
        (dx - i * dy) * 0.5
    } else {
        (dx + i * dy) * 0.5
    }
}

#[test]
fn sixth_order_tower_matches_finite_differences() {
    let mut p = ExprPool::new();
    let rho = parse(
        &mut p,
        "(z1*zb1 + z2*zb2 - 1)*sqrt(2 + z1*zb1) + 0.1*(z1^3*zb2 + zb1^3*z2)/(3 + z2*zb2)",
    )
    .unwrap();
    let order = [VarId::Z1, VarId::Zb1, VarId::Z2, VarId::Zb2, VarId::Z1, VarId::Zb2];
    let mut tower = vec![rho];
    for &v in &order {
        let last = *tower.last().unwrap();
        tower.push(p.wirtinger_diff(last, v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let z = [
            c(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
            c(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
        ];
        for k in 0..order.len() {
            let exact = p.eval(tower[k + 1], z[0], z[1]).unwrap();
            let approx = fd_wirtinger(&p, tower[k], z, order[k], 1e-3);
            let rel = (exact - approx).norm() / exact.norm().max(1.0);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-5, "worst relative error {worst:e}");
}

#[test]
fn lane_evaluation_matches_scalar_evaluation() {
    let mut p = ExprPool::new();
    let e = parse(&mut p, "sqrt(1 + z1*zb1)*conj(z2^3) - 1/(2 + z2*zb2) + i*z1").unwrap();
    let d = p.wirtinger_diff(e, VarId::Zb2);
    let tape = p.compile(&[e, d]);
    let pts: Vec<[C64; 2]> = (0..13)
        .map(|k| [c(0.1 * k as f64, -0.3), c(0.2, 0.05 * k as f64)])
        .collect();
    let rows = tape.eval_points(&pts).unwrap();
    for (pt, row) in pts.iter().zip(&rows) {
        let want = tape.eval(Binding::Paired(pt[0], pt[1])).unwrap();
        assert_eq!(&want, row);
    }
}

/// Random expression trees, kept away from poles and branch cuts.
#[derive(Clone, Debug)]
enum Tree {
    Const(f64, f64),
    Var(usize),
    Add(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    Neg(Box<Tree>),
    Pow(Box<Tree>, i32),
    /// `a / (2 + b conj(b))`
    Div(Box<Tree>, Box<Tree>),
    /// `sqrt(1 + a conj(a))`
    Sqrt(Box<Tree>),
    Conj(Box<Tree>),
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Tree::Const(a, b)),
        (0..4usize).prop_map(Tree::Var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Mul(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Tree::Neg(Box::new(a))),
            (inner.clone(), 0..4i32).prop_map(|(a, n)| Tree::Pow(Box::new(a), n)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Tree::Sqrt(Box::new(a))),
            inner.prop_map(|a| Tree::Conj(Box::new(a))),
        ]
    })
}

fn build(p: &mut ExprPool, t: &Tree) -> Expr {
    match t {
        Tree::Const(a, b) => p.constant(c(*a, *b)),
        Tree::Var(k) => p.var(VarId::ALL[*k]),
        Tree::Add(a, b) => {
            let (a, b) = (build(p, a), build(p, b));
            p.construct(Kind::Add, &[a, b]).unwrap()
        }
        Tree::Mul(a, b) => {
            let (a, b) = (build(p, a), build(p, b));
            p.construct(Kind::Mul, &[a, b]).unwrap()
        }
        Tree::Neg(a) => {
            let a = build(p, a);
            p.construct(Kind::Neg, &[a]).unwrap()
        }
        Tree::Pow(a, n) => {
            let a = build(p, a);
            p.construct(Kind::IntPow(*n), &[a]).unwrap()
        }
        Tree::Div(a, b) => {
            let a = build(p, a);
            let b = build(p, b);
            let bb = p.conj(b);
            let m = p.mul(b, bb);
            let two = p.real(2.0);
            let d = p.add(two, m);
            p.construct(Kind::Div, &[a, d]).unwrap()
        }
        Tree::Sqrt(a) => {
            let a = build(p, a);
            let ab = p.conj(a);
            let m = p.mul(a, ab);
            let one = p.one();
            let s = p.add(one, m);
            p.construct(Kind::Sqrt, &[s]).unwrap()
        }
        Tree::Conj(a) => {
            let a = build(p, a);
            p.construct(Kind::Conj, &[a]).unwrap()
        }
    }
}

fn point() -> impl Strategy<Value = [C64; 2]> {
    (-0.7..0.7f64, -0.7..0.7f64, -0.7..0.7f64, -0.7..0.7f64)
        .prop_map(|(a, b, c_, d)| [c(a, b), c(c_, d)])
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn derivative_matches_finite_differences(t in tree(), z in point(), k in 0..4usize) {
        let mut p = ExprPool::new();
        let e = build(&mut p, &t);
        let v = VarId::ALL[k];
        let d = p.wirtinger_diff(e, v);
        let exact = p.eval(d, z[0], z[1]).unwrap();
        let approx = fd_wirtinger(&p, e, z, v, 1e-5);
        let scale = exact.norm().max(p.eval(e, z[0], z[1]).unwrap().norm()).max(1.0);
        prop_assert!((exact - approx).norm() / scale < 1e-5,
            "{} : exact {exact} fd {approx}", p.display(e));
    }

    #[test]
    fn conjugation_commutes_with_evaluation(t in tree(), z in point()) {
        let mut p = ExprPool::new();
        let e = build(&mut p, &t);
        let v = p.eval(e, z[0], z[1]).unwrap();
        let ce = p.conj(e);
        prop_assert_eq!(p.eval(ce, z[0], z[1]).unwrap(), v.conj());
        let m = p.mirror(e);
        let mv = p.eval(m, z[0], z[1]).unwrap();
        prop_assert!((mv - v.conj()).norm() <= 1e-12 * v.norm().max(1.0));
    }

    #[test]
    fn interning_is_idempotent(t in tree()) {
        let mut p = ExprPool::new();
        let a = build(&mut p, &t);
        let n = p.len();
        let b = build(&mut p, &t);
        prop_assert_eq!(a, b);
        prop_assert_eq!(p.len(), n);
    }

    #[test]
    fn display_round_trips_through_the_parser(t in tree(), z in point()) {
        let mut p = ExprPool::new();
        let e = build(&mut p, &t);
        let text = format!("{}", p.display(e));
        let back = parse(&mut p, &text).unwrap();
        let (a, b) = (p.eval(e, z[0], z[1]).unwrap(), p.eval(back, z[0], z[1]).unwrap());
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "{text}");
    }
}
