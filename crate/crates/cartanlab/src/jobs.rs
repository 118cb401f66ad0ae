//! The five commands. Each builds the surface once, evaluates what it needs
//! in parallel and records checks in a [`Report`].

use cartanlab_core::automorphism::{
    automorphism_residual, field_from_potential, lie_symmetry_check, potential_from_field, prolong,
    prolong_residual, tangency_classify, tangency_flags, HoloField,
};
use cartanlab_core::calculus::{commutator_residual, Pair, Weighted};
use cartanlab_core::expr::parse;
use cartanlab_core::geometry::{sample_boundary, Dir, Frame, Hypersurface, RaySolver};
use cartanlab_core::invariants::{bianchi_residual, ricci_curvature, structure_crosscheck, Invariants};
use cartanlab_core::presets::FIELD_BATTERY;
use cartanlab_core::quadrature::{
    pairwise_sum, pairwise_sum_c, ClosureIntegrands, PolarizedIntegrands, SurfaceGrid, CLOSURE_CONSTANT,
    SPHERE_MEASURE,
};
use cartanlab_core::tractor::{
    kappa10_explicit, kappa1b0_explicit, kappa_bar_divergence, kappa_divergence, mat_sub, metric_adjoint,
    metric_pair, Connection, Curv, Mat3, Tractor, TractorData,
};
use cartanlab_core::{Expr, ExprPool, C64};
use serde_json::{json, Value};

use crate::config::{GridSpec, JobConfig, Monotone, Quantity, Tolerances};
use crate::par::{column, eval_rows, map_rows, max_abs, nan_max};
use crate::report::{complex, num, Conventions, Num, Report, SurfaceInfo};
use crate::InputError;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Invariants of the surface and flatness expectations.
    Report,
    /// Pointwise identities at random boundary points.
    Identities,
    /// The closure identity for one field.
    Integral,
    /// Approximate tangency fractions of one field.
    Tangency,
    /// A quantity along a ladder of grids, as CSV.
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Report => "report",
            Command::Identities => "identities",
            Command::Integral => "integral",
            Command::Tangency => "tangency",
            Command::Convergence => "convergence",
        }
    }
}

/// What a command writes, and whether all of its checks passed.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub pass: bool,
    pub report: Option<Report>,
}

impl Output {
    fn from_report(r: Report) -> Self {
        Output {
            text: r.to_json(),
            pass: r.pass,
            report: Some(r),
        }
    }
}

/// Surface, frame and invariants built from a config.
pub struct Setup {
    pub cfg: JobConfig,
    pub tol: Tolerances,
    pub pool: ExprPool,
    pub h: Hypersurface,
    pub frame: Frame,
    pub inv: Invariants,
    pub solver: RaySolver,
}

impl Setup {
    pub fn new(cfg: JobConfig, tol_scale: f64) -> Result<Self, InputError> {
        if !(tol_scale.is_finite() && tol_scale > 0.0) {
            return Err(InputError::Invalid(format!("--tol-scale must be positive, got {tol_scale}")));
        }
        cfg.validate()?;
        let tol = cfg.tolerances.scaled(tol_scale);
        let mut pool = ExprPool::new();
        let rho = parse_expr(&mut pool, "rho", &cfg.rho)?;
        let c = cfg.center;
        let h = Hypersurface {
            rho,
            center: [C64::new(c[0], c[1]), C64::new(c[2], c[3])],
            name: cfg.name.clone().unwrap_or_else(|| cfg.rho.clone()),
        };
        let solver = RaySolver::new(&mut pool, &h)?;
        let mut frame = Frame::build(&mut pool, &h)?;
        if cfg.debug.flip_torsion {
            frame.a11 = pool.neg(frame.a11);
            frame.a_up = pool.neg(frame.a_up);
        }
        let inv = Invariants::build(&mut pool, &frame);
        Ok(Setup {
            cfg,
            tol,
            pool,
            h,
            frame,
            inv,
            solver,
        })
    }

    pub fn expr(&mut self, what: &str, src: &str) -> Result<Expr, InputError> {
        parse_expr(&mut self.pool, what, src)
    }

    pub fn field(&mut self, what: &str, src: &[String; 2]) -> Result<HoloField, InputError> {
        let a1 = self.expr(&format!("{what}[0]"), &src[0])?;
        let a2 = self.expr(&format!("{what}[1]"), &src[1])?;
        Ok(HoloField::new(&mut self.pool, a1, a2)?)
    }

    /// The configured field, or the battery when none is given.
    fn fields(&mut self) -> Result<Vec<(String, HoloField)>, InputError> {
        if let Some(src) = self.cfg.vector_field.clone() {
            return Ok(vec![("vector_field".into(), self.field("vector_field", &src)?)]);
        }
        FIELD_BATTERY
            .iter()
            .map(|&(name, a1, a2)| Ok((name.to_string(), self.field(name, &[a1.into(), a2.into()])?)))
            .collect()
    }

    fn required_field(&mut self) -> Result<HoloField, InputError> {
        match self.cfg.vector_field.clone() {
            Some(src) => self.field("vector_field", &src),
            None => Err(InputError::Invalid("this command needs vector_field".into())),
        }
    }

    pub fn samples(&self) -> Result<Vec<[C64; 2]>, InputError> {
        Ok(sample_boundary(&self.solver, self.cfg.samples.seed, self.cfg.samples.points)?)
    }

    pub fn grid(&mut self, spec: GridSpec) -> Result<SurfaceGrid, InputError> {
        Ok(SurfaceGrid::build(
            &mut self.pool,
            &self.h,
            &self.frame.theta,
            spec.n_eta,
            spec.n_xi,
        )?)
    }

    pub fn eval(&self, roots: &[Expr], points: &[[C64; 2]]) -> Result<Vec<Vec<C64>>, InputError> {
        Ok(eval_rows(&self.pool, roots, points)?)
    }

    fn report(&self, command: Command) -> Report {
        let c = self.cfg.center;
        let surface = SurfaceInfo {
            name: self.h.name.clone(),
            rho: self.cfg.rho.clone(),
            center: c.map(Num),
        };
        Report::new(command.name(), surface, Conventions::new(self.frame.sign))
    }
}

fn parse_expr(pool: &mut ExprPool, what: &str, src: &str) -> Result<Expr, InputError> {
    parse(pool, src).map_err(|err| InputError::Parse { what: what.into(), err })
}

pub fn run(cmd: Command, setup: &mut Setup) -> Result<Output, InputError> {
    match cmd {
        Command::Report => report(setup).map(Output::from_report),
        Command::Identities => identities(setup).map(Output::from_report),
        Command::Integral => integral(setup).map(Output::from_report),
        Command::Tangency => tangency(setup).map(Output::from_report),
        Command::Convergence => convergence(setup),
    }
}

/// Named groups of residual expressions whose maxima are checked together.
#[derive(Default)]
struct Groups {
    roots: Vec<Expr>,
    spans: Vec<(String, usize, usize, f64)>,
}

impl Groups {
    fn add(&mut self, name: impl Into<String>, tol: f64, es: impl IntoIterator<Item = Expr>) {
        let start = self.roots.len();
        self.roots.extend(es);
        self.spans.push((name.into(), start, self.roots.len(), tol));
    }

    /// Max modulus of each group over the points, recorded as checks.
    fn check(self, s: &Setup, rep: &mut Report, points: &[[C64; 2]], on: &str) -> Result<(), InputError> {
        let tape = s.pool.compile(&self.roots);
        let spans = &self.spans;
        let per_point = map_rows(&tape, points, |r| {
            spans
                .iter()
                .map(|&(_, a, b, _)| r[a..b].iter().map(|x| x.norm()).fold(0.0, nan_max))
                .collect::<Vec<f64>>()
        })?;
        for (k, (name, _, _, tol)) in self.spans.iter().enumerate() {
            let m = per_point.iter().map(|v| v[k]).fold(0.0, nan_max);
            rep.at_most(name, m, *tol, on);
        }
        Ok(())
    }
}

fn stats(v: &[f64]) -> Value {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let std = (pairwise_sum(&dev) / n).sqrt();
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({
        "mean": num(mean),
        "std": num(std),
        "rel_std": num(std / mean.abs()),
        "min": num(min),
        "max": num(max),
    })
}

fn report(s: &mut Setup) -> Result<Report, InputError> {
    let mut rep = s.report(Command::Report);
    let tol = s.tol.clone();
    let grid = s.grid(s.cfg.grid)?;
    let g_on = format!("grid {}", s.cfg.grid.label());
    let pts = s.samples()?;
    let on = s.cfg.samples.label();

    let rows = s.eval(&[s.h.rho], &grid.points())?;
    rep.at_most("nodes_on_surface", max_abs(&rows, 0), tol.rho, &g_on);
    let measure = grid.total_measure();
    rep.value("measure", num(measure), &g_on);
    rep.value("measure_over_sphere", num(measure / SPHERE_MEASURE), &g_on);

    let bianchi = bianchi_residual(&mut s.pool, &s.frame, &s.inv.r);
    let o = s.inv.obstruction.value;
    let im_o = s.pool.im(o);
    let im_r = s.pool.im(s.inv.r.value);
    let mut roots = vec![s.inv.r.value, im_r, s.frame.a11, s.inv.q11.value, o, im_o, bianchi];
    roots.extend(s.frame.duality_residuals(&mut s.pool));
    roots.extend(s.frame.reeb_residuals(&mut s.pool));
    let rows = s.eval(&roots, &pts)?;

    let r: Vec<f64> = rows.iter().map(|r| r[0].re).collect();
    let r_stats = stats(&r);
    let rel_std = (r_stats["std"].as_f64().unwrap_or(f64::NAN)) / r_stats["mean"].as_f64().unwrap_or(f64::NAN).abs();
    rep.value("scalar_curvature", r_stats, &on);
    let [im_r, a, q, o, im_o] = [1, 2, 3, 4, 5].map(|k| max_abs(&rows, k));
    rep.value("max_abs_im_scalar_curvature", num(im_r), &on);
    rep.value("max_abs_torsion", num(a), &on);
    rep.value("max_abs_cartan", num(q), &on);
    rep.value("max_abs_obstruction", num(o), &on);

    let frame = (7..rows[0].len()).map(|k| max_abs(&rows, k)).fold(0.0, nan_max);
    rep.at_most("frame_normalization", frame, tol.frame, &on);
    rep.at_most("bianchi", max_abs(&rows, 6), tol.bianchi, &on);
    // Im O relative to the size of O; absolute where O vanishes
    rep.at_most("obstruction_real", im_o / o.max(1e-2), tol.im_obstruction, &on);

    if let Some(src) = s.cfg.upsilon.clone() {
        // Q_11, O and |Q|^2 pick up e^{-2 ups}, e^{-3 ups}, e^{-4 ups}
        let ups = s.expr("upsilon", &src)?;
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
        let rows = s.eval(&roots, &pts)?;
        let mut worst = [0.0f64; 3];
        for r in &rows {
            let e = r[6].re;
            for (k, p) in [-2.0, -3.0, -4.0].into_iter().enumerate() {
                let want = r[2 * k] * (p * e).exp();
                let d = (r[2 * k + 1] - want).norm() / want.norm().max(tol.floor);
                worst[k] = nan_max(worst[k], d);
            }
        }
        for (name, w) in ["q11", "obstruction", "q_norm_sq"].into_iter().zip(worst) {
            rep.at_most(&format!("covariance.{name}"), w, tol.scale, &on);
        }
    }

    let curv = a.max(q).max(o);
    match s.cfg.expect.flat {
        Some(true) => {
            rep.at_most("flat.curvature", curv, tol.flat, &on);
            rep.at_most("flat.scalar_curvature_rel_std", rel_std, tol.r_rel_std, &on);
        }
        Some(false) => {
            rep.record("not_flat", curv, tol.flat, curv > tol.flat, &on);
        }
        None => {}
    }
    match s.cfg.expect.spherical {
        Some(true) => {
            rep.at_most("spherical", q.max(o), tol.spherical, &on);
        }
        Some(false) => {
            rep.record("not_spherical", q, tol.spherical, q > tol.spherical, &on);
        }
        None => {}
    }
    Ok(rep)
}

const KINDS: [(&str, &[Dir], (i32, i32)); 6] = [
    ("scalar", &[], (0, 0)),
    ("vector", &[Dir::Bar], (1, 1)),
    ("covector", &[Dir::One], (0, 0)),
    ("density_2_-1", &[], (2, -1)),
    ("density_1_0", &[], (1, 0)),
    ("weighted_vector", &[Dir::Bar], (2, 1)),
];

const PAIRS: [(&str, Pair); 3] = [("1_1bar", Pair::OneBar), ("1_0", Pair::OneZero), ("1bar_0", Pair::BarZero)];

fn flat(m: &Mat3) -> Vec<Expr> {
    m.iter().flatten().copied().collect()
}

/// Structural zeros of `nabla_1 s - u kappa_10`.
const STRUCTURAL: [(usize, usize); 8] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)];

fn identities(s: &mut Setup) -> Result<Report, InputError> {
    let mut rep = s.report(Command::Identities);
    let tol = s.tol.clone();
    let pts = s.samples()?;
    let on = s.cfg.samples.label();
    let tf: Vec<Expr> = s
        .cfg
        .test_functions
        .clone()
        .iter()
        .enumerate()
        .map(|(k, src)| s.expr(&format!("test_functions[{k}]"), src))
        .collect::<Result<_, _>>()?;
    let r = s.inv.r.value;
    let mut g = Groups::default();

    for (kind, idx, w) in KINDS {
        for (pname, pair) in PAIRS {
            let mut res = Vec::new();
            for &f in &tf {
                let t = Weighted::new(f, idx, w);
                res.push(
                    commutator_residual(&mut s.pool, &s.frame, r, &t, pair)
                        .map_err(|e| InputError::Invalid(e.to_string()))?,
                );
            }
            g.add(format!("commutator.{kind}.{pname}"), tol.commutator, res);
        }
    }
    let v = s.expr("ricci probe", "2 + z1 + 0.5*zb2")?;
    let rr = ricci_curvature(&mut s.pool, &s.frame, v);
    let d = s.pool.sub(rr, r);
    g.add("ricci_identity", tol.commutator, [d]);
    let cross = structure_crosscheck(&mut s.pool, &s.frame);
    g.add("structure_equation", tol.commutator, [cross]);
    let b = bianchi_residual(&mut s.pool, &s.frame, &s.inv.r);
    g.add("bianchi", tol.bianchi, [b]);
    let mut fr = s.frame.duality_residuals(&mut s.pool).to_vec();
    fr.extend(s.frame.reeb_residuals(&mut s.pool));
    for vf in s.frame.bracket_residuals(&mut s.pool) {
        fr.extend(vf.0);
    }
    g.add("frame_structure", tol.frame, fr);

    // tractor connection
    let conn = Connection::new(&mut s.pool, &s.frame, TractorData::from_invariants(&s.inv));
    let pick = |k: usize| tf[k % tf.len()];
    let tv = Tractor::new(pick(0), pick(1), pick(2));
    let tw = Tractor::new(pick(1), pick(2), pick(0));
    let h = metric_pair(&mut s.pool, &tv, &tw);
    let mut par = Vec::new();
    for d in [Dir::One, Dir::Bar, Dir::Zero] {
        let lhs = s.frame.field(d).apply(&mut s.pool, h);
        let dv = conn.derive(&mut s.pool, &tv, d);
        let dw = conn.derive(&mut s.pool, &tw, d.conj());
        let a = metric_pair(&mut s.pool, &dv, &tw);
        let b = metric_pair(&mut s.pool, &tv, &dw);
        let ab = s.pool.add(a, b);
        par.push(s.pool.sub(lhs, ab));
    }
    g.add("tractor.metric_parallel", tol.metric, par);
    let k11 = conn.curvature_matrix(&mut s.pool, Curv::OneBar);
    let k10 = conn.curvature_matrix(&mut s.pool, Curv::OneZero);
    let k1b0 = conn.curvature_matrix(&mut s.pool, Curv::BarZero);
    let e10 = kappa10_explicit(&mut s.pool, &s.inv);
    let e1b0 = kappa1b0_explicit(&mut s.pool, &s.inv);
    g.add("tractor.kappa_11bar", tol.kappa, flat(&k11));
    let d10 = mat_sub(&mut s.pool, &k10, &e10);
    g.add("tractor.kappa_10", tol.kappa, flat(&d10));
    let d1b0 = mat_sub(&mut s.pool, &k1b0, &e1b0);
    g.add("tractor.kappa_1bar0", tol.kappa, flat(&d1b0));
    let adj = metric_adjoint(&mut s.pool, &k10);
    let dual = mat_sub(&mut s.pool, &adj, &k1b0);
    g.add("tractor.kappa_duality", tol.kappa, flat(&dual));
    let div = kappa_divergence(&mut s.pool, &conn, &e10);
    let divb = kappa_bar_divergence(&mut s.pool, &conn, &e1b0);
    let kb = mat_sub(&mut s.pool, &div.m, &divb.m);
    g.add("tractor.kappa_bianchi", tol.kappa_bianchi, flat(&kb));

    // automorphisms
    let fields = s.fields()?;
    let nu_extra = match s.cfg.nu.clone() {
        Some(src) => s.expr("nu", &src)?,
        None => s.expr("nu", "z1")?,
    };
    let mut prolongs = Vec::new();
    for (name, x) in &fields {
        let u = potential_from_field(&mut s.pool, x, &s.frame);
        let res = automorphism_residual(&mut s.pool, &u, &s.frame);
        g.add(format!("automorphism.{name}.residual"), tol.automorphism, [res]);
        let back = field_from_potential(&mut s.pool, &u, &s.frame);
        let d1 = s.pool.sub(back.a[0], x.a1);
        let d2 = s.pool.sub(back.a[1], x.a2);
        g.add(format!("automorphism.{name}.round_trip"), tol.round_trip, [d1, d2]);
        g.add(format!("automorphism.{name}.cr_defect"), tol.cr_defect, back.cr_defect);
        let f = s.pool.mirror(u.value());
        let lie = lie_symmetry_check(&mut s.pool, f, &s.frame);
        g.add(format!("lie.{name}"), tol.lie, [lie.residual, lie.theta_part]);
        for (label, nu) in [("nu_0", None), ("nu_1", Some(nu_extra))] {
            let p = prolong(&mut s.pool, &u, &s.frame, &s.inv, nu);
            let pr = prolong_residual(&mut s.pool, &conn, &p.s, &u, &e10);
            let d = conn.derive_endo(&mut s.pool, &p.s, Dir::One);
            let tr = p.s.trace(&mut s.pool);
            let iu = s.pool.scale(I, u.value());
            let top = s.pool.sub(p.s.m[0][2], iu);
            let uq = s.pool.mul(iu, s.inv.q11.value);
            let mid = s.pool.sub(d.m[2][1], uq);
            let mut roots: Vec<Expr> = STRUCTURAL.iter().map(|&(i, j)| pr[i][j]).collect();
            roots.extend([tr, top, mid]);
            roots.extend(flat(&d.m));
            prolongs.push((format!("prolongation.{name}.{label}"), roots));
        }
    }
    for (k, &f) in tf.iter().enumerate() {
        let lie = lie_symmetry_check(&mut s.pool, f, &s.frame);
        g.add(format!("lie.test_function_{k}"), tol.lie, [lie.residual, lie.theta_part]);
    }
    g.check(s, &mut rep, &pts, &on)?;

    // relative checks
    let o = s.inv.obstruction.value;
    let im_o = s.pool.im(o);
    let m3io = s.pool.scale(C64::new(0.0, -3.0), o);
    let mut roots = vec![o, im_o, m3io];
    roots.extend(flat(&div.m));
    let rows = s.eval(&roots, &pts)?;
    let o_max = max_abs(&rows, 0);
    rep.at_most("obstruction_real", max_abs(&rows, 1) / o_max.max(1e-2), tol.im_obstruction, &on);
    let scale = max_abs(&rows, 2);
    let (mut off, mut corner) = (0.0, 0.0);
    for r in &rows {
        for (k, x) in r[3..12].iter().enumerate() {
            if k == 6 {
                let den = r[2].norm().max(1e-3 * scale).max(tol.floor);
                corner = nan_max(corner, (x - r[2]).norm() / den);
            } else {
                off = nan_max(off, x.norm() / scale.max(1.0));
            }
        }
    }
    rep.at_most("tractor.kappa_divergence.zero_entries", off, tol.kappa_divergence, &on);
    rep.at_most("tractor.kappa_divergence.obstruction", corner, tol.kappa_divergence, &on);

    for (name, roots) in prolongs {
        let rows = s.eval(&roots, &pts)?;
        // structural zeros relative to the size of nabla_1 s
        let scale = rows
            .iter()
            .flat_map(|r| r[11..].iter().map(|x| x.norm()))
            .fold(1.0, nan_max);
        let zeros = rows
            .iter()
            .flat_map(|r| r[..8].iter().map(|x| x.norm()))
            .fold(0.0, nan_max);
        rep.at_most(&format!("{name}.structural_zeros"), zeros / scale, tol.prolongation, &on);
        rep.at_most(&format!("{name}.trace"), max_abs(&rows, 8), tol.prolongation, &on);
        rep.at_most(&format!("{name}.top_right"), max_abs(&rows, 9), tol.prolongation, &on);
        rep.at_most(&format!("{name}.bottom_middle"), max_abs(&rows, 10) / scale, tol.prolongation, &on);
    }
    Ok(rep)
}

/// Column integrals against grid weights.
fn integrals(grid: &SurfaceGrid, rows: &[Vec<C64>], cols: &[usize]) -> Vec<C64> {
    cols.iter().map(|&k| grid.integrate_values(&column(rows, k))).collect()
}

fn integral(s: &mut Setup) -> Result<Report, InputError> {
    let mut rep = s.report(Command::Integral);
    let tol = s.tol.clone();
    let x = s.required_field()?;
    let second = match s.cfg.second_field.clone() {
        Some(src) => Some(s.field("second_field", &src)?),
        None => None,
    };
    let f = match s.cfg.anti_cr.clone() {
        Some(src) => s.expr("anti_cr", &src)?,
        None => s.pool.one(),
    };
    let polarized = match second {
        Some(x2) => Some(PolarizedIntegrands::build(&mut s.pool, &s.frame, &s.inv, &x, &x2, f)?),
        None => None,
    };
    let ups = match s.cfg.upsilon.clone() {
        Some(src) => Some(s.expr("upsilon", &src)?),
        None => None,
    };
    let c = ClosureIntegrands::build(&mut s.pool, &s.frame, &s.inv, &x);
    let grid = s.grid(s.cfg.grid)?;
    let on = format!("grid {}", s.cfg.grid.label());
    let measure = grid.total_measure();
    let points = grid.points();
    rep.value("measure", num(measure), &on);

    let mut roots = vec![c.residual, c.i1, c.i2, c.divergence, c.trace_lhs, c.trace_rhs, c.q_norm_sq];
    roots.extend(flat(&c.zero_product));
    roots.extend(flat(&c.single_product));
    roots.extend(c.z_annihilation);
    let rows = s.eval(&roots, &points)?;

    let residual = max_abs(&rows, 0);
    if !rep.at_most("solution", residual, tol.solution, &on) {
        return Ok(rep);
    }
    let v = integrals(&grid, &rows, &[1, 2, 3]);
    let (i1, i2, div) = (v[0], v[1], v[2]);
    rep.value("i1", complex(i1), &on);
    rep.value("i2", complex(i2), &on);
    rep.value("ratio", complex(i2 / i1), &on);
    rep.value("divergence", complex(div), &on);
    let gap = (i2 - CLOSURE_CONSTANT * i1).norm();
    let vanish = tol.vanishing * measure;
    if i1.norm() <= vanish {
        // locally spherical: both sides must vanish
        rep.at_most("closure.vanishing", i1.norm().max(i2.norm()) / measure, tol.vanishing, &on);
    } else {
        rep.at_most("closure", gap / i1.norm(), tol.closure, &on);
    }

    // pointwise identities
    let mut trace_ok = 0usize;
    let mut product_ok = 0usize;
    let (mut trace_max, mut product_max, mut z_max) = (0.0, 0.0, 0.0);
    for r in &rows {
        let t = (r[4] - r[5]).norm() / r[5].norm().max(tol.floor);
        let q = r[6].norm().max(tol.floor);
        let zero = r[7..16].iter().map(|x| x.norm()).fold(0.0, nan_max);
        let single = r[16..25]
            .iter()
            .enumerate()
            .map(|(k, x)| if k == 6 { (x + r[6]).norm() } else { x.norm() })
            .fold(0.0, nan_max);
        let p = zero.max(single) / q;
        trace_ok += (t <= tol.trace) as usize;
        product_ok += (p <= tol.product) as usize;
        trace_max = nan_max(trace_max, t);
        product_max = nan_max(product_max, p);
        z_max = r[25..].iter().map(|x| x.norm()).fold(z_max, nan_max);
    }
    let n = rows.len() as f64;
    rep.at_least("pointwise.trace_fraction", trace_ok as f64 / n, tol.pointwise_fraction, &on);
    rep.at_least("pointwise.product_fraction", product_ok as f64 / n, tol.pointwise_fraction, &on);
    rep.value("pointwise.trace_max_rel", num(trace_max), &on);
    rep.value("pointwise.product_max_rel", num(product_max), &on);
    rep.at_most("pointwise.z_annihilation", z_max, tol.z_annihilation, &on);

    if let Some(ups) = ups {
        let frame = s.frame.rescale(&mut s.pool, ups);
        let inv = Invariants::build(&mut s.pool, &frame);
        let ch = ClosureIntegrands::build(&mut s.pool, &frame, &inv, &x);
        let hat_rows = s.eval(&[ch.i1, ch.i2, ch.divergence, ups], &points)?;
        let w = grid.rescaled_weights(&column(&hat_rows, 3));
        for (k, (name, base)) in [("i1", i1), ("i2", i2), ("divergence", div)].into_iter().enumerate() {
            let t: Vec<C64> = hat_rows.iter().zip(&w).map(|(r, w)| r[k] * w).collect();
            let hat = pairwise_sum_c(&t);
            rep.value(&format!("rescaled.{name}"), complex(hat), &on);
            let den = base.norm().max(tol.floor * measure);
            rep.at_most(&format!("scale.{name}"), (hat - base).norm() / den, tol.scale, &on);
        }
    }

    if let Some(cor) = polarized {
        let mut roots = cor.squares.to_vec();
        roots.push(cor.weighted);
        roots.extend(cor.residuals);
        let rows = s.eval(&roots, &points)?;
        let v = integrals(&grid, &rows, &[0, 1, 2, 3, 4]);
        let pol = v[2] - v[0] - v[1] - 2.0 * v[3];
        rep.at_most("polarization", pol.norm() / v[2].norm().max(1.0), tol.polarization, &on);
        let sol = max_abs(&rows, 5).max(max_abs(&rows, 6));
        rep.at_most("polarized.fields_solve", sol, tol.solution, &on);
        rep.at_most("polarized.product_solves", max_abs(&rows, 7), tol.solution_closure, &on);
        rep.value("polarized.weighted_integral", complex(v[4]), &on);
    }
    Ok(rep)
}

fn tangency(s: &mut Setup) -> Result<Report, InputError> {
    let mut rep = s.report(Command::Tangency);
    let tol = s.tol.clone();
    let x = s.required_field()?;
    let u = potential_from_field(&mut s.pool, &x, &s.frame);
    let grid = s.grid(s.cfg.grid)?;
    let on = format!("grid {}", s.cfg.grid.label());
    let rows = s.eval(&[u.value()], &grid.points())?;
    let vals = column(&rows, 0);

    let mut sweep = s.cfg.epsilon_sweep.clone();
    sweep.extend([s.cfg.epsilon, 1.0]);
    sweep.sort_by(f64::total_cmp);
    sweep.dedup();

    let mut table = Vec::new();
    let mut summaries = Vec::new();
    for &eps in &sweep {
        let t = tangency_classify(&vals, &grid.weights, eps);
        let ae = 1.0 - tol.almost_everywhere;
        table.push(json!({
            "epsilon": num(eps),
            "fraction": num(t.fraction),
            "strict_fraction": num(t.strict_fraction),
            "almost_everywhere": t.fraction >= ae,
            "strict_almost_everywhere": t.strict_fraction >= ae,
        }));
        summaries.push(t);
    }
    rep.value("sweep", Value::Array(table), &on);

    let one = summaries.iter().find(|t| t.epsilon == 1.0).expect("sweep contains 1");
    rep.at_most("predicate_equivalence", one.predicate_mismatches as f64, 0.0, &on);
    let mut frac_violations = 0;
    for w in summaries.windows(2) {
        frac_violations += (w[1].fraction < w[0].fraction) as usize;
        frac_violations += (w[1].strict_fraction < w[0].strict_fraction) as usize;
    }
    rep.at_most("monotone_fractions", frac_violations as f64, 0.0, &on);
    let mut point_violations = 0;
    for &v in &vals {
        for w in sweep.windows(2) {
            let (a, b) = (tangency_flags(v, w[0]), tangency_flags(v, w[1]));
            point_violations += (a.approx && !b.approx) as usize;
            point_violations += (a.strict && !b.strict) as usize;
        }
    }
    rep.at_most("monotone_pointwise", point_violations as f64, 0.0, &on);

    let at = summaries.iter().find(|t| t.epsilon == s.cfg.epsilon).expect("sweep contains epsilon");
    rep.value("strict_fraction", num(at.strict_fraction), &on);
    if let Some(want) = s.cfg.expect.strict_fraction {
        rep.at_most("strict_fraction", (at.strict_fraction - want).abs(), tol.fraction, &on);
    }
    Ok(rep)
}

/// One rung of a convergence ladder.
#[derive(Clone, Copy, Debug)]
pub struct Rung {
    pub n: usize,
    pub value: C64,
    /// `I_1` on the same grid, for quantities built from the closure.
    pub i1: Option<C64>,
    pub measure: f64,
}

/// Evaluates `quantity` on `n x n x n` grids along the ladder.
pub fn ladder(s: &mut Setup, quantity: Quantity, sizes: &[usize]) -> Result<Vec<Rung>, InputError> {
    let roots: Vec<Expr> = match quantity {
        Quantity::Measure => vec![s.pool.one()],
        _ => {
            let x = s.required_field()?;
            let c = ClosureIntegrands::build(&mut s.pool, &s.frame, &s.inv, &x);
            match quantity {
                Quantity::I1 => vec![c.i1],
                Quantity::I2 => vec![c.i2],
                Quantity::Closure => vec![c.i1, c.i2],
                _ => vec![c.divergence],
            }
        }
    };
    let tape = s.pool.compile(&roots);
    let mut out = Vec::new();
    for &n in sizes {
        let grid = s.grid(GridSpec { n_eta: n, n_xi: n })?;
        let points = grid.points();
        let rows = map_rows(&tape, &points, |r| r.to_vec())?;
        let v = integrals(&grid, &rows, &(0..roots.len()).collect::<Vec<_>>());
        let (value, i1) = match quantity {
            Quantity::Closure => (v[1] - CLOSURE_CONSTANT * v[0], Some(v[0])),
            Quantity::I1 => (v[0], Some(v[0])),
            _ => (v[0], None),
        };
        out.push(Rung {
            n,
            value,
            i1,
            measure: grid.total_measure(),
        });
    }
    Ok(out)
}

/// Successive differences and estimated orders along a ladder.
pub fn ladder_table(rungs: &[Rung]) -> Vec<(Option<f64>, Option<f64>)> {
    let mut out = Vec::with_capacity(rungs.len());
    for k in 0..rungs.len() {
        let diff = (k >= 1).then(|| (rungs[k].value - rungs[k - 1].value).norm());
        let order = (k >= 2).then(|| {
            let d0 = (rungs[k - 1].value - rungs[k - 2].value).norm();
            let d1 = diff.unwrap_or(f64::NAN);
            (d0 / d1).ln() / (rungs[k].n as f64 / rungs[k - 1].n as f64).ln()
        });
        out.push((diff, order));
    }
    out
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn convergence(s: &mut Setup) -> Result<Output, InputError> {
    let sizes = s.cfg.ladder.clone();
    let quantity = s.cfg.quantity;
    let rungs = ladder(s, quantity, &sizes)?;
    let table = ladder_table(&rungs);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["grid", "value_re", "value_im", "diff", "est_order"])?;
    for (r, (diff, order)) in rungs.iter().zip(&table) {
        w.write_record([
            format!("{0}x{0}x{0}", r.n),
            format!("{:e}", r.value.re),
            format!("{:e}", r.value.im),
            fmt_opt(*diff),
            fmt_opt(*order),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| InputError::Invalid(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    let pass = match s.cfg.expect.decreasing {
        Monotone::None => true,
        Monotone::Value => rungs.windows(2).all(|p| p[1].value.norm() < p[0].value.norm()),
        Monotone::Diff => table
            .windows(2)
            .filter_map(|p| Some((p[0].0?, p[1].0?)))
            .all(|(a, b)| b < a),
    };
    Ok(Output {
        text,
        pass,
        report: None,
    })
}
