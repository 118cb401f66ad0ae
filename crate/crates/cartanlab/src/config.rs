//! Job configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::InputError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Real defining function, negative inside.
    pub rho: String,
    /// `[re1, im1, re2, im2]`; the surface must be star-shaped about it.
    #[serde(default)]
    pub center: [f64; 4],
    /// `[a1, a2]` of `a1 d/dz1 + a2 d/dz2`.
    #[serde(default)]
    pub vector_field: Option<[String; 2]>,
    /// Second field for the polarized closure identity.
    #[serde(default)]
    pub second_field: Option<[String; 2]>,
    /// Anti-CR multiplier for the polarized identity; defaults to `1`.
    #[serde(default)]
    pub anti_cr: Option<String>,
    /// Real function for the change of scale checks.
    #[serde(default)]
    pub upsilon: Option<String>,
    /// Free entry of the prolonged section (default `0`).
    #[serde(default)]
    pub nu: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_sweep")]
    pub epsilon_sweep: Vec<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub samples: SampleSpec,
    /// Test functions standing in for tensor components in the
    /// commutator checks.
    #[serde(default = "default_test_functions")]
    pub test_functions: Vec<String>,
    /// Grid sizes `n` (each run on `n x n x n`) for `convergence`.
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    #[serde(default)]
    pub quantity: Quantity,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub debug: DebugFlags,
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_sweep() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
}

fn default_ladder() -> Vec<usize> {
    vec![8, 16, 32]
}

fn default_test_functions() -> Vec<String> {
    [
        "z1 + zb2^2 + 0.3*z1*zb1",
        "zb1^3 - 2*i*z2",
        "1/(2 + z1*zb1)",
    ]
    .map(String::from)
    .to_vec()
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_eta: usize,
    pub n_xi: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_eta: 16, n_xi: 16 }
    }
}

impl GridSpec {
    /// Parses `NxM`.
    pub fn parse(s: &str) -> Result<Self, InputError> {
        let bad = || InputError::Invalid(format!("grid must look like 32x32, got {s:?}"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok(GridSpec {
            n_eta: a.trim().parse().map_err(|_| bad())?,
            n_xi: b.trim().parse().map_err(|_| bad())?,
        })
    }

    pub fn label(&self) -> String {
        format!("{}x{}x{}", self.n_eta, self.n_xi, self.n_xi)
    }
}

/// Random boundary points for pointwise identity checks.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub points: usize,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { points: 200, seed: 1 }
    }
}

impl SampleSpec {
    pub fn label(&self) -> String {
        format!("{} random boundary points (seed {})", self.points, self.seed)
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `int 1` against `theta ^ d theta`.
    #[default]
    Measure,
    /// `int u^2 |Q|^2`.
    I1,
    /// `int tr(s (nabla^1bar kappa_1bar0) s)`.
    I2,
    /// `I_2 - c I_1`.
    Closure,
    /// Integral of the total divergence `nabla^1bar tr(s kappa_1bar0 s)`.
    Divergence,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    /// `|value|` decreases along the ladder.
    Value,
    /// Successive differences decrease.
    Diff,
    #[default]
    None,
}

/// Optional assertions turned into report checks.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// Flat model: `A_11`, `Q_11`, `O` vanish and `R` is constant.
    #[serde(default)]
    pub flat: Option<bool>,
    /// Locally spherical: `Q_11` vanishes.
    #[serde(default)]
    pub spherical: Option<bool>,
    /// Expected strict tangency fraction at `epsilon`.
    #[serde(default)]
    pub strict_fraction: Option<f64>,
    #[serde(default)]
    pub decreasing: Monotone,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DebugFlags {
    /// Negates the torsion after the frame is built (negative control).
    #[serde(default)]
    pub flip_torsion: bool,
}

/// Check tolerances. Residual tolerances are multiplied by `--tol-scale`;
/// fractions and thresholds are not.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rho: f64,
    pub frame: f64,
    pub flat: f64,
    pub r_rel_std: f64,
    pub spherical: f64,
    pub commutator: f64,
    pub bianchi: f64,
    pub im_obstruction: f64,
    pub metric: f64,
    pub kappa: f64,
    pub kappa_bianchi: f64,
    pub kappa_divergence: f64,
    pub automorphism: f64,
    pub round_trip: f64,
    pub cr_defect: f64,
    pub lie: f64,
    pub prolongation: f64,
    pub solution: f64,
    pub closure: f64,
    pub vanishing: f64,
    pub product: f64,
    pub trace: f64,
    pub z_annihilation: f64,
    pub polarization: f64,
    pub solution_closure: f64,
    pub scale: f64,
    /// Absolute floor under the denominators of relative checks.
    pub floor: f64,
    pub pointwise_fraction: f64,
    pub fraction: f64,
    pub almost_everywhere: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rho: 1e-11,
            frame: 1e-9,
            flat: 1e-7,
            r_rel_std: 1e-9,
            spherical: 1e-8,
            commutator: 1e-8,
            bianchi: 1e-7,
            im_obstruction: 1e-6,
            metric: 1e-8,
            kappa: 1e-7,
            kappa_bianchi: 1e-6,
            kappa_divergence: 1e-6,
            automorphism: 1e-8,
            round_trip: 1e-8,
            cr_defect: 1e-7,
            lie: 1e-7,
            prolongation: 1e-6,
            solution: 1e-6,
            closure: 1e-3,
            vanishing: 1e-9,
            product: 1e-6,
            trace: 1e-6,
            z_annihilation: 1e-10,
            polarization: 1e-10,
            solution_closure: 1e-6,
            scale: 1e-6,
            floor: 1e-9,
            pointwise_fraction: 0.999,
            fraction: 0.01,
            almost_everywhere: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, k: f64) -> Self {
        let mut t = self.clone();
        for x in [
            &mut t.rho,
            &mut t.frame,
            &mut t.flat,
            &mut t.r_rel_std,
            &mut t.spherical,
            &mut t.commutator,
            &mut t.bianchi,
            &mut t.im_obstruction,
            &mut t.metric,
            &mut t.kappa,
            &mut t.kappa_bianchi,
            &mut t.kappa_divergence,
            &mut t.automorphism,
            &mut t.round_trip,
            &mut t.cr_defect,
            &mut t.lie,
            &mut t.prolongation,
            &mut t.solution,
            &mut t.closure,
            &mut t.vanishing,
            &mut t.product,
            &mut t.trace,
            &mut t.z_annihilation,
            &mut t.polarization,
            &mut t.solution_closure,
            &mut t.scale,
        ] {
            *x *= k;
        }
        t
    }
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let cfg: JobConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let bad = |m: String| Err(InputError::Invalid(m));
        let bad_eps = |e: f64| e.is_nan() || e < 0.0;
        if bad_eps(self.epsilon) || self.epsilon_sweep.iter().any(|&e| bad_eps(e)) {
            return bad("epsilon values must be >= 0".into());
        }
        if self.grid.n_eta < 8 || self.grid.n_xi < 8 {
            return bad(format!("grid sizes must be >= 8 (got {})", self.grid.label()));
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|&n| n < 8) {
            return bad("ladder must be non-empty with sizes >= 8".into());
        }
        if self.samples.points == 0 {
            return bad("samples.points must be positive".into());
        }
        if self.center.iter().any(|x| !x.is_finite()) {
            return bad("center must be finite".into());
        }
        if self.test_functions.is_empty() {
            return bad("test_functions must not be empty".into());
        }
        Ok(())
    }
}
