//! Experiment configuration: one JSON document that fixes every instance
//! size, tolerance and the master seed.

use std::path::Path;

use polycalc_core::dilation::DilationOptions;
use polycalc_core::funcalc::Theorem51Options;
use polycalc_core::instances::generator_grid;
use polycalc_core::multivar::SimilarityOptions;
use polycalc_core::numerics::{c, DEFAULT_KRON_CAP};
use polycalc_core::polygonal::{GridSpec, PointSetE, UNIMODULAR_TOL};
use serde::{Deserialize, Serialize};

/// Invalid configuration, located by field path and (for syntax or type
/// errors) by line and column.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config field `{field}`{}: {message}", location(*.line, *.column))]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

fn location(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" (line {l}, column {c})"),
        _ => String::new(),
    }
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

/// The peripheral set `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ESpec {
    /// Points `e^{iθ}`, angles in radians.
    Angles(Vec<f64>),
    /// Points given as `[re, im]`.
    Points(Vec<[f64; 2]>),
    /// The `n`-th roots of unity rotated by `offset` radians.
    RootsOfUnity { n: usize, offset: f64 },
}

impl Default for ESpec {
    fn default() -> Self {
        ESpec::Angles(vec![0.0, 2.5])
    }
}

impl ESpec {
    pub fn build(&self) -> Result<PointSetE, ConfigError> {
        let built = match self {
            ESpec::Angles(a) => {
                if let Some(j) = a.iter().position(|x| !x.is_finite()) {
                    return Err(ConfigError::field(format!("e.angles[{j}]"), "angle must be finite"));
                }
                PointSetE::from_angles(a)
            }
            ESpec::Points(p) => {
                for (j, [re, im]) in p.iter().enumerate() {
                    let m = c(*re, *im).norm();
                    if !(m.is_finite() && (m - 1.0).abs() <= UNIMODULAR_TOL) {
                        return Err(ConfigError::field(
                            format!("e.points[{j}]"),
                            format!("point ({re}, {im}) is not unimodular (modulus {m})"),
                        ));
                    }
                }
                PointSetE::new(p.iter().map(|[re, im]| c(*re, *im)).collect())
            }
            ESpec::RootsOfUnity { n, offset } => {
                if *n == 0 {
                    return Err(ConfigError::field("e.roots_of_unity.n", "must be positive"));
                }
                PointSetE::roots_of_unity(*n, *offset)
            }
        };
        built.map_err(|err| ConfigError::field("e", err.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub max_dim: usize,
    pub kron_cap: usize,
    pub max_d: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_dim: 16,
            kron_cap: DEFAULT_KRON_CAP,
            max_d: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub random_sets: usize,
    pub max_points: usize,
    /// Minimum chordal distance between points of a random `E`.
    pub min_separation: f64,
    pub m_max: usize,
    /// Recursion vs partial fractions, relative to `max(1, Σ|β_i|)`.
    pub tol: f64,
    pub time_limit_s: f64,
    pub lemma34: Lemma34Config,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self {
            random_sets: 50,
            max_points: 5,
            min_separation: 0.1,
            m_max: 200,
            tol: 1e-12,
            time_limit_s: 1.0,
            lemma34: Lemma34Config::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma34Config {
    pub matrices: usize,
    pub max_dim: usize,
    pub cond_cap: f64,
    /// Target for `‖S_k(T)x − x‖/‖x‖`.
    pub tol: f64,
    pub k_cap: usize,
    /// Largest `k` in the `γ_{r,k}` boundedness check.
    pub gamma_k_max: usize,
    /// Block count and relative slack of the downward-trend test.
    pub trend_blocks: usize,
    pub trend_slack: f64,
}

impl Default for Lemma34Config {
    fn default() -> Self {
        Self {
            matrices: 25,
            max_dim: 10,
            cond_cap: 10.0,
            tol: 1e-8,
            k_cap: 1_000_000,
            gamma_k_max: 500,
            trend_blocks: 4,
            trend_slack: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub matrices: usize,
    pub max_dim: usize,
    pub cond_cap: f64,
    pub grid: GridSpec,
    pub tuples: usize,
    pub tuple_max_dim: usize,
    /// Pairwise commutators, relative to `max(1, ‖T_i‖‖T_j‖)`.
    pub commute_tol: f64,
    pub ergodic_instances: usize,
    pub ergodic_max_dim: usize,
    pub algebra_tol: f64,
    pub bicommutant_tol: f64,
    pub cesaro_length: usize,
    pub projection_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            matrices: 30,
            max_dim: 8,
            cond_cap: 10.0,
            grid: GridSpec::default(),
            tuples: 20,
            tuple_max_dim: 8,
            commute_tol: 1e-12,
            ergodic_instances: 100,
            ergodic_max_dim: 8,
            algebra_tol: 1e-10,
            bicommutant_tol: 1e-9,
            cesaro_length: 1 << 16,
            projection_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SquarefnConfig {
    pub instances: usize,
    pub max_dim: usize,
    pub cond_cap: f64,
    /// Unit vectors per constant estimate.
    pub trials: usize,
    pub tol: f64,
}

impl Default for SquarefnConfig {
    fn default() -> Self {
        Self {
            instances: 10,
            max_dim: 6,
            cond_cap: 5.0,
            trials: 16,
            tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DilateConfig {
    pub matrices: usize,
    pub max_dim: usize,
    pub cond_cap: f64,
    pub n_max: usize,
    pub tol: f64,
    pub unitary_tol: f64,
    /// Errors below this count as converged in the window-doubling test.
    pub noise_floor: f64,
    pub options: DilationOptions,
    pub schaffer: SchafferConfig,
    pub ando: AndoConfig,
    pub joint: JointConfig,
}

impl Default for DilateConfig {
    fn default() -> Self {
        Self {
            matrices: 25,
            max_dim: 8,
            cond_cap: 10.0,
            n_max: 20,
            tol: 1e-8,
            unitary_tol: 1e-12,
            noise_floor: 1e-12,
            options: DilationOptions::default(),
            schaffer: SchafferConfig::default(),
            ando: AndoConfig::default(),
            joint: JointConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchafferConfig {
    pub instances: usize,
    pub max_dim: usize,
    pub budget: usize,
    pub tol: f64,
}

impl Default for SchafferConfig {
    fn default() -> Self {
        Self {
            instances: 10,
            max_dim: 6,
            budget: 12,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AndoConfig {
    pub pairs: usize,
    pub max_dim: usize,
    pub budget: usize,
    pub tol: f64,
    pub commute_tol: f64,
}

impl Default for AndoConfig {
    fn default() -> Self {
        Self {
            pairs: 12,
            max_dim: 4,
            budget: 8,
            tol: 1e-8,
            commute_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointConfig {
    pub tuples: usize,
    pub d: usize,
    pub max_dim: usize,
    pub budget: usize,
    pub tol: f64,
    /// Spectral radius of the non-peripheral part of the leading factors.
    pub lead_radius: f64,
    pub tail_radius: f64,
    pub cond_cap: f64,
}

impl Default for JointConfig {
    fn default() -> Self {
        Self {
            tuples: 4,
            d: 3,
            max_dim: 3,
            budget: 6,
            tol: 1e-7,
            lead_radius: 0.3,
            tail_radius: 0.9,
            cond_cap: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VnConfig {
    pub polys_per_tuple: usize,
    pub deg_max: usize,
    /// Tuples per family: Ritt_E singles, contractions, pairs, triples.
    pub ritt_singles: usize,
    pub contractions: usize,
    pub pairs: usize,
    pub triples: usize,
    pub max_dim: usize,
    pub cond_cap: f64,
    pub lead_radius: f64,
    pub tail_radius: f64,
    /// Torus grid points per variable for `d = 1, 2, 3`.
    pub torus_grid: [usize; 3],
    /// Allowed excess over `‖J‖‖Q‖`.
    pub slack: f64,
    /// Allowed excess over 1 for single contractions.
    pub contraction_slack: f64,
}

impl Default for VnConfig {
    fn default() -> Self {
        Self {
            polys_per_tuple: 200,
            deg_max: 8,
            ritt_singles: 4,
            contractions: 4,
            pairs: 4,
            triples: 2,
            max_dim: 4,
            cond_cap: 3.0,
            lead_radius: 0.1,
            tail_radius: 0.9,
            torus_grid: [4096, 256, 48],
            slack: 1e-6,
            contraction_slack: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub tuples: usize,
    pub max_dim: usize,
    pub cond_cap: f64,
    pub margin_tol: f64,
    pub time_limit_s: f64,
    pub options: SimilarityOptions,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            tuples: 25,
            max_dim: 6,
            cond_cap: 30.0,
            margin_tol: 1e-8,
            time_limit_s: 30.0,
            options: SimilarityOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuncalcConfig {
    pub instances_1d: usize,
    pub max_dim_1d: usize,
    pub degree_1d: usize,
    pub tol_1d: f64,
    pub instances_2d: usize,
    pub dim_2d: usize,
    pub degree_2d: usize,
    pub tol_2d: f64,
    pub cond_cap: f64,
    pub nodes_per_panel: usize,
    pub winding_points: usize,
    pub winding_tol: f64,
    pub theorem51: Theorem51Config,
}

impl Default for FuncalcConfig {
    fn default() -> Self {
        Self {
            instances_1d: 10,
            max_dim_1d: 8,
            degree_1d: 20,
            tol_1d: 1e-8,
            instances_2d: 5,
            dim_2d: 4,
            degree_2d: 8,
            tol_2d: 1e-6,
            cond_cap: 5.0,
            nodes_per_panel: 48,
            winding_points: 50,
            winding_tol: 1e-10,
            theorem51: Theorem51Config::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theorem51Config {
    pub tuples: usize,
    pub d: usize,
    pub dim: usize,
    pub peripheral_count: usize,
    pub cond_cap: f64,
    pub grid: GridSpec,
    pub options: Theorem51Options,
}

impl Default for Theorem51Config {
    fn default() -> Self {
        Self {
            tuples: 10,
            d: 2,
            dim: 3,
            peripheral_count: 1,
            cond_cap: 4.0,
            grid: generator_grid(),
            options: Theorem51Options::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub time_limit_s: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { time_limit_s: 300.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub e: ESpec,
    pub r: f64,
    pub caps: Caps,
    pub coeffs: CoeffsConfig,
    pub classify: ClassifyConfig,
    pub squarefn: SquarefnConfig,
    pub dilate: DilateConfig,
    pub vn: VnConfig,
    pub similarity: SimilarityConfig,
    pub funcalc: FuncalcConfig,
    pub suite: SuiteConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            e: ESpec::default(),
            r: 0.5,
            caps: Caps::default(),
            coeffs: CoeffsConfig::default(),
            classify: ClassifyConfig::default(),
            squarefn: SquarefnConfig::default(),
            dilate: DilateConfig::default(),
            vn: VnConfig::default(),
            similarity: SimilarityConfig::default(),
            funcalc: FuncalcConfig::default(),
            suite: SuiteConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            ConfigError {
                field: if path == "." { "<root>".into() } else { path },
                line: Some(inner.line()),
                column: Some(inner.column()),
                message: inner.to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| ConfigError::field("<file>", format!("{}: {err}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn point_set(&self) -> Result<PointSetE, ConfigError> {
        self.e.build()
    }

    /// Range and cap checks; the error names the first offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = self.point_set()?;
        let caps = &self.caps;
        let mut v = Validator::default();
        v.open_unit("r", self.r);
        v.at_least("caps.max_dim", caps.max_dim, 1);
        v.at_most("caps.max_dim", caps.max_dim, 16);
        v.at_least("caps.kron_cap", caps.kron_cap, 1);
        v.at_least("caps.max_d", caps.max_d, 1);
        v.at_most("caps.max_d", caps.max_d, 3);

        let co = &self.coeffs;
        v.at_least("coeffs.max_points", co.max_points, 1);
        v.positive("coeffs.min_separation", co.min_separation);
        v.positive("coeffs.tol", co.tol);
        v.positive("coeffs.time_limit_s", co.time_limit_s);
        let l = &co.lemma34;
        v.dim("coeffs.lemma34.max_dim", l.max_dim, caps);
        v.cond("coeffs.lemma34.cond_cap", l.cond_cap);
        v.positive("coeffs.lemma34.tol", l.tol);
        v.at_least("coeffs.lemma34.k_cap", l.k_cap, e.len());
        v.at_least("coeffs.lemma34.trend_blocks", l.trend_blocks, 1);
        v.non_negative("coeffs.lemma34.trend_slack", l.trend_slack);

        let cl = &self.classify;
        v.dim("classify.max_dim", cl.max_dim, caps);
        v.dim("classify.tuple_max_dim", cl.tuple_max_dim, caps);
        v.dim("classify.ergodic_max_dim", cl.ergodic_max_dim, caps);
        v.cond("classify.cond_cap", cl.cond_cap);
        v.grid("classify.grid", &cl.grid);
        v.positive("classify.commute_tol", cl.commute_tol);
        v.positive("classify.algebra_tol", cl.algebra_tol);
        v.positive("classify.bicommutant_tol", cl.bicommutant_tol);
        v.at_least("classify.cesaro_length", cl.cesaro_length, 1);
        v.positive("classify.projection_tol", cl.projection_tol);

        let sq = &self.squarefn;
        v.dim("squarefn.max_dim", sq.max_dim, caps);
        v.cond("squarefn.cond_cap", sq.cond_cap);
        v.positive("squarefn.tol", sq.tol);

        let di = &self.dilate;
        v.dim("dilate.max_dim", di.max_dim, caps);
        v.cond("dilate.cond_cap", di.cond_cap);
        v.positive("dilate.tol", di.tol);
        v.positive("dilate.unitary_tol", di.unitary_tol);
        v.non_negative("dilate.noise_floor", di.noise_floor);
        v.positive("dilate.options.tol", di.options.tol);
        v.at_least("dilate.options.k_cap", di.options.k_cap, e.len());
        v.dim("dilate.schaffer.max_dim", di.schaffer.max_dim, caps);
        v.positive("dilate.schaffer.tol", di.schaffer.tol);
        v.dim("dilate.ando.max_dim", di.ando.max_dim, caps);
        v.positive("dilate.ando.tol", di.ando.tol);
        v.positive("dilate.ando.commute_tol", di.ando.commute_tol);
        let jo = &di.joint;
        v.at_least("dilate.joint.d", jo.d, 3);
        v.at_most("dilate.joint.d", jo.d, caps.max_d);
        v.at_least("dilate.joint.max_dim", jo.max_dim, 2);
        v.dim("dilate.joint.max_dim", jo.max_dim, caps);
        v.positive("dilate.joint.tol", jo.tol);
        v.radius("dilate.joint.lead_radius", jo.lead_radius, self.r);
        v.radius("dilate.joint.tail_radius", jo.tail_radius, 1.0);
        v.cond("dilate.joint.cond_cap", jo.cond_cap);

        let vn = &self.vn;
        v.at_least("vn.deg_max", vn.deg_max, 1);
        v.dim("vn.max_dim", vn.max_dim, caps);
        v.at_least("vn.max_dim", vn.max_dim, 2);
        v.cond("vn.cond_cap", vn.cond_cap);
        v.radius("vn.lead_radius", vn.lead_radius, self.r);
        v.radius("vn.tail_radius", vn.tail_radius, 1.0);
        for (k, g) in vn.torus_grid.iter().enumerate() {
            v.at_least(&format!("vn.torus_grid[{k}]"), *g, 4);
        }
        if vn.triples > 0 {
            v.at_least("caps.max_d", caps.max_d, 3);
        }
        if vn.pairs > 0 {
            v.at_least("caps.max_d", caps.max_d, 2);
        }
        v.non_negative("vn.slack", vn.slack);
        v.non_negative("vn.contraction_slack", vn.contraction_slack);

        let si = &self.similarity;
        v.dim("similarity.max_dim", si.max_dim, caps);
        v.cond("similarity.cond_cap", si.cond_cap);
        v.positive("similarity.margin_tol", si.margin_tol);
        v.positive("similarity.time_limit_s", si.time_limit_s);
        v.positive("similarity.options.eps", si.options.eps);

        let fu = &self.funcalc;
        v.dim("funcalc.max_dim_1d", fu.max_dim_1d, caps);
        v.dim("funcalc.dim_2d", fu.dim_2d, caps);
        v.at_least("funcalc.degree_1d", fu.degree_1d, 1);
        v.at_least("funcalc.degree_2d", fu.degree_2d, 1);
        v.positive("funcalc.tol_1d", fu.tol_1d);
        v.positive("funcalc.tol_2d", fu.tol_2d);
        v.cond("funcalc.cond_cap", fu.cond_cap);
        v.at_least("funcalc.nodes_per_panel", fu.nodes_per_panel, 2);
        v.positive("funcalc.winding_tol", fu.winding_tol);
        if fu.instances_2d > 0 {
            v.at_least("caps.max_d", caps.max_d, 2);
        }
        let th = &fu.theorem51;
        v.at_least("funcalc.theorem51.d", th.d, 1);
        v.at_most("funcalc.theorem51.d", th.d, caps.max_d);
        v.dim("funcalc.theorem51.dim", th.dim, caps);
        v.at_most("funcalc.theorem51.peripheral_count", th.peripheral_count, th.dim.min(e.len()));
        v.cond("funcalc.theorem51.cond_cap", th.cond_cap);
        v.grid("funcalc.theorem51.grid", &th.grid);
        v.at_least("funcalc.theorem51.options.deg_max", th.options.deg_max, 2);
        v.at_least("funcalc.theorem51.options.samples_per_degree", th.options.samples_per_degree, 1);
        v.open_unit("funcalc.theorem51.options.alpha", th.options.alpha);

        v.positive("suite.time_limit_s", self.suite.time_limit_s);
        v.finish()
    }
}

#[derive(Default)]
struct Validator {
    first: Option<ConfigError>,
}

impl Validator {
    fn fail(&mut self, field: &str, message: String) {
        if self.first.is_none() {
            self.first = Some(ConfigError::field(field, message));
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        self.first.map_or(Ok(()), Err)
    }

    fn positive(&mut self, field: &str, x: f64) {
        if !(x.is_finite() && x > 0.0) {
            self.fail(field, format!("must be positive and finite, got {x}"));
        }
    }

    fn non_negative(&mut self, field: &str, x: f64) {
        if !(x.is_finite() && x >= 0.0) {
            self.fail(field, format!("must be non-negative and finite, got {x}"));
        }
    }

    fn open_unit(&mut self, field: &str, x: f64) {
        if !(x > 0.0 && x < 1.0) {
            self.fail(field, format!("must lie in (0, 1), got {x}"));
        }
    }

    fn radius(&mut self, field: &str, x: f64, max: f64) {
        if !(x >= 0.0 && x < max) {
            self.fail(field, format!("must lie in [0, {max}), got {x}"));
        }
    }

    fn cond(&mut self, field: &str, x: f64) {
        if !(x.is_finite() && x >= 1.0) {
            self.fail(field, format!("condition cap must be at least 1, got {x}"));
        }
    }

    fn at_least(&mut self, field: &str, x: usize, min: usize) {
        if x < min {
            self.fail(field, format!("must be at least {min}, got {x}"));
        }
    }

    fn at_most(&mut self, field: &str, x: usize, max: usize) {
        if x > max {
            self.fail(field, format!("must be at most {max}, got {x}"));
        }
    }

    fn dim(&mut self, field: &str, x: usize, caps: &Caps) {
        self.at_least(field, x, 1);
        if x > caps.max_dim {
            self.fail(field, format!("dimension {x} exceeds caps.max_dim = {}", caps.max_dim));
        }
    }

    fn grid(&mut self, field: &str, g: &GridSpec) {
        self.at_least(&format!("{field}.radii"), g.radii, 2);
        self.at_least(&format!("{field}.angles"), g.angles, 4);
        self.at_least(&format!("{field}.approach_points"), g.approach_points, 2);
        self.open_unit(&format!("{field}.approach_min"), g.approach_min);
        self.open_unit(&format!("{field}.min_radial_offset"), g.min_radial_offset);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), cfg);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn non_unimodular_point_is_named() {
        let err = ExperimentConfig::from_json(r#"{"e": {"points": [[1, 0], [0.5, 0.5]]}}"#).unwrap_err();
        assert_eq!(err.field, "e.points[1]");
        assert!(err.message.contains("not unimodular"));
    }

    #[test]
    fn type_errors_carry_path_and_line() {
        let err = ExperimentConfig::from_json("{\n  \"dilate\": {\n    \"n_max\": \"twenty\"\n  }\n}").unwrap_err();
        assert_eq!(err.field, "dilate.n_max");
        assert_eq!(err.line, Some(3));
        let err = ExperimentConfig::from_json(r#"{"vn": {"degree": 3}}"#).unwrap_err();
        assert_eq!(err.field, "vn.degree");
    }

    #[test]
    fn caps_are_enforced() {
        let err = ExperimentConfig::from_json(r#"{"dilate": {"max_dim": 17}}"#).unwrap_err();
        assert_eq!(err.field, "dilate.max_dim");
        let err = ExperimentConfig::from_json(r#"{"caps": {"max_d": 4}}"#).unwrap_err();
        assert_eq!(err.field, "caps.max_d");
        let err = ExperimentConfig::from_json(r#"{"r": 1.5}"#).unwrap_err();
        assert_eq!(err.field, "r");
    }
}
