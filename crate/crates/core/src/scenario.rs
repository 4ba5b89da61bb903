//! Scenario configuration files.
//!
//! A scenario is a TOML document with typed sections; unknown keys are
//! rejected. Indices (particles, `B` triplets) are 0-based. `--set` style
//! overrides are applied to the parsed document before it is checked, so they
//! go through the same validation as the file itself.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::chain::{fput_alpha, Boundary, ChainParams, ForcingSpec, QuadraticForce, SampledTable, Signal, Sinusoid};
use crate::dual::{BaseProvenance, BaseState, ProblemSpec, ScaleParams};
use crate::error::{Error, Result};
use crate::io::parse_trajectory;
use crate::periodic::PeriodicSpec;
use crate::primal::{integrate_primal, Method, TimeGrid, Trajectory};
use crate::solver::{SolveOptions, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    DualSolve,
    Periodic,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::DualSolve => "dual-solve",
            Mode::Periodic => "periodic",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Mode used by `run`; the mode subcommands override it.
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Seed for randomized perturbation recipes.
    #[serde(default)]
    pub seed: u64,
    pub chain: ChainSection,
    #[serde(default)]
    pub forcing: Vec<ForcingEntry>,
    pub grid: GridSection,
    #[serde(default)]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub scales: ScalesSection,
    #[serde(default)]
    pub base: BaseRecipe,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub primal: PrimalSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub n: usize,
    pub mass: f64,
    #[serde(default)]
    pub damping: f64,
    pub force: ForceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceSection {
    /// `c` has length n, `a` is row-major n x n, `b` lists `[j, r, s, value]`
    /// entries of `B_jrs`, symmetrized in `(r, s)`.
    Explicit {
        #[serde(default)]
        c: Option<Vec<f64>>,
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<(usize, usize, usize, f64)>,
    },
    FputAlpha {
        alpha: f64,
        #[serde(default = "fixed_ends")]
        boundary: Boundary,
    },
}

fn fixed_ends() -> Boundary {
    Boundary::FixedEnds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingEntry {
    pub index: usize,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub sinusoids: Vec<Sinusoid>,
    #[serde(default)]
    pub table: Option<SampledTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_final: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesSection {
    #[serde(default = "one")]
    pub c_x: f64,
    #[serde(default = "one")]
    pub c_v: f64,
    /// Keep the Jacobian at the origin instead of re-expanding about the base.
    #[serde(default)]
    pub freeze_a: bool,
}

fn one() -> f64 {
    1.0
}

impl Default for ScalesSection {
    fn default() -> Self {
        Self {
            c_x: 1.0,
            c_v: 1.0,
            freeze_a: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseRecipe {
    Zero {
        #[serde(default)]
        perturbation: Option<Perturbation>,
    },
    Constant {
        x: Vec<f64>,
        v: Vec<f64>,
        #[serde(default)]
        perturbation: Option<Perturbation>,
    },
    /// Direct integration from the initial data on a grid `refine` times
    /// finer, sampled at the scenario grid.
    PrimalSolve {
        #[serde(default = "rk4")]
        method: Method,
        #[serde(default = "ten")]
        refine: usize,
        #[serde(default)]
        perturbation: Option<Perturbation>,
    },
    /// Trajectory file in the output format; relative paths are resolved
    /// against the config file's directory.
    Table {
        path: PathBuf,
        #[serde(default)]
        perturbation: Option<Perturbation>,
    },
}

fn rk4() -> Method {
    Method::Rk4
}

fn ten() -> usize {
    10
}

impl Default for BaseRecipe {
    fn default() -> Self {
        BaseRecipe::Zero { perturbation: None }
    }
}

impl BaseRecipe {
    pub fn perturbation(&self) -> Option<&Perturbation> {
        match self {
            BaseRecipe::Zero { perturbation }
            | BaseRecipe::Constant { perturbation, .. }
            | BaseRecipe::PrimalSolve { perturbation, .. }
            | BaseRecipe::Table { perturbation, .. } => perturbation.as_ref(),
        }
    }
}

/// Added to the base positions; the velocities receive its time derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// `amplitude * sin(omega t)` on every component.
    Sine { amplitude: f64, omega: f64 },
    /// Random trigonometric polynomial in the harmonics of `2 pi / T`, scaled
    /// so that each component stays within `amplitude`. Drawn from `seed`.
    SmoothNoise {
        amplitude: f64,
        #[serde(default = "four")]
        modes: usize,
    },
}

fn four() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
    #[serde(default = "damped_newton")]
    pub step_control: StepControl,
}

fn max_iterations() -> usize {
    SolveOptions::default().max_iterations
}

fn tolerance() -> f64 {
    SolveOptions::default().tolerance
}

fn damped_newton() -> StepControl {
    StepControl::DampedNewton
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            max_iterations: max_iterations(),
            tolerance: tolerance(),
            step_control: damped_newton(),
        }
    }
}

/// Direct integration used by `simulate` and as the `verify` oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimalSection {
    #[serde(default = "rk4")]
    pub method: Method,
    #[serde(default = "ten")]
    pub refine: usize,
}

impl Default for PrimalSection {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            refine: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// Applies `key.path=value` to a parsed document. The value is read as a TOML
/// value when possible and as a bare string otherwise; numeric path segments
/// index arrays.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("value = {raw}")) {
        Ok(mut t) => t.remove("value").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let mut root = toml::Value::Table(std::mem::take(doc));
    let res = set_path(&mut root, &parts, value, key);
    if let toml::Value::Table(t) = root {
        *doc = t;
    }
    res
}

fn set_path(node: &mut toml::Value, parts: &[&str], value: toml::Value, key: &str) -> Result<()> {
    let (head, rest) = parts.split_first().unwrap();
    let child = match node {
        toml::Value::Table(t) => {
            if rest.is_empty() {
                t.insert(head.to_string(), value);
                return Ok(());
            }
            t.entry(head.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        }
        toml::Value::Array(items) => {
            let idx: usize = head
                .parse()
                .map_err(|_| Error::Config(format!("override {key:?}: {head} is not an array index")))?;
            let item = items
                .get_mut(idx)
                .ok_or_else(|| Error::Config(format!("override {key:?}: index {idx} out of range")))?;
            if rest.is_empty() {
                *item = value;
                return Ok(());
            }
            item
        }
        _ => return Err(Error::Config(format!("override {key:?}: {head} is inside a scalar"))),
    };
    set_path(child, rest, value, key)
}

impl ScenarioConfig {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }
}

/// A validated scenario: the configuration plus the objects built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: ScenarioConfig,
    pub params: ChainParams,
    pub grid: TimeGrid,
    pub x0: DVector<f64>,
    pub v0: DVector<f64>,
    pub scales: ScaleParams,
    pub options: SolveOptions,
    /// Contents of a tabulated base, loaded eagerly so that it is hashed.
    base_table: Option<Trajectory>,
    base_table_digest: Option<String>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn build_force(n: usize, section: &ForceSection) -> Result<QuadraticForce> {
    match section {
        ForceSection::Explicit { c, a, b } => {
            let c = match c {
                Some(c) => {
                    crate::error::check_len("chain.force.c", n, c.len())?;
                    DVector::from_column_slice(c)
                }
                None => DVector::zeros(n),
            };
            crate::error::check_len("chain.force.a", n * n, a.len())?;
            let a = DMatrix::from_row_slice(n, n, a);
            QuadraticForce::from_triplets(c, a, b)
        }
        ForceSection::FputAlpha { alpha, boundary } => fput_alpha(n, *alpha, *boundary),
    }
}

fn build_forcing(n: usize, entries: &[ForcingEntry]) -> Result<ForcingSpec> {
    let mut spec = ForcingSpec::zero(n);
    let mut seen = vec![false; n];
    for e in entries {
        if e.index >= n {
            return Err(invalid(format!("forcing index {} out of range for n = {n}", e.index)));
        }
        if std::mem::replace(&mut seen[e.index], true) {
            return Err(invalid(format!("forcing index {} given twice", e.index)));
        }
        spec.signals[e.index] = Signal {
            constant: e.constant,
            sinusoids: e.sinusoids.clone(),
            table: e.table.clone(),
        };
    }
    Ok(spec)
}

fn vector(what: &'static str, n: usize, v: &[f64]) -> Result<DVector<f64>> {
    crate::error::check_len(what, n, v.len())?;
    Ok(DVector::from_column_slice(v))
}

impl Scenario {
    /// Validates `config`. `dir` resolves relative paths inside it.
    pub fn new(name: impl Into<String>, config: ScenarioConfig, dir: &Path) -> Result<Self> {
        let n = config.chain.n;
        if n == 0 {
            return Err(invalid("chain.n must be at least 1"));
        }
        let force = build_force(n, &config.chain.force)?;
        let forcing = build_forcing(n, &config.forcing)?;
        let params = ChainParams::new(config.chain.mass, config.chain.damping, force, forcing)?;
        let grid = TimeGrid::new(config.grid.t_final, config.grid.intervals)?;
        let (x0, v0) = match &config.initial {
            Some(init) => (vector("initial.x", n, &init.x)?, vector("initial.v", n, &init.v)?),
            None => (DVector::zeros(n), DVector::zeros(n)),
        };
        let scales = ScaleParams::new(config.scales.c_x, config.scales.c_v)?;
        let options = SolveOptions {
            max_iterations: config.solver.max_iterations,
            tolerance: config.solver.tolerance,
            step_control: config.solver.step_control,
            initial_guess: None,
        };
        options.validate()?;
        if config.primal.refine == 0 {
            return Err(invalid("primal.refine must be at least 1"));
        }
        let (mut base_table, mut base_table_digest) = (None, None);
        match &config.base {
            BaseRecipe::Constant { x, v, .. } => {
                vector("base.x", n, x)?;
                vector("base.v", n, v)?;
            }
            BaseRecipe::PrimalSolve { refine, .. } if *refine == 0 => {
                return Err(invalid("base.refine must be at least 1"));
            }
            BaseRecipe::Table { path, .. } => {
                let path = dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("base table {}: {e}", path.display())))?;
                let traj = parse_trajectory(&text)?;
                crate::error::check_len("base table dimension", n, traj.n())?;
                if traj.grid != grid {
                    return Err(invalid("base table grid differs from the scenario grid"));
                }
                base_table_digest = Some(hex::encode(Sha256::digest(text.as_bytes())));
                base_table = Some(traj);
            }
            _ => {}
        }
        if let Some(p) = config.base.perturbation() {
            let (amplitude, ok) = match p {
                Perturbation::Sine { amplitude, omega } => (*amplitude, omega.is_finite()),
                Perturbation::SmoothNoise { amplitude, modes } => (*amplitude, *modes >= 1),
            };
            if !amplitude.is_finite() || !ok {
                return Err(invalid("base.perturbation parameters are invalid"));
            }
        }
        Ok(Self {
            name: name.into(),
            config,
            params,
            grid,
            x0,
            v0,
            scales,
            options,
            base_table,
            base_table_digest,
        })
    }

    /// Reads a scenario file, applying overrides first.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        let config = ScenarioConfig::parse(&text, overrides)?;
        Self::new(name, config, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_preset(name: &str, overrides: &[String]) -> Result<Self> {
        let preset = scenario_presets()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
        let config = ScenarioConfig::parse(preset.text, overrides)?;
        Self::new(name, config, Path::new("."))
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    /// Direct integration from the initial data, `refine` times finer than the
    /// scenario grid, sampled at the grid nodes.
    pub fn direct_solve(&self, method: Method, refine: usize) -> Result<Trajectory> {
        self.params.forcing.check_covers(self.grid.t_final())?;
        integrate_primal(&self.params, &self.x0, &self.v0, self.grid.refined(refine), method)?.subsample(refine)
    }

    /// Trajectory produced by `simulate` and used as the `verify` oracle.
    pub fn primal_solve(&self) -> Result<Trajectory> {
        self.direct_solve(self.config.primal.method, self.config.primal.refine)
    }

    pub fn base(&self) -> Result<BaseState> {
        let n = self.n();
        let mut base = match &self.config.base {
            BaseRecipe::Zero { .. } => BaseState::zero(self.grid, n),
            BaseRecipe::Constant { x, v, .. } => {
                BaseState::constant(self.grid, DVector::from_column_slice(x), DVector::from_column_slice(v))?
            }
            BaseRecipe::PrimalSolve { method, refine, .. } => {
                BaseState::from_trajectory(&self.direct_solve(*method, *refine)?, BaseProvenance::PrimalSolve)
            }
            BaseRecipe::Table { .. } => {
                BaseState::from_trajectory(self.base_table.as_ref().unwrap(), BaseProvenance::UserTable)
            }
        };
        if let Some(p) = self.config.base.perturbation() {
            let (dx, dv) = perturbation(p, self.grid, n, self.config.seed);
            for k in 0..self.grid.nodes() {
                base.xbar[k] += &dx[k];
                base.vbar[k] += &dv[k];
            }
        }
        Ok(base)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        Ok(ProblemSpec::new(self.params.clone(), self.scales, self.base()?, self.x0.clone(), self.v0.clone())?
            .with_frozen_a(self.config.scales.freeze_a))
    }

    /// Periodic problem over the scenario grid. A base that closes up to
    /// round-off is made exactly periodic.
    pub fn periodic(&self) -> Result<PeriodicSpec> {
        if matches!(self.config.base, BaseRecipe::PrimalSolve { .. }) {
            return Err(invalid("base kind primal_solve is not available in periodic mode"));
        }
        let mut base = self.base()?;
        let m = self.grid.intervals();
        let scale = base.xbar.iter().chain(&base.vbar).map(|v| v.amax()).fold(1.0, f64::max);
        let defect = (&base.xbar[m] - &base.xbar[0]).amax().max((&base.vbar[m] - &base.vbar[0]).amax());
        if defect <= 1e-9 * scale {
            base.xbar[m] = base.xbar[0].clone();
            base.vbar[m] = base.vbar[0].clone();
        }
        Ok(PeriodicSpec::new(self.params.clone(), self.scales, base)?.with_frozen_a(self.config.scales.freeze_a))
    }

    /// Canonical description of everything that affects the results of `mode`.
    /// Output locations are excluded, defaults are filled in, and the force is
    /// stored in resolved form, so equivalent spellings coincide.
    pub fn canonical(&self, mode: Mode) -> serde_json::Value {
        let n = self.n();
        let force = &self.params.force;
        let mut b = Vec::new();
        for j in 0..n {
            let bj = force.b(j);
            for r in 0..n {
                for s in r..n {
                    if bj[(r, s)] != 0.0 {
                        b.push(json!([j, r, s, z(bj[(r, s)])]));
                    }
                }
            }
        }
        let a: Vec<f64> = (0..n * n).map(|i| z(force.a()[(i / n, i % n)])).collect();
        let forcing: Vec<_> = self
            .params
            .forcing
            .signals
            .iter()
            .map(|s| serde_json::to_value(s).unwrap())
            .collect();
        let mut doc = json!({
            "mode": mode.name(),
            "chain": {
                "mass": z(self.params.mass),
                "damping": z(self.params.damping),
                "c": force.c().iter().map(|&v| z(v)).collect::<Vec<_>>(),
                "a": a,
                "b": b,
            },
            "forcing": forcing,
            "grid": {"t_final": self.grid.t_final(), "intervals": self.grid.intervals()},
        });
        let obj = doc.as_object_mut().unwrap();
        let dual = matches!(mode, Mode::DualSolve | Mode::Periodic | Mode::Verify);
        if mode != Mode::Periodic {
            obj.insert(
                "initial".into(),
                json!({
                    "x": self.x0.iter().map(|&v| z(v)).collect::<Vec<_>>(),
                    "v": self.v0.iter().map(|&v| z(v)).collect::<Vec<_>>(),
                }),
            );
        }
        if matches!(mode, Mode::Simulate | Mode::Verify) {
            obj.insert("primal".into(), serde_json::to_value(&self.config.primal).unwrap());
        }
        if dual {
            obj.insert("scales".into(), serde_json::to_value(&self.config.scales).unwrap());
            obj.insert("solver".into(), serde_json::to_value(&self.config.solver).unwrap());
            let mut base = serde_json::to_value(&self.config.base).unwrap();
            if let Some(digest) = &self.base_table_digest {
                base["path"] = json!(digest);
            }
            obj.insert("base".into(), base);
            if matches!(self.config.base.perturbation(), Some(Perturbation::SmoothNoise { .. })) {
                obj.insert("seed".into(), json!(self.config.seed));
            }
        }
        doc
    }

    /// SHA-256 of the canonical description, hex encoded.
    pub fn config_hash(&self, mode: Mode) -> String {
        let text = serde_json::to_string(&self.canonical(mode)).unwrap();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Maps `-0.0` to `0.0` so that it hashes like zero.
fn z(v: f64) -> f64 {
    v + 0.0
}

fn perturbation(p: &Perturbation, grid: TimeGrid, n: usize, seed: u64) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let nodes = grid.nodes();
    match *p {
        Perturbation::Sine { amplitude, omega } => {
            let dx = (0..nodes)
                .map(|k| DVector::from_element(n, amplitude * (omega * grid.t(k)).sin()))
                .collect();
            let dv = (0..nodes)
                .map(|k| DVector::from_element(n, amplitude * omega * (omega * grid.t(k)).cos()))
                .collect();
            (dx, dv)
        }
        Perturbation::SmoothNoise { amplitude, modes } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w0 = std::f64::consts::TAU / grid.t_final();
            // coeffs[i][k] = (weight, phase) of harmonic k + 1 in component i.
            let coeffs: Vec<Vec<(f64, f64)>> = (0..n)
                .map(|_| {
                    (0..modes)
                        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU)))
                        .collect()
                })
                .collect();
            let norms: Vec<f64> = coeffs
                .iter()
                .map(|c| c.iter().map(|(w, _)| w.abs()).sum::<f64>().max(f64::MIN_POSITIVE))
                .collect();
            let eval = |t: f64, deriv: bool| {
                DVector::from_fn(n, |i, _| {
                    let sum: f64 = coeffs[i]
                        .iter()
                        .enumerate()
                        .map(|(k, &(w, ph))| {
                            let freq = w0 * (k + 1) as f64;
                            if deriv {
                                w * freq * (freq * t + ph).cos()
                            } else {
                                w * (freq * t + ph).sin()
                            }
                        })
                        .sum();
                    amplitude * sum / norms[i]
                })
            };
            let dx = (0..nodes).map(|k| eval(grid.t(k), false)).collect();
            let dv = (0..nodes).map(|k| eval(grid.t(k), true)).collect();
            (dx, dv)
        }
    }
}

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

/// The bundled scenarios.
pub fn scenario_presets() -> Vec<Preset> {
    macro_rules! preset {
        ($name:literal) => {
            Preset {
                name: $name,
                text: include_str!(concat!("../presets/", $name, ".cfg")),
            }
        };
    }
    vec![
        preset!("harmonic_n1"),
        preset!("damped_n1"),
        preset!("forced_damped_n1"),
        preset!("fput_alpha_n8"),
        preset!("periodic_forced_n4"),
        preset!("perturbed_base_n4"),
    ]
}
