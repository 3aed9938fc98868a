//! Experiment descriptions: generator, sweep axes, policies, repetition.
//!
//! A config arrives as JSON (hand-written or one of the bundled presets),
//! is validated as a whole, and is then *resolved*: file-based generators
//! are loaded from disk and the grid axes are expanded into concrete cells.
//! The runner only ever sees a [`ResolvedExperiment`].

use std::fs;
use std::path::Path;

use menumatch::gen::{load_instance, GeoConfig, LoadedInstance};
use menumatch::simulate::{OrderDistribution, DEFAULT_SEEDS, DEFAULT_TRIALS};
use menumatch::{ChoiceModelSpec64, GeoInstance64, Instance64, PolicySpec64};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Most cells a grid may expand to without `--force`.
pub const MAX_GRID_CELLS: usize = 64;

const PRESETS: [(&str, &str); 6] = [
    ("example2", include_str!("../presets/example2.json")),
    ("fig2-uniform", include_str!("../presets/fig2-uniform.json")),
    ("fig3-phase", include_str!("../presets/fig3-phase.json")),
    ("fig5-choice", include_str!("../presets/fig5-choice.json")),
    ("fig8-assumptions", include_str!("../presets/fig8-assumptions.json")),
    ("paper-ct", include_str!("../presets/paper-ct.json")),
];

/// Names of the bundled presets, in bundle order.
pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// JSON text of a bundled preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// How base instances are produced, before any grid overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// One instance embedded verbatim in the config.
    Fixed(Box<Instance64>),
    /// An instance file on disk (plain or geographic).
    File(String),
    /// I.i.d. U(0,1) qualities, redrawn per seed.
    Uniform { n: usize, m: usize, p: f64 },
    /// Per-provider normal qualities with spread `s`, redrawn per seed.
    Normal { n: usize, m: usize, s: f64, p: f64 },
    /// Geographic instances, redrawn per seed.
    Geo(Box<GeoConfig>),
}

fn default_order() -> OrderDistribution {
    OrderDistribution::UniformRandom
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_seeds() -> usize {
    DEFAULT_SEEDS
}

/// Sweep axes. Every declared axis must be nonempty; the grid is the
/// cartesian product of the declared axes (an undeclared axis contributes a
/// single no-override cell), enumerated with the later-listed axes fastest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridAxes {
    /// Acceptance probability of the choice model.
    pub p: Option<Vec<f64>>,
    /// Switches the choice model to the logit with this outside weight.
    pub gamma: Option<Vec<f64>>,
    /// Acceptance floor of the threshold choice model.
    pub alpha: Option<Vec<f64>>,
    /// Patient count as a multiple of the provider count.
    pub ratio: Option<Vec<usize>>,
    /// Uniform provider capacity.
    pub capacity: Option<Vec<u32>>,
    /// Quality spread of the normal generator.
    pub s: Option<Vec<f64>>,
    /// Misspecified acceptance probability: policies plan with it, trials
    /// keep the true one.
    pub p_hat: Option<Vec<f64>>,
    /// Noise scale on the qualities policies plan with.
    pub theta_noise: Option<Vec<f64>>,
}

/// One full experiment description, as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem of every output file.
    pub name: String,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub grid: GridAxes,
    pub policies: Vec<PolicySpec64>,
    #[serde(default = "default_order")]
    pub order: OrderDistribution,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// One point of the sweep grid: every override it applies to the base
/// generator. `index` is the cell's position in enumeration order and the
/// instance-stream counter it draws with.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellSpec {
    pub index: usize,
    pub p: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub ratio: Option<usize>,
    pub capacity: Option<u32>,
    pub s: Option<f64>,
    pub p_hat: Option<f64>,
    pub theta_noise: Option<f64>,
}

impl CellSpec {
    /// Axis names in enumeration order (matching [`GridAxes`] field order).
    pub const AXIS_NAMES: [&'static str; 8] =
        ["p", "gamma", "alpha", "ratio", "capacity", "s", "p_hat", "theta_noise"];

    /// This cell's value on the named axis, formatted for CSV; `None` when
    /// the axis is not declared.
    pub fn axis_value(&self, name: &str) -> Option<String> {
        match name {
            "p" => self.p.map(|v| v.to_string()),
            "gamma" => self.gamma.map(|v| v.to_string()),
            "alpha" => self.alpha.map(|v| v.to_string()),
            "ratio" => self.ratio.map(|v| v.to_string()),
            "capacity" => self.capacity.map(|v| v.to_string()),
            "s" => self.s.map(|v| v.to_string()),
            "p_hat" => self.p_hat.map(|v| v.to_string()),
            "theta_noise" => self.theta_noise.map(|v| v.to_string()),
            _ => None,
        }
    }

    /// The declared axis values as a JSON object, for the summary report.
    pub fn axis_json(&self) -> Map<String, Value> {
        let mut map = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        put("p", self.p.map(Value::from));
        put("gamma", self.gamma.map(Value::from));
        put("alpha", self.alpha.map(Value::from));
        put("ratio", self.ratio.map(Value::from));
        put("capacity", self.capacity.map(Value::from));
        put("s", self.s.map(Value::from));
        put("p_hat", self.p_hat.map(Value::from));
        put("theta_noise", self.theta_noise.map(Value::from));
        map
    }

    /// A short human label like `p=0.1, ratio=4`; empty for a gridless run.
    pub fn label(&self) -> String {
        Self::AXIS_NAMES
            .iter()
            .filter_map(|name| self.axis_value(name).map(|v| format!("{name}={v}")))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// The base generator with any file source already loaded.
#[derive(Debug, Clone)]
pub enum BaseGenerator {
    Instance(Box<Instance64>),
    GeoInstance(Box<GeoInstance64>),
    Uniform { n: usize, m: usize, p: f64 },
    Normal { n: usize, m: usize, s: f64, p: f64 },
    Geo(Box<GeoConfig>),
}

impl BaseGenerator {
    /// Patient/provider counts before any ratio override.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            BaseGenerator::Instance(inst) => (inst.n, inst.m),
            BaseGenerator::GeoInstance(geo) => (geo.instance.n, geo.instance.m),
            BaseGenerator::Uniform { n, m, .. } | BaseGenerator::Normal { n, m, .. } => (*n, *m),
            BaseGenerator::Geo(geo) => (geo.n_patients, geo.n_providers),
        }
    }

    /// Kind of the choice model instances will carry before a gamma override.
    fn choice_kind(&self) -> &'static str {
        match self {
            BaseGenerator::Instance(inst) => inst.choice.kind(),
            BaseGenerator::GeoInstance(geo) => geo.instance.choice.kind(),
            BaseGenerator::Uniform { .. } | BaseGenerator::Normal { .. } => "uniform",
            BaseGenerator::Geo(_) => "threshold",
        }
    }
}

/// A validated experiment, ready to run: resolved generator, expanded grid,
/// and the effective policy list (the random baseline is appended when the
/// config leaves it out, so normalization always has its reference row).
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub cfg: ExperimentConfig,
    pub base: BaseGenerator,
    pub cells: Vec<CellSpec>,
    pub policies: Vec<PolicySpec64>,
}

impl ResolvedExperiment {
    /// Names of the declared grid axes, in enumeration order.
    pub fn declared_axes(&self) -> Vec<&'static str> {
        let g = &self.cfg.grid;
        let declared = [
            g.p.is_some(),
            g.gamma.is_some(),
            g.ratio.is_some(),
            g.capacity.is_some(),
            g.s.is_some(),
            g.p_hat.is_some(),
            g.theta_noise.is_some(),
        ];
        CellSpec::AXIS_NAMES
            .iter()
            .zip(declared)
            .filter(|(_, d)| *d)
            .map(|(n, _)| *n)
            .collect()
    }
}

/// Loads file generators, validates the whole config, and expands the grid.
pub fn resolve(cfg: ExperimentConfig) -> Result<ResolvedExperiment, CliError> {
    let base = match &cfg.generator {
        GeneratorSpec::Fixed(instance) => BaseGenerator::Instance(instance.clone()),
        GeneratorSpec::File(path) => {
            match load_instance::<f64>(Path::new(path))
                .map_err(|e| CliError::usage(e.to_string()))?
            {
                LoadedInstance::Plain(inst) => BaseGenerator::Instance(Box::new(inst)),
                LoadedInstance::Geo(geo) => BaseGenerator::GeoInstance(Box::new(geo)),
            }
        }
        GeneratorSpec::Uniform { n, m, p } => BaseGenerator::Uniform { n: *n, m: *m, p: *p },
        GeneratorSpec::Normal { n, m, s, p } => {
            BaseGenerator::Normal { n: *n, m: *m, s: *s, p: *p }
        }
        GeneratorSpec::Geo(geo) => BaseGenerator::Geo(geo.clone()),
    };

    validate(&cfg, &base)?;
    let cells = expand_grid(&cfg.grid);
    let mut policies = cfg.policies.clone();
    if !policies.contains(&PolicySpec64::Random) {
        policies.push(PolicySpec64::Random);
    }
    Ok(ResolvedExperiment { cfg, base, cells, policies })
}

fn validate(cfg: &ExperimentConfig, base: &BaseGenerator) -> Result<(), CliError> {
    let bad = |msg: String| Err(CliError::Usage(msg));

    if cfg.name.is_empty()
        || !cfg
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
    {
        return bad(format!(
            "name {:?} must be nonempty and use only letters, digits, '-', '_', '.'",
            cfg.name
        ));
    }
    if cfg.policies.is_empty() {
        return bad("no policies configured".into());
    }
    if cfg.trials == 0 || cfg.seeds == 0 {
        return bad("trials and seeds must be at least 1".into());
    }

    let (n, m) = base.shape();
    if n == 0 || m == 0 {
        return bad("the generator must produce at least one patient and one provider".into());
    }

    let g = &cfg.grid;
    for (name, len) in [
        ("p", g.p.as_ref().map(Vec::len)),
        ("gamma", g.gamma.as_ref().map(Vec::len)),
        ("ratio", g.ratio.as_ref().map(Vec::len)),
        ("capacity", g.capacity.as_ref().map(Vec::len)),
        ("s", g.s.as_ref().map(Vec::len)),
        ("p_hat", g.p_hat.as_ref().map(Vec::len)),
        ("theta_noise", g.theta_noise.as_ref().map(Vec::len)),
    ] {
        if len == Some(0) {
            return bad(format!("grid axis `{name}` is declared but empty"));
        }
    }

    if g.p.is_some() && g.gamma.is_some() {
        return bad("the p and gamma axes are mutually exclusive".into());
    }
    let generated = matches!(
        base,
        BaseGenerator::Uniform { .. } | BaseGenerator::Normal { .. }
    );
    if g.ratio.is_some() && !generated {
        return bad("the ratio axis needs the uniform or normal generator".into());
    }
    if g.s.is_some() && !matches!(base, BaseGenerator::Normal { .. }) {
        return bad("the s axis needs the normal generator".into());
    }
    let final_kind = if g.gamma.is_some() { "mnl" } else { base.choice_kind() };
    if g.p.is_some() && final_kind == "mnl" {
        return bad("the p axis cannot retune the logit model".into());
    }
    if g.p_hat.is_some() && final_kind == "mnl" {
        return bad("the p_hat axis does not apply to the logit model".into());
    }

    let unit_open = |name: &str, vals: Option<&Vec<f64>>| -> Result<(), CliError> {
        for &v in vals.into_iter().flatten() {
            if !(v > 0.0 && v <= 1.0) {
                return Err(CliError::usage(format!("{name} = {v} must lie in (0, 1]")));
            }
        }
        Ok(())
    };
    unit_open("p", g.p.as_ref())?;
    unit_open("p_hat", g.p_hat.as_ref())?;
    for &v in g.gamma.iter().flatten() {
        if !v.is_finite() || v.abs() > 500.0 {
            return bad(format!("gamma = {v} must be finite with |gamma| <= 500"));
        }
    }
    for &v in g.ratio.iter().flatten() {
        if v == 0 {
            return bad("ratio values must be at least 1".into());
        }
    }
    for &v in g.capacity.iter().flatten() {
        if v == 0 {
            return bad("capacity values must be at least 1".into());
        }
    }
    for (name, vals) in [("s", g.s.as_ref()), ("theta_noise", g.theta_noise.as_ref())] {
        for &v in vals.into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and nonnegative"));
            }
        }
    }
    match base {
        BaseGenerator::Uniform { p, .. } | BaseGenerator::Normal { p, .. } => {
            if !(*p > 0.0 && *p <= 1.0) {
                return bad(format!("generator p = {p} must lie in (0, 1]"));
            }
        }
        _ => {}
    }
    if let BaseGenerator::Normal { s, .. } = base {
        if !(*s >= 0.0 && s.is_finite()) {
            return bad(format!("generator s = {s} must be finite and nonnegative"));
        }
    }

    if cfg.policies.contains(&PolicySpec64::SingleProvider) {
        if m != 1 || g.ratio.is_some() {
            return bad("the single_provider policy needs exactly one provider".into());
        }
        if g.capacity.iter().flatten().any(|&c| c != 1) {
            return bad("the single_provider policy needs a unit provider slot".into());
        }
        if let BaseGenerator::Instance(inst) = base {
            if inst.capacities[0] != 1 {
                return bad("the single_provider policy needs a unit provider slot".into());
            }
        }
    }
    Ok(())
}

/// Cartesian product of the declared axes, later axes fastest.
fn expand_grid(g: &GridAxes) -> Vec<CellSpec> {
    fn axis<V: Copy>(vals: &Option<Vec<V>>) -> Vec<Option<V>> {
        match vals {
            Some(vs) => vs.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }
    let mut cells = Vec::new();
    for &p in &axis(&g.p) {
        for &gamma in &axis(&g.gamma) {
            for &ratio in &axis(&g.ratio) {
                for &capacity in &axis(&g.capacity) {
                    for &s in &axis(&g.s) {
                        for &p_hat in &axis(&g.p_hat) {
                            for &theta_noise in &axis(&g.theta_noise) {
                                cells.push(CellSpec {
                                    index: cells.len(),
                                    p,
                                    gamma,
                                    ratio,
                                    capacity,
                                    s,
                                    p_hat,
                                    theta_noise,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    cells
}

/// Rejects grids beyond [`MAX_GRID_CELLS`] unless forced.
pub fn guard_grid(cells: usize, force: bool) -> Result<(), CliError> {
    if cells > MAX_GRID_CELLS && !force {
        return Err(CliError::guard(format!(
            "grid expands to {cells} cells (limit {MAX_GRID_CELLS}); pass --force to run it anyway"
        )));
    }
    Ok(())
}

/// Replaces the acceptance probability of a non-logit choice model.
pub fn override_p(choice: &ChoiceModelSpec64, p: f64) -> Result<ChoiceModelSpec64, CliError> {
    match choice {
        ChoiceModelSpec64::Uniform { .. } => Ok(ChoiceModelSpec64::Uniform { p }),
        ChoiceModelSpec64::Threshold { alpha, .. } => {
            Ok(ChoiceModelSpec64::Threshold { p, alpha: *alpha })
        }
        ChoiceModelSpec64::Mnl { .. } => {
            Err(CliError::usage("the p axis cannot retune the logit model"))
        }
    }
}
