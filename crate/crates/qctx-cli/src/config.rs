//! Layered experiment configuration: built-in defaults per experiment, then
//! an optional TOML file, then `key=value` overrides.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use toml::{Table, Value};

use qctx::lindblad::excitation_rate;
use qctx::ZZModelParams;
use qctx::ToyModel;

use crate::units::{parse_quantity, Dimension};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    ToyModel,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
        Experiment::Fig7,
        Experiment::Fig8,
        Experiment::Fig9,
        Experiment::ToyModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
            Experiment::Fig7 => "fig7",
            Experiment::Fig8 => "fig8",
            Experiment::Fig9 => "fig9",
            Experiment::ToyModel => "toy-model",
        }
    }

    pub fn alias(self) -> Option<&'static str> {
        match self {
            Experiment::Fig5 => Some("table1"),
            Experiment::Fig9 => Some("table2-check"),
            _ => None,
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::Fig2 => "PD, cycle and ID witness curves with chi-squared statistics over R experiments",
            Experiment::Fig3 => "ID-test rejection ratios (chi-squared and F) over a coupling / shot-count grid",
            Experiment::Fig4 => "cycle-test rejection ratios (chi-squared and F) over a coupling / shot-count grid",
            Experiment::Fig5 => "WLS intercept, slope and unitarity estimates of the ID-test for several gates",
            Experiment::Fig6 => "log-det spread versus sequence length: bootstrap, linearized estimate, truth, upper bound",
            Experiment::Fig7 => "sampled log-det distribution of ideal qubit and qutrit SIC frames",
            Experiment::Fig8 => "Monte Carlo frame search for minimum variance, minimum Delta_F and maximum determinant",
            Experiment::Fig9 => "two-qubit unitarity estimates with standard versus SIC product frames, plus composite-frame SDs",
            Experiment::ToyModel => "PD, cycle and ID tests on the two-qubit toy model of context-dependence",
        }
    }

    /// Factor the corresponding figure applies to `φ` on its axis.
    pub fn phi_display_scale(self) -> Option<f64> {
        match self {
            Experiment::Fig3 | Experiment::Fig4 => Some(1e3),
            _ => None,
        }
    }

    fn defaults(self) -> &'static str {
        match self {
            Experiment::Fig2 => "[sampling]\nexperiments = 10000\n",
            Experiment::Fig3 => "[test]\nkind = \"id\"\n",
            Experiment::Fig4 => "[test]\nkind = \"cycle\"\n",
            Experiment::Fig5 => "[model]\nt_g = \"40 ns\"\n[test]\ngates = [\"I\", \"X_pi/2\", \"X_pi\", \"Z_pi\", \"Z_pi/2\"]\n",
            Experiment::Fig6 => "[model]\nt_g = \"40 ns\"\n[sampling]\nbootstrap = 20000\n[test]\nm_max = 2000\nstep = 50\n",
            Experiment::Fig7 => "[sampling]\nexperiments = 100000\n",
            Experiment::Fig8 => "",
            Experiment::Fig9 => "[model]\nphi = 1e-3\ngamma3 = \"0 1/us\"\nn_z = 1.0\neta = 1.0\n[sampling]\nn_s = 10000\n",
            Experiment::ToyModel => {
                "[sampling]\nexperiments = 1000\n[test]\npd_n = 100\npd_step = 2\ncycle_n = 100\ncycle_step = 2\nm_max = 100\nstep = 2\n"
            }
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s || e.alias() == Some(s.as_str()) || e.alias().map(|a| format!("{}/{a}", e.name())) == Some(s.clone()))
            .ok_or_else(|| format!("unknown experiment '{s}'; run `qctx list` for the available names"))
    }
}

const BASE: &str = r#"
seed = 1
output_dir = "."

[model]
t_g = "20 ns"
gamma1 = "1/60 1/us"
gamma_phi = "1/120 1/us"
n_z = 0.84
eta = 0.95
phi = 0.0

[toy]
phi = 0.013
n_z_b = 0.6
alpha_pi = 0.97
alpha_pi2 = 0.95

[sampling]
n_s = 50000
experiments = 2000
bootstrap = 0
threads = 0

[test]
kind = "id"
gates = ["I"]
m_max = 500
step = 10
pd_n = 250
pd_step = 5
cycle_n = 500
cycle_step = 10
p_cr = 0.01
phis = [0.0, 2e-4, 4e-4, 6e-4, 8e-4, 1e-3]
n_s_grid = [10000, 50000, 100000]
schemes = ["standard", "sic"]
shift = 0
dims = [2, 3]

[search]
trials = 1000000
keep = 100
det_floor = 1e-5
inject_sic = true
"#;

/// Configuration problem with an optional source location.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub msg: String,
}

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        ConfigError { field: None, line: None, msg: msg.into() }
    }

    pub fn field(field: impl Into<String>, msg: impl Into<String>) -> Self {
        ConfigError { field: Some(field.into()), line: None, msg: msg.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.field {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.msg)
    }
}

impl std::error::Error for ConfigError {}

/// Accepts `10000`, `1e4` or `"1e6"` for integer counts.
fn count<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        I(i64),
        F(f64),
        S(String),
    }
    let v = match Raw::deserialize(d)? {
        Raw::I(i) => i as f64,
        Raw::F(f) => f,
        Raw::S(s) => s.trim().parse::<f64>().map_err(|_| serde::de::Error::custom(format!("'{s}' is not a count")))?,
    };
    if !(v >= 0.0 && v.fract() == 0.0 && v < 9.0e15) {
        return Err(serde::de::Error::custom(format!("{v} is not a nonnegative integer count")));
    }
    Ok(v as u64)
}

fn counts<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
    #[derive(Deserialize)]
    struct W(#[serde(deserialize_with = "count")] u64);
    Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub t_g: String,
    pub gamma1: String,
    pub gamma_phi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma3: Option<String>,
    pub n_z: f64,
    pub eta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySection {
    pub phi: f64,
    pub n_z_b: f64,
    pub alpha_pi: f64,
    pub alpha_pi2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    #[serde(deserialize_with = "count")]
    pub n_s: u64,
    /// Number of hypothetical experiments `R`.
    #[serde(deserialize_with = "count")]
    pub experiments: u64,
    /// Bootstrap replicas `B`; 0 selects the linearized variance.
    #[serde(deserialize_with = "count")]
    pub bootstrap: u64,
    /// Worker threads; 0 uses every core.
    #[serde(deserialize_with = "count")]
    pub threads: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSection {
    pub kind: String,
    pub gates: Vec<String>,
    #[serde(deserialize_with = "count")]
    pub m_max: u64,
    #[serde(deserialize_with = "count")]
    pub step: u64,
    #[serde(deserialize_with = "count")]
    pub pd_n: u64,
    #[serde(deserialize_with = "count")]
    pub pd_step: u64,
    #[serde(deserialize_with = "count")]
    pub cycle_n: u64,
    #[serde(deserialize_with = "count")]
    pub cycle_step: u64,
    pub p_cr: f64,
    pub phis: Vec<f64>,
    #[serde(deserialize_with = "counts")]
    pub n_s_grid: Vec<u64>,
    pub schemes: Vec<String>,
    #[serde(deserialize_with = "count")]
    pub shift: u64,
    #[serde(deserialize_with = "counts")]
    pub dims: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(deserialize_with = "count")]
    pub trials: u64,
    #[serde(deserialize_with = "count")]
    pub keep: u64,
    pub det_floor: f64,
    pub inject_sic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: String,
    #[serde(deserialize_with = "count")]
    pub seed: u64,
    pub output_dir: String,
    pub model: ModelSection,
    pub toy: ToySection,
    pub sampling: SamplingSection,
    pub test: TestSection,
    pub search: SearchSection,
}

fn merge(into: &mut Table, from: Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(Value::Table(a)), Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
        ConfigError { field: None, line, msg: e.message().to_string() }
    })
}

/// `key.path=value`; the value is read as a TOML literal, falling back to a
/// bare string.
pub fn parse_override(s: &str) -> Result<Table, ConfigError> {
    let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::new(format!("override '{s}' is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|p| p.trim().is_empty()) {
        return Err(ConfigError::new(format!("override '{s}' has an empty key")));
    }
    let value = value.trim();
    let v = match format!("v = {value}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => Value::String(value.to_string()),
    };
    let mut leaf = v;
    for part in key.rsplit('.') {
        let mut t = Table::new();
        t.insert(part.trim().to_string(), leaf);
        leaf = Value::Table(t);
    }
    match leaf {
        Value::Table(t) => Ok(t),
        _ => unreachable!(),
    }
}

/// Line of the first `key = ...` assignment in `text`.
fn locate(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| l.trim_start().strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))).map(|i| i + 1)
}

fn backticked(msg: &str) -> Option<&str> {
    let a = msg.find('`')?;
    let b = msg[a + 1..].find('`')?;
    Some(&msg[a + 1..a + 1 + b])
}

/// Source text of the user file, kept for diagnostics.
#[derive(Clone, Debug, Default)]
pub struct Source {
    pub path: Option<String>,
    pub text: String,
}

impl Source {
    fn locate(&self, err: ConfigError) -> ConfigError {
        if err.line.is_some() {
            return err;
        }
        let key = err.field.as_deref().and_then(|f| f.rsplit('.').next()).or_else(|| backticked(&err.msg));
        ConfigError { line: key.and_then(|k| locate(&self.text, k)), ..err }
    }
}

/// Resolves the configuration for `experiment` (or the one named in the
/// file when `None`).
pub fn resolve(experiment: Option<Experiment>, file: Option<&Source>, overrides: &[String]) -> Result<(Experiment, Config), ConfigError> {
    let user = match file {
        Some(src) => parse_table(&src.text)?,
        None => Table::new(),
    };
    let named = match user.get("experiment") {
        Some(Value::String(s)) => Some(s.parse::<Experiment>().map_err(|m| file.unwrap().locate(ConfigError::field("experiment", m)))?),
        Some(_) => return Err(file.unwrap().locate(ConfigError::field("experiment", "must be a string"))),
        None => None,
    };
    let exp = match (experiment, named) {
        (Some(a), Some(b)) if a != b => return Err(ConfigError::new(format!("command line asks for '{a}' but the file configures '{b}'"))),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(ConfigError::field("experiment", "no experiment given")),
    };
    let mut t = parse_table(BASE).expect("built-in defaults parse");
    merge(&mut t, parse_table(exp.defaults()).expect("built-in defaults parse"));
    merge(&mut t, user);
    for o in overrides {
        merge(&mut t, parse_override(o)?);
    }
    t.insert("experiment".into(), Value::String(exp.name().into()));
    let empty = Source::default();
    let src = file.unwrap_or(&empty);
    let cfg: Config = Value::Table(t).try_into().map_err(|e: toml::de::Error| src.locate(ConfigError::new(e.message().to_string())))?;
    cfg.check().map_err(|e| src.locate(e))?;
    Ok((exp, cfg))
}

pub use qctx::experiments::TwoQubitScheme as Scheme;

impl Config {
    pub fn experiment(&self) -> Experiment {
        self.experiment.parse().expect("validated")
    }

    /// Model parameters in ns and 1/ns.
    pub fn zz_params(&self) -> Result<ZZModelParams, ConfigError> {
        let m = &self.model;
        let q = |name: &str, text: &str, dim| parse_quantity(text, dim).map_err(|e| ConfigError::field(format!("model.{name}"), e));
        let t_g = q("t_g", &m.t_g, Dimension::Time)?;
        let g1 = q("gamma1", &m.gamma1, Dimension::Rate)?;
        let gphi = q("gamma_phi", &m.gamma_phi, Dimension::Rate)?;
        let p = match &m.gamma3 {
            None => ZZModelParams::stationary(g1, gphi, m.n_z, t_g, m.phi, m.eta).map_err(|e| ConfigError::field("model.n_z", e.to_string()))?,
            Some(g3) => {
                let g3 = q("gamma3", g3, Dimension::Rate)?;
                ZZModelParams { gamma1_a: g1, gamma1_b: g1, gamma3_a: g3, gamma3_b: g3, gammaphi_a: gphi, gammaphi_b: gphi, t_g, phi: m.phi, nz_a: m.n_z, nz_b: m.n_z, eta: m.eta }
            }
        };
        p.validate().map_err(|e| ConfigError::field("model", e.to_string()))?;
        Ok(p)
    }

    /// `|n_z − (γ₁ − γ₃)/(γ₁ + γ₃)|` when `γ₃` is given explicitly.
    pub fn stationarity_mismatch(&self) -> Result<Option<(f64, f64)>, ConfigError> {
        let p = self.zz_params()?;
        if self.model.gamma3.is_none() {
            return Ok(None);
        }
        let expect = if p.gamma1_a + p.gamma3_a > 0.0 { (p.gamma1_a - p.gamma3_a) / (p.gamma1_a + p.gamma3_a) } else { p.nz_a };
        Ok(Some((p.stationarity_error(), expect)))
    }

    pub fn toy_model(&self) -> Result<ToyModel, ConfigError> {
        let t = &self.toy;
        ToyModel::new(t.phi, t.n_z_b, t.alpha_pi, t.alpha_pi2).map_err(|e| ConfigError::field("toy", e.to_string()))
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>, ConfigError> {
        self.test
            .schemes
            .iter()
            .map(|s| match s.as_str() {
                "standard" | "scheme-i" => Ok(Scheme::Standard),
                "sic" | "scheme-ii" => Ok(Scheme::Sic),
                other => Err(ConfigError::field("test.schemes", format!("unknown frame '{other}'; expected standard or sic"))),
            })
            .collect()
    }

    /// Range checks that need no computation.
    pub fn check(&self) -> Result<(), ConfigError> {
        let exp = self.experiment();
        self.zz_params()?;
        if let Some((err, expect)) = self.stationarity_mismatch()? {
            if err > 1e-9 {
                return Err(ConfigError::field("model.n_z", format!("n_z = {} is inconsistent with gamma1 and gamma3, whose stationary polarization is {expect}", self.model.n_z)));
            }
        }
        let _ = excitation_rate(1.0, self.model.n_z).map_err(|e| ConfigError::field("model.n_z", e.to_string()))?;
        self.toy_model()?;
        self.schemes()?;
        let s = &self.sampling;
        if s.n_s == 0 {
            return Err(ConfigError::field("sampling.n_s", "must be positive"));
        }
        if s.experiments < 2 {
            return Err(ConfigError::field("sampling.experiments", "need at least 2 experiments"));
        }
        if s.bootstrap != 0 && s.bootstrap < 100 {
            return Err(ConfigError::field("sampling.bootstrap", "use 0 (linearized) or at least 100 replicas"));
        }
        let t = &self.test;
        if !["id", "pd", "cycle"].contains(&t.kind.as_str()) {
            return Err(ConfigError::field("test.kind", format!("unknown test '{}'; expected id, pd or cycle", t.kind)));
        }
        for (name, v) in [("test.step", t.step), ("test.pd_step", t.pd_step), ("test.cycle_step", t.cycle_step)] {
            if v == 0 {
                return Err(ConfigError::field(name, "must be positive"));
            }
        }
        let npts = |span: u64, step: u64| span / step + 1;
        for (name, m) in [("test.m_max", npts(t.m_max, t.step)), ("test.pd_n", npts(t.pd_n, t.pd_step)), ("test.cycle_n", npts(t.cycle_n, t.cycle_step))] {
            if m < 5 {
                return Err(ConfigError::field(name, format!("only {m} sequence lengths; need at least 5 for the nested fits")));
            }
        }
        if !(t.p_cr > 0.0 && t.p_cr < 1.0) {
            return Err(ConfigError::field("test.p_cr", "must lie in (0, 1)"));
        }
        if t.phis.is_empty() || t.phis.iter().any(|p| !p.is_finite()) {
            return Err(ConfigError::field("test.phis", "need at least one finite coupling"));
        }
        if t.n_s_grid.is_empty() || t.n_s_grid.contains(&0) {
            return Err(ConfigError::field("test.n_s_grid", "need positive shot counts"));
        }
        if matches!(exp, Experiment::Fig3 | Experiment::Fig4) && s.experiments < 100 {
            return Err(ConfigError::field("sampling.experiments", "rejection ratios need at least 100 experiments"));
        }
        for g in &t.gates {
            if !qctx::experiments::SINGLE_QUBIT_GATES.contains(&g.as_str()) {
                return Err(ConfigError::field("test.gates", format!("unknown gate '{g}'; available: {}", qctx::experiments::SINGLE_QUBIT_GATES.join(", "))));
            }
        }
        if t.dims.iter().any(|d| !(2..=3).contains(d)) {
            return Err(ConfigError::field("test.dims", "SIC frames exist here for d = 2 and d = 3 only"));
        }
        let q = &self.search;
        if q.trials == 0 || q.keep == 0 || !(q.det_floor >= 0.0) {
            return Err(ConfigError::field("search", "trials and keep must be positive and det_floor nonnegative"));
        }
        Ok(())
    }

    /// Canonical TOML of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
