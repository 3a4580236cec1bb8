//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! model.name = cournot
//! graph.type = ring
//! approx.mode = regular:8
//! dyn.beta1 = 0.1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("model.name", "cournot | demand_response"),
    ("model.players", "number of players N"),
    ("model.dim", "action dimension n"),
    ("model.semiaxes", "comma-separated ellipsoid semiaxes"),
    ("model.center", "comma-separated body center"),
    ("model.radius", "ball radius (overrides semiaxes)"),
    ("model.price_slope", "cournot: price slope"),
    ("model.base_price", "cournot: base price (default N)"),
    ("model.demand_offset", "cournot: constant in d_i"),
    ("model.iota", "demand_response: tracking weight"),
    ("model.omega", "demand_response: price sensitivity"),
    ("model.p0", "demand_response: base price"),
    ("model.nominal_offset", "demand_response: constant in pi_i"),
    ("graph.type", "ring | complete | er[:p] | matrix"),
    ("graph.nodes", "node count when no model is given"),
    ("graph.p", "ER edge probability"),
    ("graph.seed", "ER seed (default dyn.seed)"),
    ("graph.weights", "matrix rows separated by ';'"),
    ("approx.mode", "exact | regular:m | greedy:s | cube | file:path"),
    ("dyn.beta1", "projection gain (default per model)"),
    ("dyn.beta2", "consensus gain (default per model)"),
    ("dyn.step", "Euler step h"),
    ("dyn.tol", "terminal tolerance t_tol"),
    ("dyn.max_steps", "step budget"),
    ("dyn.seed", "seed for random initialisation and ER graphs"),
    ("dyn.init", "center | random"),
    ("dyn.record_every", "trajectory downsampling (0 = none)"),
    ("dyn.integrator", "euler | rk4"),
    ("dyn.warm_start", "true | false"),
    ("out.dir", "output directory"),
    ("compare.modes", "comma-separated approximation specs"),
    ("compare.repeats", "repetitions per mode"),
    ("sweep.m_list", "comma-separated polygon vertex counts"),
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// Line in the config file, `None` for command-line overrides.
    line: Option<usize>,
}

/// Raw key-value pairs, validated against [`KEYS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected 'key = value', found '{content}'") })?;
            let key = key.trim();
            check_key(key).map_err(|msg| Error::Parse { line, msg })?;
            if cfg.entries.contains_key(key) {
                return Err(Error::Parse { line, msg: format!("duplicate key '{key}'") });
            }
            cfg.entries.insert(key.to_string(), Entry { value: value.trim().to_string(), line: Some(line) });
        }
        Ok(cfg)
    }

    /// Sets `key`, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        check_key(key).map_err(Error::InvalidInput)?;
        self.entries.insert(key.to_string(), Entry { value: value.into(), line: None });
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("override '{pair}' is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn error(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        match self.entries.get(key).and_then(|e| e.line) {
            Some(line) => Error::Parse { line, msg: format!("{key}: {msg}") },
            None => Error::invalid(format!("{key}: {msg}")),
        }
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| self.error(key, format!("'{v}': {e}"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => split_list(v)
                .map(|s| s.parse::<T>().map_err(|e| self.error(key, format!("'{s}': {e}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Resolved configuration as `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, e) in &self.entries {
            let _ = writeln!(out, "{k} = {}", e.value);
        }
        out
    }
}

fn check_key(key: &str) -> std::result::Result<(), String> {
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(format!("unknown key '{key}'"))
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelName {
    Cournot,
    DemandResponse,
}

impl FromStr for ModelName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cournot" => Ok(Self::Cournot),
            "demand_response" | "demand-response" => Ok(Self::DemandResponse),
            other => Err(format!("unknown model '{other}' (expected cournot or demand_response)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Ring,
    Complete,
    ErdosRenyi { p: f64, seed: u64 },
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApproxSpec {
    Exact,
    Regular(usize),
    Greedy(usize),
    Cube,
    File(PathBuf),
}

impl ApproxSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Exact => "exact".into(),
            Self::Regular(m) => format!("regular:{m}"),
            Self::Greedy(s) => format!("greedy:{s}"),
            Self::Cube => "cube".into(),
            Self::File(p) => format!("file:{}", p.display()),
        }
    }
}

impl FromStr for ApproxSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let count = |what: &str| -> std::result::Result<usize, String> {
            arg.ok_or_else(|| format!("'{kind}' needs a {what}, e.g. {kind}:8"))?
                .parse::<usize>()
                .map_err(|e| format!("bad {what} in '{s}': {e}"))
        };
        match kind {
            "exact" => Ok(Self::Exact),
            "regular" => Ok(Self::Regular(count("vertex count")?)),
            "greedy" => Ok(Self::Greedy(count("vertex count")?)),
            "cube" => Ok(Self::Cube),
            "file" => Ok(Self::File(PathBuf::from(arg.filter(|a| !a.is_empty()).ok_or("file needs a path")?))),
            other => Err(format!("unknown approximation '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitSpec {
    Center,
    Random,
}

/// Typed view of a [`RawConfig`].
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub model: Option<ModelName>,
    pub graph: GraphSpec,
    pub approx: ApproxSpec,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub step: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub seed: u64,
    pub init: InitSpec,
    pub record_every: usize,
    pub rk4: bool,
    pub warm_start: bool,
    pub out_dir: PathBuf,
    pub modes: Vec<ApproxSpec>,
    pub repeats: usize,
    pub m_list: Vec<usize>,
}

pub const DEFAULT_M_LIST: &[usize] = &[3, 4, 6, 8, 10, 12];
pub const DEFAULT_MODES: &str = "exact,greedy:8,greedy:12,greedy:24";

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let seed = raw.parsed::<u64>("dyn.seed")?.unwrap_or(0);
        let graph = match raw.get("graph.type").unwrap_or("ring") {
            "ring" => GraphSpec::Ring,
            "complete" => GraphSpec::Complete,
            "matrix" => {
                let text = raw.get("graph.weights").ok_or_else(|| raw.error("graph.type", "matrix needs graph.weights"))?;
                let rows = text
                    .split(';')
                    .map(|row| {
                        row.split(|c: char| c == ',' || c.is_whitespace())
                            .filter(|s| !s.is_empty())
                            .map(|s| s.parse::<f64>().map_err(|e| raw.error("graph.weights", format!("'{s}': {e}"))))
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                GraphSpec::Matrix(rows)
            }
            t if t == "er" || t.starts_with("er:") => {
                let p = match t.strip_prefix("er:") {
                    Some(p) => p.parse::<f64>().map_err(|e| raw.error("graph.type", format!("'{p}': {e}")))?,
                    None => raw.parsed::<f64>("graph.p")?.ok_or_else(|| raw.error("graph.type", "er needs graph.p"))?,
                };
                GraphSpec::ErdosRenyi { p, seed: raw.parsed::<u64>("graph.seed")?.unwrap_or(seed) }
            }
            other => return Err(raw.error("graph.type", format!("unknown graph type '{other}'"))),
        };
        let init = match raw.get("dyn.init").unwrap_or("center") {
            "center" => InitSpec::Center,
            "random" => InitSpec::Random,
            other => return Err(raw.error("dyn.init", format!("expected center or random, got '{other}'"))),
        };
        let rk4 = match raw.get("dyn.integrator").unwrap_or("euler") {
            "euler" => false,
            "rk4" => true,
            other => return Err(raw.error("dyn.integrator", format!("expected euler or rk4, got '{other}'"))),
        };
        let cfg = Self {
            model: raw.parsed::<ModelName>("model.name")?,
            graph,
            approx: raw.parsed::<ApproxSpec>("approx.mode")?.unwrap_or(ApproxSpec::Exact),
            beta1: raw.parsed("dyn.beta1")?,
            beta2: raw.parsed("dyn.beta2")?,
            step: raw.parsed("dyn.step")?.unwrap_or(0.01),
            tol: raw.parsed("dyn.tol")?.unwrap_or(1e-3),
            max_steps: raw.parsed("dyn.max_steps")?.unwrap_or(1_000_000),
            seed,
            init,
            record_every: raw.parsed("dyn.record_every")?.unwrap_or(1),
            rk4,
            warm_start: raw.parsed("dyn.warm_start")?.unwrap_or(true),
            out_dir: raw.parsed::<PathBuf>("out.dir")?.unwrap_or_else(|| PathBuf::from("aggsolve-out")),
            modes: match raw.list::<ApproxSpec>("compare.modes")? {
                Some(m) => m,
                None => DEFAULT_MODES.split(',').map(|s| s.parse().expect("valid default")).collect(),
            },
            repeats: raw.parsed("compare.repeats")?.unwrap_or(5),
            m_list: raw.list("sweep.m_list")?.unwrap_or_else(|| DEFAULT_M_LIST.to_vec()),
            raw,
        };
        if !(cfg.step > 0.0 && cfg.step <= 1.0) {
            return Err(cfg.raw.error("dyn.step", "must lie in (0, 1]"));
        }
        if !(cfg.tol > 0.0) {
            return Err(cfg.raw.error("dyn.tol", "must be positive"));
        }
        if cfg.repeats == 0 {
            return Err(cfg.raw.error("compare.repeats", "must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn require_model(&self) -> Result<ModelName> {
        self.model.ok_or_else(|| Error::invalid("model.name is required (use --model or a config file)"))
    }
}
