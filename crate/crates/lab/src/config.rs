//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    BloomUpper,
    BloomFailure,
    Embedding,
    Necessity,
    Decompose,
    DiagnoseWeight,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::BloomUpper,
        Experiment::BloomFailure,
        Experiment::Embedding,
        Experiment::Necessity,
        Experiment::Decompose,
        Experiment::DiagnoseWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BloomUpper => "bloom-upper",
            Experiment::BloomFailure => "bloom-failure",
            Experiment::Embedding => "embedding",
            Experiment::Necessity => "necessity",
            Experiment::Decompose => "decompose",
            Experiment::DiagnoseWeight => "diagnose-weight",
        }
    }
}

impl FromStr for Experiment {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self, LabError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| LabError::Config(format!("unknown experiment `{s}`")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every knob of every experiment. Keys an experiment does not use are
/// accepted and ignored; keys outside this list are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    /// Samples per axis.
    pub n: usize,
    /// The domain is `(-half_width, half_width)^dim`.
    pub half_width: f64,
    pub p: f64,
    pub m: u32,
    pub mu: String,
    pub lambda: String,
    pub kernel: String,
    /// Arc on which `Ω` keeps its sign: `+1`, `-1` or `<center>:<half width>`.
    pub sigma: Option<String>,
    pub b: String,
    pub dict_depth: u32,
    pub seed: u64,
    /// Power exponents swept by `bloom-upper`.
    pub exponents: Vec<f64>,
    /// Commutator orders swept by `bloom-upper`.
    pub orders: Vec<u32>,
    /// Number of grid doublings beyond `n`.
    pub refine: u32,
    /// `ε = 10^{-k}` for these `k`.
    pub eps_exponents: Vec<u32>,
    /// Embedding exponent.
    pub r: f64,
    /// Power of `u = |x|^alpha` in `embedding`.
    pub alpha: f64,
    /// Random cubes, step functions or test sets.
    pub count: usize,
    pub iterations: usize,
}

const KEYS: [&str; 22] = [
    "experiment",
    "dim",
    "n",
    "half_width",
    "p",
    "m",
    "mu",
    "lambda",
    "kernel",
    "sigma",
    "b",
    "dict_depth",
    "seed",
    "exponents",
    "orders",
    "refine",
    "eps_exponents",
    "r",
    "alpha",
    "count",
    "iterations",
    "weight",
];

impl ExperimentConfig {
    /// Defaults at desk scale.
    pub fn defaults(experiment: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig {
            experiment,
            dim: 1,
            n: 2048,
            half_width: 1.0,
            p: 2.0,
            m: 1,
            mu: "const:1".into(),
            lambda: "const:1".into(),
            kernel: "hilbert".into(),
            sigma: None,
            b: "step:16".into(),
            dict_depth: 8,
            seed: 0,
            exponents: vec![0.0, 0.2, 0.5, 0.8],
            orders: vec![1, 2],
            refine: 1,
            eps_exponents: (1..=6).collect(),
            r: 2.0,
            alpha: 0.5,
            count: 20,
            iterations: 50,
        };
        match experiment {
            Experiment::BloomUpper => {
                c.n = 1024;
                c.b = "bloom".into();
            }
            Experiment::BloomFailure => c.n = 1 << 16,
            Experiment::Embedding => {
                c.n = 1 << 14;
                c.b = "power:0.25".into();
            }
            Experiment::Necessity => {
                c.half_width = 16.0;
                c.count = 8;
            }
            Experiment::Decompose => {
                c.n = 1024;
                c.count = 100;
            }
            Experiment::DiagnoseWeight => {
                c.mu = "power:0.5".into();
            }
        }
        c
    }

    /// Parse `key = value` lines; `#` starts a comment. `experiment` may be
    /// omitted when `fallback` is given.
    pub fn parse(text: &str, fallback: Option<Experiment>) -> Result<ExperimentConfig, LabError> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(LabError::Config(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if pairs.iter().any(|(p, _): &(String, String)| p == k) {
                return Err(LabError::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
            pairs.push((k.to_string(), v.trim().to_string()));
        }
        let experiment = match pairs.iter().find(|(k, _)| k == "experiment") {
            Some((_, v)) => {
                let e: Experiment = v.parse()?;
                if let Some(f) = fallback {
                    if f != e {
                        return Err(LabError::Config(format!("config is for `{e}`, not `{f}`")));
                    }
                }
                e
            }
            None => fallback.ok_or_else(|| LabError::Config("missing key `experiment`".into()))?,
        };
        let mut c = ExperimentConfig::defaults(experiment);
        for (k, v) in &pairs {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path, fallback: Option<Experiment>) -> Result<ExperimentConfig, LabError> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text, fallback)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), LabError> {
        match key {
            "experiment" => {}
            "dim" => self.dim = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "half_width" => self.half_width = num(key, v)?,
            "p" => self.p = num(key, v)?,
            "m" => self.m = num(key, v)?,
            "mu" | "weight" => self.mu = v.to_string(),
            "lambda" => self.lambda = v.to_string(),
            "kernel" => self.kernel = v.to_string(),
            "sigma" => self.sigma = Some(v.to_string()),
            "b" => self.b = v.to_string(),
            "dict_depth" => self.dict_depth = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "exponents" => self.exponents = list(key, v)?,
            "orders" => self.orders = list(key, v)?,
            "refine" => self.refine = num(key, v)?,
            "eps_exponents" => self.eps_exponents = list(key, v)?,
            "r" => self.r = num(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "count" => self.count = num(key, v)?,
            "iterations" => self.iterations = num(key, v)?,
            _ => unreachable!("keys are checked before"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), LabError> {
        let bad = |m: &str| Err(LabError::Config(m.to_string()));
        if !(1..=2).contains(&self.dim) {
            return bad("dim must be 1 or 2");
        }
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if !(self.half_width > 0.0) {
            return bad("half_width must be positive");
        }
        if !(self.p > 1.0) {
            return bad("p must exceed 1");
        }
        if self.m == 0 || self.orders.contains(&0) {
            return bad("commutator orders must be at least 1");
        }
        if !(self.r > 1.0) {
            return bad("r must exceed 1");
        }
        Ok(())
    }

    /// Canonical `key = value` listing of every resolved field.
    pub fn canonical(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("experiment", self.experiment.to_string());
        put("dim", self.dim.to_string());
        put("n", self.n.to_string());
        put("half_width", format!("{:?}", self.half_width));
        put("p", format!("{:?}", self.p));
        put("m", self.m.to_string());
        put("mu", self.mu.clone());
        put("lambda", self.lambda.clone());
        put("kernel", self.kernel.clone());
        if let Some(sig) = &self.sigma {
            put("sigma", sig.clone());
        }
        put("b", self.b.clone());
        put("dict_depth", self.dict_depth.to_string());
        put("seed", self.seed.to_string());
        put("exponents", join(self.exponents.iter().map(|x| format!("{x:?}")).collect()));
        put("orders", join(self.orders.iter().map(|x| x.to_string()).collect()));
        put("refine", self.refine.to_string());
        put("eps_exponents", join(self.eps_exponents.iter().map(|x| x.to_string()).collect()));
        put("r", format!("{:?}", self.r));
        put("alpha", format!("{:?}", self.alpha));
        put("count", self.count.to_string());
        put("iterations", self.iterations.to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, LabError> {
    v.parse()
        .map_err(|_| LabError::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, LabError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}
