//! Spec strings for weights, kernels and symbols.

use std::f64::consts::PI;
use std::path::Path;

use bloomlab_core::lowerbound::Arc;
use bloomlab_core::operators::{KernelSpec, Omega, DEFAULT_ANGLES, DEFAULT_TRUNCATION};
use bloomlab_core::weights::Weight;
use bloomlab_core::{Dim, Grid, GridFunction};
use rand::Rng;

use crate::io::read_grid_function;
use crate::LabError;

fn spec_err(what: &str, s: &str) -> LabError {
    LabError::Spec(format!("bad {what} spec `{s}`"))
}

fn real(what: &str, s: &str, v: &str) -> Result<f64, LabError> {
    v.parse().map_err(|_| spec_err(what, s))
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Power(f64),
    Const(f64),
    TwoLevel(f64),
    File(String),
}

impl WeightSpec {
    /// `power:a`, `const:c`, `twolevel:h`, or a path to a grid function file.
    pub fn parse(s: &str) -> Result<WeightSpec, LabError> {
        match s.split_once(':') {
            Some(("power", v)) => Ok(WeightSpec::Power(real("weight", s, v)?)),
            Some(("const", v)) => Ok(WeightSpec::Const(real("weight", s, v)?)),
            Some(("twolevel", v)) => Ok(WeightSpec::TwoLevel(real("weight", s, v)?)),
            _ if !s.is_empty() => Ok(WeightSpec::File(s.to_string())),
            _ => Err(spec_err("weight", s)),
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<Weight, LabError> {
        Ok(match self {
            WeightSpec::Power(a) => Weight::power(grid, *a)?,
            WeightSpec::Const(c) => Weight::constant(grid, *c)?,
            WeightSpec::TwoLevel(h) => Weight::two_level(grid, *h)?,
            WeightSpec::File(path) => {
                let f = read_grid_function(Path::new(path))?;
                if !f.grid().is_compatible(grid) {
                    return Err(LabError::Spec(format!("{path}: grid differs from the configured grid")));
                }
                Weight::new(f)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Hilbert,
    Cos,
    File(String),
    SignPatch { center: f64, width: f64 },
}

impl KernelChoice {
    /// `hilbert`, `s1:cos`, `s1:file:<path>`, `s1:signpatch:<θ0>:<width>`.
    pub fn parse(s: &str) -> Result<KernelChoice, LabError> {
        if s == "hilbert" {
            return Ok(KernelChoice::Hilbert);
        }
        let rest = s.strip_prefix("s1:").ok_or_else(|| spec_err("kernel", s))?;
        if rest == "cos" {
            return Ok(KernelChoice::Cos);
        }
        if let Some(path) = rest.strip_prefix("file:") {
            return Ok(KernelChoice::File(path.to_string()));
        }
        if let Some(args) = rest.strip_prefix("signpatch:") {
            let (c, w) = args.split_once(':').ok_or_else(|| spec_err("kernel", s))?;
            return Ok(KernelChoice::SignPatch {
                center: real("kernel", s, c)?,
                width: real("kernel", s, w)?,
            });
        }
        Err(spec_err("kernel", s))
    }

    pub fn dim(&self) -> Dim {
        match self {
            KernelChoice::Hilbert => Dim::One,
            _ => Dim::Two,
        }
    }

    /// Circle kernels read `Ω` from a file of whitespace-separated samples at
    /// angles `2πj/M`.
    pub fn build(&self) -> Result<KernelSpec, LabError> {
        Ok(match self {
            KernelChoice::Hilbert => KernelSpec::hilbert(),
            KernelChoice::Cos => KernelSpec::cosine(DEFAULT_ANGLES),
            KernelChoice::SignPatch { center, width } => KernelSpec::sign_patch(*center, *width, DEFAULT_ANGLES)?,
            KernelChoice::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let samples = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| LabError::Spec(format!("{path}: bad sample `{t}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                KernelSpec::new(Omega::Circle { samples }, DEFAULT_TRUNCATION)?
            }
        })
    }

    /// The sign-constant arc used by the lower bound when none is configured.
    pub fn default_sigma(&self) -> Option<Arc> {
        match *self {
            KernelChoice::Hilbert => Some(Arc::Point(1.0)),
            KernelChoice::Cos => Some(Arc::Circle {
                center: 0.0,
                half_width: PI / 4.0,
            }),
            KernelChoice::SignPatch { center, width } => Some(Arc::Circle {
                center,
                half_width: width / 2.0,
            }),
            KernelChoice::File(_) => None,
        }
    }
}

/// `+1`, `-1`, or `<center>:<half width>`.
pub fn parse_sigma(s: &str) -> Result<Arc, LabError> {
    match s {
        "+1" | "1" => Ok(Arc::Point(1.0)),
        "-1" => Ok(Arc::Point(-1.0)),
        _ => {
            let (c, w) = s.split_once(':').ok_or_else(|| spec_err("sigma", s))?;
            Ok(Arc::Circle {
                center: real("sigma", s, c)?,
                half_width: real("sigma", s, w)?,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    /// First coordinate.
    Identity,
    /// `|x|^e`.
    Power(f64),
    /// `(|x|^e - 1)/e`, and `log|x|` at `e = 0`.
    LogPower(f64),
    /// Piecewise constant on `blocks` blocks per axis with uniform values in
    /// `[-1, 1)`.
    Step(usize),
    Const(f64),
    File(String),
    /// `(|x|^e - 1)/e` with `e = a/(mp)`, matched to `η = ν^{1/m}` for a
    /// power weight `μ = |x|^a`; only meaningful inside weight sweeps.
    Bloom,
}

impl SymbolSpec {
    pub fn parse(s: &str) -> Result<SymbolSpec, LabError> {
        match s.split_once(':') {
            None if s == "x" => Ok(SymbolSpec::Identity),
            None if s == "bloom" => Ok(SymbolSpec::Bloom),
            Some(("power", v)) => Ok(SymbolSpec::Power(real("symbol", s, v)?)),
            Some(("logpower", v)) => Ok(SymbolSpec::LogPower(real("symbol", s, v)?)),
            Some(("step", v)) => Ok(SymbolSpec::Step(v.parse().map_err(|_| spec_err("symbol", s))?)),
            Some(("const", v)) => Ok(SymbolSpec::Const(real("symbol", s, v)?)),
            Some(("file", v)) => Ok(SymbolSpec::File(v.to_string())),
            _ => Err(spec_err("symbol", s)),
        }
    }

    pub fn build<R: Rng + ?Sized>(&self, grid: &Grid, rng: &mut R) -> Result<GridFunction, LabError> {
        let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
        Ok(match *self {
            SymbolSpec::Identity => grid.sample(|x| x[0])?,
            SymbolSpec::Power(e) => grid.sample(|x| norm(x).powf(e))?,
            SymbolSpec::LogPower(e) => grid.sample(|x| log_power(norm(x), e))?,
            SymbolSpec::Const(c) => grid.constant(c)?,
            SymbolSpec::Step(blocks) => step_function(grid, blocks.max(1), rng)?,
            SymbolSpec::File(ref path) => {
                let f = read_grid_function(Path::new(path))?;
                if !f.grid().is_compatible(grid) {
                    return Err(LabError::Spec(format!("{path}: grid differs from the configured grid")));
                }
                f
            }
            SymbolSpec::Bloom => return Err(LabError::Spec("`bloom` symbols need a weight sweep".into())),
        })
    }
}

/// `(t^e - 1)/e`, continued by `ln t` at `e = 0`.
pub fn log_power(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        t.ln()
    } else {
        (t.powf(e) - 1.0) / e
    }
}

pub fn step_function<R: Rng + ?Sized>(grid: &Grid, blocks: usize, rng: &mut R) -> Result<GridFunction, LabError> {
    let n = grid.n();
    let per = n.div_ceil(blocks);
    let count = blocks.pow(grid.dim().get() as u32);
    let vals: Vec<f64> = (0..count).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = (0..grid.len())
        .map(|c| {
            let [i, j] = grid.unflat(c);
            match grid.dim() {
                Dim::One => vals[i / per],
                Dim::Two => vals[(i / per) * blocks + j / per],
            }
        })
        .collect();
    Ok(GridFunction::new(*grid, v)?)
}
