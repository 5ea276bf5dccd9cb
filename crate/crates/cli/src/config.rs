//! Experiment configuration: presets for the five reference experiments and
//! a flat `key = value` file format that overrides them.
//!
//! ```text
//! # comments start with '#'
//! experiment = example1
//! orders = 1.2, 1.8
//! tau_list = 1/100, 1/200, 1/400
//! ```
//!
//! Numbers may be written as fractions `p/q`. Per-axis lists (`orders`, `m`)
//! accept a single value that is repeated for every axis.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fracac::{FracOrders, GridSpec, SolverConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Example1,
    Example2,
    Example3,
    Example4,
    Example5,
    Custom,
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "example1" => Self::Example1,
            "example2" => Self::Example2,
            "example3" => Self::Example3,
            "example4" => Self::Example4,
            "example5" => Self::Example5,
            "custom" => Self::Custom,
            other => return Err(CliError::Config(format!("unknown experiment '{other}'"))),
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Example1 => "example1",
            Self::Example2 => "example2",
            Self::Example3 => "example3",
            Self::Example4 => "example4",
            Self::Example5 => "example5",
            Self::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// Initial condition sampled at interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum IcSpec {
    /// `amplitude * (exp(-sharpness |x - c0|^2) + exp(-sharpness |x - c1|^2))`,
    /// each center repeated on every axis.
    GaussianPair {
        amplitude: f64,
        sharpness: f64,
        centers: [f64; 2],
    },
    /// Uniform on `[lo, hi]`.
    UniformRandom { lo: f64, hi: f64 },
    /// `scale * U + offset` with `U` uniform on `[0, 1)`.
    AffineRandom { scale: f64, offset: f64 },
    Zero,
}

impl IcSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::GaussianPair { .. } => "gaussian-pair",
            Self::UniformRandom { .. } => "uniform-random",
            Self::AffineRandom { .. } => "affine-random",
            Self::Zero => "zero",
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::UniformRandom { .. } | Self::AffineRandom { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub orders: Vec<f64>,
    /// Cells per axis.
    pub m: Vec<usize>,
    pub tau: f64,
    pub t_end: f64,
    /// Coarse step of each temporal error row; each row compares `tau` with `tau / 2`.
    pub tau_list: Vec<f64>,
    /// Mesh widths of the spatial study.
    pub h_list: Vec<f64>,
    /// Mesh width of the reference solution in the spatial study.
    pub h_ref: Option<f64>,
    /// Step used by the spatial study; one step of `t_end` when absent.
    pub space_tau: Option<f64>,
    pub ic: IcSpec,
    pub seed: u64,
    pub output: PathBuf,
    pub snapshot_times: Vec<f64>,
}

fn halving(first: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| first / f64::from(1u32 << k)).collect()
}

fn pow2_inv(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|k| 1.0 / f64::from(1u32 << k)).collect()
}

impl ExperimentConfig {
    /// Reference setup of `experiment` in `dim` dimensions.
    pub fn preset(experiment: Experiment, dim: usize) -> CliResult<Self> {
        if dim != 2 && dim != 3 {
            return Err(CliError::Config(format!("dim must be 2 or 3, got {dim}")));
        }
        let base = Self {
            experiment,
            dim,
            a: 0.0,
            b: 1.0,
            eps: 0.1,
            orders: vec![1.5; dim],
            m: vec![64; dim],
            tau: 0.01,
            t_end: 1.0,
            tau_list: Vec::new(),
            h_list: Vec::new(),
            h_ref: None,
            space_tau: None,
            ic: IcSpec::Zero,
            seed: 0,
            output: PathBuf::from("out"),
            snapshot_times: Vec::new(),
        };
        let cfg = match experiment {
            Experiment::Example1 => {
                if dim != 2 {
                    return Err(CliError::Config("example1 is two-dimensional".into()));
                }
                Self {
                    b: 2.0,
                    m: vec![256; 2],
                    tau: 0.01,
                    tau_list: halving(0.01, 5),
                    h_list: pow2_inv(4, 8),
                    h_ref: Some(1.0 / 2048.0),
                    ic: IcSpec::GaussianPair {
                        amplitude: 0.5,
                        sharpness: 100.0,
                        centers: [2.0 / 3.0, 4.0 / 3.0],
                    },
                    ..base
                }
            }
            Experiment::Example2 => {
                if dim != 3 {
                    return Err(CliError::Config("example2 is three-dimensional".into()));
                }
                Self {
                    tau: 0.05,
                    tau_list: halving(0.05, 5),
                    h_list: pow2_inv(4, 7),
                    h_ref: Some(1.0 / 512.0),
                    ic: IcSpec::GaussianPair {
                        amplitude: 0.5,
                        sharpness: 500.0,
                        centers: [3.0 / 8.0, 5.0 / 8.0],
                    },
                    ..base
                }
            }
            Experiment::Example3 => {
                let (m, t_end, snaps) = if dim == 2 {
                    (256, 100.0, vec![5.0, 60.0, 100.0])
                } else {
                    (128, 200.0, vec![15.0, 100.0, 200.0])
                };
                Self {
                    eps: 0.01,
                    m: vec![m; dim],
                    tau: 0.1,
                    t_end,
                    ic: IcSpec::UniformRandom { lo: -0.9, hi: 0.9 },
                    snapshot_times: snaps,
                    ..base
                }
            }
            Experiment::Example4 => Self {
                m: vec![if dim == 2 { 256 } else { 128 }; dim],
                tau: 0.01,
                t_end: 5.0,
                ic: IcSpec::AffineRandom {
                    scale: 0.95,
                    offset: 0.05,
                },
                ..base
            },
            Experiment::Example5 => Self {
                eps: 0.01,
                m: vec![128; dim],
                tau: 0.01,
                t_end: 2.0,
                ic: if dim == 2 {
                    IcSpec::AffineRandom {
                        scale: 0.8,
                        offset: -0.4,
                    }
                } else {
                    IcSpec::AffineRandom {
                        scale: 1.0,
                        offset: -0.5,
                    }
                },
                ..base
            },
            Experiment::Custom => base,
        };
        Ok(cfg)
    }

    /// Parses a config file body. The `experiment` and `dim` keys select
    /// the preset; every other key overrides it.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        let experiment = match entries.remove("experiment") {
            Some((_, v)) => v.parse()?,
            None => Experiment::Custom,
        };
        let dim = match entries.remove("dim") {
            Some((line, v)) => parse_scalar::<usize>(&v).map_err(|e| at(line, "dim", e))?,
            None => match experiment {
                Experiment::Example2 => 3,
                _ => 2,
            },
        };
        let mut cfg = Self::preset(experiment, dim)?;
        let mut ic_kind = None;
        let mut ic_params = BTreeMap::new();
        for (key, (line, value)) in entries {
            cfg.apply(&key, &value, &mut ic_kind, &mut ic_params)
                .map_err(|e| at(line, &key, e))?;
        }
        if ic_kind.is_some() || !ic_params.is_empty() {
            cfg.ic = build_ic(ic_kind.as_deref(), &cfg.ic, &ic_params)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn apply(
        &mut self,
        key: &str,
        value: &str,
        ic_kind: &mut Option<String>,
        ic_params: &mut BTreeMap<String, String>,
    ) -> CliResult<()> {
        match key {
            "a" => self.a = parse_scalar(value)?,
            "b" => self.b = parse_scalar(value)?,
            "eps" => self.eps = parse_scalar(value)?,
            "orders" => self.orders = per_axis(parse_list(value)?, self.dim, "orders")?,
            "m" => self.m = per_axis(parse_list(value)?, self.dim, "m")?,
            "tau" => self.tau = parse_scalar(value)?,
            "t_end" => self.t_end = parse_scalar(value)?,
            "tau_list" => self.tau_list = parse_list(value)?,
            "h_list" => self.h_list = parse_list(value)?,
            "h_ref" => self.h_ref = Some(parse_scalar(value)?),
            "space_tau" => self.space_tau = Some(parse_scalar(value)?),
            "seed" => self.seed = parse_scalar(value)?,
            "output" => self.output = PathBuf::from(value),
            "snapshot_times" => self.snapshot_times = parse_list(value)?,
            "ic" => *ic_kind = Some(value.to_string()),
            k if k.starts_with("ic.") => {
                ic_params.insert(k[3..].to_string(), value.to_string());
            }
            _ => return Err(CliError::Config("unknown key".into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.orders.len() != self.dim || self.m.len() != self.dim {
            return Err(CliError::Config(format!(
                "orders and m need {} entries each",
                self.dim
            )));
        }
        self.grid()
            .and_then(|_| self.frac_orders())
            .map_err(|e| CliError::Config(e.to_string()))?;
        for (name, v) in [("eps", self.eps), ("tau", self.tau), ("t_end", self.t_end)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.tau > 0.0) {
            return Err(CliError::Config("tau must be > 0".into()));
        }
        match self.ic {
            IcSpec::GaussianPair { sharpness, .. } if !(sharpness >= 0.0) => {
                Err(CliError::Config("ic.sharpness must be >= 0".into()))
            }
            IcSpec::UniformRandom { lo, hi } if !(lo <= hi) => {
                Err(CliError::Config(format!("ic.lo = {lo} exceeds ic.hi = {hi}")))
            }
            _ => Ok(()),
        }
    }

    pub fn grid(&self) -> CliResult<GridSpec> {
        Ok(GridSpec::new(self.a, self.b, self.m.clone())?)
    }

    pub fn frac_orders(&self) -> CliResult<FracOrders> {
        Ok(FracOrders::new(self.orders.clone())?)
    }

    /// Solver settings on `grid` with step `tau` up to `t_end`.
    pub fn solver_config(&self, grid: GridSpec, tau: f64, t_end: f64) -> CliResult<SolverConfig> {
        Ok(SolverConfig::new(grid, self.frac_orders()?, self.eps, tau, t_end)?)
    }

    /// Cells per axis for mesh width `h`, which must divide the domain.
    pub fn cells_for(&self, h: f64) -> CliResult<usize> {
        let cells = (self.b - self.a) / h;
        let rounded = cells.round();
        if !(h > 0.0) || rounded < 1.0 || (cells - rounded).abs() > 1e-9 * rounded {
            return Err(CliError::Config(format!(
                "mesh width {h} does not divide ({}, {})",
                self.a, self.b
            )));
        }
        Ok(rounded as usize)
    }
}

fn at(line: usize, key: &str, e: CliError) -> CliError {
    CliError::Config(format!("line {line}, key '{key}': {e}"))
}

/// Parses a number, allowing `p/q` fractions for floats.
pub fn parse_scalar<T: FromStr>(s: &str) -> CliResult<T> {
    let s = s.trim();
    if let Ok(v) = s.parse::<T>() {
        return Ok(v);
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().map_err(|_| bad_number(s))?;
        let q: f64 = q.trim().parse().map_err(|_| bad_number(s))?;
        return format!("{:e}", p / q).parse::<T>().map_err(|_| bad_number(s));
    }
    Err(bad_number(s))
}

fn bad_number(s: &str) -> CliError {
    CliError::Config(format!("cannot parse '{s}' as a number"))
}

pub fn parse_list<T: FromStr>(s: &str) -> CliResult<Vec<T>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_scalar).collect()
}

fn per_axis<T: Clone>(v: Vec<T>, dim: usize, name: &str) -> CliResult<Vec<T>> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); dim]),
        n if n == dim => Ok(v),
        n => Err(CliError::Config(format!("{name} has {n} entries for {dim} axes"))),
    }
}

fn build_ic(kind: Option<&str>, current: &IcSpec, params: &BTreeMap<String, String>) -> CliResult<IcSpec> {
    let kind = kind.unwrap_or(current.kind());
    let get = |name: &str, default: Option<f64>| -> CliResult<f64> {
        match params.get(name) {
            Some(v) => parse_scalar(v),
            None => default.ok_or_else(|| CliError::Config(format!("ic '{kind}' needs ic.{name}"))),
        }
    };
    let allowed: &[&str] = match kind {
        "gaussian-pair" => &["amplitude", "sharpness", "centers"],
        "uniform-random" => &["lo", "hi"],
        "affine-random" => &["scale", "offset"],
        "zero" => &[],
        other => return Err(CliError::Config(format!("unknown ic kind '{other}'"))),
    };
    if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::Config(format!("ic.{extra} does not apply to ic '{kind}'")));
    }
    Ok(match kind {
        "gaussian-pair" => {
            let (amp, sharp, centers) = match current {
                IcSpec::GaussianPair {
                    amplitude,
                    sharpness,
                    centers,
                } => (Some(*amplitude), Some(*sharpness), Some(*centers)),
                _ => (None, None, None),
            };
            let centers = match params.get("centers") {
                Some(v) => {
                    let c: Vec<f64> = parse_list(v)?;
                    <[f64; 2]>::try_from(c.as_slice())
                        .map_err(|_| CliError::Config("ic.centers needs two values".into()))?
                }
                None => centers.ok_or_else(|| CliError::Config("ic 'gaussian-pair' needs ic.centers".into()))?,
            };
            IcSpec::GaussianPair {
                amplitude: get("amplitude", amp)?,
                sharpness: get("sharpness", sharp)?,
                centers,
            }
        }
        "uniform-random" => {
            let (lo, hi) = match current {
                IcSpec::UniformRandom { lo, hi } => (Some(*lo), Some(*hi)),
                _ => (None, None),
            };
            IcSpec::UniformRandom {
                lo: get("lo", lo)?,
                hi: get("hi", hi)?,
            }
        }
        "affine-random" => {
            let (scale, offset) = match current {
                IcSpec::AffineRandom { scale, offset } => (Some(*scale), Some(*offset)),
                _ => (None, None),
            };
            IcSpec::AffineRandom {
                scale: get("scale", scale)?,
                offset: get("offset", offset)?,
            }
        }
        _ => IcSpec::Zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for (e, d) in [
            (Experiment::Example1, 2),
            (Experiment::Example2, 3),
            (Experiment::Example3, 2),
            (Experiment::Example3, 3),
            (Experiment::Example4, 2),
            (Experiment::Example4, 3),
            (Experiment::Example5, 2),
            (Experiment::Example5, 3),
            (Experiment::Custom, 2),
        ] {
            ExperimentConfig::preset(e, d).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset(Experiment::Example1, 3).is_err());
        assert!(ExperimentConfig::preset(Experiment::Custom, 4).is_err());
    }

    #[test]
    fn example1_preset_values() {
        let c = ExperimentConfig::preset(Experiment::Example1, 2).unwrap();
        assert_eq!((c.a, c.b, c.eps, c.t_end), (0.0, 2.0, 0.1, 1.0));
        assert_eq!(c.m, vec![256, 256]);
        assert_eq!(c.tau_list, vec![0.01, 0.005, 0.0025, 0.00125, 0.000625]);
        assert_eq!(c.h_list, vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]);
    }

    #[test]
    fn parse_overrides() {
        let text = "
            # temporal study with another pair of orders
            experiment = example1
            orders = 1.2, 1.8   # per axis
            tau_list = 1/100, 1/200
            seed = 42
        ";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.experiment, Experiment::Example1);
        assert_eq!(c.orders, vec![1.2, 1.8]);
        assert_eq!(c.tau_list, vec![0.01, 0.005]);
        assert_eq!(c.seed, 42);
        assert_eq!(c.m, vec![256, 256]);
    }

    #[test]
    fn parse_custom_with_ic() {
        let text = "dim = 3\nm = 16\norders = 1.3\nic = uniform-random\nic.lo = -0.5\nic.hi = 0.5\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.m, vec![16; 3]);
        assert_eq!(c.orders, vec![1.3; 3]);
        assert_eq!(c.ic, IcSpec::UniformRandom { lo: -0.5, hi: 0.5 });
        let partial = ExperimentConfig::parse("experiment = example1\nic.sharpness = 50\n").unwrap();
        match partial.ic {
            IcSpec::GaussianPair { sharpness, amplitude, .. } => assert_eq!((sharpness, amplitude), (50.0, 0.5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "unknown = 1",
            "experiment = example9",
            "tau",
            "tau = abc",
            "tau = 0.1\ntau = 0.2",
            "orders = 1.5, 1.5, 1.5",
            "orders = 2.5",
            "ic = spiral",
            "ic = uniform-random",
            "ic = zero\nic.lo = 1",
            "m = 2",
            "dim = 4",
            "tau = 0",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(CliError::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn fractions() {
        assert_eq!(parse_scalar::<f64>("1/4").unwrap(), 0.25);
        assert_eq!(parse_scalar::<f64>(" 3 / 8 ").unwrap(), 0.375);
        assert_eq!(parse_scalar::<usize>("12").unwrap(), 12);
        assert!(parse_scalar::<f64>("1/x").is_err());
    }

    #[test]
    fn cells() {
        let c = ExperimentConfig::preset(Experiment::Example1, 2).unwrap();
        assert_eq!(c.cells_for(1.0 / 16.0).unwrap(), 32);
        assert!(c.cells_for(0.3).is_err());
    }
}
