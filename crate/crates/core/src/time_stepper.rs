//! Bernoulli reaction flow, the two-level Strang step and the time loop.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, FracOrders, GridSpec};
use crate::spectral_flow::SpectralCache;

/// Slack above one that is clamped back instead of rejected.
pub const DEFAULT_MAX_NORM_GUARD: f64 = 1e-12;

/// Which reaction term the splitting uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reaction {
    /// `u - u^3`, advanced by its exact Bernoulli solution.
    #[default]
    AllenCahn,
    /// Reaction flow replaced by the identity.
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub orders: FracOrders,
    pub eps: f64,
    pub tau: f64,
    pub t_end: f64,
    pub max_norm_guard: f64,
    pub reaction: Reaction,
}

impl SolverConfig {
    pub fn new(grid: GridSpec, orders: FracOrders, eps: f64, tau: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            orders,
            eps,
            tau,
            t_end,
            max_norm_guard: DEFAULT_MAX_NORM_GUARD,
            reaction: Reaction::AllenCahn,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.len() != self.grid.dim() {
            return Err(Error::Config(format!(
                "{} fractional orders for a {}-dimensional grid",
                self.orders.len(),
                self.grid.dim()
            )));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::Config(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.max_norm_guard.is_finite() && self.max_norm_guard >= 0.0) {
            return Err(Error::Config("max_norm_guard must be >= 0".into()));
        }
        self.steps().map(|_| ())
    }

    /// `t_end / tau`, which must be an integer up to 1e-12 relative.
    pub fn steps(&self) -> Result<usize> {
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        let ratio = self.t_end / self.tau;
        let steps = ratio.round();
        if (steps * self.tau - self.t_end).abs() > 1e-12 * self.t_end.max(self.tau) {
            return Err(Error::Config(format!(
                "t_end = {} is not an integer multiple of tau = {}",
                self.t_end, self.tau
            )));
        }
        Ok(steps as usize)
    }
}

/// Exact flow of `v' = v - v^3` over `half_tau`, entrywise:
/// `v / sqrt(v^2 + (1 - v^2) exp(-2 half_tau))`.
///
/// Entries with `|v|` in `(1, 1 + guard]` are clamped to `+-1` first;
/// anything larger (or non-finite) is a maximum-principle error.
pub fn nonlinear_half_step(field: &Field, half_tau: f64, guard: f64) -> Result<Field> {
    let mut out = field.clone();
    react_in_place(out.data_mut(), half_tau, guard)?;
    Ok(out)
}

const CHUNK: usize = 4096;

fn react_in_place(data: &mut [f64], half_tau: f64, guard: f64) -> Result<()> {
    let limit = 1.0 + guard;
    let decay = (-2.0 * half_tau).exp();
    // the first offending entry has the smallest index, whatever the chunk order
    let violation = data
        .par_chunks_mut(CHUNK)
        .enumerate()
        .filter_map(|(c, chunk)| {
            let mut first = None;
            for (i, v) in chunk.iter_mut().enumerate() {
                if !(v.abs() <= limit) {
                    first.get_or_insert((c * CHUNK + i, *v));
                }
                *v = bernoulli(v.clamp(-1.0, 1.0), decay);
            }
            first
        })
        .min_by_key(|&(index, _)| index);
    match violation {
        None => Ok(()),
        Some((index, value)) => Err(Error::MaxPrinciple {
            step: None,
            index,
            value,
        }),
    }
}

#[inline]
fn bernoulli(v: f64, decay: f64) -> f64 {
    let v2 = v * v;
    v / (v2 + (1.0 - v2) * decay).sqrt()
}

fn check_bounded(data: &[f64], guard: f64, step: Option<usize>) -> Result<()> {
    let limit = 1.0 + guard;
    match data.iter().position(|v| !(v.abs() <= limit)) {
        None => Ok(()),
        Some(index) => Err(Error::MaxPrinciple {
            step,
            index,
            value: data[index],
        }),
    }
}

fn clamp_unit(field: &Field, guard: f64) -> Result<Field> {
    check_bounded(field.data(), guard, None)?;
    let mut out = field.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    Ok(out)
}

fn reaction_half(field: &mut Field, config: &SolverConfig) -> Result<()> {
    match config.reaction {
        Reaction::AllenCahn => react_in_place(field.data_mut(), 0.5 * config.tau, config.max_norm_guard),
        Reaction::Off => Ok(()),
    }
}

/// One two-level Strang step: half reaction, split linear flow, half reaction.
pub fn strang_step(field: &Field, cache: &SpectralCache, config: &SolverConfig) -> Result<Field> {
    let mut out = field.clone();
    strang_step_in_place(&mut out, &mut Vec::new(), cache, config)?;
    Ok(out)
}

/// [`strang_step`] in place, with a reusable `spare` buffer for the linear
/// flow. On error the contents of `field` are unspecified.
pub fn strang_step_in_place(
    field: &mut Field,
    spare: &mut Vec<f64>,
    cache: &SpectralCache,
    config: &SolverConfig,
) -> Result<()> {
    if cache.tau() != config.tau {
        return Err(Error::Config(format!(
            "spectral cache built for tau = {}, step uses tau = {}",
            cache.tau(),
            config.tau
        )));
    }
    reaction_half(field, config)?;
    cache.linear_step_in_place(field, spare)?;
    reaction_half(field, config)
}

/// Read-only per-step callback.
pub trait Observer {
    fn observe(&mut self, step: usize, time: f64, field: &Field);
}

impl<F: FnMut(usize, f64, &Field)> Observer for F {
    fn observe(&mut self, step: usize, time: f64, field: &Field) {
        self(step, time, field)
    }
}

/// A configured solver with its spectral cache.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    cache: SpectralCache,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let cache = SpectralCache::build(&config.grid, &config.orders, config.eps, config.tau)?;
        Ok(Self { config, cache })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn cache(&self) -> &SpectralCache {
        &self.cache
    }

    pub fn step(&self, field: &Field) -> Result<Field> {
        strang_step(field, &self.cache, &self.config)
    }

    /// [`Self::step`] in place; keep `spare` between calls to reuse memory.
    pub fn step_in_place(&self, field: &mut Field, spare: &mut Vec<f64>) -> Result<()> {
        strang_step_in_place(field, spare, &self.cache, &self.config)
    }

    /// Advances `u0` by `t_end / tau` steps, calling every observer after
    /// each step with the step index (from 1), the time and the new state.
    pub fn integrate(&self, u0: &Field, observers: &mut [&mut dyn Observer]) -> Result<Field> {
        u0.ensure_shape(self.cache.shape())?;
        let guard = self.config.max_norm_guard;
        if self.config.reaction == Reaction::AllenCahn {
            check_bounded(u0.data(), guard, Some(0))?;
        }
        let steps = self.config.steps()?;
        let mut u = u0.clone();
        let mut spare = Vec::new();
        for k in 1..=steps {
            self.step_in_place(&mut u, &mut spare).map_err(|e| match e {
                Error::MaxPrinciple { index, value, .. } => Error::MaxPrinciple {
                    step: Some(k),
                    index,
                    value,
                },
                other => other,
            })?;
            let t = k as f64 * self.config.tau;
            for obs in observers.iter_mut() {
                obs.observe(k, t, &u);
            }
        }
        Ok(u)
    }

    /// Clamps `|u| <= 1 + guard` entries to the unit interval.
    pub fn clamp_initial(&self, u0: &Field) -> Result<Field> {
        clamp_unit(u0, self.config.max_norm_guard)
    }
}
