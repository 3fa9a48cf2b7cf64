//! Run configuration: one TOML file per run, unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use opgrowth::dynamics::PropagationOptions;
use opgrowth::lanczos::LanczosOptions;
use opgrowth::models::{
    anharmonic_solve, box_position_1d, box_position_2d, harmonic_position, harmonic_power, random_ensemble,
    semiclassical_operator, AnharmonicConfig, DecayLaw, Model, NearestElements,
};
use opgrowth::spin::{build_hamiltonian, diagonalize_to_eigenbasis, flip_flop_operator, ChainConfig, StructureOptions};
use serde::{Deserialize, Serialize};

fn one() -> f64 {
    1.0
}

fn default_grid_points() -> usize {
    4096
}

/// Chain lengths accepted from configs.
pub const XXZ_SITES: std::ops::RangeInclusive<usize> = 8..=14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Position operator, or its `power`-th power, of the harmonic oscillator.
    Harmonic {
        dim: usize,
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        power: Option<u32>,
    },
    Box1d {
        dim: usize,
        length: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    Box2d {
        dims: (usize, usize),
        lengths: (f64, f64),
        #[serde(default = "one")]
        mass: f64,
    },
    /// Grid eigensolver for `V = x^p`.
    Anharmonic {
        p: u32,
        n_states: usize,
        #[serde(default = "default_grid_points")]
        grid_points: usize,
        #[serde(default)]
        grid_halfwidth: Option<f64>,
        #[serde(default = "one")]
        mass: f64,
    },
    /// Asymptotic matrix elements on Bohr–Sommerfeld levels.
    Semiclassical {
        p: u32,
        dim: usize,
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        prefactor: f64,
    },
    Random {
        dim: usize,
        bandwidth: f64,
        decay: DecayLaw,
    },
    /// Flip-flop observable of the XXZ chain in its `S_z` sector.
    Xxz {
        sites: usize,
        j1: f64,
        #[serde(default)]
        j2: f64,
        delta1: f64,
        #[serde(default)]
        delta2: f64,
        #[serde(default)]
        sz: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub t_max: f64,
    pub t_steps: usize,
    /// Explicit time grid; overrides `t_max` and `t_steps`.
    pub times: Option<Vec<f64>>,
    pub propagation: PropagationOptions,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self { t_max: 5.0, t_steps: 100, times: None, propagation: PropagationOptions::default() }
    }
}

impl DynamicsConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(t) = &self.times {
            if t.is_empty() {
                bail!("dynamics.times is empty");
            }
            return Ok(t.clone());
        }
        if !(self.t_max > 0.0) || self.t_steps == 0 {
            bail!("dynamics needs t_max > 0 and t_steps >= 1");
        }
        Ok((0..=self.t_steps).map(|i| self.t_max * i as f64 / self.t_steps as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Growth-fit window `[n_lo, n_hi]`; detected when absent.
    pub window: Option<(usize, usize)>,
    /// Decay class used for the rate prediction. Random ensembles default to
    /// their prescribed law.
    pub decay: Option<DecayLaw>,
    pub structure: StructureOptions,
}

/// Parameter grid for `sweep`. Empty lists leave the base value in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub p: Vec<u32>,
    pub sites: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Keep only the lowest `keep_n` eigenstates.
    #[serde(default)]
    pub keep_n: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub lanczos: LanczosOptions,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn expand<T: Copy>(
    points: Vec<RunConfig>,
    values: &[T],
    apply: impl Fn(&mut RunConfig, T) -> Result<()>,
) -> Result<Vec<RunConfig>> {
    if values.is_empty() {
        return Ok(points);
    }
    let mut out = Vec::with_capacity(points.len() * values.len());
    for c in &points {
        for &v in values {
            let mut c = c.clone();
            apply(&mut c, v)?;
            out.push(c);
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Reads a TOML config, or the config echoed in a run manifest (`.json`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).context("parsing manifest")?;
            let c = v.get("config").context("manifest has no config block")?;
            serde_json::from_value(c.clone()).context("invalid config in manifest")?
        } else {
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            bail!("beta must be positive, got {}", self.beta);
        }
        if let ModelSpec::Xxz { sites, .. } = self.model {
            if !XXZ_SITES.contains(&sites) {
                bail!("xxz sites must lie in {XXZ_SITES:?}, got {sites}");
            }
        }
        if self.sweep.sites.iter().any(|s| !XXZ_SITES.contains(s)) {
            bail!("sweep sites must lie in {XXZ_SITES:?}");
        }
        Ok(())
    }

    /// Decay class for the rate prediction.
    pub fn decay_class(&self) -> Option<DecayLaw> {
        self.analysis.decay.or(match self.model {
            ModelSpec::Random { decay, .. } => Some(decay),
            _ => None,
        })
    }

    pub fn build(&self) -> Result<Model> {
        let model = match &self.model {
            &ModelSpec::Harmonic { dim, mass, omega, power } => match power {
                None | Some(1) => harmonic_position(dim, mass, omega)?,
                Some(q) => harmonic_power(dim, q, mass, omega)?,
            },
            &ModelSpec::Box1d { dim, length, mass } => box_position_1d(dim, length, mass)?,
            &ModelSpec::Box2d { dims, lengths, mass } => box_position_2d(dims, lengths, mass)?,
            &ModelSpec::Anharmonic { p, n_states, grid_points, grid_halfwidth, mass } => {
                anharmonic_solve(&AnharmonicConfig { p, grid_points, grid_halfwidth, mass, n_states })?
            }
            &ModelSpec::Semiclassical { p, dim, mass, prefactor } => {
                semiclassical_operator(p, dim, mass, prefactor, &NearestElements::Asymptotic)?
            }
            ModelSpec::Random { dim, bandwidth, decay } => random_ensemble(*dim, decay, *bandwidth, self.seed)?,
            &ModelSpec::Xxz { sites, j1, j2, delta1, delta2, sz } => {
                let cfg = ChainConfig { sites, j1, j2, delta1, delta2, sz };
                let (_, h) = build_hamiltonian(&cfg)?;
                let (_, b) = flip_flop_operator(&cfg)?;
                let (spectrum, operator) = diagonalize_to_eigenbasis(&h, &b)?;
                Model::new(spectrum, operator)?
            }
        };
        match self.keep_n {
            Some(n) => Ok(model.truncated(n)?),
            None => Ok(model),
        }
    }

    /// Copies with every combination of the sweep grid applied.
    pub fn sweep_points(&self) -> Result<Vec<RunConfig>> {
        let s = &self.sweep;
        let mut points = vec![self.clone()];
        points = expand(points, &s.beta, |c, b| {
            c.beta = b;
            Ok(())
        })?;
        points = expand(points, &s.gamma, |c, g| match &mut c.model {
            ModelSpec::Random { decay: DecayLaw::Exponential { gamma }, .. } => {
                *gamma = g;
                Ok(())
            }
            _ => bail!("sweep.gamma needs a random model with exponential decay"),
        })?;
        points = expand(points, &s.p, |c, v| match &mut c.model {
            ModelSpec::Anharmonic { p, .. } | ModelSpec::Semiclassical { p, .. } => {
                *p = v;
                Ok(())
            }
            _ => bail!("sweep.p needs an anharmonic or semiclassical model"),
        })?;
        points = expand(points, &s.sites, |c, v| match &mut c.model {
            ModelSpec::Xxz { sites, .. } => {
                *sites = v;
                Ok(())
            }
            _ => bail!("sweep.sites needs an xxz model"),
        })?;
        for p in &mut points {
            p.sweep = SweepConfig::default();
        }
        Ok(points)
    }
}
