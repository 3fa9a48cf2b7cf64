use serde::{Deserialize, Serialize};

use super::semiclassical::bohr_sommerfeld_energy;
use super::Model;
use crate::error::{Error, Result};
use crate::linalg::SymTridiag;
use crate::par;
use crate::spectral::{EigenbasisOperator, Spectrum};

/// Grid eigensolver settings for `-ψ''/2m + x^p ψ = E ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnharmonicConfig {
    pub p: u32,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Automatically chosen when absent.
    #[serde(default)]
    pub grid_halfwidth: Option<f64>,
    #[serde(default = "default_mass")]
    pub mass: f64,
    pub n_states: usize,
}

fn default_grid_points() -> usize {
    4096
}

fn default_mass() -> f64 {
    1.0
}

/// Relative magnitude below which grid matrix elements are round-off.
pub const PRECISION_FLOOR: f64 = 1e-13;
const BOUNDARY_TOLERANCE: f64 = 1e-10;

impl AnharmonicConfig {
    pub fn new(p: u32, n_states: usize) -> Self {
        Self { p, grid_points: default_grid_points(), grid_halfwidth: None, mass: 1.0, n_states }
    }

    fn validate(&self) -> Result<()> {
        if self.p < 2 || !self.p.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("p must be even and >= 2, got {}", self.p)));
        }
        if self.n_states < 2 || self.grid_points < 4 * self.n_states {
            return Err(Error::InvalidParameter("need n_states >= 2 and grid_points >= 4 n_states".into()));
        }
        if !(self.mass > 0.0) || self.grid_halfwidth.is_some_and(|h| !(h > 0.0)) {
            return Err(Error::InvalidParameter("mass and halfwidth must be positive".into()));
        }
        Ok(())
    }

    /// Half-width used when none is given: the larger of 1.5 turning points of
    /// the top state and the point where its WKB tail has decayed by e^{-40}.
    pub fn auto_halfwidth(&self) -> f64 {
        let p = self.p as i32;
        let e = 1.2 * bohr_sommerfeld_energy(self.p, self.n_states - 1, self.mass);
        let xt = e.powf(1.0 / self.p as f64);
        let mut x = xt;
        let mut action = 0.0;
        let dx = xt * 1e-3;
        while action < 40.0 {
            x += dx;
            action += (2.0 * self.mass * (x.powi(p) - e)).max(0.0).sqrt() * dx;
        }
        (1.5 * xt).max(x)
    }
}

/// Lowest `n_states` levels and position matrix elements on a symmetric
/// three-point finite-difference grid.
pub fn anharmonic_solve(cfg: &AnharmonicConfig) -> Result<Model> {
    cfg.validate()?;
    let halfwidth = cfg.grid_halfwidth.unwrap_or_else(|| cfg.auto_halfwidth());
    let n = cfg.grid_points;
    let h = 2.0 * halfwidth / (n + 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| -halfwidth + (i + 1) as f64 * h).collect();
    let kinetic = 1.0 / (2.0 * cfg.mass * h * h);
    let diag = x.iter().map(|xi| 2.0 * kinetic + xi.powi(cfg.p as i32)).collect();
    let t = SymTridiag::new(diag, vec![-kinetic; n - 1])?;

    let energies = t.lowest_eigenvalues(cfg.n_states);
    let states: Vec<Vec<f64>> = par::map(energies.len(), |j| {
        let mut v = t.inverse_iteration(energies[j]);
        let norm = (v.iter().map(|a| a * a).sum::<f64>() * h).sqrt();
        let peak = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let first = v.iter().find(|a| a.abs() > 1e-3 * peak).copied().unwrap_or(1.0);
        let s = first.signum() / norm;
        v.iter_mut().for_each(|a| *a *= s);
        v
    });

    for (j, v) in states.iter().enumerate() {
        let amplitude = v[0].abs().max(v[n - 1].abs());
        if amplitude >= BOUNDARY_TOLERANCE {
            return Err(Error::BoundaryLeak { state: j, amplitude });
        }
    }

    let m = states.len();
    let op = EigenbasisOperator::symmetric_from_fn(m, |l, k| {
        // equal parity elements vanish by the reflection symmetry of the grid
        if (l + k) % 2 == 0 {
            return 0.0;
        }
        let (a, b) = (&states[l], &states[k]);
        h * (0..n).map(|i| a[i] * x[i] * b[i]).sum::<f64>()
    });
    let floor = PRECISION_FLOOR * op.max_abs();
    let op = op.with_noise_floor(floor);
    let below = op.count_below_floor();

    let mut model = Model::new(Spectrum::new(energies)?, op)?;
    if below > 0 {
        model.warnings.push(format!(
            "{below} matrix elements below the precision floor {floor:.3e}"
        ));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_reduction() {
        let cfg = AnharmonicConfig { grid_points: 6000, ..AnharmonicConfig::new(2, 20) };
        let m = anharmonic_solve(&cfg).unwrap();
        for (k, e) in m.spectrum.energies().iter().enumerate() {
            let exact = 2f64.sqrt() * (k as f64 + 0.5);
            assert!((e - exact).abs() < 1e-4 * exact, "{k}: {e} vs {exact}");
        }
    }

    #[test]
    fn parity_and_symmetry() {
        let m = anharmonic_solve(&AnharmonicConfig::new(4, 12)).unwrap();
        let op = &m.operator;
        for l in 0..12 {
            for k in 0..12 {
                assert_eq!(op.get(l, k), op.get(k, l));
                if (l + k) % 2 == 0 {
                    assert!(op.get(l, k).abs() < 1e-12);
                }
            }
        }
        assert!(op.noise_floor().is_some());
    }

    #[test]
    fn narrow_grid_leaks() {
        let cfg = AnharmonicConfig { grid_halfwidth: Some(1.5), grid_points: 512, ..AnharmonicConfig::new(4, 10) };
        assert!(matches!(anharmonic_solve(&cfg), Err(Error::BoundaryLeak { .. })));
    }

    #[test]
    fn odd_power_rejected() {
        assert!(anharmonic_solve(&AnharmonicConfig::new(3, 10)).is_err());
    }
}
