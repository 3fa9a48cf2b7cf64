use std::f64::consts::PI;

use super::Model;
use crate::error::{Error, Result};
use crate::spectral::{EigenbasisOperator, Spectrum};

/// `<m| x - L/2 |n>` for 1-based quantum numbers.
pub fn box_element(m: usize, n: usize, length: f64) -> f64 {
    if (m + n).is_multiple_of(2) {
        return 0.0;
    }
    // integer products keep the element symmetric in (m, n) to the last bit
    let d = (n * n).abs_diff(m * m) as f64;
    length * 8.0 * (m * n) as f64 / (PI * PI * d * d)
}

fn box_energy(n: usize, length: f64, mass: f64) -> f64 {
    let n = n as f64;
    n * n * PI * PI / (2.0 * mass * length * length)
}

/// Particle in a 1D box, position measured from the centre.
pub fn box_position_1d(dim: usize, length: f64, mass: f64) -> Result<Model> {
    if dim < 2 || !(length > 0.0) || !(mass > 0.0) {
        return Err(Error::InvalidParameter("box needs dim >= 2 and positive length and mass".into()));
    }
    let spectrum = Spectrum::new((1..=dim).map(|n| box_energy(n, length, mass)).collect())?;
    let op = EigenbasisOperator::symmetric_from_fn(dim, |l, k| box_element(l + 1, k + 1, length));
    Model::new(spectrum, op)
}

/// Rectangular box, observable `x ⊗ 1`, product states sorted by energy.
pub fn box_position_2d(dims: (usize, usize), lengths: (f64, f64), mass: f64) -> Result<Model> {
    let (dx, dy) = dims;
    let (lx, ly) = lengths;
    if dx < 2 || dy < 1 || !(lx > 0.0 && ly > 0.0) || !(mass > 0.0) {
        return Err(Error::InvalidParameter("invalid 2D box parameters".into()));
    }
    let mut states: Vec<(f64, usize, usize)> = Vec::with_capacity(dx * dy);
    for n in 1..=dx {
        for m in 1..=dy {
            states.push((box_energy(n, lx, mass) + box_energy(m, ly, mass), n, m));
        }
    }
    states.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut warnings = Vec::new();
    let scale = states.last().map(|s| s.0).unwrap_or(1.0);
    let collisions = states.windows(2).filter(|w| (w[1].0 - w[0].0).abs() <= 1e-10 * scale).count();
    if collisions > 0 {
        warnings.push(format!(
            "{collisions} energy collisions within 1e-10: side-length ratio looks rational"
        ));
    }

    let spectrum = Spectrum::new(states.iter().map(|s| s.0).collect())?;
    let op = EigenbasisOperator::symmetric_from_fn(states.len(), |a, b| {
        let (_, n1, m1) = states[a];
        let (_, n2, m2) = states[b];
        if m1 == m2 {
            box_element(n1, n2, lx)
        } else {
            0.0
        }
    });
    let mut model = Model::new(spectrum, op)?;
    model.warnings = warnings;
    Ok(model)
}
