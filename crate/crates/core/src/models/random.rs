use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Model, StructureSpec};
use crate::error::{Error, Result};
use crate::spectral::{EigenbasisOperator, Spectrum};

/// Random operator `O_lk = f(|E_l - E_k|) R_lk / sqrt(D)` on an equally spaced
/// spectrum over `[0, bandwidth]`.
///
/// `R` is symmetric standard normal with zero diagonal. Row `l` draws from its
/// own ChaCha stream, so the matrix is identical for any thread count.
pub fn random_ensemble(dim: usize, spec: &StructureSpec, bandwidth: f64, seed: u64) -> Result<Model> {
    if dim < 2 || !(bandwidth > 0.0) {
        return Err(Error::InvalidParameter("random ensemble needs dim >= 2 and bandwidth > 0".into()));
    }
    spec.validate()?;
    let step = bandwidth / (dim - 1) as f64;
    let energies: Vec<f64> = (0..dim).map(|l| l as f64 * step).collect();
    let rows: Vec<Vec<f64>> = crate::par::map(dim, |l| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(l as u64);
        (l + 1..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
    });
    let scale = 1.0 / (dim as f64).sqrt();
    let e = &energies;
    let op = EigenbasisOperator::symmetric_from_fn(dim, |l, k| {
        if l == k {
            return 0.0;
        }
        spec.amplitude(e[k] - e[l]) * rows[l][k - l - 1] * scale
    });
    Model::new(Spectrum::new(energies)?, op)
}
