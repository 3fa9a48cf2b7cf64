//! Spectra, eigenbasis operators, the Wightman inner product and the
//! Liouvillian, all in the energy eigenbasis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{ensure_dim, Error, Result};
use crate::par;

/// Arithmetic used for inner products and moment recursions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

/// Ordered energy eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    energies: Vec<f64>,
}

impl Spectrum {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidParameter("spectrum must be non-empty".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("non-finite energy".into()));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("energies must be sorted non-decreasing".into()));
        }
        Ok(Self { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn min(&self) -> f64 {
        self.energies[0]
    }

    pub fn max(&self) -> f64 {
        self.energies[self.energies.len() - 1]
    }

    /// Lowest `n` levels.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.dimension() {
            return Err(Error::InvalidParameter(format!(
                "cannot keep {n} of {} levels",
                self.dimension()
            )));
        }
        Ok(Self { energies: self.energies[..n].to_vec() })
    }
}

/// Real matrix of an observable in the energy eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenbasisOperator {
    elements: DMatrix<f64>,
    hermitian: bool,
    noise_floor: Option<f64>,
}

impl EigenbasisOperator {
    /// Wrap a square matrix. With `hermitian` set the matrix must be exactly symmetric.
    pub fn new(elements: DMatrix<f64>, hermitian: bool) -> Result<Self> {
        ensure_dim(elements.nrows(), elements.ncols())?;
        if elements.nrows() == 0 {
            return Err(Error::InvalidParameter("operator must be non-empty".into()));
        }
        if hermitian && elements != elements.transpose() {
            return Err(Error::InvalidParameter("matrix flagged hermitian is not symmetric".into()));
        }
        Ok(Self { elements, hermitian, noise_floor: None })
    }

    /// Symmetric operator from the upper triangle `f(l, k)`, `l <= k`.
    pub fn symmetric_from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let mut data = vec![0.0; dim * dim];
        // column-major: column k holds entries (l, k)
        par::for_each_chunk_mut(&mut data, dim.max(1), |k, col| {
            for (l, v) in col.iter_mut().enumerate() {
                *v = if l <= k { f(l, k) } else { f(k, l) };
            }
        });
        Self {
            elements: DMatrix::from_vec(dim, dim, data),
            hermitian: true,
            noise_floor: None,
        }
    }

    /// Attach the magnitude below which elements are round-off dominated.
    pub fn with_noise_floor(mut self, floor: f64) -> Self {
        self.noise_floor = Some(floor);
        self
    }

    pub fn elements(&self) -> &DMatrix<f64> {
        &self.elements
    }

    pub fn into_elements(self) -> DMatrix<f64> {
        self.elements
    }

    #[inline]
    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.elements[(l, k)]
    }

    pub fn dimension(&self) -> usize {
        self.elements.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn noise_floor(&self) -> Option<f64> {
        self.noise_floor
    }

    /// Number of nonzero off-diagonal entries below the noise floor.
    pub fn count_below_floor(&self) -> usize {
        let Some(floor) = self.noise_floor else { return 0 };
        let d = self.dimension();
        let mut n = 0;
        for k in 0..d {
            for l in 0..d {
                let v = self.elements[(l, k)].abs();
                if l != k && v > 0.0 && v < floor {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn max_abs(&self) -> f64 {
        self.elements.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to the lowest `n` eigenstates.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.dimension() {
            return Err(Error::InvalidParameter(format!(
                "cannot keep {n} of {} states",
                self.dimension()
            )));
        }
        Ok(Self {
            elements: self.elements.view((0, 0), (n, n)).into_owned(),
            hermitian: self.hermitian,
            noise_floor: self.noise_floor,
        })
    }

    pub fn to_liouville(&self) -> LiouvilleVector {
        LiouvilleVector { amplitudes: self.elements.clone() }
    }
}

/// Thermal state data: inverse temperature, partition function and the
/// factorized Wightman weights `w_lk = g_l g_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalEnsemble {
    beta: f64,
    ln_z: f64,
    log_g: Vec<f64>,
    g: Vec<f64>,
}

impl ThermalEnsemble {
    pub fn new(spec: &Spectrum, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        let e = spec.energies();
        let e0 = spec.min();
        let shifted: Vec<f64> = e.iter().map(|x| -beta * (x - e0)).collect();
        let z_shifted = par::reduce(shifted.len(), 0.0, |r| shifted[r].iter().map(|s| s.exp()).sum());
        let ln_zs = z_shifted.ln();
        let log_g: Vec<f64> = shifted.iter().map(|s| 0.5 * (s - ln_zs)).collect();
        let g = log_g.iter().map(|x| x.exp()).collect();
        Ok(Self { beta, ln_z: ln_zs - beta * e0, log_g, g })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Partition function `Σ_l exp(-β E_l)`; may overflow where `ln_z` does not.
    pub fn z(&self) -> f64 {
        self.ln_z.exp()
    }

    pub fn ln_z(&self) -> f64 {
        self.ln_z
    }

    pub fn dimension(&self) -> usize {
        self.g.len()
    }

    /// `g_l = exp(-β E_l / 2) / sqrt(Z)`.
    pub fn sqrt_weights(&self) -> &[f64] {
        &self.g
    }

    pub fn log_sqrt_weights(&self) -> &[f64] {
        &self.log_g
    }

    #[inline]
    pub fn weight(&self, l: usize, k: usize) -> f64 {
        self.g[l] * self.g[k]
    }

    pub fn weights(&self) -> DMatrix<f64> {
        let d = self.dimension();
        DMatrix::from_fn(d, d, |l, k| self.weight(l, k))
    }
}

/// An operator regarded as a vector in Liouville space.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleVector {
    amplitudes: DMatrix<f64>,
}

impl LiouvilleVector {
    pub fn new(amplitudes: DMatrix<f64>) -> Result<Self> {
        ensure_dim(amplitudes.nrows(), amplitudes.ncols())?;
        Ok(Self { amplitudes })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amplitudes: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { amplitudes: DMatrix::identity(dim, dim) }
    }

    pub fn amplitudes(&self) -> &DMatrix<f64> {
        &self.amplitudes
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { amplitudes: &self.amplitudes * c }
    }

    /// `self += c x`
    pub fn axpy(&mut self, c: f64, x: &LiouvilleVector) {
        self.amplitudes.zip_apply(&x.amplitudes, |a, b| *a += c * b);
    }

    pub fn without_diagonal(&self) -> Self {
        let mut a = self.amplitudes.clone();
        a.fill_diagonal(0.0);
        Self { amplitudes: a }
    }

    /// Remove every component with `|E_l - E_k| <= tol` (the Liouvillian kernel).
    pub fn without_kernel(&self, spec: &Spectrum, tol: f64) -> Result<Self> {
        ensure_dim(spec.dimension(), self.dimension())?;
        let e = spec.energies();
        let d = self.dimension();
        let a = DMatrix::from_fn(d, d, |l, k| {
            if (e[l] - e[k]).abs() <= tol {
                0.0
            } else {
                self.amplitudes[(l, k)]
            }
        });
        Ok(Self { amplitudes: a })
    }
}

const COLS_PER_CHUNK: usize = 8;

/// Wightman inner product `Σ_lk w_lk a_lk b_lk`.
pub fn thermal_inner(a: &LiouvilleVector, b: &LiouvilleVector, ens: &ThermalEnsemble) -> Result<f64> {
    thermal_inner_with(a, b, ens, Precision::Double)
}

pub fn thermal_inner_with(
    a: &LiouvilleVector,
    b: &LiouvilleVector,
    ens: &ThermalEnsemble,
    precision: Precision,
) -> Result<f64> {
    let d = a.dimension();
    ensure_dim(d, b.dimension())?;
    ensure_dim(d, ens.dimension())?;
    let g = ens.sqrt_weights();
    let xa = a.amplitudes.as_slice();
    let xb = b.amplitudes.as_slice();
    match precision {
        Precision::Double => Ok(par::reduce_chunked(d, COLS_PER_CHUNK, 0.0, |cols| {
            let mut s = 0.0;
            for k in cols {
                let off = k * d;
                let col: f64 = (0..d).map(|l| g[l] * xa[off + l] * xb[off + l]).sum();
                s += g[k] * col;
            }
            s
        })),
        Precision::Extended => Ok(par::reduce_chunked(d, COLS_PER_CHUNK, DoubleDouble::ZERO, |cols| {
            let mut s = DoubleDouble::ZERO;
            for k in cols {
                let off = k * d;
                for l in 0..d {
                    let t = DoubleDouble::from_product(g[l] * g[k], xa[off + l]);
                    s += t.mul_f64(xb[off + l]);
                }
            }
            s
        })
        .to_f64()),
    }
}

/// `(L a)_lk = (E_l - E_k) a_lk`.
pub fn liouville_apply(a: &LiouvilleVector, spec: &Spectrum) -> Result<LiouvilleVector> {
    let d = a.dimension();
    ensure_dim(d, spec.dimension())?;
    let e = spec.energies();
    let src = a.amplitudes.as_slice();
    let mut out = vec![0.0; d * d];
    par::for_each_chunk_mut(&mut out, d, |k, col| {
        for (l, v) in col.iter_mut().enumerate() {
            *v = (e[l] - e[k]) * src[k * d + l];
        }
    });
    Ok(LiouvilleVector { amplitudes: DMatrix::from_vec(d, d, out) })
}

/// Thermal norm `sqrt(<a, a>)`.
pub fn thermal_norm(a: &LiouvilleVector, ens: &ThermalEnsemble) -> Result<f64> {
    Ok(thermal_inner(a, a, ens)?.max(0.0).sqrt())
}

/// Rescale to unit thermal norm.
pub fn normalize(a: &LiouvilleVector, ens: &ThermalEnsemble) -> Result<LiouvilleVector> {
    let n = thermal_norm(a, ens)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::ZeroNorm);
    }
    Ok(a.scaled(1.0 / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> (Spectrum, ThermalEnsemble, LiouvilleVector) {
        let spec = Spectrum::new(vec![0.0, 1.0]).unwrap();
        let ens = ThermalEnsemble::new(&spec, 1.0).unwrap();
        let a = LiouvilleVector::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        (spec, ens, a)
    }

    #[test]
    fn identity_has_unit_norm() {
        let spec = Spectrum::new(vec![-1.0, 0.3, 2.0, 5.0]).unwrap();
        for beta in [0.0, 0.5, 3.0] {
            let ens = ThermalEnsemble::new(&spec, beta).unwrap();
            let id = LiouvilleVector::identity(4);
            assert!((thermal_inner(&id, &id, &ens).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn infinite_temperature_weight() {
        let spec = Spectrum::new(vec![0.0, 1.0]).unwrap();
        let ens = ThermalEnsemble::new(&spec, 0.0).unwrap();
        let a = LiouvilleVector::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((thermal_inner(&a, &a, &ens).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_level_hand_value() {
        let (_, ens, a) = two_level();
        let expect = 2.0 * (-0.5f64).exp() / (1.0 + (-1.0f64).exp());
        assert!((thermal_inner(&a, &a, &ens).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.8868).abs() < 1e-4);
        let ext = thermal_inner_with(&a, &a, &ens, Precision::Extended).unwrap();
        assert!((ext - expect).abs() < 1e-15);
    }

    #[test]
    fn liouvillian_two_level() {
        let (spec, _, a) = two_level();
        let la = liouville_apply(&a, &spec).unwrap();
        assert_eq!(la.amplitudes()[(1, 0)], 1.0);
        assert_eq!(la.amplitudes()[(0, 1)], -1.0);
        let diag = LiouvilleVector::identity(2);
        assert!(liouville_apply(&diag, &spec).unwrap().amplitudes().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn normalize_two_level() {
        let (_, ens, a) = two_level();
        let n = normalize(&a, &ens).unwrap();
        let scale = 1.0 / (2.0 * (-0.5f64).exp() / (1.0 + (-1.0f64).exp())).sqrt();
        assert!((n.amplitudes()[(0, 1)] - scale).abs() < 1e-15);
        let again = normalize(&n, &ens).unwrap();
        assert!((&again.amplitudes - &n.amplitudes).amax() < 1e-14);
    }

    #[test]
    fn static_operator_rejected() {
        let (_, ens, _) = two_level();
        let stripped = LiouvilleVector::identity(2).without_diagonal();
        assert_eq!(normalize(&stripped, &ens), Err(Error::ZeroNorm));
    }

    #[test]
    fn partition_function() {
        let e = vec![0.1, 0.4, 0.4, 2.0];
        let spec = Spectrum::new(e.clone()).unwrap();
        let ens = ThermalEnsemble::new(&spec, 1.7).unwrap();
        let z: f64 = e.iter().map(|x| (-1.7 * x).exp()).sum();
        assert!((ens.z() - z).abs() < 1e-12 * z);
    }

    #[test]
    fn dimension_mismatch() {
        let (spec, ens, _) = two_level();
        let b = LiouvilleVector::zeros(3);
        assert!(matches!(thermal_inner(&b, &b, &ens), Err(Error::DimensionMismatch { .. })));
        assert!(liouville_apply(&b, &spec).is_err());
    }

    #[test]
    fn unsorted_spectrum_rejected() {
        assert!(Spectrum::new(vec![1.0, 0.0]).is_err());
    }
}
