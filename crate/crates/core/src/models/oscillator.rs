use nalgebra::DMatrix;

use super::Model;
use crate::error::{Error, Result};
use crate::spectral::{EigenbasisOperator, Spectrum};

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {dim}")));
    }
    Ok(())
}

fn harmonic_spectrum(dim: usize, omega: f64) -> Result<Spectrum> {
    Spectrum::new((0..dim).map(|k| omega * (k as f64 + 0.5)).collect())
}

fn check_oscillator(mass: f64, omega: f64) -> Result<()> {
    if !(mass > 0.0 && omega > 0.0) {
        return Err(Error::InvalidParameter("mass and frequency must be positive".into()));
    }
    Ok(())
}

/// Position operator of the harmonic oscillator: `x_{k+1,k} = sqrt(1/2mω) sqrt(k+1)`.
pub fn harmonic_position(dim: usize, mass: f64, omega: f64) -> Result<Model> {
    check_dim(dim)?;
    check_oscillator(mass, omega)?;
    let s = (0.5 / (mass * omega)).sqrt();
    let op = EigenbasisOperator::symmetric_from_fn(dim, |l, k| {
        if k == l + 1 {
            s * (k as f64).sqrt()
        } else {
            0.0
        }
    });
    Model::new(harmonic_spectrum(dim, omega)?, op)
}

/// `x^q` in the oscillator basis.
///
/// The power is taken in a basis of size `dim + q` and then truncated, so the
/// returned block is exact.
pub fn harmonic_power(dim: usize, q: u32, mass: f64, omega: f64) -> Result<Model> {
    check_dim(dim)?;
    check_oscillator(mass, omega)?;
    if q == 0 {
        return Err(Error::InvalidParameter("power q must be >= 1".into()));
    }
    let n = dim + q as usize;
    let s = (0.5 / (mass * omega)).sqrt();
    let x: Vec<f64> = (1..n).map(|k| s * (k as f64).sqrt()).collect();
    // M <- M X, with X tridiagonal; column-major dense M
    let mut m = DMatrix::<f64>::identity(n, n);
    for _ in 0..q {
        let mut next = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                let mut v = 0.0;
                if k > 0 {
                    v += m[(i, k - 1)] * x[k - 1];
                }
                if k + 1 < n {
                    v += m[(i, k + 1)] * x[k];
                }
                next[(i, k)] = v;
            }
        }
        m = next;
    }
    let op = EigenbasisOperator::symmetric_from_fn(dim, |l, k| m[(l, k)]);
    let mut model = Model::new(harmonic_spectrum(dim, omega)?, op)?;
    if m.iter().any(|v| !v.is_finite()) {
        model.warnings.push(format!("x^{q} overflowed double range"));
    }
    Ok(model)
}

/// Binomial coefficient in exact 128-bit integer arithmetic.
pub fn binomial(n: u32, k: i64) -> u128 {
    if k < 0 || k > n as i64 {
        return 0;
    }
    let k = (k as u32).min(n - k as u32);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) / (i + 1) stays exact: the running value is C(n, i + 1)
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Matrix elements of `u^q` where `u` is the 0/1 tridiagonal matrix.
pub fn uq_binomial(dim: usize, q: u32) -> Result<EigenbasisOperator> {
    check_dim(dim)?;
    if q == 0 || q > 120 {
        return Err(Error::InvalidParameter(format!("q must lie in 1..=120, got {q}")));
    }
    let qi = q as i64;
    Ok(EigenbasisOperator::symmetric_from_fn(dim, |l, k| {
        let d = (l as i64 - k as i64).abs();
        let s = (l + k) as i64;
        if d > qi || (qi - d) % 2 != 0 {
            return 0.0;
        }
        let bulk = binomial(q, (qi - d) / 2);
        let v = if s >= qi { bulk } else { bulk - binomial(q, (qi - s) / 2 - 1) };
        v as f64
    }))
}

/// Stirling estimate `2^q sqrt(2/πq) exp(-(l-k)²/2q)` of the bulk elements.
pub fn gaussian_decay_estimate(q: u32, l: usize, k: usize) -> f64 {
    let q = q as f64;
    let d = l as f64 - k as f64;
    (q * std::f64::consts::LN_2 + 0.5 * (2.0 / (std::f64::consts::PI * q)).ln() - d * d / (2.0 * q)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_elements() {
        let m = harmonic_position(6, 1.0, 1.0).unwrap();
        assert!((m.operator.get(1, 0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        for l in 0..6 {
            for k in 0..6 {
                if (l as i64 - k as i64).abs() != 1 {
                    assert_eq!(m.operator.get(l, k), 0.0);
                }
            }
        }
        let m = harmonic_position(4, 1.0, 2.0).unwrap();
        assert!((m.operator.get(3, 2) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(m.spectrum.energies(), &[1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn power_one_is_position() {
        let a = harmonic_power(10, 1, 1.0, 1.0).unwrap();
        let b = harmonic_position(10, 1.0, 1.0).unwrap();
        assert_eq!(a.operator.elements(), b.operator.elements());
    }

    #[test]
    fn power_two_ground_state() {
        let a = harmonic_power(8, 2, 1.0, 1.0).unwrap();
        assert!((a.operator.get(0, 0) - 0.5).abs() < 1e-15);
        for l in 0..8 {
            for k in 0..8 {
                if (l + k) % 2 == 1 {
                    assert_eq!(a.operator.get(l, k), 0.0);
                }
            }
        }
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(2, 0), 1);
        assert_eq!(binomial(2, 1), 2);
        assert_eq!(binomial(100, 50), 100_891_344_545_564_193_334_812_497_256);
        assert_eq!(binomial(5, -1), 0);
        assert_eq!(binomial(5, 6), 0);
    }

    #[test]
    fn uq_square() {
        let u = uq_binomial(5, 2).unwrap();
        assert_eq!(u.get(2, 0), 1.0);
        assert_eq!(u.get(1, 1), 2.0);
        assert_eq!(u.get(0, 0), 1.0);
        assert_eq!(u.get(1, 0), 0.0);
    }

    #[test]
    fn stirling_peak() {
        let peak = gaussian_decay_estimate(100, 40, 40);
        let expect = 2f64.powi(100) * (2.0 / (std::f64::consts::PI * 100.0)).sqrt();
        assert!((peak / expect - 1.0).abs() < 1e-12);
        let off = gaussian_decay_estimate(100, 50, 40);
        assert!((off / peak - (-0.5f64).exp()).abs() < 1e-12);
    }
}
