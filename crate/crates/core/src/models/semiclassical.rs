use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use super::Model;
use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::{EigenbasisOperator, Spectrum};

fn check_power(p: u32) -> Result<()> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("p must be even and >= 2, got {p}")));
    }
    Ok(())
}

/// `G(p) = Γ(1+1/p) Γ(3/2) / Γ(1/p+3/2)`
pub fn g_factor(p: u32) -> f64 {
    let ip = 1.0 / p as f64;
    gamma(1.0 + ip) * gamma(1.5) / gamma(ip + 1.5)
}

/// `π / (2 sqrt(2m) G(p))`, so that `E_n^{(p+2)/2p} = scale (n + 1/2)`.
pub fn bohr_sommerfeld_scale(p: u32, mass: f64) -> f64 {
    PI / (2.0 * (2.0 * mass).sqrt() * g_factor(p))
}

/// Bohr–Sommerfeld level `E_n` of `V = x^p`.
pub fn bohr_sommerfeld_energy(p: u32, n: usize, mass: f64) -> f64 {
    let pf = p as f64;
    let expo = 2.0 * pf / (pf + 2.0);
    (bohr_sommerfeld_scale(p, mass) * (n as f64 + 0.5)).powf(expo)
}

/// Decay rate per level, `L_nm = J(p) |n - m|`. Independent of the mass.
pub fn j_factor(p: u32) -> Result<f64> {
    check_power(p)?;
    if p == 2 {
        return Err(Error::SemiclassicalPole);
    }
    let pf = p as f64;
    let ratio = (ln_gamma((pf - 2.0) / (2.0 * pf)) - ln_gamma((pf - 1.0) / pf)).exp();
    Ok(ratio * (2.0 * PI).sqrt() / (pf + 2.0) * bohr_sommerfeld_scale(p, 1.0))
}

/// Closed form of `I(u) = sqrt(m) ∫_{u^{1/p}}^∞ dx / sqrt(2(x^p - u))`.
pub fn wkb_integrand(p: u32, u: f64, mass: f64) -> Result<f64> {
    check_power(p)?;
    if p == 2 {
        return Err(Error::SemiclassicalPole);
    }
    let pf = p as f64;
    let a = (pf - 1.0) / pf;
    let gamma_ratio = (ln_gamma(a - 0.5) - ln_gamma(a)).exp();
    Ok(mass.sqrt() * (2f64.sqrt() / pf) * u.powf((2.0 - pf) / (2.0 * pf)) * (PI.sqrt() / 2.0) * gamma_ratio)
}

/// `I(u)` by direct quadrature of the turning-point integral.
///
/// With `x = a (1 + w²)`, `a = u^{1/p}`, the inverse square-root singularity at
/// the turning point is removed and the integrand is smooth on `[0, ∞)`.
pub fn wkb_integrand_quadrature(p: u32, u: f64, mass: f64) -> Result<f64> {
    check_power(p)?;
    if p == 2 {
        return Err(Error::SemiclassicalPole);
    }
    let pf = p as f64;
    let a = u.powf(1.0 / pf);
    let integrand = |w: f64| {
        if w == 0.0 {
            // limit 2a / sqrt(2 u p)
            return 2.0 * a / (2.0 * u * pf).sqrt();
        }
        let w2 = w * w;
        let excess = (pf * w2.ln_1p()).exp_m1();
        2.0 * a * w / (2.0 * u * excess).sqrt()
    };
    let r = quad::integrate_to_infinity(integrand, 0.0, 0.0, 1e-13);
    Ok(mass.sqrt() * r.value)
}

/// Both evaluations of the semiclassical exponent `L_nm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalElement {
    /// `J(p) |n - m|`
    pub closed_form: f64,
    /// `∫_{E_m}^{E_n} I(u) du` with `I` itself evaluated by quadrature.
    pub quadrature: f64,
}

impl SemiclassicalElement {
    pub fn relative_difference(&self) -> f64 {
        ((self.closed_form - self.quadrature) / self.closed_form).abs()
    }
}

pub fn semiclassical_log_element(p: u32, n: usize, m: usize, mass: f64) -> Result<SemiclassicalElement> {
    let j = j_factor(p)?;
    let closed_form = j * (n as f64 - m as f64).abs();
    let (lo, hi) = (n.min(m), n.max(m));
    let e_lo = bohr_sommerfeld_energy(p, lo, mass);
    let e_hi = bohr_sommerfeld_energy(p, hi, mass);
    let quadrature = if lo == hi {
        0.0
    } else {
        let f = |u: f64| wkb_integrand_quadrature(p, u, mass).unwrap_or(f64::NAN);
        quad::integrate(f, e_lo, e_hi, 0.0, 1e-12).value
    };
    Ok(SemiclassicalElement { closed_form, quadrature })
}

/// How the nearest off-diagonal entries, where the asymptotic form fails, are set.
#[derive(Debug, Clone, PartialEq)]
pub enum NearestElements {
    Asymptotic,
    /// `x_{l, l+1}` for `l = 0..dim-1`, e.g. from the grid solver.
    Exact(Vec<f64>),
}

/// Fictional operator `prefactor · exp(-L_lk)` on parity-allowed entries,
/// with Bohr–Sommerfeld energies.
pub fn semiclassical_operator(
    p: u32,
    dim: usize,
    mass: f64,
    prefactor: f64,
    nearest: &NearestElements,
) -> Result<Model> {
    let j = j_factor(p)?;
    if dim < 2 {
        return Err(Error::InvalidParameter("dimension must be >= 2".into()));
    }
    if let NearestElements::Exact(v) = nearest {
        crate::error::ensure_dim(dim - 1, v.len())?;
    }
    let spectrum = Spectrum::new((0..dim).map(|n| bohr_sommerfeld_energy(p, n, mass)).collect())?;
    let op = EigenbasisOperator::symmetric_from_fn(dim, |l, k| {
        let d = k - l;
        if d % 2 == 0 {
            return 0.0;
        }
        match nearest {
            NearestElements::Exact(v) if d == 1 => v[l],
            _ => prefactor * (-j * d as f64).exp(),
        }
    });
    Model::new(spectrum, op)
}
