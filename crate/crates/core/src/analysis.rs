//! Continuum moment predictions, the polylogarithm result for equally spaced
//! spectra, and growth-rate reports.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lanczos::{growth_fit, LanczosSequence, MomentSequence, SUBLINEAR_EXPONENT};
use crate::models::DecayLaw;
use crate::par;
use crate::quad::integrate_breaks;

/// Quadrature results and, where one exists, the closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumMoments {
    /// Unnormalized `μ_2n`, `n = 1..=n_max`.
    pub moments: MomentSequence,
    /// `ln μ_2n` from the closed form, `n = 0..=n_max`.
    pub closed_form: Option<Vec<f64>>,
    pub max_relative_error: Option<f64>,
    pub cutoff: f64,
}

/// Agreement demanded between quadrature and closed forms.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-8;

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln(2^{2n+2} (2n)! / c^{2n+1})`
fn closed_form_log(n: usize, c: f64) -> f64 {
    (2 * n + 2) as f64 * LN_2 + ln_factorial(2 * n) - (2 * n + 1) as f64 * c.ln()
}

fn log_integrand(law: &DecayLaw, beta: f64, n: usize, w: f64) -> f64 {
    let power = if n == 0 { 0.0 } else { 2.0 * n as f64 * w.ln() };
    LN_2 + power - 0.5 * beta * w + 2.0 * law.log_amplitude(w)
}

/// Location of the maximum of the (unimodal) log integrand.
fn peak(law: &DecayLaw, beta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let h = |x: f64| log_integrand(law, beta, n, x.exp());
    let (lo, hi) = (-30.0f64, 30.0f64);
    let steps = 600;
    let best = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .max_by(|a, b| h(*a).total_cmp(&h(*b)))
        .unwrap_or(0.0);
    let dx = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best - dx, best + dx);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if h(c) > h(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (0.5 * (a + b)).exp()
}

/// `μ_2n = 2 ∫_0^∞ ω^{2n} e^{-βω/2} f(ω)² dω`, integrated in log space
/// relative to the peak of the integrand. Flat and exponential laws are
/// checked against their closed forms.
pub fn continuum_moments(law: &DecayLaw, beta: f64, n_max: usize, cutoff: Option<f64>) -> Result<ContinuumMoments> {
    law.validate()?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let peaks: Vec<f64> = (0..=n_max).map(|n| peak(law, beta, n)).collect();
    let peak_logs: Vec<f64> = peaks.iter().enumerate().map(|(n, &w)| log_integrand(law, beta, n, w)).collect();

    // tail must sit 1e-12 below the peak for every n
    const TAIL: f64 = 1e-12;
    let ratio_at = |c: f64| {
        (0..=n_max).map(|n| (log_integrand(law, beta, n, c) - peak_logs[n]).exp()).fold(0.0, f64::max)
    };
    let cutoff = match cutoff {
        Some(c) => {
            let ratio = ratio_at(c);
            if !(c > peaks[n_max]) || ratio > TAIL {
                return Err(Error::CutoffInsufficient { cutoff: c, ratio });
            }
            c
        }
        None => {
            let mut c = peaks[n_max].max(1.0);
            while ratio_at(c) > 1e-20 {
                c *= 1.5;
            }
            c
        }
    };

    let logs: Vec<Result<f64>> = par::map(n_max + 1, |n| {
        let wp = peaks[n];
        let shift = peak_logs[n];
        let mut breaks = vec![0.0];
        for f in [0.125, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let x = f * wp;
            if x > *breaks.last().unwrap() && x < cutoff {
                breaks.push(x);
            }
        }
        breaks.push(cutoff);
        let r = integrate_breaks(
            |w| if w <= 0.0 && n > 0 { 0.0 } else { (log_integrand(law, beta, n, w) - shift).exp() },
            &breaks,
            0.0,
            1e-14,
        );
        if !(r.value > 0.0) {
            return Err(Error::InvalidParameter(format!("quadrature failed at n = {n}")));
        }
        Ok(shift + r.value.ln())
    });
    let logs: Vec<f64> = logs.into_iter().collect::<Result<_>>()?;

    let c = match *law {
        DecayLaw::Flat => Some(beta),
        DecayLaw::Exponential { gamma } => Some(beta + 4.0 * gamma),
        _ => None,
    };
    let closed_form: Option<Vec<f64>> = c.map(|c| (0..=n_max).map(|n| closed_form_log(n, c)).collect());
    let mut max_relative_error = None;
    if let Some(cf) = &closed_form {
        let mut worst = 0.0f64;
        for n in 0..=n_max {
            let rel = (logs[n] - cf[n]).exp_m1().abs();
            if rel > CLOSED_FORM_TOLERANCE {
                return Err(Error::QuadratureMismatch { n, relative: rel });
            }
            worst = worst.max(rel);
        }
        max_relative_error = Some(worst);
    }
    Ok(ContinuumMoments {
        moments: MomentSequence::from_log(logs[1..].to_vec(), logs[0]),
        closed_form,
        max_relative_error,
        cutoff,
    })
}

/// Eulerian numbers `A(m, k)`, `k = 0..m` (row `m`), as reals.
pub fn eulerian_row(m: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for j in 1..=m {
        let mut next = vec![0.0; j];
        for k in 0..j {
            let keep = if k < row.len() { (k + 1) as f64 * row[k] } else { 0.0 };
            let shift = if k >= 1 { (j - k) as f64 * row[k - 1] } else { 0.0 };
            next[k] = keep + shift;
        }
        row = next;
    }
    row
}

/// `Li_{-m}(z) = z Σ_k A(m, k) z^k / (1 - z)^{m+1}`, for `0 <= z < 1`.
/// `one_minus_z` is passed separately to keep precision as `z → 1`.
pub fn polylog_negative(m: usize, z: f64, one_minus_z: f64) -> f64 {
    let row = eulerian_row(m);
    let poly = row.iter().rev().fold(0.0, |acc, a| acc * z + a);
    z * poly / one_minus_z.powi(m as i32 + 1)
}

/// `⟨μ_2n⟩ = 2 ω0^{2n} Li_{-2n}(e^{-β ω0 / 2})` for an equally spaced spectrum
/// with unit-variance random elements between all distinct levels.
pub fn polylog_moments(omega0: f64, beta: f64, n: usize) -> Result<f64> {
    if !(omega0 > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter("polylog moments need omega0 > 0 and beta > 0".into()));
    }
    let x = 0.5 * beta * omega0;
    let z = (-x).exp();
    Ok(2.0 * omega0.powi(2 * n as i32) * polylog_negative(2 * n, z, -(-x).exp_m1()))
}

/// Growth rate implied by the decay class: `π/β` for flat and power laws,
/// `π/(β + 4γ)` for exponential decay, none for Gaussian decay.
pub fn predict_alpha(law: &DecayLaw, beta: f64) -> Option<f64> {
    match *law {
        DecayLaw::Flat | DecayLaw::Power { .. } => Some(PI / beta),
        DecayLaw::Exponential { gamma } => Some(PI / (beta + 4.0 * gamma)),
        DecayLaw::Gaussian { .. } => None,
    }
}

/// First `n` included by the default fit window.
pub const DEFAULT_WINDOW_START: usize = 5;
const ROLLING: usize = 6;

/// Fit window: from `n = 5` to the first plateau, detected as a rolling slope
/// below half the slope fitted so far.
pub fn default_window(b: &LanczosSequence) -> Option<(usize, usize)> {
    let a = b.active();
    let lo = DEFAULT_WINDOW_START;
    if a.len() < lo + 5 {
        return None;
    }
    let slope = |from: usize, to: usize| {
        let x: Vec<f64> = (from..=to).map(|i| i as f64).collect();
        crate::fit::linear_fit(&x, &a[from - 1..to]).map_or(0.0, |f| f.slope)
    };
    for end in lo + ROLLING + 4..=a.len() {
        let cumulative = slope(lo, end - ROLLING + 1);
        let rolling = slope(end - ROLLING + 1, end);
        if cumulative > 0.0 && rolling < 0.5 * cumulative {
            return Some((lo, (end - ROLLING / 2).max(lo + 5)));
        }
    }
    Some((lo, a.len()))
}

/// Upward change of slope in `b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Upturn {
    /// First `n` of the steeper stretch.
    pub n: usize,
    pub slope_before: f64,
    pub slope_after: f64,
}

/// First point from `lo` on where the rolling slope exceeds 1.5 times the
/// slope fitted so far, sustained over three consecutive windows.
pub fn detect_upturn(b: &LanczosSequence, lo: usize) -> Option<Upturn> {
    let a = b.active();
    let lo = lo.max(1);
    let slope = |from: usize, to: usize| {
        let x: Vec<f64> = (from..=to).map(|i| i as f64).collect();
        crate::fit::linear_fit(&x, &a[from - 1..to]).map_or(0.0, |f| f.slope)
    };
    let mut streak = 0;
    for end in lo + ROLLING + 4..=a.len() {
        let start = end - ROLLING + 1;
        let before = slope(lo, start);
        let after = slope(start, end);
        if before > 0.0 && after > 1.5 * before {
            streak += 1;
            if streak == 3 {
                let n = start - 2;
                return Some(Upturn { n, slope_before: slope(lo, n), slope_after: slope(n, end) });
            }
        } else {
            streak = 0;
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub beta: f64,
    pub alpha_fit: f64,
    pub alpha_stderr: f64,
    pub exponent: f64,
    pub window: (usize, usize),
    pub r_squared: f64,
    /// `π/β`
    pub alpha_bound: f64,
    pub alpha_predicted: Option<f64>,
    pub saturation_ratio: f64,
    pub decay_class: Option<DecayLaw>,
    pub terminated_at: Option<usize>,
    pub upturn: Option<Upturn>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

/// Relative mismatch between fitted and predicted rates that is flagged.
pub const AGREEMENT_TOLERANCE: f64 = 0.1;

/// Combine the growth fit, the decay-class prediction and the bound.
pub fn build_report(
    b: &LanczosSequence,
    decay: Option<&DecayLaw>,
    beta: f64,
    window: Option<(usize, usize)>,
) -> Result<GrowthReport> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let alpha_bound = PI / beta;
    let mut notes = Vec::new();
    let mut warnings = Vec::new();
    let alpha_predicted = decay.and_then(|d| predict_alpha(d, beta));
    if let Some(t) = b.terminated_at {
        notes.push(format!("Krylov space exhausted at n = {t}"));
    }
    let window = match window.or_else(|| default_window(b)) {
        Some(w) => w,
        None => {
            notes.push(format!("sequence too short to fit ({} active coefficients)", b.active().len()));
            return Ok(GrowthReport {
                beta,
                alpha_fit: f64::NAN,
                alpha_stderr: f64::NAN,
                exponent: f64::NAN,
                window: (0, 0),
                r_squared: f64::NAN,
                alpha_bound,
                alpha_predicted,
                saturation_ratio: f64::NAN,
                decay_class: decay.copied(),
                terminated_at: b.terminated_at,
                upturn: None,
                notes,
                warnings,
            });
        }
    };
    let fit = growth_fit(b, window)?;
    warnings.extend(fit.warnings.iter().cloned());
    let saturation_ratio = fit.alpha / alpha_bound;
    if fit.alpha - 2.0 * fit.stderr > alpha_bound {
        warnings.push(format!(
            "fitted rate {:.6} exceeds the bound π/β = {:.6} beyond two standard errors",
            fit.alpha, alpha_bound
        ));
    }
    if let Some(p) = alpha_predicted {
        let rel = (fit.alpha - p) / p;
        notes.push(format!("predicted rate {p:.6}, relative deviation {rel:+.4}"));
        if rel.abs() > AGREEMENT_TOLERANCE {
            warnings.push(format!("fitted rate disagrees with the decay-class prediction by {:.1}%", 100.0 * rel));
        }
        if fit.exponent < SUBLINEAR_EXPONENT {
            warnings.push("decay class predicts linear growth but the sequence is sub-linear".into());
        }
    } else if decay.is_some() {
        notes.push("gaussian decay: sub-exponential growth, no rate predicted".into());
        if fit.exponent >= SUBLINEAR_EXPONENT {
            warnings.push(format!("gaussian decay but exponent {:.3} is not sub-linear", fit.exponent));
        }
    }
    let upturn = detect_upturn(b, window.0);
    if let Some(u) = upturn {
        warnings.push(format!(
            "slope of b_n jumps from {:.4} to {:.4} at n = {}; likely a precision artefact",
            u.slope_before, u.slope_after, u.n
        ));
    }
    Ok(GrowthReport {
        beta,
        alpha_fit: fit.alpha,
        alpha_stderr: fit.stderr,
        exponent: fit.exponent,
        window,
        r_squared: fit.r_squared,
        alpha_bound,
        alpha_predicted,
        saturation_ratio,
        decay_class: decay.copied(),
        terminated_at: b.terminated_at,
        upturn,
        notes,
        warnings,
    })
}
