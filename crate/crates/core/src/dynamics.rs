//! Time domain: the thermal correlation function, its moments, evolution on
//! the Krylov chain and Krylov complexity.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::lanczos::{growth_fit, log_sum_exp, LanczosSequence, MomentSequence};
use crate::linalg::SymTridiag;
use crate::par;
use crate::spectral::{EigenbasisOperator, Spectrum, ThermalEnsemble};

/// `(ω, ln W)` for every pair `l <= k`, with `W = (2 - δ_lk) w_lk O_lk²`.
fn bohr_pairs(op: &EigenbasisOperator, spec: &Spectrum, ens: &ThermalEnsemble) -> Result<Vec<(f64, f64)>> {
    let d = op.dimension();
    ensure_dim(d, spec.dimension())?;
    ensure_dim(d, ens.dimension())?;
    let e = spec.energies();
    let log_g = ens.log_sqrt_weights();
    let m = op.elements().as_slice();
    let cols: Vec<Vec<(f64, f64)>> = par::map(d, |k| {
        (0..=k)
            .filter_map(|l| {
                let o = m[k * d + l];
                if o == 0.0 {
                    return None;
                }
                let mult = if l == k { 1.0f64 } else { 2.0 };
                let lw = mult.ln() + log_g[l] + log_g[k] + 2.0 * o.abs().ln();
                lw.is_finite().then_some((e[k] - e[l], lw))
            })
            .collect()
    });
    Ok(cols.into_iter().flatten().collect())
}

/// `C(t) = Σ_lk w_lk O_lk² cos((E_l - E_k) t)`, divided by `C(0)` unless `raw`.
pub fn correlation_function(
    op: &EigenbasisOperator,
    spec: &Spectrum,
    ens: &ThermalEnsemble,
    times: &[f64],
    raw: bool,
) -> Result<Vec<f64>> {
    let mut pairs = bohr_pairs(op, spec, ens)?;
    if pairs.is_empty() {
        return Err(Error::ZeroNorm);
    }
    let lmax = pairs.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.1));
    // merge exactly equal frequencies to shorten the time loop
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for (w, lw) in pairs {
        let x = (lw - lmax).exp();
        match nodes.last_mut() {
            Some(last) if last.0 == w => last.1 += x,
            _ => nodes.push((w, x)),
        }
    }
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    let scale = if raw { lmax.exp() } else { 1.0 / total };
    Ok(par::map(times.len(), |i| {
        let t = times[i];
        let s: f64 = nodes.iter().map(|(w, x)| x * (w * t).cos()).sum();
        s * scale
    }))
}

/// `μ_2n = Σ_lk w_lk (E_l - E_k)^{2n} O_lk²` for `n = 1..=n_max`, summed in
/// log space. `μ_0` is the weight off the Liouvillian kernel (`E_l ≠ E_k`), the
/// normalization used by the Lanczos recursion.
pub fn moments_direct(
    op: &EigenbasisOperator,
    spec: &Spectrum,
    ens: &ThermalEnsemble,
    n_max: usize,
    normalize: bool,
) -> Result<MomentSequence> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let width = (spec.max() - spec.min()).max(f64::MIN_POSITIVE);
    let pairs: Vec<(f64, f64)> = bohr_pairs(op, spec, ens)?
        .into_iter()
        .filter(|p| p.0.abs() > 1e-10 * width)
        .map(|(w, lw)| (w.abs().ln(), lw))
        .collect();
    if pairs.is_empty() {
        return Err(Error::ZeroNorm);
    }
    let lse_power = |n: usize| {
        let chunks = pairs.len().div_ceil(par::CHUNK);
        let parts: Vec<f64> = par::map(chunks, |c| {
            let r = c * par::CHUNK..((c + 1) * par::CHUNK).min(pairs.len());
            let logs: Vec<f64> = pairs[r].iter().map(|(lw_, lw)| lw + 2.0 * n as f64 * lw_).collect();
            log_sum_exp(&logs)
        });
        log_sum_exp(&parts)
    };
    let log_mu0 = lse_power(0);
    let logs: Vec<f64> = (1..=n_max).map(|n| lse_power(n) - if normalize { log_mu0 } else { 0.0 }).collect();
    Ok(MomentSequence::from_log(logs, if normalize { 0.0 } else { log_mu0 }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMethod {
    /// Exact propagator when the chain fits `exact_limit`, splitting otherwise.
    #[default]
    Auto,
    /// Eigendecomposition of the chain.
    Exact,
    /// Fourth-order Suzuki–Yoshida composition of exact bond rotations.
    Split4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationOptions {
    pub method: PropagationMethod,
    /// Pad the chain by linear extrapolation when the wavefunction reaches its end.
    pub auto_extend: bool,
    /// Largest tolerated occupancy of the last site.
    pub boundary_tolerance: f64,
    pub exact_limit: usize,
    /// Splitting step: `h · b_n <= courant` over the sites holding all but `tail_mass`.
    pub courant: f64,
    pub tail_mass: f64,
    pub max_sites: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            method: PropagationMethod::Auto,
            auto_extend: true,
            boundary_tolerance: 1e-6,
            exact_limit: 2000,
            courant: 0.2,
            tail_mass: 1e-8,
            max_sites: 4_000_000,
        }
    }
}

/// Amplitudes `φ_n(t)` on the Krylov chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrylovWavefunction {
    pub times: Vec<f64>,
    /// `amplitudes[i][n] = φ_n(times[i])`; trailing sites with no weight may be cut.
    pub amplitudes: Vec<Vec<f64>>,
    pub method: PropagationMethod,
    /// Number of chain sites used.
    pub sites: usize,
    /// First 1-based coefficient index that was extrapolated, if any.
    pub padded_from: Option<usize>,
    pub max_boundary_occupancy: f64,
    pub max_norm_error: f64,
}

/// Linear extrapolation of `b_n` beyond the known coefficients.
struct Chain {
    b: Vec<f64>,
    known: usize,
    slope: f64,
    intercept: f64,
    can_grow: bool,
}

impl Chain {
    fn new(seq: &LanczosSequence) -> Result<Self> {
        let b = seq.active().to_vec();
        if b.is_empty() {
            return Err(Error::InvalidParameter("empty Lanczos sequence".into()));
        }
        let n = b.len();
        let (slope, intercept) = if n >= 6 {
            let lo = n.saturating_sub(20).max(1).min(n - 5);
            let f = growth_fit(&LanczosSequence::from_coefficients(b.clone()), (lo, n))?;
            (f.alpha.max(0.0), f.intercept)
        } else {
            (0.0, b[n - 1])
        };
        Ok(Self { b, known: n, slope, intercept, can_grow: seq.terminated_at.is_none() })
    }

    fn sites(&self) -> usize {
        self.b.len() + 1
    }

    fn grow_to(&mut self, sites: usize) {
        let floor = self.b[self.known - 1] * 1e-3;
        while self.b.len() + 1 < sites {
            let n = (self.b.len() + 1) as f64;
            self.b.push((self.slope * n + self.intercept).max(floor));
        }
    }

    fn padded_from(&self) -> Option<usize> {
        (self.b.len() > self.known).then_some(self.known + 1)
    }
}

/// Solve `dφ_n/dt = b_n φ_{n-1} - b_{n+1} φ_{n+1}`, `φ_n(0) = δ_n0`.
pub fn propagate_chain(
    b: &LanczosSequence,
    times: &[f64],
    opts: &PropagationOptions,
) -> Result<KrylovWavefunction> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite time".into()));
    }
    let mut chain = Chain::new(b)?;
    loop {
        let use_exact = match opts.method {
            PropagationMethod::Exact => true,
            PropagationMethod::Split4 => false,
            PropagationMethod::Auto => chain.sites() <= opts.exact_limit,
        };
        if !use_exact {
            return propagate_split(&mut chain, times, opts);
        }
        if chain.sites() > opts.exact_limit.max(2) && opts.method == PropagationMethod::Exact {
            return Err(Error::InvalidParameter(format!(
                "chain of {} sites exceeds the exact-propagation limit {}",
                chain.sites(),
                opts.exact_limit
            )));
        }
        let wf = propagate_exact(&chain, times)?;
        if wf.max_boundary_occupancy <= opts.boundary_tolerance || !chain.can_grow {
            return Ok(wf);
        }
        if !opts.auto_extend {
            return Err(Error::BoundaryReflection {
                site: chain.sites() - 1,
                occupancy: wf.max_boundary_occupancy,
            });
        }
        let target = (2 * chain.sites()).max(64);
        if target > opts.max_sites {
            return Err(Error::BoundaryReflection {
                site: chain.sites() - 1,
                occupancy: wf.max_boundary_occupancy,
            });
        }
        chain.grow_to(target);
    }
}

fn propagate_exact(chain: &Chain, times: &[f64]) -> Result<KrylovWavefunction> {
    let eig = SymTridiag::chain(&chain.b).eigen()?;
    let n = chain.sites();
    let v0: Vec<f64> = eig.vectors.iter().map(|v| v[0]).collect();
    let amplitudes: Vec<Vec<f64>> = par::map(times.len(), |i| {
        let t = times[i];
        let mut c = vec![0.0; n];
        let mut s = vec![0.0; n];
        for (k, vk) in eig.vectors.iter().enumerate() {
            let (sin, cos) = (eig.values[k] * t).sin_cos();
            let (a, b) = (v0[k] * cos, v0[k] * sin);
            for site in 0..n {
                c[site] += vk[site] * a;
                s[site] += vk[site] * b;
            }
        }
        // φ_n = Re[(-i)^n (e^{iTt})_{n0}]
        (0..n)
            .map(|site| match site % 4 {
                0 => c[site],
                1 => s[site],
                2 => -c[site],
                _ => -s[site],
            })
            .collect()
    });
    let max_boundary_occupancy = if chain.can_grow {
        amplitudes.iter().map(|a| a[n - 1] * a[n - 1]).fold(0.0, f64::max)
    } else {
        0.0
    };
    let max_norm_error = amplitudes
        .iter()
        .map(|a| (a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(KrylovWavefunction {
        times: times.to_vec(),
        amplitudes,
        method: PropagationMethod::Exact,
        sites: n,
        padded_from: chain.padded_from(),
        max_boundary_occupancy,
        max_norm_error,
    })
}

const YOSHIDA_W1: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_3;

/// Rotations on the bonds `(i, i+1)` with `i ≡ parity (mod 2)`, `i + 1 < active`.
fn sweep(phi: &mut [f64], parity: usize, active: usize, cs: &[(f64, f64)]) {
    let start = parity;
    let end = active.min(phi.len());
    if end <= start + 1 {
        return;
    }
    let slice = &mut phi[start..end];
    let rot = |off: usize, chunk: &mut [f64]| {
        for (j, pair) in chunk.chunks_exact_mut(2).enumerate() {
            let bond = start + off + 2 * j;
            let (c, s) = cs[bond];
            let (a, b) = (pair[0], pair[1]);
            pair[0] = c * a - s * b;
            pair[1] = s * a + c * b;
        }
    };
    const PAR_CHUNK: usize = 16_384;
    if slice.len() > 2 * PAR_CHUNK {
        par::for_each_chunk_mut(slice, PAR_CHUNK, |ci, chunk| rot(ci * PAR_CHUNK, chunk));
    } else {
        rot(0, slice);
    }
}

struct Stepper {
    h: f64,
    // per stage: (cos, sin) per bond
    tables: Vec<Vec<(f64, f64)>>,
}

impl Stepper {
    /// Stage factors: E(w1/2) O(w1) E((w1+w0)/2) O(w0) E((w0+w1)/2) O(w1) E(w1/2).
    const STAGES: [(usize, f64); 7] = [
        (0, 0.5 * YOSHIDA_W1),
        (1, YOSHIDA_W1),
        (0, 0.5 * (YOSHIDA_W1 + YOSHIDA_W0)),
        (1, YOSHIDA_W0),
        (0, 0.5 * (YOSHIDA_W0 + YOSHIDA_W1)),
        (1, YOSHIDA_W1),
        (0, 0.5 * YOSHIDA_W1),
    ];

    fn new(h: f64, b: &[f64]) -> Self {
        // distinct factors: w1/2, w1, (w1+w0)/2, w0
        let factors = [0.5 * YOSHIDA_W1, YOSHIDA_W1, 0.5 * (YOSHIDA_W1 + YOSHIDA_W0), YOSHIDA_W0];
        let tables = factors
            .iter()
            .map(|f| b.iter().map(|bn| { let (s, c) = (bn * f * h).sin_cos(); (c, s) }).collect())
            .collect();
        Self { h, tables }
    }

    fn table_index(f: f64) -> usize {
        if f == 0.5 * YOSHIDA_W1 {
            0
        } else if f == YOSHIDA_W1 {
            1
        } else if f == YOSHIDA_W0 {
            3
        } else {
            2
        }
    }

    fn step(&self, phi: &mut [f64], active: usize) {
        for (parity, f) in Self::STAGES {
            sweep(phi, parity, active, &self.tables[Self::table_index(f)]);
        }
    }
}

fn propagate_split(chain: &mut Chain, times: &[f64], opts: &PropagationOptions) -> Result<KrylovWavefunction> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidParameter("splitting needs non-negative, ascending times".into()));
    }
    const MARGIN: usize = 64;
    const CUTOFF: f64 = 1e-14;
    let mut phi: Vec<f64> = vec![0.0; chain.sites()];
    phi[0] = 1.0;
    let mut t = 0.0;
    let mut active = 2usize;
    let mut stepper: Option<Stepper> = None;
    let mut amplitudes = Vec::with_capacity(times.len());
    let mut max_boundary = 0.0f64;
    let mut max_norm_error = 0.0f64;

    for &target in times {
        while t < target {
            // extent of the wavefunction
            let last = phi[..active].iter().rposition(|x| x.abs() > CUTOFF).unwrap_or(0);
            let want = last + MARGIN;
            if want + 1 >= chain.sites() && chain.can_grow && opts.auto_extend {
                let target_sites = (2 * chain.sites()).max(want + MARGIN);
                if target_sites > opts.max_sites {
                    return Err(Error::BoundaryReflection { site: chain.sites() - 1, occupancy: phi[chain.sites() - 1].powi(2) });
                }
                chain.grow_to(target_sites);
                phi.resize(chain.sites(), 0.0);
                stepper = None;
            }
            active = (want + 1).min(chain.sites());
            let edge = phi[chain.sites() - 1].powi(2);
            if chain.can_grow {
                max_boundary = max_boundary.max(edge);
                if edge > opts.boundary_tolerance && !opts.auto_extend {
                    return Err(Error::BoundaryReflection { site: chain.sites() - 1, occupancy: edge });
                }
            }

            // step size from the largest coupling where the weight lives
            let mut tail = 0.0;
            let mut bulk_end = last;
            for n in (0..=last).rev() {
                tail += phi[n] * phi[n];
                if tail > opts.tail_mass {
                    bulk_end = n;
                    break;
                }
            }
            let bmax = chain.b[..(bulk_end + 1).min(chain.b.len())]
                .iter()
                .fold(0.0f64, |m, x| m.max(*x))
                .max(f64::MIN_POSITIVE);
            let h_ideal = opts.courant / bmax;
            let remaining = target - t;
            let needs_new = match &stepper {
                Some(s) => s.h > h_ideal || s.h < 0.5 * h_ideal,
                None => true,
            };
            if needs_new {
                // quantize to powers of two so the tables are rebuilt rarely
                let h = 2f64.powf(h_ideal.log2().floor());
                stepper = Some(Stepper::new(h, &chain.b));
            }
            let s = stepper.as_ref().expect("stepper built above");
            if remaining < s.h {
                Stepper::new(remaining, &chain.b).step(&mut phi, active);
                t = target;
            } else {
                s.step(&mut phi, active);
                t += s.h;
            }
        }
        let norm: f64 = phi.iter().map(|x| x * x).sum();
        max_norm_error = max_norm_error.max((norm - 1.0).abs());
        let keep = phi.iter().rposition(|x| x.abs() > 0.0).map_or(1, |i| i + 1);
        amplitudes.push(phi[..keep].to_vec());
    }
    Ok(KrylovWavefunction {
        times: times.to_vec(),
        amplitudes,
        method: PropagationMethod::Split4,
        sites: chain.sites(),
        padded_from: chain.padded_from(),
        max_boundary_occupancy: max_boundary,
        max_norm_error,
    })
}

/// `C_K(t) = Σ_n n φ_n(t)²`
pub fn krylov_complexity(phi: &KrylovWavefunction) -> Vec<f64> {
    phi.amplitudes
        .iter()
        .map(|a| a.iter().enumerate().map(|(n, x)| n as f64 * x * x).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::harmonic_position;

    #[test]
    fn two_site_chain() {
        let b = LanczosSequence::from_coefficients(vec![1.3]);
        let mut seq = b.clone();
        seq.coefficients.push(0.0);
        seq.terminated_at = Some(2);
        let times: Vec<f64> = (0..50).map(|i| 0.2 * i as f64).collect();
        let wf = propagate_chain(&seq, &times, &PropagationOptions::default()).unwrap();
        let ck = krylov_complexity(&wf);
        for (i, t) in times.iter().enumerate() {
            assert!((wf.amplitudes[i][0] - (1.3 * t).cos()).abs() < 1e-13);
            assert!((wf.amplitudes[i][1] - (1.3 * t).sin()).abs() < 1e-13);
            assert!((ck[i] - (1.3 * t).sin().powi(2)).abs() < 1e-13);
        }
        assert_eq!(ck[0], 0.0);
    }

    #[test]
    fn split_matches_exact() {
        let b = LanczosSequence::from_coefficients((1..=300).map(|n| (n as f64).sqrt()).collect());
        let times = [0.5, 1.0, 2.0];
        let exact = propagate_chain(&b, &times, &PropagationOptions { method: PropagationMethod::Exact, ..Default::default() }).unwrap();
        let split = propagate_chain(&b, &times, &PropagationOptions { method: PropagationMethod::Split4, courant: 0.05, ..Default::default() }).unwrap();
        for (i, t) in times.iter().enumerate() {
            for n in 0..40 {
                let a = exact.amplitudes[i][n];
                let s = split.amplitudes[i].get(n).copied().unwrap_or(0.0);
                assert!((a - s).abs() < 1e-7, "t={t} n={n}: {a} {s}");
            }
        }
        assert!(split.max_norm_error < 1e-12);
    }

    #[test]
    fn harmonic_correlation_is_cosine() {
        let m = harmonic_position(30, 1.0, 1.0).unwrap();
        for beta in [0.3, 1.0, 4.0] {
            let ens = ThermalEnsemble::new(&m.spectrum, beta).unwrap();
            let times: Vec<f64> = (-10..=10).map(|i| 0.37 * i as f64).collect();
            let c = correlation_function(&m.operator, &m.spectrum, &ens, &times, false).unwrap();
            for (t, v) in times.iter().zip(&c) {
                assert!((v - t.cos()).abs() < 1e-12);
            }
            let mu = moments_direct(&m.operator, &m.spectrum, &ens, 6, true).unwrap();
            for n in 1..=6 {
                assert!(mu.log_moment(n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_reflection_without_extension() {
        let b = LanczosSequence::from_coefficients((1..=10).map(|n| n as f64).collect());
        let opts = PropagationOptions { auto_extend: false, ..Default::default() };
        assert!(matches!(propagate_chain(&b, &[3.0], &opts), Err(Error::BoundaryReflection { .. })));
    }
}

#[cfg(test)]
mod linear_chain {
    use super::*;

    #[test]
    fn complexity_of_linear_chain() {
        let b = LanczosSequence::from_coefficients((1..=200).map(|n| n as f64).collect());
        let times: Vec<f64> = (0..=4).map(|i| 0.5 * i as f64).collect();
        let wf = propagate_chain(&b, &times, &PropagationOptions::default()).unwrap();
        assert_eq!(wf.padded_from, None);
        assert_eq!(wf.method, PropagationMethod::Exact);
        let ck = krylov_complexity(&wf);
        for (t, c) in times.iter().zip(&ck) {
            let want = t.sinh().powi(2);
            assert!((c - want).abs() <= 1e-3 * (1.0 + want), "t={t}: {c} vs {want}");
        }
    }
}
