//! The Liouvillian Lanczos recursion and the maps between Lanczos
//! coefficients and spectral moments.
//!
//! For a real symmetric seed the Liouvillian acts diagonally on the pair
//! components `(l, k)` with eigenvalue `E_l - E_k`, so the recursion only sees
//! the discrete spectral measure with nodes `±|E_l - E_k|` and weights
//! `w_lk O_lk²`. [`lanczos_run`] works on that measure directly: identical
//! Bohr frequencies are merged and each Krylov vector is stored as its
//! restriction to the positive nodes (even vectors are even in ω, odd vectors
//! odd). [`lanczos_run_dense`] runs the literal recursion on full matrices.

use serde::{Deserialize, Serialize};

use crate::dd::{DoubleDouble, LN2};
use crate::error::{ensure_dim, Error, Result};
use crate::fit::linear_fit;
use crate::par;
use crate::spectral::{
    liouville_apply, thermal_inner_with, EigenbasisOperator, LiouvilleVector, Precision, Spectrum,
    ThermalEnsemble,
};

/// Treatment of matrix elements below an operator's noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorPolicy {
    #[default]
    Zero,
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanczosOptions {
    pub n_max: usize,
    pub reorthogonalize: bool,
    pub precision: Precision,
    /// Termination threshold relative to `b_1`.
    pub tolerance: f64,
    pub floor_policy: FloorPolicy,
    /// `|E_l - E_k|` at or below this fraction of the spectral width counts as kernel.
    pub kernel_tolerance: f64,
    /// Bohr frequencies closer than this fraction of the spectral width are merged.
    pub merge_tolerance: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            n_max: 50,
            reorthogonalize: true,
            precision: Precision::Double,
            tolerance: 1e-10,
            floor_policy: FloorPolicy::Zero,
            kernel_tolerance: 1e-10,
            merge_tolerance: 1e-10,
        }
    }
}

impl LanczosOptions {
    pub fn with_n_max(n_max: usize) -> Self {
        Self { n_max, ..Self::default() }
    }
}

/// Lanczos coefficients `b_1 ..= b_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosSequence {
    pub coefficients: Vec<f64>,
    /// Index `n` of the first `b_n` below tolerance, which is then the last entry.
    pub terminated_at: Option<usize>,
    pub precision_mode: Precision,
    pub reorthogonalized: bool,
    /// `ln <O, O>` of the off-diagonal seed before normalization.
    pub seed_log_norm: f64,
    /// Elements dropped because they were below the noise floor.
    #[serde(default)]
    pub floor_zeroed: usize,
}

impl LanczosSequence {
    /// A bare sequence, e.g. for feeding a hand-made chain to the dynamics.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        Self {
            coefficients,
            terminated_at: None,
            precision_mode: Precision::Double,
            reorthogonalized: false,
            seed_log_norm: 0.0,
            floor_zeroed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Coefficients above tolerance (drops the terminal entry).
    pub fn active(&self) -> &[f64] {
        match self.terminated_at {
            Some(n) => &self.coefficients[..n - 1],
            None => &self.coefficients,
        }
    }

    /// `b_n`, 1-based.
    pub fn b(&self, n: usize) -> f64 {
        self.coefficients[n - 1]
    }
}

/// Discrete spectral measure of the Liouvillian seen from the seed: positive
/// nodes `ω_i` carrying weight `p_i / 2` each at `±ω_i`, `Σ p_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `ln Σ_{l≠k} w_lk O_lk²` of the kernel-free seed.
    pub log_norm: f64,
    pub floor_zeroed: usize,
}

impl SpectralMeasure {
    /// Measure from explicit positive nodes and non-negative weights.
    pub fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        ensure_dim(nodes.len(), weights.len())?;
        if nodes.iter().any(|w| !(*w > 0.0 && w.is_finite())) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("nodes must be positive, weights non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            nodes,
            weights: weights.iter().map(|w| w / total).collect(),
            log_norm: total.ln(),
            floor_zeroed: 0,
        })
    }

    pub fn from_operator(
        op: &EigenbasisOperator,
        spec: &Spectrum,
        ens: &ThermalEnsemble,
        opts: &LanczosOptions,
    ) -> Result<Self> {
        let d = op.dimension();
        ensure_dim(d, spec.dimension())?;
        ensure_dim(d, ens.dimension())?;
        if !op.is_hermitian() {
            return Err(Error::InvalidParameter("the Lanczos recursion needs a symmetric operator".into()));
        }
        let e = spec.energies();
        let log_g = ens.log_sqrt_weights();
        let width = (spec.max() - spec.min()).max(f64::MIN_POSITIVE);
        let kernel = opts.kernel_tolerance * width;
        let floor = match (opts.floor_policy, op.noise_floor()) {
            (FloorPolicy::Zero, Some(f)) => f,
            _ => 0.0,
        };
        let m = op.elements().as_slice();

        // (ω, ln W) per column, upper triangle only
        let columns: Vec<(Vec<(f64, f64)>, usize)> = par::map(d, |k| {
            let mut pairs = Vec::new();
            let mut zeroed = 0;
            for l in 0..k {
                let o = m[k * d + l];
                let omega = e[k] - e[l];
                if o == 0.0 || omega <= kernel {
                    continue;
                }
                if o.abs() < floor {
                    zeroed += 1;
                    continue;
                }
                let lw = LN2.hi + log_g[l] + log_g[k] + 2.0 * o.abs().ln();
                if lw.is_finite() {
                    pairs.push((omega, lw));
                }
            }
            (pairs, zeroed)
        });
        let floor_zeroed = columns.iter().map(|c| c.1).sum::<usize>() * 2;
        let mut pairs: Vec<(f64, f64)> = columns.into_iter().flat_map(|c| c.0).collect();
        if pairs.is_empty() {
            return Err(Error::ZeroNorm);
        }
        let lmax = pairs.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.1));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let merge = opts.merge_tolerance * width;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let start = pairs[i].0;
            let mut total = 0.0;
            let mut heaviest = (start, f64::NEG_INFINITY);
            while i < pairs.len() && pairs[i].0 - start <= merge {
                let w = (pairs[i].1 - lmax).exp();
                total += w;
                if w > heaviest.1 {
                    heaviest = (pairs[i].0, w);
                }
                i += 1;
            }
            if total > 0.0 {
                nodes.push(heaviest.0);
                weights.push(total);
            }
        }
        let total = par::pairwise(&weights, 0.0);
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights, log_norm: lmax + total.ln(), floor_zeroed })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Normalized `μ_2n = Σ p_i ω_i^{2n}` in log form.
    pub fn log_moment(&self, n: usize) -> f64 {
        let logs: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&w, &p)| p.ln() + 2.0 * n as f64 * w.ln())
            .collect();
        log_sum_exp(&logs)
    }
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    let parts: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    m + par::pairwise(&parts, 0.0).ln()
}

fn dot(a: &[f64], b: &[f64], precision: Precision) -> f64 {
    match precision {
        Precision::Double => par::reduce(a.len(), 0.0, |r| r.map(|i| a[i] * b[i]).sum::<f64>()),
        Precision::Extended => par::reduce(a.len(), DoubleDouble::ZERO, |r| {
            let mut s = DoubleDouble::ZERO;
            for i in r {
                s += DoubleDouble::from_product(a[i], b[i]);
            }
            s
        })
        .to_f64(),
    }
}

/// Euclidean norm scaled by the largest entry, exact for a single nonzero.
fn norm(a: &[f64], precision: Precision) -> f64 {
    let m = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(m > 0.0) || !m.is_finite() {
        return m;
    }
    let scaled: Vec<f64> = a.iter().map(|x| x / m).collect();
    m * dot(&scaled, &scaled, precision).max(0.0).sqrt()
}

fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    par::for_each_chunk_mut(y, par::CHUNK, |ci, chunk| {
        let off = ci * par::CHUNK;
        for (j, v) in chunk.iter_mut().enumerate() {
            *v -= c * x[off + j];
        }
    });
}

/// Lanczos recursion on a spectral measure.
pub fn lanczos_on_measure(measure: &SpectralMeasure, opts: &LanczosOptions) -> Result<LanczosSequence> {
    if opts.n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let omega = &measure.nodes;
    let prec = opts.precision;
    let mut v0: Vec<f64> = measure.weights.iter().map(|p| p.sqrt()).collect();
    let n0 = dot(&v0, &v0, prec).sqrt();
    if !(n0 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    if n0 != 1.0 {
        v0.iter_mut().for_each(|x| *x /= n0);
    }

    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut coefficients = Vec::new();
    let mut terminated_at = None;
    let mut b_prev = 0.0;
    for n in 1..=opts.n_max {
        let last = basis.len() - 1;
        let mut u: Vec<f64> = omega.iter().zip(&basis[last]).map(|(w, x)| w * x).collect();
        if n >= 2 {
            let before = &basis[last - 1];
            axpy(&mut u, b_prev, before);
        }
        if opts.reorthogonalize {
            for _ in 0..2 {
                for j in (n % 2..basis.len()).step_by(2) {
                    let c = dot(&basis[j], &u, prec);
                    axpy(&mut u, c, &basis[j]);
                }
            }
        }
        let b = norm(&u, prec);
        coefficients.push(b);
        if n == 1 && !(b > 0.0) {
            return Err(Error::ZeroNorm);
        }
        if b < opts.tolerance * coefficients[0] {
            terminated_at = Some(n);
            break;
        }
        u.iter_mut().for_each(|x| *x /= b);
        if opts.reorthogonalize {
            basis.push(u);
        } else {
            let keep = basis.pop().expect("basis never empty");
            basis = vec![keep, u];
        }
        b_prev = b;
    }
    Ok(LanczosSequence {
        coefficients,
        terminated_at,
        precision_mode: prec,
        reorthogonalized: opts.reorthogonalize,
        seed_log_norm: measure.log_norm,
        floor_zeroed: measure.floor_zeroed,
    })
}

/// Lanczos coefficients of `op` (diagonal and other kernel components removed).
pub fn lanczos_run(
    op: &EigenbasisOperator,
    spec: &Spectrum,
    ens: &ThermalEnsemble,
    opts: &LanczosOptions,
) -> Result<LanczosSequence> {
    let measure = SpectralMeasure::from_operator(op, spec, ens, opts)?;
    lanczos_on_measure(&measure, opts)
}

/// The literal recursion on full Liouville-space matrices; returns the Krylov
/// basis as well. Cost `O(n D²)` per step, meant for small systems and checks.
pub fn lanczos_run_dense(
    op: &EigenbasisOperator,
    spec: &Spectrum,
    ens: &ThermalEnsemble,
    opts: &LanczosOptions,
) -> Result<(LanczosSequence, Vec<LiouvilleVector>)> {
    let d = op.dimension();
    ensure_dim(d, spec.dimension())?;
    let width = (spec.max() - spec.min()).max(f64::MIN_POSITIVE);
    let mut seed = op.to_liouville().without_kernel(spec, opts.kernel_tolerance * width)?;
    let mut floor_zeroed = 0;
    if let (FloorPolicy::Zero, Some(f)) = (opts.floor_policy, op.noise_floor()) {
        let a = seed.amplitudes().map(|x| {
            if x != 0.0 && x.abs() < f {
                floor_zeroed += 1;
                0.0
            } else {
                x
            }
        });
        seed = LiouvilleVector::new(a)?;
    }
    let prec = opts.precision;
    let inner = |a: &LiouvilleVector, b: &LiouvilleVector| thermal_inner_with(a, b, ens, prec);
    let norm2 = inner(&seed, &seed)?;
    if !(norm2 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let mut basis = vec![seed.scaled(1.0 / norm2.sqrt())];
    let mut coefficients = Vec::new();
    let mut terminated_at = None;
    let mut b_prev = 0.0;
    for n in 1..=opts.n_max {
        let last = basis.len() - 1;
        let mut u = liouville_apply(&basis[last], spec)?;
        if n >= 2 {
            u.axpy(-b_prev, &basis[last - 1]);
        }
        if opts.reorthogonalize {
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(q, &u)?;
                    u.axpy(-c, q);
                }
            }
        }
        let b = inner(&u, &u)?.max(0.0).sqrt();
        coefficients.push(b);
        if b < opts.tolerance * coefficients[0] {
            terminated_at = Some(n);
            break;
        }
        basis.push(u.scaled(1.0 / b));
        b_prev = b;
    }
    let seq = LanczosSequence {
        coefficients,
        terminated_at,
        precision_mode: prec,
        reorthogonalized: opts.reorthogonalize,
        seed_log_norm: norm2.ln(),
        floor_zeroed,
    };
    Ok((seq, basis))
}

/// Even moments `μ_2n`, `n = 1..=N`, stored as logarithms (with a low-order
/// correction term so that conversions can run in extended precision).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub log_moments: Vec<f64>,
    #[serde(default)]
    pub log_moments_lo: Vec<f64>,
    /// `μ_0 = 1`.
    pub normalized: bool,
    /// `ln μ_0` (0 when normalized).
    #[serde(default)]
    pub log_mu0: f64,
}

impl MomentSequence {
    pub fn from_log(log_moments: Vec<f64>, log_mu0: f64) -> Self {
        let lo = vec![0.0; log_moments.len()];
        Self { log_moments, log_moments_lo: lo, normalized: log_mu0 == 0.0, log_mu0 }
    }

    /// Normalized moments from plain values `μ_2, μ_4, ...`.
    pub fn from_values(values: &[f64]) -> Self {
        Self::from_log(values.iter().map(|v| v.ln()).collect(), 0.0)
    }

    pub fn len(&self) -> usize {
        self.log_moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_moments.is_empty()
    }

    /// `ln μ_2n`, 1-based.
    pub fn log_moment(&self, n: usize) -> f64 {
        self.log_moments[n - 1]
    }

    pub fn log_moment_dd(&self, n: usize) -> DoubleDouble {
        let lo = self.log_moments_lo.get(n - 1).copied().unwrap_or(0.0);
        DoubleDouble { hi: self.log_moments[n - 1], lo }
    }

    pub fn moment(&self, n: usize) -> f64 {
        self.log_moment(n).exp()
    }

    /// Divide by `μ_0`.
    pub fn normalized(&self) -> Self {
        let shift = self.log_mu0;
        Self {
            log_moments: self.log_moments.iter().map(|l| l - shift).collect(),
            log_moments_lo: self.log_moments_lo.clone(),
            normalized: true,
            log_mu0: 0.0,
        }
    }

    /// Hamburger condition `ln μ_{2n+2} + ln μ_{2n-2} >= 2 ln μ_2n`, up to `slack`.
    pub fn is_log_convex(&self, slack: f64) -> bool {
        let mut l = vec![self.log_mu0];
        l.extend_from_slice(&self.log_moments);
        l.windows(3).all(|w| w[2] + w[0] - 2.0 * w[1] >= -slack * (1.0 + w[1].abs()))
    }
}

/// Moments `μ_2n = (T^{2n})_{00}` for the first `len` orders, the number
/// fixed by the coefficients alone.
pub fn moments_from_lanczos(b: &LanczosSequence) -> MomentSequence {
    moments_from_lanczos_n(b, b.len())
}

/// Moments of the chain up to order `n_moments`. A chain that did not
/// terminate is treated as ending after its last coefficient.
pub fn moments_from_lanczos_n(b: &LanczosSequence, n_moments: usize) -> MomentSequence {
    let chain = b.active();
    let sites = chain.len() + 1;
    let mut v = vec![DoubleDouble::ZERO; sites];
    v[0] = DoubleDouble::ONE;
    let mut exponent: i64 = 0;
    let mut hi = Vec::with_capacity(n_moments);
    let mut lo = Vec::with_capacity(n_moments);
    for n in 1..=n_moments {
        let reach = n.min(sites - 1);
        let mut next = vec![DoubleDouble::ZERO; sites];
        for i in 0..=reach {
            let mut s = DoubleDouble::ZERO;
            if i > 0 {
                s += v[i - 1].mul_f64(chain[i - 1]);
            }
            if i + 1 < sites {
                s += v[i + 1].mul_f64(chain[i]);
            }
            next[i] = s;
        }
        v = next;
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.hi.abs()));
        if peak > 0.0 {
            let e = peak.log2().floor() as i32;
            v.iter_mut().for_each(|x| *x = x.ldexp(-e));
            exponent += e as i64;
        }
        let norm2: DoubleDouble = v.iter().map(|x| *x * *x).sum();
        let log = if norm2.hi > 0.0 {
            norm2.ln() + LN2.mul_f64(2.0 * exponent as f64)
        } else {
            DoubleDouble::new(f64::NEG_INFINITY)
        };
        hi.push(log.hi);
        lo.push(if log.hi.is_finite() { log.lo } else { 0.0 });
    }
    MomentSequence { log_moments: hi, log_moments_lo: lo, normalized: true, log_mu0: 0.0 }
}

trait Field: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<Output = Self> + std::ops::Div<Output = Self> {
    const EPS: f64;
    fn from_log(log: DoubleDouble) -> Self;
    fn value(self) -> f64;
    fn root(self) -> f64;
}

impl Field for f64 {
    const EPS: f64 = 1e-13;
    fn from_log(log: DoubleDouble) -> Self {
        log.to_f64().exp()
    }
    fn value(self) -> f64 {
        self
    }
    fn root(self) -> f64 {
        self.sqrt()
    }
}

impl Field for DoubleDouble {
    const EPS: f64 = 1e-28;
    fn from_log(log: DoubleDouble) -> Self {
        log.exp()
    }
    fn value(self) -> f64 {
        self.to_f64()
    }
    fn root(self) -> f64 {
        self.sqrt().to_f64()
    }
}

/// Chebyshev (modified Hankel) algorithm for a symmetric measure.
fn chebyshev<T: Field>(mu: &MomentSequence, zero: T) -> Result<(Vec<f64>, Option<usize>)> {
    let n = mu.len();
    let mu = if mu.normalized { mu.clone() } else { mu.normalized() };
    // rescale ω -> ω / s to keep the moments O(1)
    let ln_s = mu.log_moment(n) / (2.0 * n as f64);
    let mut m = vec![zero; 2 * n + 1];
    m[0] = T::from_log(DoubleDouble::ZERO);
    for k in 1..=n {
        let l = mu.log_moment_dd(k) - DoubleDouble::new(ln_s).mul_f64(2.0 * k as f64);
        m[2 * k] = T::from_log(l);
    }
    let mut prev = vec![zero; 2 * n + 1];
    let mut cur = m.clone();
    let mut beta_prev = cur[0];
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let mut next = vec![zero; 2 * n + 1];
        let mut scale = 0.0f64;
        for l in k..=2 * n - k {
            let a = cur[l + 1];
            let c = beta_prev * prev[l];
            scale = scale.max(a.value().abs()).max(c.value().abs());
            next[l] = a - c;
        }
        let skk = next[k].value();
        if skk.abs() <= T::EPS * scale.max(f64::MIN_POSITIVE) * 1e2 {
            out.push(0.0);
            return Ok((out, Some(k)));
        }
        if skk < 0.0 {
            return Err(Error::LossOfPositivity { step: k, value: skk });
        }
        let beta = next[k] / cur[k - 1];
        out.push(beta.root() * ln_s.exp());
        beta_prev = beta;
        prev = cur;
        cur = next;
    }
    Ok((out, None))
}

/// Lanczos coefficients from normalized even moments (one coefficient per moment).
///
/// The map is exponentially ill-conditioned; in double precision it is
/// reliable only to about twenty coefficients.
pub fn lanczos_from_moments(mu: &MomentSequence, precision: Precision) -> Result<LanczosSequence> {
    if mu.is_empty() {
        return Err(Error::InvalidParameter("empty moment sequence".into()));
    }
    let (coefficients, terminated_at) = match precision {
        Precision::Double => chebyshev::<f64>(mu, 0.0)?,
        Precision::Extended => chebyshev::<DoubleDouble>(mu, DoubleDouble::ZERO)?,
    };
    Ok(LanczosSequence {
        coefficients,
        terminated_at,
        precision_mode: precision,
        reorthogonalized: false,
        seed_log_norm: mu.log_mu0,
        floor_zeroed: 0,
    })
}

/// Linear and power-law fits of `b_n` over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub alpha: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `δ` in `b_n ~ n^δ`.
    pub exponent: f64,
    pub window: (usize, usize),
    pub warnings: Vec<String>,
}

/// Below this log-log exponent growth is reported as sub-linear.
pub const SUBLINEAR_EXPONENT: f64 = 0.9;

/// Fit `b_n ≈ α n + c` and `b_n ≈ A n^δ` over `n_lo ..= n_hi` (1-based).
pub fn growth_fit(b: &LanczosSequence, window: (usize, usize)) -> Result<GrowthFit> {
    let (lo, hi) = window;
    let active = b.active();
    if lo < 1 || hi > active.len() || hi < lo + 5 {
        return Err(Error::InvalidWindow { lo, hi, len: active.len() });
    }
    let n: Vec<f64> = (lo..=hi).map(|i| i as f64).collect();
    let y = &active[lo - 1..hi];
    let lin = linear_fit(&n, y).ok_or(Error::InvalidWindow { lo, hi, len: active.len() })?;
    let mut warnings = Vec::new();
    let exponent = if y.iter().all(|v| *v > 0.0) {
        let ln_n: Vec<f64> = n.iter().map(|v| v.ln()).collect();
        let ln_b: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        linear_fit(&ln_n, &ln_b).map(|f| f.slope).unwrap_or(f64::NAN)
    } else {
        warnings.push("non-positive coefficients in window; exponent undefined".into());
        f64::NAN
    };
    if exponent < SUBLINEAR_EXPONENT {
        warnings.push(format!(
            "sub-linear growth (exponent {exponent:.3}); the linear slope is not a growth rate"
        ));
    }
    Ok(GrowthFit {
        alpha: lin.slope,
        stderr: lin.slope_stderr,
        intercept: lin.intercept,
        r_squared: lin.r_squared,
        exponent,
        window,
        warnings,
    })
}
