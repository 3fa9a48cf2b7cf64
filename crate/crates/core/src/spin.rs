//! Periodic XXZ chain with nearest and next-nearest neighbour couplings,
//! spin-½ operators `S = σ/2`, restricted to a magnetization sector.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::models::{binomial, DecayLaw};
use crate::par;
use crate::spectral::{EigenbasisOperator, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub sites: usize,
    pub j1: f64,
    pub j2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Total `S_z`.
    #[serde(default)]
    pub sz: i64,
}

impl ChainConfig {
    pub fn nn(sites: usize, j1: f64, delta1: f64) -> Self {
        Self { sites, j1, j2: 0.0, delta1, delta2: 0.0, sz: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.sites;
        if !(2..=30).contains(&l) || !l.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("chain length {l} must be even, 2..=30")));
        }
        if self.j2 != 0.0 && l < 4 {
            return Err(Error::InvalidParameter("next-nearest coupling needs at least 4 sites".into()));
        }
        if ![self.j1, self.j2, self.delta1, self.delta2].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coupling".into()));
        }
        if self.sz.unsigned_abs() as usize > l / 2 {
            return Err(Error::EmptySector { sites: l, sz: self.sz });
        }
        Ok(())
    }

    /// Number of up spins in the sector.
    pub fn up_count(&self) -> usize {
        (self.sites as i64 / 2 + self.sz) as usize
    }

    pub fn sector_dimension(&self) -> usize {
        binomial(self.sites as u32, self.up_count() as i64) as usize
    }
}

/// Bitstrings (bit `i` set = spin `i` up) with fixed popcount, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    pub sites: usize,
    pub states: Vec<u32>,
}

impl SectorBasis {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let up = cfg.up_count() as u32;
        let states: Vec<u32> = (0u32..(1u32 << cfg.sites)).filter(|s| s.count_ones() == up).collect();
        if states.is_empty() {
            return Err(Error::EmptySector { sites: cfg.sites, sz: cfg.sz });
        }
        Ok(Self { sites: cfg.sites, states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }
}

/// Matrix elements `(column, value)` of one row, from the bonds `(i, i+r)`.
fn bond_terms(basis: &SectorBasis, state: u32, r: usize, flip: f64, zz: f64, out: &mut Vec<(usize, f64)>) {
    let l = basis.sites;
    for i in 0..l {
        let j = (i + r) % l;
        let (bi, bj) = ((state >> i) & 1, (state >> j) & 1);
        if bi == bj {
            if zz != 0.0 {
                out.push((usize::MAX, 0.25 * zz));
            }
        } else {
            if zz != 0.0 {
                out.push((usize::MAX, -0.25 * zz));
            }
            if flip != 0.0 {
                let flipped = state ^ ((1 << i) | (1 << j));
                let col = basis.index_of(flipped).expect("flip-flop stays in the sector");
                out.push((col, flip));
            }
        }
    }
}

fn assemble(basis: &SectorBasis, row: impl Fn(u32, &mut Vec<(usize, f64)>) + Sync) -> DMatrix<f64> {
    let n = basis.len();
    let rows: Vec<Vec<(usize, f64)>> = par::map(n, |a| {
        let mut terms = Vec::new();
        row(basis.states[a], &mut terms);
        terms
    });
    let mut m = DMatrix::zeros(n, n);
    for (a, terms) in rows.into_iter().enumerate() {
        for (col, v) in terms {
            let c = if col == usize::MAX { a } else { col };
            m[(a, c)] += v;
        }
    }
    m
}

/// `H = J1 Σ (SxSx + SySy + Δ1 SzSz)_{i,i+1} + J2 Σ (...)_{i,i+2}`, periodic.
/// The periodic sum is taken literally, so at `L = 2` the single bond counts twice.
pub fn build_hamiltonian(cfg: &ChainConfig) -> Result<(SectorBasis, DMatrix<f64>)> {
    let basis = SectorBasis::new(cfg)?;
    let h = assemble(&basis, |s, out| {
        bond_terms(&basis, s, 1, 0.5 * cfg.j1, cfg.j1 * cfg.delta1, out);
        if cfg.j2 != 0.0 {
            bond_terms(&basis, s, 2, 0.5 * cfg.j2, cfg.j2 * cfg.delta2, out);
        }
    });
    Ok((basis, h))
}

/// `B = (1/L) Σ_i (S+_i S-_{i+2} + S-_i S+_{i+2})`, periodic.
pub fn flip_flop_operator(cfg: &ChainConfig) -> Result<(SectorBasis, DMatrix<f64>)> {
    let basis = SectorBasis::new(cfg)?;
    let amp = 1.0 / cfg.sites as f64;
    let b = assemble(&basis, |s, out| bond_terms(&basis, s, 2 % cfg.sites.max(1), amp, 0.0, out));
    Ok((basis, b))
}

/// One-site translation as a permutation of the sector basis: state `a` maps to `perm[a]`.
pub fn translation(basis: &SectorBasis) -> Vec<usize> {
    let l = basis.sites as u32;
    let mask = if l == 32 { u32::MAX } else { (1u32 << l) - 1 };
    basis
        .states
        .iter()
        .map(|&s| {
            let t = ((s << 1) | (s >> (l - 1))) & mask;
            basis.index_of(t).expect("translation conserves S_z")
        })
        .collect()
}

/// Eigenvalues ascending and the matching orthonormal eigenvectors (columns).
pub fn diagonalize(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::Eigensolver("matrix must be square and non-empty".into()));
    }
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), h.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Diagonalize `H` and rotate `B` into its eigenbasis.
pub fn diagonalize_to_eigenbasis(h: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Spectrum, EigenbasisOperator)> {
    ensure_dim(h.nrows(), b.nrows())?;
    ensure_dim(h.nrows(), b.ncols())?;
    let (values, v) = diagonalize(h)?;
    let rotated = v.transpose() * b * &v;
    let sym = (&rotated + rotated.transpose()) * 0.5;
    let hermitian = b == &b.transpose();
    Ok((Spectrum::new(values)?, EigenbasisOperator::new(sym, hermitian)?))
}

/// Restrict to the lowest `keep_n` eigenstates.
pub fn truncate_operator(op: &EigenbasisOperator, spec: &Spectrum, keep_n: usize) -> Result<(Spectrum, EigenbasisOperator)> {
    ensure_dim(op.dimension(), spec.dimension())?;
    if keep_n == 0 || keep_n > spec.dimension() {
        return Err(Error::InvalidParameter(format!("keep_n {keep_n} outside 1..={}", spec.dimension())));
    }
    Ok((spec.truncated(keep_n)?, op.truncated(keep_n)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureBin {
    pub omega: f64,
    /// `sqrt(mean |O_lk|²)` over the pairs in the bin.
    pub rms: f64,
    pub count: usize,
}

/// R² of each candidate law on the decay region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitQuality {
    pub exponential: f64,
    pub gaussian: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub law: DecayLaw,
    pub quality: FitQuality,
    /// ω range the fits used.
    pub range: (f64, f64),
}

/// Separate classification of the lower and upper halves of the decay region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub split: f64,
    pub lower: Classification,
    pub upper: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFunctionFit {
    pub omega_bins: Vec<StructureBin>,
    pub window: (f64, f64),
    pub bin_width: f64,
    pub pairs: usize,
    pub classified: DecayLaw,
    pub fit_quality: FitQuality,
    pub decay_range: (f64, f64),
    pub crossover: Option<Crossover>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureOptions {
    /// Ē window; central 20% of the spectrum when absent.
    pub window: Option<(f64, f64)>,
    /// ω bin width; 10 mean level spacings in the window when absent.
    pub bin_width: Option<f64>,
    pub min_count: usize,
    pub min_pairs: usize,
    /// Bins below `peak · e^{-floor_efolds}` are treated as numerical noise.
    pub floor_efolds: f64,
    /// Exponential wins unless another law beats its R² by more than this.
    pub tie_margin: f64,
}

impl Default for StructureOptions {
    fn default() -> Self {
        Self { window: None, bin_width: None, min_count: 20, min_pairs: 100, floor_efolds: 25.0, tie_margin: 0.01 }
    }
}

pub fn default_energy_window(spec: &Spectrum) -> (f64, f64) {
    let mid = 0.5 * (spec.min() + spec.max());
    let half = 0.1 * (spec.max() - spec.min());
    (mid - half, mid + half)
}

const MIN_FIT_BINS: usize = 4;

fn classify(bins: &[StructureBin], tie_margin: f64) -> Option<Classification> {
    let pts: Vec<(f64, f64)> = bins.iter().filter(|b| b.rms > 0.0).map(|b| (b.omega, b.rms.ln())).collect();
    if pts.len() < MIN_FIT_BINS {
        return None;
    }
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit_on = |f: &dyn Fn(f64) -> f64| -> Option<LinearFit> {
        let x: Vec<f64> = pts.iter().map(|p| f(p.0)).collect();
        linear_fit(&x, &y).filter(|fit| fit.slope < 0.0)
    };
    let exp = fit_on(&|w| w);
    let gauss = fit_on(&|w| w * w);
    let power = fit_on(&|w: f64| w.ln());
    let r2 = |f: &Option<LinearFit>| f.as_ref().map_or(f64::NEG_INFINITY, |f| f.r_squared);
    let quality = FitQuality { exponential: r2(&exp), gaussian: r2(&gauss), power: r2(&power) };
    let best_other = quality.gaussian.max(quality.power);
    let law = if exp.is_some() && quality.exponential + tie_margin >= best_other {
        DecayLaw::Exponential { gamma: -exp.as_ref()?.slope }
    } else if quality.gaussian >= quality.power {
        DecayLaw::Gaussian { sigma: (-0.5 / gauss.as_ref()?.slope).sqrt() }
    } else {
        DecayLaw::Power { a: -power.as_ref()?.slope }
    };
    Some(Classification { law, quality, range: (pts[0].0, pts[pts.len() - 1].0) })
}

/// Bin `|O_lk|` by `ω = |E_l - E_k|` over pairs with `(E_l + E_k)/2` in the
/// window and classify the decay of the bin RMS.
pub fn extract_structure_function(
    op: &EigenbasisOperator,
    spec: &Spectrum,
    opts: &StructureOptions,
) -> Result<StructureFunctionFit> {
    let d = op.dimension();
    ensure_dim(d, spec.dimension())?;
    let e = spec.energies();
    let (lo, hi) = opts.window.unwrap_or_else(|| default_energy_window(spec));
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty energy window ({lo}, {hi})")));
    }
    let levels = e.iter().filter(|x| (lo..=hi).contains(*x)).count();
    let bin_width = match opts.bin_width {
        Some(w) if w > 0.0 => w,
        Some(w) => return Err(Error::InvalidParameter(format!("bin width {w} must be positive"))),
        None => {
            if levels < 2 {
                return Err(Error::InsufficientStatistics(format!("{levels} levels in window ({lo}, {hi})")));
            }
            10.0 * (hi - lo) / levels as f64
        }
    };
    let width = (spec.max() - spec.min()).max(f64::MIN_POSITIVE);
    let nbins = (width / bin_width).ceil() as usize + 1;

    let m = op.elements();
    let parts: Vec<(Vec<f64>, Vec<usize>)> = par::map(d, |k| {
        let mut sum = vec![0.0; nbins];
        let mut cnt = vec![0usize; nbins];
        for l in 0..k {
            let ebar = 0.5 * (e[l] + e[k]);
            let w = e[k] - e[l];
            if ebar < lo || ebar > hi || w <= 1e-10 * width {
                continue;
            }
            let bin = ((w / bin_width) as usize).min(nbins - 1);
            sum[bin] += m[(l, k)] * m[(l, k)];
            cnt[bin] += 1;
        }
        (sum, cnt)
    });
    let mut sum = vec![0.0; nbins];
    let mut cnt = vec![0usize; nbins];
    for (s, c) in parts {
        for i in 0..nbins {
            sum[i] += s[i];
            cnt[i] += c[i];
        }
    }
    let pairs: usize = cnt.iter().sum();
    if pairs < opts.min_pairs {
        return Err(Error::InsufficientStatistics(format!(
            "{pairs} pairs in window ({lo}, {hi}), need {}",
            opts.min_pairs
        )));
    }
    let bins: Vec<StructureBin> = (0..nbins)
        .filter(|&i| cnt[i] >= opts.min_count.max(1))
        .map(|i| StructureBin { omega: (i as f64 + 0.5) * bin_width, rms: (sum[i] / cnt[i] as f64).sqrt(), count: cnt[i] })
        .collect();
    if bins.is_empty() {
        return Err(Error::InsufficientStatistics("no bin reaches the minimum count".into()));
    }

    let (peak_idx, peak) = bins
        .iter()
        .enumerate()
        .map(|(i, b)| (i, b.rms))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let ln_peak = peak.ln();
    let start = bins[peak_idx..].iter().position(|b| b.rms.ln() < ln_peak - 1.0).map(|p| p + peak_idx);
    let mut classified = DecayLaw::Flat;
    let mut fit_quality = FitQuality { exponential: f64::NAN, gaussian: f64::NAN, power: f64::NAN };
    let mut decay_range = (f64::NAN, f64::NAN);
    let mut crossover = None;
    if let Some(start) = start {
        let end = bins[start..]
            .iter()
            .position(|b| b.rms <= 0.0 || b.rms.ln() < ln_peak - opts.floor_efolds)
            .map_or(bins.len(), |p| p + start);
        let region = &bins[start..end];
        let c = classify(region, opts.tie_margin).ok_or_else(|| {
            Error::InsufficientStatistics(format!("{} bins in the decay region", region.len()))
        })?;
        classified = c.law;
        fit_quality = c.quality;
        decay_range = c.range;
        let half = region.len() / 2;
        if half >= MIN_FIT_BINS {
            let lower = classify(&region[..half], opts.tie_margin);
            let upper = classify(&region[half..], opts.tie_margin);
            if let (Some(lower), Some(upper)) = (lower, upper) {
                crossover = Some(Crossover { split: region[half].omega, lower, upper });
            }
        }
    }
    Ok(StructureFunctionFit {
        omega_bins: bins,
        window: (lo, hi),
        bin_width,
        pairs,
        classified,
        fit_quality,
        decay_range,
        crossover,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::random_ensemble;

    #[test]
    fn dimer() {
        let cfg = ChainConfig::nn(2, 1.0, 1.0);
        let (basis, h) = build_hamiltonian(&cfg).unwrap();
        assert_eq!(basis.states, vec![0b01, 0b10]);
        let (e, _) = diagonalize(&h).unwrap();
        assert!((e[0] + 1.5).abs() < 1e-14 && (e[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sector_dimensions() {
        for (l, d) in [(12, 924), (14, 3432), (8, 70)] {
            let cfg = ChainConfig::nn(l, 1.0, 0.5);
            assert_eq!(cfg.sector_dimension(), d);
            assert_eq!(SectorBasis::new(&cfg).unwrap().len(), d);
        }
        let cfg = ChainConfig { sz: 5, ..ChainConfig::nn(8, 1.0, 1.0) };
        assert!(matches!(SectorBasis::new(&cfg), Err(Error::EmptySector { .. })));
    }

    #[test]
    fn flip_flop_commutes_with_translation() {
        let cfg = ChainConfig { j2: 1.0, delta2: 0.5, ..ChainConfig::nn(8, 1.0, 0.55) };
        let (basis, b) = flip_flop_operator(&cfg).unwrap();
        let (_, h) = build_hamiltonian(&cfg).unwrap();
        let t = translation(&basis);
        for a in 0..basis.len() {
            for c in 0..basis.len() {
                let scaled = |m: &DMatrix<f64>, i, j| (m[(i, j)] * 8.0).round() as i64;
                assert_eq!(scaled(&b, t[a], t[c]), scaled(&b, a, c));
                assert_eq!((h[(t[a], t[c])] * 16.0) as i64, (h[(a, c)] * 16.0) as i64);
            }
        }
    }

    #[test]
    fn eigenbasis_preserves_trace() {
        let cfg = ChainConfig { j2: 1.0, delta2: 0.5, ..ChainConfig::nn(8, 1.0, 0.55) };
        let (_, h) = build_hamiltonian(&cfg).unwrap();
        let (_, b) = flip_flop_operator(&cfg).unwrap();
        let (spec, op) = diagonalize_to_eigenbasis(&h, &b).unwrap();
        assert_eq!(spec.dimension(), 70);
        assert!((op.elements().trace() - b.trace()).abs() < 1e-10);
        let (s2, o2) = truncate_operator(&op, &spec, 70).unwrap();
        assert_eq!(&s2, &spec);
        assert_eq!(&o2, &op);
    }

    #[test]
    fn recovers_exponential_ensemble() {
        let m = random_ensemble(1500, &DecayLaw::Exponential { gamma: 1.0 }, 30.0, 3).unwrap();
        let fit = extract_structure_function(&m.operator, &m.spectrum, &StructureOptions::default()).unwrap();
        match fit.classified {
            DecayLaw::Exponential { gamma } => assert!((gamma - 1.0).abs() < 0.1, "gamma {gamma}"),
            other => panic!("classified {other:?}"),
        }
    }

    #[test]
    fn flat_ensemble_is_flat() {
        let m = random_ensemble(800, &DecayLaw::Flat, 30.0, 1).unwrap();
        let fit = extract_structure_function(&m.operator, &m.spectrum, &StructureOptions::default()).unwrap();
        assert_eq!(fit.classified, DecayLaw::Flat);
    }

    #[test]
    fn absurd_window() {
        let m = random_ensemble(100, &DecayLaw::Flat, 10.0, 1).unwrap();
        let opts = StructureOptions { window: Some((1e3, 2e3)), ..Default::default() };
        assert!(extract_structure_function(&m.operator, &m.spectrum, &opts).is_err());
    }
}
