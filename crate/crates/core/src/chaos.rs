//! Level-spacing statistics and the chaos-boundary scan.
//!
//! All statistics assume a single parity sector: the two sectors are
//! independent spectra and interleaving them looks Poissonian.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::register::{sample_disorder, RegisterConfig};
use crate::spectral::{diagonalize_by_parity, eigenstate_profile, Histogram, Spectrum};
use crate::stats::{first_crossing, MeanError};

/// Mean spacing ratio of uncorrelated levels, `2 ln 2 - 1`.
pub const POISSON_R: f64 = 0.386_294_361_119_890_6;
/// Mean spacing ratio of the Gaussian orthogonal ensemble.
pub const GOE_R: f64 = 0.5307;
/// Halfway between the two references.
pub const RATIO_MIDPOINT: f64 = 0.5 * (POISSON_R + GOE_R);

pub const MIN_LEVELS: usize = 50;
const UNFOLD_DEGREE: usize = 7;
const UNFOLD_FRACTION: f64 = 0.8;

/// Unfolded nearest-neighbor spacings of one sector's sorted eigenvalues.
///
/// A degree-7 polynomial (Chebyshev basis) is fitted to the staircase over
/// the central 80% of levels; spacings of the mapped levels inside that range
/// are returned, rescaled to unit mean.
pub fn unfold(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let count = eigenvalues.len();
    if count < MIN_LEVELS {
        return Err(Error::TooFewLevels { needed: MIN_LEVELS, got: count });
    }
    if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("eigenvalues must be sorted ascending".into()));
    }
    let cut = ((1.0 - UNFOLD_FRACTION) / 2.0 * count as f64).floor() as usize;
    let (lo, hi) = (cut, count - cut);
    let levels = &eigenvalues[lo..hi];
    let (a, b) = (levels[0], levels[levels.len() - 1]);
    if !(b > a) {
        return Err(Error::InvalidArgument("central levels are fully degenerate".into()));
    }
    let x = |e: f64| (2.0 * e - a - b) / (b - a);
    let basis = Mat::from_fn(levels.len(), UNFOLD_DEGREE + 1, |row, col| chebyshev(col, x(levels[row])));
    let staircase = Mat::from_fn(levels.len(), 1, |row, _| (lo + row) as f64 + 0.5);
    let coef = basis.qr().solve_lstsq(&staircase);
    let smooth = |e: f64| (0..=UNFOLD_DEGREE).map(|d| coef[(d, 0)] * chebyshev(d, x(e))).sum::<f64>();
    let mapped: Vec<f64> = levels.iter().map(|&e| smooth(e)).collect();
    let spacings: Vec<f64> = mapped.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::InvalidArgument("staircase fit is not increasing".into()));
    }
    Ok(spacings.into_iter().map(|s| s / mean).collect())
}

fn chebyshev(degree: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    match degree {
        0 => prev,
        _ => {
            for _ in 1..degree {
                (prev, cur) = (cur, 2.0 * x * cur - prev);
            }
            cur
        }
    }
}

/// `r̃_k = min(s_k, s_{k+1}) / max(s_k, s_{k+1})` averaged over `k`. Pairs of
/// zero spacings are skipped.
pub fn mean_spacing_ratio(spacings: &[f64]) -> Option<f64> {
    let ratios: Vec<f64> =
        spacings.windows(2).filter(|w| w[0].max(w[1]) > 0.0).map(|w| w[0].min(w[1]) / w[0].max(w[1])).collect();
    (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Mean spacing ratio straight from sorted levels, no unfolding.
pub fn level_spacing_ratio(levels: &[f64]) -> Option<f64> {
    let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    mean_spacing_ratio(&gaps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacingStats {
    pub unfolded_spacings: Vec<f64>,
    /// Density of unfolded spacings in bins of width 0.1 starting at 0.
    pub histogram: Histogram,
    /// Brody parameter: 0 for Poisson, 1 for Wigner.
    pub brody_parameter: f64,
    /// Mean ratio of the unfolded spacings.
    pub mean_ratio: f64,
    /// Mean ratio of the raw levels, when given.
    pub raw_mean_ratio: Option<f64>,
}

pub const SPACING_BIN: f64 = 0.1;

pub fn spacing_statistics(unfolded: &[f64], raw_levels: Option<&[f64]>) -> Result<SpacingStats> {
    if unfolded.len() < MIN_LEVELS {
        return Err(Error::TooFewLevels { needed: MIN_LEVELS, got: unfolded.len() });
    }
    let samples: Vec<(f64, f64)> = unfolded.iter().map(|&s| (s, 1.0 / (unfolded.len() as f64 * SPACING_BIN))).collect();
    let mut histogram = Histogram::accumulate(&samples, SPACING_BIN, Some(0.5 * SPACING_BIN))?;
    // Spacings are non-negative; drop the empty bins left of zero.
    let skip = ((-histogram.origin) / SPACING_BIN).round().max(0.0) as usize;
    histogram.values.drain(..skip.min(histogram.values.len()));
    histogram.origin += skip as f64 * SPACING_BIN;
    Ok(SpacingStats {
        unfolded_spacings: unfolded.to_vec(),
        histogram,
        brody_parameter: brody_fit(unfolded),
        mean_ratio: mean_spacing_ratio(unfolded).unwrap_or(f64::NAN),
        raw_mean_ratio: raw_levels.and_then(level_spacing_ratio),
    })
}

/// Log-likelihood of spacings under the Brody distribution
/// `(η+1) b s^η exp(-b s^(η+1))`, `b = Γ((η+2)/(η+1))^(η+1)`.
fn brody_log_likelihood(spacings: &[f64], eta: f64) -> f64 {
    let p = eta + 1.0;
    let ln_b = p * ln_gamma((eta + 2.0) / p);
    let b = ln_b.exp();
    spacings
        .iter()
        .map(|&s| {
            let s = s.max(f64::MIN_POSITIVE);
            p.ln() + ln_b + eta * s.ln() - b * s.powf(p)
        })
        .sum()
}

/// Maximum-likelihood Brody parameter on `[0, 1]` by golden-section search.
pub fn brody_fit(spacings: &[f64]) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let f = |eta: f64| -brody_log_likelihood(spacings, eta);
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-6 {
        if fc < fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    // The optimum may sit on the boundary.
    [(0.0, f(0.0)), (0.5 * (a + b), f(0.5 * (a + b))), (1.0, f(1.0))]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|x| x.0)
        .unwrap_or(0.5 * (a + b))
}

/// Where a scanned curve crosses its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    /// Interpolated coupling; `None` when the curve stays on one side.
    pub value: Option<f64>,
    /// Curve values at the two grid ends.
    pub low_end: f64,
    pub high_end: f64,
}

impl Crossing {
    fn locate(xs: &[f64], ys: &[f64], level: f64) -> Self {
        Self {
            value: first_crossing(xs, ys, level),
            low_end: ys.first().copied().unwrap_or(f64::NAN),
            high_end: ys.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChaosScanResult {
    pub j_grid: Vec<f64>,
    /// Eigenstate entropy (bits) over the central window, per coupling.
    pub mean_eigenstate_entropy: Vec<MeanError>,
    /// Per-sector raw spacing ratio over the central window, per coupling.
    pub mean_ratio: Vec<MeanError>,
    /// Entropy crossing 1 bit.
    pub j_c_entropy: Crossing,
    /// Ratio crossing [`RATIO_MIDPOINT`].
    pub j_c_ratio: Crossing,
    pub realizations: usize,
    pub energy_window: f64,
}

pub const DEFAULT_ENERGY_WINDOW: f64 = 0.25;

/// Indices of the middle `fraction` of `dim` levels.
pub fn central_window(dim: usize, fraction: f64) -> std::ops::Range<usize> {
    let lo = ((0.5 - 0.5 * fraction) * dim as f64).floor() as usize;
    let hi = (((0.5 + 0.5 * fraction) * dim as f64).ceil() as usize).clamp(lo + 1, dim);
    lo..hi
}

/// Mean eigenstate entropy and raw spacing ratio over the central window of
/// one sector.
pub fn sector_window_stats(s: &Spectrum, fraction: f64) -> Result<(f64, f64)> {
    let window = central_window(s.dim(), fraction);
    let count = window.len() as f64;
    let mut entropy = 0.0;
    for k in window.clone() {
        entropy += eigenstate_profile(s, k)?.entropy_bits;
    }
    let ratio = level_spacing_ratio(&s.eigenvalues()[window]).unwrap_or(f64::NAN);
    Ok((entropy / count, ratio))
}

/// For each coupling in `j_grid`, diagonalizes `realizations` disorder
/// samples of `template` (both parity sectors) and averages eigenstate
/// entropy and spacing ratio over the central `energy_window` of levels.
///
/// Field and coupling-sign draws depend only on the seed and realization
/// index, so every grid point sees the same disorder shapes.
pub fn chaos_boundary_scan(
    template: &RegisterConfig,
    j_grid: &[f64],
    realizations: usize,
    energy_window: f64,
) -> Result<ChaosScanResult> {
    if realizations == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    if j_grid.is_empty() || j_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("j_grid must be non-empty and strictly ascending".into()));
    }
    if !(energy_window > 0.0 && energy_window <= 1.0) {
        return Err(Error::InvalidArgument(format!("energy window must lie in (0, 1], got {energy_window}")));
    }
    template.validate()?;
    let units: Vec<(usize, u64)> =
        (0..j_grid.len()).flat_map(|g| (0..realizations as u64).map(move |r| (g, r))).collect();
    let values: Vec<(f64, f64)> = units
        .par_iter()
        .map(|&(g, r)| {
            let realization = sample_disorder(&template.with_j_scale(j_grid[g]), r)?;
            let sectors = diagonalize_by_parity(&realization)?;
            let mut acc = (0.0, 0.0);
            for s in &sectors {
                let (e, q) = sector_window_stats(s, energy_window)?;
                acc.0 += 0.5 * e;
                acc.1 += 0.5 * q;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let per_j = |pick: fn(&(f64, f64)) -> f64| -> Vec<MeanError> {
        values.chunks(realizations).map(|chunk| MeanError::of(&chunk.iter().map(pick).collect::<Vec<_>>())).collect()
    };
    let entropy = per_j(|v| v.0);
    let ratio = per_j(|v| v.1);
    let means = |m: &[MeanError]| m.iter().map(|x| x.mean).collect::<Vec<_>>();
    Ok(ChaosScanResult {
        j_grid: j_grid.to_vec(),
        j_c_entropy: Crossing::locate(j_grid, &means(&entropy), 1.0),
        j_c_ratio: Crossing::locate(j_grid, &means(&ratio), RATIO_MIDPOINT),
        mean_eigenstate_entropy: entropy,
        mean_ratio: ratio,
        realizations,
        energy_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::{Topology, DEFAULT_MAX_QUBITS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poisson_levels(count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = 0.0;
        (0..count)
            .map(|_| {
                e += -(1.0 - rng.random::<f64>()).ln();
                e
            })
            .collect()
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        let (u, v): (f64, f64) = (1.0 - rng.random::<f64>(), rng.random());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    #[test]
    fn uniform_spectrum_unfolds_to_ones() {
        let levels: Vec<f64> = (0..200).map(|k| 0.3 * k as f64 - 7.0).collect();
        let s = unfold(&levels).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-9));
    }

    #[test]
    fn too_few_levels() {
        assert!(matches!(unfold(&[0.0; 10]), Err(Error::TooFewLevels { .. })));
        assert!(spacing_statistics(&[1.0; 10], None).is_err());
    }

    #[test]
    fn poisson_reference() {
        let levels = poisson_levels(100_000, 1);
        let s = unfold(&levels).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() < 0.02);
        let stats = spacing_statistics(&s, Some(&levels)).unwrap();
        assert!((stats.mean_ratio - 0.386).abs() < 0.01, "{}", stats.mean_ratio);
        assert!((stats.raw_mean_ratio.unwrap() - 0.386).abs() < 0.01);
        assert!(stats.brody_parameter < 0.1, "{}", stats.brody_parameter);
        let integral: f64 = stats.histogram.total() * SPACING_BIN;
        assert!((integral - 1.0).abs() < 1e-9);
        assert_eq!(stats.histogram.origin, 0.0);
    }

    #[test]
    fn goe_reference() {
        let n = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x = gaussian(&mut rng) * if i == j { 2f64.sqrt() } else { 1.0 };
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let evd = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let levels: Vec<f64> = (0..n).map(|k| evd.S()[k]).collect();
        let s = unfold(&levels).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() < 0.02);
        let stats = spacing_statistics(&s, Some(&levels)).unwrap();
        assert!((stats.mean_ratio - 0.531).abs() < 0.01, "{}", stats.mean_ratio);
        assert!(stats.brody_parameter > 0.9, "{}", stats.brody_parameter);
    }

    #[test]
    fn uncoupled_register_is_poisson_like() {
        let cfg = RegisterConfig::new(12, Topology::Lattice, 1.0, 0.0).with_seed(3);
        let mut pooled = Vec::new();
        for r in 0..4 {
            let real = sample_disorder(&cfg, r).unwrap();
            let [even, _] = diagonalize_by_parity(&real).unwrap();
            pooled.extend(unfold(even.eigenvalues()).unwrap());
        }
        let stats = spacing_statistics(&pooled, None).unwrap();
        assert!(stats.brody_parameter < 0.3, "{}", stats.brody_parameter);
    }

    #[test]
    fn scan_is_scale_invariant_and_starts_localized() {
        let cfg = RegisterConfig::new(6, Topology::Lattice, 1.0, 0.0).with_seed(11);
        assert!(cfg.n <= DEFAULT_MAX_QUBITS);
        let grid = [1e-4, 0.05, 0.3];
        let a = chaos_boundary_scan(&cfg, &grid, 3, DEFAULT_ENERGY_WINDOW).unwrap();
        let scaled = RegisterConfig { delta0: 2.0, ..cfg.clone() };
        let grid2: Vec<f64> = grid.iter().map(|j| 2.0 * j).collect();
        let b = chaos_boundary_scan(&scaled, &grid2, 3, DEFAULT_ENERGY_WINDOW).unwrap();
        for (x, y) in a.mean_eigenstate_entropy.iter().zip(&b.mean_eigenstate_entropy) {
            assert!((x.mean - y.mean).abs() < 1e-9);
        }
        for (x, y) in a.mean_ratio.iter().zip(&b.mean_ratio) {
            assert!((x.mean - y.mean).abs() < 1e-9);
        }
        assert!(a.mean_eigenstate_entropy[0].mean < 1e-3);
    }

    #[test]
    fn scan_flags_missing_crossing() {
        let cfg = RegisterConfig::new(4, Topology::Chain, 1.0, 0.0);
        let res = chaos_boundary_scan(&cfg, &[1e-6, 2e-6], 1, DEFAULT_ENERGY_WINDOW).unwrap();
        assert_eq!(res.j_c_entropy.value, None);
        assert!(res.j_c_entropy.high_end < 1.0);
        assert!(res.mean_eigenstate_entropy[0].stderr.is_none());
        assert!(chaos_boundary_scan(&cfg, &[0.2, 0.1], 1, 0.25).is_err());
        assert!(chaos_boundary_scan(&cfg, &[0.1], 0, 0.25).is_err());
    }

    #[test]
    fn central_window_bounds() {
        assert_eq!(central_window(512, 0.25), 192..320);
        assert_eq!(central_window(2, 0.25), 0..2);
        assert_eq!(central_window(8, 0.25), 3..5);
    }
}
