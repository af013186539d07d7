use std::f64::consts::PI;

use serde::Serialize;

use super::dos::Histogram;
use super::Spectrum;
use crate::error::{Error, Result};
use crate::register::BasisState;

/// Strength function (local density of states) of one basis state: the
/// eigenstate weights `|C_i^(k)|²` at the energies `E^(k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrengthFunction {
    /// `None` for ensemble-pooled strength functions.
    pub initial_state: Option<BasisState>,
    /// `(E^(k), |C_i^(k)|²)`.
    pub pairs: Vec<(f64, f64)>,
    /// Binned `P_i(E)`: weight per bin divided by the bin width. Bins are
    /// centered on the first moment.
    pub bins: Histogram,
    /// Mean energy, equal to `H_ii`.
    pub first_moment: f64,
    /// Central second moment, equal to `Σ J_ij²`.
    pub second_moment: f64,
    pub fit: Option<BreitWignerFit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BreitWignerFit {
    pub gamma: f64,
    /// Centroid shift `δ_i` relative to the first moment.
    pub shift: f64,
    /// Euclidean norm of the binned residual inside the final window.
    pub residual: f64,
    pub bins_used: usize,
}

pub fn strength_function(s: &Spectrum, i: BasisState, bin_width: f64) -> Result<StrengthFunction> {
    let weights = s.weights_of(i)?;
    let pairs: Vec<(f64, f64)> = s.eigenvalues().iter().copied().zip(weights).collect();
    let mut sf = StrengthFunction::from_pairs(Some(i), pairs, bin_width)?;
    sf.fit = fit_breit_wigner(&sf).ok();
    Ok(sf)
}

impl StrengthFunction {
    pub fn from_pairs(initial_state: Option<BasisState>, pairs: Vec<(f64, f64)>, bin_width: f64) -> Result<Self> {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let first_moment = pairs.iter().map(|(e, w)| e * w).sum::<f64>() / total;
        let second_moment = pairs.iter().map(|(e, w)| w * (e - first_moment).powi(2)).sum::<f64>() / total;
        let mut bins = Histogram::accumulate(&pairs, bin_width, Some(first_moment))?;
        for v in &mut bins.values {
            *v /= bin_width;
        }
        Ok(Self { initial_state, pairs, bins, first_moment, second_moment, fit: None })
    }

    /// Ensemble average of several strength functions, each shifted so its
    /// first moment sits at zero and weighted equally.
    pub fn pooled(parts: &[StrengthFunction], bin_width: f64) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("nothing to pool".into()));
        }
        let scale = 1.0 / parts.len() as f64;
        let pairs =
            parts.iter().flat_map(|p| p.pairs.iter().map(move |(e, w)| (e - p.first_moment, w * scale))).collect();
        let mut sf = Self::from_pairs(None, pairs, bin_width)?;
        sf.fit = fit_breit_wigner(&sf).ok();
        Ok(sf)
    }

    pub fn total_weight(&self) -> f64 {
        self.pairs.iter().map(|p| p.1).sum()
    }

    /// `Σ_bins P × width`, which is 1 for a complete decomposition.
    pub fn binned_integral(&self) -> f64 {
        self.bins.total() * self.bins.width
    }
}

/// Lorentzian `(1/2π) Γ / (x² + Γ²/4)` averaged over `[x - w/2, x + w/2]`.
fn lorentzian_bin(x: f64, gamma: f64, w: f64) -> f64 {
    let h = 0.5 * gamma;
    (((x + 0.5 * w) / h).atan() - ((x - 0.5 * w) / h).atan()) / (PI * w)
}

/// Weighted quantile of `pairs` (sorted by energy internally).
fn weighted_quantile(sorted: &[(f64, f64)], total: f64, q: f64) -> f64 {
    let target = q * total;
    let mut acc = 0.0;
    for &(e, w) in sorted {
        acc += w;
        if acc >= target {
            return e;
        }
    }
    sorted.last().map(|p| p.0).unwrap_or(0.0)
}

/// Least-squares fit of a Breit-Wigner profile centered at
/// `first_moment + shift` to the binned strength function.
///
/// Starts from quantile estimates (median for the centroid, interquartile
/// range for `Γ`, which is exact for a Lorentzian) and refits twice, each time
/// restricting the bins to `|E - E_i - δ| <= 4Γ` from the previous pass.
pub fn fit_breit_wigner(sf: &StrengthFunction) -> Result<BreitWignerFit> {
    let significant = sf.pairs.iter().filter(|p| p.1 > 1e-12).count();
    if significant < 20 {
        return Err(Error::FitUnavailable(format!("{significant} eigenstates carry weight, need 20")));
    }
    let mut sorted = sf.pairs.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = sf.total_weight();
    let e_i = sf.first_moment;
    let width = sf.bins.width;

    let mut shift = weighted_quantile(&sorted, total, 0.5) - e_i;
    let mut gamma = weighted_quantile(&sorted, total, 0.75) - weighted_quantile(&sorted, total, 0.25);
    if gamma <= 0.0 {
        gamma = sf.second_moment.sqrt().max(width);
    }

    let mut result = None;
    for _ in 0..2 {
        let bins: Vec<(f64, f64)> = (0..sf.bins.values.len())
            .map(|b| (sf.bins.center(b), sf.bins.values[b]))
            .filter(|(c, _)| (c - e_i - shift).abs() <= 4.0 * gamma)
            .collect();
        let occupied = bins.iter().filter(|b| b.1 > 0.0).count();
        if occupied < 5 {
            return Err(Error::FitUnavailable(format!("{occupied} occupied bins in the fit window, need 5")));
        }
        let (g, d, res) = levenberg_marquardt(&bins, e_i, width, gamma, shift);
        gamma = g;
        shift = d;
        result = Some(BreitWignerFit { gamma, shift, residual: res, bins_used: bins.len() });
    }
    result.ok_or_else(|| Error::FitUnavailable("no fit pass ran".into()))
}

/// Two-parameter LM on `(ln Γ, δ)` with a central-difference Jacobian.
fn levenberg_marquardt(bins: &[(f64, f64)], e_i: f64, width: f64, gamma0: f64, shift0: f64) -> (f64, f64, f64) {
    let residuals = |p: [f64; 2]| -> Vec<f64> {
        let g = p[0].exp();
        bins.iter().map(|&(c, y)| lorentzian_bin(c - e_i - p[1], g, width) - y).collect()
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut p = [gamma0.ln(), shift0];
    let mut r = residuals(p);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jac = vec![[0.0f64; 2]; bins.len()];
        for a in 0..2 {
            let h = 1e-6 * p[a].abs().max(1e-3);
            let (mut up, mut down) = (p, p);
            up[a] += h;
            down[a] -= h;
            let (ru, rd) = (residuals(up), residuals(down));
            for (row, (u, d)) in jac.iter_mut().zip(ru.iter().zip(&rd)) {
                row[a] = (u - d) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for (row, res) in jac.iter().zip(&r) {
            for a in 0..2 {
                jtr[a] += row[a] * res;
                for b in 0..2 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let m = [[jtj[0][0] * (1.0 + lambda), jtj[0][1]], [jtj[1][0], jtj[1][1] * (1.0 + lambda)]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step = [-(m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det, -(m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det];
            let trial = [p[0] + step[0], p[1] + step[1]];
            let rt = residuals(trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct < c {
                let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                p = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (p[0].exp(), p[1], c.sqrt())
}
