use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::register::{second_moment, DisorderRealization};

/// Fixed-width histogram; bin `b` covers `[origin + b w, origin + (b + 1) w)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub origin: f64,
    pub width: f64,
    pub values: Vec<f64>,
}

impl Histogram {
    /// Sums `weight` per bin. When `center` is given the bins are aligned so
    /// that `center` sits in the middle of a bin.
    pub fn accumulate(samples: &[(f64, f64)], width: f64, center: Option<f64>) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!("bin width must be positive, got {width}")));
        }
        if samples.is_empty() {
            return Ok(Self { origin: 0.0, width, values: vec![] });
        }
        let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
        let anchor = center.unwrap_or(lo + 0.5 * width) - 0.5 * width;
        let origin = anchor + ((lo - anchor) / width).floor() * width;
        let bins = (((hi - origin) / width).floor() as usize + 1).max(1);
        let mut values = vec![0.0; bins];
        for &(x, w) in samples {
            let b = (((x - origin) / width).floor().max(0.0) as usize).min(bins - 1);
            values[b] += w;
        }
        Ok(Self { origin, width, values })
    }

    pub fn center(&self, b: usize) -> f64 {
        self.origin + (b as f64 + 0.5) * self.width
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Gaussian density of states with the exact first two moments of the
/// register spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianReference {
    pub total: f64,
    pub mean: f64,
    pub variance: f64,
}

impl GaussianReference {
    pub fn density(&self, e: f64) -> f64 {
        self.total / (2.0 * PI * self.variance).sqrt() * (-(e - self.mean).powi(2) / (2.0 * self.variance)).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityOfStates {
    /// Level counts per bin.
    pub histogram: Histogram,
    pub gaussian: GaussianReference,
    /// Mean spacing of the central 10% of levels.
    pub central_spacing: f64,
    /// Coarse estimate `Δ0 n 2^-n`.
    pub coarse_spacing: f64,
}

/// `eigenvalues` must be sorted ascending. The Gaussian reference has mean 0
/// and variance `Σ ε_i² + Σ J_ij²`, scaled to the number of levels given.
pub fn density_of_states(eigenvalues: &[f64], r: &DisorderRealization, bin_width: f64) -> Result<DensityOfStates> {
    let samples: Vec<(f64, f64)> = eigenvalues.iter().map(|e| (*e, 1.0)).collect();
    let histogram = Histogram::accumulate(&samples, bin_width, None)?;
    let variance = r.eps.iter().map(|e| e * e).sum::<f64>() + second_moment(r);
    let count = eigenvalues.len();
    let central_spacing = if count >= 2 {
        let lo = ((0.45 * count as f64).floor() as usize).min(count - 2);
        let hi = ((0.55 * count as f64).ceil() as usize).saturating_sub(1).clamp(lo + 1, count - 1);
        (eigenvalues[hi] - eigenvalues[lo]) / (hi - lo) as f64
    } else {
        f64::NAN
    };
    let n = r.n() as f64;
    Ok(DensityOfStates {
        histogram,
        gaussian: GaussianReference { total: count as f64, mean: 0.0, variance },
        central_spacing,
        coarse_spacing: r.config.delta0 * n * (-n).exp2(),
    })
}
