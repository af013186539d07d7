//! Small statistics helpers shared by ensembles and scans.

use serde::Serialize;

/// Mean and standard error of per-realization values. The standard error is
/// `None` below two samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanError {
    pub mean: f64,
    pub stderr: Option<f64>,
    pub count: usize,
}

impl MeanError {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { mean: f64::NAN, stderr: None, count };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = (count >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        });
        Self { mean, stderr, count }
    }
}

/// Linear interpolation of the first upward crossing of `level` by `ys(xs)`.
/// Returns `None` when the curve never reaches the level.
pub fn first_crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    if ys.first().is_some_and(|y| *y >= level) {
        return xs.first().copied();
    }
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        (y[0] < level && y[1] >= level).then(|| x[0] + (level - y[0]) * (x[1] - x[0]) / (y[1] - y[0]))
    })
}

/// `points` values from `start` to `stop` inclusive, evenly spaced in log.
pub fn geomspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect()
        }
    }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => (0..points).map(|k| start + (stop - start) * k as f64 / (points - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_no_error() {
        let m = MeanError::of(&[2.5]);
        assert_eq!(m.mean, 2.5);
        assert_eq!(m.stderr, None);
    }

    #[test]
    fn stderr_of_known_sample() {
        let m = MeanError::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn crossing_is_interpolated() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 0.5, 1.5, 0.2];
        assert!((first_crossing(&x, &y, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(first_crossing(&x, &y, 2.0), None);
    }

    #[test]
    fn grids() {
        let g = geomspace(1e-3, 1e3, 7);
        assert!((g[3] - 1.0).abs() < 1e-12 && (g[6] - 1e3).abs() < 1e-9);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
