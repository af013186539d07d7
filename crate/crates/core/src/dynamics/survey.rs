use rayon::prelude::*;
use serde::Serialize;

use super::{critical_time, AnalyticModelParams, CriticalTimeMode};
use super::{densify_near_crossing, evolve, measure_critical_time, EvolveOptions};
use crate::error::{Error, Result};
use crate::register::{sample_disorder, second_moment, InitialState, RegisterConfig};
use crate::spectral::{diagonalize_sector_of, StrengthFunction};
use crate::stats::{geomspace, MeanError};

/// Settings of a critical-time survey over register sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct SurveySettings {
    pub realizations: usize,
    pub initial_state: InitialState,
    /// Geometric grid points between `10⁻²/ΔE` and `10²/ΔE`.
    pub grid_points: usize,
    /// Extra evenly spaced times inside the first bracket where `S` reaches 1.
    pub refine_points: usize,
    /// Strength-function bins per `ΔE`.
    pub bins_per_delta_e: f64,
}

impl Default for SurveySettings {
    fn default() -> Self {
        Self {
            realizations: 10,
            initial_state: InitialState::Staggered,
            grid_points: 160,
            refine_points: 32,
            bins_per_delta_e: 20.0,
        }
    }
}

/// Measured and predicted critical time at one register size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalTimePoint {
    pub n: usize,
    /// Mean over realizations of the first `S(t) = 1` crossing.
    pub tc_measured: MeanError,
    /// `1/(Γ L) sqrt(1 + Γ² L/ΔE²)` with `L = log2 qn`.
    pub tc_predicted: f64,
    /// `1/(Γ log2 n)`.
    pub tc_simple: f64,
    /// Breit-Wigner width of the ensemble-pooled strength function.
    pub gamma_fit: f64,
    /// Ensemble mean of `Σ J_ij²`.
    pub delta_e2: f64,
    pub qn: usize,
    /// Realizations whose entropy never reached one bit on the grid.
    pub missing_crossings: usize,
}

struct Sample {
    tc: Option<f64>,
    strength: StrengthFunction,
    delta_e2: f64,
}

/// For each size in `sizes`, evolves an ensemble from `settings.initial_state`
/// and compares the measured critical time with the closed-form estimates.
/// `template.n` is replaced by each size.
pub fn critical_time_survey(
    template: &RegisterConfig,
    sizes: &[usize],
    settings: &SurveySettings,
) -> Result<Vec<CriticalTimePoint>> {
    if settings.realizations == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    if settings.grid_points < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    let configs: Vec<RegisterConfig> = sizes.iter().map(|&n| RegisterConfig { n, ..template.clone() }).collect();
    for c in &configs {
        c.validate()?;
    }
    let units: Vec<(usize, u64)> =
        (0..configs.len()).flat_map(|c| (0..settings.realizations as u64).map(move |r| (c, r))).collect();
    let samples: Vec<Sample> =
        units.par_iter().map(|&(c, r)| survey_sample(&configs[c], r, settings)).collect::<Result<_>>()?;

    configs
        .iter()
        .zip(samples.chunks(settings.realizations))
        .map(|(cfg, chunk)| {
            let qn = cfg.topology.edges(cfg.n)?.len();
            let delta_e2 = chunk.iter().map(|s| s.delta_e2).sum::<f64>() / chunk.len() as f64;
            let parts: Vec<StrengthFunction> = chunk.iter().map(|s| s.strength.clone()).collect();
            let pooled = StrengthFunction::pooled(&parts, delta_e2.sqrt() / settings.bins_per_delta_e)?;
            let fit = pooled
                .fit
                .ok_or_else(|| Error::FitUnavailable(format!("pooled strength function at n = {}", cfg.n)))?;
            let params = AnalyticModelParams { delta_e2, gamma: fit.gamma, n_f: qn as f64, qn: qn as f64, e_i: 0.0 };
            let found: Vec<f64> = chunk.iter().filter_map(|s| s.tc).collect();
            Ok(CriticalTimePoint {
                n: cfg.n,
                tc_measured: MeanError::of(&found),
                tc_predicted: critical_time(&params, CriticalTimeMode::Predicted)?,
                tc_simple: critical_time(&params.with_n_f(cfg.n as f64), CriticalTimeMode::PredictedSimple)?,
                gamma_fit: fit.gamma,
                delta_e2,
                qn,
                missing_crossings: chunk.len() - found.len(),
            })
        })
        .collect()
}

fn survey_sample(cfg: &RegisterConfig, index: u64, settings: &SurveySettings) -> Result<Sample> {
    let r = sample_disorder(cfg, index)?;
    let i = settings.initial_state.resolve(&r)?;
    let s = diagonalize_sector_of(&r, i)?;
    let delta_e2 = second_moment(&r);
    let de = delta_e2.sqrt();
    if de == 0.0 {
        return Err(Error::Domain { model: "critical-time survey", reason: "all couplings vanish".into() });
    }
    let grid = geomspace(1e-2 / de, 1e2 / de, settings.grid_points);
    let traj = evolve(&s, i, &grid, EvolveOptions::default())?;
    let traj = densify_near_crossing(&s, traj, settings.refine_points, EvolveOptions::default())?;
    let weights = s.weights_of(i)?;
    let pairs = s.eigenvalues().iter().copied().zip(weights).collect();
    let strength = StrengthFunction::from_pairs(Some(i), pairs, de / settings.bins_per_delta_e)?;
    Ok(Sample { tc: measure_critical_time(&traj), strength, delta_e2 })
}
