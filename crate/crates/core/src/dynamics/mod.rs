//! Exact time evolution of a basis state through the eigen-decomposition,
//! component statistics, and the closed-form models they are compared with.

mod analytic;
mod survey;

pub use analytic::{
    analytic_survival, critical_time, critical_time_from_lifetime, entropy_from_survival, melting_survival,
    small_time_entropy, AnalyticModelParams, CriticalTimeMode, EntropyEstimate, SurvivalModel,
};
pub use survey::{critical_time_survey, CriticalTimePoint, SurveySettings};

use faer::Mat;
use serde::Serialize;

use crate::entropy::{participation, shannon_bits};
use crate::error::{Error, Result};
use crate::register::{BasisState, DisorderRealization};
use crate::spectral::Spectrum;
use crate::stats::{first_crossing, geomspace, linspace};

/// Default cap on stored `W_f(t)` values (times x basis size), 512 MiB of f64.
pub const DEFAULT_COMPONENT_BUDGET: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvolveOptions {
    pub store_components: bool,
    pub component_budget: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { store_components: false, component_budget: DEFAULT_COMPONENT_BUDGET }
    }
}

impl EvolveOptions {
    pub fn with_components() -> Self {
        Self { store_components: true, ..Self::default() }
    }
}

/// Observables of `Ψ(t) = e^{-iHt}|i⟩` on a time grid (`ħ = 1`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial_state: BasisState,
    pub times: Vec<f64>,
    /// `W_i(t)`.
    pub survival: Vec<f64>,
    /// `S(t) = -Σ_f W_f log2 W_f`.
    pub entropy_bits: Vec<f64>,
    /// `(Σ_f W_f²)^-1`.
    pub participation: Vec<f64>,
    /// Basis the component vectors refer to.
    pub basis: Vec<BasisState>,
    /// `W_f(t)` per time, when stored.
    pub components: Option<Vec<Vec<f64>>>,
    /// Storage was requested but exceeded the budget.
    pub components_dropped: bool,
}

/// `(t, W_i, S, N_p, components)` at one time.
type TrajectoryRow = (f64, f64, f64, f64, Option<Vec<f64>>);

impl Trajectory {
    pub fn critical_time(&self) -> Option<f64> {
        measure_critical_time(self)
    }

    /// Merges another trajectory of the same initial state, keeping times sorted.
    pub fn merge(self, other: Trajectory) -> Trajectory {
        let keep = self.components.is_some() && other.components.is_some();
        let mut rows: Vec<TrajectoryRow> = Vec::new();
        for t in [self.clone(), other] {
            let mut comps = t.components.map(|c| c.into_iter().map(Some).collect::<Vec<_>>());
            for k in 0..t.times.len() {
                let c = comps.as_mut().and_then(|c| c[k].take());
                rows.push((t.times[k], t.survival[k], t.entropy_bits[k], t.participation[k], c));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows.dedup_by(|a, b| a.0 == b.0);
        let mut out = Trajectory {
            initial_state: self.initial_state,
            times: Vec::with_capacity(rows.len()),
            survival: Vec::with_capacity(rows.len()),
            entropy_bits: Vec::with_capacity(rows.len()),
            participation: Vec::with_capacity(rows.len()),
            basis: self.basis,
            components: keep.then(Vec::new),
            components_dropped: self.components_dropped,
        };
        for (t, w, s, p, c) in rows {
            out.times.push(t);
            out.survival.push(w);
            out.entropy_bits.push(s);
            out.participation.push(p);
            if let (Some(all), Some(c)) = (out.components.as_mut(), c) {
                all.push(c);
            }
        }
        out
    }
}

fn check_times(times: &[f64], allow_negative: bool) -> Result<()> {
    match times.iter().find(|t| !t.is_finite() || (!allow_negative && **t < 0.0)) {
        Some(t) => Err(Error::InvalidArgument(format!("invalid time {t}"))),
        None => Ok(()),
    }
}

/// Evolves `i` through the spectral decomposition:
/// `W_f(t) = |Σ_k C_i^(k) C_f^(k) e^{-iE^(k)t}|²`, for every `f` in the
/// spectrum's basis. At `t = 0` the state is `|i⟩` exactly.
pub fn evolve(s: &Spectrum, i: BasisState, times: &[f64], opts: EvolveOptions) -> Result<Trajectory> {
    check_times(times, false)?;
    let row = s.require_index(i)?;
    let d = s.dim();
    let amps: Vec<f64> = (0..d).map(|k| s.coefficient(row, k)).collect();
    let e_ref: f64 = amps.iter().zip(s.eigenvalues()).map(|(a, e)| a * a * e).sum();
    let phases: Vec<f64> = s.eigenvalues().iter().map(|e| e - e_ref).collect();

    let store = opts.store_components && times.len().saturating_mul(d) <= opts.component_budget;
    let mut traj = Trajectory {
        initial_state: i,
        times: times.to_vec(),
        survival: survival_probability(s, i, times)?,
        entropy_bits: Vec::with_capacity(times.len()),
        participation: Vec::with_capacity(times.len()),
        basis: s.basis().to_vec(),
        components: store.then(|| Vec::with_capacity(times.len())),
        components_dropped: opts.store_components && !store,
    };

    const CHUNK: usize = 64;
    let mut re = Mat::<f64>::zeros(d, CHUNK);
    let mut im = Mat::<f64>::zeros(d, CHUNK);
    let mut out_re = Mat::<f64>::zeros(d, CHUNK);
    let mut out_im = Mat::<f64>::zeros(d, CHUNK);
    let mut w = vec![0.0; d];
    for chunk in times.chunks(CHUNK) {
        let b = chunk.len();
        for (c, &t) in chunk.iter().enumerate() {
            for k in 0..d {
                let (sin, cos) = (phases[k] * t).sin_cos();
                re[(k, c)] = amps[k] * cos;
                im[(k, c)] = -amps[k] * sin;
            }
        }
        for (src, dst) in [(&re, &mut out_re), (&im, &mut out_im)] {
            faer::linalg::matmul::matmul(
                dst.as_mut().subcols_mut(0, b),
                faer::Accum::Replace,
                s.vectors().as_ref(),
                src.as_ref().subcols(0, b),
                1.0,
                faer::Par::Seq,
            );
        }
        for (c, &t) in chunk.iter().enumerate() {
            if t == 0.0 {
                w.iter_mut().for_each(|x| *x = 0.0);
                w[row] = 1.0;
            } else {
                for (f, x) in w.iter_mut().enumerate() {
                    *x = out_re[(f, c)].powi(2) + out_im[(f, c)].powi(2);
                }
            }
            traj.entropy_bits.push(shannon_bits(w.iter().copied()));
            traj.participation.push(participation(w.iter().copied()));
            if let Some(all) = traj.components.as_mut() {
                all.push(w.clone());
            }
        }
    }
    Ok(traj)
}

/// `W_i(t) = |Σ_k |C_i^(k)|² e^{-iE^(k)t}|²`. Negative times are allowed.
pub fn survival_probability(s: &Spectrum, i: BasisState, times: &[f64]) -> Result<Vec<f64>> {
    check_times(times, true)?;
    let weights = s.weights_of(i)?;
    let e_ref: f64 = weights.iter().zip(s.eigenvalues()).map(|(w, e)| w * e).sum();
    Ok(times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return 1.0;
            }
            let (mut re, mut im) = (0.0, 0.0);
            for (w, e) in weights.iter().zip(s.eigenvalues()) {
                let (sin, cos) = ((e - e_ref) * t).sin_cos();
                re += w * cos;
                im -= w * sin;
            }
            re * re + im * im
        })
        .collect())
}

/// Recomputes `S(t)` from the stored components.
pub fn entropy_trajectory(traj: &Trajectory) -> Result<Vec<f64>> {
    let comps = traj.components.as_ref().ok_or(Error::ComponentsUnavailable)?;
    Ok(comps.iter().map(|w| shannon_bits(w.iter().copied())).collect())
}

/// First time `S(t)` reaches one bit, linearly interpolated; `None` when the
/// entropy stays below one bit on the whole grid.
pub fn measure_critical_time(traj: &Trajectory) -> Option<f64> {
    first_crossing(&traj.times, &traj.entropy_bits, 1.0)
}

/// Geometric grid from `10⁻³/ΔE` to `10³/Γ`.
pub fn default_time_grid(delta_e: f64, gamma: f64, points: usize) -> Vec<f64> {
    let start = 1e-3 / delta_e;
    let stop = if gamma > 0.0 { 1e3 / gamma } else { 1e3 / delta_e };
    geomspace(start, stop.max(start), points)
}

/// Start of a window in which the oscillating cross terms of `W_f(t)` have
/// averaged out: the later of `10³/Γ` and `10²` over the smallest level gap.
pub fn equilibration_time(s: &Spectrum, gamma: f64) -> f64 {
    let gap = s.eigenvalues().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let by_width = if gamma > 0.0 { 1e3 / gamma } else { 0.0 };
    let by_gap = if gap > 0.0 && gap.is_finite() { 1e2 / gap } else { 0.0 };
    by_width.max(by_gap)
}

/// Adds `extra` evenly spaced times inside the grid interval where `S(t)`
/// first crosses one bit. Returns the trajectory unchanged without a crossing.
pub fn densify_near_crossing(s: &Spectrum, traj: Trajectory, extra: usize, opts: EvolveOptions) -> Result<Trajectory> {
    let Some(k) = traj.entropy_bits.iter().position(|v| *v >= 1.0) else {
        return Ok(traj);
    };
    if k == 0 || extra == 0 {
        return Ok(traj);
    }
    let (a, b) = (traj.times[k - 1], traj.times[k]);
    let inner: Vec<f64> = linspace(a, b, extra + 2)[1..=extra].to_vec();
    let more = evolve(s, traj.initial_state, &inner, opts)?;
    Ok(traj.merge(more))
}

/// `W_f^s = Σ_k |C_i^(k)|² |C_f^(k)|²` for every `f` in the basis.
pub fn stationary_distribution(s: &Spectrum, i: BasisState) -> Result<Vec<f64>> {
    let wi = s.weights_of(i)?;
    let d = s.dim();
    let v = s.vectors();
    Ok((0..d).map(|f| (0..d).map(|k| wi[k] * v[(f, k)].powi(2)).sum()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StationaryComponent {
    pub exact: f64,
    /// `(1/2πρ) Γ_t / ((E_i - E_f)² + Γ_t²/4)` with `Γ_t = 2Γ` and `ρ` the
    /// level density of the spectrum around `(E_i + E_f)/2`.
    pub breit_wigner: Option<f64>,
}

/// Long-time average of `W_f(t)`. States outside the spectrum's basis (the
/// other parity sector) are never populated.
pub fn stationary_component(
    s: &Spectrum,
    i: BasisState,
    f: BasisState,
    gamma: Option<f64>,
) -> Result<StationaryComponent> {
    let wi = s.weights_of(i)?;
    let Ok(wf) = s.weights_of(f) else {
        return Ok(StationaryComponent { exact: 0.0, breit_wigner: None });
    };
    let exact = wi.iter().zip(&wf).map(|(a, b)| a * b).sum();
    let energy = |w: &[f64]| w.iter().zip(s.eigenvalues()).map(|(w, e)| w * e).sum::<f64>();
    let (e_i, e_f) = (energy(&wi), energy(&wf));
    let breit_wigner = gamma.filter(|g| *g > 0.0).and_then(|g| {
        let gt = 2.0 * g;
        let mid = 0.5 * (e_i + e_f);
        let count = s.eigenvalues().iter().filter(|e| (**e - mid).abs() <= gt).count();
        (count > 0).then(|| {
            let rho = count as f64 / (2.0 * gt);
            gt / (2.0 * std::f64::consts::PI * rho * ((e_i - e_f).powi(2) + 0.25 * gt * gt))
        })
    });
    Ok(StationaryComponent { exact, breit_wigner })
}

/// First-order population of a directly coupled state:
/// `|H_if|² / (ω² + Γ²/4) · |e^{(iω - Γ/2)t} - 1|²` with `ω = E_f - E_i`.
pub fn perturbative_component(
    r: &DisorderRealization,
    i: BasisState,
    f: BasisState,
    gamma: f64,
    t: f64,
) -> Result<f64> {
    let h_if = r.off_diagonal(i, f).ok_or(Error::NotCoupled { i, f })?;
    let omega = r.diagonal_energy(f) - r.diagonal_energy(i);
    let denom = omega * omega + 0.25 * gamma * gamma;
    if denom == 0.0 {
        return Ok(h_if * h_if * t * t);
    }
    let (a, b) = (-0.5 * gamma * t, omega * t);
    let re = a.exp_m1() * b.cos() - 2.0 * (0.5 * b).sin().powi(2);
    let im = a.exp() * b.sin();
    Ok(h_if * h_if * (re * re + im * im) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::{build_hamiltonian, sample_disorder, RegisterConfig, Topology};
    use crate::spectral::diagonalize;
    use std::f64::consts::PI;

    fn pair_spectrum(j: f64) -> Spectrum {
        let cfg = RegisterConfig::new(2, Topology::Chain, 0.0, j);
        let r = DisorderRealization::from_parts(cfg, vec![0.0, 0.0], vec![j]).unwrap();
        diagonalize(&build_hamiltonian(&r).unwrap()).unwrap()
    }

    #[test]
    fn initial_condition_is_exact() {
        let cfg = RegisterConfig::new(6, Topology::Lattice, 1.0, 0.4).with_seed(1);
        let r = sample_disorder(&cfg, 0).unwrap();
        let s = diagonalize(&build_hamiltonian(&r).unwrap()).unwrap();
        let i = BasisState(0b101010);
        let traj = evolve(&s, i, &[0.0, 0.5], EvolveOptions::with_components()).unwrap();
        assert_eq!(traj.survival[0], 1.0);
        assert_eq!(traj.entropy_bits[0], 0.0);
        let c0 = &traj.components.as_ref().unwrap()[0];
        assert_eq!(c0.iter().filter(|w| **w != 0.0).count(), 1);
    }

    #[test]
    fn pair_rabi_oscillation() {
        let s = pair_spectrum(0.5);
        let t = PI / 2.0;
        let traj = evolve(&s, BasisState(0), &[t], EvolveOptions::with_components()).unwrap();
        assert!((traj.survival[0] - 0.5).abs() < 1e-14);
        let w = &traj.components.as_ref().unwrap()[0];
        assert!((w[s.index_of(BasisState(0b11)).unwrap()] - 0.5).abs() < 1e-14);
        assert!((traj.entropy_bits[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_never_decays() {
        let cfg = RegisterConfig::new(5, Topology::Chain, 1.0, 0.0);
        let r = sample_disorder(&cfg, 0).unwrap();
        let s = diagonalize(&build_hamiltonian(&r).unwrap()).unwrap();
        let w = survival_probability(&s, BasisState(0b10101), &[0.3, 10.0, 1e4]).unwrap();
        assert!(w.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn survival_agrees_with_component() {
        let cfg = RegisterConfig::new(6, Topology::Chain, 1.0, 0.5).with_seed(2);
        let r = sample_disorder(&cfg, 1).unwrap();
        let s = diagonalize(&build_hamiltonian(&r).unwrap()).unwrap();
        let i = BasisState(0b010101);
        let times = geomspace(0.01, 100.0, 30);
        let traj = evolve(&s, i, &times, EvolveOptions::with_components()).unwrap();
        let row = s.index_of(i).unwrap();
        for (k, comps) in traj.components.as_ref().unwrap().iter().enumerate() {
            assert!((comps[row] - traj.survival[k]).abs() < 1e-12);
        }
        assert_eq!(entropy_trajectory(&traj).unwrap(), traj.entropy_bits);
    }

    #[test]
    fn entropy_requires_components() {
        let s = pair_spectrum(0.5);
        let traj = evolve(&s, BasisState(0), &[1.0], EvolveOptions::default()).unwrap();
        assert_eq!(entropy_trajectory(&traj), Err(Error::ComponentsUnavailable));
        let tiny = EvolveOptions { store_components: true, component_budget: 3 };
        let traj = evolve(&s, BasisState(0), &[1.0, 2.0], tiny).unwrap();
        assert!(traj.components.is_none() && traj.components_dropped);
    }

    #[test]
    fn outside_basis_and_bad_times_rejected() {
        let cfg = RegisterConfig::new(4, Topology::Chain, 1.0, 0.2);
        let r = sample_disorder(&cfg, 0).unwrap();
        let s = crate::spectral::diagonalize_sector_of(&r, BasisState(0)).unwrap();
        assert!(matches!(
            evolve(&s, BasisState(1), &[1.0], EvolveOptions::default()),
            Err(Error::StateOutsideBasis { .. })
        ));
        assert!(evolve(&s, BasisState(0), &[-1.0], EvolveOptions::default()).is_err());
        assert!(evolve(&s, BasisState(0), &[f64::NAN], EvolveOptions::default()).is_err());
    }

    #[test]
    fn perturbative_limits() {
        let cfg = RegisterConfig::new(3, Topology::Chain, 1.0, 0.1);
        let r = DisorderRealization::from_parts(cfg, vec![0.6, 1.0, 1.4], vec![0.08, -0.05]).unwrap();
        let (i, f) = (BasisState(0b001), BasisState(0b010));
        assert_eq!(perturbative_component(&r, i, f, 0.1, 0.0).unwrap(), 0.0);
        let omega = r.diagonal_energy(f) - r.diagonal_energy(i);
        let t = 0.05 / omega.abs().max(0.1);
        let ratio = perturbative_component(&r, i, f, 0.1, t).unwrap() / (0.08f64.powi(2) * t * t);
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
        assert!(matches!(perturbative_component(&r, i, BasisState(0b100), 0.1, 1.0), Err(Error::NotCoupled { .. })));
    }

    #[test]
    fn stationary_basics() {
        let cfg = RegisterConfig::new(4, Topology::Chain, 1.0, 0.0);
        let r = sample_disorder(&cfg, 0).unwrap();
        let s = diagonalize(&build_hamiltonian(&r).unwrap()).unwrap();
        let i = BasisState(0b0110);
        for f in 0..16u64 {
            let w = stationary_component(&s, i, BasisState(f), None).unwrap().exact;
            let expect = if f == i.0 { 1.0 } else { 0.0 };
            assert!((w - expect).abs() < 1e-12);
        }
        let cfg = RegisterConfig::new(6, Topology::Lattice, 1.0, 0.4).with_seed(8);
        let r = sample_disorder(&cfg, 0).unwrap();
        let s = crate::spectral::diagonalize_sector_of(&r, BasisState(0b010101)).unwrap();
        let dist = stationary_distribution(&s, BasisState(0b010101)).unwrap();
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let other = stationary_component(&s, BasisState(0b010101), BasisState(0b11), Some(0.2)).unwrap();
        assert_eq!(other.exact, 0.0);
    }

    #[test]
    fn densify_adds_points_in_bracket() {
        let cfg = RegisterConfig::new(6, Topology::Lattice, 1.0, 0.5).with_seed(3);
        let r = sample_disorder(&cfg, 0).unwrap();
        let i = BasisState(0b010101);
        let s = crate::spectral::diagonalize_sector_of(&r, i).unwrap();
        let grid = geomspace(0.01, 100.0, 40);
        let coarse = evolve(&s, i, &grid, EvolveOptions::default()).unwrap();
        let t0 = coarse.critical_time().expect("crossing");
        let fine = densify_near_crossing(&s, coarse.clone(), 20, EvolveOptions::default()).unwrap();
        assert_eq!(fine.times.len(), 60);
        assert!(fine.times.windows(2).all(|w| w[0] < w[1]));
        let t1 = fine.critical_time().unwrap();
        assert!((t1 - t0).abs() < 0.2 * t0);
    }
}
