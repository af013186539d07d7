use serde::Serialize;

use crate::error::{Error, Result};
use crate::register::{second_moment, BasisState, DisorderRealization};

/// Inputs of the closed-form decay and entropy models (`ħ = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticModelParams {
    /// `(ΔE)² = Σ J_ij²`.
    pub delta_e2: f64,
    /// Spreading width `Γ`.
    pub gamma: f64,
    /// Number of principal final components.
    pub n_f: f64,
    /// Number of interacting pairs.
    pub qn: f64,
    /// Unperturbed energy `H_ii` of the initial state.
    pub e_i: f64,
}

impl AnalyticModelParams {
    /// Exact `(ΔE)²`, `qn` and `E_i` from a realization; `n_f` starts at `qn`.
    pub fn from_realization(r: &DisorderRealization, i: BasisState, gamma: f64) -> Self {
        let qn = r.edge_count() as f64;
        Self { delta_e2: second_moment(r), gamma, n_f: qn, qn, e_i: r.diagonal_energy(i) }
    }

    pub fn with_n_f(self, n_f: f64) -> Self {
        Self { n_f, ..self }
    }

    /// `n_f = qn Γ / Δ0`, the count of final states inside the decay width.
    pub fn refined_n_f(&self, delta0: f64) -> f64 {
        self.qn * self.gamma / delta0
    }

    fn check(&self) -> Result<()> {
        let fields = [("delta_e2", self.delta_e2), ("gamma", self.gamma), ("n_f", self.n_f), ("qn", self.qn)];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((name, v)) => Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}"))),
            None => Ok(()),
        }
    }
}

/// Closed-form survival probability models.
#[derive(Clone, Copy, Debug)]
pub enum SurvivalModel<'a> {
    /// `1 - (ΔE)² t²`, clamped at 0.
    SmallTime,
    /// `exp(-(ΔE)² t²)`.
    Gaussian,
    /// `Π cos²(J_ij t)`: exact for zero fields on an acyclic coupling graph.
    ZeroFieldExact(&'a DisorderRealization),
    /// `exp(-Γ t)`.
    Exponential,
    /// `exp(Γ²/(2ΔE²) - sqrt(Γ⁴/(4ΔE⁴) + Γ² t²))`, needs `Γ < ΔE`.
    Interpolated,
}

pub fn analytic_survival(model: SurvivalModel<'_>, params: &AnalyticModelParams, t: f64) -> Result<f64> {
    params.check()?;
    let de2 = params.delta_e2;
    let g = params.gamma;
    Ok(match model {
        SurvivalModel::SmallTime => (1.0 - de2 * t * t).max(0.0),
        SurvivalModel::Gaussian => (-de2 * t * t).exp(),
        SurvivalModel::ZeroFieldExact(r) => {
            if !r.is_acyclic() {
                return Err(Error::Domain { model: "zero-field exact", reason: "coupling graph has a cycle".into() });
            }
            r.couplings.iter().map(|c| (c.value * t).cos().powi(2)).product()
        }
        SurvivalModel::Exponential => (-g * t).exp(),
        SurvivalModel::Interpolated => {
            if g >= de2.sqrt() {
                return Err(Error::Domain {
                    model: "interpolated",
                    reason: format!("needs gamma < delta_e, got gamma = {g}, delta_e = {}", de2.sqrt()),
                });
            }
            let a = g * g / (2.0 * de2);
            // a - sqrt(a² + Γ²t²) written without cancellation.
            let gt2 = (g * t).powi(2);
            (-gt2 / (a + (a * a + gt2).sqrt())).exp()
        }
    })
}

/// Small-time entropy `(ΔE)² t² log2(qn / ((ΔE)² t²))`.
pub fn small_time_entropy(params: &AnalyticModelParams, t: f64) -> f64 {
    let x = params.delta_e2 * t * t;
    if x == 0.0 {
        0.0
    } else {
        x * (params.qn / x).log2()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    /// `-w log2 w - (1 - w) log2((1 - w)/n_f)`.
    pub full: f64,
    /// `(1 - w) log2 n_f`.
    pub shortcut: f64,
}

/// Entropy of a state with survival `w_i` and `1 - w_i` spread evenly over
/// `n_f` components.
pub fn entropy_from_survival(w_i: f64, n_f: f64) -> Result<EntropyEstimate> {
    if !(0.0..=1.0).contains(&w_i) {
        return Err(Error::InvalidArgument(format!("w_i must lie in [0, 1], got {w_i}")));
    }
    if !(n_f >= 2.0) {
        return Err(Error::InvalidArgument(format!("n_f must be >= 2, got {n_f}")));
    }
    let xlog = |p: f64, q: f64| if p > 0.0 { p * q.log2() } else { 0.0 };
    let rest = 1.0 - w_i;
    Ok(EntropyEstimate { full: -xlog(w_i, w_i) - xlog(rest, rest / n_f), shortcut: rest * n_f.log2() })
}

/// Survival at which the log-accuracy entropy reaches one bit: `1 - 1/log2 n_f`.
pub fn melting_survival(n_f: f64) -> f64 {
    1.0 - 1.0 / n_f.log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalTimeMode {
    /// `1/(Γ L) · sqrt(1 + Γ² L/(ΔE)²)` with `L = log2 n_f`.
    Predicted,
    /// `1/(Γ L)`, the `Γ ≪ ΔE` limit.
    PredictedSimple,
}

/// Time at which the entropy reaches one bit. With `n_f = n` these are the
/// `τ0/(n log2 n)` estimates; pass `n_f = qn` for the pair-count form.
pub fn critical_time(params: &AnalyticModelParams, mode: CriticalTimeMode) -> Result<f64> {
    params.check()?;
    let l = params.n_f.log2();
    if !(l > 0.0) {
        return Err(Error::InvalidArgument(format!("n_f must exceed 1, got {}", params.n_f)));
    }
    if params.gamma <= 0.0 {
        return Err(Error::InvalidArgument("gamma must be positive".into()));
    }
    let simple = 1.0 / (params.gamma * l);
    Ok(match mode {
        CriticalTimeMode::PredictedSimple => simple,
        CriticalTimeMode::Predicted => {
            if params.delta_e2 <= 0.0 {
                return Err(Error::InvalidArgument("delta_e2 must be positive".into()));
            }
            simple * (1.0 + params.gamma.powi(2) * l / params.delta_e2).sqrt()
        }
    })
}

/// `τ0 / (n log2 n)` for single-qubit lifetime `τ0 = 1/Γ0`, `Γ0 = Γ/n`.
pub fn critical_time_from_lifetime(tau0: f64, n: f64) -> f64 {
    tau0 / (n * n.log2())
}
