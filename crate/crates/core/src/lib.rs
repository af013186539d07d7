//! Exact simulation of a disordered qubit register with transverse nearest-
//! neighbor couplings,
//!
//! ```text
//! H = Σ_i ε_i σᶻ_i + Σ_(i,j) J_ij σˣ_i σˣ_j        (ħ = 1)
//! ```
//!
//! Modules, bottom up:
//!
//! * [`register`]: configuration, disorder sampling, basis and Hamiltonian.
//! * [`spectral`]: dense diagonalization, strength functions, widths.
//! * [`dynamics`]: time evolution, entropy growth, closed-form decay models.
//! * [`chaos`]: level-spacing statistics and the chaos-boundary scan.
//!
//! ```
//! use spinreg::{build_hamiltonian, diagonalize, evolve, sample_disorder, BasisState, EvolveOptions, RegisterConfig, Topology};
//!
//! let cfg = RegisterConfig::new(4, Topology::Chain, 0.0, 0.3);
//! let r = sample_disorder(&cfg, 0).unwrap();
//! let s = diagonalize(&build_hamiltonian(&r).unwrap()).unwrap();
//! let traj = evolve(&s, BasisState(0), &[0.0, 1.0], EvolveOptions::default()).unwrap();
//! assert_eq!(traj.survival[0], 1.0);
//! ```

pub mod chaos;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod register;
pub mod spectral;
pub mod stats;

pub use faer;

pub use chaos::{chaos_boundary_scan, spacing_statistics, unfold, ChaosScanResult, Crossing, SpacingStats};
pub use dynamics::{
    analytic_survival, critical_time, critical_time_survey, evolve, stationary_component, AnalyticModelParams,
    CriticalTimeMode, CriticalTimePoint, EvolveOptions, SurveySettings, SurvivalModel, Trajectory,
};
pub use error::{Error, Result};
pub use register::{
    build_hamiltonian, build_sector, sample_disorder, second_moment, BasisState, CouplingLaw, DisorderRealization,
    FieldLaw, Hamiltonian, InitialState, Parity, RegisterConfig, Topology,
};
pub use spectral::{
    diagonalize, diagonalize_by_parity, diagonalize_sector_of, strength_function, Spectrum, StrengthFunction,
};
pub use stats::MeanError;
