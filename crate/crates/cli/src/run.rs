use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use spinreg::chaos::{central_window, level_spacing_ratio};
use spinreg::dynamics::stationary_distribution;
use spinreg::spectral::{eigenstate_profile, BreitWignerFit};
use spinreg::{
    chaos_boundary_scan, critical_time_survey, diagonalize_by_parity, diagonalize_sector_of, evolve, sample_disorder,
    strength_function, EvolveOptions, MeanError, StrengthFunction, SurveySettings,
};

use crate::manifest::{Command, RunManifest};

pub const VERSION: &str = concat!("spinreg ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid manifest:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("cannot build a pool of {threads} threads: {message}")]
    ThreadPool { threads: usize, message: String },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationFailure {
    /// Realization index; `None` when a whole scan failed.
    pub index: Option<u64>,
    pub message: String,
}

/// Ensemble means of the run's observables plus bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSummary {
    pub version: String,
    pub command: Command,
    pub master_seed: u64,
    pub realizations: usize,
    pub completed: usize,
    /// Some realizations (or the whole scan) failed.
    pub partial: bool,
    /// The manifest as run, without `threads` and `output_dir`.
    pub manifest: serde_json::Value,
    pub observables: BTreeMap<String, MeanError>,
    pub failures: Vec<RealizationFailure>,
    pub details: serde_json::Value,
    /// Files written to the output directory.
    pub files: Vec<String>,
}

/// Runs the manifest's command over its disorder ensemble and writes the
/// data files plus `summary.json` to `output_dir`.
pub fn run_ensemble(manifest: &RunManifest) -> Result<EnsembleSummary, RunError> {
    let problems = manifest.problems();
    if !problems.is_empty() {
        return Err(RunError::Invalid(problems));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = manifest.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::ThreadPool { threads: manifest.threads.unwrap_or(0), message: e.to_string() })?;
    let outcome = pool.install(|| match manifest.command {
        Command::Spectrum => run_spectrum(manifest),
        Command::Strength => run_strength(manifest),
        Command::Evolve => run_evolve(manifest),
        Command::TcScan => run_tc_scan(manifest),
        Command::JcScan => run_jc_scan(manifest),
    });

    let dir = &manifest.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
    let mut files = Vec::new();
    for table in &outcome.tables {
        write_atomic(dir, &table.name, &table.to_bytes(dir)?)?;
        files.push(table.name.clone());
    }
    files.push("summary.json".to_string());

    let mut echo = serde_json::to_value(manifest).expect("manifest is serializable");
    if let Some(map) = echo.as_object_mut() {
        map.remove("threads");
        map.remove("output_dir");
    }
    let summary = EnsembleSummary {
        version: VERSION.to_string(),
        command: manifest.command,
        master_seed: manifest.register.master_seed,
        realizations: manifest.realizations,
        completed: outcome.completed,
        partial: !outcome.failures.is_empty(),
        manifest: echo,
        observables: outcome.observables,
        failures: outcome.failures,
        details: outcome.details,
        files,
    };
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary is serializable");
    json.push(b'\n');
    write_atomic(dir, "summary.json", &json)?;
    Ok(summary)
}

/// Seventeen significant digits; empty for missing values.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), RunError> {
    let path = dir.join(name);
    let io = |source| RunError::Io { path: path.clone(), source };
    let mut tmp = tempfile::Builder::new().prefix(&format!(".{name}.")).tempfile_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(())
}

struct Table {
    name: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    fn to_bytes(&self, dir: &Path) -> Result<Vec<u8>, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| RunError::Io { path: dir.join(&self.name), source: e.into() };
        w.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            w.write_record(row).map_err(err)?;
        }
        w.into_inner().map_err(|e| RunError::Io { path: dir.join(&self.name), source: e.into_error() })
    }
}

#[derive(Default)]
struct Outcome {
    tables: Vec<Table>,
    observables: BTreeMap<String, MeanError>,
    failures: Vec<RealizationFailure>,
    completed: usize,
    details: serde_json::Value,
}

impl Outcome {
    fn observe(&mut self, name: &str, values: &[f64]) {
        self.observables.insert(name.to_string(), MeanError::of(values));
    }

    fn scan_failed(manifest: &RunManifest, e: spinreg::Error) -> Self {
        Outcome {
            failures: vec![RealizationFailure { index: None, message: e.to_string() }],
            details: json!({ "command": manifest.command.name() }),
            ..Outcome::default()
        }
    }
}

/// Runs `work` for every realization in parallel. Results keep realization
/// order; failures are split off with their index.
fn per_realization<T: Send>(
    manifest: &RunManifest,
    work: impl Fn(u64) -> spinreg::Result<T> + Sync,
) -> (Vec<(u64, T)>, Vec<RealizationFailure>) {
    let results: Vec<(u64, spinreg::Result<T>)> =
        (0..manifest.realizations as u64).into_par_iter().map(|r| (r, work(r))).collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(v) => ok.push((r, v)),
            Err(e) => failures.push(RealizationFailure { index: Some(r), message: e.to_string() }),
        }
    }
    (ok, failures)
}

struct SpectrumRow {
    energy: f64,
    entropy_bits: f64,
    participation: f64,
    parity: &'static str,
}

struct SpectrumSample {
    rows: Vec<SpectrumRow>,
    mean_entropy: f64,
    central_entropy: f64,
    mean_participation: f64,
    ratio: Option<f64>,
}

fn run_spectrum(manifest: &RunManifest) -> Outcome {
    let window = manifest.energy_window;
    let (samples, failures) = per_realization(manifest, |r| {
        let realization = sample_disorder(&manifest.register, r)?;
        let mut rows = Vec::new();
        let mut central = Vec::new();
        let mut ratios = Vec::new();
        for s in diagonalize_by_parity(&realization)? {
            let parity = s.parity().map(|p| p.label()).unwrap_or("");
            let range = central_window(s.dim(), window);
            for k in 0..s.dim() {
                let p = eigenstate_profile(&s, k)?;
                if range.contains(&k) {
                    central.push(p.entropy_bits);
                }
                rows.push(SpectrumRow {
                    energy: p.energy,
                    entropy_bits: p.entropy_bits,
                    participation: p.participation,
                    parity,
                });
            }
            ratios.extend(level_spacing_ratio(&s.eigenvalues()[range]));
        }
        rows.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let len = rows.len() as f64;
        Ok(SpectrumSample {
            mean_entropy: rows.iter().map(|r| r.entropy_bits).sum::<f64>() / len,
            mean_participation: rows.iter().map(|r| r.participation).sum::<f64>() / len,
            central_entropy: central.iter().sum::<f64>() / central.len() as f64,
            ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            rows,
        })
    });

    let mut table = Table::new("spectrum.csv", &["realization", "k", "energy", "S_k_bits", "participation", "parity"]);
    for (r, s) in &samples {
        for (k, row) in s.rows.iter().enumerate() {
            table.rows.push(vec![
                r.to_string(),
                k.to_string(),
                format_float(row.energy),
                format_float(row.entropy_bits),
                format_float(row.participation),
                row.parity.to_string(),
            ]);
        }
    }
    let mut out = Outcome { completed: samples.len(), failures, ..Outcome::default() };
    let pick = |f: fn(&SpectrumSample) -> Option<f64>| samples.iter().filter_map(|(_, s)| f(s)).collect::<Vec<_>>();
    out.observe("eigenstate_entropy_bits", &pick(|s| Some(s.mean_entropy)));
    out.observe("central_eigenstate_entropy_bits", &pick(|s| Some(s.central_entropy)));
    out.observe("participation", &pick(|s| Some(s.mean_participation)));
    out.observe("spacing_ratio", &pick(|s| s.ratio));
    out.details = json!({ "energy_window": window });
    out.tables.push(table);
    out
}

fn fit_row(r: Option<u64>, fit: Option<&BreitWignerFit>) -> Vec<String> {
    vec![
        r.map(|r| r.to_string()).unwrap_or_else(|| "pooled".into()),
        format_opt(fit.map(|f| f.gamma)),
        format_opt(fit.map(|f| f.shift)),
        format_opt(fit.map(|f| f.residual)),
        fit.map(|f| f.bins_used.to_string()).unwrap_or_default(),
    ]
}

fn run_strength(manifest: &RunManifest) -> Outcome {
    let width = manifest.strength_bin_width();
    let (samples, mut failures) = per_realization(manifest, |r| {
        let realization = sample_disorder(&manifest.register, r)?;
        let i = manifest.initial_state.resolve(&realization)?;
        let s = diagonalize_sector_of(&realization, i)?;
        Ok((i, strength_function(&s, i, width)?))
    });

    let mut pairs = Table::new("strength.csv", &["realization", "initial_state", "energy", "weight"]);
    let mut fits = Table::new("strength_fit.csv", &["realization", "gamma", "shift", "residual", "bins_used"]);
    for (r, (i, sf)) in &samples {
        for (e, w) in &sf.pairs {
            pairs.rows.push(vec![r.to_string(), i.bits().to_string(), format_float(*e), format_float(*w)]);
        }
        fits.rows.push(fit_row(Some(*r), sf.fit.as_ref()));
    }
    let parts: Vec<StrengthFunction> = samples.iter().map(|(_, (_, sf))| sf.clone()).collect();
    let mut pooled_table = Table::new("strength_pooled.csv", &["energy", "density"]);
    let mut pooled_fit = None;
    if !parts.is_empty() {
        match StrengthFunction::pooled(&parts, width) {
            Ok(p) => {
                for b in 0..p.bins.values.len() {
                    pooled_table.rows.push(vec![format_float(p.bins.center(b)), format_float(p.bins.values[b])]);
                }
                fits.rows.push(fit_row(None, p.fit.as_ref()));
                pooled_fit = p.fit;
            }
            Err(e) => {
                failures.push(RealizationFailure { index: None, message: format!("pooled strength function: {e}") })
            }
        }
    }

    let mut out = Outcome { completed: samples.len(), failures, ..Outcome::default() };
    let sfs: Vec<&StrengthFunction> = samples.iter().map(|(_, (_, sf))| sf).collect();
    out.observe("gamma", &sfs.iter().filter_map(|s| s.fit.map(|f| f.gamma)).collect::<Vec<_>>());
    out.observe("shift", &sfs.iter().filter_map(|s| s.fit.map(|f| f.shift)).collect::<Vec<_>>());
    out.observe("first_moment", &sfs.iter().map(|s| s.first_moment).collect::<Vec<_>>());
    out.observe("second_moment", &sfs.iter().map(|s| s.second_moment).collect::<Vec<_>>());
    out.details = json!({
        "bin_width": width,
        "failed_fits": sfs.iter().filter(|s| s.fit.is_none()).count(),
        "pooled_fit": pooled_fit,
    });
    out.tables.extend([pairs, fits, pooled_table]);
    out
}

struct EvolveSample {
    initial_state: u64,
    times: Vec<f64>,
    survival: Vec<f64>,
    entropy: Vec<f64>,
    participation: Vec<f64>,
    /// `(state bits, W_f(t) per time)`.
    components: Vec<(u64, Vec<f64>)>,
    components_dropped: bool,
    critical_time: Option<f64>,
}

fn run_evolve(manifest: &RunManifest) -> Outcome {
    let times = manifest.times();
    let opts = EvolveOptions { store_components: manifest.store_components, ..EvolveOptions::default() };
    let (samples, failures) = per_realization(manifest, |r| {
        let realization = sample_disorder(&manifest.register, r)?;
        let i = manifest.initial_state.resolve(&realization)?;
        let s = diagonalize_sector_of(&realization, i)?;
        let traj = evolve(&s, i, &times, opts)?;
        let mut components = Vec::new();
        if let Some(per_time) = &traj.components {
            let mut order: Vec<usize> = (0..s.dim()).collect();
            if manifest.top_components > 0 {
                let stationary = stationary_distribution(&s, i)?;
                order.sort_by(|a, b| stationary[*b].total_cmp(&stationary[*a]).then(a.cmp(b)));
                order.truncate(manifest.top_components);
            }
            for f in order {
                components.push((traj.basis[f].bits(), per_time.iter().map(|w| w[f]).collect()));
            }
        }
        Ok(EvolveSample {
            initial_state: i.bits(),
            critical_time: traj.critical_time(),
            components_dropped: traj.components_dropped,
            times: traj.times,
            survival: traj.survival,
            entropy: traj.entropy_bits,
            participation: traj.participation,
            components,
        })
    });

    let mut table = Table::new("evolve.csv", &["realization", "time", "W_i", "S_bits", "Np_t"]);
    let mut comp = Table::new("components.csv", &["realization", "time", "state", "W_f"]);
    for (r, s) in &samples {
        for t in 0..s.times.len() {
            table.rows.push(vec![
                r.to_string(),
                format_float(s.times[t]),
                format_float(s.survival[t]),
                format_float(s.entropy[t]),
                format_float(s.participation[t]),
            ]);
        }
        for (state, values) in &s.components {
            for (t, w) in s.times.iter().zip(values) {
                comp.rows.push(vec![r.to_string(), format_float(*t), state.to_string(), format_float(*w)]);
            }
        }
    }

    let mut out = Outcome { completed: samples.len(), failures, ..Outcome::default() };
    let last = |v: &Vec<f64>| v.last().copied();
    out.observe("critical_time", &samples.iter().filter_map(|(_, s)| s.critical_time).collect::<Vec<_>>());
    out.observe("final_W_i", &samples.iter().filter_map(|(_, s)| last(&s.survival)).collect::<Vec<_>>());
    out.observe("final_S_bits", &samples.iter().filter_map(|(_, s)| last(&s.entropy)).collect::<Vec<_>>());
    out.observe("final_Np_t", &samples.iter().filter_map(|(_, s)| last(&s.participation)).collect::<Vec<_>>());
    out.details = json!({
        "times": times.len(),
        "initial_states": samples.iter().map(|(r, s)| json!({ "realization": r, "bits": s.initial_state })).collect::<Vec<_>>(),
        "missing_crossings": samples.iter().filter(|(_, s)| s.critical_time.is_none()).count(),
        "components_dropped": samples.iter().filter(|(_, s)| s.components_dropped).map(|(r, _)| *r).collect::<Vec<_>>(),
    });
    out.tables.push(table);
    if manifest.store_components {
        out.tables.push(comp);
    }
    out
}

fn run_tc_scan(manifest: &RunManifest) -> Outcome {
    let settings = SurveySettings {
        realizations: manifest.realizations,
        initial_state: manifest.initial_state,
        ..SurveySettings::default()
    };
    let points = match critical_time_survey(&manifest.register, &manifest.sizes, &settings) {
        Ok(p) => p,
        Err(e) => return Outcome::scan_failed(manifest, e),
    };
    let mut table = Table::new("tc_scan.csv", &["n", "tc_measured", "tc_eq24", "tc_eq25", "gamma_fit", "deltaE2"]);
    let mut out = Outcome { completed: manifest.realizations, ..Outcome::default() };
    for p in &points {
        table.rows.push(vec![
            p.n.to_string(),
            format_float(p.tc_measured.mean),
            format_float(p.tc_predicted),
            format_float(p.tc_simple),
            format_float(p.gamma_fit),
            format_float(p.delta_e2),
        ]);
        out.observables.insert(format!("tc_measured[n={}]", p.n), p.tc_measured);
    }
    out.details = json!({ "sizes": points });
    out.tables.push(table);
    out
}

fn run_jc_scan(manifest: &RunManifest) -> Outcome {
    let grid = manifest.couplings();
    let scan = match chaos_boundary_scan(&manifest.register, &grid, manifest.realizations, manifest.energy_window) {
        Ok(s) => s,
        Err(e) => return Outcome::scan_failed(manifest, e),
    };
    let mut table = Table::new("jc_scan.csv", &["J", "mean_S_k", "stderr", "mean_ratio", "stderr_ratio"]);
    let mut out = Outcome { completed: manifest.realizations, ..Outcome::default() };
    for (g, j) in scan.j_grid.iter().enumerate() {
        let (s, q) = (scan.mean_eigenstate_entropy[g], scan.mean_ratio[g]);
        table.rows.push(vec![
            format_float(*j),
            format_float(s.mean),
            format_opt(s.stderr),
            format_float(q.mean),
            format_opt(q.stderr),
        ]);
        out.observables.insert(format!("eigenstate_entropy_bits[J={}]", format_float(*j)), s);
        out.observables.insert(format!("spacing_ratio[J={}]", format_float(*j)), q);
    }
    out.details = json!({
        "j_c_entropy": scan.j_c_entropy,
        "j_c_ratio": scan.j_c_ratio,
        "energy_window": scan.energy_window,
    });
    out.tables.push(table);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinreg::{RegisterConfig, Topology};

    #[test]
    fn failures_keep_their_index() {
        let m = RunManifest {
            realizations: 7,
            ..RunManifest::new(Command::Evolve, RegisterConfig::new(4, Topology::Chain, 1.0, 0.1))
        };
        let (ok, failures) = per_realization(&m, |r| {
            if r % 3 == 1 {
                Err(spinreg::Error::InvalidArgument(format!("bad {r}")))
            } else {
                Ok(r * 10)
            }
        });
        assert_eq!(ok, vec![(0, 0), (2, 20), (3, 30), (5, 50), (6, 60)]);
        let idx: Vec<_> = failures.iter().map(|f| f.index).collect();
        assert_eq!(idx, vec![Some(1), Some(4)]);
        assert!(failures[1].message.contains("bad 4"));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_opt(None), "");
    }
}
