//! Run manifests: a TOML file describing one ensemble run.
//!
//! ```toml
//! command = "evolve"        # spectrum | strength | evolve | tc-scan | jc-scan
//! realizations = 20
//! output_dir = "out/evolve"
//!
//! [register]
//! n = 8
//! topology = "chain"        # chain | ring | lattice | { grid = { width, height } } | { edges = [[0, 1], ...] }
//! delta0 = 1.0
//! j_scale = 0.1
//! ```
//!
//! Every other key is optional; see [`RunManifest`] for defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinreg::register::DEFAULT_MAX_QUBITS;
use spinreg::stats::{geomspace, linspace};
use spinreg::{CouplingLaw, InitialState, RegisterConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Eigenvalues with eigenstate entropy and participation.
    Spectrum,
    /// Strength function pairs and Breit-Wigner fits.
    Strength,
    /// Survival probability, entropy and participation over time.
    Evolve,
    /// Measured and predicted critical time per register size.
    TcScan,
    /// Eigenstate entropy and spacing ratio over a coupling grid.
    JcScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Strength => "strength",
            Command::Evolve => "evolve",
            Command::TcScan => "tc-scan",
            Command::JcScan => "jc-scan",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A grid of times or couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Grid {
    Geometric { start: f64, stop: f64, points: usize },
    Linear { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::Geometric { start, stop, points } => geomspace(*start, *stop, *points),
            Grid::Linear { start, stop, points } => linspace(*start, *stop, *points),
            Grid::Values { values } => values.clone(),
        }
    }

    fn problems(&self, name: &str, strictly_ascending: bool) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Grid::Geometric { start, stop, points } | Grid::Linear { start, stop, points } => {
                let geometric = matches!(self, Grid::Geometric { .. });
                if *points == 0 {
                    out.push(format!("{name}.points must be at least 1"));
                }
                if !(start.is_finite() && stop.is_finite()) {
                    out.push(format!("{name} bounds must be finite"));
                } else if geometric && *start <= 0.0 {
                    out.push(format!("{name}.start must be > 0 for a geometric grid, got {start}"));
                } else if *start < 0.0 {
                    out.push(format!("{name}.start must be >= 0, got {start}"));
                }
                if *points > 1 && !(stop > start) {
                    out.push(format!("{name}.stop ({stop}) must exceed start ({start})"));
                }
            }
            Grid::Values { values } => {
                if values.is_empty() {
                    out.push(format!("{name}.values must not be empty"));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    out.push(format!("{name}.values must be finite and >= 0"));
                }
                let ordered = values.windows(2).all(|w| if strictly_ascending { w[0] < w[1] } else { w[0] <= w[1] });
                if !ordered {
                    out.push(format!("{name}.values must be ascending"));
                }
            }
        }
        out
    }
}

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("spinreg-out")
}

fn default_sizes() -> Vec<usize> {
    vec![8, 10, 12]
}

fn default_window() -> f64 {
    spinreg::chaos::DEFAULT_ENERGY_WINDOW
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

/// A validated description of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: Command,
    /// Disorder realizations (default 1).
    #[serde(default = "one")]
    pub realizations: usize,
    /// Output directory (default `spinreg-out`).
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; unset uses every available core. Never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Keep per-time component vectors (`evolve`).
    #[serde(default, skip_serializing_if = "is_false")]
    pub store_components: bool,
    /// Write `W_f(t)` for the states with the largest stationary weight (`evolve`).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub top_components: usize,
    pub register: RegisterConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    /// Evolution times (`evolve`). Default: 200 geometric points from
    /// `10⁻²/ΔE` to `10²/ΔE` with the ensemble-expected `ΔE`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<Grid>,
    /// Couplings (`jc-scan`). Default: 12 geometric points over `[0.1, 3] Δ0/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_grid: Option<Grid>,
    /// Register sizes (`tc-scan`).
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// Strength-function bin width. Default: `ΔE/20` with the expected `ΔE`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    /// Central fraction of levels used by the spectral statistics.
    #[serde(default = "default_window")]
    pub energy_window: f64,
}

/// Values that replace manifest keys, typically from command-line flags.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<Command>,
    pub output_dir: Option<PathBuf>,
    pub realizations: Option<usize>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub store_components: Option<bool>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid manifest:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

impl ManifestError {
    pub fn problems(&self) -> Vec<String> {
        match self {
            ManifestError::Io { .. } => vec![self.to_string()],
            ManifestError::Invalid(p) => p.clone(),
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "command",
    "realizations",
    "output_dir",
    "threads",
    "store_components",
    "top_components",
    "register",
    "initial_state",
    "time_grid",
    "j_grid",
    "sizes",
    "bin_width",
    "energy_window",
];
const TOP_REQUIRED: &[&str] = &["command", "register"];
const REGISTER_KEYS: &[&str] = &["n", "topology", "delta0", "j_scale", "j_law", "eps_law", "master_seed", "max_qubits"];
const REGISTER_REQUIRED: &[&str] = &["n", "delta0", "j_scale"];

pub fn parse_manifest(path: &Path) -> Result<RunManifest, ManifestError> {
    parse_manifest_with(path, &Overrides::default())
}

pub fn parse_manifest_with(path: &Path, overrides: &Overrides) -> Result<RunManifest, ManifestError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
    parse_manifest_str(&text, overrides)
}

/// Parses and validates manifest text. All schema and value problems are
/// reported together.
pub fn parse_manifest_str(text: &str, overrides: &Overrides) -> Result<RunManifest, ManifestError> {
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| ManifestError::Invalid(vec![e.to_string()]))?;
    apply_overrides(&mut table, overrides)?;

    let mut problems = schema_problems(&table);
    if !problems.is_empty() {
        return Err(ManifestError::Invalid(problems));
    }
    let manifest: RunManifest = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ManifestError::Invalid(vec![e.to_string()]))?;
    problems.extend(manifest.problems());
    if problems.is_empty() {
        Ok(manifest)
    } else {
        Err(ManifestError::Invalid(problems))
    }
}

fn apply_overrides(table: &mut toml::Table, o: &Overrides) -> Result<(), ManifestError> {
    let int = |v: u64, key: &str| {
        i64::try_from(v)
            .map(toml::Value::Integer)
            .map_err(|_| ManifestError::Invalid(vec![format!("{key} = {v} does not fit a manifest integer")]))
    };
    if let Some(c) = o.command {
        table.insert("command".into(), toml::Value::String(c.name().into()));
    }
    if let Some(d) = &o.output_dir {
        table.insert("output_dir".into(), toml::Value::String(d.to_string_lossy().into_owned()));
    }
    if let Some(r) = o.realizations {
        table.insert("realizations".into(), int(r as u64, "realizations")?);
    }
    if let Some(t) = o.threads {
        table.insert("threads".into(), int(t as u64, "threads")?);
    }
    if let Some(s) = o.store_components {
        table.insert("store_components".into(), toml::Value::Boolean(s));
    }
    if let Some(seed) = o.master_seed {
        let value = int(seed, "master_seed")?;
        match table.get_mut("register") {
            Some(toml::Value::Table(reg)) => {
                reg.insert("master_seed".into(), value);
            }
            _ => return Err(ManifestError::Invalid(vec!["missing required key `register`".into()])),
        }
    }
    Ok(())
}

fn schema_problems(table: &toml::Table) -> Vec<String> {
    let mut out = Vec::new();
    let check = |t: &toml::Table, prefix: &str, known: &[&str], required: &[&str], out: &mut Vec<String>| {
        for key in t.keys() {
            if !known.contains(&key.as_str()) {
                out.push(format!("unknown key `{prefix}{key}`"));
            }
        }
        for key in required {
            if !t.contains_key(*key) {
                out.push(format!("missing required key `{prefix}{key}`"));
            }
        }
    };
    check(table, "", TOP_KEYS, TOP_REQUIRED, &mut out);
    match table.get("register") {
        Some(toml::Value::Table(reg)) => check(reg, "register.", REGISTER_KEYS, REGISTER_REQUIRED, &mut out),
        Some(_) => out.push("`register` must be a table".into()),
        None => {}
    }
    out
}

impl RunManifest {
    /// Minimal manifest with every optional key at its default.
    pub fn new(command: Command, register: RegisterConfig) -> Self {
        Self {
            command,
            realizations: 1,
            output_dir: default_output_dir(),
            threads: None,
            store_components: false,
            top_components: 0,
            register,
            initial_state: InitialState::default(),
            time_grid: None,
            j_grid: None,
            sizes: default_sizes(),
            bin_width: None,
            energy_window: default_window(),
        }
    }

    /// Every value problem, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.register.problems().into_iter().map(|p| format!("register: {p}")).collect();
        if self.realizations == 0 {
            out.push("realizations must be at least 1".into());
        }
        if self.threads == Some(0) {
            out.push("threads must be at least 1".into());
        }
        if self.register.master_seed > i64::MAX as u64 {
            out.push(format!("register.master_seed must be <= {}", i64::MAX));
        }
        if self.register.max_qubits > 2 * DEFAULT_MAX_QUBITS {
            out.push(format!("register.max_qubits must be <= {}", 2 * DEFAULT_MAX_QUBITS));
        }
        if let Some(g) = &self.time_grid {
            out.extend(g.problems("time_grid", false));
        }
        if let Some(g) = &self.j_grid {
            out.extend(g.problems("j_grid", true));
        }
        if let Some(w) = self.bin_width {
            if !(w > 0.0 && w.is_finite()) {
                out.push(format!("bin_width must be positive, got {w}"));
            }
        }
        if !(self.energy_window > 0.0 && self.energy_window <= 1.0) {
            out.push(format!("energy_window must lie in (0, 1], got {}", self.energy_window));
        }
        if self.top_components > 0 && !(self.store_components && self.command == Command::Evolve) {
            out.push("top_components needs command = \"evolve\" and store_components = true".into());
        }
        if let InitialState::Bits(b) = self.initial_state {
            if self.register.n < 64 && b >> self.register.n != 0 {
                out.push(format!("initial_state bits {b:#b} exceed n = {}", self.register.n));
            }
        }
        match self.command {
            Command::TcScan => {
                if self.sizes.is_empty() {
                    out.push("sizes must not be empty".into());
                }
                for &n in &self.sizes {
                    let cfg = RegisterConfig { n, ..self.register.clone() };
                    out.extend(cfg.problems().into_iter().map(|p| format!("sizes: n = {n}: {p}")));
                }
                if self.register.j_scale == 0.0 {
                    out.push("tc-scan needs register.j_scale > 0".into());
                }
            }
            Command::JcScan if self.j_grid.is_none() && self.register.delta0 == 0.0 => {
                out.push("jc-scan without j_grid needs register.delta0 > 0".into());
            }
            _ => {}
        }
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest values are representable in TOML")
    }

    /// `sqrt(qn J_r²)` for the configured coupling law.
    pub fn expected_delta_e(&self) -> f64 {
        let qn = self.register.topology.edges(self.register.n).map(|e| e.len()).unwrap_or(0);
        (qn as f64 * CouplingLaw::mean_square(self.register.j_law, self.register.j_scale)).sqrt()
    }

    pub fn times(&self) -> Vec<f64> {
        if let Some(g) = &self.time_grid {
            return g.points();
        }
        let de = self.expected_delta_e();
        let scale = if de > 0.0 {
            de
        } else if self.register.delta0 > 0.0 {
            self.register.delta0
        } else {
            1.0
        };
        geomspace(1e-2 / scale, 1e2 / scale, 200)
    }

    pub fn couplings(&self) -> Vec<f64> {
        match &self.j_grid {
            Some(g) => g.points(),
            None => {
                let unit = self.register.delta0 / self.register.n as f64;
                geomspace(0.1 * unit, 3.0 * unit, 12)
            }
        }
    }

    pub fn strength_bin_width(&self) -> f64 {
        self.bin_width.unwrap_or_else(|| {
            let de = self.expected_delta_e();
            if de > 0.0 {
                de / 20.0
            } else {
                (self.register.delta0 / 20.0).max(1e-3)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinreg::Topology;

    const MINIMAL: &str = r#"
command = "evolve"

[register]
n = 8
delta0 = 1.0
j_scale = 0.1
"#;

    fn parse(text: &str) -> Result<RunManifest, ManifestError> {
        parse_manifest_str(text, &Overrides::default())
    }

    #[test]
    fn minimal_manifest_gets_defaults() {
        let m = parse(MINIMAL).unwrap();
        assert_eq!(m, RunManifest::new(Command::Evolve, RegisterConfig::new(8, Topology::Chain, 1.0, 0.1)));
        assert_eq!(m.register.max_qubits, DEFAULT_MAX_QUBITS);
        assert_eq!(m.initial_state, InitialState::Staggered);
        assert_eq!(m.times().len(), 200);
    }

    #[test]
    fn round_trip() {
        let text = r#"
command = "jc-scan"
realizations = 4
threads = 2
energy_window = 0.5
initial_state = { bits = 5 }
j_grid = { kind = "values", values = [0.01, 0.02, 0.05] }

[register]
n = 6
topology = { edges = [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0]] }
delta0 = 1.0
j_scale = 0.0
j_law = "random-sign"
eps_law = { uniform = { low = 0.25, high = 1.75 } }
master_seed = 77
"#;
        let m = parse(text).unwrap();
        assert_eq!(parse(&m.to_toml()).unwrap(), m);
        let m = parse(MINIMAL).unwrap();
        assert_eq!(parse(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn resource_cap() {
        let err = parse(&MINIMAL.replace("n = 8", "n = 40")).unwrap_err();
        let p = err.problems();
        assert!(p.iter().any(|x| x.contains("exceeds the cap of 14")), "{p:?}");
    }

    #[test]
    fn duplicate_edge_is_named() {
        let text = MINIMAL.replace("n = 8", "n = 3\ntopology = { edges = [[0, 1], [1, 2], [1, 0]] }");
        let p = parse(&text).unwrap_err().problems();
        assert!(p.iter().any(|x| x.contains("duplicate edge (1, 0)")), "{p:?}");
    }

    #[test]
    fn all_problems_reported() {
        let text = r#"
command = "evolve"
realizations = 1
colour = "blue"

[register]
n = 8
speed = 3
"#;
        let p = parse(text).unwrap_err().problems();
        for needle in ["`colour`", "`register.speed`", "`register.delta0`", "`register.j_scale`"] {
            assert!(p.iter().any(|x| x.contains(needle)), "{needle} missing from {p:?}");
        }
        let text = MINIMAL.replace(
            "command = \"evolve\"",
            "command = \"evolve\"\nrealizations = 0\nenergy_window = 2.0\nbin_width = -1.0",
        );
        assert_eq!(parse(&text).unwrap_err().problems().len(), 3);
    }

    #[test]
    fn overrides_apply_before_validation() {
        let o = Overrides {
            command: Some(Command::Spectrum),
            realizations: Some(3),
            master_seed: Some(9),
            threads: Some(2),
            store_components: Some(true),
            output_dir: Some("x".into()),
        };
        let m = parse_manifest_str(MINIMAL, &o).unwrap();
        assert_eq!((m.command, m.realizations, m.register.master_seed, m.threads), (Command::Spectrum, 3, 9, Some(2)));
        let o = Overrides { realizations: Some(0), ..Overrides::default() };
        assert!(parse_manifest_str(MINIMAL, &o).is_err());
        let o = Overrides { master_seed: Some(u64::MAX), ..Overrides::default() };
        assert!(parse_manifest_str(MINIMAL, &o).is_err());
    }

    #[test]
    fn grid_checks() {
        let bad = MINIMAL.replace(
            "command = \"evolve\"",
            "command = \"jc-scan\"\nj_grid = { kind = \"values\", values = [0.2, 0.1] }",
        );
        assert!(parse(&bad).is_err());
        let bad = MINIMAL.replace(
            "command = \"evolve\"",
            "command = \"evolve\"\ntime_grid = { kind = \"geometric\", start = 0.0, stop = 1.0, points = 5 }",
        );
        assert!(parse(&bad).is_err());
        let bad = MINIMAL.replace(
            "command = \"evolve\"",
            "command = \"evolve\"\ntime_grid = { kind = \"linear\", start = 0.0, stop = 1.0, points = 5, step = 2 }",
        );
        assert!(parse(&bad).is_err());
    }
}
