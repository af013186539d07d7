//! Disordered spin register: configuration, disorder sampling and the
//! Hamiltonian `H = Σ ε_i σᶻ_i + Σ_(i,j)∈edges J_ij σˣ_i σˣ_j`.
//!
//! Basis states are bitmasks; bit `q` set means qubit `q` is up (σᶻ = +1).
//! Every σˣσˣ term maps a basis state to exactly one partner, flipping the two
//! bits of its edge, so the number of up spins changes by 0 or ±2 and its
//! parity is conserved.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use faer::Mat;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Coupling graph of the register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// Open chain, `n - 1` edges.
    Chain,
    /// Periodic chain, `n` edges (needs `n >= 3`).
    Ring,
    /// Square-ish grid chosen from the factorization of `n` (`w * h = n`,
    /// `h <= w`, `h` as large as possible). Prime `n` degenerates to a chain.
    Lattice,
    /// `width x height` open grid; site `(x, y)` is qubit `y * width + x`.
    Grid { width: usize, height: usize },
    /// Explicit list of qubit pairs.
    Edges(Vec<(usize, usize)>),
}

impl Topology {
    /// Edge list for an `n`-qubit register, normalized to `a < b`.
    pub fn edges(&self, n: usize) -> Result<Vec<(usize, usize)>> {
        let raw: Vec<(usize, usize)> = match self {
            Topology::Chain => (1..n).map(|i| (i - 1, i)).collect(),
            Topology::Ring => {
                if n < 3 {
                    return Err(Error::Config(format!("ring topology needs n >= 3, got {n}")));
                }
                let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
                e.push((0, n - 1));
                e
            }
            Topology::Lattice => {
                let (w, h) = lattice_dims(n);
                grid_edges(w, h)
            }
            Topology::Grid { width, height } => {
                if width * height != n {
                    return Err(Error::Config(format!(
                        "grid {width}x{height} has {} sites but n = {n}",
                        width * height
                    )));
                }
                grid_edges(*width, *height)
            }
            Topology::Edges(list) => list.clone(),
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::Config(format!("edge ({a}, {b}) is a self-loop")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::Config(format!("duplicate edge ({a}, {b})")));
            }
            out.push(e);
        }
        Ok(out)
    }
}

/// Width and height used by [`Topology::Lattice`].
pub fn lattice_dims(n: usize) -> (usize, usize) {
    let mut h = (n as f64).sqrt().floor() as usize;
    while h > 1 && n % h != 0 {
        h -= 1;
    }
    let h = h.max(1);
    (n / h, h)
}

fn grid_edges(w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let s = y * w + x;
            if x + 1 < w {
                e.push((s, s + 1));
            }
            if y + 1 < h {
                e.push((s, s + w));
            }
        }
    }
    e
}

/// Distribution of the couplings `J_ij`, scaled by `j_scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingLaw {
    /// Uniform on `[-J, J]`; mean square `J²/3`.
    #[default]
    Uniform,
    /// `±J` with a random sign.
    RandomSign,
    /// Exactly `J` on every edge.
    Fixed,
}

impl CouplingLaw {
    /// Mean square coupling `J_r²` for scale `j`.
    pub fn mean_square(self, j: f64) -> f64 {
        match self {
            CouplingLaw::Uniform => j * j / 3.0,
            CouplingLaw::RandomSign | CouplingLaw::Fixed => j * j,
        }
    }
}

/// Distribution of the single-qubit splittings `ε_i`, in units of `Δ0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldLaw {
    Uniform { low: f64, high: f64 },
}

impl Default for FieldLaw {
    fn default() -> Self {
        FieldLaw::Uniform { low: 0.5, high: 1.5 }
    }
}

fn default_max_qubits() -> usize {
    DEFAULT_MAX_QUBITS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterConfig {
    pub n: usize,
    #[serde(default = "default_topology")]
    pub topology: Topology,
    pub delta0: f64,
    pub j_scale: f64,
    #[serde(default)]
    pub j_law: CouplingLaw,
    #[serde(default)]
    pub eps_law: FieldLaw,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_max_qubits")]
    pub max_qubits: usize,
}

fn default_topology() -> Topology {
    Topology::Chain
}

impl RegisterConfig {
    pub fn new(n: usize, topology: Topology, delta0: f64, j_scale: f64) -> Self {
        Self {
            n,
            topology,
            delta0,
            j_scale,
            j_law: CouplingLaw::default(),
            eps_law: FieldLaw::default(),
            master_seed: 0,
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_j_law(mut self, law: CouplingLaw) -> Self {
        self.j_law = law;
        self
    }

    pub fn with_j_scale(&self, j_scale: f64) -> Self {
        Self { j_scale, ..self.clone() }
    }

    /// Every problem with this configuration, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push("n must be at least 1".to_string());
        }
        if self.n > self.max_qubits {
            out.push(Error::ResourceCap { n: self.n, cap: self.max_qubits }.to_string());
        }
        if !(self.delta0.is_finite() && self.delta0 >= 0.0) {
            out.push(format!("delta0 must be finite and >= 0, got {}", self.delta0));
        }
        if !(self.j_scale.is_finite() && self.j_scale >= 0.0) {
            out.push(format!("j_scale must be finite and >= 0, got {}", self.j_scale));
        }
        let FieldLaw::Uniform { low, high } = self.eps_law;
        if !(low.is_finite() && high.is_finite() && low <= high) {
            out.push(format!("eps_law bounds must satisfy low <= high, got [{low}, {high}]"));
        }
        if self.n > 0 && self.n <= 63 {
            if let Err(e) = self.topology.edges(self.n) {
                out.push(e.to_string());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<Vec<(usize, usize)>> {
        if self.n > self.max_qubits {
            return Err(Error::ResourceCap { n: self.n, cap: self.max_qubits });
        }
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        self.topology.edges(self.n)
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }
}

/// Per-realization RNG. The ChaCha8 key is `master_seed` (little endian)
/// followed by `realization_index` (little endian) and sixteen zero bytes, so
/// every `(master_seed, index)` pair owns an independent, fixed stream.
pub fn realization_rng(master_seed: u64, realization_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&realization_index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw on `[0, 1)` from the top 53 bits of one `u64`.
fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl Coupling {
    pub fn mask(&self) -> u64 {
        (1u64 << self.i) | (1u64 << self.j)
    }
}

/// One concrete draw of the fields and couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderRealization {
    pub eps: Vec<f64>,
    pub couplings: Vec<Coupling>,
    pub realization_index: u64,
    pub config: RegisterConfig,
}

/// Draws `ε_i` (first, `n` draws) and then the couplings in edge order, so the
/// fields of a realization do not depend on the coupling law and the coupling
/// shapes do not depend on `j_scale`.
pub fn sample_disorder(config: &RegisterConfig, realization_index: u64) -> Result<DisorderRealization> {
    let edges = config.validate()?;
    let mut rng = realization_rng(config.master_seed, realization_index);
    let FieldLaw::Uniform { low, high } = config.eps_law;
    let eps = (0..config.n).map(|_| config.delta0 * (low + (high - low) * unit(&mut rng))).collect();
    let j = config.j_scale;
    let couplings = edges
        .into_iter()
        .map(|(a, b)| {
            let shape = match config.j_law {
                CouplingLaw::Uniform => 2.0 * unit(&mut rng) - 1.0,
                CouplingLaw::RandomSign => {
                    if rng.next_u64() >> 63 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                CouplingLaw::Fixed => 1.0,
            };
            let value = if j == 0.0 { 0.0 } else { j * shape };
            Coupling { i: a, j: b, value }
        })
        .collect();
    Ok(DisorderRealization { eps, couplings, realization_index, config: config.clone() })
}

impl DisorderRealization {
    /// Realization with explicit values; `couplings` must match the
    /// configuration's edge set in order.
    pub fn from_parts(config: RegisterConfig, eps: Vec<f64>, coupling_values: Vec<f64>) -> Result<Self> {
        let edges = config.validate()?;
        if eps.len() != config.n {
            return Err(Error::Config(format!("expected {} fields, got {}", config.n, eps.len())));
        }
        if coupling_values.len() != edges.len() {
            return Err(Error::Config(format!("expected {} couplings, got {}", edges.len(), coupling_values.len())));
        }
        let couplings =
            edges.into_iter().zip(coupling_values).map(|((i, j), value)| Coupling { i, j, value }).collect();
        Ok(Self { eps, couplings, realization_index: 0, config })
    }

    pub fn n(&self) -> usize {
        self.eps.len()
    }

    pub fn dim(&self) -> usize {
        1usize << self.n()
    }

    /// Number of interacting pairs (`qn`).
    pub fn edge_count(&self) -> usize {
        self.couplings.len()
    }

    /// Pair density `q = edges / n`.
    pub fn pair_density(&self) -> f64 {
        self.edge_count() as f64 / self.n() as f64
    }

    /// `⟨s|H|s⟩ = Σ_i ε_i s_i`.
    pub fn diagonal_energy(&self, s: BasisState) -> f64 {
        self.eps.iter().enumerate().map(|(q, e)| if s.is_up(q) { *e } else { -*e }).sum()
    }

    /// Mean of `J_ij²` over edges (0 without edges).
    pub fn mean_square_coupling(&self) -> f64 {
        if self.couplings.is_empty() {
            0.0
        } else {
            second_moment(self) / self.couplings.len() as f64
        }
    }

    /// `⟨f|H|i⟩` for `f != i`: the coupling whose edge flip maps `i` to `f`.
    pub fn off_diagonal(&self, i: BasisState, f: BasisState) -> Option<f64> {
        let diff = i.0 ^ f.0;
        self.couplings.iter().find(|c| c.mask() == diff).map(|c| c.value)
    }

    /// True when no subset of edges closes a cycle.
    pub fn is_acyclic(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for c in &self.couplings {
            let (a, b) = (find(&mut parent, c.i), find(&mut parent, c.j));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisState(pub u64);

impl BasisState {
    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_up(self, q: usize) -> bool {
        self.0 >> q & 1 == 1
    }

    /// σᶻ eigenvalue of qubit `q`.
    pub fn spin(self, q: usize) -> f64 {
        if self.is_up(q) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn up_count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn parity(self) -> Parity {
        if self.up_count() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self, mask: u64) -> BasisState {
        BasisState(self.0 ^ mask)
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// Parity of the up-spin count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn label(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    fn matches(self, s: u64) -> bool {
        (s.count_ones() % 2 == 0) == (self == Parity::Even)
    }
}

/// How to pick the initial basis state of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Two-coloring of the coupling graph by breadth-first search from qubit
    /// 0 (up). Alternating on a chain, checkerboard on a grid.
    #[default]
    Staggered,
    /// Basis state whose diagonal energy is closest to zero.
    Center,
    Bits(u64),
}

impl InitialState {
    pub fn resolve(self, r: &DisorderRealization) -> Result<BasisState> {
        let n = r.n();
        match self {
            InitialState::Bits(b) => {
                if n < 64 && b >> n != 0 {
                    Err(Error::InvalidArgument(format!("initial state {b:#b} has bits beyond n = {n}")))
                } else {
                    Ok(BasisState(b))
                }
            }
            InitialState::Center => Ok((0..r.dim() as u64)
                .map(BasisState)
                .min_by(|a, b| r.diagonal_energy(*a).abs().total_cmp(&r.diagonal_energy(*b).abs()))
                .expect("non-empty basis")),
            InitialState::Staggered => {
                let mut adj = vec![Vec::new(); n];
                for c in &r.couplings {
                    adj[c.i].push(c.j);
                    adj[c.j].push(c.i);
                }
                let mut color: Vec<Option<bool>> = vec![None; n];
                for start in 0..n {
                    if color[start].is_some() {
                        continue;
                    }
                    color[start] = Some(true);
                    let mut queue = VecDeque::from([start]);
                    while let Some(v) = queue.pop_front() {
                        let cv = color[v].unwrap();
                        for &w in &adj[v] {
                            if color[w].is_none() {
                                color[w] = Some(!cv);
                                queue.push_back(w);
                            }
                        }
                    }
                }
                let bits =
                    color.iter().enumerate().filter(|(_, c)| c.unwrap_or(false)).fold(0u64, |acc, (q, _)| acc | 1 << q);
                Ok(BasisState(bits))
            }
        }
    }
}

/// Dense Hamiltonian on a set of basis states (the full register or one
/// parity sector). Row/column `r` refers to `basis[r]`.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n: usize,
    basis: Vec<BasisState>,
    /// `lookup[s]` = row of state `s`, or `u32::MAX` when `s` is not in the basis.
    lookup: Vec<u32>,
    matrix: Mat<f64>,
}

impl Hamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn index_of(&self, s: BasisState) -> Option<usize> {
        match self.lookup.get(s.0 as usize) {
            Some(&r) if r != u32::MAX => Some(r as usize),
            _ => None,
        }
    }

    /// `⟨s|H|f⟩`, zero when either state lies outside the basis.
    pub fn element(&self, s: BasisState, f: BasisState) -> f64 {
        match (self.index_of(s), self.index_of(f)) {
            (Some(a), Some(b)) => self.matrix[(a, b)],
            _ => 0.0,
        }
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == 1 << self.n
    }

    fn from_basis(r: &DisorderRealization, basis: Vec<BasisState>) -> Result<Self> {
        let cfg = &r.config;
        if r.n() > cfg.max_qubits {
            return Err(Error::ResourceCap { n: r.n(), cap: cfg.max_qubits });
        }
        let mut lookup = vec![u32::MAX; r.dim()];
        for (row, s) in basis.iter().enumerate() {
            lookup[s.0 as usize] = row as u32;
        }
        let d = basis.len();
        let mut matrix = Mat::<f64>::zeros(d, d);
        for (row, &s) in basis.iter().enumerate() {
            matrix[(row, row)] = r.diagonal_energy(s);
            for c in &r.couplings {
                let f = s.flip(c.mask());
                let col = lookup[f.0 as usize];
                debug_assert!(col != u32::MAX, "coupling leaves the basis");
                matrix[(row, col as usize)] += c.value;
            }
        }
        Ok(Self { n: r.n(), basis, lookup, matrix })
    }
}

/// Full `2^n`-dimensional Hamiltonian.
pub fn build_hamiltonian(r: &DisorderRealization) -> Result<Hamiltonian> {
    if r.n() > r.config.max_qubits {
        return Err(Error::ResourceCap { n: r.n(), cap: r.config.max_qubits });
    }
    Hamiltonian::from_basis(r, (0..r.dim() as u64).map(BasisState).collect())
}

/// Hamiltonian restricted to one up-spin parity sector, built directly.
pub fn build_sector(r: &DisorderRealization, parity: Parity) -> Result<Hamiltonian> {
    if r.n() > r.config.max_qubits {
        return Err(Error::ResourceCap { n: r.n(), cap: r.config.max_qubits });
    }
    let basis = (0..r.dim() as u64).filter(|s| parity.matches(*s)).map(BasisState).collect();
    Hamiltonian::from_basis(r, basis)
}

/// `(ΔE)² = Σ_edges J_ij²`, the same for every initial basis state.
pub fn second_moment(r: &DisorderRealization) -> f64 {
    r.couplings.iter().map(|c| c.value * c.value).sum()
}

/// Splits a full Hamiltonian into its even and odd parity blocks. Each block
/// carries its basis, which is the index map back into the full matrix.
pub fn split_by_parity(h: &Hamiltonian) -> Result<(Hamiltonian, Hamiltonian)> {
    if !h.is_full() {
        return Err(Error::InvalidArgument("split_by_parity needs the full Hamiltonian".into()));
    }
    let block = |p: Parity| {
        let basis: Vec<BasisState> = h.basis.iter().copied().filter(|s| p.matches(s.0)).collect();
        let mut lookup = vec![u32::MAX; h.dim()];
        for (row, s) in basis.iter().enumerate() {
            lookup[s.0 as usize] = row as u32;
        }
        let matrix =
            Mat::from_fn(basis.len(), basis.len(), |a, b| h.matrix[(basis[a].0 as usize, basis[b].0 as usize)]);
        Hamiltonian { n: h.n, basis, lookup, matrix }
    };
    Ok((block(Parity::Even), block(Parity::Odd)))
}
