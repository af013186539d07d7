//! Exact eigenstates and everything built from them: strength functions,
//! spreading widths, eigenstate entropy and the density of states.

mod dos;
mod strength;
mod width;

pub use dos::{density_of_states, DensityOfStates, GaussianReference, Histogram};
pub use strength::{fit_breit_wigner, strength_function, BreitWignerFit, StrengthFunction};
pub use width::{golden_rule_width, GoldenRuleWidth};

use faer::{Mat, Side};

use crate::entropy::{participation, shannon_bits};
use crate::error::{Error, Result};
use crate::register::{build_sector, BasisState, DisorderRealization, Hamiltonian, Parity};

/// Eigenvalues `E^(k)` (ascending) and coefficients `C_f^(k)` of one
/// Hamiltonian. Row `f` of the coefficient matrix refers to `basis()[f]`;
/// basis states outside this basis have zero overlap with every eigenstate.
#[derive(Clone, Debug)]
pub struct Spectrum {
    n: usize,
    basis: Vec<BasisState>,
    lookup: Vec<u32>,
    eigenvalues: Vec<f64>,
    vectors: Mat<f64>,
}

pub fn diagonalize(h: &Hamiltonian) -> Result<Spectrum> {
    let dim = h.dim();
    let evd = h.matrix().self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence { dim })?;
    let s = evd.S();
    let eigenvalues: Vec<f64> = (0..dim).map(|k| s[k]).collect();
    debug_assert!(eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    let mut lookup = vec![u32::MAX; 1usize << h.n()];
    for (row, b) in h.basis().iter().enumerate() {
        lookup[b.0 as usize] = row as u32;
    }
    Ok(Spectrum { n: h.n(), basis: h.basis().to_vec(), lookup, eigenvalues, vectors: evd.U().to_owned() })
}

/// Builds and diagonalizes the sector holding `state`. Dynamics starting from
/// a basis state never leave its parity sector.
pub fn diagonalize_sector_of(r: &DisorderRealization, state: BasisState) -> Result<Spectrum> {
    diagonalize(&build_sector(r, state.parity())?)
}

/// Both parity sectors, even first.
pub fn diagonalize_by_parity(r: &DisorderRealization) -> Result<[Spectrum; 2]> {
    Ok([diagonalize(&build_sector(r, Parity::Even)?)?, diagonalize(&build_sector(r, Parity::Odd)?)?])
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Mat<f64> {
        &self.vectors
    }

    pub fn index_of(&self, s: BasisState) -> Option<usize> {
        match self.lookup.get(s.0 as usize) {
            Some(&r) if r != u32::MAX => Some(r as usize),
            _ => None,
        }
    }

    pub fn require_index(&self, s: BasisState) -> Result<usize> {
        self.index_of(s).ok_or(Error::StateOutsideBasis { state: s })
    }

    /// Sector parity when every basis state shares one, `None` for the full register.
    pub fn parity(&self) -> Option<Parity> {
        let first = self.basis.first()?.parity();
        self.basis.iter().all(|b| b.parity() == first).then_some(first)
    }

    /// Coefficients of eigenvector `k` over the basis.
    pub fn eigenvector(&self, k: usize) -> &[f64] {
        self.vectors.col_as_slice(k)
    }

    /// `C_f^(k)` with `f` given as a basis row.
    pub fn coefficient(&self, row: usize, k: usize) -> f64 {
        self.vectors[(row, k)]
    }

    /// `|C_i^(k)|²` for every `k`: the decomposition of `i` over eigenstates.
    pub fn weights_of(&self, s: BasisState) -> Result<Vec<f64>> {
        let row = self.require_index(s)?;
        Ok((0..self.dim()).map(|k| self.vectors[(row, k)].powi(2)).collect())
    }

    /// Largest `|Σ_f C_f^(k) C_f^(m) - δ_km|` over all pairs.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim();
        let mut gram = Mat::<f64>::zeros(d, d);
        faer::linalg::matmul::matmul(
            gram.as_mut(),
            faer::Accum::Replace,
            self.vectors.transpose(),
            self.vectors.as_ref(),
            1.0,
            faer::Par::Seq,
        );
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[(a, b)] - target).abs());
            }
        }
        worst
    }

    /// Largest `‖H v_k - E^(k) v_k‖` over all eigenpairs.
    pub fn max_residual(&self, h: &Hamiltonian) -> f64 {
        let d = self.dim();
        let mut hv = Mat::<f64>::zeros(d, d);
        faer::linalg::matmul::matmul(
            hv.as_mut(),
            faer::Accum::Replace,
            h.matrix().as_ref(),
            self.vectors.as_ref(),
            1.0,
            faer::Par::Seq,
        );
        (0..d)
            .map(|k| {
                (0..d).map(|f| (hv[(f, k)] - self.eigenvalues[k] * self.vectors[(f, k)]).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenstateProfile {
    pub k: usize,
    pub energy: f64,
    /// Shannon entropy of `|C_f^(k)|²` in bits.
    pub entropy_bits: f64,
    /// `(Σ_f |C_f^(k)|⁴)^-1`.
    pub participation: f64,
}

pub fn eigenstate_profile(s: &Spectrum, k: usize) -> Result<EigenstateProfile> {
    if k >= s.dim() {
        return Err(Error::InvalidArgument(format!("eigenstate {k} out of range (dim {})", s.dim())));
    }
    let v = s.eigenvector(k);
    let w = v.iter().map(|c| c * c);
    Ok(EigenstateProfile {
        k,
        energy: s.eigenvalues[k],
        entropy_bits: shannon_bits(w.clone()),
        participation: participation(w),
    })
}
