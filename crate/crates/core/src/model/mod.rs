//! The truncated Dicke Hamiltonian and its spectrum.
//!
//! States are labelled `|n⟩⊗|j,m⟩` and stored n-major, m-minor. Internally
//! the atomic label is `k = j + m ∈ 0..=2j`, which keeps half-integer `j`
//! exact.

mod cache;
mod diag;
mod hamiltonian;

pub use cache::EigenCache;
pub use diag::{
    converged_levels, diagonalize, diagonalize_with, suggested_n_max, DiagonalizeOptions,
    EigenDecomposition,
};
pub use hamiltonian::{apply_hamiltonian, build_hamiltonian};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Couplings and system size of the Dicke model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Field frequency ω.
    pub omega: f64,
    /// Atomic splitting ω₀.
    pub omega0: f64,
    /// Atom-field coupling γ.
    pub gamma: f64,
    /// Twice the pseudospin size, `2j = N`.
    pub two_j: u32,
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, gamma: f64, j: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidParams(format!("omega0 must be positive, got {omega0}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma must be finite, got {gamma}")));
        }
        let two_j = twice_half_integer(j)?;
        Ok(Self { omega, omega0, gamma, two_j })
    }

    /// Resonant case `ω = ω₀ = 1` in the superradiant phase `γ = 2γ_c = 1`.
    pub fn resonant(j: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, j)
    }

    pub fn with_j(self, j: f64) -> Result<Self> {
        Self::new(self.omega, self.omega0, self.gamma, j)
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub fn hbar_eff(&self) -> f64 {
        1.0 / self.j()
    }

    pub fn gamma_c(&self) -> f64 {
        (self.omega * self.omega0).sqrt() / 2.0
    }
}

/// Rejects anything but positive half-integers.
pub(crate) fn twice_half_integer(j: f64) -> Result<u32> {
    let twice = 2.0 * j;
    if !(j >= 0.5) || !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 || twice > 1e7 {
        return Err(Error::InvalidParams(format!(
            "pseudospin j must be a positive half-integer, got {j}"
        )));
    }
    Ok(twice.round() as u32)
}

/// Parity sector selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySector {
    All,
    Positive,
    Negative,
}

impl ParitySector {
    pub fn contains(self, parity: i8) -> bool {
        match self {
            ParitySector::All => true,
            ParitySector::Positive => parity > 0,
            ParitySector::Negative => parity < 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ParitySector::All => "all",
            ParitySector::Positive => "positive",
            ParitySector::Negative => "negative",
        }
    }
}

impl std::str::FromStr for ParitySector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "positive" | "+" | "+1" => Ok(Self::Positive),
            "negative" | "-" | "-1" => Ok(Self::Negative),
            other => Err(Error::InvalidArgument(format!("unknown parity sector {other:?}"))),
        }
    }
}

/// Truncated basis description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub two_j: u32,
    /// Highest Fock occupation kept (inclusive).
    pub n_max: u32,
    pub sector: ParitySector,
}

impl BasisSpec {
    pub fn new(j: f64, n_max: u32, sector: ParitySector) -> Result<Self> {
        Ok(Self { two_j: twice_half_integer(j)?, n_max, sector })
    }

    pub fn for_params(params: &ModelParams, n_max: u32, sector: ParitySector) -> Self {
        Self { two_j: params.two_j, n_max, sector }
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub fn with_sector(self, sector: ParitySector) -> Self {
        Self { sector, ..self }
    }

    /// Dimension of the full (unfiltered) truncated space.
    pub fn full_dim(&self) -> usize {
        (self.n_max as usize + 1) * (self.two_j as usize + 1)
    }

    pub fn dim(&self) -> usize {
        match self.sector {
            ParitySector::All => self.full_dim(),
            _ => self.states().count(),
        }
    }

    /// Basis labels `(n, k)` with `k = j + m`, in storage order.
    pub fn states(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let atomic = self.two_j + 1;
        (0..=self.n_max)
            .flat_map(move |n| (0..atomic).map(move |k| (n, k)))
            .filter(move |&(n, k)| self.sector.contains(parity_nk(n, k)))
    }

    pub fn materialize(&self) -> Basis {
        Basis::new(*self)
    }
}

/// `(−1)^(n + m + j)` for a basis state.
///
/// `m` and `j` may be half-integers; `m + j` must be an integer in `0..=2j`.
pub fn parity_of_basis_state(n: u32, m: f64, j: f64) -> i8 {
    let k = (m + j).round() as i64;
    debug_assert!((m + j - k as f64).abs() < 1e-9 && k >= 0 && (k as f64) <= 2.0 * j + 1e-9);
    if (i64::from(n) + k).rem_euclid(2) == 0 { 1 } else { -1 }
}

#[inline]
pub(crate) fn parity_nk(n: u32, k: u32) -> i8 {
    if (n + k) % 2 == 0 { 1 } else { -1 }
}

/// A materialized basis with index lookup.
#[derive(Debug, Clone)]
pub struct Basis {
    pub spec: BasisSpec,
    states: Vec<(u32, u32)>,
    /// Full-space index → position in `states`, `u32::MAX` when filtered out.
    lookup: Vec<u32>,
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Self {
        let states: Vec<(u32, u32)> = spec.states().collect();
        let mut lookup = vec![u32::MAX; spec.full_dim()];
        for (i, &(n, k)) in states.iter().enumerate() {
            lookup[full_index(spec.two_j, n, k)] = i as u32;
        }
        Self { spec, states, lookup }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[(u32, u32)] {
        &self.states
    }

    pub fn index_of(&self, n: u32, k: u32) -> Option<usize> {
        if n > self.spec.n_max || k > self.spec.two_j {
            return None;
        }
        match self.lookup[full_index(self.spec.two_j, n, k)] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    pub fn parity(&self, index: usize) -> i8 {
        let (n, k) = self.states[index];
        parity_nk(n, k)
    }
}

#[inline]
pub(crate) fn full_index(two_j: u32, n: u32, k: u32) -> usize {
    n as usize * (two_j as usize + 1) + k as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_invariants() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 100.0).unwrap();
        assert_eq!(p.hbar_eff(), 1.0 / 100.0);
        assert_eq!(p.gamma_c(), 0.5);
        let q = ModelParams::new(2.0, 0.5, 0.3, 2.5).unwrap();
        assert_eq!(q.two_j, 5);
        assert_eq!(q.gamma_c(), (2.0f64 * 0.5).sqrt() / 2.0);
    }

    #[test]
    fn params_reject_bad_input() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.3).is_err());
        assert!(BasisSpec::new(1.25, 4, ParitySector::All).is_err());
    }

    #[test]
    fn parity_examples() {
        let j = 3.5;
        assert_eq!(parity_of_basis_state(0, -j, j), 1);
        assert_eq!(parity_of_basis_state(1, -j, j), -1);
        assert_eq!(parity_of_basis_state(2, -j + 1.0, j), -1);
    }

    #[test]
    fn basis_dimensions() {
        let spec = BasisSpec::new(0.5, 1, ParitySector::All).unwrap();
        assert_eq!(spec.dim(), 4);
        assert_eq!(spec.with_sector(ParitySector::Positive).dim(), 2);
        assert_eq!(spec.with_sector(ParitySector::Negative).dim(), 2);
        let big = BasisSpec::new(5.0, 30, ParitySector::All).unwrap();
        assert_eq!(big.dim(), 31 * 11);
        let order: Vec<_> = BasisSpec::new(1.0, 1, ParitySector::All).unwrap().states().collect();
        assert_eq!(order, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
    }

    #[test]
    fn basis_lookup_roundtrip() {
        let basis = BasisSpec::new(2.0, 7, ParitySector::Negative).unwrap().materialize();
        for (i, &(n, k)) in basis.states().iter().enumerate() {
            assert_eq!(basis.index_of(n, k), Some(i));
            assert_eq!(basis.parity(i), -1);
        }
        assert_eq!(basis.index_of(0, 0), None);
    }
}
