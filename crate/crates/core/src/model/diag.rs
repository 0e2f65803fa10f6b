use faer::Side;
use serde::{Deserialize, Serialize};

use super::{build_hamiltonian, parity_nk, Basis, BasisSpec, ModelParams, ParitySector};
use crate::{Error, Result};

/// Knobs for [`diagonalize_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalizeOptions {
    /// Keep only levels with rescaled energy `ε ≤ energy_cap`.
    pub energy_cap: Option<f64>,
    /// Fock states with `n > tail_fraction · n_max` count as truncation tail.
    pub tail_fraction: f64,
    /// A level is trusted when its tail weight is below this.
    pub tail_tolerance: f64,
    /// Allowed deviation of the parity expectation from ±1.
    pub parity_tolerance: f64,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        Self { energy_cap: None, tail_fraction: 0.9, tail_tolerance: 1e-8, parity_tolerance: 1e-6 }
    }
}

impl DiagonalizeOptions {
    pub fn with_energy_cap(self, cap: f64) -> Self {
        Self { energy_cap: Some(cap), ..self }
    }
}

/// Eigenpairs of the truncated Hamiltonian.
///
/// Vectors are stored column-major on the rows of `basis` (n-major, m-minor,
/// filtered by the parity sector of the basis spec).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub(crate) params: ModelParams,
    pub(crate) basis: Basis,
    pub(crate) energies: Vec<f64>,
    pub(crate) vectors: Vec<f64>,
    pub(crate) parities: Vec<i8>,
    pub(crate) tail_weights: Vec<f64>,
    pub(crate) n_converged: usize,
}

impl EigenDecomposition {
    /// Assembles a decomposition from stored parts, checking shapes.
    pub fn from_parts(
        params: ModelParams,
        spec: BasisSpec,
        energies: Vec<f64>,
        vectors: Vec<f64>,
        parities: Vec<i8>,
        tail_weights: Vec<f64>,
        n_converged: usize,
    ) -> Result<Self> {
        let basis = spec.materialize();
        let n = energies.len();
        if vectors.len() != n * basis.len()
            || parities.len() != n
            || tail_weights.len() != n
            || n_converged > n
        {
            return Err(Error::InvalidArgument(
                "eigen decomposition parts have inconsistent shapes".into(),
            ));
        }
        Ok(Self { params, basis, energies, vectors, parities, tail_weights, n_converged })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn spec(&self) -> BasisSpec {
        self.basis.spec
    }

    /// Rescaled energies `ε_k = E_k / j`, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn parities(&self) -> &[i8] {
        &self.parities
    }

    pub fn tail_weights(&self) -> &[f64] {
        &self.tail_weights
    }

    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Column-major coefficient storage, `dim × n_levels`.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn vector(&self, level: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors[level * d..(level + 1) * d]
    }

    /// Number of leading levels that passed the truncation test.
    pub fn n_converged(&self) -> usize {
        self.n_converged
    }

    /// Energy of the highest trusted level.
    pub fn converged_max_energy(&self) -> Option<f64> {
        self.n_converged.checked_sub(1).map(|k| self.energies[k])
    }

    /// Indices of trusted levels with `lo ≤ ε_k ≤ hi`.
    pub fn levels_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let trusted = &self.energies[..self.n_converged];
        let start = trusted.partition_point(|&e| e < lo);
        let end = trusted.partition_point(|&e| e <= hi);
        start..end.max(start)
    }

    /// Restricts the trusted range to the first `count` levels.
    pub fn set_converged(&mut self, count: usize) {
        self.n_converged = count.min(self.n_levels());
    }
}

/// Full diagonalization with default options.
pub fn diagonalize(params: &ModelParams, spec: &BasisSpec) -> Result<EigenDecomposition> {
    diagonalize_with(params, spec, &DiagonalizeOptions::default())
}

/// Solves each parity block separately and merges the levels by energy.
///
/// Splitting the full problem keeps quasi-degenerate parity doublets from
/// being mixed by the eigensolver.
pub fn diagonalize_with(
    params: &ModelParams,
    spec: &BasisSpec,
    options: &DiagonalizeOptions,
) -> Result<EigenDecomposition> {
    let basis = spec.materialize();
    let sectors: &[ParitySector] = match spec.sector {
        ParitySector::All => &[ParitySector::Positive, ParitySector::Negative],
        ParitySector::Positive => &[ParitySector::Positive],
        ParitySector::Negative => &[ParitySector::Negative],
    };
    let j = params.j();
    let cap = options.energy_cap.unwrap_or(f64::INFINITY);
    let tail_from = options.tail_fraction * f64::from(spec.n_max);

    // (energy, parity, coefficients on `basis`)
    let mut levels: Vec<(f64, i8, Vec<f64>)> = Vec::new();
    for &sector in sectors {
        let block_spec = spec.with_sector(sector);
        let block_basis = block_spec.materialize();
        if block_basis.is_empty() {
            continue;
        }
        let h = build_hamiltonian(params, &block_spec)?;
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenSolver)?;
        let values = evd.S().column_vector();
        let u = evd.U();
        let rows: Vec<usize> = block_basis
            .states()
            .iter()
            .map(|&(n, k)| basis.index_of(n, k).expect("block state belongs to the basis"))
            .collect();
        for c in 0..block_basis.len() {
            let eps = values[c] / j;
            if eps > cap {
                break;
            }
            let mut v = vec![0.0; basis.len()];
            for (r, &row) in rows.iter().enumerate() {
                v[row] = u[(r, c)];
            }
            let parity = parity_expectation(&basis, &v);
            let snapped = if parity > 0.0 { 1 } else { -1 };
            if (parity - f64::from(snapped)).abs() > options.parity_tolerance {
                return Err(Error::ParityMixing { level: levels.len(), expectation: parity });
            }
            levels.push((eps, snapped, v));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));

    let dim = basis.len();
    let mut energies = Vec::with_capacity(levels.len());
    let mut parities = Vec::with_capacity(levels.len());
    let mut tail_weights = Vec::with_capacity(levels.len());
    let mut vectors = Vec::with_capacity(levels.len() * dim);
    for (eps, parity, v) in levels {
        let tail: f64 = basis
            .states()
            .iter()
            .zip(&v)
            .filter(|(&(n, _), _)| f64::from(n) > tail_from)
            .map(|(_, c)| c * c)
            .sum();
        energies.push(eps);
        parities.push(parity);
        tail_weights.push(tail);
        vectors.extend_from_slice(&v);
    }
    let n_converged =
        tail_weights.iter().position(|&t| t >= options.tail_tolerance).unwrap_or(energies.len());
    log::debug!(
        "diagonalized j={} n_max={} sector={}: {} levels kept, {} trusted",
        j,
        spec.n_max,
        spec.sector.label(),
        energies.len(),
        n_converged
    );
    Ok(EigenDecomposition {
        params: *params,
        basis,
        energies,
        vectors,
        parities,
        tail_weights,
        n_converged,
    })
}

fn parity_expectation(basis: &Basis, v: &[f64]) -> f64 {
    basis.states().iter().zip(v).map(|(&(n, k), c)| f64::from(parity_nk(n, k)) * c * c).sum()
}

/// Number of leading levels of `lo` that agree with `hi` to `tol`.
///
/// Levels are paired by rank inside each parity sector. A level also has to
/// pass the tail-weight test of `lo` to count.
pub fn converged_levels(
    lo: &EigenDecomposition,
    hi: &EigenDecomposition,
    tol: f64,
) -> Result<usize> {
    if lo.params != hi.params {
        return Err(Error::InvalidArgument("decompositions have different parameters".into()));
    }
    if hi.spec().n_max < lo.spec().n_max {
        return Err(Error::InvalidArgument("second decomposition must have the larger n_max".into()));
    }
    let sector_energies = |dec: &EigenDecomposition, parity: i8| -> Vec<f64> {
        dec.energies.iter().zip(&dec.parities).filter(|(_, &p)| p == parity).map(|(&e, _)| e).collect()
    };
    let hi_pos = sector_energies(hi, 1);
    let hi_neg = sector_energies(hi, -1);
    let (mut i_pos, mut i_neg) = (0, 0);
    for k in 0..lo.n_converged {
        let partner = if lo.parities[k] > 0 {
            i_pos += 1;
            hi_pos.get(i_pos - 1)
        } else {
            i_neg += 1;
            hi_neg.get(i_neg - 1)
        };
        match partner {
            Some(&e) if (e - lo.energies[k]).abs() < tol => {}
            _ => return Ok(k),
        }
    }
    Ok(lo.n_converged)
}

/// Fock cutoff adequate for levels up to `eps_max`.
///
/// Takes the largest boson number `j (q² + p²)/2` reachable on the classical
/// region `h ≤ eps_max` and adds a few standard deviations of the coherent
/// Poisson spread on top.
pub fn suggested_n_max(params: &ModelParams, eps_max: f64) -> u32 {
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let mut q_max: f64 = 0.0;
    let steps = 4000;
    for i in 0..=steps {
        // boson energy is largest on the p = 0, P = 0 slice
        let big_q = -2.0 + 4.0 * f64::from(i) / f64::from(steps);
        let a = (1.0 - big_q * big_q / 4.0).max(0.0).sqrt();
        let b = 2.0 * g * big_q * a;
        let c = w0 * big_q * big_q / 2.0 - w0 - eps_max;
        let disc = b * b - 2.0 * w * c;
        if disc >= 0.0 {
            q_max = q_max.max((b.abs() + disc.sqrt()) / w);
        }
    }
    let n_cl = params.j() * q_max * q_max / 2.0;
    (n_cl + 3.0 * n_cl.sqrt() + 10.0).ceil() as u32
}
