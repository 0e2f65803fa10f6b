use faer::Mat;
use num_complex::Complex64;

use super::{full_index, BasisSpec, ModelParams};
use crate::{Error, Result};

/// Diagonal element `ω n + ω₀ m`.
#[inline]
fn diagonal(params: &ModelParams, n: u32, k: u32) -> f64 {
    let m = f64::from(k) - params.j();
    params.omega * f64::from(n) + params.omega0 * m
}

/// Upper couplings out of `(n, k)`: the two partners with `n + 1`.
///
/// Pairs with `n − 1` are the transposes of these, so visiting only the
/// upward partners of every state enumerates each element once and the
/// matrix comes out exactly symmetric.
#[inline]
fn upward_couplings(params: &ModelParams, n: u32, k: u32) -> [(u32, i64, f64); 2] {
    let two_j = u64::from(params.two_j);
    let prefactor = params.gamma / f64::from(params.two_j).sqrt();
    let boson = f64::from(n + 1).sqrt();
    let k64 = u64::from(k);
    // ⟨k+1|J₊|k⟩ = √((2j−k)(k+1)),  ⟨k−1|J₋|k⟩ = √(k(2j−k+1))
    let raise = if k64 < two_j { ((two_j - k64) * (k64 + 1)) as f64 } else { 0.0 };
    let lower = if k64 > 0 { (k64 * (two_j - k64 + 1)) as f64 } else { 0.0 };
    [
        (n + 1, i64::from(k) + 1, prefactor * boson * raise.sqrt()),
        (n + 1, i64::from(k) - 1, prefactor * boson * lower.sqrt()),
    ]
}

fn check_consistent(params: &ModelParams, spec: &BasisSpec) -> Result<()> {
    if params.two_j != spec.two_j {
        return Err(Error::InvalidBasis(format!(
            "basis built for 2j = {} but model has 2j = {}",
            spec.two_j, params.two_j
        )));
    }
    Ok(())
}

/// Dense Hamiltonian `ω a†a + ω₀ J_z + (γ/√(2j)) (a† + a)(J₊ + J₋)` in the
/// (possibly parity-restricted) truncated basis.
pub fn build_hamiltonian(params: &ModelParams, spec: &BasisSpec) -> Result<Mat<f64>> {
    check_consistent(params, spec)?;
    let basis = spec.materialize();
    let dim = basis.len();
    let mut h = Mat::<f64>::zeros(dim, dim);
    for (i, &(n, k)) in basis.states().iter().enumerate() {
        h[(i, i)] = diagonal(params, n, k);
        if n == spec.n_max {
            continue;
        }
        for (n2, k2, value) in upward_couplings(params, n, k) {
            if k2 < 0 || k2 > i64::from(spec.two_j) || value == 0.0 {
                continue;
            }
            // coupling flips parity of n and of k together, so the partner
            // is always in the same sector
            let t = basis
                .index_of(n2, k2 as u32)
                .expect("coupled state lies in the same parity sector");
            h[(t, i)] = value;
            h[(i, t)] = value;
        }
    }
    Ok(h)
}

/// `H·ψ` for a vector on the full truncated basis of `spec` (sector ignored).
///
/// The result lives on the basis extended to `n_max + 1`, so `‖Hψ‖²` is the
/// exact `⟨ψ|H²|ψ⟩` for any `ψ` supported on the truncated space.
pub fn apply_hamiltonian(
    params: &ModelParams,
    spec: &BasisSpec,
    input: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_consistent(params, spec)?;
    let atomic = spec.two_j + 1;
    if input.len() != spec.full_dim() {
        return Err(Error::InvalidArgument(format!(
            "vector length {} does not match basis dimension {}",
            input.len(),
            spec.full_dim()
        )));
    }
    let extended = (spec.n_max as usize + 2) * atomic as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); extended];
    for n in 0..=spec.n_max {
        for k in 0..atomic {
            let i = full_index(spec.two_j, n, k);
            let psi = input[i];
            out[i] += psi * diagonal(params, n, k);
            for (n2, k2, value) in upward_couplings(params, n, k) {
                if k2 < 0 || k2 > i64::from(spec.two_j) {
                    continue;
                }
                let t = full_index(spec.two_j, n2, k2 as u32);
                out[t] += psi * value;
                if n2 <= spec.n_max {
                    out[i] += input[t] * value;
                }
            }
        }
    }
    Ok(out)
}
