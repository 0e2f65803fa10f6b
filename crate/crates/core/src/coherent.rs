//! Glauber⊗Bloch coherent states `|x⟩ = |q, p⟩ ⊗ |Q, P⟩` and their energy
//! width.
//!
//! Amplitudes are assembled from log-magnitudes and phases so that large `j`
//! and large photon numbers never overflow.

use num_complex::Complex64;

use crate::classical::{bloch_factor, PhasePoint, ATOMIC_DISK_R2};
use crate::model::{apply_hamiltonian, Basis, BasisSpec, ModelParams, ParitySector};
use crate::special::{ln_binomial, ln_factorial};
use crate::{Error, Result};

/// Glauber tail beyond `n_max` that triggers a warning.
pub const TAIL_WARNING: f64 = 1e-10;
/// Glauber tail beyond `n_max` tolerated by the brute-force width.
pub const TAIL_LIMIT_QUANTUM: f64 = 1e-12;

/// Coefficients `⟨n, j m | x⟩` on a truncated basis.
#[derive(Debug, Clone)]
pub struct CoherentAmplitudes {
    pub point: PhasePoint,
    pub spec: BasisSpec,
    /// One entry per basis row, in basis storage order.
    pub coefficients: Vec<Complex64>,
    /// Glauber weight beyond `n_max`.
    pub tail_weight: f64,
}

impl CoherentAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

#[inline]
fn from_log_polar(ln_mag: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(ln_mag.exp(), phase)
}

/// Glauber amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n ≤ n_max` with
/// `α = √(j/2)(q + i p)`, plus the probability weight above `n_max`.
pub fn glauber_amplitudes(q: f64, p: f64, j: f64, n_max: u32) -> (Vec<Complex64>, f64) {
    let alpha = Complex64::new(q, p) * (j / 2.0).sqrt();
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); n_max as usize + 1];
        v[0] = Complex64::new(1.0, 0.0);
        return (v, 0.0);
    }
    let (ln_abs, arg) = (alpha.norm().ln(), alpha.arg());
    let ln_term = |n: u32| -mean / 2.0 + f64::from(n) * ln_abs - 0.5 * ln_factorial(n);
    let amps = (0..=n_max).map(|n| from_log_polar(ln_term(n), f64::from(n) * arg)).collect();
    // Poisson tail: add terms until they stop contributing
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        let w = (2.0 * ln_term(n)).exp();
        tail += w;
        if f64::from(n) > mean && (w == 0.0 || w < 1e-18 * tail) {
            break;
        }
        n += 1;
    }
    (amps, tail)
}

/// Bloch amplitudes `√C(2j,k) (1 − r²/4)^j ζ^k`, `ζ = (Q + iP)/√(4 − r²)`,
/// indexed by `k = j + m`.
pub fn bloch_amplitudes(atom_q: f64, atom_p: f64, two_j: u32) -> Result<Vec<Complex64>> {
    let r2 = atom_q * atom_q + atom_p * atom_p;
    if !(r2 < ATOMIC_DISK_R2) {
        return Err(Error::Domain { r2, limit: ATOMIC_DISK_R2 });
    }
    let j = f64::from(two_j) / 2.0;
    let base = j * (1.0 - r2 / 4.0).ln();
    if r2 == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); two_j as usize + 1];
        v[0] = Complex64::new(1.0, 0.0);
        return Ok(v);
    }
    let ln_zeta = 0.5 * (r2 / (4.0 - r2)).ln();
    let arg = atom_p.atan2(atom_q);
    Ok((0..=two_j)
        .map(|k| {
            let kf = f64::from(k);
            from_log_polar(0.5 * ln_binomial(two_j, k) + base + kf * ln_zeta, kf * arg)
        })
        .collect())
}

/// Coherent-state coefficients on the rows of `basis`.
pub fn coherent_amplitudes(x: &PhasePoint, basis: &Basis) -> Result<CoherentAmplitudes> {
    let spec = basis.spec;
    let bloch = bloch_amplitudes(x.atom_q, x.atom_p, spec.two_j)?;
    let (glauber, tail_weight) = glauber_amplitudes(x.q, x.p, spec.j(), spec.n_max);
    if tail_weight > TAIL_WARNING {
        log::warn!(
            "coherent state at q={}, p={} leaks {tail_weight:e} beyond n_max={}",
            x.q,
            x.p,
            spec.n_max
        );
    }
    let coefficients = basis
        .states()
        .iter()
        .map(|&(n, k)| glauber[n as usize] * bloch[k as usize])
        .collect();
    Ok(CoherentAmplitudes { point: *x, spec, coefficients, tail_weight })
}

/// `|⟨ψ|x⟩|²` for a state given on the same basis as `amps`.
pub fn husimi_overlap(state: &[Complex64], amps: &CoherentAmplitudes) -> Result<f64> {
    if state.len() != amps.coefficients.len() {
        return Err(Error::InvalidArgument(format!(
            "state has {} components, basis has {}",
            state.len(),
            amps.coefficients.len()
        )));
    }
    let overlap: Complex64 = state.iter().zip(&amps.coefficients).map(|(s, c)| s.conj() * c).sum();
    Ok(overlap.norm_sqr())
}

/// Coherent-state energy width `σ_x` from the closed-form variance of the
/// quantum Hamiltonian in `|x⟩`, rescaled by `1/j`.
pub fn sigma_x_analytic(x: &PhasePoint, params: &ModelParams) -> Result<f64> {
    let r2 = x.atomic_r2();
    if r2 > ATOMIC_DISK_R2 {
        return Err(Error::Domain { r2, limit: ATOMIC_DISK_R2 });
    }
    let variance = sigma_x_parts(x, params, r2);
    let total = variance.0 * params.j() + variance.1;
    if total < 0.0 {
        return Err(Error::InvalidArgument(format!("negative energy variance {total} at {x:?}")));
    }
    Ok(total.sqrt() / params.j())
}

/// `(Ω₁/j, Ω₂)`: the part of `j²σ_x²` growing with `j` and the constant part.
pub fn sigma_x_parts(x: &PhasePoint, params: &ModelParams, r2: f64) -> (f64, f64) {
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let (q, big_q, big_p) = (x.q, x.atom_q, x.atom_p);
    let a = bloch_factor(r2);
    let z = 1.0 - r2 / 2.0;
    let atomic = big_p * big_p * a * a + z * z;
    let omega2 = g * g * atomic;
    let omega1 = w * w / 2.0 * x.bosonic_r2()
        + w0 * w0 / 2.0 * r2 * a * a
        + 2.0 * g * g * (q * q * atomic + big_q * big_q * a * a)
        + 2.0 * g * q * big_q * (w + w0 * z) * a;
    (omega1, omega2)
}

/// Mean and width of the rescaled energy in `|x⟩` by brute force:
/// `(⟨H⟩/j, √(⟨H²⟩ − ⟨H⟩²)/j)` on the truncated basis.
pub fn coherent_energy_moments(
    x: &PhasePoint,
    params: &ModelParams,
    n_max: u32,
) -> Result<(f64, f64)> {
    let spec = BasisSpec::for_params(params, n_max, ParitySector::All);
    let amps = coherent_amplitudes(x, &spec.materialize())?;
    if amps.tail_weight > TAIL_LIMIT_QUANTUM {
        return Err(Error::Truncation { tail: amps.tail_weight, limit: TAIL_LIMIT_QUANTUM });
    }
    let h_psi = apply_hamiltonian(params, &spec, &amps.coefficients)?;
    let mean: Complex64 =
        amps.coefficients.iter().zip(&h_psi).map(|(c, h)| c.conj() * h).sum();
    let second: f64 = h_psi.iter().map(|h| h.norm_sqr()).sum();
    let norm = amps.norm_sqr();
    let e1 = mean.re / norm;
    let e2 = second / norm;
    let j = params.j();
    Ok((e1 / j, (e2 - e1 * e1).max(0.0).sqrt() / j))
}

/// Brute-force `σ_x`; the oracle for [`sigma_x_analytic`].
pub fn sigma_x_quantum(x: &PhasePoint, params: &ModelParams, n_max: u32) -> Result<f64> {
    coherent_energy_moments(x, params, n_max).map(|(_, s)| s)
}

/// Photon cutoff that keeps the Glauber tail of `|x⟩` below `limit`.
pub fn n_max_for_point(x: &PhasePoint, j: f64, limit: f64) -> u32 {
    let mean = j / 2.0 * x.bosonic_r2();
    let mut n_max = (mean + 10.0 * mean.sqrt() + 20.0).ceil() as u32;
    while glauber_amplitudes(x.q, x.p, j, n_max).1 > limit {
        n_max += 10;
    }
    n_max
}
