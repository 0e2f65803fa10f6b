//! Harmonic-mean shell width and the effective dimension
//! `𝒟_eff(ε) = √(2π) ν(ε) σ̄_c(ε)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::classical::{sample_shell, shell_average, ShellSample};
use crate::coherent::sigma_x_analytic;
use crate::husimi::eigenstate_dimensionality;
use crate::model::{EigenDecomposition, ModelParams};
use crate::rng::child_seed;
use crate::stats::{linear_fit, median, Estimate};
use crate::{Error, Result};

fn checked_sigma(x: &crate::classical::PhasePoint, params: &ModelParams) -> f64 {
    sigma_x_analytic(x, params).unwrap_or(f64::NAN)
}

/// Harmonic mean `⟨σ_x⁻¹⟩⁻¹` over the shell.
pub fn harmonic_mean_sigma(sample: &ShellSample) -> Result<Estimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let p = sample.params;
    if sample.points.iter().any(|x| !(checked_sigma(x, &p) > 0.0)) {
        return Err(Error::ZeroWidth);
    }
    Ok(shell_average(sample, |x| 1.0 / checked_sigma(x, &p))?.recip())
}

/// Arithmetic mean `⟨σ_x⟩` over the shell.
pub fn arithmetic_mean_sigma(sample: &ShellSample) -> Result<Estimate> {
    let p = sample.params;
    shell_average(sample, |x| checked_sigma(x, &p))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EffectiveDimension {
    pub epsilon: f64,
    pub j: f64,
    pub value: Estimate,
    pub nu: Estimate,
    pub sigma_bar: Estimate,
}

/// `𝒟_eff` from an existing shell sample.
pub fn effective_dimension_from_sample(sample: &ShellSample) -> Result<EffectiveDimension> {
    let sigma_bar = harmonic_mean_sigma(sample)?;
    let value = sample.nu.mul(sigma_bar).scale((2.0 * PI).sqrt());
    Ok(EffectiveDimension {
        epsilon: sample.epsilon,
        j: sample.params.j(),
        value,
        nu: sample.nu,
        sigma_bar,
    })
}

/// Samples the shell at `epsilon` and returns `𝒟_eff` with its error.
pub fn effective_dimension(
    epsilon: f64,
    params: &ModelParams,
    n_draws: u64,
    seed: u64,
) -> Result<EffectiveDimension> {
    let sample = sample_shell(params, epsilon, n_draws, seed)?;
    effective_dimension_from_sample(&sample)
}

/// Log-log fit of `𝒟_eff` against `j`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub points: Vec<EffectiveDimension>,
    pub slope: Estimate,
    pub intercept: f64,
}

/// `𝒟_eff(ε)` at each `j` (independent seeds per size) and the slope of
/// `log 𝒟_eff` against `log j`.
pub fn effdim_scaling(
    epsilon: f64,
    params: &ModelParams,
    js: &[f64],
    n_draws: u64,
    seed: u64,
) -> Result<ScalingFit> {
    if js.len() < 2 {
        return Err(Error::InvalidArgument("scaling fit needs at least two sizes".into()));
    }
    let points = js
        .iter()
        .enumerate()
        .map(|(i, &j)| effective_dimension(epsilon, &params.with_j(j)?, n_draws, child_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|d| d.j.ln()).collect();
    let y: Vec<f64> = points.iter().map(|d| d.value.value.ln()).collect();
    let (intercept, slope) = linear_fit(&x, &y);
    Ok(ScalingFit { points, slope, intercept })
}

/// One eigenstate compared with the effective dimension at its energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenstateRow {
    pub level: usize,
    pub energy: f64,
    pub parity: i8,
    pub dimensionality: Estimate,
    pub effective: Estimate,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenstateReport {
    pub rows: Vec<EigenstateRow>,
    /// Median of `|D/𝒟_eff − 1|`.
    pub median_abs_deviation: f64,
    pub mean_ratio: f64,
}

/// Per-eigenstate `D(ε_k, φ_k)` against `𝒟_eff(ε_k)` for every `stride`-th
/// trusted level in `[lo, hi]`, each on its own shell of `draws` points.
pub fn effdim_vs_eigenstates_report(
    dec: &EigenDecomposition,
    lo: f64,
    hi: f64,
    stride: usize,
    draws: u64,
    seed: u64,
) -> Result<EigenstateReport> {
    let params = *dec.params();
    if params.gamma == 0.0 {
        return Err(Error::InvalidArgument(
            "uncoupled model is regular; the eigenstate comparison needs γ > 0".into(),
        ));
    }
    if let Some(top) = dec.converged_max_energy() {
        if hi > top {
            return Err(Error::WindowNotConverged { lo, hi });
        }
    }
    let levels: Vec<usize> = dec.levels_in(lo, hi).step_by(stride.max(1)).collect();
    if levels.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let rows = levels
        .iter()
        .map(|&k| {
            let e = dec.energies()[k];
            let sample = sample_shell(&params, e, draws, child_seed(seed, k as u64))?;
            let d = eigenstate_dimensionality(dec, k, &sample)?;
            let eff = effective_dimension_from_sample(&sample)?.value;
            Ok(EigenstateRow {
                level: k,
                energy: e,
                parity: dec.parities()[k],
                dimensionality: d,
                effective: eff,
                ratio: d.value / eff.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let deviations: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let mean_ratio = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64;
    Ok(EigenstateReport { median_abs_deviation: median(&deviations), mean_ratio, rows })
}
