//! Random pure states with prescribed energy profiles and their
//! dimensionality over classical shells.

use std::f64::consts::PI;

use faer::MatRef;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{DensityOfStates, ShellSample};
use crate::coherent::sigma_x_analytic;
use crate::husimi::OverlapTable;
use crate::model::EigenDecomposition;
use crate::rng::{substream, Purpose};
use crate::special::erf;
use crate::stats::{mean_stderr, weighted_mean, Estimate, DEFAULT_BATCHES};
use crate::{Error, Result};

/// Gaussian profiles are cut at this many widths (mass outside < 1e-15).
const GAUSS_CUT: f64 = 8.0;
/// Largest profile mass allowed outside the trusted spectrum.
pub const MAX_LOST_MASS: f64 = 1e-6;

/// Shape of an energy profile `ρ_R(ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Delta,
    Rectangular,
    Gaussian,
    /// Tabulated `(ε, ρ)` pairs on an ascending grid, linearly interpolated.
    Custom(Vec<(f64, f64)>),
}

/// Normalized energy profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub kind: ProfileKind,
    pub center: f64,
    /// Standard deviation; unused for delta and custom profiles.
    pub width: f64,
}

impl EnergyProfile {
    pub fn delta(center: f64) -> Self {
        Self { kind: ProfileKind::Delta, center, width: 0.0 }
    }

    /// Uniform on `[ε − √3σ, ε + √3σ]`, so that `σ` is its standard deviation.
    pub fn rectangular(center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("rectangular width must be positive, got {sigma}")));
        }
        Ok(Self { kind: ProfileKind::Rectangular, center, width: sigma })
    }

    pub fn gaussian(center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("Gaussian width must be positive, got {sigma}")));
        }
        Ok(Self { kind: ProfileKind::Gaussian, center, width: sigma })
    }

    /// Tabulated profile, rescaled to unit trapezoid integral.
    pub fn custom(mut table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2
            || table.windows(2).any(|w| !(w[1].0 > w[0].0))
            || table.iter().any(|&(_, r)| !(r >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "custom profile needs ≥ 2 ascending points with ρ ≥ 0".into(),
            ));
        }
        let mass: f64 = table.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
        if !(mass > 0.0) {
            return Err(Error::ZeroWeights);
        }
        for p in &mut table {
            p.1 /= mass;
        }
        let center = table.iter().map(|p| p.0 * p.1).sum::<f64>()
            / table.iter().map(|p| p.1).sum::<f64>();
        Ok(Self { kind: ProfileKind::Custom(table), center, width: 0.0 })
    }

    /// Rectangle edges `ε ± √3σ`.
    pub fn rect_half_width(&self) -> f64 {
        3f64.sqrt() * self.width
    }

    pub fn density(&self, e: f64) -> f64 {
        match &self.kind {
            ProfileKind::Delta => 0.0,
            ProfileKind::Rectangular => {
                let h = self.rect_half_width();
                if (e - self.center).abs() <= h { 1.0 / (2.0 * h) } else { 0.0 }
            }
            ProfileKind::Gaussian => {
                let z = (e - self.center) / self.width;
                (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * self.width)
            }
            ProfileKind::Custom(t) => {
                if e < t[0].0 || e > t[t.len() - 1].0 {
                    return 0.0;
                }
                let i = t.partition_point(|p| p.0 <= e).clamp(1, t.len() - 1);
                let (a, b) = (t[i - 1], t[i]);
                let s = (e - a.0) / (b.0 - a.0);
                a.1 * (1.0 - s) + b.1 * s
            }
        }
    }

    /// Energies outside this interval carry no (or negligible) weight.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            ProfileKind::Delta => (self.center, self.center),
            ProfileKind::Rectangular => {
                let h = self.rect_half_width();
                (self.center - h, self.center + h)
            }
            ProfileKind::Gaussian => {
                (self.center - GAUSS_CUT * self.width, self.center + GAUSS_CUT * self.width)
            }
            ProfileKind::Custom(t) => (t[0].0, t[t.len() - 1].0),
        }
    }

    /// Profile mass above `e`.
    pub fn mass_above(&self, e: f64) -> f64 {
        match &self.kind {
            ProfileKind::Delta => {
                if self.center > e { 1.0 } else { 0.0 }
            }
            ProfileKind::Rectangular => {
                let (lo, hi) = self.support();
                ((hi - e.max(lo)) / (hi - lo)).clamp(0.0, 1.0)
            }
            ProfileKind::Gaussian => {
                0.5 * libm::erfc((e - self.center) / (self.width * 2f64.sqrt()))
            }
            ProfileKind::Custom(t) => t
                .windows(2)
                .map(|w| {
                    let lo = w[0].0.max(e);
                    if lo >= w[1].0 {
                        0.0
                    } else {
                        (w[1].0 - lo) * (self.density(lo) + w[1].1) / 2.0
                    }
                })
                .sum(),
        }
    }
}

/// Law of the random magnitudes `r_k`; all have unit mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MagnitudeDistribution {
    /// `r ~ Exp(1)`.
    #[default]
    Exponential,
    /// `r = z²`, `z` real standard normal.
    SquaredRealNormal,
    /// `r = |z|²`, `z` complex normal with `⟨|z|²⟩ = 1`.
    SquaredComplexNormal,
}

impl MagnitudeDistribution {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential => Exp1.sample(rng),
            Self::SquaredRealNormal => {
                let z: f64 = StandardNormal.sample(rng);
                z * z
            }
            Self::SquaredComplexNormal => {
                let x: f64 = StandardNormal.sample(rng);
                let y: f64 = StandardNormal.sample(rng);
                (x * x + y * y) / 2.0
            }
        }
    }
}

impl std::str::FromStr for MagnitudeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(Self::Exponential),
            "squared-real-normal" | "goe" => Ok(Self::SquaredRealNormal),
            "squared-complex-normal" | "gue" => Ok(Self::SquaredComplexNormal),
            other => Err(Error::InvalidArgument(format!("unknown magnitude law {other:?}"))),
        }
    }
}

/// Random-state ensemble: profile, magnitude law and seed. Phases are
/// always uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomStateSpec {
    pub profile: EnergyProfile,
    pub magnitudes: MagnitudeDistribution,
    pub seed: u64,
}

/// Mean ensemble weights `ρ(ε_k)/ν(ε_k)`, normalized over the levels with
/// support.
#[derive(Debug, Clone)]
pub struct LevelWeights {
    pub levels: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Levels and normalized weights of a profile on the trusted spectrum.
pub fn profile_weights(
    profile: &EnergyProfile,
    dec: &EigenDecomposition,
    dos: &DensityOfStates,
) -> Result<LevelWeights> {
    let top = dec.converged_max_energy().ok_or(Error::EmptyWindow {
        lo: profile.support().0,
        hi: profile.support().1,
    })?;
    let lost = profile.mass_above(top);
    if lost > MAX_LOST_MASS {
        return Err(Error::ProfileOutsideWindow { lost_mass: lost });
    }
    if let ProfileKind::Delta = profile.kind {
        let trusted = &dec.energies()[..dec.n_converged()];
        let k = trusted
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - profile.center).abs().total_cmp(&(b.1 - profile.center).abs()))
            .map(|(k, _)| k)
            .ok_or(Error::EmptyWindow { lo: profile.center, hi: profile.center })?;
        return Ok(LevelWeights { levels: vec![k], weights: vec![1.0] });
    }
    let (lo, hi) = profile.support();
    let range = dec.levels_in(lo, hi);
    let mut levels = Vec::with_capacity(range.len());
    let mut weights = Vec::with_capacity(range.len());
    for k in range {
        let e = dec.energies()[k];
        let rho = profile.density(e);
        if rho > 0.0 {
            levels.push(k);
            weights.push(rho / dos.nu_at(e)?);
        }
    }
    let total: f64 = weights.iter().sum();
    if levels.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(LevelWeights { levels, weights })
}

/// Coefficients of one random state over the levels of `weights`:
/// `|c_k|² ∝ r_k p_k` with uniform phases, normalized exactly.
pub fn random_coefficients<R: Rng>(
    weights: &LevelWeights,
    magnitudes: MagnitudeDistribution,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let mut c: Vec<Complex64> = weights
        .weights
        .iter()
        .map(|&p| {
            let r = magnitudes.sample(rng);
            let phase = 2.0 * PI * rng.random::<f64>();
            Complex64::from_polar((r * p).sqrt(), phase)
        })
        .collect();
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if !(norm > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let s = norm.sqrt().recip();
    c.iter_mut().for_each(|z| *z *= s);
    Ok(c)
}

/// A random state in the eigenbasis: `Σ c_k φ_k` over `levels`.
#[derive(Debug, Clone)]
pub struct RandomState {
    pub levels: Vec<usize>,
    pub coefficients: Vec<Complex64>,
}

/// Member `index` of the ensemble described by `spec`.
pub fn sample_random_state(
    spec: &RandomStateSpec,
    dec: &EigenDecomposition,
    dos: &DensityOfStates,
    index: u64,
) -> Result<RandomState> {
    let weights = profile_weights(&spec.profile, dec, dos)?;
    let mut rng = substream(spec.seed, Purpose::RandomState, index);
    let coefficients = random_coefficients(&weights, spec.magnitudes, &mut rng)?;
    Ok(RandomState { levels: weights.levels, coefficients })
}

/// Shell-averaged Husimi functions of a batch of states given by their
/// coefficients over the table's levels (one column per state).
fn batch_state_husimi(table_re: MatRef<'_, f64>, table_im: MatRef<'_, f64>, states: &[Vec<Complex64>]) -> faer::Mat<f64> {
    let n_lev = table_re.ncols();
    let c_re = faer::Mat::<f64>::from_fn(n_lev, states.len(), |k, s| states[s][k].re);
    let c_im = faer::Mat::<f64>::from_fn(n_lev, states.len(), |k, s| states[s][k].im);
    // ⟨ψ|x⟩ = Σ c_k* ⟨φ_k|x⟩
    let re = &table_re * &c_re + &table_im * &c_im;
    let im = &table_im * &c_re - &table_re * &c_im;
    faer::Mat::<f64>::from_fn(re.nrows(), re.ncols(), |i, s| {
        re[(i, s)] * re[(i, s)] + im[(i, s)] * im[(i, s)]
    })
}

/// Outcome of an ensemble dimensionality measurement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnsembleDimensionality {
    /// `[⟨⟨𝒬_ψ⟩_ε⟩_ψ]⁻¹`.
    pub dimensionality: Estimate,
    /// The ensemble- and shell-averaged Husimi value.
    pub mean_husimi: Estimate,
    pub n_states: usize,
    pub n_levels: usize,
}

/// Averages the Husimi functions of sampled states over a shell.
///
/// `states` yields coefficient vectors over `levels`; the error combines the
/// state-to-state spread with the shell sampling error of the averaged
/// Husimi function.
pub fn ensemble_shell_average(
    dec: &EigenDecomposition,
    levels: &[usize],
    states: &[Vec<Complex64>],
    sample: &ShellSample,
) -> Result<EnsembleDimensionality> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if states.is_empty() {
        return Err(Error::InvalidArgument("need at least one random state".into()));
    }
    let table = OverlapTable::compute(dec, levels, &sample.points)?;
    let (re, im) = table.parts();
    let h = batch_state_husimi(re, im, states);
    let per_state: Vec<f64> = (0..states.len())
        .map(|s| {
            let col: Vec<f64> = (0..h.nrows()).map(|i| h[(i, s)]).collect();
            weighted_mean(&sample.weights, &col, DEFAULT_BATCHES).value
        })
        .collect();
    let averaged: Vec<f64> = (0..h.nrows())
        .map(|i| (0..states.len()).map(|s| h[(i, s)]).sum::<f64>() / states.len() as f64)
        .collect();
    let shell = weighted_mean(&sample.weights, &averaged, DEFAULT_BATCHES);
    let spread = mean_stderr(&per_state);
    let stderr = if states.len() > 1 { shell.stderr.hypot(spread.stderr) } else { shell.stderr };
    let mean = Estimate::new(shell.value, stderr);
    if !(mean.value > 0.0) {
        return Err(Error::ZeroAverage);
    }
    Ok(EnsembleDimensionality {
        dimensionality: mean.recip(),
        mean_husimi: mean,
        n_states: states.len(),
        n_levels: levels.len(),
    })
}

/// Empirical dimensionality `D(ε, ρ_R)` from `n_states` ensemble members,
/// with `sample` the shell at the profile centre.
pub fn dimensionality_empirical(
    spec: &RandomStateSpec,
    dec: &EigenDecomposition,
    dos: &DensityOfStates,
    sample: &ShellSample,
    n_states: usize,
) -> Result<EnsembleDimensionality> {
    check_centre(&spec.profile, sample)?;
    let weights = profile_weights(&spec.profile, dec, dos)?;
    let states = (0..n_states as u64)
        .map(|i| {
            let mut rng = substream(spec.seed, Purpose::RandomState, i);
            random_coefficients(&weights, spec.magnitudes, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    ensemble_shell_average(dec, &weights.levels, &states, sample)
}

fn check_centre(profile: &EnergyProfile, sample: &ShellSample) -> Result<()> {
    if (profile.center - sample.epsilon).abs() > 1e-9 * (1.0 + profile.center.abs()) {
        return Err(Error::InvalidArgument(format!(
            "shell at ε = {} but profile centred at {}",
            sample.epsilon, profile.center
        )));
    }
    Ok(())
}

/// Semianalytic `D(ε, ρ_R) = [Σ_k p_k ⟨𝒬_φk⟩_ε]⁻¹` with the eigenstate
/// averages replaced by their Gaussian approximation.
pub fn dimensionality_semianalytic(
    profile: &EnergyProfile,
    dec: &EigenDecomposition,
    dos: &DensityOfStates,
    sample: &ShellSample,
) -> Result<Estimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let weights = profile_weights(profile, dec, dos)?;
    let terms: Vec<(f64, f64)> = weights
        .levels
        .iter()
        .zip(&weights.weights)
        .map(|(&k, &p)| {
            let e = dec.energies()[k];
            Ok((e, p / ((2.0 * PI).sqrt() * dos.nu_at(e)?)))
        })
        .collect::<Result<_>>()?;
    let eps = sample.epsilon;
    let values: Vec<f64> = sample
        .points
        .par_iter()
        .map(|x| {
            let s = sigma_x_analytic(x, &sample.params)?;
            if s <= 0.0 {
                return Err(Error::ZeroWidth);
            }
            let two_s2 = 2.0 * s * s;
            Ok(terms.iter().map(|&(e, c)| c * (-(e - eps) * (e - eps) / two_s2).exp()).sum::<f64>() / s)
        })
        .collect::<Result<_>>()?;
    let avg = weighted_mean(&sample.weights, &values, DEFAULT_BATCHES);
    if !(avg.value > 0.0) {
        return Err(Error::ZeroAverage);
    }
    Ok(avg.recip())
}

fn widths(sample: &ShellSample) -> Result<Vec<f64>> {
    sample
        .points
        .par_iter()
        .map(|x| {
            let s = sigma_x_analytic(x, &sample.params)?;
            if s > 0.0 { Ok(s) } else { Err(Error::ZeroWidth) }
        })
        .collect()
}

/// Closed-form rectangular dimensionality
/// `2√3 ν(ε) σ_r / ⟨erf(√(3/2) σ_r/σ_x)⟩`.
pub fn dimensionality_rect_closed(sigma_r: f64, sample: &ShellSample) -> Result<Estimate> {
    if !(sigma_r > 0.0) {
        return Err(Error::InvalidArgument(format!("σ_r must be positive, got {sigma_r}")));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let values: Vec<f64> = widths(sample)?.iter().map(|s| erf(1.5f64.sqrt() * sigma_r / s)).collect();
    let avg = weighted_mean(&sample.weights, &values, DEFAULT_BATCHES);
    Ok(sample.nu.scale(2.0 * 3f64.sqrt() * sigma_r).mul(avg.recip()))
}

/// Closed-form Gaussian dimensionality
/// `√(2π) ν(ε) σ_g / ⟨[1 + (σ_x/σ_g)²]^{−1/2}⟩`.
pub fn dimensionality_gauss_closed(sigma_g: f64, sample: &ShellSample) -> Result<Estimate> {
    if !(sigma_g > 0.0) {
        return Err(Error::InvalidArgument(format!("σ_g must be positive, got {sigma_g}")));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let values: Vec<f64> = widths(sample)?
        .iter()
        .map(|s| (1.0 + (s / sigma_g).powi(2)).sqrt().recip())
        .collect();
    let avg = weighted_mean(&sample.weights, &values, DEFAULT_BATCHES);
    Ok(sample.nu.scale((2.0 * PI).sqrt() * sigma_g).mul(avg.recip()))
}

/// Wide-profile limit of the rectangular form, `2√3 ν σ_r`.
pub fn rect_wide_limit(nu: f64, sigma_r: f64) -> f64 {
    2.0 * 3f64.sqrt() * nu * sigma_r
}

/// Wide-profile limit of the Gaussian form, `√(2π) ν σ_g`.
pub fn gauss_wide_limit(nu: f64, sigma_g: f64) -> f64 {
    (2.0 * PI).sqrt() * nu * sigma_g
}

/// Common narrow-profile floor `√(2π) ν σ̄_c`.
pub fn narrow_floor(nu: f64, sigma_bar: f64) -> f64 {
    (2.0 * PI).sqrt() * nu * sigma_bar
}

/// Complex standard-normal vector of length `n`, normalized.
fn haar_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// `⟨|⟨Ψ|Φ⟩|²⟩` over Haar-random `Φ` in dimension `n` for a fixed unit `Ψ`;
/// equals `1/n`.
pub fn haar_overlap_average(n: usize, n_samples: usize, seed: u64) -> Result<Estimate> {
    let mut psi = vec![Complex64::new(0.0, 0.0); n.max(1)];
    psi[0] = Complex64::new(1.0, 0.0);
    haar_subspace_overlap_average(n, &psi, n_samples, seed)
}

/// `⟨|⟨Ψ|Φ⟩|²⟩` with `Φ` Haar-random in the span of the first `n_sub`
/// coordinates and `Ψ` an arbitrary unit vector of any length ≥ `n_sub`.
/// The inverse is at least `n_sub`, with equality when `Ψ` lies in the
/// subspace.
pub fn haar_subspace_overlap_average(
    n_sub: usize,
    psi: &[Complex64],
    n_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if n_sub == 0 || psi.len() < n_sub || n_samples == 0 {
        return Err(Error::InvalidArgument(
            "need 1 ≤ n_sub ≤ len(Ψ) and at least one sample".into(),
        ));
    }
    const CHUNK: usize = 1024;
    let n_chunks = n_samples.div_ceil(CHUNK);
    let values: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let len = CHUNK.min(n_samples - c * CHUNK);
            let mut rng = substream(seed, Purpose::Haar, c as u64);
            (0..len)
                .map(|_| {
                    let phi = haar_vector(n_sub, &mut rng);
                    psi[..n_sub].iter().zip(&phi).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(mean_stderr(&values))
}

/// Random-phase reduction at a fixed point: the phase average of
/// `|Σ_k a_k e^{iθ_k}|²` against `Σ_k |a_k|²`.
pub fn random_phase_average(amplitudes: &[Complex64], n_draws: usize, seed: u64) -> (Estimate, f64) {
    let diagonal: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let mut rng = substream(seed, Purpose::PhaseCheck, 0);
    let values: Vec<f64> = (0..n_draws)
        .map(|_| {
            amplitudes
                .iter()
                .map(|a| a * Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect();
    (mean_stderr(&values), diagonal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::sample_shell;
    use crate::model::{diagonalize, BasisSpec, ModelParams, ParitySector};

    #[test]
    fn profiles_are_normalized() {
        let rect = EnergyProfile::rectangular(-0.5, 0.1).unwrap();
        let gauss = EnergyProfile::gaussian(-0.5, 0.1).unwrap();
        let custom = EnergyProfile::custom(vec![(-1.0, 0.0), (-0.5, 2.0), (0.0, 0.0)]).unwrap();
        for p in [&rect, &gauss, &custom] {
            let (lo, hi) = p.support();
            let n = 200_000;
            let h = (hi - lo) / n as f64;
            let mass: f64 = (0..n).map(|i| p.density(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h;
            assert!((mass - 1.0).abs() < 1e-6, "{p:?}: {mass}");
            assert!((p.mass_above(lo - 1.0) - 1.0).abs() < 1e-9);
            assert!(p.mass_above(hi + 1.0) < 1e-12);
        }
        // standard deviation of the rectangle is σ_r
        let (lo, hi) = rect.support();
        assert!(((hi - lo) / 12f64.sqrt() - 0.1).abs() < 1e-15);
        assert!((custom.center + 0.5).abs() < 1e-12);
        assert!(EnergyProfile::rectangular(0.0, 0.0).is_err());
    }

    #[test]
    fn magnitude_laws_have_unit_mean() {
        let mut rng = substream(1, Purpose::RandomState, 0);
        for law in [
            MagnitudeDistribution::Exponential,
            MagnitudeDistribution::SquaredRealNormal,
            MagnitudeDistribution::SquaredComplexNormal,
        ] {
            let v: Vec<f64> = (0..200_000).map(|_| law.sample(&mut rng)).collect();
            let e = mean_stderr(&v);
            assert!((e.value - 1.0).abs() < 4.0 * e.stderr, "{law:?}: {e:?}");
            assert!(v.iter().all(|&r| r > 0.0));
        }
    }

    fn small_system() -> (ModelParams, EigenDecomposition, DensityOfStates) {
        let p = ModelParams::resonant(4.0).unwrap();
        let dec = diagonalize(&p, &BasisSpec::for_params(&p, 80, ParitySector::All)).unwrap();
        let dos = DensityOfStates::quadrature(&p, -2.1, 1.0, 200).unwrap();
        (p, dec, dos)
    }

    #[test]
    fn random_states_are_normalized_and_delta_picks_one_level() {
        let (_, dec, dos) = small_system();
        let spec = RandomStateSpec {
            profile: EnergyProfile::rectangular(-0.5, 0.2).unwrap(),
            magnitudes: MagnitudeDistribution::Exponential,
            seed: 3,
        };
        let s = sample_random_state(&spec, &dec, &dos, 0).unwrap();
        let norm: f64 = s.coefficients.iter().map(|c| c.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        let k = dec.levels_in(-0.6, 0.0).start;
        let delta = RandomStateSpec { profile: EnergyProfile::delta(dec.energies()[k]), ..spec };
        let s = sample_random_state(&delta, &dec, &dos, 5).unwrap();
        assert_eq!(s.levels, vec![k]);
        assert!((s.coefficients[0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ensemble_mean_follows_profile_over_density() {
        let (_, dec, dos) = small_system();
        let profile = EnergyProfile::gaussian(-0.6, 0.15).unwrap();
        let weights = profile_weights(&profile, &dec, &dos).unwrap();
        let n = 1000;
        let mut acc = vec![0.0; weights.levels.len()];
        let mut rng = substream(9, Purpose::RandomState, 0);
        for _ in 0..n {
            let c = random_coefficients(&weights, MagnitudeDistribution::Exponential, &mut rng).unwrap();
            for (a, z) in acc.iter_mut().zip(&c) {
                *a += z.norm_sqr() / n as f64;
            }
        }
        // bin levels in groups to beat per-level noise
        let bins = 4;
        let per = weights.levels.len() / bins;
        for b in 0..bins {
            let r = b * per..(b + 1) * per;
            let got: f64 = acc[r.clone()].iter().sum();
            let want: f64 = weights.weights[r].iter().sum();
            assert!((got / want - 1.0).abs() < 0.05, "bin {b}: {got} vs {want}");
        }
    }

    #[test]
    fn profile_beyond_trusted_window_is_rejected() {
        let (_, mut dec, dos) = small_system();
        dec.set_converged(dec.levels_in(-3.0, -0.5).end);
        let profile = EnergyProfile::rectangular(-0.5, 0.1).unwrap();
        assert!(matches!(
            profile_weights(&profile, &dec, &dos),
            Err(Error::ProfileOutsideWindow { .. })
        ));
    }

    #[test]
    fn delta_semianalytic_is_inverse_gaussian_average() {
        let (p, dec, dos) = small_system();
        let k = dec.levels_in(-0.7, 0.0).start;
        let e = dec.energies()[k];
        let sample = sample_shell(&p, e, 20_000, 2).unwrap();
        let d = dimensionality_semianalytic(&EnergyProfile::delta(e), &dec, &dos, &sample).unwrap();
        let g = crate::husimi::gaussian_profile_average(e, &sample, dos.nu_at(e).unwrap()).unwrap();
        assert!((d.value * g.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_approach_their_limits() {
        let p = ModelParams::resonant(100.0).unwrap();
        let s = sample_shell(&p, -0.5, 200_000, 6).unwrap();
        let inv = crate::classical::shell_average(&s, |x| 1.0 / sigma_x_analytic(x, &p).unwrap()).unwrap();
        let sigma_bar = 1.0 / inv.value;
        let floor = narrow_floor(s.nu.value, sigma_bar);
        let tiny = sigma_bar / 1000.0;
        let r = dimensionality_rect_closed(tiny, &s).unwrap();
        let g = dimensionality_gauss_closed(tiny, &s).unwrap();
        assert!((r.value / floor - 1.0).abs() < 1e-3);
        assert!((g.value / floor - 1.0).abs() < 1e-3);
        let wide = 100.0 * sigma_bar;
        let r = dimensionality_rect_closed(wide, &s).unwrap();
        let g = dimensionality_gauss_closed(wide, &s).unwrap();
        assert!((r.value / rect_wide_limit(s.nu.value, wide) - 1.0).abs() < 1e-3);
        assert!((g.value / gauss_wide_limit(s.nu.value, wide) - 1.0).abs() < 1e-3);
        assert!(r.value > g.value);
    }

    #[test]
    fn haar_small_cases() {
        assert_eq!(haar_overlap_average(1, 100, 1).unwrap().value, 1.0);
        let e = haar_overlap_average(16, 100_000, 2).unwrap();
        assert!((e.value - 1.0 / 16.0).abs() < 3.0 * e.stderr);
        // Ψ half outside an 8-dimensional subspace
        let mut psi = vec![Complex64::new(0.0, 0.0); 12];
        psi[0] = Complex64::new(0.5f64.sqrt(), 0.0);
        psi[10] = Complex64::new(0.0, 0.5f64.sqrt());
        let e = haar_subspace_overlap_average(8, &psi, 50_000, 3).unwrap();
        assert!(1.0 / e.value >= 8.0);
    }

    #[test]
    fn random_phases_remove_cross_terms() {
        let a: Vec<Complex64> =
            (0..12).map(|k| Complex64::from_polar(1.0 / (1.0 + k as f64), 0.3 * k as f64)).collect();
        let (avg, diag) = random_phase_average(&a, 10_000, 4);
        assert!((avg.value - diag).abs() < 3.0 * avg.stderr);
    }
}
