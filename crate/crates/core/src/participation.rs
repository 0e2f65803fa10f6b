//! Participation ratio and random states on rectangular energy windows.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::ShellSample;
use crate::effdim::effective_dimension_from_sample;
use crate::ensembles::{dimensionality_rect_closed, ensemble_shell_average};
use crate::model::EigenDecomposition;
use crate::rng::{substream, Purpose};
use crate::stats::{mean_stderr, Estimate};
use crate::{Error, Result};

/// `P_R = (Σ|c_k|²)² / Σ|c_k|⁴`, which is `(Σ|c_k|⁴)⁻¹` for normalized `c`.
pub fn participation_ratio(c: &[Complex64]) -> Result<f64> {
    let (s2, s4) = c.iter().fold((0.0, 0.0), |(a, b), z| {
        let n = z.norm_sqr();
        (a + n, b + n * n)
    });
    if !(s4 > 0.0) {
        return Err(Error::ZeroWeights);
    }
    Ok(s2 * s2 / s4)
}

/// Distribution of the raw window amplitudes `z_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeKind {
    /// Real standard normal.
    Goe,
    /// Complex standard normal.
    Gue,
}

impl AmplitudeKind {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Complex64 {
        match self {
            Self::Goe => Complex64::new(StandardNormal.sample(rng), 0.0),
            Self::Gue => {
                let (x, y): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
                Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    /// Limit of `⟨P_R⟩/N` for `N` normalized amplitudes.
    pub fn pr_fraction(&self) -> f64 {
        match self {
            Self::Goe => 1.0 / 3.0,
            Self::Gue => 1.0 / 2.0,
        }
    }
}

impl std::str::FromStr for AmplitudeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "goe" => Ok(Self::Goe),
            "gue" => Ok(Self::Gue),
            other => Err(Error::InvalidArgument(format!("unknown amplitude kind {other:?}"))),
        }
    }
}

/// Trusted levels with `ε_k ∈ [lo, hi]`, optionally only those of positive
/// parity.
pub fn window_levels(dec: &EigenDecomposition, lo: f64, hi: f64, parity_filter: bool) -> Result<Vec<usize>> {
    match dec.converged_max_energy() {
        Some(top) if hi <= top => {}
        _ => return Err(Error::WindowNotConverged { lo, hi }),
    }
    let levels: Vec<usize> = dec
        .levels_in(lo, hi)
        .filter(|&k| !parity_filter || dec.parities()[k] == 1)
        .collect();
    if levels.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    Ok(levels)
}

/// Normalized random state over `levels`.
#[derive(Debug, Clone)]
pub struct WindowState {
    pub levels: Vec<usize>,
    pub coefficients: Vec<Complex64>,
}

fn window_coefficients<R: Rng>(n: usize, kind: AmplitudeKind, rng: &mut R) -> Vec<Complex64> {
    loop {
        let z: Vec<Complex64> = (0..n).map(|_| kind.sample(rng)).collect();
        let norm: f64 = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return z.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Member `index` of the rectangular-window ensemble.
pub fn rect_window_state(
    dec: &EigenDecomposition,
    lo: f64,
    hi: f64,
    kind: AmplitudeKind,
    parity_filter: bool,
    seed: u64,
    index: u64,
) -> Result<WindowState> {
    let levels = window_levels(dec, lo, hi, parity_filter)?;
    let mut rng = substream(seed, Purpose::Window, index);
    let coefficients = window_coefficients(levels.len(), kind, &mut rng);
    Ok(WindowState { levels, coefficients })
}

/// First member of the rectangular-window ensemble for `seed`.
pub fn rect_window_random_state(
    dec: &EigenDecomposition,
    lo: f64,
    hi: f64,
    kind: AmplitudeKind,
    parity_filter: bool,
    seed: u64,
) -> Result<WindowState> {
    rect_window_state(dec, lo, hi, kind, parity_filter, seed, 0)
}

fn window_ensemble(n_levels: usize, kind: AmplitudeKind, n_states: usize, seed: u64) -> Vec<Vec<Complex64>> {
    (0..n_states)
        .into_par_iter()
        .map(|i| window_coefficients(n_levels, kind, &mut substream(seed, Purpose::Window, i as u64)))
        .collect()
}

/// Ensemble mean of `P_R` for `n_states` window states of size `n_levels`.
pub fn mean_participation(n_levels: usize, kind: AmplitudeKind, n_states: usize, seed: u64) -> Result<Estimate> {
    if n_levels == 0 || n_states == 0 {
        return Err(Error::InvalidArgument("need a nonempty window and at least one state".into()));
    }
    let prs = window_ensemble(n_levels, kind, n_states, seed)
        .iter()
        .map(|c| participation_ratio(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_stderr(&prs))
}

/// `⟨|z|⁴⟩/⟨|z|²⟩²` from `n` draws, with a batch-means error.
pub fn moment_ratio(kind: AmplitudeKind, n: usize, seed: u64) -> Estimate {
    const BATCHES: usize = 64;
    let per = (n / BATCHES).max(1);
    let ratios: Vec<f64> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, Purpose::Window, b as u64);
            let (mut m2, mut m4) = (0.0, 0.0);
            for _ in 0..per {
                let a = kind.sample(&mut rng).norm_sqr();
                m2 += a;
                m4 += a * a;
            }
            let (m2, m4) = (m2 / per as f64, m4 / per as f64);
            m4 / (m2 * m2)
        })
        .collect();
    mean_stderr(&ratios)
}

/// One width of the participation-ratio sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    /// Window width `ε_f − ε_i`.
    pub width: f64,
    pub d_empirical: Estimate,
    pub d_closed: Estimate,
    /// Levels in the full window.
    pub k_size: usize,
    /// Positive-parity levels actually populated.
    pub k_filtered: usize,
    pub pr: Estimate,
    pub deff_floor: Estimate,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "width,D_empirical,D_empirical_stderr,D_closed,K_size,PR_mean,PR_stderr,Deff_floor";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.width,
            self.d_empirical.value,
            self.d_empirical.stderr,
            self.d_closed.value,
            self.k_size,
            self.pr.value,
            self.pr.stderr,
            self.deff_floor.value
        )
    }
}

/// For each window width centred on the shell energy: dimensionality of
/// parity-filtered GOE window states, the rectangular closed form, `|𝒦|`
/// and the mean participation ratio over `n_states` members.
pub fn pr_vs_dimensionality_sweep(
    dec: &EigenDecomposition,
    sample: &ShellSample,
    widths: &[f64],
    n_states: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if n_states == 0 {
        return Err(Error::InvalidArgument("sweep needs at least one state per width".into()));
    }
    let floor = effective_dimension_from_sample(sample)?.value;
    let centre = sample.epsilon;
    widths
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let (lo, hi) = (centre - w / 2.0, centre + w / 2.0);
            let k_size = window_levels(dec, lo, hi, false)?.len();
            let levels = window_levels(dec, lo, hi, true)?;
            let states = window_ensemble(
                levels.len(),
                AmplitudeKind::Goe,
                n_states,
                crate::rng::child_seed(seed, i as u64),
            );
            let prs = states.iter().map(|c| participation_ratio(c)).collect::<Result<Vec<_>>>()?;
            let d = ensemble_shell_average(dec, &levels, &states, sample)?;
            Ok(SweepRow {
                width: w,
                d_empirical: d.dimensionality,
                d_closed: dimensionality_rect_closed(w / (2.0 * 3f64.sqrt()), sample)?,
                k_size,
                k_filtered: levels.len(),
                pr: mean_stderr(&prs),
                deff_floor: floor,
            })
        })
        .collect()
}
