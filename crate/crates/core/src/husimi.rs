//! Husimi functions of eigenstates averaged over classical energy shells.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{ground_state_energy, sample_shell, PhasePoint, ShellSample, ATOMIC_DISK_R2};
use crate::coherent::{bloch_amplitudes, glauber_amplitudes, sigma_x_analytic, TAIL_WARNING};
use crate::model::EigenDecomposition;
use crate::rng::{substream, Purpose};
use crate::stats::{mean_stderr, weighted_mean, Estimate, DEFAULT_BATCHES};
use crate::{Error, Result};

/// Points per block of the overlap matrix product.
const POINT_BLOCK: usize = 256;

/// Factorized coherent state: `⟨n, k|x⟩ = glauber[n] · bloch[k]`.
struct Factors {
    glauber: Vec<Complex64>,
    bloch: Vec<Complex64>,
    tail: f64,
}

fn factors(x: &PhasePoint, dec: &EigenDecomposition) -> Result<Factors> {
    let spec = dec.spec();
    let bloch = bloch_amplitudes(x.atom_q, x.atom_p, spec.two_j)?;
    let (glauber, tail) = glauber_amplitudes(x.q, x.p, spec.j(), spec.n_max);
    Ok(Factors { glauber, bloch, tail })
}

fn warn_tail(max_tail: f64, dec: &EigenDecomposition) {
    if max_tail > TAIL_WARNING {
        log::warn!(
            "coherent states leak up to {max_tail:e} beyond n_max={}; Husimi values are truncated",
            dec.spec().n_max
        );
    }
}

fn check_trusted(dec: &EigenDecomposition, level: usize) -> Result<()> {
    if level >= dec.n_converged() {
        let e = dec.energies().get(level).copied().unwrap_or(f64::NAN);
        return Err(Error::WindowNotConverged { lo: e, hi: e });
    }
    Ok(())
}

/// Nonzero components `(n, k, coefficient)` of one eigenvector.
fn sparse_vector(dec: &EigenDecomposition, level: usize) -> Vec<(usize, usize, f64)> {
    dec.basis()
        .states()
        .iter()
        .zip(dec.vector(level))
        .filter(|(_, &c)| c != 0.0)
        .map(|(&(n, k), &c)| (n as usize, k as usize, c))
        .collect()
}

/// `⟨φ_k|x⟩` for one level at many points.
pub fn level_overlaps(
    dec: &EigenDecomposition,
    level: usize,
    points: &[PhasePoint],
) -> Result<Vec<Complex64>> {
    let v = sparse_vector(dec, level);
    let results: Vec<Result<(Complex64, f64)>> = points
        .par_iter()
        .map(|x| {
            let f = factors(x, dec)?;
            let overlap: Complex64 = v.iter().map(|&(n, k, c)| f.glauber[n] * f.bloch[k] * c).sum();
            Ok((overlap, f.tail))
        })
        .collect();
    let mut out = Vec::with_capacity(points.len());
    let mut max_tail: f64 = 0.0;
    for r in results {
        let (o, t) = r?;
        out.push(o);
        max_tail = max_tail.max(t);
    }
    warn_tail(max_tail, dec);
    Ok(out)
}

/// Overlaps `⟨φ_k|x_i⟩` for a set of levels and points, row-major
/// `[point][level]`.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    pub levels: Vec<usize>,
    pub n_points: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl OverlapTable {
    /// Dense evaluation through matrix products, one parity block at a time.
    pub fn compute(dec: &EigenDecomposition, levels: &[usize], points: &[PhasePoint]) -> Result<Self> {
        let n_lev = levels.len();
        let n_pts = points.len();
        let mut re = vec![0.0; n_pts * n_lev];
        let mut im = vec![0.0; n_pts * n_lev];
        let states = dec.basis().states();
        let mut max_tail: f64 = 0.0;
        for parity in [1i8, -1] {
            let cols: Vec<(usize, usize)> = levels
                .iter()
                .enumerate()
                .filter(|(_, &l)| dec.parities()[l] == parity)
                .map(|(c, &l)| (c, l))
                .collect();
            if cols.is_empty() {
                continue;
            }
            let rows: Vec<usize> =
                (0..states.len()).filter(|&r| dec.basis().parity(r) == parity).collect();
            let v = Mat::<f64>::from_fn(rows.len(), cols.len(), |r, c| {
                dec.vector(cols[c].1)[rows[r]]
            });
            for block in (0..n_pts).step_by(POINT_BLOCK) {
                let end = (block + POINT_BLOCK).min(n_pts);
                let fs: Vec<Factors> = points[block..end]
                    .par_iter()
                    .map(|x| factors(x, dec))
                    .collect::<Result<_>>()?;
                max_tail = fs.iter().fold(max_tail, |m, f| m.max(f.tail));
                let amp = |i: usize, r: usize| {
                    let (n, k) = states[rows[r]];
                    fs[i].glauber[n as usize] * fs[i].bloch[k as usize]
                };
                let a_re = Mat::<f64>::from_fn(end - block, rows.len(), |i, r| amp(i, r).re);
                let a_im = Mat::<f64>::from_fn(end - block, rows.len(), |i, r| amp(i, r).im);
                let p_re = &a_re * &v;
                let p_im = &a_im * &v;
                for i in 0..end - block {
                    for (c, &(col, _)) in cols.iter().enumerate() {
                        re[(block + i) * n_lev + col] = p_re[(i, c)];
                        im[(block + i) * n_lev + col] = p_im[(i, c)];
                    }
                }
            }
        }
        warn_tail(max_tail, dec);
        Ok(Self { levels: levels.to_vec(), n_points: n_pts, re, im })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// `⟨φ_k|x_i⟩` with `k = levels[col]`.
    pub fn overlap(&self, point: usize, col: usize) -> Complex64 {
        let i = point * self.levels.len() + col;
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn husimi(&self, point: usize, col: usize) -> f64 {
        self.overlap(point, col).norm_sqr()
    }

    /// `|⟨ψ|x_i⟩|²` for `ψ = Σ c_k φ_k` with coefficients over the table's
    /// levels.
    pub fn state_husimi(&self, coefficients: &[Complex64]) -> Vec<f64> {
        assert_eq!(coefficients.len(), self.n_levels());
        (0..self.n_points)
            .map(|i| {
                let row = i * self.n_levels();
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, coeff) in coefficients.iter().enumerate() {
                    if coeff.re != 0.0 || coeff.im != 0.0 {
                        acc += coeff.conj() * Complex64::new(self.re[row + c], self.im[row + c]);
                    }
                }
                acc.norm_sqr()
            })
            .collect()
    }

    /// Real and imaginary parts as `points × levels` matrices.
    pub fn parts(&self) -> (MatRef<'_, f64>, MatRef<'_, f64>) {
        let (m, n) = (self.n_points, self.n_levels());
        (MatRef::from_row_major_slice(&self.re, m, n), MatRef::from_row_major_slice(&self.im, m, n))
    }

    /// Husimi value of one column at every point.
    pub fn column_husimi(&self, col: usize) -> Vec<f64> {
        (0..self.n_points).map(|i| self.husimi(i, col)).collect()
    }
}

/// `⟨𝒬_φk⟩_ε` over the shell of `sample`.
pub fn eigenstate_shell_average(
    dec: &EigenDecomposition,
    level: usize,
    sample: &ShellSample,
) -> Result<Estimate> {
    check_trusted(dec, level)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let values: Vec<f64> =
        level_overlaps(dec, level, &sample.points)?.iter().map(|o| o.norm_sqr()).collect();
    Ok(weighted_mean(&sample.weights, &values, DEFAULT_BATCHES))
}

/// Dimensionality `⟨𝒬_φk⟩⁻¹` of an eigenstate on its own shell.
pub fn eigenstate_dimensionality(
    dec: &EigenDecomposition,
    level: usize,
    sample: &ShellSample,
) -> Result<Estimate> {
    let avg = eigenstate_shell_average(dec, level, sample)?;
    if !(avg.value > 0.0) {
        return Err(Error::ZeroAverage);
    }
    Ok(avg.recip())
}

/// Gaussian semiclassical estimate of `⟨𝒬_φk⟩_ε` for a level at `eps_k`,
/// with `ε` the energy of `sample`:
/// `⟨exp(−(ε_k − ε)²/2σ_x²)/σ_x⟩_ε / (√(2π) ν(ε_k))`.
pub fn gaussian_profile_average(
    eps_k: f64,
    sample: &ShellSample,
    nu_at_eps_k: f64,
) -> Result<Estimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let de = eps_k - sample.epsilon;
    let values: Vec<f64> = sample
        .points
        .par_iter()
        .map(|x| {
            let s = sigma_x_analytic(x, &sample.params)?;
            if s <= 0.0 {
                return Err(Error::ZeroWidth);
            }
            Ok((-de * de / (2.0 * s * s)).exp() / s)
        })
        .collect::<Result<_>>()?;
    let avg = weighted_mean(&sample.weights, &values, DEFAULT_BATCHES);
    Ok(avg.scale(1.0 / ((2.0 * PI).sqrt() * nu_at_eps_k)))
}

/// One point of an eigenstate profile.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfilePoint {
    pub epsilon: f64,
    pub value: f64,
    pub stderr: f64,
}

/// `⟨𝒬_φk⟩_ε` as a function of the shell energy `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenstateShellProfile {
    pub level: usize,
    pub eps_k: f64,
    pub grid: Vec<ProfilePoint>,
}

/// Grid points of a profile when the caller does not choose.
pub const PROFILE_POINTS: usize = 41;
/// Half-width of the profile grid in units of `σ̄_c`.
pub const PROFILE_HALF_WIDTH: f64 = 5.0;

impl EigenstateShellProfile {
    pub fn step(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.grid[1].epsilon - self.grid[0].epsilon
        }
    }

    pub fn peak(&self) -> &ProfilePoint {
        self.grid.iter().max_by(|a, b| a.value.total_cmp(&b.value)).expect("profile has points")
    }

    /// Rises to a single maximum and falls after it, allowing dips of up to
    /// `sigmas` combined standard errors between neighbours.
    pub fn is_unimodal(&self, sigmas: f64) -> bool {
        let peak = self
            .grid
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.value.total_cmp(&b.1.value))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.grid.windows(2).enumerate().all(|(i, w)| {
            let slack = sigmas * w[0].stderr.hypot(w[1].stderr);
            if i < peak {
                w[1].value >= w[0].value - slack
            } else {
                w[1].value <= w[0].value + slack
            }
        })
    }

    /// Peak within one grid step of the eigenenergy.
    pub fn peaks_at_eigenenergy(&self) -> bool {
        (self.peak().epsilon - self.eps_k).abs() <= self.step() * (1.0 + 1e-9)
    }
}

/// Profile of one level on `points` shells spanning `eps_k ± half_width·σ̄`,
/// clipped to energies above the ground state.
pub fn eigenstate_shell_profile(
    dec: &EigenDecomposition,
    level: usize,
    sigma_bar: f64,
    points: usize,
    draws_per_shell: u64,
    seed: u64,
) -> Result<EigenstateShellProfile> {
    check_trusted(dec, level)?;
    if points < 2 || !(sigma_bar > 0.0) {
        return Err(Error::InvalidArgument("profile needs ≥ 2 points and σ̄ > 0".into()));
    }
    let eps_k = dec.energies()[level];
    let ground = ground_state_energy(dec.params());
    let lo = eps_k - PROFILE_HALF_WIDTH * sigma_bar;
    let step = 2.0 * PROFILE_HALF_WIDTH * sigma_bar / (points - 1) as f64;
    let mut grid = Vec::with_capacity(points);
    for i in 0..points {
        let epsilon = lo + step * i as f64;
        if epsilon <= ground {
            continue;
        }
        let sample = sample_shell(dec.params(), epsilon, draws_per_shell, seed.wrapping_add(i as u64))?;
        let avg = eigenstate_shell_average(dec, level, &sample)?;
        grid.push(ProfilePoint { epsilon, value: avg.value, stderr: avg.stderr });
    }
    Ok(EigenstateShellProfile { level, eps_k, grid })
}

/// `⟨Σ_k |⟨φ_k|x⟩|²⟩_ε` over the given levels; tends to one when the levels
/// span all states that overlap the shell.
pub fn shell_completeness(
    dec: &EigenDecomposition,
    levels: &[usize],
    sample: &ShellSample,
) -> Result<Estimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let table = OverlapTable::compute(dec, levels, &sample.points)?;
    let sums: Vec<f64> = (0..table.n_points)
        .map(|i| (0..table.n_levels()).map(|c| table.husimi(i, c)).sum())
        .collect();
    Ok(weighted_mean(&sample.weights, &sums, DEFAULT_BATCHES))
}

/// `(j/2π)² ∫ f(x) dx` by uniform sampling of the atomic disk times the
/// bosonic square `|q|, |p| ≤ half_width`.
pub fn phase_space_integral<F>(
    f: F,
    j: f64,
    half_width: f64,
    n_draws: u64,
    seed: u64,
) -> Estimate
where
    F: Fn(&PhasePoint) -> f64 + Sync + Send,
{
    const CHUNK: u64 = 1 << 12;
    let n_chunks = n_draws.div_ceil(CHUNK) as usize;
    let values: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let c = c as u64;
            let len = CHUNK.min(n_draws - c * CHUNK);
            let mut rng = substream(seed, Purpose::PhaseCheck, c);
            (0..len)
                .map(|_| {
                    let r2 = ATOMIC_DISK_R2 * rng.random::<f64>();
                    let phi = 2.0 * PI * rng.random::<f64>();
                    let r = r2.sqrt();
                    let x = PhasePoint::new(
                        half_width * (2.0 * rng.random::<f64>() - 1.0),
                        half_width * (2.0 * rng.random::<f64>() - 1.0),
                        r * phi.cos(),
                        r * phi.sin(),
                    );
                    f(&x)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let box_volume = PI * ATOMIC_DISK_R2 * (2.0 * half_width).powi(2);
    let cell = (j / (2.0 * PI)).powi(2);
    mean_stderr(&values).scale(box_volume * cell)
}

/// Exact value of [`phase_space_integral`] of any normalized Husimi
/// function: the Bloch resolution of identity carries `(2j+1)/4π`, not
/// `j/2π`, so the semiclassical cell overcounts by `(2j+1)/2j`.
pub fn husimi_phase_space_norm_exact(j: f64) -> f64 {
    2.0 * j / (2.0 * j + 1.0)
}
