use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::shell::planck_cell;
use super::{atomic_energy, min_energy_at_atomic, ATOMIC_DISK_R2};
use crate::model::ModelParams;
use crate::rng::{substream, Purpose};
use crate::{Error, Result};

const RADIAL_NODES: usize = 40_000;

/// Angular integrals over the atomic disk at radius `r`.
///
/// At polar angle `φ` the lowest energy is `a − b cos²φ`; the shell at `ε`
/// exists where `cos²φ > (a − ε)/b`.
#[inline]
fn radial_coefficients(params: &ModelParams, r: f64) -> (f64, f64) {
    let r2 = r * r;
    let a = atomic_energy(params, r2);
    let b = a - min_energy_at_atomic(params, r, r2);
    (a, b)
}

/// Fraction of the circle of radius `r` on which the shell is non-empty.
#[inline]
fn open_fraction(params: &ModelParams, r: f64, epsilon: f64) -> f64 {
    let (a, b) = radial_coefficients(params, r);
    let u = epsilon - a;
    if u >= 0.0 {
        return 1.0;
    }
    if b <= 0.0 || -u >= b {
        return 0.0;
    }
    2.0 / PI * (-u / b).sqrt().acos()
}

/// `∫ dφ (ε − a + b cos²φ)₊` over the full circle.
#[inline]
fn angular_excess(params: &ModelParams, r: f64, epsilon: f64) -> f64 {
    let (a, b) = radial_coefficients(params, r);
    let u = epsilon - a;
    if u >= 0.0 {
        return 2.0 * PI * u + PI * b;
    }
    if b <= 0.0 || -u >= b {
        return 0.0;
    }
    let phi0 = (-u / b).sqrt().acos();
    4.0 * (u * phi0 + b * (phi0 / 2.0 + (2.0 * phi0).sin() / 4.0))
}

fn radial_midpoint(f: impl Fn(f64) -> f64) -> f64 {
    let r_max = ATOMIC_DISK_R2.sqrt();
    let h = r_max / RADIAL_NODES as f64;
    (0..RADIAL_NODES).map(|i| (i as f64 + 0.5) * h).map(|r| r * f(r)).sum::<f64>() * h
}

/// Shell volume `∫ dx δ(h_cl − ε)` by one-dimensional radial quadrature.
///
/// Integrating the `(q, p)` plane exactly leaves `(2π/ω)` times the area of
/// the atomic region where the shell exists.
pub fn shell_volume_quadrature(params: &ModelParams, epsilon: f64) -> f64 {
    let area = radial_midpoint(|r| 2.0 * PI * open_fraction(params, r, epsilon));
    2.0 * PI / params.omega * area
}

/// Density of states `ν(ε)` from [`shell_volume_quadrature`].
pub fn nu_quadrature(params: &ModelParams, epsilon: f64) -> f64 {
    shell_volume_quadrature(params, epsilon) / planck_cell(params)
}

/// Semiclassical number of states with `h_cl ≤ ε`, i.e. `∫ ν`.
pub fn level_count_quadrature(params: &ModelParams, epsilon: f64) -> f64 {
    let integral = radial_midpoint(|r| angular_excess(params, r, epsilon));
    2.0 * PI / params.omega * integral / planck_cell(params)
}

/// `ν(ε)` tabulated on a uniform grid and linearly interpolated.
#[derive(Debug, Clone, Serialize)]
pub struct DensityOfStates {
    pub params: ModelParams,
    pub grid: Vec<f64>,
    pub nu: Vec<f64>,
    /// Monte Carlo standard errors; zero for the quadrature table.
    pub stderr: Vec<f64>,
}

/// Grid size used by callers that do not choose one.
pub const DEFAULT_GRID_POINTS: usize = 200;

fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || points < 2 {
        return Err(Error::InvalidArgument(format!(
            "density grid needs lo < hi and at least two points, got [{lo}, {hi}] × {points}"
        )));
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

impl DensityOfStates {
    /// Deterministic table from radial quadrature.
    pub fn quadrature(params: &ModelParams, lo: f64, hi: f64, points: usize) -> Result<Self> {
        let grid = uniform_grid(lo, hi, points)?;
        let nu = grid.par_iter().map(|&e| nu_quadrature(params, e)).collect();
        Ok(Self { params: *params, stderr: vec![0.0; grid.len()], grid, nu })
    }

    /// Monte Carlo table: one cloud of atomic points gives `ν` at every grid
    /// energy as the fraction of points whose minimal energy lies below it.
    pub fn sample(
        params: &ModelParams,
        lo: f64,
        hi: f64,
        points: usize,
        n_draws: u64,
        seed: u64,
    ) -> Result<Self> {
        let grid = uniform_grid(lo, hi, points)?;
        if n_draws == 0 {
            return Err(Error::InvalidArgument("density sample needs draws".into()));
        }
        const CHUNK: u64 = 1 << 15;
        let n_chunks = n_draws.div_ceil(CHUNK) as usize;
        let mut minima: Vec<f64> = (0..n_chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let c = c as u64;
                let len = CHUNK.min(n_draws - c * CHUNK);
                let mut rng = substream(seed, Purpose::DensityGrid, c);
                (0..len)
                    .map(|_| {
                        let r2 = ATOMIC_DISK_R2 * rng.random::<f64>();
                        let phi = 2.0 * PI * rng.random::<f64>();
                        min_energy_at_atomic(params, r2.sqrt() * phi.cos(), r2)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        minima.sort_by(f64::total_cmp);
        let n = n_draws as f64;
        let scale = 2.0 * PI / params.omega * PI * ATOMIC_DISK_R2 / planck_cell(params);
        let mut nu = Vec::with_capacity(grid.len());
        let mut stderr = Vec::with_capacity(grid.len());
        for &e in &grid {
            let f = minima.partition_point(|&m| m < e) as f64 / n;
            nu.push(scale * f);
            stderr.push(scale * (f * (1.0 - f) / n).sqrt());
        }
        Ok(Self { params: *params, grid, nu, stderr })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Interpolated `ν(ε)`; errors outside the tabulated range.
    pub fn nu_at(&self, epsilon: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(epsilon >= lo && epsilon <= hi) {
            return Err(Error::InvalidArgument(format!(
                "ε = {epsilon} outside the density table [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / (self.grid.len() - 1) as f64;
        let i = (((epsilon - lo) / step) as usize).min(self.grid.len() - 2);
        let t = (epsilon - self.grid[i]) / step;
        Ok(self.nu[i] * (1.0 - t) + self.nu[i + 1] * t)
    }
}
