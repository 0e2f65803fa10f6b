use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    atomic_energy, bloch_factor, ground_state_energy, q_roots_on_shell, PhasePoint, QRoots,
    ATOMIC_DISK_R2,
};
use crate::model::ModelParams;
use crate::rng::{substream, Purpose};
use crate::stats::{mean_stderr, weighted_mean, Estimate, KahanSum, DEFAULT_BATCHES};
use crate::{Error, Result};

/// Draws handled by one random substream.
const CHUNK: u64 = 1 << 15;

/// Quantile above which q-root weights are capped.
const WEIGHT_CAP_QUANTILE: f64 = 0.9999;

/// How the surface measure `δ(h_cl − ε) dx` is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShellMethod {
    /// Uniform `(Q, P)` on the Bloch disk. At fixed atomic variables the shell
    /// is a circle in the `(q, p)` plane carrying measure `2π/ω`, so accepted
    /// points get equal weight and a uniform angle.
    #[default]
    Polar,
    /// Uniform `(p, Q, P)` in a box, every real `q` root kept with weight
    /// `1/|∂h/∂q|`.
    QRoots,
}

impl std::str::FromStr for ShellMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polar" => Ok(Self::Polar),
            "q-roots" | "qroots" => Ok(Self::QRoots),
            other => Err(Error::InvalidArgument(format!("unknown shell method {other:?}"))),
        }
    }
}

/// Weighted point cloud representing one energy shell.
#[derive(Debug, Clone)]
pub struct ShellSample {
    pub params: ModelParams,
    pub epsilon: f64,
    pub method: ShellMethod,
    pub seed: u64,
    pub n_draws: u64,
    /// Measure of the region the raw draws come from.
    pub box_volume: f64,
    pub points: Vec<PhasePoint>,
    pub weights: Vec<f64>,
    /// `∫ dx δ(h_cl(x) − ε)`.
    pub volume: Estimate,
    /// `volume / (2π/j)²`.
    pub nu: Estimate,
    /// Fraction of total weight removed by the weight cap.
    pub capped_mass: f64,
}

#[derive(Serialize)]
struct ShellHeader<'a> {
    params: &'a ModelParams,
    epsilon: f64,
    method: ShellMethod,
    seed: u64,
    n_draws: u64,
    n_points: usize,
    box_volume: f64,
    volume: Estimate,
    nu: Estimate,
    capped_mass: f64,
}

impl ShellSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PhasePoint, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Columns `q,p,Q,P,w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "q,p,Q,P,w")?;
        for (x, w) in self.iter() {
            writeln!(out, "{},{},{},{},{}", x.q, x.p, x.atom_q, x.atom_p, w)?;
        }
        Ok(())
    }

    pub fn header_json(&self) -> serde_json::Value {
        serde_json::to_value(ShellHeader {
            params: &self.params,
            epsilon: self.epsilon,
            method: self.method,
            seed: self.seed,
            n_draws: self.n_draws,
            n_points: self.len(),
            box_volume: self.box_volume,
            volume: self.volume,
            nu: self.nu,
            capped_mass: self.capped_mass,
        })
        .expect("shell header serializes")
    }
}

/// Planck cell `(2π ħ_eff)²` of the four-dimensional phase space.
pub(crate) fn planck_cell(params: &ModelParams) -> f64 {
    let h = 2.0 * PI * params.hbar_eff();
    h * h
}

/// Shell sample with the default polar method.
pub fn sample_shell(
    params: &ModelParams,
    epsilon: f64,
    n_draws: u64,
    seed: u64,
) -> Result<ShellSample> {
    sample_shell_with(params, epsilon, n_draws, seed, ShellMethod::Polar)
}

pub fn sample_shell_with(
    params: &ModelParams,
    epsilon: f64,
    n_draws: u64,
    seed: u64,
    method: ShellMethod,
) -> Result<ShellSample> {
    let ground = ground_state_energy(params);
    if !(epsilon > ground) {
        return Err(Error::BelowGroundState { epsilon, ground });
    }
    if n_draws == 0 {
        return Err(Error::InvalidArgument("shell sample needs at least one draw".into()));
    }
    match method {
        ShellMethod::Polar => Ok(sample_polar(params, epsilon, n_draws, seed)),
        ShellMethod::QRoots => sample_q_roots(params, epsilon, ground, n_draws, seed),
    }
}

fn chunks(n_draws: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n_chunks = n_draws.div_ceil(CHUNK) as usize;
    (0..n_chunks).into_par_iter().map(move |c| {
        let c = c as u64;
        (c, CHUNK.min(n_draws - c * CHUNK))
    })
}

#[inline]
fn uniform_disk<R: Rng>(rng: &mut R) -> (f64, f64, f64) {
    let r2 = ATOMIC_DISK_R2 * rng.random::<f64>();
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = r2.sqrt();
    (r * phi.cos(), r * phi.sin(), r2)
}

fn sample_polar(params: &ModelParams, epsilon: f64, n_draws: u64, seed: u64) -> ShellSample {
    let (w, g) = (params.omega, params.gamma);
    let parts: Vec<Vec<PhasePoint>> = chunks(n_draws)
        .map(|(c, len)| {
            let mut rng = substream(seed, Purpose::Shell, c);
            let mut pts = Vec::new();
            for _ in 0..len {
                let (big_q, big_p, r2) = uniform_disk(&mut rng);
                let theta = 2.0 * PI * rng.random::<f64>();
                let centre = -2.0 * g * big_q * bloch_factor(r2) / w;
                let radius2 =
                    2.0 / w * (epsilon - atomic_energy(params, r2)) + centre * centre;
                if radius2 > 0.0 {
                    let radius = radius2.sqrt();
                    pts.push(PhasePoint::new(
                        centre + radius * theta.cos(),
                        radius * theta.sin(),
                        big_q,
                        big_p,
                    ));
                }
            }
            pts
        })
        .collect();
    let points: Vec<PhasePoint> = parts.into_iter().flatten().collect();
    let accepted = points.len() as f64;
    let n = n_draws as f64;
    let frac = accepted / n;
    let box_volume = PI * ATOMIC_DISK_R2;
    let scale = 2.0 * PI / w * box_volume;
    let volume = Estimate::new(scale * frac, scale * (frac * (1.0 - frac) / n).sqrt());
    let nu = volume.scale(1.0 / planck_cell(params));
    ShellSample {
        params: *params,
        epsilon,
        method: ShellMethod::Polar,
        seed,
        n_draws,
        box_volume,
        weights: vec![1.0; points.len()],
        points,
        volume,
        nu,
        capped_mass: 0.0,
    }
}

fn sample_q_roots(
    params: &ModelParams,
    epsilon: f64,
    ground: f64,
    n_draws: u64,
    seed: u64,
) -> Result<ShellSample> {
    let (w, g) = (params.omega, params.gamma);
    let p_max = (2.0 * (epsilon - ground) / w).sqrt();
    let parts: Vec<Result<(Vec<PhasePoint>, Vec<f64>, Vec<u8>)>> = chunks(n_draws)
        .map(|(c, len)| {
            let mut rng = substream(seed, Purpose::Shell, c);
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            let mut counts = Vec::with_capacity(len as usize);
            for _ in 0..len {
                let (big_q, big_p, r2) = uniform_disk(&mut rng);
                let p = p_max * (2.0 * rng.random::<f64>() - 1.0);
                let roots = q_roots_on_shell(p, big_q, big_p, epsilon, params)?;
                let slope_offset = 2.0 * g * big_q * bloch_factor(r2);
                // a lone double root sits on the turning surface and has
                // measure zero
                if let QRoots::Two(a, b) = roots {
                    for q in [a, b] {
                        pts.push(PhasePoint::new(q, p, big_q, big_p));
                        wts.push(1.0 / (w * q + slope_offset).abs());
                    }
                    counts.push(2);
                } else {
                    counts.push(0);
                }
            }
            Ok((pts, wts, counts))
        })
        .collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut counts = Vec::with_capacity(n_draws as usize);
    for part in parts {
        let (p, w, c) = part?;
        points.extend(p);
        weights.extend(w);
        counts.extend(c);
    }

    let capped_mass = cap_weights(&mut weights);
    if capped_mass > 0.01 {
        log::warn!(
            "shell ε={epsilon}: weight cap removed {:.2}% of the surface measure",
            100.0 * capped_mass
        );
    }

    let mut totals = Vec::with_capacity(counts.len());
    let mut next = 0;
    for &c in &counts {
        let c = usize::from(c);
        totals.push(weights[next..next + c].iter().sum::<f64>());
        next += c;
    }
    let box_volume = PI * ATOMIC_DISK_R2 * 2.0 * p_max;
    let volume = mean_stderr(&totals).scale(box_volume);
    let nu = volume.scale(1.0 / planck_cell(params));
    Ok(ShellSample {
        params: *params,
        epsilon,
        method: ShellMethod::QRoots,
        seed,
        n_draws,
        box_volume,
        points,
        weights,
        volume,
        nu,
        capped_mass,
    })
}

/// Caps weights at the configured quantile; returns the removed fraction.
fn cap_weights(weights: &mut [f64]) -> f64 {
    if weights.len() < 2 {
        return 0.0;
    }
    let mut sorted = weights.to_vec();
    let idx = ((weights.len() - 1) as f64 * WEIGHT_CAP_QUANTILE).round() as usize;
    let (_, &mut cap, _) = sorted.select_nth_unstable_by(idx, f64::total_cmp);
    let total: KahanSum = weights.iter().copied().collect();
    let mut removed = KahanSum::new();
    for w in weights.iter_mut() {
        if *w > cap {
            removed.add(*w - cap);
            *w = cap;
        }
    }
    removed.total() / total.total()
}

/// Surface average `⟨f⟩_ε` with a batch-means standard error.
pub fn shell_average<F>(sample: &ShellSample, f: F) -> Result<Estimate>
where
    F: Fn(&PhasePoint) -> f64 + Sync + Send,
{
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let values: Vec<f64> = sample.points.par_iter().map(f).collect();
    Ok(weighted_mean(&sample.weights, &values, DEFAULT_BATCHES))
}
