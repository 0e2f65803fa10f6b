use std::fs;
use std::io::{BufWriter, Write};

use clap::Args;
use dicke_effdim::classical::{ground_state_energy, sample_shell, sample_shell_with, DensityOfStates, ShellMethod};
use dicke_effdim::coherent::sigma_x_analytic;
use dicke_effdim::effdim::{
    arithmetic_mean_sigma, effdim_scaling, effdim_vs_eigenstates_report, effective_dimension_from_sample,
    harmonic_mean_sigma,
};
use dicke_effdim::ensembles::{
    dimensionality_empirical, dimensionality_gauss_closed, dimensionality_rect_closed, gauss_wide_limit,
    rect_wide_limit, EnergyProfile, MagnitudeDistribution, RandomStateSpec,
};
use dicke_effdim::husimi::{eigenstate_shell_profile, PROFILE_HALF_WIDTH};
use dicke_effdim::model::{
    suggested_n_max, BasisSpec, DiagonalizeOptions, EigenCache, EigenDecomposition, ModelParams, ParitySector,
};
use dicke_effdim::participation::{pr_vs_dimensionality_sweep, SweepRow};
use serde_json::{json, Value};

use crate::output::{write_json, write_table, Provenance};
use crate::{Cli, Command, Common, Failure};

const CLASSICAL_J: f64 = 100.0;
const QUANTUM_J: f64 = 20.0;
/// Levels are diagonalized up to this far above the highest energy needed.
const CAP_MARGIN: f64 = 0.2;
/// Grid points of the semiclassical density table.
const DOS_POINTS: usize = 400;
/// Draws of the shell that sets `σ̄` for an eigenstate profile.
const PROFILE_SIGMA_DRAWS: u64 = 20_000;

type Outcome = Result<(), Failure>;

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Highest energy that must be converged.
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub eps_max: f64,
    /// Bosonic cutoff (default: chosen from --eps-max).
    #[arg(long)]
    pub n_max: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ShellArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// `polar` or `q-roots`.
    #[arg(long, default_value = "polar")]
    pub method: ShellMethod,
}

#[derive(Debug, Args)]
pub struct EffdimArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// Also fit log 𝒟_eff against log j over these sizes.
    #[arg(long, value_delimiter = ',')]
    pub scaling: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Level index in the full spectrum.
    #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    pub level: Option<usize>,
    /// Use the level nearest this energy.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub eps_max: f64,
}

#[derive(Debug, Args)]
pub struct EigdimArgs {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = -0.2, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct SigmaMapArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct DimensionalityArgs {
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// Profile widths (standard deviations).
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.003,0.01,0.03,0.1,0.2,0.3")]
    pub sigmas: Vec<f64>,
    /// Random states per width for the empirical rectangular value; 0 skips
    /// the quantum part.
    #[arg(long, default_value_t = 50)]
    pub states: usize,
    /// `exponential`, `squared-real-normal` or `squared-complex-normal`.
    #[arg(long, default_value = "exponential")]
    pub magnitudes: MagnitudeDistribution,
}

#[derive(Debug, Args)]
pub struct PrSweepArgs {
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub epsilon: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4,0.6,0.8,1.2,1.6")]
    pub widths: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pub states: usize,
}

pub fn run(cli: &Cli) -> Outcome {
    let c = &cli.common;
    match &cli.command {
        Command::Spectrum(a) => spectrum(c, a),
        Command::Shell(a) => shell(c, a),
        Command::Effdim(a) => effdim(c, a),
        Command::Profile(a) => profile(c, a),
        Command::Eigdim(a) => eigdim(c, a),
        Command::SigmaMap(a) => sigma_map(c, a),
        Command::Dimensionality(a) => dimensionality(c, a),
        Command::PrSweep(a) => pr_sweep(c, a),
    }
}

fn params(c: &Common, default_j: f64) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(c.omega, c.omega0, c.gamma, c.j.unwrap_or(default_j))?)
}

fn draws(c: &Common, default: u64) -> u64 {
    c.draws.unwrap_or(default)
}

fn provenance(command: &'static str, c: &Common, p: &ModelParams, extra: Value) -> Provenance {
    let mut args = json!({
        "j": p.j(),
        "omega": p.omega,
        "omega0": p.omega0,
        "gamma": p.gamma,
        "seed": c.seed,
    });
    if let (Some(m), Value::Object(e)) = (args.as_object_mut(), extra) {
        m.extend(e);
    }
    Provenance { command, args }
}

fn print_summary(summary: &Value) -> Outcome {
    let text = serde_json::to_string_pretty(summary).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// Options used for every cached decomposition that must resolve `eps_max`.
fn spectrum_options(eps_max: f64) -> DiagonalizeOptions {
    DiagonalizeOptions::default().with_energy_cap(eps_max + CAP_MARGIN)
}

fn load_spectrum(c: &Common, p: &ModelParams, eps_max: f64, n_max: Option<u32>) -> Result<EigenDecomposition, Failure> {
    // coherent states on the highest shells need the extra room too
    let n_max = n_max.unwrap_or_else(|| suggested_n_max(p, eps_max + CAP_MARGIN));
    let spec = BasisSpec::for_params(p, n_max, ParitySector::All);
    log::info!("loading spectrum j={} n_max={n_max} (cache {})", p.j(), c.cache_dir.display());
    let dec = EigenCache::new(&c.cache_dir).get_or_compute(p, &spec, &spectrum_options(eps_max))?;
    match dec.converged_max_energy() {
        Some(top) if top >= eps_max => Ok(dec),
        top => Err(Failure::Numerical(format!(
            "spectrum converged only up to {top:?}, below the requested {eps_max}; raise --n-max"
        ))),
    }
}

fn density_table(p: &ModelParams, eps_max: f64) -> Result<DensityOfStates, Failure> {
    Ok(DensityOfStates::quadrature(p, ground_state_energy(p), eps_max + CAP_MARGIN, DOS_POINTS)?)
}

fn tolerances() -> Value {
    let o = DiagonalizeOptions::default();
    json!({
        "tail_fraction": o.tail_fraction,
        "tail_tolerance": o.tail_tolerance,
        "parity_tolerance": o.parity_tolerance,
    })
}

fn spectrum(c: &Common, a: &SpectrumArgs) -> Outcome {
    let p = params(c, QUANTUM_J)?;
    let dec = load_spectrum(c, &p, a.eps_max, a.n_max)?;
    let n_max = dec.spec().n_max;
    let prov = provenance("spectrum", c, &p, json!({ "eps_max": a.eps_max, "n_max": n_max }));
    let rows = (0..dec.n_levels()).map(|k| {
        format!(
            "{k},{},{},{:?},{}",
            dec.energies()[k],
            dec.parities()[k],
            dec.tail_weights()[k],
            u8::from(k < dec.n_converged())
        )
    });
    let summary = json!({
        "n_levels": dec.n_levels(),
        "n_converged": dec.n_converged(),
        "converged_max_energy": dec.converged_max_energy(),
        "dim": dec.dim(),
        "n_max": n_max,
    });
    let meta = prov.metadata(json!({ "tolerances": tolerances(), "summary": summary }));
    write_table(&c.out_dir, "spectrum", "k,energy,parity,tail_weight,trusted", rows, &meta)?;
    print_summary(&summary)
}

fn shell(c: &Common, a: &ShellArgs) -> Outcome {
    let p = params(c, CLASSICAL_J)?;
    let n = draws(c, 100_000);
    let s = sample_shell_with(&p, a.epsilon, n, c.seed, a.method)?;
    let harmonic = harmonic_mean_sigma(&s)?;
    let arithmetic = arithmetic_mean_sigma(&s)?;
    let prov = provenance("shell", c, &p, json!({ "epsilon": a.epsilon, "draws": n, "method": a.method }));
    let summary = json!({
        "nu": s.nu,
        "volume": s.volume,
        "n_points": s.len(),
        "capped_mass": s.capped_mass,
        "sigma_harmonic": harmonic,
        "sigma_arithmetic": arithmetic,
    });
    fs::create_dir_all(&c.out_dir)?;
    let mut out = BufWriter::new(fs::File::create(c.out_dir.join("shell.csv"))?);
    s.write_csv(&mut out)?;
    out.flush()?;
    write_json(&c.out_dir, "shell", &prov.metadata(json!({ "sample": s.header_json(), "summary": summary })))?;
    print_summary(&summary)
}

fn effdim(c: &Common, a: &EffdimArgs) -> Outcome {
    let p = params(c, CLASSICAL_J)?;
    let n = draws(c, 1_000_000);
    let s = sample_shell(&p, a.epsilon, n, c.seed)?;
    let d = effective_dimension_from_sample(&s)?;
    let mut rows = vec![d];
    let mut summary = json!({
        "value": d.value.value,
        "stderr": d.value.stderr,
        "nu": d.nu.value,
        "sigma_bar": d.sigma_bar.value,
    });
    if !a.scaling.is_empty() {
        let fit = effdim_scaling(a.epsilon, &p, &a.scaling, n, c.seed)?;
        summary["scaling_slope"] = json!(fit.slope);
        summary["scaling_intercept"] = json!(fit.intercept);
        rows.extend(fit.points);
    }
    let prov = provenance("effdim", c, &p, json!({ "epsilon": a.epsilon, "draws": n, "scaling": a.scaling }));
    let lines = rows.iter().map(|d| {
        format!(
            "{},{},{},{},{},{},{}",
            d.j, d.epsilon, d.value.value, d.value.stderr, d.nu.value, d.sigma_bar.value, d.sigma_bar.stderr
        )
    });
    let meta = prov.metadata(json!({ "summary": summary }));
    write_table(&c.out_dir, "effdim", "j,epsilon,D_eff,D_eff_stderr,nu,sigma_bar,sigma_bar_stderr", lines, &meta)?;
    print_summary(&summary)
}

fn profile(c: &Common, a: &ProfileArgs) -> Outcome {
    let p = params(c, QUANTUM_J)?;
    let dec = load_spectrum(c, &p, a.eps_max, None)?;
    let level = match (a.level, a.epsilon) {
        (Some(k), _) => k,
        (None, Some(e)) => nearest_level(&dec, e)?,
        (None, None) => unreachable!("clap requires one of --level and --epsilon"),
    };
    if level >= dec.n_converged() {
        return Err(Failure::Usage(format!(
            "level {level} is not converged (only {} trusted levels below {})",
            dec.n_converged(),
            a.eps_max
        )));
    }
    let eps_k = dec.energies()[level];
    let shell = sample_shell(&p, eps_k, PROFILE_SIGMA_DRAWS, c.seed)?;
    let sigma_bar = harmonic_mean_sigma(&shell)?.value;
    let n = draws(c, 2_000);
    let prof = eigenstate_shell_profile(&dec, level, sigma_bar, a.points, n, c.seed)?;
    let peak = prof.peak();
    let summary = json!({
        "level": level,
        "eps_k": eps_k,
        "sigma_bar": sigma_bar,
        "half_width_sigmas": PROFILE_HALF_WIDTH,
        "peak_epsilon": peak.epsilon,
        "peak_value": peak.value,
        "unimodal": prof.is_unimodal(3.0),
        "peaks_at_eigenenergy": prof.peaks_at_eigenenergy(),
    });
    let prov = provenance(
        "profile",
        c,
        &p,
        json!({ "level": level, "points": a.points, "draws": n, "eps_max": a.eps_max }),
    );
    let rows = prof.grid.iter().map(|g| format!("{},{:?},{:?}", g.epsilon, g.value, g.stderr));
    let meta = prov.metadata(json!({ "tolerances": tolerances(), "summary": summary }));
    write_table(&c.out_dir, "profile", "epsilon,husimi_average,stderr", rows, &meta)?;
    print_summary(&summary)
}

fn nearest_level(dec: &EigenDecomposition, e: f64) -> Result<usize, Failure> {
    dec.energies()[..dec.n_converged()]
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - e).abs().total_cmp(&(y.1 - e).abs()))
        .map(|(k, _)| k)
        .ok_or_else(|| Failure::Numerical("no converged levels".into()))
}

fn eigdim(c: &Common, a: &EigdimArgs) -> Outcome {
    if a.lo >= a.hi || a.stride == 0 {
        return Err(Failure::Usage("need --lo < --hi and --stride ≥ 1".into()));
    }
    let p = params(c, QUANTUM_J)?;
    let dec = load_spectrum(c, &p, a.hi, None)?;
    let n = draws(c, 4_000);
    let report = effdim_vs_eigenstates_report(&dec, a.lo, a.hi, a.stride, n, c.seed)?;
    let summary = json!({
        "n_states": report.rows.len(),
        "median_abs_deviation": report.median_abs_deviation,
        "mean_ratio": report.mean_ratio,
    });
    let prov = provenance(
        "eigdim",
        c,
        &p,
        json!({ "lo": a.lo, "hi": a.hi, "stride": a.stride, "draws": n }),
    );
    let rows = report.rows.iter().map(|r| {
        format!(
            "{},{},{},{},{},{},{},{}",
            r.level,
            r.energy,
            r.parity,
            r.dimensionality.value,
            r.dimensionality.stderr,
            r.effective.value,
            r.effective.stderr,
            r.ratio
        )
    });
    let meta = prov.metadata(json!({ "tolerances": tolerances(), "summary": summary }));
    write_table(
        &c.out_dir,
        "eigdim",
        "level,energy,parity,D,D_stderr,D_eff,D_eff_stderr,ratio",
        rows,
        &meta,
    )?;
    print_summary(&summary)
}

fn sigma_map(c: &Common, a: &SigmaMapArgs) -> Outcome {
    if a.bins == 0 {
        return Err(Failure::Usage("--bins must be at least 1".into()));
    }
    let p = params(c, CLASSICAL_J)?;
    let n = draws(c, 10_000);
    let s = sample_shell(&p, a.epsilon, n, c.seed)?;
    let sigmas = s
        .points
        .iter()
        .map(|x| sigma_x_analytic(x, &p))
        .collect::<Result<Vec<_>, _>>()?;
    let (lo, hi) = sigmas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let width = if hi > lo { (hi - lo) / a.bins as f64 } else { 1.0 };
    let mut hist = vec![0.0; a.bins];
    for (&v, &w) in sigmas.iter().zip(&s.weights) {
        let b = (((v - lo) / width) as usize).min(a.bins - 1);
        hist[b] += w;
    }
    let total: f64 = hist.iter().sum();
    let summary = json!({
        "sigma_harmonic": harmonic_mean_sigma(&s)?,
        "sigma_arithmetic": arithmetic_mean_sigma(&s)?,
        "sigma_min": lo,
        "sigma_max": hi,
        "n_points": s.len(),
    });
    let prov = provenance("sigma-map", c, &p, json!({ "epsilon": a.epsilon, "draws": n, "bins": a.bins }));
    let meta = prov.metadata(json!({ "summary": summary }));
    let points = s
        .iter()
        .zip(&sigmas)
        .map(|((x, w), sx)| format!("{},{},{},{},{},{}", x.q, x.p, x.atom_q, x.atom_p, w, sx));
    write_table(&c.out_dir, "sigma_map", "q,p,Q,P,w,sigma_x", points, &meta)?;
    let bins = hist.iter().enumerate().map(|(i, h)| {
        let left = lo + width * i as f64;
        format!("{},{},{}", left, left + width, h / (total * width))
    });
    write_table(&c.out_dir, "sigma_hist", "sigma_lo,sigma_hi,density", bins, &meta)?;
    print_summary(&summary)
}

fn dimensionality(c: &Common, a: &DimensionalityArgs) -> Outcome {
    if a.sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Failure::Usage("--sigmas must all be positive".into()));
    }
    let quantum = a.states > 0;
    let p = params(c, if quantum { QUANTUM_J } else { CLASSICAL_J })?;
    let n = draws(c, 10_000);
    let s = sample_shell(&p, a.epsilon, n, c.seed)?;
    let floor = effective_dimension_from_sample(&s)?;
    let nu = s.nu.value;
    let widest = a.sigmas.iter().copied().fold(0.0, f64::max);
    let eps_max = a.epsilon + 3f64.sqrt() * widest;
    let system = if quantum {
        Some((load_spectrum(c, &p, eps_max, None)?, density_table(&p, eps_max)?))
    } else {
        None
    };
    let mut rows = Vec::with_capacity(a.sigmas.len());
    for (i, &sigma) in a.sigmas.iter().enumerate() {
        let rect = dimensionality_rect_closed(sigma, &s)?;
        let gauss = dimensionality_gauss_closed(sigma, &s)?;
        let empirical = match &system {
            Some((dec, dos)) => {
                let spec = RandomStateSpec {
                    profile: EnergyProfile::rectangular(a.epsilon, sigma)?,
                    magnitudes: a.magnitudes,
                    seed: dicke_effdim::rng::child_seed(c.seed, i as u64),
                };
                let d = dimensionality_empirical(&spec, dec, dos, &s, a.states)?.dimensionality;
                format!("{},{}", d.value, d.stderr)
            }
            None => ",".to_string(),
        };
        rows.push(format!(
            "{sigma},{},{},{empirical},{},{}",
            rect.value,
            gauss.value,
            rect_wide_limit(nu, sigma),
            gauss_wide_limit(nu, sigma)
        ));
    }
    let summary = json!({
        "nu": s.nu,
        "narrow_floor": floor.value,
        "n_widths": rows.len(),
        "empirical": quantum,
    });
    let prov = provenance(
        "dimensionality",
        c,
        &p,
        json!({
            "epsilon": a.epsilon,
            "sigmas": a.sigmas,
            "states": a.states,
            "magnitudes": a.magnitudes,
            "draws": n,
        }),
    );
    let meta = prov.metadata(json!({ "tolerances": tolerances(), "summary": summary }));
    write_table(
        &c.out_dir,
        "dimensionality",
        "sigma,D_rect_closed,D_gauss_closed,D_rect_empirical,D_rect_empirical_stderr,asymptote_rect,asymptote_gauss",
        rows,
        &meta,
    )?;
    print_summary(&summary)
}

fn pr_sweep(c: &Common, a: &PrSweepArgs) -> Outcome {
    if a.widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Failure::Usage("--widths must all be positive".into()));
    }
    let p = params(c, QUANTUM_J)?;
    let widest = a.widths.iter().copied().fold(0.0, f64::max);
    let dec = load_spectrum(c, &p, a.epsilon + widest / 2.0, None)?;
    let n = draws(c, 10_000);
    let s = sample_shell(&p, a.epsilon, n, c.seed)?;
    let rows = pr_vs_dimensionality_sweep(&dec, &s, &a.widths, a.states, c.seed)?;
    let summary = json!({
        "rows": rows.iter().map(|r| json!({
            "width": r.width,
            "D_empirical": r.d_empirical.value,
            "PR_mean": r.pr.value,
            "K_size": r.k_size,
        })).collect::<Vec<_>>(),
    });
    let prov = provenance(
        "pr-sweep",
        c,
        &p,
        json!({ "epsilon": a.epsilon, "widths": a.widths, "states": a.states, "draws": n }),
    );
    let meta = prov.metadata(json!({ "tolerances": tolerances(), "summary": summary }));
    write_table(&c.out_dir, "pr_sweep", SweepRow::CSV_HEADER, rows.iter().map(SweepRow::csv_line), &meta)?;
    print_summary(&summary)
}
