mod common;

use dicke_effdim::classical::{level_count_quadrature, sample_shell};
use dicke_effdim::coherent::{coherent_amplitudes, husimi_overlap};
use dicke_effdim::effdim::effective_dimension_from_sample;
use dicke_effdim::ensembles::{
    dimensionality_empirical, dimensionality_rect_closed, dimensionality_semianalytic, EnergyProfile,
    MagnitudeDistribution, RandomStateSpec,
};
use dicke_effdim::husimi::{
    eigenstate_dimensionality, husimi_phase_space_norm_exact, phase_space_integral, shell_completeness,
};
use dicke_effdim::model::{
    converged_levels, diagonalize, suggested_n_max, BasisSpec, ModelParams, ParitySector,
};
use dicke_effdim::participation::{mean_participation, window_levels, AmplitudeKind};
use dicke_effdim::Error;
use num_complex::Complex64;

/// Level nearest to `eps` in the shared spectrum.
fn level_near(eps: f64) -> usize {
    let q = common::quantum();
    q.dec.levels_in(eps, eps + 1.0).start
}

/// `N_cl(ε)/N_q(ε) − 1`: relative error of the semiclassical level count.
fn count_deficit(dec: &dicke_effdim::model::EigenDecomposition, eps: f64) -> f64 {
    let quantum = dec.levels_in(f64::NEG_INFINITY, eps).len() as f64;
    level_count_quadrature(dec.params(), eps) / quantum - 1.0
}

#[test]
fn integrated_density_approaches_level_count() {
    let q = common::quantum();
    let p = ModelParams::resonant(10.0).unwrap();
    let small = diagonalize(&p, &BasisSpec::for_params(&p, suggested_n_max(&p, 0.0), ParitySector::All)).unwrap();
    for eps in [-1.0, -0.8, -0.5, -0.2] {
        let (d10, d20) = (count_deficit(&small, eps), count_deficit(&q.dec, eps));
        assert!(d20.abs() < d10.abs(), "ε={eps}: {d20} at j=20 vs {d10} at j=10");
        assert!(d20.abs() < 0.2, "ε={eps}: {d20}");
    }
    // the local density of levels is already close to ν
    let (lo, hi) = (-0.8, -0.2);
    let levels = q.dec.levels_in(lo, hi).len() as f64;
    let classical = level_count_quadrature(&q.params, hi) - level_count_quadrature(&q.params, lo);
    assert!((classical / levels - 1.0).abs() < 0.10, "{classical} vs {levels}");
}

#[test]
fn self_convergence_is_confirmed_by_a_larger_cutoff() {
    let q = common::quantum();
    assert!(q.dec.converged_max_energy().unwrap() > common::QUANTUM_EPS_MAX);
    let p = ModelParams::resonant(10.0).unwrap();
    let solve = |n| diagonalize(&p, &BasisSpec::for_params(&p, n, ParitySector::All)).unwrap();
    let (a, b, c) = (solve(60), solve(80), solve(140));
    let k = converged_levels(&a, &b, 1e-6).unwrap();
    assert!(k > 0);
    for i in 0..k {
        assert!((a.energies()[i] - c.energies()[i]).abs() < 1e-6, "level {i}");
    }
}

#[test]
fn eigenstates_complete_the_shell() {
    // an uncapped spectrum: every level a shell point overlaps is present
    let p = ModelParams::resonant(6.0).unwrap();
    let dec = diagonalize(&p, &BasisSpec::for_params(&p, suggested_n_max(&p, 4.0), ParitySector::All)).unwrap();
    let s = sample_shell(&p, -1.0, 2_000, 11).unwrap();
    let levels: Vec<usize> = (0..dec.n_converged()).collect();
    assert!(dec.energies()[dec.n_converged() - 1] > 3.0);
    let total = shell_completeness(&dec, &levels, &s).unwrap();
    assert!((total.value - 1.0).abs() < 1e-4, "{total:?}");
}

#[test]
fn delta_profile_reproduces_eigenstate_dimensionality() {
    let q = common::quantum();
    let k = level_near(-0.5);
    let e = q.dec.energies()[k];
    let s = sample_shell(&q.params, e, 10_000, 12).unwrap();
    let spec = RandomStateSpec {
        profile: EnergyProfile::delta(e),
        magnitudes: MagnitudeDistribution::Exponential,
        seed: 1,
    };
    let ensemble = dimensionality_empirical(&spec, &q.dec, &q.dos, &s, 3).unwrap().dimensionality;
    let direct = eigenstate_dimensionality(&q.dec, k, &s).unwrap();
    assert!((ensemble.value / direct.value - 1.0).abs() < 1e-10);
}

#[test]
fn semianalytic_tracks_empirical_dimensionality() {
    let q = common::quantum();
    let e = q.dec.energies()[level_near(-0.5)];
    let s = sample_shell(&q.params, e, 10_000, 13).unwrap();
    let floor = effective_dimension_from_sample(&s).unwrap().value.value;
    for (i, sigma) in [0.001, 0.01, 0.05, 0.3].into_iter().enumerate() {
        let profile = EnergyProfile::rectangular(e, sigma).unwrap();
        let spec = RandomStateSpec {
            profile: profile.clone(),
            magnitudes: MagnitudeDistribution::Exponential,
            seed: 20 + i as u64,
        };
        let emp = dimensionality_empirical(&spec, &q.dec, &q.dos, &s, 60).unwrap().dimensionality;
        let semi = dimensionality_semianalytic(&profile, &q.dec, &q.dos, &s).unwrap();
        assert!((semi.value / emp.value - 1.0).abs() < 0.10, "σ_r={sigma}: {semi:?} vs {emp:?}");
        // the narrow-profile value is a lower bound
        assert!(emp.value >= floor * 0.9, "σ_r={sigma}: {} below {floor}", emp.value);
        if sigma >= 0.01 {
            let closed = dimensionality_rect_closed(sigma, &s).unwrap();
            assert!((semi.value / closed.value - 1.0).abs() < 0.10, "σ_r={sigma}: {semi:?} vs {closed:?}");
        }
    }
}

#[test]
fn profiles_must_fit_the_trusted_spectrum() {
    let q = common::quantum();
    let top = q.dec.converged_max_energy().unwrap();
    let s = sample_shell(&q.params, top, 1_000, 14).unwrap();
    let spec = RandomStateSpec {
        profile: EnergyProfile::gaussian(top, 0.05).unwrap(),
        magnitudes: MagnitudeDistribution::Exponential,
        seed: 1,
    };
    assert!(matches!(
        dimensionality_empirical(&spec, &q.dec, &q.dos, &s, 2),
        Err(Error::ProfileOutsideWindow { .. })
    ));
}

#[test]
fn half_the_window_has_positive_parity() {
    let q = common::quantum();
    for (lo, hi) in [(-1.0, -0.8), (-0.7, -0.3), (-0.5, 0.0)] {
        let all = window_levels(&q.dec, lo, hi, false).unwrap().len() as f64;
        let pos = window_levels(&q.dec, lo, hi, true).unwrap().len() as f64;
        assert!((pos - all / 2.0).abs() <= 2.0, "[{lo}, {hi}]: {pos} of {all}");
    }
}

#[test]
fn unfiltered_gue_participation_is_half_the_window() {
    let q = common::quantum();
    let k = window_levels(&q.dec, -1.0, 0.0, false).unwrap().len();
    let pr = mean_participation(k, AmplitudeKind::Gue, 40, 3).unwrap();
    assert!((pr.value / (k as f64 / 2.0) - 1.0).abs() < 0.03, "{pr:?} vs {k}/2");
}

#[test]
fn husimi_phase_space_integral_matches_exact_value() {
    let j = 5.0;
    let p = ModelParams::resonant(j).unwrap();
    let dec = diagonalize(&p, &BasisSpec::for_params(&p, 80, ParitySector::All)).unwrap();
    let basis = dec.basis();
    let state: Vec<Complex64> = dec.vector(3).iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let integral = phase_space_integral(
        |x| husimi_overlap(&state, &coherent_amplitudes(x, basis).unwrap()).unwrap(),
        j,
        5.0,
        400_000,
        7,
    );
    let exact = husimi_phase_space_norm_exact(j);
    assert!((integral.value - exact).abs() < 3.0 * integral.stderr, "{integral:?} vs {exact}");
}
