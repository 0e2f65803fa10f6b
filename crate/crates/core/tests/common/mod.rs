#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use dicke_effdim::classical::{ground_state_energy, DensityOfStates};
use dicke_effdim::model::{
    suggested_n_max, BasisSpec, DiagonalizeOptions, EigenCache, EigenDecomposition, ModelParams,
    ParitySector,
};

/// Highest energy the shared quantum spectrum must resolve.
pub const QUANTUM_EPS_MAX: f64 = 0.6;
pub const QUANTUM_J: f64 = 20.0;

pub struct Quantum {
    pub params: ModelParams,
    pub dec: EigenDecomposition,
    pub dos: DensityOfStates,
}

pub fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("eigen-cache")
}

/// Resonant model at j = 20, solved once per test binary and cached on disk
/// across binaries.
pub fn quantum() -> &'static Quantum {
    static CELL: OnceLock<Quantum> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = ModelParams::resonant(QUANTUM_J).unwrap();
        let n_max = suggested_n_max(&params, QUANTUM_EPS_MAX);
        let spec = BasisSpec::for_params(&params, n_max, ParitySector::All);
        let options = DiagonalizeOptions::default().with_energy_cap(QUANTUM_EPS_MAX + 0.2);
        let dec = EigenCache::new(cache_dir()).get_or_compute(&params, &spec, &options).unwrap();
        let dos = DensityOfStates::quadrature(&params, ground_state_energy(&params), 1.0, 400).unwrap();
        Quantum { params, dec, dos }
    })
}
