use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{diagonalize_with, BasisSpec, DiagonalizeOptions, EigenDecomposition, ModelParams};
use crate::{Error, Result};

const FORMAT_VERSION: u32 = 1;

/// On-disk store of eigendecompositions.
///
/// Each entry is a raw little-endian `f64` file holding the eigenvectors and a
/// JSON sidecar with everything else plus a SHA-256 of the vector bytes.
#[derive(Debug, Clone)]
pub struct EigenCache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: u32,
    params: ModelParams,
    basis: BasisSpec,
    options: DiagonalizeOptions,
    energies: Vec<f64>,
    parities: Vec<i8>,
    tail_weights: Vec<f64>,
    n_converged: usize,
    vectors_sha256: String,
}

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex key derived from the model, basis and solve options.
    pub fn key(params: &ModelParams, spec: &BasisSpec, options: &DiagonalizeOptions) -> String {
        let mut hasher = Sha256::new();
        hasher.update(FORMAT_VERSION.to_le_bytes());
        for x in [params.omega, params.omega0, params.gamma] {
            hasher.update(x.to_bits().to_le_bytes());
        }
        hasher.update(params.two_j.to_le_bytes());
        hasher.update(spec.n_max.to_le_bytes());
        hasher.update(spec.sector.label().as_bytes());
        hasher.update(options.energy_cap.unwrap_or(f64::INFINITY).to_bits().to_le_bytes());
        for x in [options.tail_fraction, options.tail_tolerance, options.parity_tolerance] {
            hasher.update(x.to_bits().to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..12])
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("eig-{key}.f64")), self.dir.join(format!("eig-{key}.json")))
    }

    /// Reads an entry; `Ok(None)` when absent, `Err(CacheCorrupt)` when it
    /// exists but does not check out.
    pub fn load(
        &self,
        params: &ModelParams,
        spec: &BasisSpec,
        options: &DiagonalizeOptions,
    ) -> Result<Option<EigenDecomposition>> {
        let (bin, json) = self.paths(&Self::key(params, spec, options));
        if !json.exists() || !bin.exists() {
            return Ok(None);
        }
        let corrupt = |reason: String| Error::CacheCorrupt { path: json.clone(), reason };
        let sidecar: Sidecar = serde_json::from_slice(&fs::read(&json)?)
            .map_err(|e| corrupt(format!("unreadable sidecar: {e}")))?;
        if sidecar.format != FORMAT_VERSION
            || sidecar.params != *params
            || sidecar.basis != *spec
            || sidecar.options != *options
        {
            return Err(corrupt("sidecar does not describe the requested solve".into()));
        }
        let bytes = fs::read(&bin)?;
        if hex::encode(Sha256::digest(&bytes)) != sidecar.vectors_sha256 {
            return Err(corrupt("content hash mismatch".into()));
        }
        if bytes.len() % 8 != 0 {
            return Err(corrupt("vector file length is not a multiple of 8".into()));
        }
        let vectors: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        EigenDecomposition::from_parts(
            *params,
            *spec,
            sidecar.energies,
            vectors,
            sidecar.parities,
            sidecar.tail_weights,
            sidecar.n_converged,
        )
        .map(Some)
        .map_err(|e| corrupt(e.to_string()))
    }

    pub fn store(&self, dec: &EigenDecomposition, options: &DiagonalizeOptions) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let spec = dec.spec();
        let (bin, json) = self.paths(&Self::key(dec.params(), &spec, options));
        let mut bytes = Vec::with_capacity(dec.vectors().len() * 8);
        for x in dec.vectors() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        let sidecar = Sidecar {
            format: FORMAT_VERSION,
            params: *dec.params(),
            basis: spec,
            options: *options,
            energies: dec.energies().to_vec(),
            parities: dec.parities().to_vec(),
            tail_weights: dec.tail_weights().to_vec(),
            n_converged: dec.n_converged(),
            vectors_sha256: hex::encode(Sha256::digest(&bytes)),
        };
        write_atomic(&bin, &bytes)?;
        write_atomic(&json, &serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Cached decomposition, recomputing (with a warning) on a corrupt entry.
    pub fn get_or_compute(
        &self,
        params: &ModelParams,
        spec: &BasisSpec,
        options: &DiagonalizeOptions,
    ) -> Result<EigenDecomposition> {
        match self.load(params, spec, options) {
            Ok(Some(dec)) => return Ok(dec),
            Ok(None) => {}
            Err(Error::CacheCorrupt { path, reason }) => {
                log::warn!("ignoring cache entry {}: {reason}; recomputing", path.display());
            }
            Err(e) => return Err(e),
        }
        let dec = diagonalize_with(params, spec, options)?;
        self.store(&dec, options)?;
        Ok(dec)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::ParitySector;
    use super::*;

    fn setup() -> (ModelParams, BasisSpec, DiagonalizeOptions) {
        let p = ModelParams::resonant(2.0).unwrap();
        (p, BasisSpec::for_params(&p, 15, ParitySector::All), DiagonalizeOptions::default())
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EigenCache::new(dir.path());
        let (p, spec, opts) = setup();
        assert!(cache.load(&p, &spec, &opts).unwrap().is_none());
        let dec = cache.get_or_compute(&p, &spec, &opts).unwrap();
        let back = cache.load(&p, &spec, &opts).unwrap().unwrap();
        assert_eq!(dec.energies(), back.energies());
        assert_eq!(dec.vectors(), back.vectors());
        assert_eq!(dec.parities(), back.parities());
        assert_eq!(dec.n_converged(), back.n_converged());
    }

    #[test]
    fn corruption_is_detected_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EigenCache::new(dir.path());
        let (p, spec, opts) = setup();
        let dec = cache.get_or_compute(&p, &spec, &opts).unwrap();
        let key = EigenCache::key(&p, &spec, &opts);
        let bin = dir.path().join(format!("eig-{key}.f64"));
        let mut bytes = fs::read(&bin).unwrap();
        bytes[100] ^= 0xff;
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(cache.load(&p, &spec, &opts), Err(Error::CacheCorrupt { .. })));
        let again = cache.get_or_compute(&p, &spec, &opts).unwrap();
        assert_eq!(again.vectors(), dec.vectors());
        assert!(cache.load(&p, &spec, &opts).unwrap().is_some());
    }

    #[test]
    fn keys_separate_inputs() {
        let (p, spec, opts) = setup();
        let k = EigenCache::key(&p, &spec, &opts);
        assert_ne!(k, EigenCache::key(&p.with_j(2.5).unwrap(), &spec, &opts));
        assert_ne!(k, EigenCache::key(&p, &BasisSpec { n_max: 16, ..spec }, &opts));
        assert_ne!(k, EigenCache::key(&p, &spec.with_sector(ParitySector::Positive), &opts));
        assert_ne!(k, EigenCache::key(&p, &spec, &opts.with_energy_cap(0.0)));
    }
}
