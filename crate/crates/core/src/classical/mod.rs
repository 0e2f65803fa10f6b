//! Classical Dicke Hamiltonian and energy shells.
//!
//! Phase space is `x = (q, p; Q, P)` with the atomic pair confined to the
//! disk `Q² + P² ≤ 4`. Energies are rescaled by `1/j`.

mod density;
mod shell;

pub use density::{
    level_count_quadrature, nu_quadrature, shell_volume_quadrature, DensityOfStates,
    DEFAULT_GRID_POINTS,
};
pub use shell::{sample_shell, sample_shell_with, shell_average, ShellMethod, ShellSample};

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::{Error, Result};

/// Radius² of the Bloch disk.
pub const ATOMIC_DISK_R2: f64 = 4.0;

/// A point `(q, p; Q, P)` of the four-dimensional phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    /// Bosonic position quadrature `q`.
    pub q: f64,
    /// Bosonic momentum quadrature `p`.
    pub p: f64,
    /// Atomic quadrature `Q`.
    pub atom_q: f64,
    /// Atomic quadrature `P`.
    pub atom_p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64, atom_q: f64, atom_p: f64) -> Self {
        Self { q, p, atom_q, atom_p }
    }

    /// `Q² + P²`.
    pub fn atomic_r2(&self) -> f64 {
        self.atom_q * self.atom_q + self.atom_p * self.atom_p
    }

    pub fn bosonic_r2(&self) -> f64 {
        self.q * self.q + self.p * self.p
    }

    fn check_domain(&self) -> Result<f64> {
        let r2 = self.atomic_r2();
        if r2 > ATOMIC_DISK_R2 || !r2.is_finite() {
            return Err(Error::Domain { r2, limit: ATOMIC_DISK_R2 });
        }
        Ok(r2)
    }
}

/// `√(1 − r²/4)`, clamped at the disk edge.
#[inline]
pub fn bloch_factor(r2: f64) -> f64 {
    (1.0 - r2 / 4.0).max(0.0).sqrt()
}

/// Everything in `h_cl` except the terms in `q` and `p`.
#[inline]
fn atomic_energy(params: &ModelParams, r2: f64) -> f64 {
    params.omega0 * (r2 / 2.0 - 1.0)
}

/// Classical energy `h_cl(x)`.
pub fn h_cl(x: &PhasePoint, params: &ModelParams) -> Result<f64> {
    let r2 = x.check_domain()?;
    Ok(h_cl_unchecked(x, params, r2))
}

#[inline]
pub(crate) fn h_cl_unchecked(x: &PhasePoint, params: &ModelParams, r2: f64) -> f64 {
    params.omega / 2.0 * x.bosonic_r2()
        + atomic_energy(params, r2)
        + 2.0 * params.gamma * x.q * x.atom_q * bloch_factor(r2)
}

/// Gradient `(∂q, ∂p, ∂Q, ∂P)` of `h_cl`.
pub fn grad_h_cl(x: &PhasePoint, params: &ModelParams) -> Result<[f64; 4]> {
    let r2 = x.check_domain()?;
    let a = bloch_factor(r2);
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let (q, big_q, big_p) = (x.q, x.atom_q, x.atom_p);
    // ∂A/∂Q = −Q/(4A), ∂A/∂P = −P/(4A)
    let coupling_q = 2.0 * g * q * (a - big_q * big_q / (4.0 * a));
    let coupling_p = -2.0 * g * q * big_q * big_p / (4.0 * a);
    Ok([
        w * q + 2.0 * g * big_q * a,
        w * x.p,
        w0 * big_q + coupling_q,
        w0 * big_p + coupling_p,
    ])
}

/// Real solutions `q` of `h_cl(q, p, Q, P) = ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QRoots {
    None,
    One(f64),
    Two(f64, f64),
}

impl QRoots {
    pub fn len(&self) -> usize {
        match self {
            QRoots::None => 0,
            QRoots::One(_) => 1,
            QRoots::Two(..) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, QRoots::None)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            QRoots::None => vec![],
            QRoots::One(a) => vec![a],
            QRoots::Two(a, b) => vec![a, b],
        }
    }
}

/// Roots of the quadratic `(ω/2) q² + 2γQA q + c = 0` in `q`.
pub fn q_roots_on_shell(
    p: f64,
    atom_q: f64,
    atom_p: f64,
    epsilon: f64,
    params: &ModelParams,
) -> Result<QRoots> {
    let r2 = PhasePoint::new(0.0, p, atom_q, atom_p).check_domain()?;
    let a = params.omega / 2.0;
    let b = 2.0 * params.gamma * atom_q * bloch_factor(r2);
    let c = params.omega / 2.0 * p * p + atomic_energy(params, r2) - epsilon;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Ok(QRoots::None);
    }
    if disc == 0.0 {
        return Ok(QRoots::One(-b / (2.0 * a)));
    }
    // avoids cancellation between −b and √disc
    let t = -0.5 * (b + b.signum() * disc.sqrt());
    let t = if b == 0.0 { -0.5 * disc.sqrt() } else { t };
    let (r1, r2) = (t / a, c / t);
    let newton = |q: f64| {
        let slope = 2.0 * a * q + b;
        if slope.abs() > 1e-8 { q - (a * q * q + b * q + c) / slope } else { q }
    };
    let (r1, r2) = (newton(r1), newton(r2));
    Ok(if r1 <= r2 { QRoots::Two(r1, r2) } else { QRoots::Two(r2, r1) })
}

/// Classical ground state: its energy and one minimizing point.
///
/// Along `p = P = 0`, `q = −2γQA/ω` the energy reduces to a quadratic in
/// `s = Q²`, which is minimized in closed form.
pub fn ground_state(params: &ModelParams) -> (f64, PhasePoint) {
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let g2 = g * g;
    let s = if g2 > 0.0 { (2.0 - w * w0 / (2.0 * g2)).clamp(0.0, ATOMIC_DISK_R2) } else { 0.0 };
    let big_q = s.sqrt();
    let a = bloch_factor(s);
    let q = -2.0 * g * big_q * a / w;
    let x = PhasePoint::new(q, 0.0, big_q, 0.0);
    (h_cl_unchecked(&x, params, s), x)
}

pub fn ground_state_energy(params: &ModelParams) -> f64 {
    ground_state(params).0
}

/// Lowest energy reachable with fixed atomic variables, minimized over `q, p`.
#[inline]
pub(crate) fn min_energy_at_atomic(params: &ModelParams, atom_q: f64, r2: f64) -> f64 {
    let coupling = params.gamma * atom_q * bloch_factor(r2);
    atomic_energy(params, r2) - 2.0 * coupling * coupling / params.omega
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resonant() -> ModelParams {
        ModelParams::resonant(100.0).unwrap()
    }

    #[test]
    fn energy_examples() {
        let p = resonant();
        assert_eq!(h_cl(&PhasePoint::default(), &p).unwrap(), -1.0);
        let v = h_cl(&PhasePoint::new(1.0, 0.0, 1.0, 0.0), &p).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-12);
        assert!(h_cl(&PhasePoint::new(0.0, 0.0, 2.0, 0.1), &p).is_err());
    }

    #[test]
    fn ground_state_of_superradiant_phase() {
        let (e, x) = ground_state(&resonant());
        assert!((e + 2.125).abs() < 1e-14);
        assert!((x.atom_q * x.atom_q - 1.5).abs() < 1e-12);
        let normal = ModelParams::new(1.0, 1.0, 0.3, 1.0).unwrap();
        assert_eq!(ground_state_energy(&normal), -1.0);
    }

    #[test]
    fn ground_state_beats_a_grid_scan() {
        let p = ModelParams::new(1.3, 0.8, 0.9, 1.0).unwrap();
        let e0 = ground_state_energy(&p);
        let n = 60;
        for a in 0..=n {
            for b in 0..=n {
                for c in 0..=n {
                    let x = PhasePoint::new(
                        -4.0 + 8.0 * f64::from(a) / f64::from(n),
                        0.0,
                        -2.0 + 4.0 * f64::from(b) / f64::from(n),
                        -2.0 + 4.0 * f64::from(c) / f64::from(n),
                    );
                    if let Ok(h) = h_cl(&x, &p) {
                        assert!(h >= e0 - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let p = resonant();
        assert_eq!(grad_h_cl(&PhasePoint::default(), &p).unwrap()[0], 0.0);
        assert_eq!(grad_h_cl(&PhasePoint::new(0.3, 2.0, 0.1, 0.2), &p).unwrap()[1], 2.0);
    }

    #[test]
    fn root_examples() {
        let p = resonant();
        match q_roots_on_shell(0.0, 0.0, 0.0, -0.5, &p).unwrap() {
            QRoots::Two(a, b) => {
                assert!((a + 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(q_roots_on_shell(0.0, 0.0, 0.0, -1.0, &p).unwrap(), QRoots::One(0.0));
    }

    #[test]
    fn no_roots_below_ground_state() {
        let p = resonant();
        let e = ground_state_energy(&p) - 1e-6;
        let n = 40;
        for a in 0..=n {
            for b in 0..=n {
                for c in 0..=n {
                    let pp = -3.0 + 6.0 * f64::from(a) / f64::from(n);
                    let big_q = -2.0 + 4.0 * f64::from(b) / f64::from(n);
                    let big_p = -2.0 + 4.0 * f64::from(c) / f64::from(n);
                    if big_q * big_q + big_p * big_p > 4.0 {
                        continue;
                    }
                    assert!(q_roots_on_shell(pp, big_q, big_p, e, &p).unwrap().is_empty());
                }
            }
        }
    }

    #[test]
    fn atomic_minimum_matches_roots() {
        let p = resonant();
        let (big_q, big_p) = (0.9, -0.4);
        let r2 = big_q * big_q + big_p * big_p;
        let e_min = min_energy_at_atomic(&p, big_q, r2);
        assert!(q_roots_on_shell(0.0, big_q, big_p, e_min - 1e-9, &p).unwrap().is_empty());
        assert_eq!(q_roots_on_shell(0.0, big_q, big_p, e_min + 1e-9, &p).unwrap().len(), 2);
    }
}
