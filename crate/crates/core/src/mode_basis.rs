//! Periodic-box plane-wave modes with transverse polarization bases.
//!
//! Wavevectors are `k = 2 pi n / L` for integer `n` in the cube `|n_i| <= n_max`,
//! `n != 0`. Linear polarizations are real and follow the parity convention
//! `eps(-k; 1) = eps(k; 1)`, `eps(-k; 2) = -eps(k; 2)`, which keeps
//! `eps2 = khat x eps1` right-handed for every mode.

use std::collections::HashMap;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units::{UnitMode, UnitSystem};
use crate::{CVec3, Vec3};

#[derive(Debug, Clone)]
pub struct Mode {
    /// Integer lattice index.
    pub n: [i32; 3],
    pub k: Vec3,
    pub omega: f64,
    /// Linear polarization pair (real vectors stored as complex).
    pub eps: [CVec3; 2],
    /// Index of the mode with wavevector `-k`.
    pub partner: usize,
}

impl Mode {
    pub fn khat(&self) -> Vec3 {
        self.k.normalize()
    }

    pub fn k_norm(&self) -> f64 {
        self.k.norm()
    }

    /// First nonzero index component positive: one representative per `(k, -k)` pair.
    pub fn is_canonical(&self) -> bool {
        is_canonical(self.n)
    }
}

fn is_canonical(n: [i32; 3]) -> bool {
    n.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub length: f64,
    pub n_max: u32,
    #[serde(default)]
    pub units: UnitMode,
}

#[derive(Debug, Clone)]
pub struct ModeLattice {
    pub length: f64,
    pub n_max: u32,
    pub volume: f64,
    pub modes: Vec<Mode>,
    pub units: UnitSystem,
    /// Indices of canonical modes (one per conjugate pair).
    pub canonical: Vec<usize>,
}

impl ModeLattice {
    pub fn spec(&self) -> LatticeSpec {
        LatticeSpec {
            length: self.length,
            n_max: self.n_max,
            units: self.units.mode,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest wavenumber along an axis, `2 pi n_max / L`.
    pub fn k_axis_max(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.n_max as f64 / self.length
    }

    /// Position of lattice index `n` in `modes`, if present.
    pub fn index_of(&self, n: [i32; 3]) -> Option<usize> {
        let m = self.n_max as i32;
        if n == [0, 0, 0] || n.iter().any(|c| c.abs() > m) {
            return None;
        }
        let side = 2 * m + 1;
        let flat = ((n[0] + m) * side + (n[1] + m)) * side + (n[2] + m);
        let center = (m * side + m) * side + m;
        Some(if flat < center { flat } else { flat - 1 } as usize)
    }
}

pub fn build_lattice(length: f64, n_max: u32, units: &UnitSystem) -> Result<ModeLattice> {
    if !(length.is_finite() && length > 0.0) {
        return Err(invalid(format!("box length must be positive, got {length}")));
    }
    if n_max == 0 {
        return Err(invalid("n_max = 0 gives an empty lattice"));
    }
    units.validate()?;
    let m = n_max as i32;
    let scale = 2.0 * std::f64::consts::PI / length;
    let mut modes = Vec::with_capacity(((2 * m + 1).pow(3) - 1) as usize);
    let mut lookup = HashMap::new();
    for nx in -m..=m {
        for ny in -m..=m {
            for nz in -m..=m {
                let n = [nx, ny, nz];
                if n == [0, 0, 0] {
                    continue;
                }
                let k = Vec3::new(nx as f64, ny as f64, nz as f64) * scale;
                let khat = k.normalize();
                let (e1, e2) = if is_canonical(n) {
                    linear_polarization(&khat)
                } else {
                    let (e1, e2) = linear_polarization(&(-khat));
                    (e1, -e2)
                };
                lookup.insert(n, modes.len());
                modes.push(Mode {
                    n,
                    k,
                    omega: units.c * k.norm(),
                    eps: [e1.map(Complex64::from), e2.map(Complex64::from)],
                    partner: usize::MAX,
                });
            }
        }
    }
    for m in modes.iter_mut() {
        let n = m.n;
        m.partner = lookup[&[-n[0], -n[1], -n[2]]];
    }
    let canonical = (0..modes.len()).filter(|&i| modes[i].is_canonical()).collect();
    Ok(ModeLattice {
        length,
        n_max,
        volume: length.powi(3),
        modes,
        units: *units,
        canonical,
    })
}

/// Deterministic real orthonormal pair transverse to `khat`:
/// `eps1 ∝ z × khat` (or `x` when `khat ∥ z`), `eps2 = khat × eps1`.
pub fn linear_polarization(khat: &Vec3) -> (Vec3, Vec3) {
    let z = Vec3::z();
    let cross = z.cross(khat);
    let e1 = if cross.norm() < 1e-12 { Vec3::x() } else { cross.normalize() };
    let e2 = khat.cross(&e1);
    (e1, e2)
}

/// `P_ij = sum_lambda conj(eps_i) eps_j`.
pub fn polarization_sum(mode: &Mode) -> Matrix3<f64> {
    polarization_sum_of(&mode.eps)
}

pub fn polarization_sum_of(eps: &[CVec3; 2]) -> Matrix3<f64> {
    let mut p = Matrix3::zeros();
    for e in eps {
        for i in 0..3 {
            for j in 0..3 {
                p[(i, j)] += (e[i].conj() * e[j]).re;
            }
        }
    }
    p
}

/// `I - khat khat^T`.
pub fn transverse_projector(khat: &Vec3) -> Matrix3<f64> {
    Matrix3::identity() - khat * khat.transpose()
}

fn hermitian_dot(a: &CVec3, b: &CVec3) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Circular pair `eps(±) = (eps1 ± i eps2)/sqrt 2`.
pub fn to_circular(eps1: &CVec3, eps2: &CVec3) -> Result<(CVec3, CVec3)> {
    let tol = 1e-10;
    let n1 = hermitian_dot(eps1, eps1);
    let n2 = hermitian_dot(eps2, eps2);
    let d = hermitian_dot(eps1, eps2);
    if (n1.re - 1.0).abs() > tol || (n2.re - 1.0).abs() > tol || d.norm() > tol {
        return Err(invalid("polarization pair is not orthonormal"));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::i();
    let plus = (eps1 + eps2.map(|z| z * i)).map(|z| z * s);
    let minus = (eps1 - eps2.map(|z| z * i)).map(|z| z * s);
    Ok((plus, minus))
}

/// Helicity amplitudes `a(±) = (a1 ∓ i a2)/sqrt 2`.
pub fn amplitude_to_circular(a1: Complex64, a2: Complex64) -> (Complex64, Complex64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::i();
    ((a1 - i * a2) * s, (a1 + i * a2) * s)
}

/// `sum_lambda eps(lambda) a(lambda)`.
pub fn polarization_combination(eps: &[CVec3; 2], amps: [Complex64; 2]) -> CVec3 {
    eps[0].map(|z| z * amps[0]) + eps[1].map(|z| z * amps[1])
}
