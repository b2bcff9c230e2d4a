//! Radiation observables: spontaneous dipole emission and Cherenkov emission.

mod cherenkov;
mod medium;

pub use cherenkov::{
    amplitude_route_power, cherenkov_amplitude, cherenkov_angle, cherenkov_angle_quantum,
    cherenkov_power_closed, cherenkov_power_spectrum, cherenkov_power_spectrum_amplitude,
    shell_angular_integral, window_integral, write_spectrum_csv, SpectrumSample,
};
pub use medium::{DielectricMedium, SellmeierTerm};

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mode_basis::linear_polarization;
use crate::quadrature::FixedRule;
use crate::units::{codata, fine_structure_constant, UnitMode, UnitSystem};
use crate::{CVec3, Vec3};

/// Single-photon dipole transition `|a_i> -> |a_f>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleTransition {
    /// Transition angular frequency, `> 0` for emission.
    pub omega_if: f64,
    /// `<a_f| x |a_i>`.
    pub matrix_element: [Complex64; 3],
    pub charge: f64,
}

impl DipoleTransition {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_if > 0.0 && self.omega_if.is_finite()) {
            return Err(invalid("emission needs omega_if > 0"));
        }
        if self.matrix_element.iter().any(|c| !c.is_finite()) || !self.charge.is_finite() {
            return Err(invalid("matrix element and charge must be finite"));
        }
        Ok(())
    }

    fn d(&self) -> CVec3 {
        CVec3::from(self.matrix_element)
    }

    /// `|<i|H_I(0)|f>|^2` for one mode of volume `volume` and real polarization `eps`.
    pub fn coupling_squared(&self, eps: &Vec3, volume: f64, omega_k: f64, u: &UnitSystem) -> f64 {
        let dot: Complex64 = (0..3).map(|i| self.d()[i] * eps[i]).sum();
        let amp = self.charge * (u.hbar / (2.0 * volume * u.epsilon0 * omega_k)).sqrt() * self.omega_if;
        amp * amp * dot.norm_sqr()
    }
}

/// `|<1s| x |2p m>|^2 / a_B^2`, the same for every `m`, from the hydrogenic
/// radial integral in exact arithmetic.
///
/// With `a_B = 1`: `R_10 = 2 e^{-r}`, `R_21 = r e^{-r/2} / (2 sqrt 6)`, so
/// `int r^3 R_10 R_21 dr = (2 / (2 sqrt 6)) 4! / (3/2)^5`. Its square is
/// `N10^2 N21^2 (4! (2/3)^5)^2` with `N10^2 = 4`, `N21^2 = 1/24`. The angular
/// factor `sum_i |<Y00| xhat_i |Y1m>|^2` is `1/3`.
pub fn hydrogen_2p1s_dipole_squared() -> Ratio<i64> {
    let n10_sq = Ratio::from_integer(4);
    let n21_sq = Ratio::new(1, 24);
    let gamma5 = Ratio::from_integer(24);
    let inv_rate5 = Ratio::new(2i64, 3).pow(5);
    let radial = gamma5 * inv_rate5;
    let angular = Ratio::new(1, 3);
    n10_sq * n21_sq * radial * radial * angular
}

/// Hydrogen constants derived from the unit system: `(alpha, a_B)`. Natural
/// mode measures lengths in `a_B` and uses the CODATA `alpha`.
fn hydrogen_scales(u: &UnitSystem) -> Result<(f64, f64)> {
    match u.mode {
        UnitMode::Si => {
            let alpha = fine_structure_constant(u, codata::ELEMENTARY_CHARGE)?;
            Ok((alpha, u.hbar / (codata::ELECTRON_MASS * u.c * alpha)))
        }
        UnitMode::Natural => Ok((codata::FINE_STRUCTURE, 1.0)),
    }
}

/// The 2p(m) -> 1s transition: `omega = (3/8) alpha c / a_B`, charge `-e`.
pub fn hydrogen_2p1s_transition(m: i8, u: &UnitSystem) -> Result<DipoleTransition> {
    let (alpha, a_b) = hydrogen_scales(u)?;
    let e = match u.mode {
        UnitMode::Si => codata::ELEMENTARY_CHARGE,
        // alpha = e^2 / 4 pi with eps0 = hbar = c = 1
        UnitMode::Natural => (4.0 * std::f64::consts::PI * alpha).sqrt(),
    };
    let r = *hydrogen_2p1s_dipole_squared().numer() as f64 / *hydrogen_2p1s_dipole_squared().denom() as f64;
    let mag = r.sqrt() * a_b;
    let z = Complex64::new(0.0, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2 * mag;
    let d = match m {
        0 => [z, z, Complex64::new(mag, 0.0)],
        1 => [Complex64::new(s, 0.0), Complex64::new(0.0, s), z],
        -1 => [Complex64::new(s, 0.0), Complex64::new(0.0, -s), z],
        _ => return Err(invalid(format!("2p has m in {{-1, 0, 1}}, got {m}"))),
    };
    Ok(DipoleTransition {
        omega_if: 0.375 * alpha * u.c / a_b,
        matrix_element: d,
        charge: -e,
    })
}

/// Closed form `(2/3)^8 alpha^4 c / a_B`. In natural mode `c / a_B = 1`.
pub fn dipole_rate_2p1s(u: &UnitSystem) -> Result<f64> {
    let (alpha, a_b) = hydrogen_scales(u)?;
    Ok((2.0f64 / 3.0).powi(8) * alpha.powi(4) * u.c / a_b)
}

/// Golden rule `(2 pi / hbar^2) sum_{k lambda} delta(omega_k - omega_if) |<i|H_I(0)|f>|^2`
/// in the continuum limit: the delta fixes `|k| = omega_if / c`, the angular
/// integral runs on a Gauss-Legendre x trapezoid rule with explicit polarizations.
pub fn golden_rule_rate(tr: &DipoleTransition, u: &UnitSystem, angular_nodes: usize) -> Result<f64> {
    tr.validate()?;
    if angular_nodes < 2 {
        return Err(invalid("need at least two angular nodes"));
    }
    let w = tr.omega_if;
    let volume = 1.0;
    let mu = FixedRule::new(angular_nodes, -1.0, 1.0);
    let nphi = 2 * angular_nodes;
    let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
    let mut angular = 0.0;
    for (m, wm) in mu.nodes.iter().zip(&mu.weights) {
        let st = (1.0 - m * m).sqrt();
        for j in 0..nphi {
            let phi = (j as f64 + 0.5) * dphi;
            let khat = Vec3::new(st * phi.cos(), st * phi.sin(), *m);
            let (e1, e2) = linear_polarization(&khat);
            let s = tr.coupling_squared(&e1, volume, w, u) + tr.coupling_squared(&e2, volume, w, u);
            angular += wm * dphi * s;
        }
    }
    // sum_k -> V / (2 pi)^3 int k^2 dk dOmega, with k^2 dk = w^2 dw / c^3
    let density = volume / (2.0 * std::f64::consts::PI).powi(3) * w * w / u.c.powi(3);
    Ok(2.0 * std::f64::consts::PI / (u.hbar * u.hbar) * density * angular)
}

/// Stimulated emission into modes holding `occupation` photons.
pub fn stimulated_rate(rate: f64, occupation: f64) -> Result<f64> {
    if !(occupation >= 0.0) {
        return Err(invalid("occupation must be nonnegative"));
    }
    Ok(rate * (1.0 + occupation))
}
