//! Field variances: the divergent pointwise sum, Gaussian space-time smearing
//! and the thermal regimes of the smeared variance.
//!
//! All variances are of `E` summed over components. Smeared sums damp each
//! mode by `exp(-sigma_s^2 k^2 / 2 - sigma_t^2 omega^2 / 2)` in amplitude.

use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field_dynamics::ModeAmplitudeSet;
use crate::mode_basis::{Mode, ModeLattice};
use crate::quadrature::{integrate, AdaptiveSpec};
use crate::units::UnitSystem;
use crate::Vec3;

/// Fixed chunking keeps the reduction order independent of the thread count.
const CHUNK: usize = 4096;

fn deterministic_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    parts.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmearingKernel {
    pub sigma_s: f64,
    pub sigma_t: f64,
}

impl SmearingKernel {
    pub fn spatial(sigma_s: f64) -> Self {
        Self { sigma_s, sigma_t: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s >= 0.0 && self.sigma_t >= 0.0) || !(self.sigma_s.is_finite() && self.sigma_t.is_finite()) {
            return Err(invalid("smearing scales must be finite and nonnegative"));
        }
        Ok(())
    }

    /// `sigma^2 = sigma_s^2 + c^2 sigma_t^2`
    pub fn sigma(&self, u: &UnitSystem) -> f64 {
        (self.sigma_s * self.sigma_s + (u.c * self.sigma_t).powi(2)).sqrt()
    }

    pub fn is_pointwise(&self) -> bool {
        self.sigma_s == 0.0 && self.sigma_t == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockEntry {
    pub n: [i32; 3],
    /// 0 or 1.
    pub polarization: usize,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OccupationSpec {
    Vacuum,
    /// Listed modes carry `count` photons, all others none.
    Fock { modes: Vec<FockEntry> },
    /// Planck occupations at `temperature` (kelvin in SI mode).
    Thermal { temperature: f64 },
}

/// `1 / (e^{hbar omega / k_B T} - 1)`; zero at `T = 0`.
pub fn planck_occupation(omega: f64, temperature: f64, u: &UnitSystem) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (u.hbar * omega / (u.k_boltzmann * temperature)).exp_m1()
}

/// `sigma_T = hbar c / k_B T`
pub fn thermal_length(temperature: f64, u: &UnitSystem) -> f64 {
    u.hbar * u.c / (u.k_boltzmann * temperature)
}

impl OccupationSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Vacuum => Ok(()),
            Self::Fock { modes } => {
                for m in modes {
                    if m.polarization > 1 || !(m.count >= 0.0 && m.count.is_finite()) {
                        return Err(invalid("Fock entries need polarization 0/1 and a nonnegative count"));
                    }
                }
                Ok(())
            }
            Self::Thermal { temperature } => {
                if !(*temperature >= 0.0 && temperature.is_finite()) {
                    return Err(invalid("temperature must be nonnegative"));
                }
                Ok(())
            }
        }
    }

    /// Occupations `[n_1, n_2]` in lattice mode order.
    pub fn resolve(&self, lattice: &ModeLattice) -> Result<Vec<[f64; 2]>> {
        self.validate()?;
        let u = &lattice.units;
        Ok(match self {
            Self::Vacuum => vec![[0.0; 2]; lattice.len()],
            Self::Thermal { temperature } => lattice
                .modes
                .iter()
                .map(|m| [planck_occupation(m.omega, *temperature, u); 2])
                .collect(),
            Self::Fock { modes } => {
                let mut out = vec![[0.0; 2]; lattice.len()];
                let mut seen = HashMap::new();
                for e in modes {
                    let i = lattice
                        .index_of(e.n)
                        .ok_or_else(|| invalid(format!("mode {:?} is not on the lattice", e.n)))?;
                    if seen.insert((i, e.polarization), ()).is_some() {
                        return Err(invalid(format!("mode {:?} listed twice", e.n)));
                    }
                    out[i][e.polarization] = e.count;
                }
                out
            }
        })
    }
}

/// Amplitude damping of one mode under the kernel.
pub fn smeared_mode_weight(mode: &Mode, kernel: &SmearingKernel) -> f64 {
    let k2 = mode.k.norm_squared();
    (-0.5 * kernel.sigma_s * kernel.sigma_s * k2 - 0.5 * (kernel.sigma_t * mode.omega).powi(2)).exp()
}

fn weighted_sum(lattice: &ModeLattice, occ: &[[f64; 2]], weight: impl Fn(&Mode) -> f64 + Sync) -> f64 {
    let u = &lattice.units;
    let s = deterministic_sum(lattice.len(), |i| {
        let m = &lattice.modes[i];
        m.omega * (occ[i][0] + occ[i][1] + 1.0) * weight(m)
    });
    u.hbar / (lattice.volume * u.epsilon0) * s
}

/// `(hbar / V eps0) sum_{k lambda} omega_k (n + 1/2)`, truncated at the lattice
/// cutoff. Grows without bound with `n_max`.
pub fn variance_pointwise(lattice: &ModeLattice, occ: &OccupationSpec) -> Result<f64> {
    let n = occ.resolve(lattice)?;
    Ok(weighted_sum(lattice, &n, |_| 1.0))
}

/// Variance of the smeared field: each term damped by the squared mode weight.
pub fn variance_smeared(lattice: &ModeLattice, occ: &OccupationSpec, kernel: &SmearingKernel) -> Result<f64> {
    kernel.validate()?;
    if kernel.is_pointwise() {
        return Err(Error::Divergent);
    }
    let n = occ.resolve(lattice)?;
    Ok(weighted_sum(lattice, &n, |m| smeared_mode_weight(m, kernel).powi(2)))
}

/// `eps0 (Delta E_sigma)^2 sigma^3` on the lattice.
pub fn smeared_energy(lattice: &ModeLattice, occ: &OccupationSpec, kernel: &SmearingKernel) -> Result<f64> {
    let u = &lattice.units;
    Ok(u.epsilon0 * variance_smeared(lattice, occ, kernel)? * kernel.sigma(u).powi(3))
}

/// `E_sigma = (1 / (2 pi)^3) (2 pi hbar c / sigma)`
pub fn localized_energy(kernel: &SmearingKernel, u: &UnitSystem) -> Result<f64> {
    kernel.validate()?;
    if kernel.is_pointwise() {
        return Err(Error::Divergent);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(two_pi * u.hbar * u.c / (two_pi.powi(3) * kernel.sigma(u)))
}

/// Continuum limit of `eps0 (Delta E_sigma)^2 sigma^3` at temperature `T`
/// (vacuum for `T = 0`):
/// `(hbar c / pi^2 sigma) int_0^inf y^3 (n + 1/2) e^{-y^2} dy`, `y = sigma k`,
/// `n = 1 / (e^{y sigma_T / sigma} - 1)`.
pub fn smeared_energy_continuum(kernel: &SmearingKernel, temperature: f64, u: &UnitSystem) -> Result<f64> {
    kernel.validate()?;
    if kernel.is_pointwise() {
        return Err(Error::Divergent);
    }
    if !(temperature >= 0.0) {
        return Err(invalid("temperature must be nonnegative"));
    }
    let sigma = kernel.sigma(u);
    let r = if temperature > 0.0 { thermal_length(temperature, u) / sigma } else { f64::INFINITY };
    let f = |y: f64| {
        let n = if r.is_finite() && y > 0.0 { 1.0 / (r * y).exp_m1() } else { 0.0 };
        // y^3 n stays finite as y -> 0
        let yn = if r.is_finite() && y > 0.0 { y * y * y * n } else { 0.0 };
        (yn + 0.5 * y * y * y) * (-y * y).exp()
    };
    let spec = AdaptiveSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_panels: 4000,
    };
    let v = integrate(f, 0.0, 12.0, &[1.0, 3.0], &spec)?;
    Ok(u.hbar * u.c / (std::f64::consts::PI.powi(2) * sigma) * v)
}

/// Variance of `E` at `x` for the displaced product state, from the mode
/// moments `<a> = alpha`, `<a^dag a> = n + |alpha|^2`, `<a^2> = alpha^2`.
pub fn variance_displaced(
    lattice: &ModeLattice,
    occ: &OccupationSpec,
    amps: &ModeAmplitudeSet,
    x: &Vec3,
) -> Result<f64> {
    if amps.alphas.len() != lattice.len() {
        return Err(invalid("amplitude set does not match the lattice"));
    }
    let n = occ.resolve(lattice)?;
    let u = &lattice.units;
    let s = deterministic_sum(lattice.len(), |i| {
        let m = &lattice.modes[i];
        let c2 = u.hbar * m.omega / (2.0 * lattice.volume * u.epsilon0);
        let phase2 = Complex64::from_polar(1.0, 2.0 * m.k.dot(x));
        let mut v = 0.0;
        for (&a, &nn) in amps.alphas[i].iter().zip(&n[i]) {
            // eps real and unit: u.u = e^{2ikx}, u.u* = 1
            let second = -(a * a * phase2 - (2.0 * nn + 1.0 + 2.0 * a.norm_sqr()) + (a * a * phase2).conj()).re;
            let mean = -(a * a * phase2 - 2.0 * a.norm_sqr() + (a * a * phase2).conj()).re;
            v += c2 * (second - mean);
        }
        v
    });
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalRegime {
    /// `sigma << sigma_T`: `E_sigma (1 + 4 pi^4 (sigma/sigma_T)^4 / 15)`.
    LowTemperature,
    /// `sigma_T <= sigma`: `k_B T (1 + (sigma_T/sigma)^2 / 8) / 4 pi^{3/2}`.
    HighTemperature,
    /// Neither branch within its tolerance.
    Crossover,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalReport {
    pub temperature: f64,
    pub sigma: f64,
    pub sigma_thermal: f64,
    /// `eps0 (Delta E_sigma)^2 sigma^3` from the Planck-weighted continuum integral.
    pub full: f64,
    pub localized_energy: f64,
    pub branch_low: f64,
    pub branch_high: f64,
    pub regime: ThermalRegime,
    /// Relative deviation of the matched branch (of the closer one for crossover).
    pub deviation: f64,
}

/// Branch tolerances: 1% for the low-temperature form, 5% for the high-temperature one.
pub const LOW_T_TOLERANCE: f64 = 0.01;
pub const HIGH_T_TOLERANCE: f64 = 0.05;

pub fn thermal_variance_regimes(kernel: &SmearingKernel, temperature: f64, u: &UnitSystem) -> Result<ThermalReport> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(invalid("temperature must be positive"));
    }
    let sigma = kernel.sigma(u);
    let full = smeared_energy_continuum(kernel, temperature, u)?;
    let e_sigma = localized_energy(kernel, u)?;
    let st = thermal_length(temperature, u);
    let x = sigma / st;
    let branch_low = e_sigma * (1.0 + 4.0 * std::f64::consts::PI.powi(4) * x.powi(4) / 15.0);
    let branch_high =
        u.k_boltzmann * temperature * (1.0 + 1.0 / (8.0 * x * x)) / (4.0 * std::f64::consts::PI.powf(1.5));
    let d_low = (branch_low / full - 1.0).abs();
    let d_high = (branch_high / full - 1.0).abs();
    let (regime, deviation) = if d_low <= LOW_T_TOLERANCE && (d_low <= d_high || d_high > HIGH_T_TOLERANCE) {
        (ThermalRegime::LowTemperature, d_low)
    } else if d_high <= HIGH_T_TOLERANCE {
        (ThermalRegime::HighTemperature, d_high)
    } else {
        (ThermalRegime::Crossover, d_low.min(d_high))
    };
    Ok(ThermalReport {
        temperature,
        sigma,
        sigma_thermal: st,
        full,
        localized_energy: e_sigma,
        branch_low,
        branch_high,
        regime,
        deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub sigma: f64,
    pub variance: f64,
    /// `eps0 (Delta E_sigma)^2 sigma^3`
    pub energy: f64,
    pub localized_energy: f64,
    pub continuum: f64,
}

/// Smeared variance against a list of spatial scales on one lattice.
pub fn sigma_sweep(lattice: &ModeLattice, occ: &OccupationSpec, sigmas: &[f64]) -> Result<Vec<SigmaRow>> {
    let u = lattice.units;
    let temperature = match occ {
        OccupationSpec::Thermal { temperature } => *temperature,
        _ => 0.0,
    };
    sigmas
        .iter()
        .map(|&s| {
            let k = SmearingKernel::spatial(s);
            let variance = variance_smeared(lattice, occ, &k)?;
            Ok(SigmaRow {
                sigma: s,
                variance,
                energy: u.epsilon0 * variance * s.powi(3),
                localized_energy: localized_energy(&k, &u)?,
                continuum: smeared_energy_continuum(&k, temperature, &u)?,
            })
        })
        .collect()
}

pub fn temperature_sweep(kernel: &SmearingKernel, temperatures: &[f64], u: &UnitSystem) -> Result<Vec<ThermalReport>> {
    temperatures.iter().map(|&t| thermal_variance_regimes(kernel, t, u)).collect()
}

pub fn write_sigma_csv<W: Write>(rows: &[SigmaRow], mut w: W) -> Result<()> {
    writeln!(w, "sigma,variance,energy,E_sigma,continuum")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{:e},{:e},{:e}", r.sigma, r.variance, r.energy, r.localized_energy, r.continuum)?;
    }
    Ok(())
}

pub fn write_temperature_csv<W: Write>(rows: &[ThermalReport], mut w: W) -> Result<()> {
    writeln!(w, "temperature,sigma,sigma_T,full,branch_low,branch_high,regime,deviation")?;
    for r in rows {
        let regime = match r.regime {
            ThermalRegime::LowTemperature => "low_temperature",
            ThermalRegime::HighTemperature => "high_temperature",
            ThermalRegime::Crossover => "crossover",
        };
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
            r.temperature, r.sigma, r.sigma_thermal, r.full, r.branch_low, r.branch_high, regime, r.deviation
        )?;
    }
    Ok(())
}
