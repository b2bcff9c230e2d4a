//! Coherent amplitudes of every lattice mode driven by a classical current, and
//! the field expectation values rebuilt from them.
//!
//! Per mode and polarization
//! `alpha(t) = (i / hbar) sqrt(hbar / 2 V eps0 omega) int_0^t e^{i omega t'} conj(j(k, t')) . eps dt'`,
//! and `<A_T> = sum sqrt(hbar / 2 V eps0 omega) (eps alpha e^{i(k.x - omega t)} + c.c.)`.
//!
//! The uniform `k = 0` component of the current is not an oscillator; it drives
//! `A_0'' = j(0, t) / (eps0 V)` and is carried separately.

mod fields;
mod snapshot;

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::mode_basis::ModeLattice;
use crate::quadrature::{integrate, AdaptiveSpec};
use crate::shells::Support;
use crate::sources::{gate_conservation, CurrentSource};
use crate::{CVec3, Vec3};

pub use fields::{
    expectation_a, expectation_a_green, expectation_b_modesum, expectation_e_modesum,
    expectation_e_modesum_with, field_energy, gauss_law_residual, lattice_charge,
    lattice_transverse_current, wave_equation_residual, CoulombTerm, FieldCoefficients,
    WaveResidual,
};
pub use snapshot::{FieldSnapshot, GridSpec};

#[derive(Debug, Clone, Copy)]
pub struct AmplitudeQuadrature {
    pub adaptive: AdaptiveSpec,
    /// Run the continuity gate before integrating.
    pub check_conservation: bool,
}

impl Default for AmplitudeQuadrature {
    fn default() -> Self {
        Self {
            adaptive: AdaptiveSpec {
                abs_tol: 1e-13,
                rel_tol: 1e-12,
                max_panels: 20000,
            },
            check_conservation: true,
        }
    }
}

/// Uniform part of the field: `A_0` and `E_0 = -dA_0/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroMode {
    pub a: Vec3,
    pub e: Vec3,
}

#[derive(Debug, Clone)]
pub struct ModeAmplitudeSet {
    pub t: f64,
    /// `[alpha_{k,1}, alpha_{k,2}]` in lattice mode order.
    pub alphas: Vec<[Complex64; 2]>,
    pub zero_mode: ZeroMode,
}

impl ModeAmplitudeSet {
    pub fn vacuum(lattice: &ModeLattice, t: f64) -> Self {
        Self {
            t,
            alphas: vec![[Complex64::new(0.0, 0.0); 2]; lattice.len()],
            zero_mode: ZeroMode::default(),
        }
    }

    /// Add a free-field coherent offset (interaction-picture amplitudes are constant
    /// for a free field, so the offset just adds).
    pub fn displace(&mut self, offsets: &[[Complex64; 2]]) -> Result<()> {
        if offsets.len() != self.alphas.len() {
            return Err(invalid(format!(
                "{} offsets for {} modes",
                offsets.len(),
                self.alphas.len()
            )));
        }
        for (a, o) in self.alphas.iter_mut().zip(offsets) {
            a[0] += o[0];
            a[1] += o[1];
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.alphas
            .iter()
            .flat_map(|a| a.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }
}

/// `sqrt(hbar / 2 V eps0 omega)`
pub(crate) fn mode_scale(lattice: &ModeLattice, omega: f64) -> f64 {
    let u = &lattice.units;
    (u.hbar / (2.0 * lattice.volume * u.epsilon0 * omega)).sqrt()
}

/// Amplitudes at time `t` starting from vacuum at `t = 0` (`t` may be negative).
pub fn evolve_amplitudes(
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    t: f64,
    spec: &AmplitudeQuadrature,
) -> Result<ModeAmplitudeSet> {
    ModeAmplitudeSet::vacuum(lattice, 0.0).advance(lattice, source, t, spec)
}

impl ModeAmplitudeSet {
    /// Continue the evolution from `self.t` to `t`.
    pub fn advance(
        &self,
        lattice: &ModeLattice,
        source: &dyn CurrentSource,
        t: f64,
        spec: &AmplitudeQuadrature,
    ) -> Result<ModeAmplitudeSet> {
        if self.alphas.len() != lattice.len() {
            return Err(invalid("amplitude set and lattice have different mode counts"));
        }
        if !t.is_finite() {
            return Err(invalid("evolution time must be finite"));
        }
        if matches!(source.support(t), Support::Unbounded { .. }) {
            return Err(invalid(format!(
                "source `{}` has unbounded support; the mode expansion needs a localized current",
                source.name()
            )));
        }
        if spec.check_conservation {
            gate_conservation(source, t)?;
        }
        let incr = drive_increments(lattice, source, self.t, t, &spec.adaptive)?;
        let alphas = self
            .alphas
            .iter()
            .zip(&incr)
            .map(|(a, d)| [a[0] + d[0], a[1] + d[1]])
            .collect();
        let zero_mode = advance_zero_mode(lattice, source, &self.zero_mode, self.t, t, &spec.adaptive)?;
        Ok(ModeAmplitudeSet { t, alphas, zero_mode })
    }
}

/// `[t0, t1]` clipped to where the source is active, with the orientation sign.
fn active_interval(source: &dyn CurrentSource, t0: f64, t1: f64) -> Option<(f64, f64, f64)> {
    let (lo, hi, sign) = if t0 <= t1 { (t0, t1, 1.0) } else { (t1, t0, -1.0) };
    let w = source.window();
    let (lo, hi) = (lo.max(w.start), hi.min(w.end));
    (lo < hi).then_some((lo, hi, sign))
}

/// Panel edges: the source's kinks plus a split every oscillation period.
fn panel_breaks(source: &dyn CurrentSource, lo: f64, hi: f64, omega: f64) -> Vec<f64> {
    let mut b: Vec<f64> = source.time_breaks().into_iter().filter(|&x| x > lo && x < hi).collect();
    let period = if omega > 0.0 { 2.0 * std::f64::consts::PI / omega } else { f64::INFINITY };
    let h = period.min(std::f64::consts::PI * source.time_scale());
    if h.is_finite() && h > 0.0 {
        let n = (((hi - lo) / h).ceil() as usize).min(4096);
        b.extend((1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
    }
    b
}

/// `int_{t0}^{t1} e^{i omega t'} h(t') dt'` for real `h`.
fn phase_integral(
    source: &dyn CurrentSource,
    h: impl Fn(f64) -> f64,
    omega: f64,
    t0: f64,
    t1: f64,
    spec: &AdaptiveSpec,
) -> Result<Complex64> {
    let Some((lo, hi, sign)) = active_interval(source, t0, t1) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let breaks = panel_breaks(source, lo, hi, omega);
    let v = integrate(|s| Complex64::from_polar(h(s), omega * s), lo, hi, &breaks, spec)?;
    Ok(v * sign)
}

/// `int_{t0}^{t1} e^{i omega t'} conj(j(k, t')) dt'` by whichever route the source supports.
fn mode_time_integral(
    source: &dyn CurrentSource,
    k: &Vec3,
    omega: f64,
    t0: f64,
    t1: f64,
    spec: &AdaptiveSpec,
) -> Result<CVec3> {
    if let Some(v) = source.fourier_time_integral(k, omega, t0, t1) {
        return Ok(v);
    }
    let Some((lo, hi, sign)) = active_interval(source, t0, t1) else {
        return Ok(CVec3::zeros());
    };
    let breaks = panel_breaks(source, lo, hi, omega);
    let v = integrate(
        |s| {
            let ph = Complex64::from_polar(1.0, omega * s);
            source.current_fourier(k, s).map(|z| ph * z.conj())
        },
        lo,
        hi,
        &breaks,
        spec,
    )?;
    Ok(v.map(|z| z * sign))
}

fn drive_increments(
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    t0: f64,
    t1: f64,
    spec: &AdaptiveSpec,
) -> Result<Vec<[Complex64; 2]>> {
    let hbar = lattice.units.hbar;
    let prefactor = |omega: f64| Complex64::new(0.0, mode_scale(lattice, omega) / hbar);
    let project = |v: &CVec3, eps: &[CVec3; 2]| -> [Complex64; 2] {
        [v.dot(&eps[0]), v.dot(&eps[1])]
    };

    if active_interval(source, t0, t1).is_none() {
        return Ok(vec![[Complex64::new(0.0, 0.0); 2]; lattice.len()]);
    }

    if let Some(sep) = source.separable() {
        // The profile integral depends on |k| only.
        let mut shells: Vec<u32> = lattice
            .modes
            .iter()
            .map(|m| m.n.iter().map(|c| (c * c) as u32).sum())
            .collect();
        shells.sort_unstable();
        shells.dedup();
        let by_shell: Vec<(u32, Complex64)> = shells
            .par_iter()
            .map(|&n2| {
                let omega = lattice.units.c * 2.0 * std::f64::consts::PI * (n2 as f64).sqrt() / lattice.length;
                phase_integral(source, |s| sep.current_profile(s), omega, t0, t1, spec).map(|v| (n2, v))
            })
            .collect::<Result<_>>()?;
        let table: HashMap<u32, Complex64> = by_shell.into_iter().collect();
        return Ok(lattice
            .modes
            .par_iter()
            .map(|m| {
                let n2: u32 = m.n.iter().map(|c| (c * c) as u32).sum();
                let shape = sep.current_shape(&m.k).map(|z| z.conj());
                let v = shape.map(|z| z * table[&n2]);
                let p = prefactor(m.omega);
                let [a, b] = project(&v, &m.eps);
                [p * a, p * b]
            })
            .collect());
    }

    lattice
        .modes
        .par_iter()
        .map(|m| {
            let v = mode_time_integral(source, &m.k, m.omega, t0, t1, spec)?;
            let p = prefactor(m.omega);
            let [a, b] = project(&v, &m.eps);
            Ok([p * a, p * b])
        })
        .collect()
}

fn advance_zero_mode(
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    z: &ZeroMode,
    t0: f64,
    t1: f64,
    spec: &AdaptiveSpec,
) -> Result<ZeroMode> {
    let scale = 1.0 / (lattice.units.epsilon0 * lattice.volume);
    let mut a = z.a - z.e * (t1 - t0);
    let mut e = z.e;
    if let Some((lo, hi, sign)) = active_interval(source, t0, t1) {
        let breaks = panel_breaks(source, lo, hi, 0.0);
        let j0 = |s: f64| source.current_fourier(&Vec3::zeros(), s).map(|c| c.re);
        let int_j: Vec3 = integrate(j0, lo, hi, &breaks, spec)?;
        let int_tj: Vec3 = integrate(|s| j0(s) * (t1 - s), lo, hi, &breaks, spec)?;
        a += int_tj * (sign * scale);
        e -= int_j * (sign * scale);
    }
    Ok(ZeroMode { a, e })
}
