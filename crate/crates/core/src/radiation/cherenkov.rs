//! Cherenkov emission of a uniformly moving charge: angles, the closed-form
//! spectrum and the spectrum rebuilt from finite-time mode amplitudes.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DielectricMedium;
use crate::error::{invalid, Error, Result};
use crate::mode_basis::linear_polarization;
use crate::special::{cin, si};
use crate::units::UnitSystem;
use crate::Vec3;

fn check_speed(v: f64, u: &UnitSystem) -> Result<()> {
    if !(v > 0.0 && v < u.c) {
        return Err(invalid(format!("speed must lie in (0, c), got {v}")));
    }
    Ok(())
}

/// `cos theta_C = c / (n v)`.
pub fn cherenkov_angle(v: f64, n: f64, u: &UnitSystem) -> Result<f64> {
    check_speed(v, u)?;
    let cos = u.c / (n * v);
    if !(cos < 1.0) {
        return Err(Error::BelowThreshold(format!("n v / c = {} <= 1", n * v / u.c)));
    }
    Ok(cos.acos())
}

/// Angle with the photon recoil correction
/// `cos theta = (c / n v) [1 + hbar omega (n^2 - 1) sqrt(1 - v^2/c^2) / (2 m c^2)]`.
pub fn cherenkov_angle_quantum(v: f64, n: f64, omega: f64, mass: f64, u: &UnitSystem) -> Result<f64> {
    check_speed(v, u)?;
    if !(mass > 0.0) || !(omega >= 0.0) {
        return Err(invalid("need mass > 0 and omega >= 0"));
    }
    let classical = u.c / (n * v);
    if !(classical < 1.0) {
        return Err(Error::BelowThreshold(format!("n v / c = {} <= 1", n * v / u.c)));
    }
    let gamma_inv = (1.0 - (v / u.c).powi(2)).sqrt();
    let corr = u.hbar * omega * (n * n - 1.0) * gamma_inv / (2.0 * mass * u.c * u.c);
    let cos = classical * (1.0 + corr);
    if !(-1.0..=1.0).contains(&cos) {
        return Err(Error::KinematicCutoff(cos));
    }
    Ok(cos.acos())
}

/// `P(omega) = (q^2 / 4 pi eps0 c) (v/c) omega (1 - c^2 / n^2 v^2)`, zero below threshold.
pub fn cherenkov_power_closed(q: f64, v: f64, n: f64, omega: f64, u: &UnitSystem) -> f64 {
    let cos = u.c / (n * v);
    if cos >= 1.0 {
        return 0.0;
    }
    q * q / (4.0 * std::f64::consts::PI * u.epsilon0 * u.c) * (v / u.c) * omega * (1.0 - cos * cos)
}

fn check_grid(q: f64, v: f64, medium: &DielectricMedium, grid: &[f64], u: &UnitSystem) -> Result<()> {
    check_speed(v, u)?;
    medium.validate()?;
    if !q.is_finite() || grid.iter().any(|w| !w.is_finite()) {
        return Err(invalid("charge and frequencies must be finite"));
    }
    let emits = grid.iter().any(|&w| medium.in_band(w) && medium.index(w) * v > u.c);
    if !emits {
        return Err(Error::BelowThreshold("no frequency sample lies in the emission band".into()));
    }
    Ok(())
}

/// Closed-form spectrum; zero outside the band and below threshold.
pub fn cherenkov_power_spectrum(
    q: f64,
    v: f64,
    medium: &DielectricMedium,
    omega_grid: &[f64],
    u: &UnitSystem,
) -> Result<Vec<f64>> {
    check_grid(q, v, medium, omega_grid, u)?;
    Ok(omega_grid
        .iter()
        .map(|&w| if medium.in_band(w) { cherenkov_power_closed(q, v, medium.index(w), w, u) } else { 0.0 })
        .collect())
}

/// `int_0^T e^{i delta t} dt = (e^{i delta T} - 1) / (i delta)`.
pub fn window_integral(delta: f64, t: f64) -> Complex64 {
    let h = 0.5 * delta * t;
    let sinc = if h.abs() < 1e-8 { 1.0 - h * h / 6.0 } else { h.sin() / h };
    Complex64::from_polar(t * sinc, h)
}

/// Amplitude of mode `(k, lambda)` after time `T` for the charge `q` moving at
/// velocity `v` through the medium, in a box of volume `volume`. The medium
/// normalization `n n_g eps0` reduces to `eps eps0` without dispersion.
#[allow(clippy::too_many_arguments)]
pub fn cherenkov_amplitude(
    k: &Vec3,
    lambda: usize,
    v: &Vec3,
    q: f64,
    medium: &DielectricMedium,
    t: f64,
    volume: f64,
    u: &UnitSystem,
) -> Result<Complex64> {
    if !(t > 0.0) || lambda > 1 || !(volume > 0.0) {
        return Err(invalid("need T > 0, lambda in {0, 1} and volume > 0"));
    }
    let w = medium.omega_for_k(k.norm(), u.c)?;
    let (e1, e2) = linear_polarization(&k.normalize());
    let eps = if lambda == 0 { e1 } else { e2 };
    let norm = (u.hbar / (2.0 * volume * u.epsilon0 * medium.index(w) * medium.group_index(w) * w)).sqrt();
    Ok(Complex64::i() / u.hbar * norm * q * v.dot(&eps) * window_integral(w - k.dot(v), t))
}

/// `int_{-1}^{1} (1 - mu^2) |W(omega - s mu, T)|^2 d mu` in closed form.
///
/// With `x = omega - s mu` the integrand is a quadratic in `x` times
/// `2 (1 - cos xT) / x^2`, whose antiderivatives are Si/Cin combinations.
pub fn shell_angular_integral(omega: f64, s: f64, t: f64) -> f64 {
    let (x1, x2) = (omega - s, omega + s);
    // 1 - mu^2 = a + b x + c x^2
    let s2 = s * s;
    let (a, b, c) = ((s2 - omega * omega) / s2, 2.0 * omega / s2, -1.0 / s2);
    // int_0^y (1 - cos xT)/x^2 dx, odd extension
    let g0 = |x: f64| {
        let y = x.abs();
        let h = if y == 0.0 {
            0.0
        } else {
            let sh = (0.5 * y * t).sin();
            -2.0 * sh * sh / y + t * si(y * t)
        };
        h.copysign(x)
    };
    // int_0^x (1 - cos xT)/x dx, even
    let g1 = |x: f64| cin(x.abs() * t);
    let i0 = 2.0 * (g0(x2) - g0(x1));
    let i1 = 2.0 * (g1(x2) - g1(x1));
    let i2 = 2.0 * ((x2 - x1) - ((x2 * t).sin() - (x1 * t).sin()) / t);
    (a * i0 + b * i1 + c * i2) / s
}

/// Spectral power from the `|k|` shell after time `T`: `<H_0>(T) / T` per unit
/// frequency, assembled from `hbar omega |alpha|^2`. Returns `(omega, P)`.
pub fn amplitude_route_power(
    q: f64,
    v: f64,
    medium: &DielectricMedium,
    k: f64,
    t: f64,
    u: &UnitSystem,
) -> Result<(f64, f64)> {
    check_speed(v, u)?;
    if !(t > 0.0) {
        return Err(invalid("T must be positive"));
    }
    let w = medium.omega_for_k(k, u.c)?;
    let (n, ng) = (medium.index(w), medium.group_index(w));
    let volume = 1.0;
    // |alpha|^2 without the polarization and window factors
    let pref = q * q / (u.hbar * u.hbar) * u.hbar / (2.0 * volume * u.epsilon0 * n * ng * w);
    // sum_lambda |v . eps|^2 = v^2 (1 - mu^2), folded into the shell integral
    let shell = 2.0 * std::f64::consts::PI * v * v * shell_angular_integral(w, k * v, t);
    let per_k = volume / (2.0 * std::f64::consts::PI).powi(3) * k * k * u.hbar * w * pref * shell;
    let dk_domega = ng / u.c;
    Ok((w, per_k * dk_domega / t))
}

/// Amplitude-route spectrum on `omega_grid` after time `T`.
pub fn cherenkov_power_spectrum_amplitude(
    q: f64,
    v: f64,
    medium: &DielectricMedium,
    omega_grid: &[f64],
    t: f64,
    u: &UnitSystem,
) -> Result<Vec<f64>> {
    check_grid(q, v, medium, omega_grid, u)?;
    omega_grid
        .par_iter()
        .map(|&w| {
            if !medium.in_band(w) {
                return Ok(0.0);
            }
            let k = medium.index(w) * w / u.c;
            amplitude_route_power(q, v, medium, k, t, u).map(|(_, p)| p)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub omega: f64,
    pub power: f64,
    pub theta_c: Option<f64>,
    pub theta_c_quantum: Option<f64>,
}

pub fn write_spectrum_csv<W: Write>(samples: &[SpectrumSample], mut w: W) -> Result<()> {
    writeln!(w, "omega,P,theta_C,theta_C_quantum")?;
    let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), |v| format!("{v:e}"));
    for s in samples {
        writeln!(w, "{:e},{:e},{},{}", s.omega, s.power, opt(s.theta_c), opt(s.theta_c_quantum))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::FixedRule;
    use crate::units::codata;
    use std::f64::consts::PI;

    fn water_like() -> DielectricMedium {
        DielectricMedium::Constant { n: 1.5, omega_c: 10.0 }
    }

    #[test]
    fn classical_angle() {
        let u = UnitSystem::natural();
        let th = cherenkov_angle(0.9, 1.5, &u).unwrap();
        assert!((th.cos() - 0.740_740_740_740_740_7).abs() < 1e-15);
        assert!((th.to_degrees() - 42.2).abs() < 0.05);
        let near = cherenkov_angle(0.9, 1.0 / 0.9 + 1e-12, &u).unwrap();
        assert!(near < 1e-5);
        assert!(matches!(cherenkov_angle(0.5, 1.5, &u), Err(Error::BelowThreshold(_))));
    }

    #[test]
    fn quantum_angle() {
        let u = UnitSystem::si();
        let c = u.c;
        let m = codata::ELECTRON_MASS;
        let v = 0.9 * c;
        let omega = 2.0 * codata::ELEMENTARY_CHARGE / u.hbar;
        let cq = cherenkov_angle_quantum(v, 1.5, omega, m, &u).unwrap().cos();
        let cc = cherenkov_angle(v, 1.5, &u).unwrap().cos();
        let rel = cq / cc - 1.0;
        let want = 2.0 * codata::ELEMENTARY_CHARGE * 1.25 * (1.0f64 - 0.81).sqrt() / (2.0 * m * c * c);
        assert!((rel / want - 1.0).abs() < 1e-8, "{rel} vs {want}");
        assert!((rel - 1.1e-6).abs() < 0.05e-6);
        // n = 1 kills the correction, but is below threshold anyway
        assert!(cherenkov_angle_quantum(v, 1.0, omega, m, &u).is_err());
        // hbar -> 0
        let tiny = u.with_hbar(1e-60);
        let c0 = cherenkov_angle_quantum(v, 1.5, omega, m, &tiny).unwrap();
        assert!((c0 - cc.acos()).abs() < 1e-15);
        // huge photon energy pushes the cosine past 1
        let nat = UnitSystem::natural();
        assert!(matches!(
            cherenkov_angle_quantum(0.9, 1.5, 10.0, 1.0, &nat),
            Err(Error::KinematicCutoff(_))
        ));
    }

    #[test]
    fn closed_form_spectrum() {
        let u = UnitSystem::natural();
        let grid: Vec<f64> = (1..=5).map(|i| i as f64).collect();
        let p = cherenkov_power_spectrum(1.0, 0.9, &water_like(), &grid, &u).unwrap();
        let want = 1.0 / (4.0 * PI) * 0.9 * (1.0 - (1.0f64 / 1.35).powi(2));
        for (w, pw) in grid.iter().zip(&p) {
            assert!((pw / w - want).abs() < 1e-15);
        }
        assert!((1.0 - (1.0f64 / 1.35).powi(2) - (1.0 - 0.5487)).abs() < 1e-4);
        // P >= 0, zero outside band and below threshold
        let p = cherenkov_power_spectrum(1.0, 0.9, &water_like(), &[5.0, 12.0], &u).unwrap();
        assert_eq!(p[1], 0.0);
        assert!(matches!(
            cherenkov_power_spectrum(1.0, 0.6, &water_like(), &grid, &u),
            Err(Error::BelowThreshold(_))
        ));
        // hbar plays no role
        let u2 = UnitSystem::si();
        let a = cherenkov_power_closed(1.0, 0.9 * u2.c, 1.5, 3.0, &u2);
        let b = cherenkov_power_closed(1.0, 0.9 * u2.c, 1.5, 3.0, &u2.with_hbar(2.0 * u2.hbar));
        assert_eq!(a, b);
    }

    #[test]
    fn window_examples() {
        assert!((window_integral(0.0, 3.0) - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        let t = 5.0;
        assert!(window_integral(2.0 * PI / t, t).norm() < 1e-14);
        let d = 0.37;
        let direct = ((Complex64::i() * d * t).exp() - 1.0) / (Complex64::i() * d);
        assert!((window_integral(d, t) - direct).norm() < 1e-14);
    }

    #[test]
    fn shell_integral_matches_quadrature() {
        for (omega, s, t) in [(2.0, 2.7, 13.0), (1.0, 0.6, 40.0), (3.0, 4.5, 0.7)] {
            let rule = FixedRule::new(40, -1.0, 1.0);
            let mut q = 0.0;
            // panels fine enough to resolve the sinc^2 oscillation
            let panels = 400;
            for p in 0..panels {
                let (a, b) = (-1.0 + 2.0 * p as f64 / panels as f64, -1.0 + 2.0 * (p + 1) as f64 / panels as f64);
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let mu = a + (b - a) * (x + 1.0) / 2.0;
                    q += w * (b - a) / 2.0 * (1.0 - mu * mu) * window_integral(omega - s * mu, t).norm_sqr();
                }
            }
            let exact = shell_angular_integral(omega, s, t);
            assert!((exact - q).abs() < 1e-9 * q, "{exact} vs {q}");
        }
    }

    #[test]
    fn shell_sum_grows_linearly_in_t() {
        // above threshold the shell sum approaches 2 pi T (1 - cos^2 theta_C) / s
        let (omega, s) = (2.0, 2.7);
        let mu_c = omega / s;
        for t in [1e3, 1e4] {
            let j = shell_angular_integral(omega, s, t);
            let lim = 2.0 * PI * t * (1.0 - mu_c * mu_c) / s;
            assert!((j / lim - 1.0).abs() < 50.0 / t, "{}", j / lim);
        }
    }

    #[test]
    fn polarization_sum_and_explicit_amplitudes() {
        let u = UnitSystem::natural();
        let m = water_like();
        let v = Vec3::new(0.0, 0.0, 0.9);
        let k = Vec3::new(1.2, -0.4, 2.1);
        let w = m.omega_for_k(k.norm(), 1.0).unwrap();
        let t = 7.0;
        let a: f64 = (0..2).map(|l| cherenkov_amplitude(&k, l, &v, 1.0, &m, t, 2.0, &u).unwrap().norm_sqr()).sum();
        let cos = k.normalize().dot(&v.normalize());
        let want = 1.0 / (2.0 * 2.0 * 1.5 * 1.5 * w) * 0.81 * (1.0 - cos * cos) * window_integral(w - k.dot(&v), t).norm_sqr();
        assert!((a / want - 1.0).abs() < 1e-12);
        // hbar omega |alpha|^2 does not see hbar
        let u2 = u.with_hbar(2.0);
        let b: f64 = (0..2).map(|l| cherenkov_amplitude(&k, l, &v, 1.0, &m, t, 2.0, &u2).unwrap().norm_sqr()).sum();
        assert!((2.0 * b / a - 1.0).abs() < 1e-14);
    }

    #[test]
    fn amplitude_route_converges_like_one_over_t() {
        let u = UnitSystem::natural();
        let m = water_like();
        let grid: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64).collect();
        let closed = cherenkov_power_spectrum(1.0, 0.9, &m, &grid, &u).unwrap();
        let err = |periods: f64| -> Vec<f64> {
            grid.iter()
                .zip(&closed)
                .map(|(&w, &c)| {
                    let t = periods * 2.0 * PI / w;
                    let k = 1.5 * w;
                    let (w2, p) = amplitude_route_power(1.0, 0.9, &m, k, t, &u).unwrap();
                    assert!((w2 / w - 1.0).abs() < 1e-13);
                    (p / c - 1.0).abs()
                })
                .collect()
        };
        let e1 = err(200.0);
        let e2 = err(400.0);
        for (a, b) in e1.iter().zip(&e2) {
            assert!(*a < 0.03);
            assert!((a / b - 2.0).abs() < 0.1, "{a} {b}");
        }
    }

    #[test]
    fn dispersive_medium_converges_too() {
        let u = UnitSystem::natural();
        let m = DielectricMedium::Sellmeier {
            terms: vec![crate::radiation::SellmeierTerm { b: 1.1, omega0: 12.0 }],
            omega_c: 6.0,
        };
        for w in [1.0, 3.0, 5.0] {
            let closed = cherenkov_power_spectrum(1.0, 0.9, &m, &[w], &u).unwrap()[0];
            let amp = cherenkov_power_spectrum_amplitude(1.0, 0.9, &m, &[w], 2000.0 * 2.0 * PI / w, &u).unwrap()[0];
            assert!((amp / closed - 1.0).abs() < 2e-3, "{w}: {amp} vs {closed}");
        }
    }
}
