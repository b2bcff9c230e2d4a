//! One forced oscillator mode: quadrature means, variances and the c-number phase.
//!
//! The mode obeys `Q'' + omega^2 Q = f(t)`. In the interaction picture the
//! drive enters as `H_I(t) = g(t) (a e^{-i omega t} + a* e^{i omega t})` with
//! `g = -f sqrt(hbar / 2 omega)`, and the evolved state is
//! `exp(i phi / hbar) D(beta) |psi(0)>`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::{integrate, AdaptiveSpec};
use crate::units::UnitSystem;

/// First and second moments of `(Q, P)`.
///
/// `sym_cov = <PQ + QP> - 2 <Q><P>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureState {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub sym_cov: f64,
}

impl QuadratureState {
    /// Robertson-Schrodinger bound `var_q var_p - (sym_cov/2)^2 >= (hbar/2)^2`,
    /// with a relative slack for rounding.
    pub fn satisfies_uncertainty(&self, hbar: f64) -> bool {
        let lhs = self.var_q * self.var_p - 0.25 * self.sym_cov * self.sym_cov;
        let rhs = 0.25 * hbar * hbar;
        lhs >= rhs * (1.0 - 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Coherent { re: f64, im: f64 },
    Fock { n: u32 },
    /// `(|0> + |1>)/sqrt 2`
    Superposition01,
    /// User-supplied moments (must satisfy the uncertainty relation).
    Moments(QuadratureState),
}

impl InitialState {
    pub fn coherent(alpha: Complex64) -> Self {
        InitialState::Coherent {
            re: alpha.re,
            im: alpha.im,
        }
    }

    pub fn moments(&self, omega: f64, hbar: f64) -> Result<QuadratureState> {
        check_omega(omega)?;
        let q0 = hbar / (2.0 * omega);
        let p0 = hbar * omega / 2.0;
        let m = match *self {
            InitialState::Coherent { re, im } => QuadratureState {
                mean_q: (2.0 * hbar / omega).sqrt() * re,
                mean_p: (2.0 * hbar * omega).sqrt() * im,
                var_q: q0,
                var_p: p0,
                sym_cov: 0.0,
            },
            InitialState::Fock { n } => {
                let s = 2.0 * n as f64 + 1.0;
                QuadratureState {
                    mean_q: 0.0,
                    mean_p: 0.0,
                    var_q: s * q0,
                    var_p: s * p0,
                    sym_cov: 0.0,
                }
            }
            // <a> = 1/2, <a^2> = 0, <a* a> = 1/2
            InitialState::Superposition01 => QuadratureState {
                mean_q: q0.sqrt(),
                mean_p: 0.0,
                var_q: q0,
                var_p: 2.0 * p0,
                sym_cov: 0.0,
            },
            InitialState::Moments(m) => {
                if !(m.var_q >= 0.0 && m.var_p >= 0.0) || !m.satisfies_uncertainty(hbar) {
                    return Err(invalid("supplied moments violate the uncertainty relation"));
                }
                m
            }
        };
        Ok(m)
    }
}

type DriveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Real drive `f(t)`, zero outside `[t_on, t_off]`. The same type is used for
/// `g(t)` when computing the c-number phase.
#[derive(Clone)]
pub enum DriveFunction {
    Zero,
    Constant { value: f64, t_on: f64, t_off: f64 },
    /// `amplitude * sin(frequency * t + phase)` on the window.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
        t_on: f64,
        t_off: f64,
    },
    /// Delta kicks `sum_i area_i delta(t - time_i)`.
    Impulses(Vec<(f64, f64)>),
    Custom { f: DriveFn, t_on: f64, t_off: f64 },
}

impl fmt::Debug for DriveFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriveFunction::Zero => write!(fm, "Zero"),
            DriveFunction::Constant { value, t_on, t_off } => {
                write!(fm, "Constant({value} on [{t_on}, {t_off}])")
            }
            DriveFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                t_on,
                t_off,
            } => write!(
                fm,
                "Sinusoid({amplitude} sin({frequency} t + {phase}) on [{t_on}, {t_off}])"
            ),
            DriveFunction::Impulses(k) => write!(fm, "Impulses({k:?})"),
            DriveFunction::Custom { t_on, t_off, .. } => write!(fm, "Custom(on [{t_on}, {t_off}])"),
        }
    }
}

/// `int_a^b e^{i mu t} dt`, stable for small `mu`.
pub(crate) fn exp_window(mu: f64, a: f64, b: f64) -> Complex64 {
    let h = b - a;
    if h <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let x = mu * h;
    // (e^{ix} - 1)/(i mu) = h e^{ix/2} sinc(x/2)
    let half = 0.5 * x;
    let sinc = if half.abs() < 1e-4 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    Complex64::from_polar(h * sinc, mu * a + half)
}

impl DriveFunction {
    pub fn constant(value: f64) -> Self {
        DriveFunction::Constant {
            value,
            t_on: 0.0,
            t_off: f64::INFINITY,
        }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, t_on: f64, t_off: f64) -> Self {
        DriveFunction::Custom {
            f: Arc::new(f),
            t_on,
            t_off,
        }
    }

    fn window(&self) -> Option<(f64, f64)> {
        match *self {
            DriveFunction::Constant { t_on, t_off, .. }
            | DriveFunction::Sinusoid { t_on, t_off, .. }
            | DriveFunction::Custom { t_on, t_off, .. } => Some((t_on, t_off)),
            _ => None,
        }
    }

    /// Pointwise value. Impulses evaluate to 0 (their weight is distributional).
    pub fn eval(&self, t: f64) -> f64 {
        if let Some((on, off)) = self.window() {
            if t < on || t > off {
                return 0.0;
            }
        }
        match self {
            DriveFunction::Zero | DriveFunction::Impulses(_) => 0.0,
            DriveFunction::Constant { value, .. } => *value,
            DriveFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                ..
            } => amplitude * (frequency * t + phase).sin(),
            DriveFunction::Custom { f, .. } => f(t),
        }
    }

    /// `F(t) = int_0^t f(t') e^{-i omega t'} dt'`.
    pub fn fourier_integral(&self, omega: f64, t: f64) -> Result<Complex64> {
        let clip = |on: f64, off: f64| (on.max(0.0), off.min(t));
        let v = match self {
            DriveFunction::Zero => Complex64::new(0.0, 0.0),
            DriveFunction::Constant { value, t_on, t_off } => {
                let (a, b) = clip(*t_on, *t_off);
                exp_window(-omega, a, b) * *value
            }
            DriveFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                t_on,
                t_off,
            } => {
                let (a, b) = clip(*t_on, *t_off);
                let up = Complex64::from_polar(1.0, *phase) * exp_window(frequency - omega, a, b);
                let down = Complex64::from_polar(1.0, -phase) * exp_window(-frequency - omega, a, b);
                (up - down) * Complex64::new(0.0, -0.5 * amplitude)
            }
            DriveFunction::Impulses(kicks) => kicks
                .iter()
                .filter(|(ti, _)| *ti >= 0.0 && *ti <= t)
                .map(|&(ti, w)| Complex64::from_polar(w, -omega * ti))
                .sum(),
            DriveFunction::Custom { f, t_on, t_off } => {
                let (a, b) = clip(*t_on, *t_off);
                if b <= a {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let spec = AdaptiveSpec {
                    abs_tol: 1e-12,
                    rel_tol: 1e-13,
                    max_panels: 20_000,
                };
                integrate(|s| Complex64::from_polar(f(s), -omega * s), a, b, &[], &spec)?
            }
        };
        Ok(v)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(invalid(format!("mode frequency must be positive, got {omega}")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("evolution starts at t = 0; got t = {t}")));
    }
    Ok(())
}

/// Forced response `int_0^t f(t') e^{i omega (t - t')} dt'`:
/// the imaginary part is the sine kernel, the real part the cosine kernel.
fn forced_response(omega: f64, f: &DriveFunction, t: f64) -> Result<Complex64> {
    Ok(Complex64::from_polar(1.0, omega * t) * f.fourier_integral(omega, t)?)
}

/// `<Q>(t) = <Q> cos wt + (<P>/w) sin wt + (1/w) int_0^t f(t') sin(w(t - t')) dt'`.
pub fn evolve_mean_q(
    state: &InitialState,
    omega: f64,
    f: &DriveFunction,
    t: f64,
    u: &UnitSystem,
) -> Result<f64> {
    check_time(t)?;
    let m = state.moments(omega, u.hbar)?;
    let (s, c) = (omega * t).sin_cos();
    let forced = forced_response(omega, f, t)?.im / omega;
    Ok(m.mean_q * c + m.mean_p / omega * s + forced)
}

/// `<P>(t) = <P> cos wt - w <Q> sin wt + int_0^t f(t') cos(w(t - t')) dt'`.
pub fn evolve_mean_p(
    state: &InitialState,
    omega: f64,
    f: &DriveFunction,
    t: f64,
    u: &UnitSystem,
) -> Result<f64> {
    check_time(t)?;
    let m = state.moments(omega, u.hbar)?;
    let (s, c) = (omega * t).sin_cos();
    let forced = forced_response(omega, f, t)?.re;
    Ok(m.mean_p * c - omega * m.mean_q * s + forced)
}

/// `(Delta Q)^2(t)`. The drive only shifts the mean, so there is no drive argument.
pub fn variance_q(state: &InitialState, omega: f64, t: f64, u: &UnitSystem) -> Result<f64> {
    let m = state.moments(omega, u.hbar)?;
    let (s, c) = (omega * t).sin_cos();
    Ok(m.var_q * c * c + m.var_p * s * s / (omega * omega) + c * s / omega * m.sym_cov)
}

/// `(Delta P)^2(t)`.
pub fn variance_p(state: &InitialState, omega: f64, t: f64, u: &UnitSystem) -> Result<f64> {
    let m = state.moments(omega, u.hbar)?;
    let (s, c) = (omega * t).sin_cos();
    Ok(m.var_p * c * c + omega * omega * m.var_q * s * s - omega * c * s * m.sym_cov)
}

/// `sym_cov(t)` under free rotation of the quadratures.
pub fn sym_cov(state: &InitialState, omega: f64, t: f64, u: &UnitSystem) -> Result<f64> {
    let m = state.moments(omega, u.hbar)?;
    let (s, c) = (omega * t).sin_cos();
    let two_sc = 2.0 * s * c;
    Ok(m.sym_cov * (c * c - s * s) + two_sc * (m.var_p / omega - omega * m.var_q))
}

/// All moments at time `t`.
pub fn evolve(
    state: &InitialState,
    omega: f64,
    f: &DriveFunction,
    t: f64,
    u: &UnitSystem,
) -> Result<QuadratureState> {
    Ok(QuadratureState {
        mean_q: evolve_mean_q(state, omega, f, t, u)?,
        mean_p: evolve_mean_p(state, omega, f, t, u)?,
        var_q: variance_q(state, omega, t, u)?,
        var_p: variance_p(state, omega, t, u)?,
        sym_cov: sym_cov(state, omega, t, u)?,
    })
}

/// Displacement `beta(t) = -(i/hbar) int_0^t g(t') e^{i omega t'} dt'` generated by `g`.
pub fn displacement(omega: f64, g: &DriveFunction, t: f64, u: &UnitSystem) -> Result<Complex64> {
    check_omega(omega)?;
    check_time(t)?;
    // int g e^{+i w t'} = conj(int g e^{-i w t'}) for real g
    let gi = g.fourier_integral(omega, t)?.conj();
    Ok(Complex64::new(0.0, -1.0 / u.hbar) * gi)
}

/// C-number phase `phi(t) = (1/hbar) int_0^t dt' int_0^t' dt'' g(t') g(t'') sin(omega (t' - t''))`.
///
/// The state picks up `exp(i phi / hbar)`, so `phi` carries units of action.
pub fn cnumber_phase(omega: f64, g: &DriveFunction, t: f64, u: &UnitSystem) -> Result<f64> {
    check_omega(omega)?;
    check_time(t)?;
    let inner = |s: f64| -> Result<f64> {
        // sin(w(s - t'')) = Im(e^{i w s} e^{-i w t''})
        Ok((Complex64::from_polar(1.0, omega * s) * g.fourier_integral(omega, s)?).im)
    };
    let total = match g {
        DriveFunction::Zero => 0.0,
        DriveFunction::Impulses(kicks) => {
            let mut inside: Vec<(f64, f64)> = kicks
                .iter()
                .copied()
                .filter(|(ti, _)| *ti >= 0.0 && *ti <= t)
                .collect();
            inside.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut acc = 0.0;
            for (i, &(ti, wi)) in inside.iter().enumerate() {
                for &(tj, wj) in &inside[..i] {
                    acc += wi * wj * (omega * (ti - tj)).sin();
                }
            }
            acc
        }
        _ => {
            let (on, off) = g.window().unwrap_or((0.0, t));
            let (a, b) = (on.max(0.0), off.min(t));
            if b <= a {
                0.0
            } else {
                let spec = AdaptiveSpec {
                    abs_tol: 1e-12,
                    rel_tol: 1e-12,
                    max_panels: 20_000,
                };
                // Errors from the inner integral surface as NaN and are caught below.
                let v = integrate(
                    |s| g.eval(s) * inner(s).unwrap_or(f64::NAN),
                    a,
                    b,
                    &[],
                    &spec,
                )?;
                if !v.is_finite() {
                    return Err(crate::Error::Quadrature("inner phase integral failed".into()));
                }
                v
            }
        }
    };
    Ok(total / u.hbar)
}
