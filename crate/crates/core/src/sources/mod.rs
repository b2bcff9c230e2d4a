//! Prescribed classical currents `j(x, t)`, `rho(x, t)` and their spatial
//! Fourier transforms `j(k, t) = int d^3x e^{i k.x} j(x, t)`.

mod charges;
mod dipole;
mod helmholtz;
mod spec;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::shells::Support;
use crate::{CVec3, Vec3};

pub use charges::{GaussianBlobs, GaussianWire, StaticCharge, UniformCharge, Vacuum};
pub use dipole::{make_switched_dipole, smootherstep, SwitchedDipole};
pub use helmholtz::{
    coulomb_gradient, longitudinal_current, longitudinal_current_quadrature, numeric_fourier,
    transverse_current, HelmholtzRule,
};
pub use spec::SourceSpec;

/// Interval outside of which the source vanishes identically.
/// `start = -inf` marks a steady source (no switch-on front).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub const ALWAYS: TimeWindow = TimeWindow {
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
    };

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Sources whose transforms factor as `j(k, t) = f(t) J(k)`, `rho(k, t) = h(t) R(k)`
/// with real `f`, `h`.
pub trait SeparableSource: Send + Sync {
    fn current_profile(&self, t: f64) -> f64;
    fn charge_profile(&self, t: f64) -> f64;
    fn current_shape(&self, k: &Vec3) -> CVec3;
    fn charge_shape(&self, k: &Vec3) -> Complex64;
    /// Times where the profiles lose smoothness.
    fn profile_breaks(&self) -> Vec<f64>;
}

/// A conserved classical current. Derivative methods default to central
/// differences; built-in models override them with analytic forms.
pub trait CurrentSource: Send + Sync {
    fn name(&self) -> &str;

    fn current(&self, x: &Vec3, t: f64) -> Vec3;
    fn charge(&self, x: &Vec3, t: f64) -> f64;

    fn support(&self, t: f64) -> Support;
    fn window(&self) -> TimeWindow;

    fn switch_on(&self) -> Option<f64> {
        let s = self.window().start;
        s.is_finite().then_some(s)
    }

    fn is_steady(&self) -> bool {
        self.window().start == f64::NEG_INFINITY
    }

    /// Points where the real-space fields are singular (ideal point charges).
    fn singular_points(&self, _t: f64) -> Vec<Vec3> {
        Vec::new()
    }

    /// Smallest length over which the source changes (sets difference steps).
    fn length_scale(&self) -> f64 {
        match self.support(0.0) {
            Support::Ball { radius, .. } if radius > 0.0 => radius / 5.0,
            _ => 1.0,
        }
    }

    /// Characteristic time over which the source changes (sets difference steps).
    fn time_scale(&self) -> f64 {
        1.0
    }

    /// Kinks in the time dependence, for quadrature panel edges.
    fn time_breaks(&self) -> Vec<f64> {
        let w = self.window();
        [w.start, w.end].into_iter().filter(|t| t.is_finite()).collect()
    }

    fn current_fourier(&self, k: &Vec3, t: f64) -> CVec3 {
        numeric_fourier(self, k, t, 64).0
    }

    fn charge_fourier(&self, k: &Vec3, t: f64) -> Complex64 {
        numeric_fourier(self, k, t, 64).1
    }

    /// Closed form of `int_{t0}^{t1} e^{i omega t'} conj(j(k, t')) dt'` when available.
    fn fourier_time_integral(&self, _k: &Vec3, _omega: f64, _t0: f64, _t1: f64) -> Option<CVec3> {
        None
    }

    fn separable(&self) -> Option<&dyn SeparableSource> {
        None
    }

    /// `d j / dt`
    fn current_rate(&self, x: &Vec3, t: f64) -> Vec3 {
        let h = time_step(self);
        (self.current(x, t + h) - self.current(x, t - h)) / (2.0 * h)
    }

    /// `d rho / dt`
    fn charge_rate(&self, x: &Vec3, t: f64) -> f64 {
        let h = time_step(self);
        (self.charge(x, t + h) - self.charge(x, t - h)) / (2.0 * h)
    }

    fn charge_gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        let h = space_step(self, t);
        Vec3::from_fn(|i, _| {
            let mut d = Vec3::zeros();
            d[i] = h;
            (self.charge(&(x + d), t) - self.charge(&(x - d), t)) / (2.0 * h)
        })
    }

    fn current_divergence(&self, x: &Vec3, t: f64) -> f64 {
        let jac = current_jacobian(self, x, t);
        jac.trace()
    }

    fn current_curl(&self, x: &Vec3, t: f64) -> Vec3 {
        // jac[(i, j)] = d_j j_i
        let m = current_jacobian(self, x, t);
        Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
    }

    /// Analytic longitudinal current, if the model has one.
    fn longitudinal_exact(&self, _x: &Vec3, _t: f64) -> Option<Vec3> {
        None
    }

    /// Analytic `grad phi` of the Coulomb potential (with `epsilon0 = 1`; callers divide).
    fn coulomb_gradient_exact(&self, _x: &Vec3, _t: f64) -> Option<Vec3> {
        None
    }
}

fn time_step<S: CurrentSource + ?Sized>(s: &S) -> f64 {
    1e-5 * s.time_scale()
}

fn space_step<S: CurrentSource + ?Sized>(s: &S, _t: f64) -> f64 {
    1e-5 * s.length_scale()
}

fn current_jacobian<S: CurrentSource + ?Sized>(s: &S, x: &Vec3, t: f64) -> nalgebra::Matrix3<f64> {
    let h = space_step(s, t);
    let mut m = nalgebra::Matrix3::zeros();
    for j in 0..3 {
        let mut d = Vec3::zeros();
        d[j] = h;
        let col = (s.current(&(x + d), t) - s.current(&(x - d), t)) / (2.0 * h);
        m.set_column(j, &col);
    }
    m
}

/// `j - khat (khat . j)`.
pub fn transverse_project(jk: &CVec3, khat: &Vec3) -> Result<CVec3> {
    if (khat.norm() - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("khat must be a unit vector (|khat| = {})", khat.norm())));
    }
    Ok(project_transverse(jk, khat))
}

pub(crate) fn project_transverse(jk: &CVec3, khat: &Vec3) -> CVec3 {
    let dot: Complex64 = jk.iter().zip(khat.iter()).map(|(a, b)| a * b).sum();
    jk - khat.map(|c| dot * c)
}

/// Time-reversed source `j'(x, t) = -j(x, -t)`, `rho'(x, t) = rho(x, -t)`.
pub struct TimeReversed<S: ?Sized> {
    inner: Arc<S>,
    name: String,
}

pub fn time_reverse<S: CurrentSource + ?Sized>(source: Arc<S>) -> TimeReversed<S> {
    let name = format!("reversed({})", source.name());
    TimeReversed { inner: source, name }
}

impl<S: CurrentSource + ?Sized> TimeReversed<S> {
    pub fn inner(&self) -> &Arc<S> {
        &self.inner
    }
}

impl<S: CurrentSource + ?Sized> CurrentSource for TimeReversed<S> {
    fn name(&self) -> &str {
        &self.name
    }
    fn current(&self, x: &Vec3, t: f64) -> Vec3 {
        -self.inner.current(x, -t)
    }
    fn charge(&self, x: &Vec3, t: f64) -> f64 {
        self.inner.charge(x, -t)
    }
    fn support(&self, t: f64) -> Support {
        self.inner.support(-t)
    }
    fn window(&self) -> TimeWindow {
        let w = self.inner.window();
        TimeWindow {
            start: -w.end,
            end: -w.start,
        }
    }
    fn singular_points(&self, t: f64) -> Vec<Vec3> {
        self.inner.singular_points(-t)
    }
    fn time_scale(&self) -> f64 {
        self.inner.time_scale()
    }
    fn length_scale(&self) -> f64 {
        self.inner.length_scale()
    }
    fn time_breaks(&self) -> Vec<f64> {
        self.inner.time_breaks().into_iter().map(|t| -t).collect()
    }
    fn current_fourier(&self, k: &Vec3, t: f64) -> CVec3 {
        -self.inner.current_fourier(k, -t)
    }
    fn charge_fourier(&self, k: &Vec3, t: f64) -> Complex64 {
        self.inner.charge_fourier(k, -t)
    }
    fn fourier_time_integral(&self, k: &Vec3, omega: f64, t0: f64, t1: f64) -> Option<CVec3> {
        // substitute s = -t'
        self.inner.fourier_time_integral(k, -omega, -t1, -t0).map(|v| -v)
    }
    fn separable(&self) -> Option<&dyn SeparableSource> {
        self.inner.separable().is_some().then_some(self as &dyn SeparableSource)
    }
    fn current_rate(&self, x: &Vec3, t: f64) -> Vec3 {
        self.inner.current_rate(x, -t)
    }
    fn charge_rate(&self, x: &Vec3, t: f64) -> f64 {
        -self.inner.charge_rate(x, -t)
    }
    fn charge_gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        self.inner.charge_gradient(x, -t)
    }
    fn current_divergence(&self, x: &Vec3, t: f64) -> f64 {
        -self.inner.current_divergence(x, -t)
    }
    fn current_curl(&self, x: &Vec3, t: f64) -> Vec3 {
        -self.inner.current_curl(x, -t)
    }
    fn longitudinal_exact(&self, x: &Vec3, t: f64) -> Option<Vec3> {
        self.inner.longitudinal_exact(x, -t).map(|v| -v)
    }
    fn coulomb_gradient_exact(&self, x: &Vec3, t: f64) -> Option<Vec3> {
        self.inner.coulomb_gradient_exact(x, -t)
    }
}

impl<S: CurrentSource + ?Sized> SeparableSource for TimeReversed<S> {
    fn current_profile(&self, t: f64) -> f64 {
        -self.inner.separable().unwrap().current_profile(-t)
    }
    fn charge_profile(&self, t: f64) -> f64 {
        self.inner.separable().unwrap().charge_profile(-t)
    }
    fn current_shape(&self, k: &Vec3) -> CVec3 {
        self.inner.separable().unwrap().current_shape(k)
    }
    fn charge_shape(&self, k: &Vec3) -> Complex64 {
        self.inner.separable().unwrap().charge_shape(k)
    }
    fn profile_breaks(&self) -> Vec<f64> {
        self.inner
            .separable()
            .unwrap()
            .profile_breaks()
            .into_iter()
            .map(|t| -t)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    pub passed: bool,
    /// Largest `|d rho/dt + div j|` over the samples.
    pub max_residual: f64,
    /// Largest of `|d rho/dt|`, `|div j|`, `|j|/length_scale` and `|rho|/time_scale`.
    pub scale: f64,
    pub tolerance: f64,
    pub samples: usize,
}

/// Continuity check by fourth-order central differences in `t` and `x`.
///
/// Passes iff `max_residual <= tolerance * scale`.
pub fn check_conservation<S: CurrentSource + ?Sized>(
    source: &S,
    points: &[Vec3],
    times: &[f64],
    tolerance: f64,
) -> ConservationReport {
    let mut max_res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &t in times {
        let hx = 2e-3 * source.length_scale();
        let ht = 2e-3 * source.time_scale();
        for x in points {
            let d4 = |f: &dyn Fn(f64) -> f64, h: f64| {
                (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
            };
            let rho_t = d4(&|s| source.charge(x, t + s), ht);
            let mut div = 0.0;
            for i in 0..3 {
                let mut e = Vec3::zeros();
                e[i] = 1.0;
                div += d4(&|s| source.current(&(x + e * s), t)[i], hx);
            }
            max_res = max_res.max((rho_t + div).abs());
            // Natural sizes of each term, so exactly solenoidal currents are not
            // judged against round-off.
            let natural = (source.current(x, t).norm() / source.length_scale())
                .max(source.charge(x, t).abs() / source.time_scale());
            scale = scale.max(rho_t.abs()).max(div.abs()).max(natural);
        }
    }
    let passed = max_res <= tolerance * scale || (scale == 0.0 && max_res == 0.0);
    ConservationReport {
        passed,
        max_residual: max_res,
        scale,
        tolerance,
        samples: points.len() * times.len(),
    }
}

/// A small deterministic sample around the source for upstream conservation gates.
pub(crate) fn gate_conservation<S: CurrentSource + ?Sized>(source: &S, t_end: f64) -> Result<()> {
    let w = source.window();
    let mut times = vec![];
    for frac in [0.13, 0.41, 0.77, 1.0] {
        let lo = if w.start.is_finite() { w.start.max(t_end.min(0.0)) } else { t_end.min(0.0) };
        let hi = if w.end.is_finite() { w.end.min(t_end.max(0.0)) } else { t_end.max(0.0) };
        times.push(lo + frac * (hi - lo));
    }
    let (center, r) = match source.support(times[0]) {
        Support::Ball { center, radius } => (center, radius),
        Support::Unbounded { .. } => (Vec3::zeros(), 1.0),
    };
    let singular = source.singular_points(times[0]);
    if !singular.is_empty() {
        return Ok(());
    }
    let points: Vec<Vec3> = [
        Vec3::new(0.11, 0.07, -0.05),
        Vec3::new(-0.2, 0.13, 0.17),
        Vec3::new(0.03, -0.23, 0.09),
        Vec3::new(0.3, 0.1, 0.2),
    ]
    .iter()
    .map(|d| center + d * r)
    .collect();
    let report = check_conservation(source, &points, &times, 1e-6);
    if report.passed {
        Ok(())
    } else {
        Err(crate::Error::NotConserved {
            residual: report.max_residual,
            scale: report.scale,
        })
    }
}
