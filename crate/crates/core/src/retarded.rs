//! Classical reference solution: retarded (and advanced) integrals for `<E>`
//! and `<B>` by spherical-shell quadrature around the field point, plus the
//! causality and time-reversal verdicts.
//!
//! `E = -(1/4 pi eps0) int d^3x' [dj/dt(x', s) / c^2 + grad rho(x', s)] / R`,
//! `B = (mu0 / 4 pi) int d^3x' curl j(x', s) / R`, with `s = t - R/c` on the
//! retarded branch and `s = t + R/c` on the advanced one.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field_dynamics::{
    evolve_amplitudes, AmplitudeQuadrature, FieldCoefficients, FieldSnapshot,
};
use crate::mode_basis::build_lattice;
use crate::shells::{integrate_shells, ShellRule, Support};
use crate::sources::{time_reverse, CurrentSource};
use crate::units::UnitSystem;
use crate::{CVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Retarded,
    Advanced,
}

/// One delta-function branch of `G = [delta(t - r/c) - delta(t + r/c)] / (4 pi c^2 r)`,
/// reduced to where it samples a time integrand and with what weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSample {
    pub branch: Branch,
    pub emission_time: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenFunction {
    pub c: f64,
}

impl GreenFunction {
    pub fn new(u: &UnitSystem) -> Self {
        Self { c: u.c }
    }

    fn check_r(r: f64) -> Result<()> {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::SingularPoint { x: r, y: 0.0, z: 0.0 })
        }
    }

    /// The branch sample on its own (full-history fields).
    pub fn branch_sample(&self, branch: Branch, r: f64, t: f64) -> Result<GreenSample> {
        Self::check_r(r)?;
        let emission_time = match branch {
            Branch::Retarded => t - r / self.c,
            Branch::Advanced => t + r / self.c,
        };
        Ok(GreenSample {
            branch,
            emission_time,
            weight: 1.0 / (4.0 * std::f64::consts::PI * self.c * self.c * r),
        })
    }

    /// `int_0^t dt' G(r, t - t') h(t')` reduced to one sample: the retarded
    /// branch for `t > 0`, the advanced branch (entering with `+` after the
    /// orientation flip of `int_0^t`) for `t < 0`. `None` when the light cone
    /// has not reached `r`, including `t = 0` where `G` vanishes.
    pub fn initial_value_sample(&self, r: f64, t: f64) -> Result<Option<GreenSample>> {
        Self::check_r(r)?;
        if r / self.c > t.abs() || t == 0.0 {
            return Ok(None);
        }
        let branch = if t > 0.0 { Branch::Retarded } else { Branch::Advanced };
        self.branch_sample(branch, r, t).map(Some)
    }

    /// Apply the initial-value map to `h` supported on `domain`.
    pub fn apply(&self, r: f64, t: f64, domain: (f64, f64), h: impl Fn(f64) -> f64) -> Result<f64> {
        Ok(match self.initial_value_sample(r, t)? {
            Some(s) if s.emission_time >= domain.0 && s.emission_time <= domain.1 => s.weight * h(s.emission_time),
            _ => 0.0,
        })
    }
}

/// Initial-value Green's function sample at `(r, t)`.
pub fn green_function_weight(r: f64, t: f64, u: &UnitSystem) -> Result<Option<GreenSample>> {
    GreenFunction::new(u).initial_value_sample(r, t)
}

/// Which source times feed the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum History {
    /// Everything the branch can see.
    Full,
    /// Only source times between `t0` and the field time (initial-value problem
    /// with zero field data at `t0`).
    Since(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedSpec {
    /// Radial panels are `c dt` wide with `dt = time_scale / steps_per_time_scale`,
    /// capped at the source length scale.
    pub steps_per_time_scale: f64,
    pub radial_nodes: usize,
    pub polar_nodes: usize,
    pub azimuth_nodes: usize,
    pub history: History,
    /// Repeat on a refined rule and fail if the two differ by more than this (relative).
    pub convergence_check: Option<f64>,
}

impl Default for RetardedSpec {
    fn default() -> Self {
        Self {
            steps_per_time_scale: 8.0,
            radial_nodes: 4,
            polar_nodes: 20,
            azimuth_nodes: 20,
            history: History::Full,
            convergence_check: None,
        }
    }
}

impl RetardedSpec {
    fn shell_rule(&self, source: &dyn CurrentSource, c: f64) -> ShellRule {
        let dt = source.time_scale() / self.steps_per_time_scale;
        ShellRule {
            radial_panel: (c * dt).min(source.length_scale()),
            radial_nodes: self.radial_nodes,
            polar_nodes: self.polar_nodes,
            azimuth_nodes: self.azimuth_nodes,
        }
    }

    fn refined(&self) -> Self {
        Self {
            steps_per_time_scale: 2.0 * self.steps_per_time_scale,
            polar_nodes: self.polar_nodes * 3 / 2,
            azimuth_nodes: self.azimuth_nodes * 3 / 2,
            convergence_check: None,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedField {
    pub e: Vec3,
    pub b: Vec3,
    pub branch: Branch,
    /// Distance range `[r_lo, r_hi]` the quadrature covered.
    pub r_range: (f64, f64),
    pub radial_panel: f64,
}

/// Distances whose emission times fall in the allowed source window.
fn radial_range(source: &dyn CurrentSource, t: f64, branch: Branch, history: History, c: f64) -> (f64, f64) {
    let w = source.window();
    let (mut lo, mut hi) = (w.start, w.end);
    match (history, branch) {
        (History::Full, _) => {}
        (History::Since(t0), Branch::Retarded) => lo = lo.max(t0),
        (History::Since(t0), Branch::Advanced) => hi = hi.min(t0),
    }
    match branch {
        Branch::Retarded => {
            let hi = hi.min(t);
            (c * (t - hi), c * (t - lo))
        }
        Branch::Advanced => {
            let lo = lo.max(t);
            (c * (lo - t), c * (hi - t))
        }
    }
}

fn stationary_support(source: &dyn CurrentSource, t: f64) -> Result<Support> {
    let s = source.support(t);
    if let Support::Ball { .. } = s {
        for probe in [t - 1.0, t + 1.0, 0.0] {
            if source.support(probe) != s {
                return Err(invalid(format!(
                    "source `{}` moves; the shell quadrature needs a stationary support",
                    source.name()
                )));
            }
        }
    }
    Ok(s)
}

/// Fields from one branch of the Green's function.
pub fn branch_field(
    source: &dyn CurrentSource,
    x: &Vec3,
    t: f64,
    branch: Branch,
    spec: &RetardedSpec,
    u: &UnitSystem,
) -> Result<RetardedField> {
    for p in source.singular_points(t) {
        if (p - x).norm() <= 1e-12 * (1.0 + x.norm()) {
            return Err(Error::SingularPoint { x: x[0], y: x[1], z: x[2] });
        }
    }
    let support = stationary_support(source, t)?;
    let c = u.c;
    let (r_lo, r_hi) = radial_range(source, t, branch, spec.history, c);
    let rule = spec.shell_rule(source, c);
    let empty = RetardedField {
        e: Vec3::zeros(),
        b: Vec3::zeros(),
        branch,
        r_range: (r_lo, r_hi),
        radial_panel: rule.radial_panel,
    };
    if !(r_hi > r_lo) {
        return Ok(empty);
    }
    if matches!(support, Support::Unbounded { .. }) && !r_hi.is_finite() {
        return Err(invalid(
            "unbounded source with unbounded history: use History::Since to truncate",
        ));
    }
    let r_lo = r_lo.max(0.0);
    let sign = match branch {
        Branch::Retarded => -1.0,
        Branch::Advanced => 1.0,
    };
    let c2 = c * c;
    // E in the real part, B in the imaginary part.
    let v: CVec3 = integrate_shells(x, &support, r_lo, r_hi, &rule, |r, n| {
        let xp = x + n * r;
        let s = t + sign * r / c;
        let e = source.current_rate(&xp, s) / c2 + source.charge_gradient(&xp, s);
        let b = source.current_curl(&xp, s);
        CVec3::from_fn(|i, _| Complex64::new(e[i] * r, b[i] * r))
    });
    let four_pi = 4.0 * std::f64::consts::PI;
    let field = RetardedField {
        e: v.map(|z| z.re) * (-1.0 / (four_pi * u.epsilon0)),
        b: v.map(|z| z.im) * (u.mu0() / four_pi),
        ..empty
    };
    if let Some(tol) = spec.convergence_check {
        let fine = branch_field(source, x, t, branch, &spec.refined(), u)?;
        let scale = fine.e.norm().max(c * fine.b.norm());
        let diff = (fine.e - field.e).norm().max(c * (fine.b - field.b).norm());
        if diff > tol * scale {
            return Err(Error::Quadrature(format!(
                "retarded quadrature at ({:.4}, {:.4}, {:.4}), t = {t}: refinement changed the field by {:.3e} \
                 (relative {:.3e} > {tol:.1e}); radial panel {:.3e}, angular nodes {}x{}",
                x[0],
                x[1],
                x[2],
                diff,
                diff / scale.max(f64::MIN_POSITIVE),
                rule.radial_panel,
                rule.polar_nodes,
                rule.azimuth_nodes
            )));
        }
    }
    Ok(field)
}

pub fn retarded_field(
    source: &dyn CurrentSource,
    x: &Vec3,
    t: f64,
    spec: &RetardedSpec,
    u: &UnitSystem,
) -> Result<RetardedField> {
    branch_field(source, x, t, Branch::Retarded, spec, u)
}

pub fn retarded_e(source: &dyn CurrentSource, x: &Vec3, t: f64, spec: &RetardedSpec, u: &UnitSystem) -> Result<Vec3> {
    Ok(retarded_field(source, x, t, spec, u)?.e)
}

pub fn retarded_b(source: &dyn CurrentSource, x: &Vec3, t: f64, spec: &RetardedSpec, u: &UnitSystem) -> Result<Vec3> {
    Ok(retarded_field(source, x, t, spec, u)?.b)
}

/// Initial-value fields from zero data at `t = 0`: retarded over `[0, t]` for
/// `t > 0`, advanced over `[t, 0]` for `t < 0`.
pub fn initial_value_field(
    source: &dyn CurrentSource,
    x: &Vec3,
    t: f64,
    spec: &RetardedSpec,
    u: &UnitSystem,
) -> Result<RetardedField> {
    let spec = RetardedSpec {
        history: History::Since(0.0),
        ..*spec
    };
    let branch = if t >= 0.0 { Branch::Retarded } else { Branch::Advanced };
    branch_field(source, x, t, branch, &spec, u)
}

/// Fields in a periodic box of side `length`: the sum over source images.
pub fn periodic_branch_field(
    source: &dyn CurrentSource,
    x: &Vec3,
    t: f64,
    branch: Branch,
    spec: &RetardedSpec,
    u: &UnitSystem,
    length: f64,
) -> Result<(Vec3, Vec3)> {
    let (center, radius) = match stationary_support(source, t)? {
        Support::Ball { center, radius } => (center, radius),
        Support::Unbounded { .. } => return Err(invalid("periodic images need a bounded source")),
    };
    let (_, r_hi) = radial_range(source, t, branch, spec.history, u.c);
    if !r_hi.is_finite() {
        return Err(invalid("periodic images of a source with unbounded history do not converge"));
    }
    let reach = r_hi + radius;
    let m = (reach / length).ceil() as i32 + 1;
    let (mut e, mut b) = (Vec3::zeros(), Vec3::zeros());
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                let xi = x + Vec3::new(i as f64, j as f64, k as f64) * length;
                if (xi - center).norm() - radius >= r_hi {
                    continue;
                }
                let f = branch_field(source, &xi, t, branch, spec, u)?;
                e += f.e;
                b += f.b;
            }
        }
    }
    Ok((e, b))
}

/// `(E, B)` at many points in parallel, optionally with periodic images.
pub fn oracle_fields(
    source: &dyn CurrentSource,
    points: &[Vec3],
    t: f64,
    branch: Branch,
    spec: &RetardedSpec,
    u: &UnitSystem,
    periodic_length: Option<f64>,
) -> Result<Vec<(Vec3, Vec3)>> {
    points
        .par_iter()
        .map(|x| match periodic_length {
            Some(l) => periodic_branch_field(source, x, t, branch, spec, u, l),
            None => branch_field(source, x, t, branch, spec, u).map(|f| (f.e, f.b)),
        })
        .collect()
}

/// `sqrt(sum |a - b|^2 / sum |b|^2)`
pub fn relative_l2(a: &[Vec3], b: &[Vec3]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum();
    let den: f64 = b.iter().map(|y| y.norm_squared()).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

/// Light cone of the switch-on event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeGeometry {
    pub center: [f64; 3],
    pub switch_on: f64,
    /// `c (t - t_on) + R_support`
    pub radius: f64,
    /// Distances use the minimum image in a periodic box of this side.
    pub periodic_length: Option<f64>,
}

impl ConeGeometry {
    pub fn new(source: &dyn CurrentSource, t: f64, u: &UnitSystem, periodic_length: Option<f64>) -> Result<Self> {
        let t_on = source.switch_on().ok_or(Error::SteadySource)?;
        let (center, r) = match source.support(t_on) {
            Support::Ball { center, radius } => (center, radius),
            Support::Unbounded { .. } => return Err(invalid("light cone needs a bounded source")),
        };
        Ok(Self {
            center: [center[0], center[1], center[2]],
            switch_on: t_on,
            radius: (u.c * (t - t_on)).max(0.0) + r,
            periodic_length,
        })
    }

    pub fn distance(&self, x: &Vec3) -> f64 {
        let mut d = x - Vec3::from(self.center);
        if let Some(l) = self.periodic_length {
            d = d.map(|c| c - l * (c / l).round());
        }
        d.norm()
    }

    pub fn inside(&self, x: &Vec3) -> bool {
        self.distance(x) < self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub passed: bool,
    pub t: f64,
    pub tolerance: f64,
    pub cone: ConeGeometry,
    pub inside_points: usize,
    pub outside_points: usize,
    pub peak_inside: f64,
    pub max_outside: f64,
    /// `max_outside / peak_inside`
    pub ratio: f64,
}

/// Largest `|E|` outside the switch-on light cone relative to the peak inside.
pub fn causality_verdict(
    snapshot: &FieldSnapshot,
    source: &dyn CurrentSource,
    u: &UnitSystem,
    periodic_length: Option<f64>,
    tolerance: f64,
) -> Result<CausalityReport> {
    if source.is_steady() {
        return Err(Error::SteadySource);
    }
    let cone = ConeGeometry::new(source, snapshot.t, u, periodic_length)?;
    let (mut peak, mut leak) = (0.0f64, 0.0f64);
    let (mut n_in, mut n_out) = (0, 0);
    for (p, e) in snapshot.points.iter().zip(&snapshot.e) {
        let m = Vec3::from(*e).norm();
        if cone.inside(&Vec3::from(*p)) {
            n_in += 1;
            peak = peak.max(m);
        } else {
            n_out += 1;
            leak = leak.max(m);
        }
    }
    let ratio = if leak == 0.0 { 0.0 } else { leak / peak };
    Ok(CausalityReport {
        passed: ratio < tolerance,
        t: snapshot.t,
        tolerance,
        cone,
        inside_points: n_in,
        outside_points: n_out,
        peak_inside: peak,
        max_outside: leak,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldMethod {
    /// Retarded fields of the reversed source against advanced fields of the original.
    Oracle,
    /// Initial-value mode sums on a periodic lattice.
    ModeSum { length: f64, n_max: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeReversalReport {
    pub passed: bool,
    pub method: FieldMethod,
    pub tolerance: f64,
    pub samples: usize,
    /// Largest `|E'(x,t) - E(x,-t)|`.
    pub max_residual_e: f64,
    /// Largest `c |B'(x,t) + B(x,-t)|`.
    pub max_residual_b: f64,
    /// Largest `|A'(x,t) + A(x,-t)|` (mode-sum path only).
    pub max_residual_a: Option<f64>,
    /// Largest of `|E|` and `c |B|` over the samples.
    pub scale: f64,
}

/// Checks `E'(x,t) = E(x,-t)` and `B'(x,t) = -B(x,-t)` for the reversed source.
pub fn time_reversal_verdict(
    source: Arc<dyn CurrentSource>,
    points: &[Vec3],
    times: &[f64],
    method: FieldMethod,
    spec: &RetardedSpec,
    u: &UnitSystem,
    tolerance: f64,
) -> Result<TimeReversalReport> {
    let reversed = time_reverse(source.clone());
    let c = u.c;
    let (mut re, mut rb, mut ra, mut scale) = (0.0f64, 0.0f64, None::<f64>, 0.0f64);
    let mut fold = |e1: Vec3, b1: Vec3, e0: Vec3, b0: Vec3| {
        re = re.max((e1 - e0).norm());
        rb = rb.max(c * (b1 + b0).norm());
        scale = scale.max(e0.norm()).max(c * b0.norm()).max(e1.norm()).max(c * b1.norm());
    };
    match method {
        FieldMethod::Oracle => {
            let spec = RetardedSpec {
                history: History::Full,
                ..*spec
            };
            for &t in times {
                let fwd = oracle_fields(&reversed, points, t, Branch::Retarded, &spec, u, None)?;
                let back = oracle_fields(source.as_ref(), points, -t, Branch::Advanced, &spec, u, None)?;
                for ((e1, b1), (e0, b0)) in fwd.into_iter().zip(back) {
                    fold(e1, b1, e0, b0);
                }
            }
        }
        FieldMethod::ModeSum { length, n_max } => {
            let lattice = build_lattice(length, n_max, u)?;
            let q = AmplitudeQuadrature::default();
            let mut worst_a = 0.0f64;
            for &t in times {
                let a1 = evolve_amplitudes(&lattice, &reversed, t, &q)?;
                let a0 = evolve_amplitudes(&lattice, source.as_ref(), -t, &q)?;
                let c1 = FieldCoefficients::new(&a1, &lattice, Some(&reversed))?;
                let c0 = FieldCoefficients::new(&a0, &lattice, Some(source.as_ref()))?;
                for x in points {
                    let [pa1, e1, b1] = c1.fields_at(x);
                    let [pa0, e0, b0] = c0.fields_at(x);
                    worst_a = worst_a.max((pa1 + pa0).norm());
                    fold(e1, b1, e0, b0);
                }
            }
            ra = Some(worst_a);
        }
    }
    let passed = re <= tolerance * scale && rb <= tolerance * scale;
    Ok(TimeReversalReport {
        passed,
        method,
        tolerance,
        samples: points.len() * times.len(),
        max_residual_e: re,
        max_residual_b: rb,
        max_residual_a: ra,
        scale,
    })
}
