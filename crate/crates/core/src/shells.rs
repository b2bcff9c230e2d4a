//! Spherical-shell integration around a field point.
//!
//! Integrals `int dr int dOmega f(r, nhat)` over the part of space where a
//! source lives. For a ball-shaped support seen from outside, each shell only
//! needs the spherical cap facing the ball.

use crate::mode_basis::linear_polarization;
use crate::quadrature::{gauss_legendre, Integrand};
use crate::Vec3;

/// Region outside of which a source vanishes (to working precision).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Ball { center: Vec3, radius: f64 },
    /// No spatial bound; shells use the full sphere with the polar axis along `axis`.
    Unbounded { axis: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellRule {
    /// Largest radial panel width.
    pub radial_panel: f64,
    pub radial_nodes: usize,
    pub polar_nodes: usize,
    pub azimuth_nodes: usize,
}

impl Default for ShellRule {
    fn default() -> Self {
        Self {
            radial_panel: 0.1,
            radial_nodes: 4,
            polar_nodes: 20,
            azimuth_nodes: 20,
        }
    }
}

/// Cosine of the cap half-angle: directions with `cos >= mu_min` hit the ball.
/// `None` means the shell misses the ball entirely.
fn cap(r: f64, d: f64, radius: f64) -> Option<f64> {
    if d + r <= radius {
        return Some(-1.0);
    }
    if d == 0.0 || r <= d - radius || r >= d + radius {
        return None;
    }
    Some(((r * r + d * d - radius * radius) / (2.0 * r * d)).clamp(-1.0, 1.0))
}

/// `int_{r_lo}^{r_hi} dr int dOmega f(r, nhat)` restricted to `support`.
///
/// Radial panels are aligned to `r_lo + m * radial_panel`, and split at the
/// radii where the cap geometry changes.
pub fn integrate_shells<T: Integrand>(
    x: &Vec3,
    support: &Support,
    r_lo: f64,
    r_hi: f64,
    rule: &ShellRule,
    f: impl Fn(f64, &Vec3) -> T,
) -> T {
    let (axis, d, radius) = match *support {
        Support::Ball { center, radius } => {
            let rel = center - x;
            let d = rel.norm();
            let axis = if d > 0.0 { rel / d } else { Vec3::z() };
            (axis, d, Some(radius))
        }
        Support::Unbounded { axis } => (axis.normalize(), 0.0, None),
    };
    let (lo, hi) = match radius {
        Some(rad) => (r_lo.max((d - rad).max(0.0)), r_hi.min(d + rad)),
        None => (r_lo.max(0.0), r_hi),
    };
    if !(hi > lo) {
        return T::zero();
    }
    let mut cuts = vec![lo, hi];
    if let Some(rad) = radius {
        let inner = (rad - d).abs();
        if inner > lo && inner < hi {
            cuts.push(inner);
        }
    }
    let h = rule.radial_panel;
    let first = ((lo - r_lo) / h).floor() as i64 + 1;
    let mut m = first;
    loop {
        let e = r_lo + m as f64 * h;
        if e >= hi {
            break;
        }
        if e > lo {
            cuts.push(e);
        }
        m += 1;
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * hi.max(1.0));

    let (e1, e2) = linear_polarization(&axis);
    let (rx, rw) = gauss_legendre(rule.radial_nodes);
    let (px, pw) = gauss_legendre(rule.polar_nodes);
    let nphi = rule.azimuth_nodes;
    let dphi = std::f64::consts::TAU / nphi as f64;
    let trig: Vec<(f64, f64)> = (0..nphi).map(|j| ((j as f64 + 0.5) * dphi).sin_cos()).collect();

    let mut total = T::zero();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in rx.iter().zip(&rw) {
            let r = mid + half * xi;
            let mu_min = match radius {
                Some(rad) => match cap(r, d, rad) {
                    Some(m) => m,
                    None => continue,
                },
                None => -1.0,
            };
            let mh = 0.5 * (1.0 - mu_min);
            let mm = 0.5 * (1.0 + mu_min);
            let mut shell = T::zero();
            for (yj, vj) in px.iter().zip(&pw) {
                let mu = mm + mh * yj;
                let st = (1.0 - mu * mu).max(0.0).sqrt();
                let mut ring = T::zero();
                for &(sp, cp) in &trig {
                    let n = axis * mu + (e1 * cp + e2 * sp) * st;
                    ring = ring.add(f(r, &n));
                }
                shell = shell.add(ring.scale(vj * mh * dphi));
            }
            total = total.add(shell.scale(wi * half));
        }
    }
    total
}
