//! Charges and steady currents: moving and static Gaussian charges, a straight
//! wire, a superposition of current blobs, and the empty source.

use num_complex::Complex64;

use super::dipole::{erf_potential_gradient, erf_potential_hessian_dot};
use super::{CurrentSource, TimeWindow};
use crate::error::{invalid, Result};
use crate::shells::Support;
use crate::single_mode::exp_window;
use crate::units::UnitSystem;
use crate::{CVec3, Vec3};

fn gaussian(d: &Vec3, width: f64) -> f64 {
    let w2 = width * width;
    (2.0 * std::f64::consts::PI * w2).powf(-1.5) * (-0.5 * d.norm_squared() / w2).exp()
}

fn gaussian_hat(k: &Vec3, center: &Vec3, width: f64) -> Complex64 {
    Complex64::from_polar((-0.5 * k.norm_squared() * width * width).exp(), k.dot(center))
}

/// Charge `q` in uniform motion, `rho = q g_w(x - x0 - v t)`, `j = v rho`.
/// `width = 0` is an ideal point charge: analytic in k-space, singular in x-space.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformCharge {
    pub q: f64,
    pub v: Vec3,
    pub width: f64,
    pub x0: Vec3,
}

impl UniformCharge {
    pub fn new(q: f64, v: Vec3, width: f64, x0: Vec3, u: &UnitSystem) -> Result<Self> {
        if v.norm() >= u.c {
            return Err(invalid(format!(
                "charge speed {} must stay below c = {}",
                v.norm(),
                u.c
            )));
        }
        if !(width.is_finite() && width >= 0.0) {
            return Err(invalid(format!("width must be non-negative, got {width}")));
        }
        Ok(Self { q, v, width, x0 })
    }

    pub fn position(&self, t: f64) -> Vec3 {
        self.x0 + self.v * t
    }
}

impl CurrentSource for UniformCharge {
    fn name(&self) -> &str {
        "uniform_charge"
    }
    fn current(&self, x: &Vec3, t: f64) -> Vec3 {
        self.v * self.charge(x, t)
    }
    fn charge(&self, x: &Vec3, t: f64) -> f64 {
        if self.width == 0.0 {
            return 0.0;
        }
        self.q * gaussian(&(x - self.position(t)), self.width)
    }
    fn support(&self, t: f64) -> Support {
        Support::Ball {
            center: self.position(t),
            radius: 5.0 * self.width,
        }
    }
    fn window(&self) -> TimeWindow {
        TimeWindow::ALWAYS
    }
    fn singular_points(&self, t: f64) -> Vec<Vec3> {
        if self.width == 0.0 {
            vec![self.position(t)]
        } else {
            Vec::new()
        }
    }
    fn length_scale(&self) -> f64 {
        if self.width > 0.0 {
            self.width
        } else {
            1.0
        }
    }
    fn time_scale(&self) -> f64 {
        let s = self.v.norm();
        if s > 0.0 && self.width > 0.0 {
            self.width / s
        } else {
            1.0
        }
    }
    fn current_fourier(&self, k: &Vec3, t: f64) -> CVec3 {
        let rk = self.charge_fourier(k, t);
        self.v.map(|c| rk * c)
    }
    fn charge_fourier(&self, k: &Vec3, t: f64) -> Complex64 {
        gaussian_hat(k, &self.position(t), self.width) * self.q
    }
    fn fourier_time_integral(&self, k: &Vec3, omega: f64, t0: f64, t1: f64) -> Option<CVec3> {
        // conj(j(k,t)) = q v G e^{-i k.x0} e^{-i k.v t}
        let pre = gaussian_hat(k, &self.x0, self.width).conj() * self.q;
        let win = exp_window(omega - k.dot(&self.v), t0, t1);
        Some(self.v.map(|c| pre * win * c))
    }
    fn current_rate(&self, x: &Vec3, t: f64) -> Vec3 {
        self.v * self.charge_rate(x, t)
    }
    fn charge_rate(&self, x: &Vec3, t: f64) -> f64 {
        -self.v.dot(&self.charge_gradient(x, t))
    }
    fn charge_gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        if self.width == 0.0 {
            return Vec3::zeros();
        }
        let d = x - self.position(t);
        -d * (self.q * gaussian(&d, self.width) / (self.width * self.width))
    }
    fn current_divergence(&self, x: &Vec3, t: f64) -> f64 {
        self.v.dot(&self.charge_gradient(x, t))
    }
    fn current_curl(&self, x: &Vec3, t: f64) -> Vec3 {
        self.charge_gradient(x, t).cross(&self.v)
    }
    fn longitudinal_exact(&self, x: &Vec3, t: f64) -> Option<Vec3> {
        // j_L = epsilon0 d_t grad phi = -q hess(H) . v
        Some(-erf_potential_hessian_dot(&(x - self.position(t)), self.width, &self.v) * self.q)
    }
    fn coulomb_gradient_exact(&self, x: &Vec3, t: f64) -> Option<Vec3> {
        Some(erf_potential_gradient(&(x - self.position(t)), self.width) * self.q)
    }
}

/// Static Gaussian charge; steady, `j = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticCharge {
    pub q: f64,
    pub center: Vec3,
    pub width: f64,
}

impl CurrentSource for StaticCharge {
    fn name(&self) -> &str {
        "static_charge"
    }
    fn current(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn charge(&self, x: &Vec3, _t: f64) -> f64 {
        self.q * gaussian(&(x - self.center), self.width)
    }
    fn support(&self, _t: f64) -> Support {
        Support::Ball {
            center: self.center,
            radius: 5.0 * self.width,
        }
    }
    fn window(&self) -> TimeWindow {
        TimeWindow::ALWAYS
    }
    fn current_fourier(&self, _k: &Vec3, _t: f64) -> CVec3 {
        CVec3::zeros()
    }
    fn charge_fourier(&self, k: &Vec3, _t: f64) -> Complex64 {
        gaussian_hat(k, &self.center, self.width) * self.q
    }
    fn fourier_time_integral(&self, _k: &Vec3, _omega: f64, _t0: f64, _t1: f64) -> Option<CVec3> {
        Some(CVec3::zeros())
    }
    fn current_rate(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn charge_rate(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn charge_gradient(&self, x: &Vec3, _t: f64) -> Vec3 {
        let d = x - self.center;
        -d * (self.q * gaussian(&d, self.width) / (self.width * self.width))
    }
    fn current_divergence(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn current_curl(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn longitudinal_exact(&self, _x: &Vec3, _t: f64) -> Option<Vec3> {
        Some(Vec3::zeros())
    }
    fn coulomb_gradient_exact(&self, x: &Vec3, _t: f64) -> Option<Vec3> {
        Some(erf_potential_gradient(&(x - self.center), self.width) * self.q)
    }
}

/// Infinite straight steady current `I` along `axis` through `point`, with a
/// Gaussian cross-section. Only real-space evaluation is supported.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWire {
    pub current: f64,
    pub axis: Vec3,
    pub point: Vec3,
    pub width: f64,
}

impl GaussianWire {
    fn perp(&self, x: &Vec3) -> (Vec3, f64) {
        let a = self.axis.normalize();
        let d = x - self.point;
        let perp = d - a * a.dot(&d);
        let w2 = self.width * self.width;
        let g = (-0.5 * perp.norm_squared() / w2).exp() / (2.0 * std::f64::consts::PI * w2);
        (perp, g)
    }
}

impl CurrentSource for GaussianWire {
    fn name(&self) -> &str {
        "gaussian_wire"
    }
    fn current(&self, x: &Vec3, _t: f64) -> Vec3 {
        self.axis.normalize() * (self.current * self.perp(x).1)
    }
    fn charge(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn support(&self, _t: f64) -> Support {
        Support::Unbounded { axis: self.axis }
    }
    fn length_scale(&self) -> f64 {
        self.width
    }
    fn window(&self) -> TimeWindow {
        TimeWindow::ALWAYS
    }
    /// The transform of an infinite wire is a distribution; report NaN so that
    /// lattice use fails loudly.
    fn current_fourier(&self, _k: &Vec3, _t: f64) -> CVec3 {
        CVec3::repeat(Complex64::new(f64::NAN, f64::NAN))
    }
    fn charge_fourier(&self, _k: &Vec3, _t: f64) -> Complex64 {
        Complex64::new(f64::NAN, f64::NAN)
    }
    fn current_rate(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn charge_rate(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn charge_gradient(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn current_divergence(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn current_curl(&self, x: &Vec3, _t: f64) -> Vec3 {
        let (perp, g) = self.perp(x);
        let grad = -perp * (g / (self.width * self.width));
        grad.cross(&self.axis.normalize()) * self.current
    }
    fn coulomb_gradient_exact(&self, _x: &Vec3, _t: f64) -> Option<Vec3> {
        Some(Vec3::zeros())
    }
}

/// Static current `J(x) = sum_i a_i g_{w_i}(x - c_i)` with the charge
/// `rho = -t div J` it accumulates; a smooth test source for the Helmholtz split.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBlobs {
    pub blobs: Vec<(Vec3, f64, Vec3)>,
}

impl GaussianBlobs {
    fn div_j(&self, x: &Vec3) -> f64 {
        self.blobs
            .iter()
            .map(|(c, w, a)| {
                let d = x - c;
                -a.dot(&d) * gaussian(&d, *w) / (w * w)
            })
            .sum()
    }
}

impl CurrentSource for GaussianBlobs {
    fn name(&self) -> &str {
        "gaussian_blobs"
    }
    fn current(&self, x: &Vec3, _t: f64) -> Vec3 {
        self.blobs
            .iter()
            .fold(Vec3::zeros(), |acc, (c, w, a)| acc + a * gaussian(&(x - c), *w))
    }
    fn charge(&self, x: &Vec3, t: f64) -> f64 {
        -t * self.div_j(x)
    }
    fn support(&self, _t: f64) -> Support {
        let n = self.blobs.len().max(1) as f64;
        let center = self.blobs.iter().fold(Vec3::zeros(), |acc, b| acc + b.0) / n;
        let radius = self
            .blobs
            .iter()
            .map(|(c, w, _)| (c - center).norm() + 5.0 * w)
            .fold(0.0, f64::max);
        Support::Ball { center, radius }
    }
    fn length_scale(&self) -> f64 {
        self.blobs.iter().map(|b| b.1).fold(f64::INFINITY, f64::min).min(1.0)
    }
    fn window(&self) -> TimeWindow {
        TimeWindow::ALWAYS
    }
    fn current_fourier(&self, k: &Vec3, _t: f64) -> CVec3 {
        self.blobs.iter().fold(CVec3::zeros(), |acc, (c, w, a)| {
            let g = gaussian_hat(k, c, *w);
            acc + a.map(|ai| g * ai)
        })
    }
    fn charge_fourier(&self, k: &Vec3, t: f64) -> Complex64 {
        // rho(k) = -t int e^{ikx} div J = i t k.J(k)
        let jk = self.current_fourier(k, t);
        let kj: Complex64 = jk.iter().zip(k.iter()).map(|(a, b)| a * b).sum();
        Complex64::new(0.0, t) * kj
    }
    fn current_rate(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn charge_rate(&self, x: &Vec3, _t: f64) -> f64 {
        -self.div_j(x)
    }
    fn current_divergence(&self, x: &Vec3, _t: f64) -> f64 {
        self.div_j(x)
    }
    fn current_curl(&self, x: &Vec3, _t: f64) -> Vec3 {
        self.blobs.iter().fold(Vec3::zeros(), |acc, (c, w, a)| {
            let d = x - c;
            let grad = -d * (gaussian(&d, *w) / (w * w));
            acc + grad.cross(a)
        })
    }
    fn longitudinal_exact(&self, x: &Vec3, _t: f64) -> Option<Vec3> {
        Some(
            self.blobs
                .iter()
                .fold(Vec3::zeros(), |acc, (c, w, a)| acc - erf_potential_hessian_dot(&(x - c), *w, a)),
        )
    }
}

/// No source at all.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vacuum;

impl CurrentSource for Vacuum {
    fn name(&self) -> &str {
        "vacuum"
    }
    fn current(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn charge(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn support(&self, _t: f64) -> Support {
        Support::Ball {
            center: Vec3::zeros(),
            radius: 0.0,
        }
    }
    fn window(&self) -> TimeWindow {
        TimeWindow { start: 0.0, end: 0.0 }
    }
    fn current_fourier(&self, _k: &Vec3, _t: f64) -> CVec3 {
        CVec3::zeros()
    }
    fn charge_fourier(&self, _k: &Vec3, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn fourier_time_integral(&self, _k: &Vec3, _omega: f64, _t0: f64, _t1: f64) -> Option<CVec3> {
        Some(CVec3::zeros())
    }
    fn current_rate(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn charge_rate(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn charge_gradient(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn current_divergence(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
    fn current_curl(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn longitudinal_exact(&self, _x: &Vec3, _t: f64) -> Option<Vec3> {
        Some(Vec3::zeros())
    }
    fn coulomb_gradient_exact(&self, _x: &Vec3, _t: f64) -> Option<Vec3> {
        Some(Vec3::zeros())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::check_conservation;
    use proptest::prelude::*;

    fn nat() -> UnitSystem {
        UnitSystem::natural()
    }

    #[test]
    fn uniform_charge_examples() {
        let c = UniformCharge::new(1.5, Vec3::new(0.3, 0.0, 0.4), 0.0, Vec3::zeros(), &nat()).unwrap();
        for (k, t) in [(Vec3::new(1.0, 2.0, -0.5), 0.3), (Vec3::new(-4.0, 0.1, 9.0), 17.0)] {
            let jk = c.current_fourier(&k, t);
            assert!((jk.norm() - 1.5 * 0.5).abs() < 1e-14);
        }
        // v parallel to k: purely longitudinal
        let c2 = UniformCharge::new(1.0, Vec3::new(0.0, 0.0, 0.6), 0.0, Vec3::zeros(), &nat()).unwrap();
        let k = Vec3::new(0.0, 0.0, 2.0);
        let jk = c2.current_fourier(&k, 0.7);
        assert!((jk[2].norm() - 0.6).abs() < 1e-15);
        let jt = crate::sources::transverse_project(&jk, &k.normalize()).unwrap();
        assert!(jt.norm() < 1e-15);
        // phase advance e^{i k.v dt} under the e^{+ik.x} transform
        let (t, dt) = (1.1, 0.37);
        let k = Vec3::new(0.5, -1.2, 2.0);
        let ratio = c.current_fourier(&k, t + dt)[0] / c.current_fourier(&k, t)[0];
        let want = Complex64::from_polar(1.0, k.dot(&c.v) * dt);
        assert!((ratio - want).norm() < 1e-14);
        assert!(UniformCharge::new(1.0, Vec3::new(1.0, 0.0, 0.0), 0.0, Vec3::zeros(), &nat()).is_err());
    }

    #[test]
    fn uniform_charge_conserved() {
        let c = UniformCharge::new(2.0, Vec3::new(0.3, -0.5, 0.4), 0.3, Vec3::new(0.1, 0.0, 0.0), &nat())
            .unwrap();
        let pts: Vec<Vec3> = (0..15)
            .map(|i| Vec3::new((i as f64).sin(), (2.0 * i as f64).cos(), 0.2) * 0.3)
            .collect();
        let rep = check_conservation(&c, &pts, &[0.0, 0.2, 0.5], 1e-8);
        assert!(rep.passed && rep.max_residual < 1e-8 * rep.scale, "{rep:?}");
    }

    #[test]
    fn uniform_time_integral_closed_form() {
        let c = UniformCharge::new(1.3, Vec3::new(0.2, 0.1, -0.6), 0.25, Vec3::new(0.3, 0.0, 0.1), &nat())
            .unwrap();
        let k = Vec3::new(1.0, -2.0, 0.5);
        let w = 2.4;
        let closed = c.fourier_time_integral(&k, w, 0.5, 3.0).unwrap();
        let spec = crate::quadrature::AdaptiveSpec::default();
        let num: CVec3 = crate::quadrature::integrate(
            |t| {
                let j = c.current_fourier(&k, t);
                j.map(|z| Complex64::from_polar(1.0, w * t) * z.conj())
            },
            0.5,
            3.0,
            &[],
            &spec,
        )
        .unwrap();
        assert!((closed - num).norm() < 1e-10);
    }

    #[test]
    fn broken_source_fails_conservation() {
        struct Broken;
        impl CurrentSource for Broken {
            fn name(&self) -> &str {
                "broken"
            }
            fn current(&self, x: &Vec3, _t: f64) -> Vec3 {
                *x * (-x.norm_squared()).exp()
            }
            fn charge(&self, _x: &Vec3, _t: f64) -> f64 {
                0.0
            }
            fn support(&self, _t: f64) -> Support {
                Support::Ball {
                    center: Vec3::zeros(),
                    radius: 4.0,
                }
            }
            fn window(&self) -> TimeWindow {
                TimeWindow::ALWAYS
            }
        }
        let rep = check_conservation(&Broken, &[Vec3::new(0.1, 0.2, 0.3)], &[0.0], 1e-8);
        assert!(!rep.passed);
    }

    #[test]
    fn blobs_conserved_and_wire_divergence_free() {
        let b = GaussianBlobs {
            blobs: vec![
                (Vec3::new(0.1, 0.0, 0.0), 0.3, Vec3::new(1.0, 0.5, 0.0)),
                (Vec3::new(-0.2, 0.3, 0.1), 0.4, Vec3::new(0.0, -0.7, 1.2)),
            ],
        };
        let pts = [Vec3::new(0.05, 0.1, 0.0), Vec3::new(-0.3, 0.2, 0.3)];
        assert!(check_conservation(&b, &pts, &[0.5, 1.0], 1e-8).passed);
        let wire = GaussianWire {
            current: 2.0,
            axis: Vec3::z(),
            point: Vec3::zeros(),
            width: 0.5,
        };
        assert!(check_conservation(&wire, &pts, &[0.0], 1e-8).passed);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn conjugation_symmetry(kx in -10.0f64..10.0, ky in -10.0f64..10.0, kz in -10.0f64..10.0, t in -5.0f64..5.0) {
            let k = Vec3::new(kx, ky, kz);
            let c = UniformCharge::new(1.2, Vec3::new(0.3, -0.2, 0.5), 0.2, Vec3::new(0.1, 0.2, 0.3), &nat()).unwrap();
            let d = crate::sources::SwitchedDipole::new(Vec3::new(0.2, 0.5, 1.0), 2.0, 1.0, Vec3::new(0.3, 0.0, -0.1), 0.35, -3.0, None).unwrap();
            let sources: [&dyn CurrentSource; 2] = [&c, &d];
            for s in sources {
                let a = s.current_fourier(&k, t);
                let b = s.current_fourier(&(-k), t);
                prop_assert!((a.map(|z| z.conj()) - b).norm() <= 1e-14 * (1.0 + a.norm()));
                let ra = s.charge_fourier(&k, t);
                let rb = s.charge_fourier(&(-k), t);
                prop_assert!((ra.conj() - rb).norm() <= 1e-14 * (1.0 + ra.norm()));
            }
        }
    }
}
