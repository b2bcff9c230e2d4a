//! Gaussian-localized dipole `p(t) = p0 P(t)` switched on with a smooth ramp.
//!
//! `j = p'(t) g(x - c)`, `rho = -p(t) . grad g(x - c)` with `g` a normalized
//! Gaussian of width `w`, so continuity holds identically.

use num_complex::Complex64;

use super::{CurrentSource, SeparableSource, TimeWindow};
use crate::error::{invalid, Result};
use crate::shells::Support;
use crate::{CVec3, Vec3};

/// Quintic smootherstep on `[0, 1]` with its first two derivatives.
/// C2 at both ends, so `rho`, `j` and `dj/dt` all start from zero.
pub fn smootherstep(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let s = u * u * u * (u * (6.0 * u - 15.0) + 10.0);
        let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
        let dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
        (s, ds, dds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedDipole {
    pub p0: Vec3,
    /// Drive frequency. Zero gives a ramped-then-held static dipole.
    pub omega_d: f64,
    pub ramp: f64,
    pub center: Vec3,
    pub width: f64,
    pub t_on: f64,
    /// Start of the ramp-down, if any.
    pub t_off: Option<f64>,
    /// Support radius in units of `width`.
    pub support_sigmas: f64,
}

/// Dipole switched on at `t = 0`, Gaussian width `width`, support `5 width`.
pub fn make_switched_dipole(
    p0: Vec3,
    omega_d: f64,
    ramp: f64,
    center: Vec3,
    width: f64,
) -> Result<SwitchedDipole> {
    SwitchedDipole::new(p0, omega_d, ramp, center, width, 0.0, None)
}

impl SwitchedDipole {
    pub fn new(
        p0: Vec3,
        omega_d: f64,
        ramp: f64,
        center: Vec3,
        width: f64,
        t_on: f64,
        t_off: Option<f64>,
    ) -> Result<Self> {
        if !(ramp.is_finite() && ramp > 0.0) {
            return Err(invalid(format!(
                "ramp must be positive (a sudden switch-on breaks rho(x,0) = 0), got {ramp}"
            )));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid(format!("dipole width must be positive, got {width}")));
        }
        if !(omega_d.is_finite() && omega_d >= 0.0) || !t_on.is_finite() {
            return Err(invalid("drive frequency must be finite and non-negative"));
        }
        if let Some(off) = t_off {
            if !(off >= t_on + ramp) {
                return Err(invalid("switch-off must start after the ramp-up completes"));
            }
        }
        if p0.iter().any(|c| !c.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("dipole moment and center must be finite"));
        }
        Ok(Self {
            p0,
            omega_d,
            ramp,
            center,
            width,
            t_on,
            t_off,
            support_sigmas: 5.0,
        })
    }

    /// `(P, P', P'')` for the scalar profile `p(t) = p0 P(t)`.
    pub fn profile(&self, t: f64) -> (f64, f64, f64) {
        let (mut e, mut de, mut dde) = {
            let (s, ds, dds) = smootherstep((t - self.t_on) / self.ramp);
            (s, ds / self.ramp, dds / (self.ramp * self.ramp))
        };
        if let Some(off) = self.t_off {
            let (s, ds, dds) = smootherstep((t - off) / self.ramp);
            let (f, df, ddf) = (1.0 - s, -ds / self.ramp, -dds / (self.ramp * self.ramp));
            let (a, da, dda) = (e, de, dde);
            e = a * f;
            de = da * f + a * df;
            dde = dda * f + 2.0 * da * df + a * ddf;
        }
        if e == 0.0 && de == 0.0 && dde == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let tau = t - self.t_on;
        let w = self.omega_d;
        let (m, dm, ddm) = if w == 0.0 {
            (1.0, 0.0, 0.0)
        } else {
            let (s, c) = (w * tau).sin_cos();
            (s, w * c, -w * w * s)
        };
        (e * m, de * m + e * dm, dde * m + 2.0 * de * dm + e * ddm)
    }

    fn gauss(&self, x: &Vec3) -> (Vec3, f64) {
        let d = x - self.center;
        let w2 = self.width * self.width;
        let norm = (2.0 * std::f64::consts::PI * w2).powf(-1.5);
        (d, norm * (-0.5 * d.norm_squared() / w2).exp())
    }

    fn gauss_hat(&self, k: &Vec3) -> Complex64 {
        let w2 = self.width * self.width;
        Complex64::from_polar((-0.5 * k.norm_squared() * w2).exp(), k.dot(&self.center))
    }

    /// `hess(H) . p0` with `H(r) = erf(r / (sqrt 2 w)) / (4 pi r)`.
    /// `grad phi = -(P / epsilon0) hess(H) . p0`.
    fn hessian_dot_p(&self, x: &Vec3) -> Vec3 {
        erf_potential_hessian_dot(&(x - self.center), self.width, &self.p0)
    }
}

/// `H'(r)/r` and `H''(r)` for `H(r) = erf(a r) / (4 pi r)`, `a = 1/(sqrt 2 w)`.
/// `w = 0` gives the bare Coulomb kernel `1/(4 pi r)`.
fn erf_potential_derivatives(r: f64, width: f64) -> (f64, f64) {
    let fp = 1.0 / (4.0 * std::f64::consts::PI);
    if width == 0.0 {
        return (-fp / (r * r * r), 2.0 * fp / (r * r * r));
    }
    let a = std::f64::consts::FRAC_1_SQRT_2 / width;
    let u = a * a * r * r;
    if u < 0.5 {
        // erf(a r)/r = (2a/sqrt pi) sum c_n u^n, c_n = (-1)^n / (n! (2n+1))
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut fact = 1.0;
        let mut upow = 1.0;
        for n in 1..20 {
            fact *= n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign / (fact * (2 * n + 1) as f64);
            s1 += n as f64 * c * upow;
            s2 += 2.0 * (n * (n - 1)) as f64 * c * upow;
            upow *= u;
        }
        let base = fp * 2.0 * a / std::f64::consts::PI.sqrt() * 2.0 * a * a;
        (base * s1, base * (s1 + s2))
    } else {
        let e = libm::erf(a * r);
        let de = 2.0 * a / std::f64::consts::PI.sqrt() * (-u).exp();
        let dde = -2.0 * a * a * r * de;
        let h1 = fp * (de / r - e / (r * r));
        let h2 = fp * (dde / r - 2.0 * de / (r * r) + 2.0 * e / (r * r * r));
        (h1 / r, h2)
    }
}

/// `grad H` at offset `d` from the centre.
pub(crate) fn erf_potential_gradient(d: &Vec3, width: f64) -> Vec3 {
    let r = d.norm();
    if r == 0.0 {
        return Vec3::zeros();
    }
    d * erf_potential_derivatives(r, width).0
}

/// `hess(H) . p` at offset `d` from the centre.
pub(crate) fn erf_potential_hessian_dot(d: &Vec3, width: f64, p: &Vec3) -> Vec3 {
    let r = d.norm();
    let (h1_over_r, h2) = erf_potential_derivatives(r, width);
    if r == 0.0 {
        return p * h1_over_r;
    }
    let n = d / r;
    let pn = p.dot(&n);
    n * (h2 * pn) + (p - n * pn) * h1_over_r
}

impl CurrentSource for SwitchedDipole {
    fn name(&self) -> &str {
        "switched_dipole"
    }

    fn current(&self, x: &Vec3, t: f64) -> Vec3 {
        let (_, dp, _) = self.profile(t);
        if dp == 0.0 {
            return Vec3::zeros();
        }
        self.p0 * (dp * self.gauss(x).1)
    }

    fn charge(&self, x: &Vec3, t: f64) -> f64 {
        let (p, _, _) = self.profile(t);
        if p == 0.0 {
            return 0.0;
        }
        let (d, g) = self.gauss(x);
        p * self.p0.dot(&d) * g / (self.width * self.width)
    }

    fn support(&self, _t: f64) -> Support {
        Support::Ball {
            center: self.center,
            radius: self.support_sigmas * self.width,
        }
    }

    fn window(&self) -> TimeWindow {
        TimeWindow {
            start: self.t_on,
            end: self.t_off.map_or(f64::INFINITY, |off| off + self.ramp),
        }
    }

    fn length_scale(&self) -> f64 {
        self.width
    }

    fn time_scale(&self) -> f64 {
        if self.omega_d > 0.0 {
            self.ramp.min(1.0 / self.omega_d)
        } else {
            self.ramp
        }
    }

    fn time_breaks(&self) -> Vec<f64> {
        self.profile_breaks()
    }

    fn current_fourier(&self, k: &Vec3, t: f64) -> CVec3 {
        let (_, dp, _) = self.profile(t);
        self.current_shape(k).map(|z| z * dp)
    }

    fn charge_fourier(&self, k: &Vec3, t: f64) -> Complex64 {
        self.charge_shape(k) * self.profile(t).0
    }

    fn separable(&self) -> Option<&dyn SeparableSource> {
        Some(self)
    }

    fn current_rate(&self, x: &Vec3, t: f64) -> Vec3 {
        let (_, _, ddp) = self.profile(t);
        self.p0 * (ddp * self.gauss(x).1)
    }

    fn charge_rate(&self, x: &Vec3, t: f64) -> f64 {
        let (_, dp, _) = self.profile(t);
        let (d, g) = self.gauss(x);
        dp * self.p0.dot(&d) * g / (self.width * self.width)
    }

    fn charge_gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        let (p, _, _) = self.profile(t);
        let (d, g) = self.gauss(x);
        let w2 = self.width * self.width;
        (self.p0 - d * (self.p0.dot(&d) / w2)) * (p * g / w2)
    }

    fn current_divergence(&self, x: &Vec3, t: f64) -> f64 {
        -self.charge_rate(x, t)
    }

    fn current_curl(&self, x: &Vec3, t: f64) -> Vec3 {
        let (_, dp, _) = self.profile(t);
        let (d, g) = self.gauss(x);
        // curl(g p) = grad g x p
        (-d * (g / (self.width * self.width))).cross(&self.p0) * dp
    }

    fn longitudinal_exact(&self, x: &Vec3, t: f64) -> Option<Vec3> {
        let (_, dp, _) = self.profile(t);
        Some(-self.hessian_dot_p(x) * dp)
    }

    fn coulomb_gradient_exact(&self, x: &Vec3, t: f64) -> Option<Vec3> {
        let (p, _, _) = self.profile(t);
        Some(-self.hessian_dot_p(x) * p)
    }
}

impl SeparableSource for SwitchedDipole {
    fn current_profile(&self, t: f64) -> f64 {
        self.profile(t).1
    }
    fn charge_profile(&self, t: f64) -> f64 {
        self.profile(t).0
    }
    fn current_shape(&self, k: &Vec3) -> CVec3 {
        let g = self.gauss_hat(k);
        self.p0.map(|c| g * c)
    }
    fn charge_shape(&self, k: &Vec3) -> Complex64 {
        Complex64::new(0.0, k.dot(&self.p0)) * self.gauss_hat(k)
    }
    fn profile_breaks(&self) -> Vec<f64> {
        let mut b = vec![self.t_on, self.t_on + self.ramp];
        if let Some(off) = self.t_off {
            b.extend([off, off + self.ramp]);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, AdaptiveSpec, FixedRule};
    use crate::sources::check_conservation;

    fn dipole() -> SwitchedDipole {
        SwitchedDipole::new(
            Vec3::new(0.3, -0.2, 1.0),
            2.0,
            1.0,
            Vec3::new(0.1, 0.0, -0.2),
            0.35,
            0.5,
            Some(4.0),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = Vec3::zeros();
        assert!(make_switched_dipole(Vec3::z(), 2.0, 0.0, c, 0.3).is_err());
        assert!(make_switched_dipole(Vec3::z(), 2.0, 1.0, c, 0.0).is_err());
        assert!(make_switched_dipole(Vec3::z(), 2.0, 1.0, c, 0.3).is_ok());
    }

    #[test]
    fn profile_derivatives() {
        let d = dipole();
        let h = 1e-5;
        for &t in &[0.7, 1.2, 2.0, 4.3, 4.9] {
            let (p, dp, ddp) = d.profile(t);
            let (pp, dpp, _) = d.profile(t + h);
            let (pm, dpm, _) = d.profile(t - h);
            assert!((dp - (pp - pm) / (2.0 * h)).abs() < 1e-8);
            assert!((ddp - (dpp - dpm) / (2.0 * h)).abs() < 1e-7);
            assert!(p.abs() <= 1.0);
        }
        assert_eq!(d.profile(0.4), (0.0, 0.0, 0.0));
        assert_eq!(d.profile(5.1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn silent_before_switch_on() {
        let d = dipole();
        for x in [Vec3::zeros(), Vec3::new(0.2, 0.1, 0.0)] {
            for t in [-1.0, 0.0, 0.5] {
                assert_eq!(d.current(&x, t), Vec3::zeros());
                assert_eq!(d.charge(&x, t), 0.0);
            }
        }
    }

    #[test]
    fn total_current_is_dipole_rate() {
        let d = dipole();
        let rule = FixedRule::new(48, -8.0 * d.width, 8.0 * d.width);
        for &t in &[0.9, 2.2, 4.5] {
            let total = rule.apply(|x| {
                rule.apply(|y| rule.apply(|z| d.current(&(d.center + Vec3::new(x, y, z)), t)))
            });
            let want = d.p0 * d.profile(t).1;
            assert!((total - want).norm() < 1e-8, "{total} vs {want}");
        }
    }

    #[test]
    fn fourier_small_k_limit() {
        let d = dipole();
        let t = 2.2;
        let want = d.p0 * d.profile(t).1;
        for axis in 0..3 {
            let mut k = Vec3::zeros();
            k[axis] = 1e-6;
            let jk = d.current_fourier(&k, t);
            assert!((jk.map(|z| z.re) - want).norm() < 1e-10);
        }
    }

    #[test]
    fn fourier_matches_real_space() {
        let d = dipole();
        let t = 2.7;
        let k = Vec3::new(1.3, -0.4, 2.1);
        let rule = FixedRule::new(64, -8.5 * d.width, 8.5 * d.width);
        let cube = |f: &dyn Fn(&Vec3) -> CVec3| -> CVec3 {
            rule.apply(|x| rule.apply(|y| rule.apply(|z| f(&(d.center + Vec3::new(x, y, z))))))
        };
        let ph = |p: &Vec3| Complex64::from_polar(1.0, k.dot(p));
        let jn = cube(&|p| d.current(p, t).map(|c| ph(p) * c));
        let rn = cube(&|p| CVec3::repeat(ph(p) * d.charge(p, t)))[0];
        let jk = d.current_fourier(&k, t);
        assert!((jk - jn).norm() < 1e-9);
        assert!((d.charge_fourier(&k, t) - rn).norm() < 1e-9, "{} vs {rn}", d.charge_fourier(&k, t));
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let d = dipole();
        let x = d.center + Vec3::new(0.1, -0.2, 0.15);
        let t = 2.3;
        let h = 1e-5;
        let fd_rate = (d.current(&x, t + h) - d.current(&x, t - h)) / (2.0 * h);
        assert!((d.current_rate(&x, t) - fd_rate).norm() < 1e-6);
        let mut grad = Vec3::zeros();
        let mut curl_fd = Vec3::zeros();
        let mut jac = nalgebra::Matrix3::zeros();
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            grad[i] = (d.charge(&(x + e), t) - d.charge(&(x - e), t)) / (2.0 * h);
            jac.set_column(i, &((d.current(&(x + e), t) - d.current(&(x - e), t)) / (2.0 * h)));
        }
        curl_fd[0] = jac[(2, 1)] - jac[(1, 2)];
        curl_fd[1] = jac[(0, 2)] - jac[(2, 0)];
        curl_fd[2] = jac[(1, 0)] - jac[(0, 1)];
        let scale = d.charge_gradient(&x, t).norm();
        assert!((d.charge_gradient(&x, t) - grad).norm() < 1e-7 * scale);
        assert!((d.current_curl(&x, t) - curl_fd).norm() < 1e-6);
        assert!((d.current_divergence(&x, t) - jac.trace()).abs() < 1e-6);
    }

    #[test]
    fn conservation_holds() {
        let d = dipole();
        let pts: Vec<Vec3> = (0..20)
            .map(|i| d.center + Vec3::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos(), 0.3) * 0.4)
            .collect();
        let times: Vec<f64> = (0..12).map(|i| 0.6 + 0.4 * i as f64).collect();
        let rep = check_conservation(&d, &pts, &times, 1e-8);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn coulomb_hessian_far_field_is_point_dipole() {
        // grad phi of a point dipole p: -(3 (p.n) n - p) / (4 pi r^3)
        let d = dipole();
        for dist in [3.0, 5.0] {
            let n = Vec3::new(0.2, 0.5, -0.7).normalize();
            let x = d.center + n * dist;
            let t = 2.0;
            let p = d.p0 * d.profile(t).0;
            let e_point = (n * (3.0 * p.dot(&n)) - p) / (4.0 * std::f64::consts::PI * dist.powi(3));
            let grad = d.coulomb_gradient_exact(&x, t).unwrap();
            assert!((grad + e_point).norm() < 1e-10 * e_point.norm());
        }
    }

    #[test]
    fn hessian_series_and_closed_form_agree() {
        let d = dipole();
        let a = std::f64::consts::FRAC_1_SQRT_2 / d.width;
        let r_switch = 0.5f64.sqrt() / a;
        let n = Vec3::new(0.6, 0.0, 0.8);
        let lo = d.hessian_dot_p(&(d.center + n * r_switch * (1.0 - 1e-9)));
        let hi = d.hessian_dot_p(&(d.center + n * r_switch * (1.0 + 1e-9)));
        assert!((lo - hi).norm() < 1e-8 * lo.norm());
        // centre: isotropic Hessian = -(1/3) g(0)
        let g0 = (2.0 * std::f64::consts::PI * d.width * d.width).powf(-1.5);
        let c = d.hessian_dot_p(&d.center);
        assert!((c + d.p0 * g0 / 3.0).norm() < 1e-12 * c.norm());
    }

    #[test]
    fn time_integral_of_rate_is_moment() {
        let d = dipole();
        let v = integrate(|t| d.profile(t).1, 0.0, 3.0, &d.profile_breaks(), &AdaptiveSpec::default())
            .unwrap();
        assert!((v - d.profile(3.0).0).abs() < 1e-10);
    }
}
