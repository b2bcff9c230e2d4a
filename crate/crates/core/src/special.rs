//! Sine and cosine integrals.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `(Si(x), Cin(x))` for `0 <= x <= 4` by power series.
///
/// `Cin(x) = int_0^x (1 - cos t)/t dt` is entire, unlike `Ci`.
fn series(x: f64) -> (f64, f64) {
    let mut si = 0.0;
    let mut cin = 0.0;
    // term_k = x^k / k!
    let mut term = 1.0;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= x / k as f64;
        let contrib = term / k as f64;
        if k % 2 == 1 {
            // x^(2m+1)/((2m+1)(2m+1)!) with alternating sign
            let m = (k - 1) / 2;
            si += if m.is_multiple_of(2) { contrib } else { -contrib };
        } else {
            let m = k / 2;
            cin += if m % 2 == 1 { contrib } else { -contrib };
        }
        if contrib.abs() < 1e-17 * (si.abs() + cin.abs()).max(1e-300) && k > 2 {
            break;
        }
        if k > 200 {
            break;
        }
    }
    (si, cin)
}

/// `(Si(x), Ci(x))` for `x > 4` from the continued fraction of `E1(ix)`.
fn continued_fraction(x: f64) -> (f64, f64) {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..100_000 {
        let a = -((i - 1) * (i - 1)) as f64;
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(x.cos(), -x.sin());
    (std::f64::consts::FRAC_PI_2 + h.im, -h.re)
}

/// Sine integral `Si(x) = int_0^x sin t / t dt` (odd).
pub fn si(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 4.0 { series(ax).0 } else { continued_fraction(ax).0 };
    v.copysign(x)
}

/// `Cin(x) = int_0^x (1 - cos t)/t dt` (even).
pub fn cin(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 4.0 {
        series(ax).1
    } else {
        EULER_GAMMA + ax.ln() - continued_fraction(ax).1
    }
}

/// Cosine integral `Ci(x)` for `x > 0`.
pub fn ci(x: f64) -> f64 {
    assert!(x > 0.0, "Ci is defined for positive arguments");
    if x <= 4.0 {
        EULER_GAMMA + x.ln() - series(x).1
    } else {
        continued_fraction(x).1
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}
