//! Non-dissipative dielectric media.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One Sellmeier resonance: contributes `b w0^2 / (w0^2 - w^2)` to `n^2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierTerm {
    pub b: f64,
    /// Resonance angular frequency.
    pub omega0: f64,
}

/// Refractive index on the band `(0, omega_c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DielectricMedium {
    Constant { n: f64, omega_c: f64 },
    Sellmeier { terms: Vec<SellmeierTerm>, omega_c: f64 },
}

impl DielectricMedium {
    pub fn validate(&self) -> Result<()> {
        let wc = self.omega_c();
        if !(wc > 0.0 && wc.is_finite()) {
            return Err(invalid("cutoff frequency must be positive and finite"));
        }
        match self {
            Self::Constant { n, .. } => {
                if !(*n >= 1.0 && n.is_finite()) {
                    return Err(invalid(format!("refractive index must be >= 1, got {n}")));
                }
            }
            Self::Sellmeier { terms, .. } => {
                if terms.is_empty() {
                    return Err(invalid("Sellmeier medium needs at least one term"));
                }
                for t in terms {
                    if !(t.b >= 0.0 && t.omega0 > wc) {
                        return Err(invalid(
                            "Sellmeier terms need b >= 0 and resonances above the cutoff",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn omega_c(&self) -> f64 {
        match self {
            Self::Constant { omega_c, .. } | Self::Sellmeier { omega_c, .. } => *omega_c,
        }
    }

    pub fn in_band(&self, omega: f64) -> bool {
        omega > 0.0 && omega < self.omega_c()
    }

    /// `n(omega)`.
    pub fn index(&self, omega: f64) -> f64 {
        match self {
            Self::Constant { n, .. } => *n,
            Self::Sellmeier { terms, .. } => {
                let w2 = omega * omega;
                let s: f64 = terms.iter().map(|t| t.b * t.omega0 * t.omega0 / (t.omega0 * t.omega0 - w2)).sum();
                (1.0 + s).sqrt()
            }
        }
    }

    /// Group index `d(n omega)/d omega`.
    pub fn group_index(&self, omega: f64) -> f64 {
        match self {
            Self::Constant { n, .. } => *n,
            Self::Sellmeier { terms, .. } => {
                let n = self.index(omega);
                let w2 = omega * omega;
                // d(n^2)/dw = sum 2 b w0^2 w / (w0^2 - w^2)^2
                let dn2: f64 = terms
                    .iter()
                    .map(|t| {
                        let d = t.omega0 * t.omega0 - w2;
                        2.0 * t.b * t.omega0 * t.omega0 * omega / (d * d)
                    })
                    .sum();
                n + omega * dn2 / (2.0 * n)
            }
        }
    }

    /// Solve `omega n(omega) = c k` on the band by bisection.
    pub fn omega_for_k(&self, k: f64, c: f64) -> Result<f64> {
        let target = c * k;
        let f = |w: f64| w * self.index(w) - target;
        let (mut lo, mut hi) = (0.0, self.omega_c());
        if !(k > 0.0) || f(hi) < 0.0 {
            return Err(invalid(format!("|k| = {k} has no frequency on the band")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn glass() -> DielectricMedium {
        DielectricMedium::Sellmeier {
            terms: vec![
                SellmeierTerm { b: 1.03, omega0: 24.0 },
                SellmeierTerm { b: 0.23, omega0: 9.0 },
            ],
            omega_c: 5.0,
        }
    }

    #[test]
    fn constant_medium() {
        let m = DielectricMedium::Constant { n: 1.5, omega_c: 10.0 };
        m.validate().unwrap();
        assert_eq!(m.index(3.0), 1.5);
        assert_eq!(m.group_index(3.0), 1.5);
        let w = m.omega_for_k(3.0, 1.0).unwrap();
        assert!((w - 2.0).abs() < 1e-14);
        assert!(m.omega_for_k(20.0, 1.0).is_err());
        assert!(DielectricMedium::Constant { n: 0.9, omega_c: 1.0 }.validate().is_err());
    }

    #[test]
    fn sellmeier_dispersion() {
        let m = glass();
        m.validate().unwrap();
        assert!(m.index(0.0) > 1.0);
        // normal dispersion
        assert!(m.index(4.0) > m.index(1.0));
        let h = 1e-5;
        let w = 3.0;
        let fd = ((w + h) * m.index(w + h) - (w - h) * m.index(w - h)) / (2.0 * h);
        assert!((fd - m.group_index(w)).abs() < 1e-8);
        let k = 2.7;
        let w = m.omega_for_k(k, 1.0).unwrap();
        assert!((w * m.index(w) - k).abs() < 1e-13);
        let bad = DielectricMedium::Sellmeier {
            terms: vec![SellmeierTerm { b: 1.0, omega0: 2.0 }],
            omega_c: 5.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_round_trip() {
        let js = r#"{"model":"sellmeier","terms":[{"b":1.03,"omega0":24.0},{"b":0.23,"omega0":9.0}],"omega_c":5.0}"#;
        let m: DielectricMedium = serde_json::from_str(js).unwrap();
        assert_eq!(m, glass());
        let c: DielectricMedium = serde_json::from_str(r#"{"model":"constant","n":1.33,"omega_c":4.0}"#).unwrap();
        assert_eq!(c.index(1.0), 1.33);
    }
}
