//! JSON source descriptors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CurrentSource, StaticCharge, SwitchedDipole, UniformCharge, Vacuum};
use crate::error::{invalid, Result};
use crate::units::UnitSystem;
use crate::Vec3;

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

fn five() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Vacuum,
    SwitchedDipole {
        p0: [f64; 3],
        omega_d: f64,
        ramp: f64,
        #[serde(default = "zero3")]
        center: [f64; 3],
        width: f64,
        #[serde(default)]
        t_on: f64,
        #[serde(default)]
        t_off: Option<f64>,
        #[serde(default = "five")]
        support_sigmas: f64,
    },
    UniformCharge {
        q: f64,
        v: [f64; 3],
        #[serde(default)]
        width: f64,
        #[serde(default = "zero3")]
        x0: [f64; 3],
    },
    StaticCharge {
        q: f64,
        #[serde(default = "zero3")]
        center: [f64; 3],
        width: f64,
    },
}

impl SourceSpec {
    pub fn build(&self, u: &UnitSystem) -> Result<Arc<dyn CurrentSource>> {
        let v3 = |a: &[f64; 3]| Vec3::new(a[0], a[1], a[2]);
        Ok(match self {
            SourceSpec::Vacuum => Arc::new(Vacuum),
            SourceSpec::SwitchedDipole {
                p0,
                omega_d,
                ramp,
                center,
                width,
                t_on,
                t_off,
                support_sigmas,
            } => {
                let mut d = SwitchedDipole::new(v3(p0), *omega_d, *ramp, v3(center), *width, *t_on, *t_off)?;
                if !(*support_sigmas > 0.0) {
                    return Err(invalid("support_sigmas must be positive"));
                }
                d.support_sigmas = *support_sigmas;
                Arc::new(d)
            }
            SourceSpec::UniformCharge { q, v, width, x0 } => {
                Arc::new(UniformCharge::new(*q, v3(v), *width, v3(x0), u)?)
            }
            SourceSpec::StaticCharge { q, center, width } => {
                if !(*width > 0.0) {
                    return Err(invalid("static charge width must be positive"));
                }
                Arc::new(StaticCharge {
                    q: *q,
                    center: v3(center),
                    width: *width,
                })
            }
        })
    }
}
