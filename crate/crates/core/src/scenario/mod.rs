//! Declarative scenarios: a JSON description of a lattice, a source and a list
//! of analyses, run to a verdict summary plus data artifacts.

mod analyses;
mod bundled;
mod plot;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use analyses::run;
pub use bundled::{bundled, bundled_names, BundledScenario};
pub use plot::PlotRow;

use crate::error::{Error, Result};
use crate::field_dynamics::GridSpec;
use crate::radiation::DielectricMedium;
use crate::retarded::FieldMethod;
use crate::sources::SourceSpec;
use crate::uncertainty::{OccupationSpec, ThermalRegime};
use crate::units::UnitMode;

/// Box side and cutoff; the unit system comes from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub length: f64,
    pub n_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioTolerances {
    /// Field outside the light cone relative to the peak inside.
    pub lightcone_rel: f64,
    /// Relative L2 distance between mode sum and retarded integral.
    pub oracle_rel: f64,
    /// Wave-equation residual relative to the largest `|j_T| / eps0`.
    pub wave_residual_rel: f64,
    pub time_reversal_rel: f64,
    /// Single-mode moments against their closed forms.
    pub closed_form_rel: f64,
    /// Mean quadrature against direct integration of the equation of motion.
    pub ode_rel: f64,
    pub spectrum_rel: f64,
    pub dipole_rel: f64,
    /// Successive-cutoff change of the smeared variance.
    pub cauchy_rel: f64,
}

impl Default for ScenarioTolerances {
    fn default() -> Self {
        Self {
            lightcone_rel: 1e-3,
            oracle_rel: 0.02,
            wave_residual_rel: 1e-4,
            time_reversal_rel: 1e-6,
            closed_form_rel: 1e-12,
            ode_rel: 1e-8,
            spectrum_rel: 0.03,
            dipole_rel: 1e-10,
            cauchy_rel: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FieldmapFormat {
    #[default]
    Csv,
    Json,
    Binary,
}

/// Frequencies `start..=stop` in `count` equal steps, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencyGrid {
    Range { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

impl FrequencyGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range { start, stop, count } => match *count {
                0 => vec![],
                1 => vec![*start],
                n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

/// Serializable form of a single-mode drive `f(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
        #[serde(default)]
        t_on: f64,
        #[serde(default)]
        t_off: Option<f64>,
    },
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        t_on: f64,
        #[serde(default)]
        t_off: Option<f64>,
    },
    /// `[time, area]` pairs.
    Impulses { kicks: Vec<[f64; 2]> },
}

impl DriveSpec {
    pub fn build(&self) -> crate::single_mode::DriveFunction {
        use crate::single_mode::DriveFunction as D;
        let off = |t: &Option<f64>| t.unwrap_or(f64::INFINITY);
        match self {
            Self::Zero => D::Zero,
            Self::Constant { value, t_on, t_off } => D::Constant {
                value: *value,
                t_on: *t_on,
                t_off: off(t_off),
            },
            Self::Sinusoid {
                amplitude,
                frequency,
                phase,
                t_on,
                t_off,
            } => D::Sinusoid {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
                t_on: *t_on,
                t_off: off(t_off),
            },
            Self::Impulses { kicks } => D::Impulses(kicks.iter().map(|k| (k[0], k[1])).collect()),
        }
    }
}

/// Single-mode initial states with closed-form variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeState {
    Coherent { re: f64, im: f64 },
    Fock { n: u32 },
    Superposition01,
}

fn default_modes_states() -> Vec<ModeState> {
    vec![
        ModeState::Coherent { re: 1.5, im: -0.5 },
        ModeState::Fock { n: 3 },
        ModeState::Superposition01,
    ]
}

/// Cutoff ladder for the variance convergence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffLadder {
    pub length: f64,
    pub sigma: f64,
    pub n_max: Vec<u32>,
}

fn d_true() -> bool {
    true
}
fn d_periods() -> f64 {
    200.0
}
fn d_min_reduction() -> f64 {
    1.5
}
fn d_points_per_axis() -> usize {
    5
}
fn d_step() -> f64 {
    2e-3
}
fn d_angular_nodes() -> usize {
    8
}
fn d_samples() -> usize {
    100
}
fn d_ode_steps() -> usize {
    20_000
}
fn d_oracle_method() -> FieldMethod {
    FieldMethod::Oracle
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// `A`, `E`, `B` on the grid at every scenario time.
    Fieldmap,
    /// Light-cone leak on the grid, optionally against a coarser cutoff and
    /// the periodic retarded integral.
    Causality {
        #[serde(default)]
        compare_n_max: Option<u32>,
        #[serde(default = "d_min_reduction")]
        min_reduction: f64,
        #[serde(default)]
        oracle: bool,
    },
    TimeReversal {
        #[serde(default = "d_oracle_method")]
        method: FieldMethod,
        /// Defaults to a 3x3x3 subgrid of the inner half of the grid.
        #[serde(default)]
        points: Option<Vec<[f64; 3]>>,
        /// Defaults to the scenario times.
        #[serde(default)]
        times: Option<Vec<f64>>,
    },
    /// Residual of the sourced wave equation on a cube of points around the grid centre.
    WaveResidual {
        #[serde(default = "d_points_per_axis")]
        points_per_axis: usize,
        /// Defaults to a quarter of the box side.
        #[serde(default)]
        half_width: Option<f64>,
        #[serde(default = "d_step")]
        step: f64,
    },
    Energy,
    Cherenkov {
        charge: f64,
        speed: f64,
        medium: DielectricMedium,
        omega: FrequencyGrid,
        /// Observation time in periods of each sampled frequency.
        #[serde(default = "d_periods")]
        periods: f64,
        /// Particle mass for the recoil-corrected angle.
        #[serde(default)]
        mass: Option<f64>,
        /// Also run at twice the time and require the error to halve.
        #[serde(default = "d_true")]
        check_halving: bool,
    },
    Dipole {
        #[serde(default = "d_angular_nodes")]
        angular_nodes: usize,
    },
    Variance {
        #[serde(default)]
        sigmas: Vec<f64>,
        #[serde(default)]
        occupation: Option<OccupationSpec>,
        #[serde(default)]
        cutoffs: Option<CutoffLadder>,
        #[serde(default)]
        temperatures: Vec<f64>,
        /// Smearing scale for the temperature sweep.
        #[serde(default)]
        thermal_sigma: Option<f64>,
        /// Expected regime per temperature.
        #[serde(default)]
        expected_regimes: Option<Vec<ThermalRegime>>,
    },
    SingleMode {
        omega: f64,
        t_max: f64,
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default = "default_modes_states")]
        states: Vec<ModeState>,
        #[serde(default)]
        drive: DriveSpec,
        #[serde(default = "d_ode_steps")]
        ode_steps: usize,
    },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fieldmap => "fieldmap",
            Self::Causality { .. } => "causality",
            Self::TimeReversal { .. } => "time_reversal",
            Self::WaveResidual { .. } => "wave_residual",
            Self::Energy => "energy",
            Self::Cherenkov { .. } => "cherenkov",
            Self::Dipole { .. } => "dipole",
            Self::Variance { .. } => "variance",
            Self::SingleMode { .. } => "single_mode",
        }
    }

    fn needs_field(&self) -> bool {
        matches!(
            self,
            Self::Fieldmap | Self::Causality { .. } | Self::TimeReversal { .. } | Self::WaveResidual { .. } | Self::Energy
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Subject area, shown by `describe`.
    #[serde(default)]
    pub topic: String,
    #[serde(default)]
    pub units: UnitMode,
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub times: Vec<f64>,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub tolerances: ScenarioTolerances,
    #[serde(default)]
    pub fieldmap_format: FieldmapFormat,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text).map_err(|e| bad(format!("malformed JSON: {e}")))?)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let s: Scenario = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Parse, apply `key=value` overrides on the JSON tree, then validate.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| bad(format!("malformed JSON: {e}")))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }

    /// Static checks: everything that can fail without running an analysis.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(bad("scenario needs a name"));
        }
        if self.analyses.is_empty() {
            return Err(bad("scenario lists no analyses"));
        }
        let u = crate::units::UnitSystem::from_mode(self.units);
        let t = &self.tolerances;
        let tols = [
            t.lightcone_rel,
            t.oracle_rel,
            t.wave_residual_rel,
            t.time_reversal_rel,
            t.closed_form_rel,
            t.ode_rel,
            t.spectrum_rel,
            t.dipole_rel,
            t.cauchy_rel,
        ];
        if tols.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(bad("tolerances must be positive and finite"));
        }
        if let Some(l) = &self.lattice {
            if !(l.length > 0.0 && l.length.is_finite()) || l.n_max == 0 {
                return Err(bad("lattice needs a positive length and n_max >= 1"));
            }
        }
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| bad(e.to_string()))?;
        }
        if self.times.iter().any(|x| !x.is_finite()) {
            return Err(bad("times must be finite"));
        }
        let source = match &self.source {
            Some(s) => Some(s.build(&u).map_err(|e| bad(format!("source: {e}")))?),
            None => None,
        };
        for a in &self.analyses {
            let name = a.name();
            if a.needs_field() {
                if self.lattice.is_none() || source.is_none() {
                    return Err(bad(format!("{name} needs `lattice` and `source`")));
                }
                if self.times.is_empty() {
                    return Err(bad(format!("{name} needs at least one time")));
                }
            }
            match a {
                Analysis::Fieldmap => {
                    if self.grid.is_none() {
                        return Err(bad("fieldmap needs `grid`"));
                    }
                }
                Analysis::Causality {
                    compare_n_max,
                    min_reduction,
                    ..
                } => {
                    if self.grid.is_none() {
                        return Err(bad("causality needs `grid`"));
                    }
                    if source.as_ref().is_some_and(|s| s.is_steady()) {
                        return Err(bad("causality needs a source with a switch-on time"));
                    }
                    if let (Some(c), Some(l)) = (compare_n_max, &self.lattice) {
                        if *c == 0 || *c >= l.n_max {
                            return Err(bad("compare_n_max must lie in [1, n_max)"));
                        }
                    }
                    if !(*min_reduction >= 1.0) {
                        return Err(bad("min_reduction must be >= 1"));
                    }
                }
                Analysis::TimeReversal { points, method, times } => {
                    if points.is_none() && self.grid.is_none() {
                        return Err(bad("time_reversal needs `points` or `grid`"));
                    }
                    if times.as_ref().is_some_and(|t| t.is_empty() || t.iter().any(|x| !x.is_finite())) {
                        return Err(bad("time_reversal times must be finite and non-empty"));
                    }
                    if let FieldMethod::ModeSum { length, n_max } = method {
                        if !(*length > 0.0) || *n_max == 0 {
                            return Err(bad("mode-sum method needs a positive length and n_max"));
                        }
                    }
                }
                Analysis::WaveResidual {
                    points_per_axis,
                    half_width,
                    step,
                } => {
                    if *points_per_axis == 0 || !(*step > 0.0) || half_width.is_some_and(|h| !(h >= 0.0)) {
                        return Err(bad("wave_residual needs points_per_axis >= 1, step > 0, half_width >= 0"));
                    }
                }
                Analysis::Energy => {}
                Analysis::Cherenkov {
                    speed,
                    medium,
                    omega,
                    periods,
                    mass,
                    ..
                } => {
                    medium.validate().map_err(|e| bad(format!("cherenkov medium: {e}")))?;
                    if !(*speed > 0.0 && *speed < u.c) {
                        return Err(bad("cherenkov speed must lie in (0, c)"));
                    }
                    let w = omega.values();
                    if w.is_empty() || w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                        return Err(bad("cherenkov frequencies must be positive"));
                    }
                    if !w.iter().any(|&x| medium.in_band(x) && medium.index(x) * speed > u.c) {
                        return Err(bad("no cherenkov frequency lies above threshold in the band"));
                    }
                    if !(*periods > 0.0) || mass.is_some_and(|m| !(m > 0.0)) {
                        return Err(bad("cherenkov periods and mass must be positive"));
                    }
                }
                Analysis::Dipole { angular_nodes } => {
                    if *angular_nodes < 2 {
                        return Err(bad("dipole needs angular_nodes >= 2"));
                    }
                }
                Analysis::Variance {
                    sigmas,
                    occupation,
                    cutoffs,
                    temperatures,
                    thermal_sigma,
                    expected_regimes,
                } => {
                    if !sigmas.is_empty() && self.lattice.is_none() {
                        return Err(bad("a sigma sweep needs `lattice`"));
                    }
                    if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                        return Err(bad("sigmas must be positive"));
                    }
                    if let Some(o) = occupation {
                        o.validate().map_err(|e| bad(e.to_string()))?;
                    }
                    if let Some(c) = cutoffs {
                        if c.n_max.len() < 2 || c.n_max.contains(&0) || !(c.length > 0.0) || !(c.sigma > 0.0) {
                            return Err(bad("cutoff ladder needs length, sigma > 0 and two or more n_max"));
                        }
                    }
                    if temperatures.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                        return Err(bad("temperatures must be positive"));
                    }
                    if !temperatures.is_empty() && !thermal_sigma.is_some_and(|s| s > 0.0) {
                        return Err(bad("a temperature sweep needs thermal_sigma > 0"));
                    }
                    if let Some(r) = expected_regimes {
                        if r.len() != temperatures.len() {
                            return Err(bad("expected_regimes must match temperatures"));
                        }
                    }
                    if sigmas.is_empty() && cutoffs.is_none() && temperatures.is_empty() {
                        return Err(bad("variance analysis has nothing to compute"));
                    }
                }
                Analysis::SingleMode {
                    omega,
                    t_max,
                    samples,
                    ode_steps,
                    ..
                } => {
                    if !(*omega > 0.0 && omega.is_finite()) || !(*t_max > 0.0 && t_max.is_finite()) {
                        return Err(bad("single_mode needs omega > 0 and t_max > 0"));
                    }
                    if *samples < 2 || *ode_steps < 1 {
                        return Err(bad("single_mode needs samples >= 2 and ode_steps >= 1"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Set a dotted path (`lattice.n_max`, `analyses.0.periods`) to a JSON value;
/// values that do not parse as JSON are taken as strings.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| bad(format!("override `{spec}` is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(bad("override has an empty key"));
    }
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    let mut cur = root;
    for (depth, key) in keys.iter().enumerate() {
        let last = depth + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert((*key).to_string(), value);
                    return Ok(());
                }
                map.get_mut(*key)
                    .ok_or_else(|| bad(format!("override path `{path}`: no key `{key}`")))?
            }
            Value::Array(items) => {
                let i: usize = key
                    .parse()
                    .map_err(|_| bad(format!("override path `{path}`: `{key}` is not an index")))?;
                let n = items.len();
                let slot = items
                    .get_mut(i)
                    .ok_or_else(|| bad(format!("override path `{path}`: index {i} out of {n}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad(format!("override path `{path}`: `{key}` is below a scalar"))),
        };
    }
    unreachable!("loop returns on the last key")
}

/// One pass/fail line of the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub analysis: String,
    pub passed: bool,
    pub metric: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: Value,
}

pub const SUMMARY_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub scenario: String,
    pub units: UnitMode,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
    /// Artifact file names, relative to the output directory.
    pub artifacts: Vec<String>,
}

/// An output file held in memory until the whole run has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub emit_plot_data: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub artifacts: Vec<Artifact>,
}

pub const SUMMARY_FILE: &str = "summary.json";

impl RunOutcome {
    /// Write all artifacts and the summary; returns the summary path.
    pub fn write_to(&self, dir: &std::path::Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        for a in &self.artifacts {
            std::fs::write(dir.join(&a.name), &a.bytes)?;
        }
        let path = dir.join(SUMMARY_FILE);
        let mut text = serde_json::to_string_pretty(&self.summary)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "m",
        "analyses": [{"kind": "dipole"}]
    }"#;

    #[test]
    fn overrides_follow_dotted_paths() {
        let mut v: Value = serde_json::from_str(r#"{"a": {"b": [1, {"c": 2}]}, "s": "x"}"#).unwrap();
        apply_override(&mut v, "a.b.1.c=5").unwrap();
        apply_override(&mut v, "a.b.0=[1,2]").unwrap();
        apply_override(&mut v, "s=natural").unwrap();
        apply_override(&mut v, "a.new=true").unwrap();
        assert_eq!(v["a"]["b"][1]["c"], 5);
        assert_eq!(v["a"]["b"][0], serde_json::json!([1, 2]));
        assert_eq!(v["s"], "natural");
        assert_eq!(v["a"]["new"], true);
        assert!(apply_override(&mut v, "a.missing.x=1").is_err());
        assert!(apply_override(&mut v, "a.b.7=1").is_err());
        assert!(apply_override(&mut v, "s.x=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn minimal_scenario_parses() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.units, UnitMode::Natural);
        assert_eq!(s.analyses, vec![Analysis::Dipole { angular_nodes: 8 }]);
        let s = Scenario::from_json_with_overrides(MINIMAL, &["units=si".into(), "analyses.0.angular_nodes=4".into()]).unwrap();
        assert_eq!(s.units, UnitMode::Si);
        assert_eq!(s.analyses, vec![Analysis::Dipole { angular_nodes: 4 }]);
    }

    #[test]
    fn malformed_scenarios_are_rejected() {
        let cases = [
            "{",
            r#"{"name": "x", "analyses": []}"#,
            r#"{"name": "x", "analyses": [{"kind": "nope"}]}"#,
            r#"{"name": "x", "analyses": [{"kind": "dipole"}], "extra": 1}"#,
            r#"{"name": "x", "analyses": [{"kind": "energy"}]}"#,
            r#"{"name": "x", "analyses": [{"kind": "dipole", "angular_nodes": 1}]}"#,
            r#"{"name": "x", "analyses": [{"kind": "causality"}], "lattice": {"length": 1, "n_max": 2},
                "source": {"kind": "static_charge", "q": 1, "width": 0.1}, "grid": {"lower":[0,0,0],"upper":[1,1,1],"n":[2,2,2]},
                "times": [1]}"#,
            r#"{"name": "x", "analyses": [{"kind": "cherenkov", "charge": 1, "speed": 0.5,
                "medium": {"model": "constant", "n": 1.5, "omega_c": 3}, "omega": [1, 2]}]}"#,
        ];
        for c in cases {
            assert!(matches!(Scenario::from_json(c), Err(Error::Scenario(_))), "{c}");
        }
    }

    #[test]
    fn frequency_grid_forms() {
        let r: FrequencyGrid = serde_json::from_str(r#"{"start": 1, "stop": 2, "count": 3}"#).unwrap();
        assert_eq!(r.values(), vec![1.0, 1.5, 2.0]);
        let l: FrequencyGrid = serde_json::from_str("[0.5, 4]").unwrap();
        assert_eq!(l.values(), vec![0.5, 4.0]);
    }
}
