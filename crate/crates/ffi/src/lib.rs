//! C ABI over `qfield`.
//!
//! Objects are opaque handles created by `qf_*_new` / `qf_*_from_*` functions
//! and released with the matching `qf_*_free`. Every fallible call returns a
//! `QfStatus`; on failure `qf_last_error` holds a message for the calling thread.
//! Panics never cross the boundary.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use qfield::field_dynamics::{evolve_amplitudes, field_energy, AmplitudeQuadrature, FieldCoefficients, ModeAmplitudeSet};
use qfield::mode_basis::{build_lattice, ModeLattice};
use qfield::radiation::{cherenkov_power_closed, dipole_rate_2p1s};
use qfield::scenario::{run, RunOptions, Scenario};
use qfield::sources::{CurrentSource, SourceSpec};
use qfield::uncertainty::{variance_smeared, OccupationSpec, SmearingKernel};
use qfield::{Error, UnitSystem, Vec3};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Numerical = 4,
    Scenario = 5,
    Io = 6,
    Panic = 7,
}

/// Unit system (natural or SI).
pub struct QfUnits(UnitSystem);

/// Periodic mode lattice.
pub struct QfLattice(ModeLattice);

/// Classical current source.
pub struct QfSource(Arc<dyn CurrentSource>);

/// Mode amplitudes at one time, with the field coefficients built from them.
pub struct QfField {
    amps: ModeAmplitudeSet,
    coeffs: FieldCoefficients,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QfStatus {
    match e {
        Error::InvalidArgument(_) | Error::Units(_) | Error::SteadySource | Error::BelowThreshold(_) => {
            QfStatus::InvalidArgument
        }
        Error::Scenario(_) | Error::UnknownScenario(_) | Error::Json(_) => QfStatus::Scenario,
        Error::Io(_) => QfStatus::Io,
        _ => QfStatus::Numerical,
    }
}

struct Fail(QfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QfStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            QfStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(QfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(QfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(QfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(QfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Natural units: `c = eps0 = hbar = k_B = 1`.
#[no_mangle]
pub extern "C" fn qf_units_natural() -> *mut QfUnits {
    boxed(QfUnits(UnitSystem::natural()))
}

/// SI units with CODATA constants.
#[no_mangle]
pub extern "C" fn qf_units_si() -> *mut QfUnits {
    boxed(QfUnits(UnitSystem::si()))
}

/// # Safety
/// `units` must come from `qf_units_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_units_free(units: *mut QfUnits) {
    if !units.is_null() {
        drop(Box::from_raw(units));
    }
}

/// Lattice of `(2 n_max + 1)^3 - 1` modes in a box of side `length`.
///
/// # Safety
/// `units` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_lattice_new(
    units: *const QfUnits,
    length: f64,
    n_max: u32,
    out_lattice: *mut *mut QfLattice,
) -> QfStatus {
    guard(|| {
        let u = get(units, "units")?;
        let o = out(out_lattice, "out_lattice")?;
        *o = boxed(QfLattice(build_lattice(length, n_max, &u.0)?));
        Ok(())
    })
}

/// Number of modes (wavevectors) on the lattice; 0 for NULL.
///
/// # Safety
/// `lattice` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qf_lattice_len(lattice: *const QfLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `lattice` must come from `qf_lattice_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_lattice_free(lattice: *mut QfLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Source from a JSON descriptor such as
/// `{"kind": "switched_dipole", "p0": [0,0,1], "omega_d": 2, "ramp": 1, "width": 0.3}`.
///
/// # Safety
/// `units` must be a live handle, `json` a NUL-terminated string, `out_source` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_source_from_json(
    units: *const QfUnits,
    json: *const c_char,
    out_source: *mut *mut QfSource,
) -> QfStatus {
    guard(|| {
        let u = get(units, "units")?;
        let j = text(json, "json")?;
        let o = out(out_source, "out_source")?;
        let spec: SourceSpec =
            serde_json::from_str(j).map_err(|e| Fail(QfStatus::InvalidArgument, format!("source: {e}")))?;
        *o = boxed(QfSource(spec.build(&u.0)?));
        Ok(())
    })
}

/// # Safety
/// `source` must come from `qf_source_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_source_free(source: *mut QfSource) {
    if !source.is_null() {
        drop(Box::from_raw(source));
    }
}

/// Evolve the mode amplitudes from vacuum at `t = 0` to `t` under `source`.
///
/// # Safety
/// `lattice` and `source` must be live handles; `out_field` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_field_evolve(
    lattice: *const QfLattice,
    source: *const QfSource,
    t: f64,
    out_field: *mut *mut QfField,
) -> QfStatus {
    guard(|| {
        let l = get(lattice, "lattice")?;
        let s = get(source, "source")?;
        let o = out(out_field, "out_field")?;
        let amps = evolve_amplitudes(&l.0, s.0.as_ref(), t, &AmplitudeQuadrature::default())?;
        let coeffs = FieldCoefficients::new(&amps, &l.0, Some(s.0.as_ref()))?;
        *o = boxed(QfField { amps, coeffs });
        Ok(())
    })
}

/// `<A>`, `<E>`, `<B>` at `x`; each output is a 3-vector and may be NULL.
///
/// # Safety
/// `field` must be a live handle; `x` must point to 3 doubles; non-NULL outputs to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn qf_field_at(
    field: *const QfField,
    x: *const f64,
    out_a: *mut f64,
    out_e: *mut f64,
    out_b: *mut f64,
) -> QfStatus {
    guard(|| {
        let f = get(field, "field")?;
        if x.is_null() {
            return Err(Fail(QfStatus::NullPointer, "x is null".into()));
        }
        let xs = std::slice::from_raw_parts(x, 3);
        if xs.iter().any(|c| !c.is_finite()) {
            return Err(Fail(QfStatus::InvalidArgument, "x must be finite".into()));
        }
        let [a, e, b] = f.coeffs.fields_at(&Vec3::new(xs[0], xs[1], xs[2]));
        for (dst, v) in [(out_a, a), (out_e, e), (out_b, b)] {
            if !dst.is_null() {
                std::slice::from_raw_parts_mut(dst, 3).copy_from_slice(v.as_slice());
            }
        }
        Ok(())
    })
}

/// Radiation energy `sum hbar omega |alpha|^2` of the field.
///
/// # Safety
/// `field` and `lattice` must be live handles (the lattice the field was evolved on).
#[no_mangle]
pub unsafe extern "C" fn qf_field_energy(
    field: *const QfField,
    lattice: *const QfLattice,
    out_energy: *mut f64,
) -> QfStatus {
    guard(|| {
        let f = get(field, "field")?;
        let l = get(lattice, "lattice")?;
        let o = out(out_energy, "out_energy")?;
        if f.amps.alphas.len() != l.0.len() {
            return Err(Fail(QfStatus::InvalidArgument, "field and lattice do not match".into()));
        }
        *o = field_energy(&f.amps, &l.0);
        Ok(())
    })
}

/// # Safety
/// `field` must come from `qf_field_evolve` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_field_free(field: *mut QfField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Vacuum variance of the electric field smeared over a Gaussian of width `sigma`.
///
/// # Safety
/// `lattice` must be a live handle; `out_variance` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_vacuum_variance_smeared(
    lattice: *const QfLattice,
    sigma: f64,
    out_variance: *mut f64,
) -> QfStatus {
    guard(|| {
        let l = get(lattice, "lattice")?;
        let o = out(out_variance, "out_variance")?;
        *o = variance_smeared(&l.0, &OccupationSpec::Vacuum, &SmearingKernel::spatial(sigma))?;
        Ok(())
    })
}

/// Hydrogen 2p -> 1s spontaneous emission rate.
///
/// # Safety
/// `units` must be a live handle; `out_rate` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_dipole_rate_2p1s(units: *const QfUnits, out_rate: *mut f64) -> QfStatus {
    guard(|| {
        let u = get(units, "units")?;
        let o = out(out_rate, "out_rate")?;
        *o = dipole_rate_2p1s(&u.0)?;
        Ok(())
    })
}

/// Closed-form Cherenkov power per unit frequency; 0 below threshold.
///
/// # Safety
/// `units` must be a live handle; `out_power` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_cherenkov_power(
    units: *const QfUnits,
    charge: f64,
    speed: f64,
    index: f64,
    omega: f64,
    out_power: *mut f64,
) -> QfStatus {
    guard(|| {
        let u = get(units, "units")?;
        let o = out(out_power, "out_power")?;
        if !(speed > 0.0 && speed < u.0.c) || !(index >= 1.0) || !(omega >= 0.0) {
            return Err(Fail(QfStatus::InvalidArgument, "need 0 < speed < c, index >= 1, omega >= 0".into()));
        }
        *o = cherenkov_power_closed(charge, speed, index, omega, &u.0);
        Ok(())
    })
}

/// Run a scenario given as JSON text and write its outputs to `out_dir`.
/// `out_passed` receives 1 if every verdict passed, else 0. Nothing is written
/// if the scenario is invalid or an analysis fails to run.
///
/// # Safety
/// `json` and `out_dir` must be NUL-terminated strings; `out_passed` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_scenario_run(
    json: *const c_char,
    out_dir: *const c_char,
    emit_plot_data: bool,
    out_passed: *mut i32,
) -> QfStatus {
    guard(|| {
        let j = text(json, "json")?;
        let dir = text(out_dir, "out_dir")?;
        let o = out(out_passed, "out_passed")?;
        let sc = Scenario::from_json(j)?;
        let outcome = run(&sc, &RunOptions { emit_plot_data })?;
        outcome.write_to(Path::new(dir))?;
        *o = i32::from(outcome.summary.passed);
        Ok(())
    })
}
