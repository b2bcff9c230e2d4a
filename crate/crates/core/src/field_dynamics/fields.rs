//! Mode-sum reconstruction of `<A_T>`, `<E>`, `<B>` and the checks built on it.
//!
//! Modes `k` and `-k` are fused: their four terms collapse to `2 Re(M e^{ik.x})`
//! for one complex vector `M` per pair, so the fields are real by construction.

use num_complex::Complex64;
use rayon::prelude::*;

use super::snapshot::{FieldSnapshot, GridSpec};
use super::{mode_scale, ModeAmplitudeSet, ZeroMode};
use crate::error::{invalid, Error, Result};
use crate::mode_basis::ModeLattice;
use crate::quadrature::{integrate, AdaptiveSpec};
use crate::sources::{coulomb_gradient, project_transverse, CurrentSource};
use crate::{CVec3, Vec3};

/// Which Coulomb potential the electric field subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoulombTerm {
    /// Lattice sum `(1/V) sum_k e^{ik.x} rho*(k) / (eps0 k^2)`; cancels the
    /// instantaneous part of `-d<A_T>/dt` mode by mode.
    #[default]
    Lattice,
    /// Free-space Coulomb integral of the source.
    Continuum,
    /// Transverse field only.
    Omit,
}

#[derive(Debug, Clone)]
struct Pair {
    n: [i32; 3],
    k: Vec3,
    a: CVec3,
    e: CVec3,
}

/// Per-pair field coefficients at one instant.
#[derive(Debug, Clone)]
pub struct FieldCoefficients {
    pub t: f64,
    pairs: Vec<Pair>,
    zero: ZeroMode,
    length: f64,
    n_max: u32,
}

impl FieldCoefficients {
    /// `source` is needed for the lattice Coulomb term; pass `None` for the transverse field.
    pub fn new(
        amps: &ModeAmplitudeSet,
        lattice: &ModeLattice,
        source: Option<&dyn CurrentSource>,
    ) -> Result<Self> {
        if amps.alphas.len() != lattice.len() {
            return Err(invalid("amplitude set and lattice have different mode counts"));
        }
        let t = amps.t;
        let eps0 = lattice.units.epsilon0;
        let pairs = lattice
            .canonical
            .par_iter()
            .map(|&i| {
                let m = &lattice.modes[i];
                let p = &lattice.modes[m.partner];
                let c = mode_scale(lattice, m.omega);
                let fwd = Complex64::from_polar(c, -m.omega * t);
                let back = fwd.conj();
                let mut a = CVec3::zeros();
                let mut e = CVec3::zeros();
                for l in 0..2 {
                    let x = m.eps[l].map(|z| z * amps.alphas[i][l] * fwd);
                    let y = p.eps[l].map(|z| z * amps.alphas[m.partner][l].conj() * back);
                    a += x + y;
                    e += (x - y).map(|z| z * Complex64::new(0.0, m.omega));
                }
                if let Some(s) = source {
                    let rho = s.charge_fourier(&m.k, t).conj() / (eps0 * lattice.volume * m.k.norm_squared());
                    e -= m.k.map(|c| Complex64::new(0.0, c) * rho);
                }
                Pair { n: m.n, k: m.k, a, e }
            })
            .collect();
        Ok(Self {
            t,
            pairs,
            zero: amps.zero_mode,
            length: lattice.length,
            n_max: lattice.n_max,
        })
    }

    fn sum(&self, x: &Vec3, f: impl Fn(&Pair) -> CVec3) -> Vec3 {
        let mut acc = Vec3::zeros();
        for p in &self.pairs {
            let ph = Complex64::from_polar(2.0, p.k.dot(x));
            acc += f(p).map(|z| (z * ph).re);
        }
        acc
    }

    pub fn a_at(&self, x: &Vec3) -> Vec3 {
        self.sum(x, |p| p.a) + self.zero.a
    }

    pub fn e_at(&self, x: &Vec3) -> Vec3 {
        self.sum(x, |p| p.e) + self.zero.e
    }

    pub fn b_at(&self, x: &Vec3) -> Vec3 {
        self.sum(x, |p| curl(&p.k, &p.a))
    }

    pub fn laplacian_a_at(&self, x: &Vec3) -> Vec3 {
        self.sum(x, |p| p.a.map(|z| z * -p.k.norm_squared()))
    }

    /// `(A, E, B)` at once, sharing the phase factors.
    pub fn fields_at(&self, x: &Vec3) -> [Vec3; 3] {
        let mut out = [self.zero.a, self.zero.e, Vec3::zeros()];
        for p in &self.pairs {
            let ph = Complex64::from_polar(2.0, p.k.dot(x));
            accumulate(&mut out, p, ph);
        }
        out
    }

    /// Fields at arbitrary points, in parallel.
    pub fn snapshot_points(&self, points: &[Vec3]) -> FieldSnapshot {
        let f: Vec<[Vec3; 3]> = points.par_iter().map(|x| self.fields_at(x)).collect();
        FieldSnapshot::from_parts(self.t, None, points, &f)
    }

    /// Fields on a tensor grid, with per-axis phase tables instead of one
    /// complex exponential per (point, mode).
    pub fn snapshot(&self, grid: &GridSpec) -> FieldSnapshot {
        let axes = [grid.axis(0), grid.axis(1), grid.axis(2)];
        let m = self.n_max as i32;
        let dk = 2.0 * std::f64::consts::PI / self.length;
        let tables: Vec<Vec<Vec<Complex64>>> = axes
            .iter()
            .map(|xs| {
                (-m..=m)
                    .map(|n| xs.iter().map(|&x| Complex64::from_polar(1.0, dk * n as f64 * x)).collect())
                    .collect()
            })
            .collect();
        let [nx, ny, nz] = grid.n;
        let f: Vec<[Vec3; 3]> = (0..nx * ny * nz)
            .into_par_iter()
            .map(|idx| {
                let (ix, iy, iz) = (idx / (ny * nz), (idx / nz) % ny, idx % nz);
                let mut out = [self.zero.a, self.zero.e, Vec3::zeros()];
                for p in &self.pairs {
                    let ph = tables[0][(p.n[0] + m) as usize][ix]
                        * tables[1][(p.n[1] + m) as usize][iy]
                        * tables[2][(p.n[2] + m) as usize][iz]
                        * 2.0;
                    accumulate(&mut out, p, ph);
                }
                out
            })
            .collect();
        FieldSnapshot::from_parts(self.t, Some(grid.n), &grid.points(), &f)
    }
}

fn accumulate(out: &mut [Vec3; 3], p: &Pair, ph: Complex64) {
    let b = curl(&p.k, &p.a);
    for i in 0..3 {
        out[0][i] += (p.a[i] * ph).re;
        out[1][i] += (p.e[i] * ph).re;
        out[2][i] += (b[i] * ph).re;
    }
}

/// `i k x v`
fn curl(k: &Vec3, v: &CVec3) -> CVec3 {
    let i = Complex64::new(0.0, 1.0);
    CVec3::new(
        i * (k[1] * v[2] - k[2] * v[1]),
        i * (k[2] * v[0] - k[0] * v[2]),
        i * (k[0] * v[1] - k[1] * v[0]),
    )
}

fn check_not_singular(source: &dyn CurrentSource, x: &Vec3, t: f64) -> Result<()> {
    for p in source.singular_points(t) {
        if (p - x).norm() <= 1e-12 * (1.0 + x.norm()) {
            return Err(Error::SingularPoint {
                x: x[0],
                y: x[1],
                z: x[2],
            });
        }
    }
    Ok(())
}

pub fn expectation_a(amps: &ModeAmplitudeSet, lattice: &ModeLattice, x: &Vec3) -> Result<Vec3> {
    Ok(FieldCoefficients::new(amps, lattice, None)?.a_at(x))
}

/// `<E> = -d<A_T>/dt - grad phi` with the lattice Coulomb term.
pub fn expectation_e_modesum(
    amps: &ModeAmplitudeSet,
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    x: &Vec3,
) -> Result<Vec3> {
    expectation_e_modesum_with(amps, lattice, source, x, CoulombTerm::Lattice)
}

pub fn expectation_e_modesum_with(
    amps: &ModeAmplitudeSet,
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    x: &Vec3,
    coulomb: CoulombTerm,
) -> Result<Vec3> {
    check_not_singular(source, x, amps.t)?;
    match coulomb {
        CoulombTerm::Lattice => Ok(FieldCoefficients::new(amps, lattice, Some(source))?.e_at(x)),
        CoulombTerm::Omit => Ok(FieldCoefficients::new(amps, lattice, None)?.e_at(x)),
        CoulombTerm::Continuum => {
            let et = FieldCoefficients::new(amps, lattice, None)?.e_at(x);
            Ok(et - coulomb_gradient(source, x, amps.t, &lattice.units)?)
        }
    }
}

pub fn expectation_b_modesum(amps: &ModeAmplitudeSet, lattice: &ModeLattice, x: &Vec3) -> Result<Vec3> {
    Ok(FieldCoefficients::new(amps, lattice, None)?.b_at(x))
}

/// `<H_0> = sum hbar omega |alpha|^2` (zero-point energy and the uniform mode excluded).
pub fn field_energy(amps: &ModeAmplitudeSet, lattice: &ModeLattice) -> f64 {
    let hbar = lattice.units.hbar;
    lattice
        .modes
        .iter()
        .zip(&amps.alphas)
        .map(|(m, a)| hbar * m.omega * (a[0].norm_sqr() + a[1].norm_sqr()))
        .sum()
}

/// The source as the truncated lattice sees it: `(1/V) sum_k e^{ik.x} conj(rho(k))`.
pub fn lattice_charge(lattice: &ModeLattice, source: &dyn CurrentSource, x: &Vec3, t: f64) -> f64 {
    let mut acc = source.charge_fourier(&Vec3::zeros(), t).re;
    for &i in &lattice.canonical {
        let m = &lattice.modes[i];
        acc += 2.0 * (Complex64::from_polar(1.0, m.k.dot(x)) * source.charge_fourier(&m.k, t).conj()).re;
    }
    acc / lattice.volume
}

/// Lattice transverse current, `k = 0` component included.
pub fn lattice_transverse_current(
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    x: &Vec3,
    t: f64,
) -> Vec3 {
    let mut acc = source.current_fourier(&Vec3::zeros(), t).map(|z| z.re);
    for &i in &lattice.canonical {
        let m = &lattice.modes[i];
        let jt = project_transverse(&source.current_fourier(&m.k, t).map(|z| z.conj()), &m.khat());
        let ph = Complex64::from_polar(2.0, m.k.dot(x));
        acc += jt.map(|z| (z * ph).re);
    }
    acc / lattice.volume
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveResidual {
    /// `d_t^2 <A_T> - c^2 laplacian <A_T> - j_T / eps0`
    pub residual: Vec3,
    /// `j_T / eps0`
    pub source_term: Vec3,
}

/// Wave-equation residual at `(x, t)`: second time difference over `history`
/// (three or five equally spaced snapshots centred on `t`), analytic Laplacian,
/// lattice-consistent `j_T`.
pub fn wave_equation_residual(
    history: &[ModeAmplitudeSet],
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    x: &Vec3,
    t: f64,
) -> Result<WaveResidual> {
    let tol = 1e-12 * t.abs().max(1.0);
    let i = history
        .iter()
        .position(|a| (a.t - t).abs() <= tol)
        .ok_or_else(|| Error::InsufficientHistory(format!("no snapshot at t = {t}")))?;
    if i == 0 || i + 1 >= history.len() {
        return Err(Error::InsufficientHistory("t needs a snapshot on each side".into()));
    }
    let h = history[i + 1].t - history[i].t;
    let uniform = |j: usize| ((history[j].t - history[i].t) - (j as f64 - i as f64) * h).abs() <= 1e-9 * h.abs();
    if !(h != 0.0 && uniform(i - 1)) {
        return Err(Error::InsufficientHistory("snapshots around t are not equally spaced".into()));
    }
    let a = |j: usize| -> Result<Vec3> { expectation_a(&history[j], lattice, x) };
    let a_tt = if i >= 2 && i + 2 < history.len() && uniform(i - 2) && uniform(i + 2) {
        (-a(i - 2)? + a(i - 1)? * 16.0 - a(i)? * 30.0 + a(i + 1)? * 16.0 - a(i + 2)?) / (12.0 * h * h)
    } else {
        (a(i - 1)? - a(i)? * 2.0 + a(i + 1)?) / (h * h)
    };
    let c2 = lattice.units.c * lattice.units.c;
    let lap = FieldCoefficients::new(&history[i], lattice, None)?.laplacian_a_at(x);
    let source_term = lattice_transverse_current(lattice, source, x, t) / lattice.units.epsilon0;
    Ok(WaveResidual {
        residual: a_tt - lap * c2 - source_term,
        source_term,
    })
}

/// `(div <E>, rho / eps0)` at `x`, divergence by fourth-order differences with step `h`.
pub fn gauss_law_residual(
    coeffs: &FieldCoefficients,
    source: &dyn CurrentSource,
    x: &Vec3,
    h: f64,
    eps0: f64,
) -> (f64, f64) {
    let mut div = 0.0;
    for i in 0..3 {
        let mut d = Vec3::zeros();
        d[i] = h;
        let e = |s: f64| coeffs.e_at(&(x + d * s))[i];
        div += (8.0 * (e(1.0) - e(-1.0)) - (e(2.0) - e(-2.0))) / (12.0 * h);
    }
    (div, source.charge(x, coeffs.t) / eps0)
}

/// `<A_T>` from the Green's-function form, summed over every mode separately
/// (no pair fusion): `sum_k (1/V eps0) e^{ik.x} int_0^t sin(omega (t - t'))/omega P_T conj(j(k, t')) dt'`.
/// The imaginary part vanishes only through conjugate-pair cancellation.
pub fn expectation_a_green(
    lattice: &ModeLattice,
    source: &dyn CurrentSource,
    x: &Vec3,
    t: f64,
    spec: &AdaptiveSpec,
) -> Result<CVec3> {
    let w = source.window();
    let (lo, hi, sign) = if t >= 0.0 { (0.0, t, 1.0) } else { (t, 0.0, -1.0) };
    let (lo, hi) = (lo.max(w.start), hi.min(w.end));
    if lo >= hi {
        return Ok(CVec3::zeros());
    }
    let breaks: Vec<f64> = source.time_breaks().into_iter().filter(|&b| b > lo && b < hi).collect();
    let eps0 = lattice.units.epsilon0;
    let terms: Vec<CVec3> = lattice
        .modes
        .par_iter()
        .map(|m| {
            let khat = m.khat();
            let mut br = breaks.clone();
            let n = ((hi - lo) * m.omega / std::f64::consts::PI).ceil() as usize;
            br.extend((1..n.min(4096)).map(|i| lo + (hi - lo) * i as f64 / n as f64));
            let v: CVec3 = integrate(
                |s| {
                    let g = (m.omega * (t - s)).sin() / m.omega;
                    project_transverse(&source.current_fourier(&m.k, s).map(|z| z.conj()), &khat)
                        .map(|z| z * g)
                },
                lo,
                hi,
                &br,
                spec,
            )?;
            let ph = Complex64::from_polar(sign / (lattice.volume * eps0), m.k.dot(x));
            Ok(v.map(|z| z * ph))
        })
        .collect::<Result<_>>()?;
    let mut acc = CVec3::zeros();
    for v in terms {
        acc += v;
    }
    // uniform mode: (1/eps0 V) int (t - t') j(0, t') dt'
    let z: Vec3 = integrate(
        |s| source.current_fourier(&Vec3::zeros(), s).map(|c| c.re) * (t - s),
        lo,
        hi,
        &breaks,
        spec,
    )?;
    Ok(acc + (z * (sign / (eps0 * lattice.volume))).map(Complex64::from))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_dynamics::{evolve_amplitudes, AmplitudeQuadrature};
    use crate::mode_basis::build_lattice;
    use crate::sources::{make_switched_dipole, GaussianBlobs, SwitchedDipole, Vacuum};
    use crate::units::UnitSystem;
    use std::f64::consts::PI;

    fn dipole() -> SwitchedDipole {
        make_switched_dipole(Vec3::new(0.2, -0.3, 1.0), 2.0, 1.0, Vec3::new(0.1, 0.05, 0.0), 0.3).unwrap()
    }

    #[test]
    fn vacuum_fields_vanish() {
        let u = UnitSystem::natural();
        let lat = build_lattice(2.0 * PI, 3, &u).unwrap();
        let a = evolve_amplitudes(&lat, &Vacuum, 1.0, &AmplitudeQuadrature::default()).unwrap();
        let x = Vec3::new(0.3, 0.1, -0.2);
        assert_eq!(expectation_a(&a, &lat, &x).unwrap(), Vec3::zeros());
        assert_eq!(expectation_e_modesum(&a, &lat, &Vacuum, &x).unwrap(), Vec3::zeros());
        assert_eq!(expectation_b_modesum(&a, &lat, &x).unwrap(), Vec3::zeros());
        assert_eq!(field_energy(&a, &lat), 0.0);
    }

    #[test]
    fn single_mode_examples() {
        let u = UnitSystem::natural();
        let lat = build_lattice(2.0 * PI, 2, &u).unwrap();
        let i = lat.index_of([1, -1, 2]).unwrap();
        let m = &lat.modes[i];
        let mut a = super::super::ModeAmplitudeSet::vacuum(&lat, 0.0);
        a.alphas[i][0] = Complex64::new(0.7, 0.0);
        let want = m.eps[0].map(|z| z.re) * (2.0 * mode_scale(&lat, m.omega) * 0.7);
        let got = expectation_a(&a, &lat, &Vec3::zeros()).unwrap();
        assert!((got - want).norm() < 1e-14);
        // B amplitude is |k| times the A amplitude, along khat x eps
        let x = Vec3::new(0.2, 0.4, -0.1);
        let c = mode_scale(&lat, m.omega);
        let eps = m.eps[0].map(|z| z.re);
        let phase = m.k.dot(&x);
        let a_want = eps * (2.0 * c * 0.7 * phase.cos());
        let b_want = m.k.cross(&eps) * (-2.0 * c * 0.7 * phase.sin());
        assert!((expectation_a(&a, &lat, &x).unwrap() - a_want).norm() < 1e-14);
        assert!((expectation_b_modesum(&a, &lat, &x).unwrap() - b_want).norm() < 1e-14);
        // one quantum-equivalent of energy for |alpha| = 1
        a.alphas[i][0] = Complex64::from_polar(1.0, 0.4);
        assert!((field_energy(&a, &lat) - u.hbar * m.omega).abs() < 1e-14);
    }

    #[test]
    fn green_form_is_real_and_matches_amplitudes() {
        let u = UnitSystem::natural();
        let lat = build_lattice(2.0 * PI, 4, &u).unwrap();
        let blobs = GaussianBlobs {
            blobs: vec![
                (Vec3::new(0.2, 0.0, -0.1), 0.4, Vec3::new(0.3, -0.5, 0.2)),
                (Vec3::new(-0.3, 0.25, 0.1), 0.35, Vec3::new(-0.1, 0.2, 0.6)),
            ],
        };
        let spec = AmplitudeQuadrature::default();
        for (x, t) in [(Vec3::new(0.5, -0.2, 0.9), 1.3), (Vec3::new(-1.1, 0.7, 0.3), 2.4)] {
            let amps = evolve_amplitudes(&lat, &blobs, t, &spec).unwrap();
            let g = expectation_a_green(&lat, &blobs, &x, t, &spec.adaptive).unwrap();
            let re = g.map(|z| z.re);
            let im = g.map(|z| z.im);
            assert!(im.norm() < 1e-12 * re.norm(), "imaginary residual {}", im.norm() / re.norm());
            let a = expectation_a(&amps, &lat, &x).unwrap();
            assert!((a - re).norm() < 1e-10 * re.norm(), "{a} vs {re}");
        }
    }

    #[test]
    fn tensor_grid_matches_point_evaluation() {
        let u = UnitSystem::natural();
        let lat = build_lattice(2.0 * PI, 5, &u).unwrap();
        let d = dipole();
        let amps = evolve_amplitudes(&lat, &d, 1.7, &AmplitudeQuadrature::default()).unwrap();
        let c = FieldCoefficients::new(&amps, &lat, Some(&d)).unwrap();
        let grid = GridSpec::cube(2.0 * PI, 5);
        let snap = c.snapshot(&grid);
        for (j, x) in grid.points().iter().enumerate() {
            let [a, e, b] = c.fields_at(x);
            let close = |u: &[f64; 3], v: &Vec3| (Vec3::from(*u) - v).norm() <= 1e-12 * (1.0 + v.norm());
            assert!(close(&snap.a[j], &a) && close(&snap.e[j], &e) && close(&snap.b[j], &b));
        }
    }

    #[test]
    fn divergence_free_b_and_gauss_law() {
        let u = UnitSystem::natural();
        let lat = build_lattice(2.0 * PI, 16, &u).unwrap();
        let d = dipole();
        let amps = evolve_amplitudes(&lat, &d, 2.2, &AmplitudeQuadrature::default()).unwrap();
        let c = FieldCoefficients::new(&amps, &lat, Some(&d)).unwrap();
        let h = 1e-3;
        for x in [Vec3::new(0.2, 0.1, 0.3), Vec3::new(-0.4, 0.3, 0.1), Vec3::new(1.0, -0.5, 0.7)] {
            let mut div_b = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..3 {
                let mut s = Vec3::zeros();
                s[i] = h;
                let bp = c.b_at(&(x + s));
                let bm = c.b_at(&(x - s));
                div_b += (bp[i] - bm[i]) / (2.0 * h);
                scale = scale.max(bp.norm() / h);
            }
            assert!(div_b.abs() < 1e-6 * scale, "div B = {div_b}");
            let (div_e, rho) = gauss_law_residual(&c, &d, &x, 1e-3, u.epsilon0);
            let rl = lattice_charge(&lat, &d, &x, 2.2);
            assert!((div_e - rl).abs() < 1e-7 * rl.abs().max(1e-3), "{div_e} vs {rl}");
            assert!((div_e - rho).abs() < 1e-3 * rho.abs().max(1e-2), "{div_e} vs {rho}");
        }
    }

    #[test]
    fn continuum_coulomb_close_to_lattice_near_source() {
        let u = UnitSystem::natural();
        let lat = build_lattice(2.0 * PI, 10, &u).unwrap();
        let d = dipole();
        let amps = evolve_amplitudes(&lat, &d, 2.0, &AmplitudeQuadrature::default()).unwrap();
        let x = Vec3::new(0.5, 0.2, 0.4);
        let a = expectation_e_modesum(&amps, &lat, &d, &x).unwrap();
        let b = expectation_e_modesum_with(&amps, &lat, &d, &x, CoulombTerm::Continuum).unwrap();
        // differ only by periodic images of the Coulomb field and lattice truncation
        assert!((a - b).norm() < 0.02 * a.norm(), "{a} vs {b}");
    }

    #[test]
    fn singular_point_rejected() {
        let u = UnitSystem::natural();
        let lat = build_lattice(2.0 * PI, 2, &u).unwrap();
        let q = crate::sources::UniformCharge::new(1.0, Vec3::new(0.1, 0.0, 0.0), 0.0, Vec3::zeros(), &u).unwrap();
        let mut a = super::super::ModeAmplitudeSet::vacuum(&lat, 1.0);
        a.t = 1.0;
        assert!(matches!(
            expectation_e_modesum(&a, &lat, &q, &q.position(1.0)),
            Err(Error::SingularPoint { .. })
        ));
    }
}
