//! Closed-form heat traces built from three theta-series kernels, each
//! evaluated with a proven truncation bound.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{self, ManifoldDescriptor, ValidationError};
use crate::lattice::{self, count_bound, enumerate_within, Lattice3, LatticeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("error tolerance must be positive, got {0}")]
    BadEps(f64),
    #[error("time must be positive and finite, got {0}")]
    BadTime(f64),
    #[error("length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("quadratic form is not positive-definite")]
    NotPositiveDefinite,
    #[error("invalid descriptor: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("times must be positive and strictly increasing")]
    BadGrid,
}

/// Paired times, trace values and absolute error bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSamples {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub err: Vec<f64>,
}

impl TraceSamples {
    pub fn new(times: Vec<f64>, values: Vec<f64>, err: Vec<f64>) -> Result<Self, TraceError> {
        if times.len() != values.len() || times.len() != err.len() {
            return Err(TraceError::BadGrid);
        }
        check_grid(&times)?;
        Ok(Self { times, values, err })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_grid(times: &[f64]) -> Result<(), TraceError> {
    let ok = times.iter().all(|t| t.is_finite() && *t > 0.0)
        && times.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(TraceError::BadGrid)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

fn check_eps(eps: f64) -> Result<(), TraceError> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(TraceError::BadEps(eps))
    }
}

fn check_time(t: f64) -> Result<(), TraceError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(TraceError::BadTime(t))
    }
}

// Σ_{k≥0} e^{-c (x0 + k)²} for x0 ≥ 0, to within `eps`.
fn one_sided(c: f64, x0: f64, eps: f64) -> f64 {
    let mut terms = Vec::new();
    let mut x = x0;
    loop {
        let term = (-c * x * x).exp();
        let q = (-c * (2.0 * x + 1.0)).exp();
        if q < 1.0 && term / (1.0 - q) <= eps {
            break;
        }
        terms.push(term);
        x += 1.0;
    }
    terms.iter().rev().sum()
}

/// Σ_{m∈Z} e^{-(m+offset)² u²/4t} with absolute error at most `eps`.
pub fn theta1(u: f64, offset: f64, t: f64, eps: f64) -> Result<f64, TraceError> {
    check_eps(eps)?;
    check_time(t)?;
    if !(u.is_finite() && u > 0.0) {
        return Err(TraceError::BadLength(u));
    }
    let o = offset.rem_euclid(1.0);
    let c = u * u / (4.0 * t);
    Ok(one_sided(c, o, eps / 2.0) + one_sided(c, 1.0 - o, eps / 2.0))
}

// ∫_R^∞ r^n e^{-c r²} dr for n = 0..=4, with I_0 replaced by its erfc bound.
fn gauss_moments(c: f64, r: f64) -> [f64; 5] {
    let e = (-c * r * r).exp();
    let mut m = [0.0; 5];
    m[0] = if r > 0.0 { e / (2.0 * c * r) } else { 0.5 * (PI / c).sqrt() };
    m[1] = e / (2.0 * c);
    for n in 2..5 {
        m[n] = r.powi(n as i32 - 1) * e / (2.0 * c) + (n as f64 - 1.0) / (2.0 * c) * m[n - 2];
    }
    m
}

/// Upper bound on Σ_{|v|>r} e^{-c|v|²} over a 3D lattice with the given
/// covolume and covering bound ρ.
pub fn lattice_tail_bound(c: f64, r: f64, covolume: f64, rho: f64) -> f64 {
    let a = 4.0 * PI / (3.0 * covolume);
    let m = gauss_moments(c, r);
    // (r+ρ)³ r = r⁴ + 3ρ r³ + 3ρ² r² + ρ³ r
    2.0 * c * a * (m[4] + 3.0 * rho * m[3] + 3.0 * rho * rho * m[2] + rho.powi(3) * m[1])
}

/// Same bound for a (possibly shifted) plane lattice of the given area.
pub fn plane_tail_bound(c: f64, r: f64, area: f64, rho: f64) -> f64 {
    let m = gauss_moments(c, r);
    2.0 * c * PI / area * (m[3] + 2.0 * rho * m[2] + rho * rho * m[1])
}

/// Smallest radius (up to a few percent) at which `bound` drops below eps.
pub(crate) fn radius_for<F: Fn(f64) -> f64>(c: f64, eps: f64, bound: F) -> f64 {
    let mut r = ((1.0f64).max(-eps.ln()) / c).sqrt();
    while bound(r) > eps {
        r *= 1.1;
    }
    for _ in 0..200 {
        let s = r / 1.02;
        if bound(s) > eps {
            break;
        }
        r = s;
    }
    r
}

const DUAL_SWITCH: f64 = 2.0e3;

/// Σ_{v∈Λ} e^{-|v|²/4t} within eps. Switches to the Poisson-dual series when
/// the direct sum is large and the dual one needs fewer points.
pub fn lattice_theta(l: &Lattice3, t: f64, eps: f64) -> Result<f64, TraceError> {
    check_eps(eps)?;
    check_time(t)?;
    let v = l.covolume();
    let c = 1.0 / (4.0 * t);
    let rho = l.cover_radius_bound();
    let r = radius_for(c, eps, |r| lattice_tail_bound(c, r, v, rho));
    let direct = count_bound(r, v, rho);
    if direct <= DUAL_SWITCH {
        return sum_gaussian(l, c, r);
    }
    let dl = lattice::dual(l);
    let pref = (4.0 * PI * t).powf(1.5) / v;
    let cd = 4.0 * PI * PI * t;
    let epsd = eps / pref;
    let rhod = dl.cover_radius_bound();
    let rd = radius_for(cd, epsd, |r| lattice_tail_bound(cd, r, 1.0 / v, rhod));
    if count_bound(rd, 1.0 / v, rhod) < direct {
        Ok(pref * sum_gaussian(&dl, cd, rd)?)
    } else {
        sum_gaussian(l, c, r)
    }
}

/// Direct summation only, never the dual series.
pub fn lattice_theta_direct(l: &Lattice3, t: f64, eps: f64) -> Result<f64, TraceError> {
    check_eps(eps)?;
    check_time(t)?;
    let c = 1.0 / (4.0 * t);
    let rho = l.cover_radius_bound();
    let r = radius_for(c, eps, |r| lattice_tail_bound(c, r, l.covolume(), rho));
    sum_gaussian(l, c, r)
}

fn sum_gaussian(l: &Lattice3, c: f64, r: f64) -> Result<f64, TraceError> {
    let pts = enumerate_within(l, r)?;
    let mut terms: Vec<f64> = pts.iter().map(|p| (-c * p.norm_squared()).exp()).collect();
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(terms.iter().sum())
}

/// q(x, y) = a x² + 2b xy + c y².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadForm2 {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Form of the plane lattice spanned by lengths s1, s2 at `angle`.
    pub fn from_lengths(s1: f64, s2: f64, angle: f64) -> Self {
        Self { a: s1 * s1, b: s1 * s2 * angle.cos(), c: s2 * s2 }
    }

    pub fn rect(s1: f64, s2: f64) -> Self {
        Self { a: s1 * s1, b: 0.0, c: s2 * s2 }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + 2.0 * self.b * x * y + self.c * y * y
    }

    fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.a > 0.0 && self.det() > 0.0
    }
}

/// Σ_{m,n∈Z} e^{-q(m+d1, n+d2)/4t} within eps. Large t goes through the
/// Poisson-dual series when that needs fewer points.
pub fn shifted_plane_theta(q: &QuadForm2, d1: f64, d2: f64, t: f64, eps: f64) -> Result<f64, TraceError> {
    check_eps(eps)?;
    check_time(t)?;
    if !q.is_positive_definite() {
        return Err(TraceError::NotPositiveDefinite);
    }
    let area = q.det().sqrt();
    let c = 1.0 / (4.0 * t);
    let rho = plane_rho(q);
    let r = radius_for(c, eps, |r| plane_tail_bound(c, r, area, rho));
    let count = PI * (r + rho).powi(2) / area;
    if count > 200.0 {
        let qd = QuadForm2::new(q.c / q.det(), -q.b / q.det(), q.a / q.det());
        let pref = 4.0 * PI * t / area;
        let cd = 4.0 * PI * PI * t;
        let rhod = plane_rho(&qd);
        let rd = radius_for(cd, eps / pref, |r| plane_tail_bound(cd, r, 1.0 / area, rhod));
        if PI * (rd + rhod).powi(2) * area < count {
            let mut terms = Vec::new();
            plane_points(&qd, 0.0, 0.0, rd, |m, n, v| {
                terms.push((2.0 * PI * (m * d1 + n * d2)).cos() * (-cd * v).exp())
            })?;
            terms.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
            return Ok(pref * terms.iter().sum::<f64>());
        }
    }
    let mut terms = Vec::new();
    plane_points(q, d1, d2, r, |_, _, v| terms.push((-c * v).exp()))?;
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(terms.iter().sum())
}

fn plane_rho(q: &QuadForm2) -> f64 {
    let sa = q.a.sqrt();
    let (r1, r2) = lattice::gauss_reduce_vectors([sa, 0.0], [q.b / sa, q.det().sqrt() / sa]);
    0.5 * (r1[0].hypot(r1[1]) + r2[0].hypot(r2[1]))
}

// Calls f(m, n, q(m+d1, n+d2)) for every integer point with q ≤ r².
fn plane_points(q: &QuadForm2, d1: f64, d2: f64, r: f64, mut f: impl FnMut(f64, f64, f64)) -> Result<(), TraceError> {
    let count = PI * (r + plane_rho(q)).powi(2) / q.det().sqrt();
    let cap = lattice::point_cap();
    if count > 8.0 * cap as f64 {
        return Err(LatticeError::CapExceeded { estimate: count, cap }.into());
    }
    let r2sq = r * r;
    let w = r * (q.a / q.det()).sqrt() + 1e-9;
    let lo = (-d2 - w).ceil() as i64;
    let hi = (-d2 + w).floor() as i64;
    for n in lo..=hi {
        let y = n as f64 + d2;
        let disc = q.b * q.b * y * y - q.a * (q.c * y * y - r2sq);
        if disc < 0.0 {
            continue;
        }
        let s = disc.sqrt();
        let xlo = (-q.b * y - s) / q.a;
        let xhi = (-q.b * y + s) / q.a;
        let mlo = (xlo - d1 - 1e-9).ceil() as i64;
        let mhi = (xhi - d1 + 1e-9).floor() as i64;
        for m in mlo..=mhi {
            f(m as f64, n as f64, q.eval(m as f64 + d1, y));
        }
    }
    Ok(())
}

/// One additive piece of a trace formula. `power` is the exponent of t in
/// the prefactor: −3/2 for the torus term, −1/2 for screw-axis terms and −1
/// for reflection-plane terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceTerm {
    pub power: f64,
    pub value: f64,
}

enum Kernel {
    Torus,
    Axis { coef: f64, u: f64, offset: f64 },
    Plane { coef: f64, q: QuadForm2, d1: f64, d2: f64 },
}

// Terms of the closed form. Axis coefficients multiply 1/√(πt), plane
// coefficients multiply 1/(πt).
fn kernels(d: &ManifoldDescriptor) -> Vec<Kernel> {
    use Kernel::*;
    let axis = |coef: f64, u: f64, offset: f64| Axis { coef, u, offset };
    let mut k = vec![Torus];
    match d {
        ManifoldDescriptor::M1 { .. } => {}
        ManifoldDescriptor::M2 { l1, .. } => k.push(axis(l1 / 4.0, *l1, 0.5)),
        ManifoldDescriptor::M3 { l1, .. } => k.push(axis(l1 / 3.0, *l1, 1.0 / 3.0)),
        ManifoldDescriptor::M4 { l1, .. } => {
            k.push(axis(l1 / 4.0, *l1, 0.25));
            k.push(axis(l1 / 8.0, *l1, 0.5));
        }
        ManifoldDescriptor::M5 { l1, .. } => {
            k.push(axis(l1 / 6.0, *l1, 1.0 / 6.0));
            k.push(axis(l1 / 6.0, *l1, 1.0 / 3.0));
            k.push(axis(l1 / 12.0, *l1, 0.5));
        }
        ManifoldDescriptor::M6 { lengths } => {
            for &li in lengths {
                k.push(axis(li / 8.0, li, 0.5));
            }
        }
        ManifoldDescriptor::N1 { plane, .. } => {
            let q = QuadForm2::from_lengths(plane.s1, plane.s2, plane.angle);
            k.push(Plane { coef: plane.area() / 8.0, q, d1: 0.5, d2: 0.0 });
        }
        ManifoldDescriptor::N2 { plane, .. } => {
            let q = QuadForm2::from_lengths(plane.s1, plane.s2, plane.angle);
            k.push(Plane { coef: plane.area() / 16.0, q, d1: 0.5, d2: 0.0 });
            k.push(Plane { coef: plane.area() / 16.0, q, d1: 0.0, d2: 0.5 });
        }
        ManifoldDescriptor::N3 { lengths: [a, b, c] } | ManifoldDescriptor::N4 { lengths: [a, b, c] } => {
            let last = if matches!(d, ManifoldDescriptor::N3 { .. }) { 0.0 } else { 0.5 };
            k.push(axis(a / 8.0, *a, 0.5));
            k.push(Plane { coef: a * b / 16.0, q: QuadForm2::rect(*a, *b), d1: 0.0, d2: 0.5 });
            k.push(Plane { coef: a * c / 16.0, q: QuadForm2::rect(*a, *c), d1: 0.5, d2: last });
        }
    }
    k
}

/// The additive terms of the closed-form trace; their sum is within eps of
/// the trace.
pub fn trace_terms(d: &ManifoldDescriptor, t: f64, eps: f64) -> Result<Vec<TraceTerm>, TraceError> {
    check_eps(eps)?;
    check_time(t)?;
    geometry::validate(d).map_err(TraceError::Invalid)?;
    let ks = kernels(d);
    let share = eps / ks.len() as f64;
    let vol = geometry::volume(d);
    let sq = (PI * t).sqrt();
    ks.iter()
        .map(|k| match k {
            Kernel::Torus => {
                let pref = vol / (4.0 * PI * t).powf(1.5);
                let th = lattice_theta(&geometry::translation_lattice(d), t, share / pref)?;
                Ok(TraceTerm { power: -1.5, value: pref * th })
            }
            Kernel::Axis { coef, u, offset } => {
                let pref = coef / sq;
                Ok(TraceTerm { power: -0.5, value: pref * theta1(*u, *offset, t, share / pref)? })
            }
            Kernel::Plane { coef, q, d1, d2 } => {
                let pref = coef / (PI * t);
                let v = shifted_plane_theta(q, *d1, *d2, t, share / pref)?;
                Ok(TraceTerm { power: -1.0, value: pref * v })
            }
        })
        .collect()
}

/// Closed-form heat trace with absolute error at most eps.
pub fn trace(d: &ManifoldDescriptor, t: f64, eps: f64) -> Result<f64, TraceError> {
    Ok(trace_terms(d, t, eps)?.iter().map(|x| x.value).sum())
}

/// Trace on every time of an ascending grid, evaluated in parallel.
pub fn trace_grid(d: &ManifoldDescriptor, times: &[f64], eps: f64) -> Result<TraceSamples, TraceError> {
    check_eps(eps)?;
    check_grid(times)?;
    geometry::validate(d).map_err(TraceError::Invalid)?;
    let values = times
        .par_iter()
        .map(|&t| trace(d, t, eps))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TraceSamples { times: times.to_vec(), values, err: vec![eps; times.len()] })
}
