//! Independent reference computations of the trace: quadrature of the
//! lifted heat kernel over the covering torus, and the explicit Laplace
//! spectrum from the dual lattice with holonomy-averaged multiplicities.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{self, ManifoldDescriptor, ValidationError};
use crate::heat_trace::{lattice_tail_bound, radius_for};
use crate::lattice::{self, Lattice3, LatticeError, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid descriptor: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("grid resolution {0} out of range (2..=1024)")]
    Resolution(usize),
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error("multiplicity at eigenvalue {lambda} is {value} + {imag}i, not an integer")]
    NonIntegerMultiplicity { lambda: f64, value: f64, imag: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// |Q(n) − Q(n/2)| plus the lattice truncation bound.
    pub error: f64,
}

const MAX_RESOLUTION: usize = 1024;

/// Lattice radius for the quadrature integrand such that the dropped part of
/// every shifted lattice sum is below `eps` after the kernel normalization.
pub fn quadrature_radius(d: &ManifoldDescriptor, t: f64, eps: f64) -> f64 {
    let l = geometry::translation_lattice(d);
    let c = 1.0 / (4.0 * t);
    let pref = (4.0 * PI * t).powf(-1.5);
    let rho = l.cover_radius_bound();
    radius_for(c, eps / pref, |r| lattice_tail_bound(c, r, l.covolume(), rho))
}

/// Midpoint-rule integral of the lifted heat kernel H(x, gx) over the
/// covering torus, divided by the fold count. This is the trace by the
/// covering lemma.
pub fn trace_by_quadrature(d: &ManifoldDescriptor, t: f64, n: usize, r: f64) -> Result<Quadrature, OracleError> {
    geometry::validate(d).map_err(OracleError::Invalid)?;
    if !(2..=MAX_RESOLUTION).contains(&n) || !n.is_multiple_of(2) {
        return Err(OracleError::Resolution(n));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(OracleError::BadArgument(format!("time {t}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(OracleError::BadArgument(format!("radius {r}")));
    }
    let l = geometry::translation_lattice(d);
    let hol = geometry::holonomy_elements(d);
    let fine = quadrature_once(&l, &hol, t, n, r)?;
    let coarse = quadrature_once(&l, &hol, t, n / 2, r)?;
    let c = 1.0 / (4.0 * t);
    let tail = (4.0 * PI * t).powf(-1.5)
        * lattice_tail_bound(c, r, l.covolume(), l.cover_radius_bound())
        * geometry::volume(d);
    Ok(Quadrature { value: fine, error: (fine - coarse).abs() + tail })
}

fn quadrature_once(l: &Lattice3, hol: &[geometry::RigidMotion], t: f64, n: usize, r: f64) -> Result<f64, OracleError> {
    let b = *l.basis();
    let binv = b.try_inverse().expect("basis invertible");
    let c = 1.0 / (4.0 * t);
    let order = hol.len() as f64;
    let norm = (4.0 * PI * t).powf(-1.5);

    // identity element: the integrand is the plain lattice sum
    let theta: f64 = lattice::enumerate_within(l, r)?
        .iter()
        .map(|v| (-c * v.norm_squared()).exp())
        .sum();
    let mut total = theta;

    // w = (I − M)u − α in lattice coordinates, keyed on a rational grid
    let k = (24 * n) as i64;
    let kf = k as f64;
    for g in hol.iter().skip(1) {
        let m = binv * g.rotation * b;
        let im = Mat3::identity() - m;
        let alpha = binv * g.translation;
        let mut counts: HashMap<[i64; 3], u64> = HashMap::new();
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    let u = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, kk as f64 + 0.5) / n as f64;
                    let w = im * u - alpha;
                    let key = [
                        ((w[0] * kf).round() as i64).rem_euclid(k),
                        ((w[1] * kf).round() as i64).rem_euclid(k),
                        ((w[2] * kf).round() as i64).rem_euclid(k),
                    ];
                    *counts.entry(key).or_insert(0) += 1;
                }
            }
        }
        let keys: Vec<([i64; 3], u64)> = counts.into_iter().collect();
        let sums: Vec<f64> = keys
            .par_iter()
            .map(|(key, cnt)| {
                let w = Vec3::new(key[0] as f64, key[1] as f64, key[2] as f64) / kf;
                *cnt as f64 * shifted_lattice_sum(&b, &binv, &w, c, r)
            })
            .collect();
        let mut sums = sums;
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        total += sums.iter().sum::<f64>() / (n * n * n) as f64;
    }
    Ok(norm * l.covolume() * total / order)
}

// Σ_{k ∈ Z³, |B(k + w)| ≤ r} e^{-c |B(k + w)|²}, by an integer box search.
fn shifted_lattice_sum(b: &Mat3, binv: &Mat3, w: &Vec3, c: f64, r: f64) -> f64 {
    let bound: Vec<f64> = (0..3).map(|i| r * binv.row(i).norm()).collect();
    let r2 = r * r;
    let mut s = 0.0;
    let lo = |i: usize| (-w[i] - bound[i]).ceil() as i64;
    let hi = |i: usize| (-w[i] + bound[i]).floor() as i64;
    for k0 in lo(0)..=hi(0) {
        for k1 in lo(1)..=hi(1) {
            let partial = b * Vec3::new(k0 as f64 + w[0], k1 as f64 + w[1], w[2]);
            let col = b.column(2);
            for k2 in lo(2)..=hi(2) {
                let v = partial + col * k2 as f64;
                let n2 = v.norm_squared();
                if n2 <= r2 {
                    s += (-c * n2).exp();
                }
            }
        }
    }
    s
}

/// Eigenvalues below a cutoff with their multiplicities, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub entries: Vec<(f64, u64)>,
    pub cutoff: f64,
    /// Covolume of the covering torus lattice and the covering bound of its
    /// dual, kept for the tail estimate.
    torus_covolume: f64,
    dual_rho: f64,
}

impl Spectrum {
    /// A spectrum from explicit entries; the tail bound assumes the counting
    /// function of the given torus.
    pub fn from_entries(entries: Vec<(f64, u64)>, cutoff: f64, torus: &Lattice3) -> Self {
        Self {
            entries,
            cutoff,
            torus_covolume: torus.covolume(),
            dual_rho: lattice::dual(torus).cover_radius_bound(),
        }
    }
}

/// Laplace spectrum up to `lambda_max`: torus eigenvalues 4π²|μ|² for μ in
/// the dual lattice, multiplicities averaged over the holonomy characters.
pub fn spectrum(d: &ManifoldDescriptor, lambda_max: f64) -> Result<Spectrum, OracleError> {
    geometry::validate(d).map_err(OracleError::Invalid)?;
    if !(lambda_max.is_finite() && lambda_max >= 0.0) {
        return Err(OracleError::BadArgument(format!("lambda_max {lambda_max}")));
    }
    let l = geometry::translation_lattice(d);
    let dl = lattice::dual(&l);
    let hol = geometry::holonomy_elements(d);
    let rmax = lambda_max.sqrt() / (2.0 * PI);
    let mut mus: Vec<(f64, Vec3)> = lattice::enumerate_within(&dl, rmax)?
        .into_iter()
        .map(|m| (4.0 * PI * PI * m.norm_squared(), m))
        .filter(|(lam, _)| *lam <= lambda_max)
        .collect();
    mus.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut entries = Vec::new();
    let mut i = 0;
    while i < mus.len() {
        let lam0 = mus[i].0;
        let mut j = i;
        while j < mus.len() && mus[j].0 - lam0 <= 1e-9 * lam0.max(1.0) {
            j += 1;
        }
        let group = &mus[i..j];
        let (mut re, mut im) = (0.0, 0.0);
        for g in &hol {
            let at = g.rotation.transpose();
            for (_, mu) in group {
                if (at * mu - mu).norm() <= 1e-9 * mu.norm().max(1.0) {
                    let phase = 2.0 * PI * mu.dot(&g.translation);
                    re += phase.cos();
                    im += phase.sin();
                }
            }
        }
        let (re, im) = (re / hol.len() as f64, im / hol.len() as f64);
        let lam = group.iter().map(|x| x.0).sum::<f64>() / group.len() as f64;
        if (re - re.round()).abs() > 1e-9 || im.abs() > 1e-9 || re.round() < 0.0 {
            return Err(OracleError::NonIntegerMultiplicity { lambda: lam, value: re, imag: im });
        }
        let m = re.round() as u64;
        if m > 0 {
            entries.push((if lam0 == 0.0 { 0.0 } else { lam }, m));
        }
        i = j;
    }
    Ok(Spectrum {
        entries,
        cutoff: lambda_max,
        torus_covolume: l.covolume(),
        dual_rho: dl.cover_radius_bound(),
    })
}

/// Σ m·e^{-λt} over the entries, and a bound on the omitted tail from the
/// torus eigenvalue counting function.
pub fn partial_heat_sum(s: &Spectrum, t: f64) -> (f64, f64) {
    let mut terms: Vec<f64> = s.entries.iter().map(|&(l, m)| m as f64 * (-l * t).exp()).collect();
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sum = terms.iter().sum();
    let c = 4.0 * PI * PI * t;
    let rc = s.cutoff.max(0.0).sqrt() / (2.0 * PI);
    let tail = lattice_tail_bound(c, rc, 1.0 / s.torus_covolume, s.dual_rho);
    (sum, tail)
}
