// Brute-force reference computations and random draws shared by the
// integration tests. Nothing here calls the library's trace, spectrum or
// lattice enumeration code.
#![allow(dead_code)]

use std::f64::consts::PI;

use flatspec::geometry::{self, ManifoldClass, ManifoldDescriptor};
use flatspec::lattice::{Mat3, Vec3};
use rand::rngs::StdRng;
use rand::Rng;

pub fn basis_matrix(d: &ManifoldDescriptor) -> Mat3 {
    let l = geometry::translation_lattice(d);
    *l.basis()
}

/// Edge lengths and the three cell angles (b,c), (a,c), (a,b).
pub fn cell(a: f64, b: f64, c: f64, al: f64, be: f64, ga: f64) -> Option<[Vec3; 3]> {
    let cx = be.cos();
    let cy = (al.cos() - be.cos() * ga.cos()) / ga.sin();
    let cz2 = 1.0 - cx * cx - cy * cy;
    (cz2 >= 0.05).then(|| {
        [Vec3::new(a, 0.0, 0.0), Vec3::new(b * ga.cos(), b * ga.sin(), 0.0), Vec3::new(c * cx, c * cy, c * cz2.sqrt())]
    })
}

/// Lengths in [0.5, 2], angles in [π/4, 3π/4].
pub fn draw(c: ManifoldClass, rng: &mut StdRng) -> ManifoldDescriptor {
    let angle = |rng: &mut StdRng| rng.gen_range(PI / 4.0..3.0 * PI / 4.0);
    loop {
        let d = if c == ManifoldClass::M1 {
            let (a, b, cc) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
            let (al, be, ga) = (angle(rng), angle(rng), angle(rng));
            match cell(a, b, cc, al, be, ga) {
                Some(basis) => ManifoldDescriptor::M1 { basis },
                None => continue,
            }
        } else {
            let p: Vec<f64> = ManifoldDescriptor::angle_mask(c)
                .iter()
                .map(|&m| if m { angle(rng) } else { rng.gen_range(0.5..2.0) })
                .collect();
            ManifoldDescriptor::from_params(c, &p)
        };
        if geometry::validate(&d).is_ok() {
            return d;
        }
    }
}

/// One fixed, unremarkable descriptor per class at unit scale.
pub fn fixed(c: ManifoldClass) -> ManifoldDescriptor {
    use flatspec::lattice::PlaneLattice;
    use ManifoldClass as C;
    match c {
        C::M1 => ManifoldDescriptor::M1 {
            basis: [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, 1.1, 0.0), Vec3::new(-0.2, 0.4, 0.9)],
        },
        C::M2 => ManifoldDescriptor::M2 { l1: 1.1, plane: PlaneLattice::new(1.0, 1.2, 1.3) },
        C::M3 => ManifoldDescriptor::M3 { l1: 1.2, l: 0.9 },
        C::M4 => ManifoldDescriptor::M4 { l1: 1.3, l: 1.0 },
        C::M5 => ManifoldDescriptor::M5 { l1: 1.5, l: 0.8 },
        C::M6 => ManifoldDescriptor::M6 { lengths: [1.0, 1.2, 0.9] },
        C::N1 => ManifoldDescriptor::N1 { plane: PlaneLattice::new(1.0, 1.1, 1.4), l3: 0.9 },
        C::N2 => ManifoldDescriptor::N2 { plane: PlaneLattice::new(1.1, 0.9, 1.2), h: 1.0 },
        C::N3 => ManifoldDescriptor::N3 { lengths: [1.0, 1.1, 1.2] },
        C::N4 => ManifoldDescriptor::N4 { lengths: [0.9, 1.0, 1.3] },
    }
}

/// Σ e^{-|Bk|²/4t} over all integer k with |k_i| ≤ n.
pub fn brute_theta(b: &Mat3, t: f64, n: i64) -> f64 {
    let mut terms = vec![];
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let v = b * Vec3::new(i as f64, j as f64, k as f64);
                terms.push((-v.norm_squared() / (4.0 * t)).exp());
            }
        }
    }
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    terms.iter().sum()
}

/// Laplace spectrum below `lambda_max` by scanning integer dual coordinates
/// over a box and projecting onto holonomy-invariant combinations.
pub fn brute_spectrum(d: &ManifoldDescriptor, lambda_max: f64) -> Vec<(f64, u64)> {
    let b = basis_matrix(d);
    let dual = b.try_inverse().unwrap().transpose();
    let r = lambda_max.sqrt() / (2.0 * PI);
    // m_i = μ·b_i, so |m_i| ≤ r·|b_i|
    let n: Vec<i64> = (0..3).map(|i| (r * b.column(i).norm()).ceil() as i64).collect();
    let mut mus = vec![];
    for i in -n[0]..=n[0] {
        for j in -n[1]..=n[1] {
            for k in -n[2]..=n[2] {
                let mu = dual * Vec3::new(i as f64, j as f64, k as f64);
                let lam = 4.0 * PI * PI * mu.norm_squared();
                if lam <= lambda_max {
                    mus.push((lam, mu));
                }
            }
        }
    }
    mus.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let hol = geometry::holonomy_elements(d);
    let mut out: Vec<(f64, u64)> = vec![];
    let mut start = 0;
    while start < mus.len() {
        let mut end = start;
        while end < mus.len() && mus[end].0 - mus[start].0 <= 1e-8 * mus[start].0.max(1.0) {
            end += 1;
        }
        let mut sum = 0.0;
        for g in &hol {
            for (_, mu) in &mus[start..end] {
                let image = g.rotation.transpose() * mu;
                if (image - mu).norm() < 1e-9 {
                    sum += (2.0 * PI * mu.dot(&g.translation)).cos();
                }
            }
        }
        let m = sum / hol.len() as f64;
        assert!((m - m.round()).abs() < 1e-6, "non-integer multiplicity {m}");
        if m.round() > 0.0 {
            out.push((mus[start].0, m.round() as u64));
        }
        start = end;
    }
    out
}

/// Σ m e^{-λt} over the brute-force spectrum, cut where the omitted part is
/// negligible at unit scale.
pub fn brute_heat_sum(d: &ManifoldDescriptor, t: f64) -> f64 {
    let lmax = 45.0 / t;
    let mut terms: Vec<f64> =
        brute_spectrum(d, lmax).iter().map(|&(l, m)| m as f64 * (-l * t).exp()).collect();
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    terms.iter().sum()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}
