//! Lattices in R³ and R²: enumeration inside a ball, duals, and basis reduction.

use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default bound on the number of points a single enumeration may produce.
pub const DEFAULT_POINT_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("degenerate basis")]
    Degenerate,
    #[error("radius must be finite and non-negative, got {0}")]
    BadRadius(f64),
    #[error("enumeration would produce about {estimate:.3e} points, cap is {cap}")]
    CapExceeded { estimate: f64, cap: usize },
}

/// Point cap, overridable through `FLATSPEC_POINT_CAP`.
pub fn point_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("FLATSPEC_POINT_CAP")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v >= 1.0)
            .map(|v| v as usize)
            .unwrap_or(DEFAULT_POINT_CAP)
    })
}

/// A full-rank lattice given by an ordered basis (the columns of `basis`).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice3 {
    basis: Mat3,
    gram: Mat3,
}

impl Lattice3 {
    pub fn new(b1: Vec3, b2: Vec3, b3: Vec3) -> Result<Self, LatticeError> {
        Self::from_matrix(Mat3::from_columns(&[b1, b2, b3]))
    }

    pub fn from_matrix(basis: Mat3) -> Result<Self, LatticeError> {
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(LatticeError::Degenerate);
        }
        let scale: f64 = (0..3).map(|i| basis.column(i).norm()).product();
        let det = basis.determinant();
        if scale == 0.0 || det.abs() <= 1e-12 * scale {
            return Err(LatticeError::Degenerate);
        }
        let gram = basis.transpose() * basis;
        Ok(Self { basis, gram })
    }

    pub fn identity() -> Self {
        Self::from_matrix(Mat3::identity()).expect("identity is a basis")
    }

    pub fn basis(&self) -> &Mat3 {
        &self.basis
    }

    pub fn vector(&self, i: usize) -> Vec3 {
        self.basis.column(i).into_owned()
    }

    pub fn gram(&self) -> &Mat3 {
        &self.gram
    }

    /// Volume of the fundamental parallelepiped.
    pub fn covolume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    pub fn point(&self, k: [i64; 3]) -> Vec3 {
        self.basis * Vec3::new(k[0] as f64, k[1] as f64, k[2] as f64)
    }

    /// Half the sum of the basis lengths of the reduced basis. Every point of
    /// space lies within this distance of some lattice point.
    pub fn cover_radius_bound(&self) -> f64 {
        let (r, _) = reduce_basis(self);
        0.5 * (0..3).map(|i| r.column(i).norm()).sum::<f64>()
    }

    /// Length of the shortest nonzero vector.
    pub fn shortest(&self) -> f64 {
        let (r, _) = reduce_basis(self);
        r.column(0).norm()
    }
}

/// Basis of Λ* with ⟨aᵢ, bⱼ⟩ = δᵢⱼ.
pub fn dual(l: &Lattice3) -> Lattice3 {
    let inv = l.basis.try_inverse().expect("lattice basis is invertible");
    Lattice3::from_matrix(inv.transpose()).expect("dual of a basis is a basis")
}

/// Upper bound on #{v ∈ Λ : |v| ≤ r}.
pub fn count_bound(r: f64, covolume: f64, rho: f64) -> f64 {
    4.0 * std::f64::consts::PI / 3.0 * (r + rho).powi(3) / covolume
}

/// All lattice vectors of length at most `r`, ordered lexicographically by
/// their integer coordinates in the given basis.
pub fn enumerate_within(l: &Lattice3, r: f64) -> Result<Vec<Vec3>, LatticeError> {
    Ok(enumerate_coords_within(l, r)?
        .into_iter()
        .map(|k| l.point(k))
        .collect())
}

/// Integer coordinates of all lattice vectors of length at most `r`.
pub fn enumerate_coords_within(l: &Lattice3, r: f64) -> Result<Vec<[i64; 3]>, LatticeError> {
    if !r.is_finite() || r < 0.0 {
        return Err(LatticeError::BadRadius(r));
    }
    let cap = point_cap();
    let (red, u) = reduce_basis(l);
    let rho = 0.5 * (0..3).map(|i| red.column(i).norm()).sum::<f64>();
    let estimate = count_bound(r, l.covolume(), rho);
    if estimate > cap as f64 * 8.0 {
        return Err(LatticeError::CapExceeded { estimate, cap });
    }
    let g = red.transpose() * red;
    let r2 = r * r;
    let mut out = Vec::new();
    let mut err = None;
    ellipsoid_points(&g, r2, |x| {
        if out.len() >= cap {
            err = Some(LatticeError::CapExceeded { estimate, cap });
            return false;
        }
        let k = [
            u[(0, 0)] * x[0] + u[(0, 1)] * x[1] + u[(0, 2)] * x[2],
            u[(1, 0)] * x[0] + u[(1, 1)] * x[1] + u[(1, 2)] * x[2],
            u[(2, 0)] * x[0] + u[(2, 1)] * x[1] + u[(2, 2)] * x[2],
        ];
        out.push(k);
        true
    });
    if let Some(e) = err {
        return Err(e);
    }
    out.sort_unstable();
    Ok(out)
}

/// Calls `f` with every integer x satisfying xᵀGx ≤ r2. Stops early when `f`
/// returns false.
pub(crate) fn ellipsoid_points<F: FnMut([i64; 3]) -> bool>(g: &Mat3, r2: f64, mut f: F) {
    let slack = 1e-9;
    let r2c = r2 * (1.0 + 4.0 * f64::EPSILON);
    let ginv = match g.try_inverse() {
        Some(m) => m,
        None => return,
    };
    let b3 = (r2 * ginv[(2, 2)]).max(0.0).sqrt() + slack;
    // Schur complement of the leading 2×2 block, used to bound x2 given x3.
    let g12 = Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let g12inv = g12.try_inverse().unwrap_or_else(Matrix2::zeros);
    let col = nalgebra::Vector2::new(g[(0, 2)], g[(1, 2)]);
    let center_dir = -(g12inv * col);
    let s3 = g[(2, 2)] - col.dot(&(g12inv * col));
    for x3 in (-b3.floor() as i64)..=(b3.floor() as i64) {
        let x3f = x3 as f64;
        let budget3 = r2 - s3 * x3f * x3f;
        if budget3 < -slack * r2.max(1.0) {
            continue;
        }
        let c = center_dir * x3f;
        let w2 = (budget3.max(0.0) * g12inv[(1, 1)]).sqrt() + slack;
        let lo2 = (c[1] - w2).ceil() as i64;
        let hi2 = (c[1] + w2).floor() as i64;
        for x2 in lo2..=hi2 {
            let x2f = x2 as f64;
            // g11 x1² + 2 x1 (g12 x2 + g13 x3) + rest ≤ r2
            let b = g[(0, 1)] * x2f + g[(0, 2)] * x3f;
            let rest = g[(1, 1)] * x2f * x2f + 2.0 * g[(1, 2)] * x2f * x3f + g[(2, 2)] * x3f * x3f;
            let a = g[(0, 0)];
            let disc = b * b - a * (rest - r2);
            if disc < -slack * r2.max(1.0) * a {
                continue;
            }
            let sq = disc.max(0.0).sqrt();
            let lo1 = ((-b - sq) / a - slack).ceil() as i64;
            let hi1 = ((-b + sq) / a + slack).floor() as i64;
            for x1 in lo1..=hi1 {
                let x = [x1, x2, x3];
                let q = quad(g, x);
                if q <= r2c && !f(x) {
                    return;
                }
            }
        }
    }
}

fn quad(g: &Mat3, x: [i64; 3]) -> f64 {
    let v = Vec3::new(x[0] as f64, x[1] as f64, x[2] as f64);
    v.dot(&(g * v))
}

/// Greedy reduction of a 3D basis (Minkowski-reduced in dimension 3).
/// Returns the reduced basis as columns and the unimodular U with
/// reduced = basis · U.
pub fn reduce_basis(l: &Lattice3) -> (Mat3, Matrix3<i64>) {
    let mut b = l.basis;
    let mut u = Matrix3::<i64>::identity();
    for _ in 0..10_000 {
        sort_columns(&mut b, &mut u);
        gauss_pair(&mut b, &mut u);
        // closest vector to b2 in the sublattice spanned by b0, b1
        let (b0, b1, b2) = (b.column(0).into_owned(), b.column(1).into_owned(), b.column(2).into_owned());
        let m = Matrix2::new(b0.dot(&b0), b0.dot(&b1), b0.dot(&b1), b1.dot(&b1));
        let rhs = nalgebra::Vector2::new(b2.dot(&b0), b2.dot(&b1));
        let sol = m.try_inverse().map(|mi| mi * rhs).unwrap_or_else(nalgebra::Vector2::zeros);
        let mut best = (0i64, 0i64);
        let mut best_norm = b2.norm_squared();
        let (fa, fb) = (sol[0].floor() as i64, sol[1].floor() as i64);
        for p in (fa - 1)..=(fa + 2) {
            for q in (fb - 1)..=(fb + 2) {
                let n = (b2 - b0 * p as f64 - b1 * q as f64).norm_squared();
                if n < best_norm * (1.0 - 1e-14) {
                    best_norm = n;
                    best = (p, q);
                }
            }
        }
        if best == (0, 0) {
            break;
        }
        let nb2 = b2 - b0 * best.0 as f64 - b1 * best.1 as f64;
        b.set_column(2, &nb2);
        for i in 0..3 {
            u[(i, 2)] -= best.0 * u[(i, 0)] + best.1 * u[(i, 1)];
        }
    }
    sort_columns(&mut b, &mut u);
    (b, u)
}

fn sort_columns(b: &mut Mat3, u: &mut Matrix3<i64>) {
    for i in 0..3 {
        for j in 0..(2 - i) {
            if b.column(j + 1).norm_squared() < b.column(j).norm_squared() * (1.0 - 1e-14) {
                b.swap_columns(j, j + 1);
                u.swap_columns(j, j + 1);
            }
        }
    }
}

fn gauss_pair(b: &mut Mat3, u: &mut Matrix3<i64>) {
    for _ in 0..10_000 {
        let b0 = b.column(0).into_owned();
        let b1 = b.column(1).into_owned();
        let ratio = b0.dot(&b1) / b0.norm_squared();
        if ratio.abs() <= 0.5 + 1e-12 {
            break;
        }
        let mu = ratio.round();
        if mu == 0.0 {
            break;
        }
        let m = mu as i64;
        b.set_column(1, &(b1 - b0 * mu));
        for i in 0..3 {
            u[(i, 1)] -= m * u[(i, 0)];
        }
        if b.column(1).norm_squared() < b.column(0).norm_squared() {
            b.swap_columns(0, 1);
            u.swap_columns(0, 1);
        }
    }
}

/// Minkowski-reduced Gram matrix with ascending diagonal and normalized signs.
pub fn reduce_gram(l: &Lattice3) -> Mat3 {
    let (b, _) = reduce_basis(l);
    let mut b = b;
    let g = |b: &Mat3, i: usize, j: usize| b.column(i).dot(&b.column(j));
    let tiny = 1e-13 * b.column(2).norm_squared();
    if g(&b, 0, 1) < -tiny {
        let c = -b.column(1).into_owned();
        b.set_column(1, &c);
    }
    if g(&b, 0, 2) < -tiny {
        let c = -b.column(2).into_owned();
        b.set_column(2, &c);
    }
    if g(&b, 1, 2) < -tiny {
        if g(&b, 0, 1).abs() <= tiny {
            let c = -b.column(1).into_owned();
            b.set_column(1, &c);
        } else if g(&b, 0, 2).abs() <= tiny {
            let c = -b.column(2).into_owned();
            b.set_column(2, &c);
        }
    }
    b.transpose() * b
}

/// A plane lattice given by two lengths and the angle between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneLattice {
    pub s1: f64,
    pub s2: f64,
    pub angle: f64,
}

impl PlaneLattice {
    pub fn new(s1: f64, s2: f64, angle: f64) -> Self {
        Self { s1, s2, angle }
    }

    pub fn area(&self) -> f64 {
        self.s1 * self.s2 * self.angle.sin()
    }

    /// Basis vectors in the plane, first along the x axis.
    pub fn vectors(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.s1, 0.0],
            [self.s2 * self.angle.cos(), self.s2 * self.angle.sin()],
        )
    }

    pub fn from_vectors(v1: [f64; 2], v2: [f64; 2]) -> Self {
        let s1 = v1[0].hypot(v1[1]);
        let s2 = v2[0].hypot(v2[1]);
        let dot = v1[0] * v2[0] + v1[1] * v2[1];
        let cross = (v1[0] * v2[1] - v1[1] * v2[0]).abs();
        Self { s1, s2, angle: cross.atan2(dot) }
    }

    /// True when the triple already satisfies the reduction conditions.
    pub fn is_reduced(&self) -> bool {
        let c = self.angle.cos();
        self.s1 <= self.s2
            && c >= -1e-15
            && c <= self.s1 / (2.0 * self.s2) * (1.0 + 1e-12) + 1e-15
    }
}

/// Gauss–Lagrange reduction: shortest vector first, angle in [π/3, π/2].
pub fn reduce_plane(p: PlaneLattice) -> PlaneLattice {
    if p.is_reduced() {
        return p;
    }
    let (a, b) = p.vectors();
    let (v1, v2) = gauss_reduce_vectors(a, b);
    let mut out = PlaneLattice::from_vectors(v1, v2);
    if out.angle > std::f64::consts::FRAC_PI_2 {
        out.angle = std::f64::consts::PI - out.angle;
    }
    out
}

pub(crate) fn gauss_reduce_vectors(mut v1: [f64; 2], mut v2: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let n = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    if n(v2) < n(v1) {
        std::mem::swap(&mut v1, &mut v2);
    }
    for _ in 0..10_000 {
        let ratio = (v1[0] * v2[0] + v1[1] * v2[1]) / n(v1);
        if ratio.abs() <= 0.5 + 1e-12 {
            break;
        }
        let mu = ratio.round();
        if mu == 0.0 {
            break;
        }
        v2 = [v2[0] - mu * v1[0], v2[1] - mu * v1[1]];
        if n(v2) < n(v1) {
            std::mem::swap(&mut v1, &mut v2);
        }
    }
    (v1, v2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn brute_count(r: f64) -> usize {
        let m = r.ceil() as i64 + 1;
        let mut c = 0;
        for i in -m..=m {
            for j in -m..=m {
                for k in -m..=m {
                    if ((i * i + j * j + k * k) as f64) <= r * r {
                        c += 1;
                    }
                }
            }
        }
        c
    }

    #[test]
    fn unit_cubic_counts_match_brute_force() {
        let l = Lattice3::identity();
        assert_eq!(enumerate_within(&l, 1.0).unwrap().len(), 7);
        assert_eq!(enumerate_within(&l, 1.5).unwrap().len(), 19);
        for r in [1.0, 2.0, 3.0, 5.0] {
            assert_eq!(enumerate_within(&l, r).unwrap().len(), brute_count(r));
        }
        assert_eq!(enumerate_within(&l, 0.0).unwrap(), vec![Vec3::zeros()]);
    }

    #[test]
    fn skew_lattice_enumeration_is_complete() {
        let l = Lattice3::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(3.7, 0.4, 0.0),
            Vec3::new(-2.2, 5.1, 0.3),
        )
        .unwrap();
        let r = 2.3;
        let got = enumerate_within(&l, r).unwrap().len();
        let inv = l.basis().try_inverse().unwrap();
        let b: Vec<i64> = (0..3).map(|i| (r * inv.row(i).norm()).ceil() as i64 + 1).collect();
        let mut want = 0;
        for i in -b[0]..=b[0] {
            for j in -b[1]..=b[1] {
                for k in -b[2]..=b[2] {
                    if l.point([i, j, k]).norm() <= r {
                        want += 1;
                    }
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn dual_examples() {
        let d = dual(&Lattice3::identity());
        assert!((d.basis() - Mat3::identity()).norm() < 1e-15);
        let l = Lattice3::from_matrix(Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 1.0))).unwrap();
        let d = dual(&l);
        assert!((d.basis() - Mat3::from_diagonal(&Vec3::new(1.0, 0.5, 1.0))).norm() < 1e-15);
    }

    #[test]
    fn reduce_plane_examples() {
        let r = reduce_plane(PlaneLattice::new(1.0, 1.0, 2.0 * PI / 3.0));
        assert!((r.s1 - 1.0).abs() < 1e-12 && (r.s2 - 1.0).abs() < 1e-12);
        assert!((r.angle - PI / 3.0).abs() < 1e-12);
        assert_eq!(reduce_plane(PlaneLattice::new(1.0, 10.0, PI / 2.0)), PlaneLattice::new(1.0, 10.0, PI / 2.0));
        let r = reduce_plane(PlaneLattice::new(2.0, 1.0, PI / 2.0));
        assert!((r.s1 - 1.0).abs() < 1e-15 && (r.s2 - 2.0).abs() < 1e-15);
        assert!((r.angle - PI / 2.0).abs() < 1e-15);
    }

    // Shortest and second shortest independent vectors by brute force.
    fn plane_minima(p: PlaneLattice) -> (f64, f64) {
        let (a, b) = p.vectors();
        let mut pts = vec![];
        for m in -12i64..=12 {
            for n in -12i64..=12 {
                if (m, n) != (0, 0) {
                    let v = [m as f64 * a[0] + n as f64 * b[0], m as f64 * a[1] + n as f64 * b[1]];
                    pts.push((v[0].hypot(v[1]), v));
                }
            }
        }
        pts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let first = pts[0];
        let second = pts
            .iter()
            .find(|q| (first.1[0] * q.1[1] - first.1[1] * q.1[0]).abs() > 1e-9)
            .unwrap();
        (first.0, second.0)
    }

    #[test]
    fn reduce_plane_matches_brute_force_minima() {
        for &(s1, s2, ang) in &[(1.0, 3.3, 0.4), (2.0, 0.7, 2.8), (1.3, 1.9, 1.1), (0.6, 4.0, 2.2)] {
            let p = PlaneLattice::new(s1, s2, ang);
            let r = reduce_plane(p);
            let (m1, m2) = plane_minima(p);
            assert!((r.s1 - m1).abs() < 1e-12 && (r.s2 - m2).abs() < 1e-12);
            assert!((r.area() - p.area()).abs() < 1e-12 * p.area());
            assert_eq!(reduce_plane(r), r);
        }
    }

    #[test]
    fn reduce_gram_examples() {
        let g = reduce_gram(&Lattice3::identity());
        assert!((g - Mat3::identity()).norm() < 1e-15);
        let l = Lattice3::new(Vec3::x(), Vec3::x() + Vec3::y(), Vec3::z()).unwrap();
        assert!((reduce_gram(&l) - Mat3::identity()).norm() < 1e-14);
        let l2 = Lattice3::new(Vec3::x() * 3.0, (Vec3::x() + Vec3::y()) * 3.0, Vec3::z() * 3.0).unwrap();
        assert!((reduce_gram(&l2) - Mat3::identity() * 9.0).norm() < 1e-12);
    }

    #[test]
    fn reduce_gram_matches_unimodular_search() {
        let l = Lattice3::new(
            Vec3::new(1.0, 0.2, 0.0),
            Vec3::new(2.1, 1.1, 0.3),
            Vec3::new(0.5, 1.7, 1.4),
        )
        .unwrap();
        let g = reduce_gram(&l);
        // successive minima by enumeration
        let mut norms: Vec<f64> = enumerate_within(&l, 3.0)
            .unwrap()
            .iter()
            .map(|v| v.norm_squared())
            .filter(|&n| n > 1e-12)
            .collect();
        norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((g[(0, 0)] - norms[0]).abs() < 1e-12);
        assert!((g.determinant() - l.gram().determinant()).abs() < 1e-10);
    }
}
