//! The ten compact flat 3-manifolds: descriptors, validation, lattices,
//! holonomy, canonical forms and the covering hierarchy.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use thiserror::Error;

use crate::lattice::{self, Lattice3, Mat3, PlaneLattice, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ManifoldClass {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    N1,
    N2,
    N3,
    N4,
}

impl ManifoldClass {
    pub const ALL: [ManifoldClass; 10] = [
        Self::M1,
        Self::M2,
        Self::M3,
        Self::M4,
        Self::M5,
        Self::M6,
        Self::N1,
        Self::N2,
        Self::N3,
        Self::N4,
    ];

    pub fn is_orientable(self) -> bool {
        matches!(self, Self::M1 | Self::M2 | Self::M3 | Self::M4 | Self::M5 | Self::M6)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::M1 => "M1",
            Self::M2 => "M2",
            Self::M3 => "M3",
            Self::M4 => "M4",
            Self::M5 => "M5",
            Self::M6 => "M6",
            Self::N1 => "N1",
            Self::N2 => "N2",
            Self::N3 => "N3",
            Self::N4 => "N4",
        }
    }

    /// Order of the holonomy group.
    pub fn holonomy_order(self) -> usize {
        match self {
            Self::M1 => 1,
            Self::M2 | Self::N1 | Self::N2 => 2,
            Self::M3 => 3,
            Self::M4 | Self::M6 | Self::N3 | Self::N4 => 4,
            Self::M5 => 6,
        }
    }
}

impl fmt::Display for ManifoldClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown manifold class {0:?}")]
pub struct UnknownClass(pub String);

impl FromStr for ManifoldClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

/// A flat manifold: class tag plus the free metric parameters of that class.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldDescriptor {
    M1 { basis: [Vec3; 3] },
    M2 { l1: f64, plane: PlaneLattice },
    M3 { l1: f64, l: f64 },
    M4 { l1: f64, l: f64 },
    M5 { l1: f64, l: f64 },
    /// Unordered; stored in the given order.
    M6 { lengths: [f64; 3] },
    N1 { plane: PlaneLattice, l3: f64 },
    N2 { plane: PlaneLattice, h: f64 },
    N3 { lengths: [f64; 3] },
    N4 { lengths: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    fn new(field: &str, message: &str) -> Self {
        Self { field: field.to_string(), message: message.to_string() }
    }
}

/// An isometry x ↦ rotation·x + translation.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidMotion {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    pub fn determinant(&self) -> f64 {
        self.rotation.determinant()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoveringEdge {
    pub source: ManifoldClass,
    pub target: ManifoldClass,
    pub folds: u32,
}

const COVERINGS: [(ManifoldClass, ManifoldClass, u32); 9] = {
    use ManifoldClass::*;
    [
        (M1, N1, 2),
        (M1, M3, 3),
        (M1, N2, 2),
        (M1, M4, 4),
        (M1, M2, 2),
        (M1, M5, 6),
        (M2, N3, 2),
        (M2, N4, 2),
        (M2, M6, 2),
    ]
};

/// Edges of the covering hierarchy incident to `c`.
pub fn covering_info(c: ManifoldClass) -> Vec<CoveringEdge> {
    COVERINGS
        .iter()
        .filter(|(s, t, _)| *s == c || *t == c)
        .map(|&(source, target, folds)| CoveringEdge { source, target, folds })
        .collect()
}

pub fn covering_edges() -> Vec<CoveringEdge> {
    COVERINGS
        .iter()
        .map(|&(source, target, folds)| CoveringEdge { source, target, folds })
        .collect()
}

impl ManifoldDescriptor {
    pub fn class(&self) -> ManifoldClass {
        use ManifoldClass as C;
        match self {
            Self::M1 { .. } => C::M1,
            Self::M2 { .. } => C::M2,
            Self::M3 { .. } => C::M3,
            Self::M4 { .. } => C::M4,
            Self::M5 { .. } => C::M5,
            Self::M6 { .. } => C::M6,
            Self::N1 { .. } => C::N1,
            Self::N2 { .. } => C::N2,
            Self::N3 { .. } => C::N3,
            Self::N4 { .. } => C::N4,
        }
    }

    pub fn cube(a: f64) -> Self {
        Self::M1 { basis: [Vec3::x() * a, Vec3::y() * a, Vec3::z() * a] }
    }

    /// Flat parameter vector. Layout per class:
    /// M1 basis (9), M2 [ℓ1, s1, s2, φ], M3–M5 [ℓ1, ℓ], M6/N3/N4 [ℓ1, ℓ2, ℓ3],
    /// N1 [ℓ1, ℓ2, φ, ℓ3], N2 [ℓ1, ℓ2, φ, h].
    pub fn params(&self) -> Vec<f64> {
        match self {
            Self::M1 { basis } => basis.iter().flat_map(|v| v.iter().copied()).collect(),
            Self::M2 { l1, plane } => vec![*l1, plane.s1, plane.s2, plane.angle],
            Self::M3 { l1, l } | Self::M4 { l1, l } | Self::M5 { l1, l } => vec![*l1, *l],
            Self::M6 { lengths } | Self::N3 { lengths } | Self::N4 { lengths } => lengths.to_vec(),
            Self::N1 { plane, l3 } => vec![plane.s1, plane.s2, plane.angle, *l3],
            Self::N2 { plane, h } => vec![plane.s1, plane.s2, plane.angle, *h],
        }
    }

    /// Inverse of [`params`](Self::params). Panics on a wrong length.
    pub fn from_params(class: ManifoldClass, p: &[f64]) -> Self {
        use ManifoldClass as C;
        match class {
            C::M1 => Self::M1 {
                basis: [
                    Vec3::new(p[0], p[1], p[2]),
                    Vec3::new(p[3], p[4], p[5]),
                    Vec3::new(p[6], p[7], p[8]),
                ],
            },
            C::M2 => Self::M2 { l1: p[0], plane: PlaneLattice::new(p[1], p[2], p[3]) },
            C::M3 => Self::M3 { l1: p[0], l: p[1] },
            C::M4 => Self::M4 { l1: p[0], l: p[1] },
            C::M5 => Self::M5 { l1: p[0], l: p[1] },
            C::M6 => Self::M6 { lengths: [p[0], p[1], p[2]] },
            C::N1 => Self::N1 { plane: PlaneLattice::new(p[0], p[1], p[2]), l3: p[3] },
            C::N2 => Self::N2 { plane: PlaneLattice::new(p[0], p[1], p[2]), h: p[3] },
            C::N3 => Self::N3 { lengths: [p[0], p[1], p[2]] },
            C::N4 => Self::N4 { lengths: [p[0], p[1], p[2]] },
        }
    }

    /// Which entries of [`params`](Self::params) are angles.
    pub fn angle_mask(class: ManifoldClass) -> Vec<bool> {
        use ManifoldClass as C;
        match class {
            C::M1 => vec![false; 9],
            C::M2 => vec![false, false, false, true],
            C::M3 | C::M4 | C::M5 => vec![false, false],
            C::M6 | C::N3 | C::N4 => vec![false; 3],
            C::N1 | C::N2 => vec![false, false, true, false],
        }
    }

    /// All lengths multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mask = Self::angle_mask(self.class());
        let p: Vec<f64> = self
            .params()
            .iter()
            .zip(mask)
            .map(|(&x, is_angle)| if is_angle { x } else { x * c })
            .collect();
        Self::from_params(self.class(), &p)
    }

    /// Geometric mean of the characteristic lengths.
    pub fn length_scale(&self) -> f64 {
        let prod = match self {
            Self::M1 { basis } => basis.iter().map(|v| v.norm()).product(),
            Self::M2 { l1, plane } => l1 * plane.s1 * plane.s2,
            Self::M3 { l1, l } | Self::M4 { l1, l } | Self::M5 { l1, l } => l1 * l * l,
            Self::M6 { lengths } | Self::N3 { lengths } | Self::N4 { lengths } => {
                lengths.iter().product()
            }
            Self::N1 { plane, l3 } => plane.s1 * plane.s2 * l3,
            Self::N2 { plane, h } => plane.s1 * plane.s2 * h,
        };
        prod.cbrt()
    }
}

/// Checks every class constraint, reporting one error per violation.
pub fn validate(d: &ManifoldDescriptor) -> Result<ManifoldDescriptor, Vec<ValidationError>> {
    let mut errs = Vec::new();
    let mut len = |name: &str, x: f64| {
        if !x.is_finite() {
            errs.push(ValidationError::new(name, "length must be finite"));
        } else if x <= 0.0 {
            errs.push(ValidationError::new(name, "length must be positive"));
        }
    };
    let mut angles = Vec::new();
    match d {
        ManifoldDescriptor::M1 { .. } => {}
        ManifoldDescriptor::M2 { l1, plane } => {
            len("l1", *l1);
            len("l2", plane.s1);
            len("l3", plane.s2);
            angles.push(plane.angle);
        }
        ManifoldDescriptor::M3 { l1, l }
        | ManifoldDescriptor::M4 { l1, l }
        | ManifoldDescriptor::M5 { l1, l } => {
            len("l1", *l1);
            len("l", *l);
        }
        ManifoldDescriptor::M6 { lengths }
        | ManifoldDescriptor::N3 { lengths }
        | ManifoldDescriptor::N4 { lengths } => {
            for (i, x) in lengths.iter().enumerate() {
                len(&format!("l{}", i + 1), *x);
            }
        }
        ManifoldDescriptor::N1 { plane, l3 } => {
            len("l1", plane.s1);
            len("l2", plane.s2);
            len("l3", *l3);
            angles.push(plane.angle);
        }
        ManifoldDescriptor::N2 { plane, h } => {
            len("l1", plane.s1);
            len("l2", plane.s2);
            len("height", *h);
            angles.push(plane.angle);
        }
    }
    for a in angles {
        if !(a.is_finite() && a > 0.0 && a < PI) {
            errs.push(ValidationError::new("angle_rad", "angle out of open interval (0, π)"));
        }
    }
    if let ManifoldDescriptor::M1 { basis } = d {
        if basis.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            errs.push(ValidationError::new("basis", "entries must be finite"));
        } else if Lattice3::new(basis[0], basis[1], basis[2]).is_err() {
            errs.push(ValidationError::new("basis", "degenerate basis"));
        }
    } else if errs.is_empty() {
        let (a1, a2, a3) = lattice_vectors(d);
        if Lattice3::new(a1, a2, a3).is_err() {
            errs.push(ValidationError::new("lengths", "degenerate lattice"));
        }
    }
    if errs.is_empty() {
        Ok(d.clone())
    } else {
        Err(errs)
    }
}

/// Volume of the fundamental set.
pub fn volume(d: &ManifoldDescriptor) -> f64 {
    let h3 = 3f64.sqrt() / 2.0;
    match d {
        ManifoldDescriptor::M1 { basis } => Mat3::from_columns(basis).determinant().abs(),
        ManifoldDescriptor::M2 { l1, plane } => l1 / 2.0 * plane.area(),
        ManifoldDescriptor::M3 { l1, l } => l1 / 3.0 * h3 * l * l,
        ManifoldDescriptor::M4 { l1, l } => l1 * l * l / 4.0,
        ManifoldDescriptor::M5 { l1, l } => l1 / 6.0 * h3 * l * l,
        ManifoldDescriptor::M6 { lengths }
        | ManifoldDescriptor::N3 { lengths }
        | ManifoldDescriptor::N4 { lengths } => lengths.iter().product::<f64>() / 4.0,
        ManifoldDescriptor::N1 { plane, l3 } => plane.area() / 2.0 * l3,
        ManifoldDescriptor::N2 { plane, h } => plane.area() / 2.0 * h,
    }
}

fn hex_vectors(l: f64) -> (Vec3, Vec3) {
    (Vec3::new(0.0, l, 0.0), Vec3::new(0.0, -0.5 * l, 3f64.sqrt() / 2.0 * l))
}

/// Translation lattice of the covering torus, in the fixed frame (ℓ1 along e1).
pub fn translation_lattice(d: &ManifoldDescriptor) -> Lattice3 {
    let (a1, a2, a3) = lattice_vectors(d);
    Lattice3::new(a1, a2, a3).expect("valid descriptor has a nondegenerate lattice")
}

fn lattice_vectors(d: &ManifoldDescriptor) -> (Vec3, Vec3, Vec3) {
    let diag = |a: f64, b: f64, c: f64| {
        (Vec3::new(a, 0.0, 0.0), Vec3::new(0.0, b, 0.0), Vec3::new(0.0, 0.0, c))
    };
    let (a1, a2, a3) = match d {
        ManifoldDescriptor::M1 { basis } => (basis[0], basis[1], basis[2]),
        ManifoldDescriptor::M2 { l1, plane } => {
            let (p, q) = plane.vectors();
            (Vec3::new(*l1, 0.0, 0.0), Vec3::new(0.0, p[0], p[1]), Vec3::new(0.0, q[0], q[1]))
        }
        ManifoldDescriptor::M3 { l1, l } | ManifoldDescriptor::M5 { l1, l } => {
            let (p, q) = hex_vectors(*l);
            (Vec3::new(*l1, 0.0, 0.0), p, q)
        }
        ManifoldDescriptor::M4 { l1, l } => diag(*l1, *l, *l),
        ManifoldDescriptor::M6 { lengths }
        | ManifoldDescriptor::N3 { lengths }
        | ManifoldDescriptor::N4 { lengths } => diag(lengths[0], lengths[1], lengths[2]),
        ManifoldDescriptor::N1 { plane, l3 } => {
            let (p, q) = plane.vectors();
            (Vec3::new(p[0], p[1], 0.0), Vec3::new(q[0], q[1], 0.0), Vec3::new(0.0, 0.0, *l3))
        }
        ManifoldDescriptor::N2 { plane, h } => {
            let (p, q) = plane.vectors();
            (
                Vec3::new(p[0], p[1], 0.0),
                Vec3::new(q[0], q[1], 0.0),
                Vec3::new(0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), *h),
            )
        }
    };
    (a1, a2, a3)
}

fn rot_x(theta: f64) -> Mat3 {
    let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (s, c) = theta.sin_cos();
    let (s, c) = (clean(s), clean(c));
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn diag(a: f64, b: f64, c: f64) -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(a, b, c))
}

/// Coset representatives of Γ/Λ, identity first.
pub fn holonomy_elements(d: &ManifoldDescriptor) -> Vec<RigidMotion> {
    let e1 = Vec3::x();
    let screw = |order: usize, l1: f64| -> Vec<RigidMotion> {
        (0..order)
            .map(|k| {
                RigidMotion::new(
                    rot_x(2.0 * PI * k as f64 / order as f64),
                    e1 * (l1 * k as f64 / order as f64),
                )
            })
            .collect()
    };
    let half_x = diag(1.0, -1.0, -1.0);
    let half_y = diag(-1.0, 1.0, -1.0);
    let half_z = diag(-1.0, -1.0, 1.0);
    let refl_z = diag(1.0, 1.0, -1.0);
    let refl_y = diag(1.0, -1.0, 1.0);
    match d {
        ManifoldDescriptor::M1 { .. } => vec![RigidMotion::identity()],
        ManifoldDescriptor::M2 { l1, .. } => screw(2, *l1),
        ManifoldDescriptor::M3 { l1, .. } => screw(3, *l1),
        ManifoldDescriptor::M4 { l1, .. } => screw(4, *l1),
        ManifoldDescriptor::M5 { l1, .. } => screw(6, *l1),
        ManifoldDescriptor::M6 { lengths: [a, b, c] } => vec![
            RigidMotion::identity(),
            RigidMotion::new(half_x, Vec3::new(a / 2.0, 0.0, 0.0)),
            RigidMotion::new(half_y, Vec3::new(0.0, b / 2.0, c / 2.0)),
            RigidMotion::new(half_z, Vec3::new(a / 2.0, b / 2.0, c / 2.0)),
        ],
        ManifoldDescriptor::N1 { plane, .. } | ManifoldDescriptor::N2 { plane, .. } => vec![
            RigidMotion::identity(),
            RigidMotion::new(refl_z, Vec3::new(plane.s1 / 2.0, 0.0, 0.0)),
        ],
        ManifoldDescriptor::N3 { lengths: [a, b, _] } => vec![
            RigidMotion::identity(),
            RigidMotion::new(half_x, Vec3::new(a / 2.0, 0.0, 0.0)),
            RigidMotion::new(refl_z, Vec3::new(0.0, b / 2.0, 0.0)),
            RigidMotion::new(refl_y, Vec3::new(a / 2.0, b / 2.0, 0.0)),
        ],
        ManifoldDescriptor::N4 { lengths: [a, b, c] } => vec![
            RigidMotion::identity(),
            RigidMotion::new(half_x, Vec3::new(a / 2.0, 0.0, 0.0)),
            RigidMotion::new(refl_z, Vec3::new(0.0, b / 2.0, c / 2.0)),
            RigidMotion::new(refl_y, Vec3::new(a / 2.0, b / 2.0, c / 2.0)),
        ],
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn params_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y, tol))
}

/// Canonical representative of the isometry class. Idempotent.
pub fn canonical_form(d: &ManifoldDescriptor) -> ManifoldDescriptor {
    let c = canonical_raw(d);
    if params_close(&c.params(), &d.params(), 1e-12) {
        d.clone()
    } else {
        c
    }
}

fn canonical_raw(d: &ManifoldDescriptor) -> ManifoldDescriptor {
    match d {
        ManifoldDescriptor::M1 { basis } => {
            let l = Lattice3::new(basis[0], basis[1], basis[2]).expect("valid basis");
            let g = lattice::reduce_gram(&l);
            ManifoldDescriptor::M1 { basis: cholesky_basis(&g) }
        }
        ManifoldDescriptor::M2 { l1, plane } => {
            ManifoldDescriptor::M2 { l1: *l1, plane: lattice::reduce_plane(*plane) }
        }
        ManifoldDescriptor::M6 { lengths } => {
            let mut s = *lengths;
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ManifoldDescriptor::M6 { lengths: s }
        }
        ManifoldDescriptor::N1 { plane, l3 } => {
            ManifoldDescriptor::N1 { plane: glide_reduce(*plane), l3: *l3 }
        }
        ManifoldDescriptor::N2 { plane, h } => {
            ManifoldDescriptor::N2 { plane: paired_glide_reduce(*plane), h: *h }
        }
        other => other.clone(),
    }
}

fn cholesky_basis(g: &Mat3) -> [Vec3; 3] {
    let b11 = g[(0, 0)].sqrt();
    let b21 = g[(0, 1)] / b11;
    let b22 = (g[(1, 1)] - b21 * b21).max(0.0).sqrt();
    let b31 = g[(0, 2)] / b11;
    let b32 = (g[(1, 2)] - b21 * b31) / b22;
    let b33 = (g[(2, 2)] - b31 * b31 - b32 * b32).max(0.0).sqrt();
    [Vec3::new(b11, 0.0, 0.0), Vec3::new(b21, b22, 0.0), Vec3::new(b31, b32, b33)]
}

type V2 = [f64; 2];

fn comb(r1: V2, r2: V2, i: i64, j: i64) -> V2 {
    [i as f64 * r1[0] + j as f64 * r2[0], i as f64 * r1[1] + j as f64 * r2[1]]
}

fn norm2(v: V2) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

fn dot2(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

// Integer coordinates of v in the basis (r1, r2).
fn coords(r1: V2, r2: V2, v: V2) -> (i64, i64) {
    let det = r1[0] * r2[1] - r1[1] * r2[0];
    let i = (v[0] * r2[1] - v[1] * r2[0]) / det;
    let j = (r1[0] * v[1] - r1[1] * v[0]) / det;
    (i.round() as i64, j.round() as i64)
}

fn parity(c: (i64, i64)) -> (i64, i64) {
    (c.0.rem_euclid(2), c.1.rem_euclid(2))
}

// Shortest vector of the reduced lattice (r1, r2) whose coordinates have one
// of the given parities.
fn shortest_in_classes(r1: V2, r2: V2, classes: &[(i64, i64)]) -> (i64, i64) {
    let mut best = None;
    for i in -5i64..=5 {
        for j in -5i64..=5 {
            if !classes.contains(&parity((i, j))) {
                continue;
            }
            let n = norm2(comb(r1, r2, i, j));
            // prefer lexicographically larger coordinates on ties for determinism
            if best.is_none_or(|(bn, _): (f64, (i64, i64))| n < bn * (1.0 - 1e-12)) {
                best = Some((n, (i, j)));
            }
        }
    }
    best.expect("classes nonempty").1
}

// Some w with (v, w) a basis, given primitive coordinates v = (i, j).
fn complete_basis(i: i64, j: i64) -> (i64, i64) {
    for x in -12i64..=12 {
        for y in -12i64..=12 {
            if i * y - j * x == 1 {
                return (x, y);
            }
        }
    }
    unreachable!("coordinates ({i}, {j}) are not primitive")
}

fn finish(b1: V2, mut w: V2, step: f64) -> PlaneLattice {
    let k = (dot2(w, b1) / (step * norm2(b1))).round() * step;
    w = [w[0] - k * b1[0], w[1] - k * b1[1]];
    if dot2(w, b1) < 0.0 {
        w = [-w[0], -w[1]];
    }
    PlaneLattice::from_vectors(b1, w)
}

/// Canonical plane lattice for a glide along the first basis vector: the
/// distinguished class a1 mod 2Λ is preserved.
pub(crate) fn glide_reduce(p: PlaneLattice) -> PlaneLattice {
    let (a1, a2) = p.vectors();
    let (r1, r2) = lattice::gauss_reduce_vectors(a1, a2);
    let cls = parity(coords(r1, r2, a1));
    let (i, j) = shortest_in_classes(r1, r2, &[cls]);
    let b1 = comb(r1, r2, i, j);
    let (x, y) = complete_basis(i, j);
    finish(b1, comb(r1, r2, x, y), 1.0)
}

/// Canonical plane lattice when both a1 and a2 carry glides (their classes
/// mod 2Λ may be exchanged, the class of a1 + a2 is fixed).
pub(crate) fn paired_glide_reduce(p: PlaneLattice) -> PlaneLattice {
    let (a1, a2) = p.vectors();
    let (r1, r2) = lattice::gauss_reduce_vectors(a1, a2);
    let c1 = parity(coords(r1, r2, a1));
    let c2 = parity(coords(r1, r2, a2));
    let (i, j) = shortest_in_classes(r1, r2, &[c1, c2]);
    let b1 = comb(r1, r2, i, j);
    let other = if parity((i, j)) == c1 { c2 } else { c1 };
    let (x, y) = complete_basis(i, j);
    let (x, y) = if parity((x, y)) == other { (x, y) } else { (x + i, y + j) };
    finish(b1, comb(r1, r2, x, y), 2.0)
}

/// Same class and canonical forms agree within relative tolerance `tol`.
/// For M1 the reduced Gram matrices are matched up to small unimodular
/// recombinations.
pub fn is_isometric(d1: &ManifoldDescriptor, d2: &ManifoldDescriptor, tol: f64) -> bool {
    if d1.class() != d2.class() {
        return false;
    }
    if let (ManifoldDescriptor::M1 { basis: b1 }, ManifoldDescriptor::M1 { basis: b2 }) = (d1, d2) {
        let l1 = Lattice3::new(b1[0], b1[1], b1[2]).expect("valid");
        let l2 = Lattice3::new(b2[0], b2[1], b2[2]).expect("valid");
        return grams_equivalent(&lattice::reduce_gram(&l1), &lattice::reduce_gram(&l2), tol);
    }
    let (c1, c2) = (canonical_raw(d1), canonical_raw(d2));
    let mask = ManifoldDescriptor::angle_mask(d1.class());
    c1.params().iter().zip(c2.params()).zip(mask).all(|((a, b), is_angle)| {
        if is_angle {
            (a - b).abs() <= tol * PI
        } else {
            close(*a, b, tol)
        }
    })
}

fn grams_equivalent(g1: &Mat3, g2: &Mat3, tol: f64) -> bool {
    let scale = g1.diagonal().max().max(g2.diagonal().max());
    let ok = |a: f64, b: f64| (a - b).abs() <= 2.0 * tol * scale;
    let vecs: Vec<Vec3> = {
        let mut v = Vec::with_capacity(125);
        for i in -2..=2 {
            for j in -2..=2 {
                for k in -2..=2 {
                    v.push(Vec3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        v
    };
    let q = |u: &Vec3, w: &Vec3| u.dot(&(g1 * w));
    let cands: Vec<Vec<&Vec3>> = (0..3)
        .map(|c| vecs.iter().filter(|u| ok(q(u, u), g2[(c, c)])).collect())
        .collect();
    for u0 in &cands[0] {
        for u1 in &cands[1] {
            if !ok(q(u0, u1), g2[(0, 1)]) {
                continue;
            }
            for u2 in &cands[2] {
                if ok(q(u0, u2), g2[(0, 2)]) && ok(q(u1, u2), g2[(1, 2)]) {
                    let m = Matrix3::from_columns(&[**u0, **u1, **u2]);
                    if (m.determinant().abs() - 1.0).abs() < 1e-9 {
                        return true;
                    }
                }
            }
        }
    }
    false
}
