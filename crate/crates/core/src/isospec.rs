//! Trace-level isospectrality verdicts, the (M4, M6) isospectral family and
//! a grid search for cross-class isospectral pairs.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{self, ManifoldClass, ManifoldDescriptor};
use crate::heat_trace::{self, TraceError};
use crate::lattice::{PlaneLattice, Vec3};
use crate::oracle::{self, OracleError};

/// Most descriptors a single class grid may hold.
pub const GRID_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsospecError {
    #[error("length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error("{class} grid has {count} points, cap is {cap}")]
    CapExceeded { class: ManifoldClass, count: usize, cap: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    IsospectralWithinTol,
    Distinguished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsospectralVerdict {
    pub verdict: Verdict,
    /// First grid time with |Δtrace| > tol.
    pub witness_t: Option<f64>,
    pub max_gap: f64,
}

impl IsospectralVerdict {
    pub fn is_isospectral(&self) -> bool {
        self.verdict == Verdict::IsospectralWithinTol
    }
}

fn check_args(times: &[f64], tol: f64) -> Result<(), IsospecError> {
    if times.is_empty() {
        return Err(IsospecError::BadArgument("empty time grid".into()));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(IsospecError::BadArgument(format!("tolerance {tol}")));
    }
    Ok(())
}

/// Compares the traces of `d1` and `d2` at every time of the grid, each
/// evaluated to within tol/4.
pub fn isospectral(
    d1: &ManifoldDescriptor,
    d2: &ManifoldDescriptor,
    times: &[f64],
    tol: f64,
) -> Result<IsospectralVerdict, IsospecError> {
    check_args(times, tol)?;
    let eps = tol / 4.0;
    let mut max_gap = 0.0f64;
    let mut witness_t = None;
    for &t in times {
        let gap = (heat_trace::trace(d1, t, eps)? - heat_trace::trace(d2, t, eps)?).abs();
        max_gap = max_gap.max(gap);
        if gap > tol && witness_t.is_none() {
            witness_t = Some(t);
        }
    }
    let verdict = if witness_t.is_some() { Verdict::Distinguished } else { Verdict::IsospectralWithinTol };
    Ok(IsospectralVerdict { verdict, witness_t, max_gap })
}

/// 50 log-spaced times over [0.01, 10]·L², with L the geometric mean of the
/// two length scales.
pub fn default_grid(d1: &ManifoldDescriptor, d2: &ManifoldDescriptor) -> Vec<f64> {
    let l2 = d1.length_scale() * d2.length_scale();
    heat_trace::log_grid(0.01 * l2, 10.0 * l2, 50)
}

/// M4 with ℓ1 = 2ℓ and M6 with edges {ℓ, 2ℓ, ℓ}.
pub fn m4_m6_pair(l: f64) -> Result<(ManifoldDescriptor, ManifoldDescriptor), IsospecError> {
    if !(l.is_finite() && l > 0.0) {
        return Err(IsospecError::BadLength(l));
    }
    Ok((ManifoldDescriptor::M4 { l1: 2.0 * l, l }, ManifoldDescriptor::M6 { lengths: [l, 2.0 * l, l] }))
}

/// Spectra agree entry for entry below 4π²·16/s², s the shortest
/// translation of either covering torus.
///
/// Some non-isospectral pairs have traces that differ by less than 1e-15 at
/// every t (e.g. N1 and N2 over the same small plane), so a trace grid alone
/// cannot reject them.
pub fn spectra_agree(d1: &ManifoldDescriptor, d2: &ManifoldDescriptor) -> Result<bool, IsospecError> {
    let s = geometry::translation_lattice(d1).shortest().min(geometry::translation_lattice(d2).shortest());
    let cutoff = 4.0 * PI * PI * 16.0 / (s * s);
    let (a, b) = (oracle::spectrum(d1, cutoff)?, oracle::spectrum(d2, cutoff)?);
    let below = |x: &oracle::Spectrum| -> Vec<(f64, u64)> {
        x.entries.iter().copied().filter(|e| e.0 < 0.999 * cutoff).collect()
    };
    let (a, b) = (below(&a), below(&b));
    Ok(a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| x.1 == y.1 && (x.0 - y.0).abs() <= 1e-9 * x.0.max(1.0)))
}

/// Parameter box for [`search_pairs`]. Lengths run over `lengths` in steps
/// of `step`, angles over `angles` in steps of `angle_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub lengths: (f64, f64),
    pub step: f64,
    pub angles: (f64, f64),
    pub angle_step: f64,
}

impl SearchBox {
    /// Lengths in [lo, hi] by `step`; angles π/4, π/2, 3π/4.
    pub fn lengths(lo: f64, hi: f64, step: f64) -> Self {
        Self { lengths: (lo, hi), step, angles: (PI / 4.0, 3.0 * PI / 4.0), angle_step: PI / 4.0 }
    }
}

fn axis(range: (f64, f64), step: f64, what: &str) -> Result<Vec<f64>, IsospecError> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && step.is_finite() && step > 0.0) {
        return Err(IsospecError::BadArgument(format!("{what} range [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if n > GRID_CAP {
        return Err(IsospecError::BadArgument(format!("{what} axis has {n} points")));
    }
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

fn product(axes: &[&[f64]], cap: usize, class: ManifoldClass) -> Result<Vec<Vec<f64>>, IsospecError> {
    let count = axes.iter().map(|a| a.len()).try_fold(1usize, |acc, n| acc.checked_mul(n)).unwrap_or(usize::MAX);
    if count > cap {
        return Err(IsospecError::CapExceeded { class, count, cap });
    }
    let mut out = vec![vec![]];
    for a in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                a.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

// basis from edge lengths a, b, c and angles α (b, c), β (a, c), γ (a, b)
fn cell(p: &[f64]) -> Option<[Vec3; 3]> {
    let (a, b, c) = (p[0], p[1], p[2]);
    let (ca, cb, cg) = (p[3].cos(), p[4].cos(), p[5].cos());
    let sg = p[5].sin();
    let y = (ca - cb * cg) / sg;
    let z2 = 1.0 - cb * cb - y * y;
    (z2 > 1e-3).then(|| {
        [Vec3::new(a, 0.0, 0.0), Vec3::new(b * cg, b * sg, 0.0), Vec3::new(c * cb, c * y, c * z2.sqrt())]
    })
}

/// Every valid descriptor of `class` on the box grid, one per isometry
/// class of canonical form, in lexicographic parameter order.
pub fn class_grid(class: ManifoldClass, b: &SearchBox) -> Result<Vec<ManifoldDescriptor>, IsospecError> {
    use ManifoldClass as C;
    let l = axis(b.lengths, b.step, "length")?;
    let a = axis(b.angles, b.angle_step, "angle")?;
    let raw: Vec<ManifoldDescriptor> = match class {
        C::M1 => product(&[&l, &l, &l, &a, &a, &a], GRID_CAP, class)?
            .iter()
            .filter_map(|p| cell(p).map(|basis| ManifoldDescriptor::M1 { basis }))
            .collect(),
        C::M2 => product(&[&l, &l, &l, &a], GRID_CAP, class)?
            .iter()
            .map(|p| ManifoldDescriptor::M2 { l1: p[0], plane: PlaneLattice::new(p[1], p[2], p[3]) })
            .collect(),
        C::M3 | C::M4 | C::M5 => product(&[&l, &l], GRID_CAP, class)?
            .iter()
            .map(|p| ManifoldDescriptor::from_params(class, p))
            .collect(),
        C::M6 | C::N3 | C::N4 => product(&[&l, &l, &l], GRID_CAP, class)?
            .iter()
            .map(|p| ManifoldDescriptor::from_params(class, p))
            .collect(),
        C::N1 | C::N2 => product(&[&l, &l, &a, &l], GRID_CAP, class)?
            .iter()
            .map(|p| ManifoldDescriptor::from_params(class, p))
            .collect(),
    };
    let mut seen = HashSet::new();
    Ok(raw
        .into_iter()
        .filter(|d| geometry::validate(d).is_ok())
        .filter(|d| {
            let key: Vec<String> =
                geometry::canonical_form(d).params().iter().map(|x| format!("{:.9e}", x + 0.0)).collect();
            seen.insert(key)
        })
        .collect())
}

// Traces evaluated on demand and kept.
struct Lazy<'a> {
    items: &'a [ManifoldDescriptor],
    times: &'a [f64],
    eps: f64,
    cache: BTreeMap<(usize, usize), f64>,
}

impl Lazy<'_> {
    fn get(&mut self, i: usize, k: usize) -> Result<f64, TraceError> {
        if let Some(v) = self.cache.get(&(i, k)) {
            return Ok(*v);
        }
        let v = heat_trace::trace(&self.items[i], self.times[k], self.eps)?;
        self.cache.insert((i, k), v);
        Ok(v)
    }
}

// middle of the grid first: there the traces carry the most shape information
fn probe_order(n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&k| ((2 * k) as i64 - n as i64).abs());
    idx
}

/// Every pair (d1 of `classes.0`, d2 of `classes.1`) on the box grid whose
/// traces agree within `tol` on `times`. Pairs are rejected early on
/// volume, then on orientability (the 1/t term), then at the first
/// differing time; survivors must also pass [`spectra_agree`]. Results are
/// in lexicographic grid order.
pub fn search_pairs(
    classes: (ManifoldClass, ManifoldClass),
    b: &SearchBox,
    times: &[f64],
    tol: f64,
) -> Result<Vec<(ManifoldDescriptor, ManifoldDescriptor, IsospectralVerdict)>, IsospecError> {
    check_args(times, tol)?;
    if classes.0 == classes.1 {
        return Err(IsospecError::BadArgument("classes must differ".into()));
    }
    let g1 = class_grid(classes.0, b)?;
    let g2 = class_grid(classes.1, b)?;
    if classes.0.is_orientable() != classes.1.is_orientable() {
        return Ok(vec![]);
    }
    let eps = tol / 4.0;
    let mut c1 = Lazy { items: &g1, times, eps, cache: BTreeMap::new() };
    let mut c2 = Lazy { items: &g2, times, eps, cache: BTreeMap::new() };
    let order = probe_order(times.len());

    let v1: Vec<f64> = g1.iter().map(geometry::volume).collect();
    let mut by_vol: Vec<(f64, usize)> = g2.iter().map(geometry::volume).zip(0..).collect();
    by_vol.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut hits = vec![];
    for (i, &v) in v1.iter().enumerate() {
        let lo = by_vol.partition_point(|x| x.0 < v * (1.0 - 1e-9));
        let mut js: Vec<usize> =
            by_vol[lo..].iter().take_while(|x| x.0 <= v * (1.0 + 1e-9)).map(|x| x.1).collect();
        js.sort_unstable();
        for j in js {
            let mut same = true;
            for &k in &order {
                if (c1.get(i, k)? - c2.get(j, k)?).abs() > tol {
                    same = false;
                    break;
                }
            }
            if same && spectra_agree(&g1[i], &g2[j])? {
                let verdict = isospectral(&g1[i], &g2[j], times, tol)?;
                hits.push((g1[i].clone(), g2[j].clone(), verdict));
            }
        }
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_examples() {
        let (a, b) = m4_m6_pair(1.0).unwrap();
        assert_eq!(a, ManifoldDescriptor::M4 { l1: 2.0, l: 1.0 });
        assert_eq!(b, ManifoldDescriptor::M6 { lengths: [1.0, 2.0, 1.0] });
        assert!((geometry::volume(&a) - 0.5).abs() < 1e-15);
        assert!((geometry::volume(&b) - 0.5).abs() < 1e-15);
        let (a, b) = m4_m6_pair(0.5).unwrap();
        assert_eq!(a, ManifoldDescriptor::M4 { l1: 1.0, l: 0.5 });
        assert_eq!(b, ManifoldDescriptor::M6 { lengths: [0.5, 1.0, 0.5] });
        assert!(matches!(m4_m6_pair(0.0), Err(IsospecError::BadLength(_))));
        assert!(m4_m6_pair(f64::NAN).is_err());
    }

    #[test]
    fn verdict_examples() {
        let (a, b) = m4_m6_pair(1.0).unwrap();
        let times = heat_trace::log_grid(0.01, 10.0, 50);
        let v = isospectral(&a, &b, &times, 1e-9).unwrap();
        assert!(v.is_isospectral(), "{v:?}");
        let s = isospectral(&b, &b, &times, 1e-9).unwrap();
        assert!(s.max_gap <= 2.0 * 1e-9 / 4.0);
        let c = ManifoldDescriptor::M6 { lengths: [1.0, 2.0, 1.05] };
        let d = isospectral(&b, &c, &times, 1e-9).unwrap();
        assert_eq!(d.verdict, Verdict::Distinguished);
        let w = d.witness_t.unwrap();
        let gap = (heat_trace::trace(&b, w, 1e-12).unwrap() - heat_trace::trace(&c, w, 1e-12).unwrap()).abs();
        assert!(gap > 1e-9);
        assert!(d.max_gap >= gap * (1.0 - 1e-6));
    }

    #[test]
    fn bad_arguments() {
        let d = ManifoldDescriptor::cube(1.0);
        assert!(isospectral(&d, &d, &[], 1e-9).is_err());
        assert!(isospectral(&d, &d, &[1.0], 0.0).is_err());
        let b = SearchBox::lengths(0.5, 2.0, 0.25);
        assert!(search_pairs((ManifoldClass::M2, ManifoldClass::M2), &b, &[1.0], 1e-9).is_err());
        let fine = SearchBox::lengths(0.5, 2.0, 0.001);
        assert!(matches!(
            search_pairs((ManifoldClass::M1, ManifoldClass::M2), &fine, &[1.0], 1e-9),
            Err(IsospecError::CapExceeded { .. })
        ));
    }

    #[test]
    fn grids_are_deduplicated() {
        let b = SearchBox::lengths(1.0, 2.0, 0.5);
        assert_eq!(class_grid(ManifoldClass::M4, &b).unwrap().len(), 9);
        // {a, b, c} multisets of three values
        assert_eq!(class_grid(ManifoldClass::M6, &b).unwrap().len(), 10);
    }

    #[test]
    fn small_search_finds_the_family() {
        let b = SearchBox::lengths(0.5, 1.0, 0.5);
        let times = heat_trace::log_grid(0.01 * 0.25, 10.0, 30);
        let hits = search_pairs((ManifoldClass::M4, ManifoldClass::M6), &b, &times, 1e-9).unwrap();
        assert_eq!(hits.len(), 1, "{hits:?}");
        assert_eq!(hits[0].0, ManifoldDescriptor::M4 { l1: 1.0, l: 0.5 });
        let none = search_pairs((ManifoldClass::M1, ManifoldClass::N1), &b, &times, 1e-9).unwrap();
        assert!(none.is_empty());
        assert!(search_pairs((ManifoldClass::N1, ManifoldClass::N2), &b, &times, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn trace_blind_pair_is_caught_by_spectra() {
        let p = PlaneLattice::new(0.5, 0.5, PI / 4.0);
        let a = ManifoldDescriptor::N1 { plane: p, l3: 2.0 };
        let b = ManifoldDescriptor::N2 { plane: p, h: 2.0 };
        let times = heat_trace::log_grid(0.001, 40.0, 60);
        assert!(isospectral(&a, &b, &times, 1e-12).unwrap().is_isospectral());
        assert!(!spectra_agree(&a, &b).unwrap());
        let (m4, m6) = m4_m6_pair(0.5).unwrap();
        assert!(spectra_agree(&m4, &m6).unwrap());
    }
}
