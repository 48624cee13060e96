//! Recovering volume, orientability, eigenvalues and metric parameters from
//! sampled heat traces.
//!
//! Small-t work happens on y(t) = (4πt)^{3/2}·trace(t), where every
//! geometric term becomes C·t^p·e^{-λ²/4t} with p = 0 (lattice vectors),
//! p = 1/2 (reflection planes) or p = 1 (screw axes).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{self, ManifoldClass, ManifoldDescriptor};
use crate::heat_trace::{self, TraceError, TraceSamples};
use crate::lattice::{self, Lattice3, Mat3, PlaneLattice};

/// Fewer samples than this cannot support any of the fits below.
pub const MIN_SAMPLES: usize = 8;

/// Relative RMS residual at which a class fit is accepted. Noisy samples
/// raise the level to ten times their RMS relative error.
pub const ACCEPT_RESIDUAL: f64 = 1e-11;

const POWERS: [f64; 4] = [0.0, 0.5, 1.0, 1.5];
const MODEL_EPS: f64 = 1e-13;
// Candidates whose shortest translation falls below this fraction of the
// cube root of the covolume, or whose reduced basis spans more than
// MAX_ASPECT in length, are rejected.
const MIN_SHAPE: f64 = 0.05;
const MAX_ASPECT: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InverseError {
    #[error("insufficient samples: {0} (need at least {MIN_SAMPLES})")]
    InsufficientSamples(usize),
    #[error("samples must be finite and positive")]
    BadSamples,
    #[error("no (4πt)^(-3/2) growth at small t")]
    NoGrowth,
    #[error("volume estimate does not converge ({0:.9e} vs {1:.9e}); the grid does not reach small enough t")]
    VolumeNotConverged(f64, f64),
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("no class fits the samples (best {class}, relative residual {residual:.3e})")]
    Inconsistent { class: ManifoldClass, residual: f64 },
    #[error("hint {hint} does not fit the samples: {detail}")]
    HintMismatch { hint: ManifoldClass, detail: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// One exponential family C·t^p·e^{-λ²/4t} of the small-t expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Family {
    pub lambda: f64,
    pub power: f64,
    pub coeff: f64,
}

impl Family {
    /// Decay rate λ².
    pub fn rate(&self) -> f64 {
        self.lambda * self.lambda
    }

    fn eval(&self, t: f64) -> f64 {
        self.coeff * t.powf(self.power) * (-self.rate() / (4.0 * t)).exp()
    }
}

/// Working state of small-t peeling. `residual.values` holds y(t) minus the
/// volume and all identified families; `residual.err` holds the noise floor
/// per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PeelState {
    pub residual: TraceSamples,
    pub identified: Vec<Family>,
}

impl PeelState {
    pub fn new(s: &TraceSamples, vol: f64) -> Self {
        let mut values = Vec::with_capacity(s.len());
        let mut err = Vec::with_capacity(s.len());
        for i in 0..s.len() {
            let w = (4.0 * PI * s.times[i]).powf(1.5);
            let y = w * s.values[i];
            values.push(y - vol);
            err.push((1e-12 * vol).max(1e-13 * y.abs()).max(w * s.err[i]));
        }
        Self {
            residual: TraceSamples { times: s.times.clone(), values, err },
            identified: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Peel {
    Found { family: Family, next: PeelState },
    Exhausted,
}

// Least squares z ≈ a − b·x. Returns (a, b, rss).
fn line_fit(x: &[f64], z: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxz: f64 = x.iter().zip(z).map(|(v, w)| (v - mx) * (w - mz)).sum();
    let slope = sxz / sxx;
    let a = mz - slope * mx;
    let rss = x.iter().zip(z).map(|(v, w)| (w - a - slope * v).powi(2)).sum();
    (a, -slope, rss)
}

const PEEL_WINDOW: usize = 5;

/// Identifies the slowest-growing family over the smallest-t window where
/// the residual clears the noise floor, and subtracts it.
pub fn peel_exponent(state: &PeelState) -> Result<Peel, InverseError> {
    let r = &state.residual;
    let above = |i: usize| r.values[i] > 1e3 * r.err[i];
    let i0 = match (0..r.len()).find(|&i| above(i)) {
        Some(i) => i,
        None => return Ok(Peel::Exhausted),
    };
    let idx: Vec<usize> = (i0..r.len()).take_while(|&i| above(i)).take(PEEL_WINDOW).collect();
    if idx.len() < 4 {
        return Ok(Peel::Exhausted);
    }
    let x: Vec<f64> = idx.iter().map(|&i| 1.0 / r.times[i]).collect();
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for p in POWERS {
        let z: Vec<f64> = idx.iter().map(|&i| r.values[i].ln() - p * r.times[i].ln()).collect();
        let (a, b, rss) = line_fit(&x, &z);
        if best.is_none_or(|bst| rss < bst.3) {
            best = Some((p, a, b, rss));
        }
    }
    let (p, a, b, _) = best.expect("four candidate powers");
    if !(b > 0.0 && a.is_finite()) {
        return Err(InverseError::IllConditioned(format!(
            "non-decaying window at t in [{:.3e}, {:.3e}] (slope {b:.3e})",
            r.times[idx[0]],
            r.times[*idx.last().unwrap()]
        )));
    }
    let family = Family { lambda: (4.0 * b).sqrt(), power: p, coeff: a.exp() };
    let mut next = state.clone();
    for i in 0..r.len() {
        let t = r.times[i];
        let mut sub = family.eval(t);
        if p == 0.0 {
            for k in 2..=4 {
                sub += family.coeff * (-(k * k) as f64 * family.rate() / (4.0 * t)).exp();
            }
        }
        next.residual.values[i] -= sub;
    }
    next.identified.push(family);
    next.identified.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(Peel::Found { family, next })
}

/// Peels up to `max` families. Families whose rate repeats an earlier one
/// within 4% are treated as corrections to it and dropped from the result.
pub fn peel_all(s: &TraceSamples, vol: f64, max: usize) -> Vec<Family> {
    let mut state = PeelState::new(s, vol);
    let mut out: Vec<Family> = Vec::new();
    for _ in 0..3 * max {
        match peel_exponent(&state) {
            Ok(Peel::Found { family, next }) => {
                state = next;
                if !out.iter().any(|f| (f.lambda - family.lambda).abs() <= 0.04 * f.lambda) {
                    out.push(family);
                    if out.len() >= max {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    out
}

fn check_samples(s: &TraceSamples) -> Result<(), InverseError> {
    if s.len() < MIN_SAMPLES {
        return Err(InverseError::InsufficientSamples(s.len()));
    }
    if s.values.iter().any(|v| !v.is_finite()) || s.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(InverseError::BadSamples);
    }
    Ok(())
}

/// Limit of (4πt)^{3/2}·trace as t → 0+.
pub fn extract_volume(s: &TraceSamples) -> Result<f64, InverseError> {
    if s.len() < 4 {
        return Err(InverseError::InsufficientSamples(s.len()));
    }
    let y: Vec<f64> = (0..4).map(|i| (4.0 * PI * s.times[i]).powf(1.5) * s.values[i]).collect();
    if !y.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(InverseError::NoGrowth);
    }
    // linear extrapolation in t over the three smallest samples
    let x = &s.times[..3];
    let (a, _, _) = line_fit(x, &y[..3]);
    let (a2, _, _) = line_fit(&s.times[1..4], &y[1..4]);
    if (a - a2).abs() > 1e-6 * a.abs() || (y[0] - a).abs() > 1e-6 * a.abs() {
        return Err(InverseError::VolumeNotConverged(a, a2));
    }
    if a <= 0.0 {
        return Err(InverseError::NoGrowth);
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientability {
    Orientable,
    NonOrientable,
}

/// Orientation of the best-fitting class when reconstruction succeeds.
/// Otherwise non-orientable iff the peeled small-t expansion shows a
/// reflection-plane family (prefactor t^{1/2} after scaling by (4πt)^{3/2}).
/// Peeling alone misses plane families sitting close to an axis family of
/// similar rate, hence the fit first. No family above the noise floor reads
/// as a torus.
pub fn classify_orientability(s: &TraceSamples, vol: f64) -> Result<Orientability, InverseError> {
    check_samples(s)?;
    if let Ok(r) = reconstruct_detailed(s, None) {
        return Ok(r.orientability);
    }
    Ok(peeled_orientation(&peel_all(s, vol, 4)))
}

fn peeled_orientation(fams: &[Family]) -> Orientability {
    if fams.iter().any(|f| f.power == 0.5) {
        Orientability::NonOrientable
    } else {
        Orientability::Orientable
    }
}

/// Leading eigenvalues recovered from large-t samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    pub pairs: Vec<(f64, u64)>,
    /// Set when fewer than the requested number could be resolved.
    pub diagnostic: Option<String>,
}

/// The k smallest distinct eigenvalues (λ0 = 0 included) with multiplicities,
/// by peeling exponentials off the large-t end and refitting all rates
/// jointly after each step.
pub fn eigenvalues_from_trace(s: &TraceSamples, k: usize) -> Result<EigenEstimate, InverseError> {
    if s.len() < 4 {
        return Err(InverseError::InsufficientSamples(s.len()));
    }
    let n = s.len();
    let noise: Vec<f64> = (0..n).map(|i| s.err[i] + 1e-15 * s.values[i].abs()).collect();
    let mut pairs: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    let mut diagnostic = None;
    while pairs.len() < k {
        let resid: Vec<f64> = (0..n).map(|i| s.values[i] - model(&pairs, s.times[i])).collect();
        let idx: Vec<usize> = (0..n).rev().filter(|&i| resid[i] > 1e4 * noise[i]).take(6).collect();
        if idx.len() < 3 {
            diagnostic = Some(format!(
                "residual below noise after {} eigenvalues; extend the grid to smaller t",
                pairs.len()
            ));
            break;
        }
        let t: Vec<f64> = idx.iter().map(|&i| s.times[i]).collect();
        let z: Vec<f64> = idx.iter().map(|&i| resid[i].ln()).collect();
        let (a, lam, _) = line_fit(&t, &z);
        let from = *idx.last().unwrap();
        pairs.push((lam, a.exp()));
        refine(s, &noise, &mut pairs, true, from);
        let (lam, m_est) = *pairs.last().unwrap();
        let m = m_est.round();
        if m < 1.0 || (m_est - m).abs() > 0.2 || lam <= pairs[pairs.len() - 2].0 {
            pairs.pop();
            diagnostic = Some(format!(
                "eigenvalue gap below resolution near λ ≈ {lam:.6e} (multiplicity estimate {m_est:.3})"
            ));
            break;
        }
        pairs.last_mut().unwrap().1 = m;
        refine(s, &noise, &mut pairs, false, from);
    }
    Ok(EigenEstimate { pairs: pairs.into_iter().map(|(l, m)| (l, m as u64)).collect(), diagnostic })
}

fn model(pairs: &[(f64, f64)], t: f64) -> f64 {
    pairs.iter().map(|&(l, m)| m * (-l * t).exp()).sum()
}

// Gauss–Newton on the nonzero rates (and optionally the newest multiplicity)
// over samples from index `from` on, weighted by the noise floor.
fn refine(s: &TraceSamples, noise: &[f64], pairs: &mut [(f64, f64)], free_m: bool, from: usize) {
    let rows: Vec<usize> = (from..s.len()).collect();
    let nr = pairs.len() - 1;
    let cols = nr + free_m as usize;
    if nr == 0 || rows.len() < cols {
        return;
    }
    let start = pairs.to_vec();
    for _ in 0..30 {
        let mut j = DMatrix::zeros(rows.len(), cols);
        let mut r = DVector::zeros(rows.len());
        for (a, &i) in rows.iter().enumerate() {
            let t = s.times[i];
            r[a] = (s.values[i] - model(pairs, t)) / noise[i];
            for c in 0..nr {
                let (l, m) = pairs[c + 1];
                j[(a, c)] = -m * t * (-l * t).exp() / noise[i];
            }
            if free_m {
                j[(a, nr)] = (-pairs[nr].0 * t).exp() / noise[i];
            }
        }
        if !(j.iter().all(|v| v.is_finite()) && r.iter().all(|v| v.is_finite())) {
            pairs.copy_from_slice(&start);
            return;
        }
        let step = match j.svd(true, true).solve(&r, 1e-14) {
            Ok(v) => v,
            Err(_) => return,
        };
        let mut small = true;
        for c in 0..nr {
            pairs[c + 1].0 += step[c];
            small &= step[c].abs() <= 1e-13 * pairs[c + 1].0;
        }
        if free_m {
            pairs[nr].1 += step[nr];
            small &= step[nr].abs() <= 1e-13 * pairs[nr].1.abs();
        }
        if small {
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// parameter fitting

fn logit_angle(phi: f64) -> f64 {
    (phi / (PI - phi)).ln()
}

fn angle_of(x: f64) -> f64 {
    PI / (1.0 + (-x).exp())
}

/// Unconstrained coordinates for a class: logs of lengths, logits of
/// angles, and for the torus a Cholesky factor of the Gram matrix.
fn encode(d: &ManifoldDescriptor) -> Vec<f64> {
    if let ManifoldDescriptor::M1 { basis } = d {
        let b = Mat3::from_columns(basis);
        let g = b.transpose() * b;
        return vec![g[(0, 0)], g[(0, 1)], g[(1, 1)], g[(0, 2)], g[(1, 2)], g[(2, 2)]];
    }
    let mask = ManifoldDescriptor::angle_mask(d.class());
    d.params()
        .iter()
        .zip(mask)
        .map(|(&x, a)| if a { logit_angle(x) } else { x.ln() })
        .collect()
}

fn decode(class: ManifoldClass, x: &[f64]) -> ManifoldDescriptor {
    if class == ManifoldClass::M1 {
        return gram_descriptor(&Mat3::new(x[0], x[1], x[3], x[1], x[2], x[4], x[3], x[4], x[5]));
    }
    let mask = ManifoldDescriptor::angle_mask(class);
    let p: Vec<f64> = x
        .iter()
        .zip(mask)
        .map(|(&v, a)| if a { angle_of(v) } else { v.exp() })
        .collect();
    ManifoldDescriptor::from_params(class, &p)
}

// Lower Cholesky factor entries [l11, l21, l22, l31, l32, l33].
// A torus with Gram matrix `g`, basis in lower-triangular form. A matrix
// that is not positive definite gives a degenerate basis, which fails
// validation.
fn gram_descriptor(g: &Mat3) -> ManifoldDescriptor {
    let l = match g.cholesky() {
        Some(c) => c.l(),
        None => Mat3::zeros(),
    };
    ManifoldDescriptor::M1 { basis: [l.row(0).transpose(), l.row(1).transpose(), l.row(2).transpose()] }
}

struct Data<'a> {
    times: &'a [f64],
    values: &'a [f64],
}

fn residuals(class: ManifoldClass, x: &[f64], data: &Data) -> Option<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite() || v.abs() > 50.0) {
        return None;
    }
    let d = decode(class, x);
    geometry::validate(&d).ok()?;
    // the search stays among lattices that are not nearly collapsed, where
    // the trace is cheap to evaluate
    let lat = geometry::translation_lattice(&d);
    let (red, _) = lattice::reduce_basis(&lat);
    let norms: Vec<f64> = (0..3).map(|i| red.column(i).norm()).collect();
    let (short, long) = (norms.iter().copied().fold(f64::INFINITY, f64::min), norms.iter().copied().fold(0.0, f64::max));
    if short < MIN_SHAPE * lat.covolume().cbrt() || long > MAX_ASPECT * short {
        return None;
    }
    data.times
        .iter()
        .zip(data.values)
        .map(|(&t, &v)| heat_trace::trace(&d, t, MODEL_EPS).ok().map(|m| m / v - 1.0))
        .collect()
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
}

fn levenberg_marquardt(class: ManifoldClass, x0: &[f64], data: &Data, max_iter: usize) -> (Vec<f64>, f64) {
    lm_core(class, x0, data, max_iter, None, true)
}

// Forward-difference variant for the many short exploratory runs.
fn lm_fast(class: ManifoldClass, x0: &[f64], data: &Data, max_iter: usize) -> (Vec<f64>, f64) {
    lm_core(class, x0, data, max_iter, None, false)
}

fn lm_pinned(class: ManifoldClass, x0: &[f64], data: &Data, max_iter: usize, pin: usize) -> (Vec<f64>, f64) {
    lm_core(class, x0, data, max_iter, Some(pin), true)
}

// Central differences, or forward differences from `base` when given.
fn jacobian(class: ManifoldClass, x: &[f64], data: &Data, base: Option<&[f64]>) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(data.times.len(), x.len());
    for j in 0..x.len() {
        let mut xp = x.to_vec();
        match base {
            Some(r0) => {
                let h = 1e-7 * (1.0 + x[j].abs());
                xp[j] += h;
                let rp = residuals(class, &xp, data)?;
                for i in 0..rp.len() {
                    jac[(i, j)] = (rp[i] - r0[i]) / h;
                }
            }
            None => {
                let h = 1e-6 * (1.0 + x[j].abs());
                let mut xm = x.to_vec();
                xp[j] += h;
                xm[j] -= h;
                let rp = residuals(class, &xp, data)?;
                let rm = residuals(class, &xm, data)?;
                for i in 0..rp.len() {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
        }
    }
    Some(jac)
}

// Follows a narrow curved valley by stepping the coordinate that dominates
// its flattest direction and relaxing the rest with that coordinate pinned.
fn valley_walk(class: ManifoldClass, x0: &[f64], res0: f64, data: &Data) -> (Vec<f64>, f64) {
    let (mut x, mut res) = (x0.to_vec(), res0);
    let jac = match jacobian(class, &x, data, None) {
        Some(j) => j,
        None => return (x, res),
    };
    let svd = jac.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let k = svd.singular_values.imin();
    let j = (0..x.len()).max_by(|&a, &b| vt[(k, a)].abs().partial_cmp(&vt[(k, b)].abs()).unwrap()).unwrap();
    let mut d = 1e-3;
    let mut dir = 1.0;
    let mut failed = 0;
    for _ in 0..40 {
        if res <= FLOOR || d < 1e-7 {
            break;
        }
        let mut xp = x.clone();
        xp[j] += dir * d;
        let (xr, rr) = lm_pinned(class, &xp, data, 15, j);
        if rr < res {
            x = xr;
            res = rr;
            d *= 2.0;
            failed = 0;
        } else {
            dir = -dir;
            failed += 1;
            if failed == 2 {
                d /= 4.0;
                failed = 0;
            }
        }
    }
    let (xf, rf) = levenberg_marquardt(class, &x, data, 100);
    if rf < res {
        (xf, rf)
    } else {
        (x, res)
    }
}

// Levenberg–Marquardt on the relative residuals, with coordinate `pin` (if
// any) held fixed.
fn lm_core(
    class: ManifoldClass,
    x0: &[f64],
    data: &Data,
    max_iter: usize,
    pin: Option<usize>,
    central: bool,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut r = match residuals(class, &x, data) {
        Some(r) => r,
        None => return (x, f64::INFINITY),
    };
    let mut cost = r.iter().map(|v| v * v).sum::<f64>();
    let mut mu: f64 = 1e-3;
    let np = x.len();
    let mut history = vec![cost];
    'outer: for it in 0..max_iter {
        if cost < 1e-28 {
            break;
        }
        // stagnation far from any fit: under 5% progress in ten iterations
        if it >= 10 && cost > 0.95 * history[it - 10] && cost > POLISH_BELOW.powi(2) * r.len() as f64 {
            break;
        }
        let jac = match jacobian(class, &x, data, if central { None } else { Some(&r) }) {
            Some(j) => j,
            None => break,
        };
        let m = r.len();
        let scale: Vec<f64> = (0..np).map(|k| jac.column(k).norm().max(1e-12)).collect();
        let mut rhs = DVector::zeros(m + np);
        for i in 0..m {
            rhs[i] = -r[i];
        }
        loop {
            if mu > 1e12 {
                break 'outer;
            }
            // damped least squares solved by SVD of the stacked system, which
            // keeps accuracy along poorly determined directions
            let mut a = DMatrix::zeros(m + np, np);
            a.rows_mut(0, m).copy_from(&jac);
            for k in 0..np {
                a[(m + k, k)] = mu.sqrt() * scale[k];
            }
            if let Some(p) = pin {
                a.column_mut(p).fill(0.0);
                a[(m + p, p)] = 1.0;
            }
            let svd = a.svd(true, true);
            let mut step = match svd.solve(&rhs, 0.0) {
                Ok(v) => v,
                Err(_) => break 'outer,
            };
            // geodesic acceleration: second-order correction from the
            // directional second derivative of the residuals along the step
            let h = 0.1;
            let xh: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + h * b).collect();
            if let Some(rh) = residuals(class, &xh, data) {
                let jv = &jac * &step;
                let mut rhs2 = DVector::zeros(m + np);
                for i in 0..m {
                    rhs2[i] = -2.0 / h * ((rh[i] - r[i]) / h - jv[i]);
                }
                if let Ok(acc) = svd.solve(&rhs2, 0.0) {
                    if 2.0 * acc.norm() <= 0.75 * step.norm() {
                        step += 0.5 * acc;
                    } else {
                        mu *= 4.0;
                        continue;
                    }
                }
            }
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let accepted = match residuals(class, &xn, data) {
                Some(rn) => {
                    let cn = rn.iter().map(|v| v * v).sum::<f64>();
                    if cn < cost {
                        x = xn;
                        r = rn;
                        cost = cn;
                        true
                    } else {
                        false
                    }
                }
                None => false,
            };
            if accepted {
                mu = (mu / 3.0).max(1e-12);
                if step.iter().zip(&x).all(|(s, v)| s.abs() <= 1e-12 * (1.0 + v.abs())) {
                    break 'outer;
                }
                break;
            }
            mu *= 4.0;
        }
        history.push(cost);
    }
    let res = rms(&r);
    (x, res)
}

fn dedupe(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite() && *x > 0.0);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if out.last().is_none_or(|l| x > l * 1.02) {
            out.push(x);
        }
    }
    out
}

fn candidates(fams: &[Family], mults: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = fams.iter().flat_map(|f| mults.iter().map(move |m| f.lambda * m)).collect();
    v.extend_from_slice(extra);
    dedupe(v)
}

fn length_grid(vol: f64, ratio: f64) -> Vec<f64> {
    let scale = vol.cbrt();
    let n = (12f64.ln() / ratio.ln()).ceil() as i32;
    (-n..=n).map(|k| scale * ratio.powi(k) / 1.0).filter(|x| *x > 0.25 * scale && *x < 4.0 * scale).collect()
}

fn seeds(class: ManifoldClass, s: &TraceSamples, vol: f64, fams: &[Family], generic: bool) -> Vec<ManifoldDescriptor> {
    use ManifoldDescriptor as D;
    let extra = if generic { length_grid(vol, 1.2) } else { vec![] };
    let fams: Vec<Family> = fams.iter().take(8).copied().collect();
    let c12 = candidates(&fams, &[1.0, 2.0], &extra);
    let h3 = 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    match class {
        ManifoldClass::M1 => {
            out = first_shell(s, vol).map_or(vec![], |l1| gram_scan(vol, l1, dual_first_shell(s), generic));
            out.extend(torus_seeds(vol, &fams, &extra));
        }
        ManifoldClass::M2 => {
            let axes: Vec<Family> = fams.iter().filter(|f| f.power >= 1.0).copied().collect();
            let c2 = candidates(if axes.is_empty() || generic { &fams } else { &axes }, &[2.0], &extra);
            for &l1 in &c2 {
                for (i, &s1) in c12.iter().enumerate() {
                    for &s2 in &c12[i..] {
                        let sin = 2.0 * vol / (l1 * s1 * s2);
                        if sin > 0.05 && sin <= 1.0 {
                            out.push(D::M2 { l1, plane: PlaneLattice::new(s1, s2, sin.asin()) });
                        }
                    }
                }
            }
        }
        ManifoldClass::M3 | ManifoldClass::M4 | ManifoldClass::M5 => {
            let c = candidates(&fams, &[2.0, 3.0, 4.0, 6.0], &extra);
            for &l1 in &c {
                out.push(match class {
                    ManifoldClass::M3 => D::M3 { l1, l: (3.0 * vol / (h3 * l1)).sqrt() },
                    ManifoldClass::M4 => D::M4 { l1, l: (4.0 * vol / l1).sqrt() },
                    _ => D::M5 { l1, l: (6.0 * vol / (h3 * l1)).sqrt() },
                });
            }
        }
        ManifoldClass::M6 | ManifoldClass::N3 | ManifoldClass::N4 => {
            for (i, &a) in c12.iter().enumerate() {
                let start = if class == ManifoldClass::M6 { i } else { 0 };
                for &b in &c12[start..] {
                    let lengths = [a, b, 4.0 * vol / (a * b)];
                    out.push(match class {
                        ManifoldClass::M6 => D::M6 { lengths },
                        ManifoldClass::N3 => D::N3 { lengths },
                        _ => D::N4 { lengths },
                    });
                }
            }
        }
        ManifoldClass::N1 | ManifoldClass::N2 => {
            for &s1 in &c12 {
                for &s2 in &c12 {
                    for k in 3..=8 {
                        let plane = PlaneLattice::new(s1, s2, k as f64 * PI / 16.0);
                        let third = 2.0 * vol / plane.area();
                        out.push(if class == ManifoldClass::N1 {
                            D::N1 { plane, l3: third }
                        } else {
                            D::N2 { plane, h: third }
                        });
                    }
                }
            }
        }
    }
    out
}

// Shortest translation length of a torus, read off the smallest t at which
// the first pair of lattice vectors clears the noise.
fn first_shell(s: &TraceSamples, vol: f64) -> Option<f64> {
    (0..s.len()).find_map(|i| {
        let t = s.times[i];
        let w = (4.0 * PI * t).powf(1.5);
        let rel = w * s.values[i] / vol - 1.0;
        let noise = (1e-12f64).max(w * s.err[i] / vol).max(1e-13 * w * s.values[i] / vol);
        (rel > 1e3 * noise && rel < 0.1).then(|| (-4.0 * t * (rel / 2.0).ln()).sqrt())
    })
}

// Squared length of the shortest dual lattice vector of a torus, from the
// largest t at which its ± pair clears the noise in tr − 1.
fn dual_first_shell(s: &TraceSamples) -> Option<f64> {
    (0..s.len()).rev().find_map(|i| {
        let (t, v) = (s.times[i], s.values[i]);
        let rel = v - 1.0;
        let noise = s.err[i] + 1e-15 * v;
        (rel > 1e3 * noise && rel < 0.1).then(|| -(rel / 2.0).ln() / (4.0 * PI * PI * t))
    })
}

// Reduced Gram matrices on a grid: g11 near the first peeled length, g22
// on a geometric ladder, off-diagonals in steps of a tenth, and g33 set by
// the volume.
fn gram_scan(vol: f64, l1: f64, dual: Option<f64>, generic: bool) -> Vec<ManifoldDescriptor> {
    let target = vol * vol;
    let dual_tol = if generic { 0.05 } else { 0.01 };
    let (factors, ratio): (&[f64], f64) = if generic { (&[0.97, 0.99, 1.01, 1.03], 1.04) } else { (&[0.99, 1.01], 1.07) };
    let fracs: Vec<f64> = (0..=5).map(|k| k as f64 / 10.0).collect();
    let mut out = Vec::new();
    for &f in factors {
        let g11 = (l1 * f).powi(2);
        let mut g22 = g11;
        while g22 * g22 * g11 < 1.6 * target {
            for &a in &fracs {
                for &b in &fracs {
                    for c in -5..=5 {
                        let (g12, g13, g23) = (a * g11, b * g11, c as f64 / 10.0 * g22);
                        let minor = g11 * g22 - g12 * g12;
                        let g33 = (target + g11 * g23 * g23 - 2.0 * g12 * g13 * g23 + g22 * g13 * g13) / minor;
                        if g33 < g22 {
                            continue;
                        }
                        let g = Mat3::new(g11, g12, g13, g12, g22, g23, g13, g23, g33);
                        let Some(inv) = g.try_inverse() else { continue };
                        if let (Some(q), Some(c)) = (dual, inv.cholesky()) {
                            // the dual's shortest vector must match the large-t decay
                            let l = c.l();
                            let Ok(lat) = Lattice3::from_matrix(l.transpose()) else { continue };
                            let d2 = lat.shortest().powi(2);
                            if d2 < q * (1.0 - dual_tol) || d2 > q * (1.06 + dual_tol) {
                                continue;
                            }
                        }
                        if g.cholesky().is_none() {
                            continue;
                        }
                        out.push(gram_descriptor(&g));
                    }
                }
            }
            g22 *= ratio * ratio;
        }
    }
    out
}

// Reduced Gram matrices assembled from the peeled length spectrum: diagonal
// entries from squared lengths, off-diagonal entries from lengths of sums,
// kept when the determinant is near vol².
fn torus_seeds(vol: f64, fams: &[Family], extra: &[f64]) -> Vec<ManifoldDescriptor> {
    let mut lens: Vec<f64> = fams.iter().filter(|f| f.power == 0.0).map(|f| f.lambda).collect();
    if lens.len() < 3 {
        lens.extend(fams.iter().map(|f| f.lambda));
    }
    let mut lens = dedupe(lens);
    lens.truncate(6);
    lens.extend_from_slice(extra);
    let lens = dedupe(lens);
    let sq: Vec<f64> = lens.iter().map(|l| l * l).collect();
    let offs = |gi: f64, gj: f64, signed: bool| {
        let mut v = vec![0.0];
        for &l2 in &sq {
            let g = 0.5 * (l2 - gi - gj);
            if g.abs() <= 0.5 * gi.min(gj) * 1.05 && g.abs() > 1e-9 * gi {
                v.push(g.abs());
                if signed {
                    v.push(-g.abs());
                }
            }
        }
        v.push(0.5 * gi.min(gj));
        v
    };
    let mut out = Vec::new();
    let target = vol * vol;
    for i in 0..sq.len() {
        for j in i..sq.len() {
            for k in j..sq.len() {
                let (g11, g22, g33) = (sq[i], sq[j], sq[k]);
                if g11 * g22 * g33 < 0.5 * target {
                    continue;
                }
                for &g12 in &offs(g11, g22, false) {
                    for &g13 in &offs(g11, g33, false) {
                        for &g23 in &offs(g22, g33, true) {
                            let g = Mat3::new(g11, g12, g13, g12, g22, g23, g13, g23, g33);
                            let det = g.determinant();
                            if (det - target).abs() > 0.15 * target {
                                continue;
                            }
                            // rescale the third row/column to hit vol² exactly
                            let minor = g11 * g22 - g12 * g12;
                            let g33 = (target + g11 * g23 * g23 - 2.0 * g12 * g13 * g23 + g22 * g13 * g13) / minor;
                            let g = Mat3::new(g11, g12, g13, g12, g22, g23, g13, g23, g33);
                            if g.cholesky().is_none() {
                                continue;
                            }
                            out.push(gram_descriptor(&g));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Outcome of fitting one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFit {
    pub class: ManifoldClass,
    pub descriptor: ManifoldDescriptor,
    /// Relative RMS residual over all samples.
    pub residual: f64,
}

fn subset(s: &TraceSamples, target: usize) -> (Vec<f64>, Vec<f64>) {
    let step = (s.len() / target).max(1);
    let mut idx: Vec<usize> = (0..s.len()).step_by(step).collect();
    if *idx.last().unwrap() != s.len() - 1 {
        idx.push(s.len() - 1);
    }
    (idx.iter().map(|&i| s.times[i]).collect(), idx.iter().map(|&i| s.values[i]).collect())
}

fn fit_class(class: ManifoldClass, s: &TraceSamples, vol: f64, fams: &[Family], generic: bool) -> Option<ClassFit> {
    let (st, sv) = subset(s, 16);
    let sub = Data { times: &st, values: &sv };
    let full = Data { times: &s.times, values: &s.values };
    let mut xs: Vec<Vec<f64>> = seeds(class, s, vol, fams, generic).iter().map(encode).collect();
    if xs.len() > 400 {
        // coarse screen on a handful of samples
        let (ct, cv) = subset(s, 6);
        let coarse = Data { times: &ct, values: &cv };
        let mut pre: Vec<(f64, Vec<f64>)> =
            xs.into_iter().filter_map(|x| residuals(class, &x, &coarse).map(|r| (rms(&r), x))).collect();
        pre.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        xs = pre.into_iter().take(400).map(|(_, x)| x).collect();
    }
    let mut scored: Vec<(f64, Vec<f64>)> =
        xs.into_iter().filter_map(|x| residuals(class, &x, &sub).map(|r| (rms(&r), x))).collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let starts: Vec<Vec<f64>> = scored.into_iter().take(if generic { 24 } else { 8 }).map(|(_, x)| x).collect();
    let (mut x, mut res) = best_of(class, &starts, &sub, &full, if generic { 3 } else { 1 })?;
    if class == ManifoldClass::M1 && res > FLOOR {
        let starts = offset_starts(&decode(class, &x), s, 6);
        if let Some((xo, ro)) = best_of(class, &starts, &sub, &full, 2) {
            if ro < res {
                (x, res) = (xo, ro);
            }
        }
    }
    Some(ClassFit { class, descriptor: geometry::canonical_form(&decode(class, &x)), residual: res })
}

// The same torus with one reduced vector moved to every offset of a 12×12
// grid over the cell spanned by the other two. Such offsets are weakly
// determined, and the fit has a local minimum in several cells of offset
// space.
fn layer_offsets(d: &ManifoldDescriptor) -> Vec<ManifoldDescriptor> {
    let g0 = lattice::reduce_gram(&geometry::translation_lattice(d));
    let mut out = Vec::new();
    for (p, q) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b, c) = (g0[(p, p)], g0[(p, q)], g0[(q, q)]);
        out.extend(offsets_over(a, b, c, g0.determinant()));
    }
    // off-diagonals of a reduced Gram matrix with the diagonal kept
    let (a, c) = (g0[(0, 0)], g0[(1, 1)]);
    for i in 0..=10 {
        for j in 0..=10 {
            for k in -10..=10 {
                let (g12, g13, g23) = (i as f64 / 20.0 * a, j as f64 / 20.0 * a, k as f64 / 20.0 * c);
                let minor = a * c - g12 * g12;
                let g33 = (g0.determinant() + a * g23 * g23 - 2.0 * g12 * g13 * g23 + c * g13 * g13) / minor;
                out.push(gram_descriptor(&Mat3::new(a, g12, g13, g12, c, g23, g13, g23, g33)));
            }
        }
    }
    out
}

fn offsets_over(a: f64, b: f64, c: f64, det: f64) -> Vec<ManifoldDescriptor> {
    let h2 = det / (a * c - b * b);
    let mut out = Vec::new();
    for i in 0..12 {
        for j in 0..12 {
            let (c1, c2) = (i as f64 / 12.0 - 0.5, j as f64 / 12.0 - 0.5);
            let g13 = c1 * a + c2 * b;
            let g23 = c1 * b + c2 * c;
            let g33 = h2 + c1 * c1 * a + 2.0 * c1 * c2 * b + c2 * c2 * c;
            out.push(gram_descriptor(&Mat3::new(a, b, g13, b, c, g23, g13, g23, g33)));
        }
    }
    out
}

fn offset_starts(d: &ManifoldDescriptor, s: &TraceSamples, keep: usize) -> Vec<Vec<f64>> {
    let (st, sv) = subset(s, 16);
    let sub = Data { times: &st, values: &sv };
    let mut scored: Vec<(f64, Vec<f64>)> = layer_offsets(d)
        .iter()
        .map(encode)
        .filter_map(|x| residuals(ManifoldClass::M1, &x, &sub).map(|r| (rms(&r), x)))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    scored.into_iter().take(keep).map(|(_, x)| x).collect()
}

// Last resort for a torus: each off-diagonal Gram entry in turn is pinned
// at 21 values across its reduced range while the others relax, and the
// most promising pinned fits are released.
fn pin_scan(fit: &ClassFit, s: &TraceSamples) -> ClassFit {
    let full = Data { times: &s.times, values: &s.values };
    let x0 = encode(&gram_descriptor(&lattice::reduce_gram(&geometry::translation_lattice(&fit.descriptor))));
    let mut best = (x0.clone(), fit.residual);
    for j in [1, 3, 4] {
        let scale = if j == 4 { x0[2] } else { x0[0] };
        let mut pinned: Vec<(Vec<f64>, f64)> = (-10..=10)
            .map(|k| {
                let mut x = best.0.clone();
                x[j] = k as f64 / 20.0 * scale;
                lm_pinned(ManifoldClass::M1, &x, &full, 10, j)
            })
            .filter(|(_, r)| r.is_finite())
            .collect();
        pinned.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        for (x, _) in pinned.into_iter().take(4) {
            let (xf, rf) = levenberg_marquardt(ManifoldClass::M1, &x, &full, 60);
            if rf < best.1 {
                best = (xf, rf);
            }
            if best.1 <= FLOOR {
                break;
            }
        }
        if best.1 <= FLOOR {
            break;
        }
    }
    if best.1 < fit.residual {
        ClassFit { class: fit.class, descriptor: geometry::canonical_form(&decode(fit.class, &best.0)), residual: best.1 }
    } else {
        fit.clone()
    }
}

// Restarts from swapped lengths and small perturbations; escapes the saddles
// and near-isospectral neighbours that appear when two lengths nearly agree.
fn polish(fit: &ClassFit, s: &TraceSamples) -> ClassFit {
    let class = fit.class;
    let full = Data { times: &s.times, values: &s.values };
    let x = encode(&fit.descriptor);
    let mask = if class == ManifoldClass::M1 {
        vec![false, true, false, true, true, false]
    } else {
        ManifoldDescriptor::angle_mask(class)
    };
    let mut starts = vec![x.clone()];
    if class == ManifoldClass::M1 {
        starts.extend(offset_starts(&fit.descriptor, s, 8));
    }
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if !mask[i] && !mask[j] {
                let mut xp = x.clone();
                xp.swap(i, j);
                starts.push(xp);
            }
        }
    }
    for j in 0..x.len() {
        if mask[j] && class != ManifoldClass::M1 {
            let mut xp = x.clone();
            xp[j] = -xp[j];
            starts.push(xp);
        }
        for d in [-0.03, -0.003, 0.003, 0.03] {
            let mut xp = x.clone();
            xp[j] += d;
            starts.push(xp);
        }
    }
    let best = starts
        .iter()
        .map(|x| levenberg_marquardt(class, x, &full, 40))
        .filter(|(_, r)| r.is_finite())
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(x, _)| levenberg_marquardt(class, &x, &full, 300))
        .map(|(x, r)| if r > FLOOR { valley_walk(class, &x, r, &full) } else { (x, r) });
    match best {
        Some((xr, rr)) if rr < fit.residual => {
            ClassFit { class, descriptor: geometry::canonical_form(&decode(class, &xr)), residual: rr }
        }
        _ => fit.clone(),
    }
}

/// Residual reached by exact samples; anything above it is worth polishing.
const FLOOR: f64 = 1e-12;
// Fits worse than this sit in the wrong basin; polishing will not rescue them.
const POLISH_BELOW: f64 = 1e-7;

// Stage 1 seeds for every class, then polishing and generic seeds for the
// most promising ones until something fits.
fn accept_level(s: &TraceSamples) -> f64 {
    let rel: Vec<f64> = s.err.iter().zip(&s.values).map(|(e, v)| e / v.abs()).collect();
    (10.0 * rms(&rel)).max(ACCEPT_RESIDUAL)
}

fn search(classes: &[ManifoldClass], s: &TraceSamples, vol: f64, fams: &[Family]) -> Vec<ClassFit> {
    let accept = accept_level(s);
    let by_residual = |fits: &mut Vec<ClassFit>| fits.sort_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap());
    let polish_top = |fits: &mut Vec<ClassFit>| {
        if fits.first().is_none_or(|f| f.residual > FLOOR) {
            for f in fits.iter_mut().take(2).filter(|f| f.residual < POLISH_BELOW) {
                *f = polish(f, s);
            }
            by_residual(fits);
        }
    };
    let mut fits: Vec<ClassFit> = classes.iter().filter_map(|&c| fit_class(c, s, vol, fams, false)).collect();
    by_residual(&mut fits);
    polish_top(&mut fits);
    // generic seeds, most promising classes first
    let mut pending: Vec<ManifoldClass> = fits.iter().map(|f| f.class).collect();
    pending.extend(classes.iter().filter(|c| !fits.iter().any(|f| f.class == **c)));
    for batch in [&pending[..pending.len().min(4)], &pending[pending.len().min(4)..]] {
        if fits.first().is_some_and(|f| f.residual <= accept) || batch.is_empty() {
            break;
        }
        for &c in batch {
            if let Some(g) = fit_class(c, s, vol, fams, true) {
                match fits.iter_mut().find(|f| f.class == c) {
                    Some(f) if f.residual <= g.residual => {}
                    Some(f) => *f = g,
                    None => fits.push(g),
                }
            }
        }
        by_residual(&mut fits);
        polish_top(&mut fits);
    }
    if fits.first().is_some_and(|f| f.residual > accept) {
        if let Some(f) = fits.iter_mut().find(|f| f.class == ManifoldClass::M1 && f.residual < 1e-4) {
            *f = pin_scan(f, s);
        }
        by_residual(&mut fits);
    }
    fits
}

// Short LM runs on the subset from every start, then full runs from the
// three best.
fn best_of(class: ManifoldClass, starts: &[Vec<f64>], sub: &Data, full: &Data, keep: usize) -> Option<(Vec<f64>, f64)> {
    let mut runs: Vec<(f64, Vec<f64>)> = starts
        .iter()
        .map(|x| {
            let (xs, rs) = lm_fast(class, x, sub, 30);
            (rs, xs)
        })
        .filter(|(rs, _)| rs.is_finite())
        .collect();
    runs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    runs.into_iter()
        .take(keep)
        .map(|(_, x)| {
            let (x, r) = levenberg_marquardt(class, &x, full, 60);
            if r < POLISH_BELOW && r > FLOOR {
                levenberg_marquardt(class, &x, full, 200)
            } else {
                (x, r)
            }
        })
        .filter(|(_, r)| r.is_finite())
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
}

/// Full result of a blind or hinted reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub descriptor: ManifoldDescriptor,
    pub residual: f64,
    pub volume: f64,
    pub orientability: Orientability,
    pub families: Vec<Family>,
    /// Other classes that fit equally well (isospectral candidates).
    pub alternatives: Vec<ClassFit>,
}

/// Reconstructs a descriptor from trace samples; see
/// [`reconstruct_detailed`].
pub fn reconstruct(s: &TraceSamples, hint: Option<ManifoldClass>) -> Result<ManifoldDescriptor, InverseError> {
    reconstruct_detailed(s, hint).map(|r| r.descriptor)
}

/// Volume, orientability and peeled families give seeds for every class of
/// the detected orientation; each class is refined by Levenberg–Marquardt
/// against all samples and the best fit wins. When several classes fit to
/// within sample precision (isospectral pairs) the lowest class index is
/// returned and the others are listed as alternatives.
pub fn reconstruct_detailed(s: &TraceSamples, hint: Option<ManifoldClass>) -> Result<ReconstructionReport, InverseError> {
    check_samples(s)?;
    if s.values.iter().any(|v| *v <= 0.0) {
        return Err(InverseError::BadSamples);
    }
    let vol = extract_volume(s)?;
    let accept = accept_level(s);
    let fams = peel_all(s, vol, 6);
    let orient = peeled_orientation(&fams);
    let signature = || {
        fams.iter()
            .map(|f| format!("(λ={:.4}, p={}, C={:.4})", f.lambda, f.power, f.coeff))
            .collect::<Vec<_>>()
            .join(" ")
    };

    if let Some(h) = hint {
        let fit = search(&[h], s, vol, &fams).into_iter().next();
        return match fit {
            Some(f) if f.residual <= accept => Ok(ReconstructionReport {
                descriptor: f.descriptor,
                residual: f.residual,
                volume: vol,
                orientability: if h.is_orientable() { Orientability::Orientable } else { Orientability::NonOrientable },
                families: fams,
                alternatives: vec![],
            }),
            other => Err(InverseError::HintMismatch {
                hint: h,
                detail: format!(
                    "best relative residual {:.3e}; samples look {}; peeled families {}",
                    other.map_or(f64::INFINITY, |f| f.residual),
                    if orient == Orientability::Orientable { "orientable" } else { "non-orientable" },
                    signature()
                ),
            }),
        };
    }

    // the peeled orientation only orders the search; it is not trusted to
    // exclude classes
    let mut order: Vec<ManifoldClass> = ManifoldClass::ALL.to_vec();
    order.sort_by_key(|c| (c.is_orientable() != (orient == Orientability::Orientable)) as u8);
    let mut fits = search(&order, s, vol, &fams);
    fits.sort_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap());
    let best = match fits.first() {
        Some(b) => b.clone(),
        None => return Err(InverseError::IllConditioned("no class produced a finite fit".into())),
    };
    if best.residual > accept {
        return Err(InverseError::Inconsistent { class: best.class, residual: best.residual });
    }
    let tie = (10.0 * best.residual).max(1e-12);
    let mut tied: Vec<ClassFit> = fits.iter().filter(|f| f.residual <= tie).cloned().collect();
    tied.sort_by_key(|f| f.class);
    let chosen = tied.remove(0);
    Ok(ReconstructionReport {
        descriptor: chosen.descriptor,
        residual: chosen.residual,
        volume: vol,
        orientability: if chosen.class.is_orientable() { Orientability::Orientable } else { Orientability::NonOrientable },
        families: fams,
        alternatives: tied,
    })
}

/// The sampling grid reconstruction is designed for: 60 log-spaced times in
/// [1e-4, 10]·(length scale)².
pub fn recommended_grid(d: &ManifoldDescriptor) -> Vec<f64> {
    let l2 = d.length_scale().powi(2);
    heat_trace::log_grid(1e-4 * l2, 10.0 * l2, 60)
}
