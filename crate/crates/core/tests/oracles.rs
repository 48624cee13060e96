mod common;

use common::*;
use flatspec::geometry::{self, ManifoldClass, ManifoldDescriptor};
use flatspec::heat_trace::{self, trace, trace_grid};
use flatspec::inverse::{self, recommended_grid};
use flatspec::lattice::Lattice3;
use flatspec::oracle;
use rand::{Rng, SeedableRng};

#[test]
fn spectrum_matches_brute_force_for_every_class() {
    for c in ManifoldClass::ALL {
        let d = fixed(c);
        let s = oracle::spectrum(&d, 300.0).unwrap();
        let b = brute_spectrum(&d, 300.0);
        assert_eq!(s.entries.len(), b.len(), "{c}");
        for (x, y) in s.entries.iter().zip(&b) {
            assert_eq!(x.1, y.1, "{c} at {}", x.0);
            assert!((x.0 - y.0).abs() < 1e-8 * x.0.max(1.0), "{c}: {} vs {}", x.0, y.0);
        }
    }
}

#[test]
fn trace_matches_brute_heat_sum() {
    for c in ManifoldClass::ALL {
        let d = fixed(c);
        for t in [0.2, 0.5, 1.0] {
            let a = trace(&d, t, 1e-13).unwrap();
            let b = brute_heat_sum(&d, t);
            assert!((a - b).abs() < 1e-10, "{c} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn torus_theta_matches_box_sum() {
    let d = fixed(ManifoldClass::M1);
    let l = geometry::translation_lattice(&d);
    for t in [0.05, 0.3, 1.0, 3.0] {
        let a = heat_trace::lattice_theta(&l, t, 1e-13).unwrap();
        let b = brute_theta(l.basis(), t, 30);
        assert!((a - b).abs() < 1e-11 * b, "t={t}: {a} vs {b}");
    }
}

#[test]
fn m1_trace_is_volume_times_theta() {
    // tr = Σ e^{-4π²|μ|²t} = vol·(4πt)^{-3/2}·Σ_v e^{-|v|²/4t}
    let d = fixed(ManifoldClass::M1);
    let b = basis_matrix(&d);
    for t in [0.1, 0.7] {
        let direct = geometry::volume(&d) * (4.0 * std::f64::consts::PI * t).powf(-1.5) * brute_theta(&b, t, 25);
        let a = trace(&d, t, 1e-13).unwrap();
        assert!(rel(a, direct) < 1e-12, "t={t}: {a} vs {direct}");
    }
}

#[test]
fn dual_of_dual_is_identity() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for _ in 0..10 {
        let d = draw(ManifoldClass::M1, &mut rng);
        let l = geometry::translation_lattice(&d);
        let dd = flatspec::lattice::dual(&flatspec::lattice::dual(&l));
        assert!((dd.basis() - l.basis()).norm() < 1e-12);
        let inv = Lattice3::from_matrix(l.basis().try_inverse().unwrap().transpose()).unwrap();
        assert!((flatspec::lattice::dual(&l).gram() - inv.gram()).norm() < 1e-12);
    }
}

#[test]
fn reconstruction_is_stable_under_small_noise() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let cases = [
        ManifoldDescriptor::M6 { lengths: [0.8, 1.3, 1.7] },
        ManifoldDescriptor::M3 { l1: 1.4, l: 0.9 },
        fixed(ManifoldClass::N1),
        fixed(ManifoldClass::N3),
    ];
    for d in cases {
        let mut s = trace_grid(&d, &recommended_grid(&d), 1e-14).unwrap();
        for (v, e) in s.values.iter_mut().zip(s.err.iter_mut()) {
            *v *= 1.0 + 1e-10 * rng.gen_range(-1.0..1.0);
            *e = 1e-10 * *v;
        }
        let r = inverse::reconstruct(&s, None).unwrap();
        assert_eq!(r.class(), d.class());
        let (a, b) = (geometry::canonical_form(&r).params(), geometry::canonical_form(&d).params());
        for (x, y) in a.iter().zip(&b) {
            assert!(rel(*x, *y) < 1e-4, "{d:?} -> {r:?}");
        }
    }
}

#[test]
fn volume_from_small_time_samples() {
    for c in ManifoldClass::ALL {
        let d = fixed(c);
        let s = trace_grid(&d, &recommended_grid(&d), 1e-13).unwrap();
        let v = inverse::extract_volume(&s).unwrap();
        assert!(rel(v, geometry::volume(&d)) < 1e-5, "{c}: {v}");
    }
}
