//! Closed-form values that the engines must reproduce.

use koblab::analysis::fit::{fit_blowup_exponent, log_grid};
use koblab::bound::{bound_canonical, bound_domain, BoundOptions};
use koblab::canonical::{kobayashi_canonical, kobayashi_halfplane, CanonicalDomain};
use koblab::distance::signed_distance;
use koblab::models::{saddle, unit_ball};
use koblab::optimize::OptimizeOptions;
use koblab::{c, CVector};

#[test]
fn disc_and_half_plane_closed_forms() {
    let f = kobayashi_canonical(&CanonicalDomain::UnitDisc, &CVector::new(vec![c(0.5, 0.0)]), &CVector::new(vec![c(1.0, 0.0)]))
        .unwrap();
    assert!(f.exact && (f.value - 4.0 / 3.0).abs() < 1e-15);
    assert_eq!(kobayashi_halfplane(c(0.25, 7.0), c(0.0, 1.0)), 2.0);
}

#[test]
fn ball_radial_metric() {
    for a in [0.0, 0.5, 0.9, 0.999] {
        let z = CVector::new(vec![c(a, 0.0), c(0.0, 0.0)]);
        let x = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let v = kobayashi_canonical(&CanonicalDomain::Ball(1.0), &z, &x).unwrap().value;
        assert!((v - 1.0 / (1.0 - a * a)).abs() <= 1e-12 * v);
        let t = CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let w = kobayashi_canonical(&CanonicalDomain::Ball(1.0), &z, &t).unwrap().value;
        assert!((w - 1.0 / (1.0 - a * a).sqrt()).abs() <= 1e-12 * w);
    }
}

#[test]
fn canonical_record_sandwiches_the_exact_value() {
    let z = CVector::new(vec![c(0.3, 0.1), c(0.0, -0.2)]);
    let x = CVector::new(vec![c(1.0, 0.0), c(0.0, 1.0)]);
    let r = bound_canonical(&CanonicalDomain::Ball(1.0), &z, &x, &OptimizeOptions::default()).unwrap();
    let (l, u) = (r.lower.unwrap(), r.upper.unwrap());
    assert!(l <= u && (u - l) / l < 5e-3, "{l} {u}");
}

#[test]
fn ball_domain_distance_is_exact() {
    let dom = unit_ball(2).unwrap();
    let z = CVector::new(vec![c(0.6, 0.0), c(0.0, 0.3)]);
    assert!((signed_distance(&dom, &z).unwrap() - (z.norm() - 1.0)).abs() < 1e-15);
}

#[test]
fn ball_domain_bounds_straddle_the_closed_form() {
    let dom = unit_ball(2).unwrap();
    let x = CVector::new(vec![c(0.0, 1.0), c(0.5, 0.0)]);
    for a in [0.5, 0.9, 0.99] {
        let z = CVector::new(vec![c(0.0, 0.0), c(a, 0.0)]);
        let exact = kobayashi_canonical(&CanonicalDomain::Ball(1.0), &z, &x).unwrap().value;
        let r = bound_domain(&dom, &z, &x, &BoundOptions::default()).unwrap();
        assert!(r.lower.unwrap() <= exact * (1.0 + 1e-12));
        assert!(r.upper.unwrap() >= exact * (1.0 - 1e-9));
    }
}

#[test]
fn power_law_fit_recovers_exponents() {
    let ds = log_grid(1e-2, 1e-6, 9);
    for e in [0.5, 2.0 / 3.0, 0.75] {
        let pts: Vec<(f64, f64)> = ds.iter().map(|&d| (d, 5.0 * d.powf(-e))).collect();
        let f = fit_blowup_exponent(&pts).unwrap();
        assert!((f.slope + e).abs() < 1e-12 && (f.intercept - 5f64.ln()).abs() < 1e-10);
    }
}

#[test]
fn enclosing_ball_bounds_every_domain_from_below() {
    let dom = saddle().unwrap();
    // far from the boundary patch the envelope pipelines may not apply
    let z = CVector::new(vec![c(0.0, 0.0), c(-1.0, 0.0)]);
    let x = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let ball = kobayashi_canonical(&CanonicalDomain::Ball(dom.enclosing_radius), &z, &x).unwrap().value;
    let r = bound_domain(&dom, &z, &x, &BoundOptions::default()).unwrap();
    assert!(r.lower.unwrap() >= ball * (1.0 - 1e-15));
    assert!(r.is_sandwich() && r.is_consistent(1e-12));
}
