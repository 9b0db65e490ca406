//! Closed-form Kobayashi metrics and distances on model domains, the
//! slit/ray comparison maps, and the localization factor.

use serde::{Deserialize, Serialize};

use crate::cvector::{c, CVector, C64};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::region::{sphere_piece, PieceRange, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CanonicalDomain {
    UnitDisc,
    RightHalfPlane,
    Ball(f64),
    Polydisc(Vec<f64>),
    /// `C` minus the closed segment from `z0` (the end nearest the queries)
    /// to `z1`.
    SlitComplement { z0: C64, z1: C64 },
    /// `C` minus the ray `[base, +inf)` on the real axis.
    RayComplement { base: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    /// Closed form rather than a lower bound.
    pub exact: bool,
    /// Upper bound when `value` is only a lower bound.
    pub upper: Option<f64>,
}

impl MetricValue {
    fn exact(value: f64) -> Self {
        MetricValue {
            value,
            exact: true,
            upper: None,
        }
    }
}

/// Poincaré distance on the unit disc.
pub fn poincare_distance(a: C64, b: C64) -> Result<f64> {
    if a.norm() >= 1.0 || b.norm() >= 1.0 {
        return Err(Error::NotInterior("Poincaré distance needs |a|, |b| < 1".into()));
    }
    let q = ((a - b) / (C64::new(1.0, 0.0) - a.conj() * b)).norm();
    Ok(q.min(1.0 - f64::EPSILON).atanh())
}

/// Kobayashi distance of the ball `B(0, radius)`.
pub fn ball_distance(radius: f64, z: &CVector, w: &CVector) -> Result<f64> {
    let (z, w) = (z.scale_real(1.0 / radius), w.scale_real(1.0 / radius));
    let (nz, nw) = (z.norm_sqr(), w.norm_sqr());
    if nz >= 1.0 || nw >= 1.0 {
        return Err(Error::NotInterior("ball distance needs interior points".into()));
    }
    let denom = (C64::new(1.0, 0.0) - w.inner(&z)).norm_sqr();
    let q2 = (1.0 - (1.0 - nz) * (1.0 - nw) / denom).max(0.0);
    Ok(q2.sqrt().min(1.0 - f64::EPSILON).atanh())
}

/// `coth(x)` without overflow for small `x`.
pub fn coth(x: f64) -> f64 {
    1.0 + 2.0 / (2.0 * x).exp_m1()
}

fn not_interior(what: &str) -> Error {
    Error::NotInterior(format!("query point outside the {what}"))
}

/// Kobayashi metric of a model domain. `z`, `x` have dimension 1 for the
/// planar models.
pub fn kobayashi_canonical(dom: &CanonicalDomain, z: &CVector, x: &CVector) -> Result<MetricValue> {
    let n = dom.dim_hint().unwrap_or(z.dim());
    z.check_dim(n)?;
    x.check_dim(n)?;
    match dom {
        CanonicalDomain::UnitDisc => {
            let s = 1.0 - z[0].norm_sqr();
            if s <= 0.0 {
                return Err(not_interior("unit disc"));
            }
            Ok(MetricValue::exact(x[0].norm() / s))
        }
        CanonicalDomain::RightHalfPlane => {
            if z[0].re <= 0.0 {
                return Err(not_interior("right half-plane"));
            }
            Ok(MetricValue::exact(kobayashi_halfplane(z[0], x[0])))
        }
        CanonicalDomain::Ball(r) => {
            let s = r * r - z.norm_sqr();
            if s <= 0.0 {
                return Err(not_interior("ball"));
            }
            let v = (x.norm_sqr() / s + x.inner(z).norm_sqr() / (s * s)).sqrt();
            Ok(MetricValue::exact(v))
        }
        CanonicalDomain::Polydisc(radii) => {
            let mut best: f64 = 0.0;
            for (j, r) in radii.iter().enumerate() {
                let s = r * r - z[j].norm_sqr();
                if s <= 0.0 {
                    return Err(not_interior("polydisc"));
                }
                best = best.max(r * x[j].norm() / s);
            }
            Ok(MetricValue::exact(best))
        }
        CanonicalDomain::SlitComplement { z0, z1 } => {
            let lower = slit_complement_lower_bound(z[0], x[0], (*z0, *z1))?;
            let d = segment_distance(z[0], *z0, *z1);
            Ok(MetricValue {
                value: lower,
                exact: false,
                upper: Some(x[0].norm() / d),
            })
        }
        CanonicalDomain::RayComplement { base } => {
            let v = ray_complement_metric(z[0], x[0], *base)?;
            Ok(MetricValue {
                value: v,
                exact: true,
                upper: Some(x[0].norm() / ray_distance(z[0], *base)),
            })
        }
    }
}

impl CanonicalDomain {
    fn dim_hint(&self) -> Option<usize> {
        match self {
            CanonicalDomain::Ball(_) => None,
            CanonicalDomain::Polydisc(r) => Some(r.len()),
            _ => Some(1),
        }
    }
}

/// `|X| / (2 Re z)`.
pub fn kobayashi_halfplane(z: C64, x: C64) -> f64 {
    x.norm() / (2.0 * z.re)
}

/// Lower bound from the map `f(w) = (w / (w + eps0))^{1/2}` of the
/// complement of `[-eps0, 0]` into the right half-plane, after moving the
/// segment there (`z0 -> 0`, `z1 -> -eps0`).
pub fn slit_complement_lower_bound(z: C64, x: C64, segment: (C64, C64)) -> Result<f64> {
    let (z0, z1) = segment;
    let eps0 = (z1 - z0).norm();
    if eps0 == 0.0 {
        return Err(Error::InvalidArgument("slit endpoints coincide".into()));
    }
    if segment_distance(z, z0, z1) == 0.0 {
        return Err(Error::NotInterior("point lies on the deleted segment".into()));
    }
    let u = (z1 - z0) / eps0;
    let w = -(z - z0) / u;
    let e = c(eps0, 0.0);
    let q = w / (w + e);
    let f = q.sqrt();
    let fp = 0.5 / f * e / ((w + e) * (w + e));
    Ok(fp.norm() * x.norm() / (2.0 * f.re))
}

/// Exact metric of `C \ [base, +inf)` through `w -> (base - w)^{1/2}`.
pub fn ray_complement_metric(z: C64, x: C64, base: f64) -> Result<f64> {
    if z.im == 0.0 && z.re >= base {
        return Err(Error::NotInterior("point lies on the deleted ray".into()));
    }
    let s = (c(base, 0.0) - z).sqrt();
    Ok(x.norm() / (4.0 * s.norm() * s.re))
}

/// `dist(z, [base, +inf))`.
pub fn ray_distance(z: C64, base: f64) -> f64 {
    if z.re <= base {
        (z - c(base, 0.0)).norm()
    } else {
        z.im.abs()
    }
}

pub fn segment_distance(z: C64, z0: C64, z1: C64) -> f64 {
    let d = z1 - z0;
    let t = ((z - z0) * d.conj()).re / d.norm_sqr();
    let t = t.clamp(0.0, 1.0);
    (z - (z0 + d * t)).norm()
}

fn widen(lo: f64, hi: f64) -> Interval {
    Interval::new(lo.next_down(), hi.next_up())
}

fn box_center_halfdiag(b: &[Interval]) -> (CVector, f64) {
    let mid: Vec<f64> = b.iter().map(|x| 0.5 * (x.lo + x.hi)).collect();
    let hd = b
        .iter()
        .map(|x| (0.5 * x.width()).powi(2))
        .sum::<f64>()
        .sqrt();
    (CVector::from_real(&mid), hd * (1.0 + 1e-12))
}

fn sqr_sum(b: &[Interval]) -> Interval {
    b.iter().fold(Interval::point(0.0), |acc, x| acc + x.sqr())
}

impl Region for CanonicalDomain {
    fn value(&self, w: &CVector) -> f64 {
        match self {
            CanonicalDomain::UnitDisc => w[0].norm_sqr() - 1.0,
            CanonicalDomain::RightHalfPlane => -w[0].re,
            CanonicalDomain::Ball(r) => w.norm_sqr() - r * r,
            CanonicalDomain::Polydisc(radii) => radii
                .iter()
                .enumerate()
                .map(|(j, r)| w[j].norm_sqr() - r * r)
                .fold(f64::NEG_INFINITY, f64::max),
            CanonicalDomain::SlitComplement { z0, z1 } => -segment_distance(w[0], *z0, *z1),
            CanonicalDomain::RayComplement { base } => -ray_distance(w[0], *base),
        }
    }

    fn range(&self, b: &[Interval]) -> Interval {
        match self {
            CanonicalDomain::UnitDisc => sqr_sum(b) - Interval::point(1.0),
            CanonicalDomain::RightHalfPlane => -b[0],
            CanonicalDomain::Ball(r) => sqr_sum(b) - Interval::point(r * r),
            CanonicalDomain::Polydisc(radii) => radii
                .iter()
                .enumerate()
                .map(|(j, r)| sqr_sum(&b[2 * j..2 * j + 2]) - Interval::point(r * r))
                .reduce(|a, x| a.max(x))
                .expect("polydisc with no factors"),
            CanonicalDomain::SlitComplement { .. } | CanonicalDomain::RayComplement { .. } => {
                // value is 1-Lipschitz
                let (mid, hd) = box_center_halfdiag(b);
                let v = self.value(&mid);
                widen(v - hd, (v + hd).min(0.0).max(v - hd))
            }
        }
    }

    fn lipschitz(&self) -> Option<f64> {
        match self {
            CanonicalDomain::UnitDisc => Some(2.0),
            CanonicalDomain::RightHalfPlane => Some(1.0),
            CanonicalDomain::Ball(r) => Some(2.0 * r),
            CanonicalDomain::Polydisc(radii) => {
                Some(2.0 * radii.iter().cloned().fold(0.0, f64::max))
            }
            CanonicalDomain::SlitComplement { .. } | CanonicalDomain::RayComplement { .. } => {
                Some(1.0)
            }
        }
    }

    fn piece_values(&self, w: &CVector) -> Vec<f64> {
        match self {
            CanonicalDomain::Polydisc(radii) => radii
                .iter()
                .enumerate()
                .map(|(j, r)| w[j].norm_sqr() - r * r)
                .collect(),
            _ => vec![self.value(w)],
        }
    }

    fn pieces(&self, b: &[Interval]) -> Vec<PieceRange> {
        match self {
            CanonicalDomain::UnitDisc => vec![sphere_piece(b, 1.0)],
            CanonicalDomain::Ball(r) => vec![sphere_piece(b, *r)],
            CanonicalDomain::RightHalfPlane => vec![PieceRange {
                value: -b[0],
                gradient: Some(vec![Interval::point(-1.0), Interval::point(0.0)]),
            }],
            CanonicalDomain::Polydisc(radii) => radii
                .iter()
                .enumerate()
                .map(|(j, r)| {
                    let p = sphere_piece(&b[2 * j..2 * j + 2], *r);
                    let mut g = vec![Interval::point(0.0); b.len()];
                    if let Some(gj) = p.gradient {
                        g[2 * j] = gj[0];
                        g[2 * j + 1] = gj[1];
                    }
                    PieceRange {
                        value: p.value,
                        gradient: Some(g),
                    }
                })
                .collect(),
            _ => vec![PieceRange {
                value: self.range(b),
                gradient: None,
            }],
        }
    }

    fn inner_radius(&self, w: &CVector) -> f64 {
        let d = match self {
            CanonicalDomain::UnitDisc => 1.0 - w[0].norm(),
            CanonicalDomain::RightHalfPlane => w[0].re,
            CanonicalDomain::Ball(r) => r - w.norm(),
            CanonicalDomain::Polydisc(radii) => radii
                .iter()
                .enumerate()
                .map(|(j, r)| r - w[j].norm())
                .fold(f64::INFINITY, f64::min),
            CanonicalDomain::SlitComplement { z0, z1 } => segment_distance(w[0], *z0, *z1),
            CanonicalDomain::RayComplement { base } => ray_distance(w[0], *base),
        };
        d.max(0.0)
    }
}

/// `coth` of a certified lower bound for the Lempert function from `z` to the
/// complement of the patch `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub ell_hat: f64,
    /// `coth(ell_hat) >= 1`.
    pub factor: f64,
}

impl Localization {
    /// Multiplier turning a lower bound on the patch into one on the domain.
    pub fn tanh(&self) -> f64 {
        1.0 / self.factor
    }
}

const ELL_MAX: f64 = 40.0;
const THETA_SAMPLES: usize = 4096;

/// Uses that the domain lies in its enclosing ball and that the Lempert
/// function decreases under inclusion: the bound is the largest `t` such
/// that the Kobayashi ball of radius `t` about `z` in the enclosing ball
/// stays inside the patch. Points and the patch centre are in the domain's
/// coordinates.
pub fn localization_factor(
    dom: &DomainSpec,
    z: &CVector,
    center: &CVector,
    radius: f64,
) -> Result<Localization> {
    z.check_dim(dom.dim())?;
    center.check_dim(dom.dim())?;
    let w = dom.frame.to_base(z);
    let cw = dom.frame.to_base(center);
    localization_in_ball(dom.enclosing_radius, &w, &cw, radius)
}

pub fn localization_in_ball(
    enclosing: f64,
    z: &CVector,
    center: &CVector,
    radius: f64,
) -> Result<Localization> {
    if z.norm() >= enclosing {
        return Err(Error::NotInterior("point outside the enclosing ball".into()));
    }
    if center.norm() + enclosing <= radius {
        // nothing of the domain lies outside the patch
        return Ok(Localization {
            ell_hat: f64::INFINITY,
            factor: 1.0,
        });
    }
    // work in the unit ball
    let zs = z.scale_real(1.0 / enclosing);
    let cs = center.scale_real(1.0 / enclosing);
    let rs = radius / enclosing;
    let fits = |t: f64| kobayashi_ball_max_dist(&zs, t.tanh(), &cs) <= rs;
    if !fits(0.0) || zs.dist(&cs) >= rs {
        return Err(Error::CertificateUnavailable(
            "query point on or outside the localization patch".into(),
        ));
    }
    let (mut lo, mut hi) = (0.0, ELL_MAX);
    if fits(hi) {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
    }
    if lo <= 0.0 {
        return Err(Error::CertificateUnavailable(
            "localization distance is zero".into(),
        ));
    }
    Ok(Localization {
        ell_hat: lo,
        factor: coth(lo),
    })
}

/// Upper bound for `max |w - c|` over the Kobayashi ball `{k_B(z, w) <=
/// artanh s}` of the unit ball, which is an ellipsoid.
fn kobayashi_ball_max_dist(z: &CVector, s: f64, cpt: &CVector) -> f64 {
    let nz2 = z.norm_sqr();
    let denom = 1.0 - s * s * nz2;
    let center = z.scale_real((1.0 - s * s) / denom);
    let d = &center - cpt;
    let nz = nz2.sqrt();
    if nz == 0.0 {
        return d.norm() + s;
    }
    let a = s * (1.0 - nz2) / denom;
    let b = s * ((1.0 - nz2) / denom).sqrt();
    let zhat = z.scale_real(1.0 / nz);
    let du = d.inner(&zhat);
    let dperp = (&d - &zhat.scale(du)).norm();
    let du = du.norm();
    let f = |th: f64| ((du + a * th.cos()).powi(2) + (dperp + b * th.sin()).powi(2)).sqrt();
    let step = std::f64::consts::FRAC_PI_2 / THETA_SAMPLES as f64;
    let mut best: f64 = 0.0;
    for i in 0..=THETA_SAMPLES {
        best = best.max(f(i as f64 * step));
    }
    // f is Lipschitz in theta with constant max(a, b)
    best + a.max(b) * step * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvector::{random_in_ball, random_unit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one(v: C64) -> CVector {
        CVector::new(vec![v])
    }

    #[test]
    fn poincare_values() {
        assert_eq!(poincare_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        let d = poincare_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((d - 0.5f64.atanh()).abs() < 1e-15);
        assert!(poincare_distance(c(1.0, 0.0), c(0.0, 0.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random_in_ball(1, 0.99, &mut rng)[0];
            let b = random_in_ball(1, 0.99, &mut rng)[0];
            let (x, y) = (poincare_distance(a, b).unwrap(), poincare_distance(b, a).unwrap());
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_forms() {
        let v = kobayashi_canonical(&CanonicalDomain::UnitDisc, &one(c(0.0, 0.0)), &one(c(1.0, 0.0)))
            .unwrap();
        assert_eq!(v.value, 1.0);
        assert!(v.exact);
        let h = kobayashi_canonical(&CanonicalDomain::RightHalfPlane, &one(c(1.0, 0.0)), &one(c(1.0, 0.0)))
            .unwrap();
        assert_eq!(h.value, 0.5);
        let x = CVector::new(vec![c(0.3, 0.4), c(-1.0, 0.2)]);
        let b = kobayashi_canonical(&CanonicalDomain::Ball(1.0), &CVector::zeros(2), &x).unwrap();
        assert!((b.value - x.norm()).abs() < 1e-15);
        let r = 0.6;
        let z = CVector::new(vec![c(r, 0.0), c(0.0, 0.0)]);
        let b = kobayashi_canonical(&CanonicalDomain::Ball(1.0), &z, &CVector::unit(2, 0)).unwrap();
        assert!((b.value - 1.0 / (1.0 - r * r)).abs() < 1e-14);
    }

    #[test]
    fn slit_example() {
        let z = c(0.01, 0.0);
        let seg = (c(0.0, 0.0), c(-1.0, 0.0));
        let f = (0.01f64 / 1.01).sqrt();
        assert!((f - 0.099504).abs() < 1e-6);
        let v = slit_complement_lower_bound(z, c(1.0, 0.0), seg).unwrap();
        // oracle: f' = (1/2) q^{-1/2} / (z + 1)^2 with q = z / (z + 1)
        let fp = 0.5 / f / (1.01f64 * 1.01);
        assert!((v - fp / (2.0 * f)).abs() < 1e-12);
        assert!((v - 24.75).abs() < 0.01);
        assert!(v >= 12.5);
        let v2 = slit_complement_lower_bound(z, c(2.0, 0.0), seg).unwrap();
        assert!((v2 - 2.0 * v).abs() < 1e-12);
        assert!(slit_complement_lower_bound(c(-0.5, 0.0), c(1.0, 0.0), seg).is_err());
    }

    #[test]
    fn ray_metric_on_axis() {
        let d = 1e-3;
        let v = ray_complement_metric(c(-d, 0.0), c(1.0, 0.0), d).unwrap();
        assert!((v - 1.0 / (8.0 * d)).abs() < 1e-9);
    }

    #[test]
    fn ball_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = random_in_ball(3, 0.9, &mut rng);
            let x = random_unit(3, &mut rng);
            let u = crate::cvector::Unitary::random(3, &mut rng);
            let a = kobayashi_canonical(&CanonicalDomain::Ball(1.0), &z, &x).unwrap().value;
            let b = kobayashi_canonical(&CanonicalDomain::Ball(1.0), &u.apply(&z), &u.apply(&x))
                .unwrap()
                .value;
            assert!((a - b).abs() < 1e-12 * a);
            let big = kobayashi_canonical(&CanonicalDomain::Ball(2.0), &z, &x).unwrap().value;
            assert!(big <= a);
        }
    }

    #[test]
    fn ellipsoid_bounds_kobayashi_ball() {
        // points at Kobayashi distance artanh(s) from z stay within the
        // computed max distance and get close to it
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let z = random_in_ball(2, 0.8, &mut rng);
            let cpt = random_in_ball(2, 0.5, &mut rng);
            let s = 0.6;
            let bound = kobayashi_ball_max_dist(&z, s, &cpt);
            let mut best: f64 = 0.0;
            for _ in 0..4000 {
                let u = random_unit(2, &mut rng).scale_real(s);
                let w = ball_automorphism_inverse(&z, &u);
                let dist = ball_distance(1.0, &z, &w).unwrap();
                assert!((dist - s.atanh()).abs() < 1e-8);
                best = best.max(w.dist(&cpt));
            }
            assert!(best <= bound + 1e-12);
            assert!(best >= bound - 0.02, "{best} vs {bound}");
        }
    }

    /// The automorphism of the unit ball exchanging 0 and `a`.
    fn ball_automorphism_inverse(a: &CVector, u: &CVector) -> CVector {
        let na2 = a.norm_sqr();
        let sa = (1.0 - na2).sqrt();
        let pa = if na2 > 0.0 { a.scale(u.inner(a) / na2) } else { CVector::zeros(a.dim()) };
        let qa = u - &pa;
        let num = &(a - &pa) - &qa.scale_real(sa);
        num.scale(C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - u.inner(a)))
    }

    #[test]
    fn localization_equality_edge() {
        let l = localization_in_ball(1.0, &one(c(0.0, 0.0)), &one(c(0.0, 0.0)), 0.5).unwrap();
        assert!((l.ell_hat - 0.5f64.atanh()).abs() < 1e-12);
        assert!((l.factor - 2.0).abs() < 1e-9);
        assert!(localization_in_ball(1.0, &one(c(0.5, 0.0)), &one(c(0.0, 0.0)), 0.5).is_err());
        // factor decreases as the patch grows
        let mut prev = f64::INFINITY;
        for r in [0.3, 0.5, 0.7, 0.9, 0.99] {
            let f = localization_in_ball(1.0, &one(c(0.0, 0.0)), &one(c(0.0, 0.0)), r)
                .unwrap()
                .factor;
            assert!(f < prev);
            prev = f;
        }
    }
}
