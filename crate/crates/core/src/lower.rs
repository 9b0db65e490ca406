//! Certified lower bounds from envelope domains: competitor discs are
//! rescaled, bounded by Schwarz-type estimates and pushed into the complement
//! of a sector in their normal coordinate, whose metric is explicit.

use serde::Serialize;

use crate::canonical::{localization_factor, Localization};
use crate::cvector::{CVector, C64};
use crate::distance::boundary_projection;
use crate::domain::DomainSpec;
use crate::envelope::{envelope_fit, EnvelopeOptions, EnvelopeParams, EnvelopeSummary};
use crate::error::{Error, Result};
use crate::levi::levi_form;

/// Aperture parameters: points satisfy `-Re z_n > k|z|`; directions in the
/// tangentially weighted estimate satisfy `|X| <= K|X_n|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cone {
    pub k: f64,
    pub big_k: f64,
}

impl Default for Cone {
    fn default() -> Self {
        Cone { k: 0.9, big_k: 10.0 }
    }
}

/// A lower bound together with the constants that certify it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerEstimate {
    pub value: f64,
    /// Rescaling constant `c`; the disc radius is `c delta^{1/m}` or
    /// `c delta^{1/(2m)}`.
    pub c: f64,
    pub rho: f64,
    /// Base of the omitted ray in the normal coordinate.
    pub ray_base: f64,
    pub iterations: usize,
}

impl LowerEstimate {
    fn zero() -> Self {
        LowerEstimate {
            value: 0.0,
            c: 0.0,
            rho: 0.0,
            ray_base: f64::INFINITY,
            iterations: 0,
        }
    }

    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self
    }
}

const C_GRID: usize = 96;
const GOLDEN_STEPS: usize = 60;
const FIXED_POINT_ITER: usize = 100;
const FIXED_POINT_TOL: f64 = 1e-10;

fn check_point(env: &EnvelopeParams, z: &CVector, cone: &Cone) -> Result<f64> {
    z.check_dim(env.dim())?;
    let delta = -z.last().re;
    if !(delta > cone.k * z.norm()) {
        return Err(Error::Precondition(format!(
            "point outside the approach cone (k = {})",
            cone.k
        )));
    }
    if z.norm() >= env.model_radius {
        return Err(Error::Precondition("point outside the envelope ball".into()));
    }
    Ok(delta)
}

/// Values of `f(c)` on a geometric grid `2^{-j/4}` followed by a golden
/// section refinement in `log c` around the best grid point. `f` returns
/// `None` where its certificate does not apply.
fn maximize_over_c<F>(cmax: f64, f: F) -> Option<(f64, LowerEstimate)>
where
    F: Fn(f64) -> Option<LowerEstimate>,
{
    let grid: Vec<f64> = (0..C_GRID).map(|j| cmax * 2f64.powf(-(j as f64) / 4.0)).collect();
    let vals: Vec<Option<LowerEstimate>> = grid.iter().map(|&c| f(c)).collect();
    let (best_j, best) = vals
        .iter()
        .enumerate()
        .filter_map(|(j, v)| v.map(|v| (j, v)))
        .max_by(|a, b| a.1.value.total_cmp(&b.1.value))?;
    let mut best = (grid[best_j], best);
    let lo = grid[(best_j + 1).min(C_GRID - 1)].ln();
    let hi = grid[best_j.saturating_sub(1)].ln();
    let (mut a, mut b) = (lo, hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let score = |t: f64| f(t.exp()).map_or(f64::NEG_INFINITY, |v| v.value);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (score(x1), score(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = score(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = score(x1);
        }
    }
    for t in [x1, x2] {
        if let Some(v) = f(t.exp()) {
            if v.value > best.1.value {
                best = (t.exp(), v);
            }
        }
    }
    Some(best)
}

/// Metric at `w` for the unit direction of `C` minus the sector
/// `{|arg(v - b)| <= theta}`, `b = b0 / (1 - kappa)`, `cos theta = kappa`.
///
/// The set `{Re v >= kappa |v| + b0}` contains this sector, so a disc in
/// `{Re v < kappa |v| + b0}` also avoids it. `v -> (b - v)^p` with
/// `p = pi / (2 (pi - theta))` maps the complement onto the right half-plane.
fn sector_complement_metric(w: C64, b0: f64, kappa: f64) -> Option<f64> {
    if !((0.0..1.0).contains(&kappa) && b0 >= 0.0) {
        return None;
    }
    let b = b0 / (1.0 - kappa);
    let theta = kappa.acos();
    let p = std::f64::consts::PI / (2.0 * (std::f64::consts::PI - theta));
    let big_w = C64::new(b, 0.0) - w;
    if big_w.norm() == 0.0 || big_w.arg().abs() >= std::f64::consts::PI - theta {
        return None;
    }
    let wp = big_w.powf(p);
    Some(p * big_w.norm().powf(p - 1.0) / (2.0 * wp.re))
}

const KAPPA_MAX: f64 = 0.95;

/// Lower bound with exponent `1 - 1/m` in the distance to the boundary
/// plane, from the normal component of `x`.
///
/// A competitor `f: D -> envelope` with `f(0) = z`, `f'(0) = lambda x`
/// satisfies `|f(rho zeta) - z| <= B rho` with `B = R + |z|` by the Schwarz
/// lemma. The envelope inequality then keeps `f_n(rho .)` in
/// `{Re v < A M_hat^m + A M |v|}` with `M = |z| + B rho`, which misses a
/// sector around the positive real axis whose complement has an explicit
/// metric. Hence `F >= rho F_sector(z_n, x_n)`. The constant `c` in
/// `rho = c delta^{1/m}` is optimized over a geometric grid.
pub fn normal_slice_lower_bound(env: &EnvelopeParams, z: &CVector, x: &CVector, cone: &Cone) -> Result<LowerEstimate> {
    let delta = check_point(env, z, cone)?;
    x.check_dim(env.dim())?;
    let xn = x.norm();
    if x.last().norm() == 0.0 || xn == 0.0 {
        return Ok(LowerEstimate::zero());
    }
    let e = normal_slice_unit(env, z, (x.last() / xn).norm(), delta)?;
    Ok(e.scaled(xn))
}

fn normal_slice_unit(env: &EnvelopeParams, z: &CVector, xn: f64, delta: f64) -> Result<LowerEstimate> {
    let (a, m) = (env.a, env.m);
    let scale = delta.powf(1.0 / m);
    let zn = z.last();
    let zabs = z.norm();
    let b = env.model_radius + zabs;
    let eval = |c: f64| -> Option<LowerEstimate> {
        let rho = c * scale;
        if !(rho > 0.0 && rho <= 1.0) {
            return None;
        }
        let big_m = zabs + b * rho;
        let hat_m = z.head_norm() + b * rho;
        let kappa = env.mixed * big_m;
        if kappa > KAPPA_MAX {
            return None;
        }
        let b0 = a * hat_m.powf(m);
        let f = sector_complement_metric(zn, b0, kappa)?;
        Some(LowerEstimate {
            value: rho * f * xn,
            c,
            rho,
            ray_base: b0 / (1.0 - kappa),
            iterations: 0,
        })
    };
    let cmax = 1.0 / scale;
    maximize_over_c(cmax, eval)
        .map(|(_, e)| e)
        .ok_or_else(|| Error::CertificateUnavailable("no admissible rescaling constant at this depth".into()))
}

/// `sup |h(rho zeta)|` over `|zeta| < 1` for `h: D -> B(0, b)`, `h(0) = 0`,
/// `|h'(0)| <= a`.
fn schwarz_growth(rho: f64, a: f64, b: f64) -> f64 {
    let s = (a / b).min(1.0);
    b * rho * (rho + s) / (1.0 + s * rho)
}

/// Lower bound with exponent `1 - 1/(2m)` for directions in the cone
/// `|x| <= K |x_n|`.
///
/// With `rho = c delta^{1/(2m)}`, a competitor with `f'(0) = lambda x`
/// obeys `|f(rho zeta) - z| <= B rho (rho + s) / (1 + s rho)`,
/// `s = lambda |x| / B`, and the same bound with `x̂` for the tangential
/// coordinates. The normal coordinate then misses a sector based near
/// `A M_hat(lambda)^m`, which forces `lambda <= G(lambda) =
/// 1 / (rho F_sector(z_n, x_n))`. Admissible `lambda` form an interval
/// `[0, lambda_max]`, so one `lambda` violating this inequality bounds
/// `lambda_max`. The iteration `lambda <- G(lambda)` from zero climbs to the
/// smallest fixed point; a point just above it is checked explicitly and its
/// reciprocal returned.
pub fn tangential_weighted_lower_bound(
    env: &EnvelopeParams,
    z: &CVector,
    x: &CVector,
    cone: &Cone,
) -> Result<LowerEstimate> {
    let delta = check_point(env, z, cone)?;
    x.check_dim(env.dim())?;
    let xabs = x.norm();
    let xn_abs = x.last().norm();
    if xn_abs == 0.0 {
        return Err(Error::Precondition("direction has no normal component".into()));
    }
    if xabs > cone.big_k * xn_abs * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "direction outside the cone |X| <= {} |X_n|",
            cone.big_k
        )));
    }
    let xn = xn_abs / xabs;
    let xhat = x.head_norm() / xabs;
    let ns = normal_slice_unit(env, z, xn, delta).ok();
    let (a, m) = (env.a, env.m);
    let zn = z.last();
    let zabs = z.norm();
    let zhat = z.head_norm();
    let b = env.model_radius + zabs;
    let scale = delta.powf(1.0 / (2.0 * m));
    let eval = |c: f64| -> Option<LowerEstimate> {
        let rho = c * scale;
        if !(rho > 0.0 && rho < 1.0) {
            return None;
        }
        let sector = |lam: f64| {
            let big_m = zabs + schwarz_growth(rho, lam, b);
            let hat_m = zhat + schwarz_growth(rho, lam * xhat, b);
            (a * hat_m.powf(m), env.mixed * big_m)
        };
        let g = |lam: f64| -> Option<f64> {
            let (b0, kappa) = sector(lam);
            if kappa > KAPPA_MAX {
                return None;
            }
            sector_complement_metric(zn, b0, kappa).map(|f| 1.0 / (rho * xn * f))
        };
        let mut lam = 0.0;
        let mut iterations = 0;
        for it in 0..FIXED_POINT_ITER {
            let next = g(lam)?;
            iterations = it + 1;
            let done = (next - lam).abs() <= FIXED_POINT_TOL * next;
            lam = next;
            if done {
                break;
            }
        }
        let bar = lam * (1.0 + 1e-8);
        if bar <= g(bar)? {
            return None;
        }
        let (b0, kappa) = sector(bar);
        Some(LowerEstimate {
            value: 1.0 / bar,
            c,
            rho,
            ray_base: b0 / (1.0 - kappa),
            iterations,
        })
    };
    let best = maximize_over_c(1.0 / scale, eval).map(|(_, e)| e);
    // the normal slice is itself a valid bound
    let best = match (best, ns) {
        (Some(t), Some(n)) if n.value > t.value => n,
        (Some(t), _) => t,
        (None, Some(n)) => n,
        (None, None) => {
            return Err(Error::CertificateUnavailable(
                "no admissible rescaling constant at this depth".into(),
            ))
        }
    };
    Ok(best.scaled(xabs))
}

/// A lower bound on a domain obtained in a boundary patch and transferred
/// with the localization factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizedLower {
    pub value: f64,
    pub patch_value: f64,
    pub estimate: LowerEstimate,
    pub localization: Localization,
    pub envelope: EnvelopeSummary,
    pub boundary_point: CVector,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOptions {
    pub envelope: EnvelopeOptions,
    pub cone: Cone,
}

fn localized(
    dom: &DomainSpec,
    z: &CVector,
    x: &CVector,
    m: f64,
    opts: &PipelineOptions,
    check: impl Fn(&CVector) -> Result<()>,
) -> Result<LocalizedLower> {
    let w = dom.check_interior(z)?;
    x.check_dim(dom.dim())?;
    let proj = boundary_projection(dom, z)?;
    check(&dom.frame.to_base(&proj.point))?;
    let env = envelope_fit(dom, &proj.point, m, &opts.envelope)?;
    let u = env.local(&w);
    let y = env.local_vec(&w, &dom.frame.vec_to_base(x));
    let estimate = normal_slice_lower_bound(&env, &u, &y, &opts.cone)?;
    let localization = localization_factor(dom, z, &proj.point, env.radius)?;
    Ok(LocalizedLower {
        value: estimate.value * localization.tanh(),
        patch_value: estimate.value,
        estimate,
        localization,
        envelope: env.summary(),
        boundary_point: proj.point,
        depth: proj.distance,
    })
}

/// `F(z, X) >= C |<dr(z), X>| / |r(z)|^{1/2}` for any boundary of class
/// C^2: boundary projection, quadratic envelope, normal slice in the patch
/// and localization.
pub fn normal_estimate_c11(dom: &DomainSpec, z: &CVector, x: &CVector, opts: &PipelineOptions) -> Result<LocalizedLower> {
    localized(dom, z, x, 2.0, opts, |_| Ok(()))
}

const LEVI_TOLERANCE: f64 = -1e-8;

/// The exponent `2/3` estimate for pseudoconvex domains of class C^3: the
/// same pipeline with a cubic envelope after removing the holomorphic
/// quadratic part of the defining function.
pub fn pseudoconvex_lower_bound(dom: &DomainSpec, z: &CVector, x: &CVector, opts: &PipelineOptions) -> Result<LocalizedLower> {
    if !dom.pseudoconvex_known {
        return Err(Error::Precondition("domain is not declared pseudoconvex".into()));
    }
    if !dom.regularity.at_least_c3() {
        return Err(Error::Precondition("the cubic estimate needs a C^3 boundary".into()));
    }
    localized(dom, z, x, 3.0, opts, |p| {
        let levi = levi_form(&dom.field, p)?;
        match levi.min_restricted() {
            Some(e) if e < LEVI_TOLERANCE * levi.gradient.norm().max(1.0) => Err(Error::Precondition(format!(
                "restricted Levi form has eigenvalue {e:.3e} at the boundary point"
            ))),
            _ => Ok(()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvector::c;

    fn axis(d: f64) -> CVector {
        CVector::new(vec![c(0.0, 0.0), c(-d, 0.0)])
    }

    #[test]
    fn half_space_bound_is_capped_by_the_half_plane() {
        let env = EnvelopeParams::model(2, 2.0, 1.0, 1.0);
        let x = CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        for d in [1e-2, 1e-3, 1e-4] {
            let l = normal_slice_lower_bound(&env, &axis(d), &x, &Cone::default()).unwrap();
            assert!(l.value > 0.0 && l.value <= 1.0 / (2.0 * d), "{d}: {}", l.value);
        }
    }

    #[test]
    fn tangential_direction_gives_zero() {
        let env = EnvelopeParams::model(2, 2.0, 1.0, 1.0);
        let x = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let l = normal_slice_lower_bound(&env, &axis(1e-3), &x, &Cone::default()).unwrap();
        assert_eq!(l.value, 0.0);
        assert!(tangential_weighted_lower_bound(&env, &axis(1e-3), &x, &Cone::default()).is_err());
    }

    #[test]
    fn tangential_bound_beats_the_normal_slice_deep_inside() {
        let env = EnvelopeParams::model(2, 2.0, 1.0, 4.0);
        let x = CVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let d = 1e-5;
        let ns = normal_slice_lower_bound(&env, &axis(d), &x, &Cone::default()).unwrap();
        let tw = tangential_weighted_lower_bound(&env, &axis(d), &x, &Cone::default()).unwrap();
        assert!(tw.value > ns.value);
        assert!(tw.iterations <= FIXED_POINT_ITER);
    }

    #[test]
    fn outside_cone_is_rejected() {
        let env = EnvelopeParams::model(2, 2.0, 1.0, 1.0);
        let z = CVector::new(vec![c(0.5, 0.0), c(-0.01, 0.0)]);
        let x = CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(normal_slice_lower_bound(&env, &z, &x, &Cone::default()).is_err());
    }
}
