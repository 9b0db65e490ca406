//! Upper bounds from explicit analytic discs whose containment is certified.

use nalgebra::DMatrix;

use crate::cvector::{c, CVector, Unitary, C64};
use crate::disc::{certify_disc_containment, sampled_max, AnalyticDisc, Containment};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::levi::{gradient_from_jet, holomorphic_hessian_from_jet, levi_from_jet};
use crate::lower::Cone;
use crate::par;
use crate::region::Region;

/// `F(z, X) <= value`, witnessed by a disc with `Phi(0) = z` and
/// `Phi'(0) = X / value`, given in the domain's coordinates.
#[derive(Debug, Clone)]
pub struct DiscUpper {
    pub value: f64,
    pub witness: AnalyticDisc,
    pub margin: f64,
    pub cells: usize,
}

const SHRINK_STEPS: usize = 14;
const BISECT_STEPS: usize = 40;

pub(crate) fn quick_feasible<R: Region + ?Sized>(region: &R, disc: &AnalyticDisc) -> bool {
    sampled_max(region, disc, 32, 128) < 0.0
}

/// Largest scale `s` (to relative tolerance `tol`) for which `make(s)`
/// passes the sampled containment check, by halving, doubling and
/// bisection from `s0`.
pub(crate) fn max_feasible_scale<R, F>(region: &R, s0: f64, s_max: f64, tol: f64, make: &F) -> Option<f64>
where
    R: Region + ?Sized,
    F: Fn(f64) -> Option<AnalyticDisc>,
{
    let feasible = |s: f64| make(s).is_some_and(|d| quick_feasible(region, &d));
    let mut s = s0.min(s_max);
    let mut tries = 0;
    while !feasible(s) {
        s *= 0.5;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    let mut hi = None;
    while s < s_max {
        let next = (2.0 * s).min(s_max);
        if feasible(next) {
            s = next;
        } else {
            hi = Some(next);
            break;
        }
    }
    if let Some(mut hi) = hi {
        for _ in 0..BISECT_STEPS {
            if hi - s <= tol * s {
                break;
            }
            let mid = 0.5 * (s + hi);
            if feasible(mid) {
                s = mid;
            } else {
                hi = mid;
            }
        }
    }
    Some(s)
}

/// Certifies `make(s (1 - 1e-4 2^k))` for `k = 0, 1, ...` and returns the
/// first success.
pub(crate) fn certify_shrinking<R, F>(region: &R, s: f64, make: &F) -> Option<(f64, AnalyticDisc, Containment)>
where
    R: Region + ?Sized,
    F: Fn(f64) -> Option<AnalyticDisc>,
{
    certify_shrinking_steps(region, s, make, SHRINK_STEPS)
}

/// [`certify_shrinking`] with at most `steps` attempts.
pub(crate) fn certify_shrinking_steps<R, F>(region: &R, s: f64, make: &F, steps: usize) -> Option<(f64, AnalyticDisc, Containment)>
where
    R: Region + ?Sized,
    F: Fn(f64) -> Option<AnalyticDisc>,
{
    for k in 0..steps.min(SHRINK_STEPS) {
        let t = s * (1.0 - 1e-4 * 2f64.powi(k as i32));
        if let Some(d) = make(t) {
            let cert = certify_disc_containment(region, &d);
            if cert.ok {
                return Some((t, d, cert));
            }
        }
    }
    None
}

pub(crate) fn max_certified_scale<R, F>(region: &R, s0: f64, s_max: f64, make: F) -> Option<(f64, AnalyticDisc, Containment)>
where
    R: Region + ?Sized,
    F: Fn(f64) -> Option<AnalyticDisc>,
{
    let s = max_feasible_scale(region, s0, s_max, 1e-6, &make)?;
    certify_shrinking(region, s, &make)
}

/// The disc family `Phi_1 = z_1 + c delta^{1-1/(2m)} Y_1 zeta + q zeta^2`,
/// `Phi_k = z_k + c delta^{1-1/(2m)} Y_k zeta` with `Y = X / X_n`, for
/// domains in the normal form `Re z_n - A|z_1|^m + ... < 0` near the origin.
///
/// For each `q` on a geometric grid below the enclosing radius the largest
/// certifiable `c` is found; the best pair gives
/// `F(z, X) <= |X_n| / (c delta^{1-1/(2m)})`.
pub fn disc_upper_bound_quadratic_family(dom: &DomainSpec, m: f64, z: &CVector, x: &CVector, cone: &Cone) -> Result<DiscUpper> {
    dom.check_interior(z)?;
    x.check_dim(dom.dim())?;
    let n = dom.dim();
    let xn = x.last();
    if xn.norm() == 0.0 {
        return Err(Error::Precondition("direction has no normal component".into()));
    }
    if x.norm() > cone.big_k * xn.norm() * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "direction outside the cone |X| <= {} |X_n|",
            cone.big_k
        )));
    }
    let delta = -z.last().re;
    if !(delta > cone.k * z.norm()) {
        return Err(Error::Precondition("point outside the approach cone".into()));
    }
    let y = x.scale(c(1.0, 0.0) / xn);
    let scale = delta.powf(1.0 - 1.0 / (2.0 * m));
    let frame = dom.frame.clone();
    let qs: Vec<f64> = (1..=24)
        .map(|j| dom.enclosing_radius * 2f64.powf(-(j as f64) / 2.0))
        .collect();
    let results = par::map(&qs, |&q| {
        let make = |cc: f64| {
            let mut quad = CVector::zeros(n);
            quad[0] = c(q, 0.0);
            AnalyticDisc::new(vec![z.clone(), y.scale_real(cc * scale), quad])
                .ok()?
                .to_base(&frame)
                .ok()
        };
        max_certified_scale(dom, 1.0, 1e6, make)
    });
    let best = results
        .into_iter()
        .flatten()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| {
            Error::CertificateUnavailable("no disc of the family is certified at this depth".into())
        })?;
    let (cc, disc, cert) = best;
    Ok(DiscUpper {
        value: xn.norm() / (cc * scale),
        witness: disc.from_base(&frame),
        margin: cert.margin,
        cells: cert.cells,
    })
}

/// Normalized coordinates `v = U(w - p)` at a boundary point (base
/// coordinates), with the holomorphic quadratic part of `r / |grad r|` on
/// the tangential variables.
struct LocalChart {
    point: CVector,
    rotation: Unitary,
    quadratic: DMatrix<C64>,
    gradient_norm: f64,
    /// Least restricted Levi eigenvalue of `r` and a unit eigenvector, in
    /// `v` coordinates.
    min_levi: Option<(f64, CVector)>,
}

impl LocalChart {
    fn at(dom: &DomainSpec, p: &CVector) -> Result<Self> {
        p.check_dim(dom.dim())?;
        let n = dom.dim();
        let pb = dom.frame.to_base(p);
        let jet = dom.field.jet(&pb)?;
        let dr = gradient_from_jet(&jet);
        let gnorm = 2.0 * dr.norm();
        if gnorm <= 1e-12 {
            return Err(Error::Degenerate("gradient vanishes at the boundary point".into()));
        }
        if dom.field.value(&pb).abs() > 1e-8 * gnorm.max(1.0) {
            return Err(Error::Precondition("point is not on the boundary".into()));
        }
        let rotation = Unitary::to_last_axis(&dr.conj())?;
        let ub = rotation.0.map(|x| x.conj());
        let hv = &ub * holomorphic_hessian_from_jet(&jet) * ub.transpose();
        let k = n - 1;
        let quadratic = DMatrix::from_fn(k, k, |a, b| hv[(a, b)] / gnorm);
        let levi = levi_from_jet(&jet);
        let min_levi = levi.restricted.and_then(|r| {
            let e = r.eigenvalues.first().copied()?;
            let v = rotation.apply(r.eigenvectors.first()?);
            Some((e, v))
        });
        Ok(LocalChart {
            point: pb,
            rotation,
            quadratic,
            gradient_norm: gnorm,
            min_levi,
        })
    }

    fn to_base_vec(&self, v: &CVector) -> CVector {
        self.rotation.adjoint().apply(v)
    }

    fn to_base_point(&self, v: &CVector) -> CVector {
        &self.to_base_vec(v) + &self.point
    }

    fn quad(&self, x: &CVector, y: &CVector) -> C64 {
        let k = self.quadratic.nrows();
        let mut s = c(0.0, 0.0);
        for a in 0..k {
            for b in 0..k {
                s += self.quadratic[(a, b)] * x[a] * y[b];
            }
        }
        s
    }

    /// `p + sigma zeta d - sigma^2 zeta^2 h(d̂, d̂) e_n` in base coordinates,
    /// `p` and `d` given in `v` coordinates.
    fn corrected_linear(&self, p: &CVector, d: &CVector, sigma: f64) -> Option<AnalyticDisc> {
        let n = p.dim();
        let mut q = CVector::zeros(n);
        q[n - 1] = -self.quad(d, d) * sigma * sigma;
        AnalyticDisc::new(vec![
            self.to_base_point(p),
            self.to_base_vec(&d.scale_real(sigma)),
            self.to_base_vec(&q),
        ])
        .ok()
    }
}

/// Witness of non-pseudoconvexity: a disc through `p_delta` with
/// `F(p_delta, X_delta) <= value`, all in the domain's coordinates.
#[derive(Debug, Clone)]
pub struct NonpscWitness {
    pub upper: DiscUpper,
    pub point: CVector,
    pub direction: CVector,
    /// `a` with least restricted Levi eigenvalue `-2a` of `r / |grad r|`.
    pub a: f64,
    /// `|<dr(p_delta), X_delta>|`.
    pub normal_pairing: f64,
    /// Scale of the certified disc relative to the reference disc.
    pub t: f64,
}

fn witness_along(
    dom: &DomainSpec,
    chart: &LocalChart,
    delta: f64,
    dir: &CVector,
    sigma0: f64,
) -> Result<(f64, AnalyticDisc, Containment, CVector, CVector)> {
    let n = dom.dim();
    let mut p = CVector::zeros(n);
    p[n - 1] = c(-delta, 0.0);
    let s_max = 4.0 * dom.enclosing_radius / dir.norm();
    let found = max_certified_scale(dom, sigma0, s_max, |s| chart.corrected_linear(&p, dir, s));
    let (sigma, disc, cert) = found.ok_or_else(|| {
        Error::CertificateUnavailable("no witness disc is certified at this depth".into())
    })?;
    let point = dom.frame.from_base(&chart.to_base_point(&p));
    let direction = dom.frame.vec_from_base(&chart.to_base_vec(dir));
    Ok((sigma, disc.from_base(&dom.frame), cert, point, direction))
}

fn pairing(dom: &DomainSpec, point: &CVector, x: &CVector) -> Result<f64> {
    let w = dom.frame.to_base(point);
    let g = crate::levi::wirtinger_gradient(&dom.field, &w)?;
    Ok(g.pair(&dom.frame.vec_to_base(x)).norm())
}

/// At a boundary point where the restricted Levi form has a negative
/// eigenvalue, the disc `(t zeta e / sqrt a, -delta + t delta^{1/2} zeta / 2)`
/// in normalized coordinates (with the holomorphic quadratic correction in
/// the normal coordinate) stays in the domain, so
/// `F(p_delta, X_delta) <= 1 / (t delta^{1/2})` with
/// `X_delta = (delta^{-1/2} e / sqrt a, 1/2)`. The largest certifiable `t`
/// is used.
pub fn disc_upper_bound_nonpsc(dom: &DomainSpec, p: &CVector, delta: f64) -> Result<NonpscWitness> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let chart = LocalChart::at(dom, p)?;
    let (lambda, e) = chart
        .min_levi
        .clone()
        .filter(|(l, _)| *l < 0.0)
        .ok_or_else(|| Error::Precondition("restricted Levi form has no negative eigenvalue".into()))?;
    let a = -lambda / (2.0 * chart.gradient_norm);
    let n = dom.dim();
    let mut dir = e.scale_real(delta.powf(-0.5) / a.sqrt());
    dir[n - 1] = c(0.5, 0.0);
    let (sigma, witness, cert, point, direction) = witness_along(dom, &chart, delta, &dir, delta.sqrt())?;
    let normal_pairing = pairing(dom, &point, &direction)?;
    Ok(NonpscWitness {
        upper: DiscUpper {
            value: 1.0 / sigma,
            witness,
            margin: cert.margin,
            cells: cert.cells,
        },
        point,
        direction,
        a,
        normal_pairing,
        t: sigma / delta.sqrt(),
    })
}

/// Upper bound for `F(p_delta, X)` where `p_delta = (0, ..., -delta)` and
/// `X` are given in the normalized coordinates at the boundary point `p`,
/// from the corrected linear discs `p_delta + sigma zeta X + O(zeta^2)`.
/// Returns the bound together with `p_delta` and `X` in domain coordinates.
pub fn disc_upper_bound_normal_family(
    dom: &DomainSpec,
    p: &CVector,
    delta: f64,
    x_local: &CVector,
) -> Result<(DiscUpper, CVector, CVector)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    x_local.check_dim(dom.dim())?;
    if x_local.norm() == 0.0 {
        return Err(Error::InvalidArgument("zero direction".into()));
    }
    let chart = LocalChart::at(dom, p)?;
    let sigma0 = 0.5 * delta / x_local.norm();
    let (sigma, witness, cert, point, direction) = witness_along(dom, &chart, delta, x_local, sigma0)?;
    Ok((
        DiscUpper {
            value: 1.0 / sigma,
            witness,
            margin: cert.margin,
            cells: cert.cells,
        },
        point,
        direction,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Regularity;
    use crate::parse::parse_field;

    fn axis(d: f64) -> CVector {
        CVector::new(vec![c(0.0, 0.0), c(-d, 0.0)])
    }

    fn nonpsc() -> DomainSpec {
        let f = parse_field("+ + re(2) * -1 abs2(1) abs2(2)", 2).unwrap();
        DomainSpec::new("nonpsc", f, 2.0, Regularity::RealAnalytic, axis(0.5), None).unwrap()
    }

    #[test]
    fn nonpsc_witness_scales_like_inverse_square_root() {
        let dom = nonpsc();
        let w = disc_upper_bound_nonpsc(&dom, &CVector::zeros(2), 1e-4).unwrap();
        assert!((w.a - 0.5).abs() < 1e-12);
        assert!(w.t >= 1.0, "t = {}", w.t);
        assert!(w.normal_pairing <= 1.0);
        // the witness passes through p_delta with derivative X_delta / value
        let d = w.upper.witness.derivative_at_zero();
        assert!(w.upper.witness.center().dist(&w.point) < 1e-12);
        assert!(d.dist(&w.direction.scale_real(1.0 / w.upper.value)) < 1e-12);
    }

    #[test]
    fn pseudoconvex_point_is_rejected() {
        let f = parse_field("+ re(2) abs2(1)", 2).unwrap();
        let dom = DomainSpec::new("psc", f, 2.0, Regularity::RealAnalytic, axis(0.5), None).unwrap();
        assert!(matches!(
            disc_upper_bound_nonpsc(&dom, &CVector::zeros(2), 1e-4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn quadratic_family_is_certified() {
        // Re z2 - |z1|^2 + |z2|^2 + |z2||z| in B(0, 4)
        let f = parse_field("+ + + re(2) * -1 abs2(1) abs2(2) * absp(2, 1) norm", 2).unwrap();
        let dom = DomainSpec::new("omega2", f, 4.0, Regularity::C2, axis(0.1), None).unwrap();
        let x = CVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let u = disc_upper_bound_quadratic_family(&dom, 2.0, &axis(1e-4), &x, &Cone::default()).unwrap();
        assert!(u.value.is_finite() && u.value > 0.0);
        let d = u.witness.derivative_at_zero();
        assert!(d.dist(&x.scale_real(1.0 / u.value)) < 1e-9);
        assert!(disc_upper_bound_quadratic_family(&dom, 2.0, &axis(2.0), &x, &Cone::default()).is_err());
    }
}
