//! Signed distance to `{r = 0}`, nearest-point projection, normal frames and
//! the approach cone.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cvector::{c, random_unit, CVector};
use crate::domain::{DomainSpec, Shape};
use crate::error::{Error, Result};
use crate::expr::ScalarFieldExpr;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-10;
const SEED_STEPS: usize = 40;
const PARALLEL_TOL: f64 = 1e-6;

/// Nearest boundary point and outward unit normal there.
#[derive(Debug, Clone)]
pub struct Projection {
    pub point: CVector,
    /// Outward unit normal as a complex vector `a + i b` (real coordinates
    /// `(a_1, b_1, ...)`).
    pub normal: CVector,
    pub distance: f64,
    /// `r` at the query point is negative.
    pub inside: bool,
}

impl Projection {
    pub fn signed_distance(&self) -> f64 {
        if self.inside {
            -self.distance
        } else {
            self.distance
        }
    }

    fn from_base(self, dom: &DomainSpec) -> Projection {
        Projection {
            point: dom.frame.from_base(&self.point),
            normal: dom.frame.vec_from_base(&self.normal),
            ..self
        }
    }
}

/// `delta(z)`: negative inside, positive outside, absolute value the
/// distance from `z` to `{r = 0}`.
pub fn signed_distance(dom: &DomainSpec, z: &CVector) -> Result<f64> {
    z.check_dim(dom.dim())?;
    let w = dom.frame.to_base(z);
    if let Shape::Ball { radius } = dom.shape {
        return Ok(w.norm() - radius);
    }
    Ok(project_base(dom, &w)?.signed_distance())
}

/// Nearest point on `{r = 0}`; requires the query to be inside the declared
/// tubular neighbourhood when one is declared.
pub fn boundary_projection(dom: &DomainSpec, z: &CVector) -> Result<Projection> {
    z.check_dim(dom.dim())?;
    let w = dom.frame.to_base(z);
    let p = project_base(dom, &w)?;
    if let Some(t) = dom.tubular_radius {
        if p.distance > t {
            return Err(Error::OutsideTubular(format!(
                "depth {:.3e} exceeds the tubular radius {t:.3e}",
                p.distance
            )));
        }
    }
    Ok(p.from_base(dom))
}

pub(crate) fn project_base(dom: &DomainSpec, w: &CVector) -> Result<Projection> {
    match &dom.shape {
        Shape::Ball { radius } => {
            let nw = w.norm();
            if nw == 0.0 {
                return Err(Error::OutsideTubular(
                    "the centre of a ball has no unique nearest boundary point".into(),
                ));
            }
            let normal = w.scale_real(1.0 / nw);
            Ok(Projection {
                point: normal.scale_real(*radius),
                normal,
                distance: (nw - radius).abs(),
                inside: nw < *radius,
            })
        }
        Shape::HalfSpace => {
            let n = w.dim();
            let mut point = w.clone();
            point[n - 1].re = 0.0;
            Ok(Projection {
                point,
                normal: CVector::unit(n, n - 1),
                distance: w.last().re.abs(),
                inside: w.last().re < 0.0,
            })
        }
        Shape::Generic => project_generic(&dom.field, w),
    }
}

fn value_grad_hess(f: &ScalarFieldExpr, x: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let jet = f.jet(&CVector::from_real(x))?;
    let m = x.len();
    Ok((
        jet.v,
        DVector::from_vec(jet.g.clone()),
        DMatrix::from_row_slice(m, m, &jet.h),
    ))
}

/// Damped Newton on the Lagrange system of `min |p - x|^2` subject to
/// `r(p) = 0`, seeded by Newton steps along the gradient.
fn project_generic(f: &ScalarFieldExpr, w: &CVector) -> Result<Projection> {
    let x = DVector::from_vec(w.to_real());
    let m = x.len();
    let r0 = f.value(w);
    let inside = r0 < 0.0;
    if r0 == 0.0 {
        let (_, g, _) = value_grad_hess(f, x.as_slice())?;
        let gn = g.norm();
        if gn == 0.0 {
            return Err(Error::Degenerate("vanishing gradient on the boundary".into()));
        }
        return Ok(Projection {
            point: w.clone(),
            normal: CVector::from_real((g / gn).as_slice()),
            distance: 0.0,
            inside: false,
        });
    }

    // seed
    let mut p = x.clone();
    for _ in 0..SEED_STEPS {
        let (v, g, _) = value_grad_hess(f, p.as_slice())?;
        let gg = g.norm_squared();
        if gg == 0.0 {
            return Err(Error::Degenerate("vanishing gradient during projection".into()));
        }
        if v.abs() <= TOL * (1.0 + gg.sqrt()) {
            break;
        }
        p -= &g * (v / gg);
    }
    let (_, g, _) = value_grad_hess(f, p.as_slice())?;
    let mut lambda = -(&p - &x).dot(&g) / g.norm_squared();

    let residual = |p: &DVector<f64>, lambda: f64| -> Result<(f64, DVector<f64>)> {
        let (v, g, _) = value_grad_hess(f, p.as_slice())?;
        let mut res = DVector::zeros(m + 1);
        res.rows_mut(0, m).copy_from(&(p - &x + &g * lambda));
        res[m] = v;
        Ok((res.norm(), res))
    };

    let (mut rn, mut res) = residual(&p, lambda)?;
    let mut best = rn;
    let mut iter = 0;
    while rn > TOL && iter < MAX_ITER {
        iter += 1;
        let (_, g, h) = value_grad_hess(f, p.as_slice())?;
        let mut jac = DMatrix::zeros(m + 1, m + 1);
        let top = DMatrix::identity(m, m) + &h * lambda;
        jac.view_mut((0, 0), (m, m)).copy_from(&top);
        for i in 0..m {
            jac[(i, m)] = g[i];
            jac[(m, i)] = g[i];
        }
        let step = match jac.lu().solve(&(-&res)) {
            Some(s) => s,
            None => break,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let pn = &p + step.rows(0, m) * t;
            let ln = lambda + step[m] * t;
            if let Ok((nn, nres)) = residual(&pn, ln) {
                if nn < rn * (1.0 - 1e-4 * t) || nn <= TOL {
                    p = pn;
                    lambda = ln;
                    rn = nn;
                    res = nres;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        best = best.min(rn);
        if !accepted {
            break;
        }
    }
    let (v, g, _) = value_grad_hess(f, p.as_slice())?;
    let gn = g.norm();
    let scale = 1.0 + x.norm();
    if !(v.abs() <= TOL * gn.max(1.0) * scale) || gn == 0.0 {
        return Err(Error::NoConvergence { residual: best });
    }
    let d = &x - &p;
    let dist = d.norm();
    let normal = &g / gn;
    if dist > 1e-12 * scale {
        let cosang = (d.dot(&normal) / dist).abs().min(1.0);
        if cosang.acos() > PARALLEL_TOL {
            return Err(Error::NoConvergence { residual: best });
        }
    }
    Ok(Projection {
        point: CVector::from_real(p.as_slice()),
        normal: CVector::from_real(normal.as_slice()),
        distance: dist,
        inside,
    })
}

/// Real and complex normal vectors built from the signed-distance gradient.
#[derive(Debug, Clone)]
pub struct NormalFrame {
    /// `n_p` in real coordinates `(x_1, y_1, ...)`.
    pub real: Vec<f64>,
    /// Coefficients of `N_p = 2 sqrt 2 sum (d delta / d zbar_j) d/dz_j`.
    pub complex: CVector,
    /// `d delta / d z_j`.
    pub d_delta: CVector,
}

impl NormalFrame {
    /// Builds both normals from the unit gradient `a + i b` of `delta`.
    pub fn from_unit_gradient(grad: &CVector) -> Self {
        let s2 = std::f64::consts::SQRT_2;
        // d delta / d zbar_j = (a_j + i b_j) / 2
        let complex = CVector(grad.0.iter().map(|g| 2.0 * s2 * 0.5 * g).collect());
        // Re(c d/dz) has real coordinates (Re c / 2, Im c / 2)
        let real = complex
            .0
            .iter()
            .flat_map(|cj| [s2 * 0.5 * cj.re, s2 * 0.5 * cj.im])
            .collect();
        let d_delta = CVector(grad.0.iter().map(|g| 0.5 * g.conj()).collect());
        NormalFrame {
            real,
            complex,
            d_delta,
        }
    }
}

pub fn normal_vectors(dom: &DomainSpec, p: &CVector) -> Result<NormalFrame> {
    let proj = boundary_projection(dom, p)?;
    Ok(NormalFrame::from_unit_gradient(&proj.normal))
}

/// `-Re z_n > k |z|`.
pub fn cone_membership(z: &CVector, k: f64) -> bool {
    -z.last().re > k * z.norm()
}

/// Boundary points found by bisection along seeded random rays from the
/// witness point (base coordinates).
pub fn boundary_samples_base(dom: &DomainSpec, count: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dom.dim();
    let w0 = dom.witness_point.clone();
    let r = |w: &CVector| dom.field.value(w);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count.max(1) {
        attempts += 1;
        let dir = random_unit(n, &mut rng);
        // first sign change of r before leaving the enclosing ball
        let reach = ray_exit(&w0, &dir, dom.enclosing_radius);
        let steps = 256;
        let mut prev = 0.0;
        let mut hit = None;
        for s in 1..=steps {
            let t = reach * s as f64 / steps as f64;
            if r(&(&w0 + &dir.scale_real(t))) >= 0.0 {
                hit = Some((prev, t));
                break;
            }
            prev = t;
        }
        let Some((mut lo, mut hi)) = hit else { continue };
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if r(&(&w0 + &dir.scale_real(mid))) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(&w0 + &dir.scale_real(0.5 * (lo + hi)));
    }
    out
}

/// Largest `t` with `|w0 + t dir| <= R` (`dir` a unit vector, `|w0| < R`).
fn ray_exit(w0: &CVector, dir: &CVector, radius: f64) -> f64 {
    let b = w0.inner(dir).re;
    let cc = w0.norm_sqr() - radius * radius;
    -b + (b * b - cc).max(0.0).sqrt()
}

/// Checks that projections from depth `radius` along inner normals return
/// to their base boundary point (to `1e-8`) on a sample of the boundary.
pub fn validate_tubular_radius(dom: &DomainSpec, radius: f64, samples: usize, seed: u64) -> Result<()> {
    for b in boundary_samples_base(dom, samples, seed) {
        let base = project_base(dom, &b)?;
        let nu = base.normal.clone();
        for frac in [0.5, 1.0] {
            let z = &b - &nu.scale_real(frac * radius);
            if dom.base_value(&z) >= 0.0 {
                continue;
            }
            let p = project_base(dom, &z)?;
            if p.point.dist(&b) > 1e-8 {
                return Err(Error::Validation(format!(
                    "projection from depth {:.3e} is not unique near {:?}",
                    frac * radius,
                    b.0
                )));
            }
        }
    }
    Ok(())
}

/// Shorthand used in tests and examples: the point `(0, ..., 0, -delta)`.
pub fn inner_axis_point(n: usize, delta: f64) -> CVector {
    let mut z = CVector::zeros(n);
    z[n - 1] = c(-delta, 0.0);
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Regularity;
    use crate::parse::parse_field;

    fn dom(src: &str, n: usize, witness: CVector) -> DomainSpec {
        DomainSpec::new("t", parse_field(src, n).unwrap(), 1.0, Regularity::RealAnalytic, witness, None)
            .unwrap()
    }

    #[test]
    fn ball_distances() {
        let b = dom("+ + abs2(1) abs2(2) -1", 2, CVector::zeros(2));
        assert_eq!(signed_distance(&b, &CVector::zeros(2)).unwrap(), -1.0);
        let z = CVector::new(vec![c(1.5, 0.0), c(0.0, 0.0)]);
        assert!((signed_distance(&b, &z).unwrap() - 0.5).abs() < 1e-15);
        let p = boundary_projection(&b, &CVector::new(vec![c(0.5, 0.0), c(0.0, 0.0)])).unwrap();
        assert!(p.point.dist(&CVector::unit(2, 0)) < 1e-15);
        assert!(p.normal.dist(&CVector::unit(2, 0)) < 1e-15);
    }

    #[test]
    fn saddle_projection_matches_mesh_minimum() {
        let s = dom("+ re(2) * -1 abs2(1)", 2, inner_axis_point(2, 0.5));
        let delta = 1e-3;
        let z = inner_axis_point(2, delta);
        let d = signed_distance(&s, &z).unwrap();
        // boundary parametrised by w1, w2 = |w1|^2 + i t; distance to (0, -delta)
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            let rho = 0.02 * i as f64 / 400.0;
            best = best.min((rho * rho + (rho * rho + delta).powi(2)).sqrt());
        }
        assert!((d + best).abs() < 1e-8, "{d} vs {best}");
        let p = boundary_projection(&s, &z).unwrap();
        assert!(p.point.norm() < 1e-9);
        assert!(p.normal.dist(&CVector::unit(2, 1)) < 1e-9);
    }

    #[test]
    fn generic_projection_hits_zero_set_along_normal() {
        let e = dom("+ + abs2(1) * 4 abs2(2) -0.5", 2, CVector::zeros(2));
        let z = CVector::new(vec![c(0.3, 0.1), c(0.05, -0.12)]);
        let p = boundary_projection(&e, &z).unwrap();
        assert!(e.field.value(&p.point).abs() < 1e-10);
        let d = &z - &p.point;
        let cosang = d.inner(&p.normal).re / d.norm();
        assert!((cosang.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn halfspace_projection_is_affine() {
        let h = dom("re(2)", 2, inner_axis_point(2, 0.5));
        let z = CVector::new(vec![c(0.2, 0.1), c(-0.01, 0.3)]);
        let p = boundary_projection(&h, &z).unwrap();
        assert!(p.point.dist(&CVector::new(vec![c(0.2, 0.1), c(0.0, 0.3)])) < 1e-15);
        assert!((p.signed_distance() + 0.01).abs() < 1e-15);
    }

    #[test]
    fn normal_identities() {
        let b = dom("+ + abs2(1) abs2(2) -1", 2, CVector::zeros(2));
        let p = CVector::new(vec![c(0.9, 0.0), c(0.0, 0.0)]);
        let nf = normal_vectors(&b, &p).unwrap();
        let re: Vec<f64> = nf
            .complex
            .0
            .iter()
            .flat_map(|z| [std::f64::consts::SQRT_2 * 0.5 * z.re, std::f64::consts::SQRT_2 * 0.5 * z.im])
            .collect();
        assert_eq!(re, nf.real);
        let pairing = nf.d_delta.pair(&nf.complex).norm();
        assert!((pairing - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(nf.complex[1].norm() < 1e-15);
    }

    #[test]
    fn cone_examples() {
        assert!(cone_membership(&CVector::new(vec![c(0.0, 0.0), c(-1.0, 0.0)]), 0.5));
        assert!(!cone_membership(&CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]), 0.1));
        assert!(!cone_membership(&CVector::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]), 0.8));
    }

    #[test]
    fn tubular_radius_validation() {
        let b = dom("+ + abs2(1) abs2(2) -1", 2, CVector::zeros(2));
        assert!(validate_tubular_radius(&b, 0.5, 20, 3).is_ok());
        assert_eq!(boundary_samples_base(&b, 10, 1).len(), 10);
    }
}
