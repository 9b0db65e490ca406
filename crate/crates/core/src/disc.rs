//! Analytic discs with rational coordinates and certification that a disc
//! lies inside a region.
//!
//! A disc is `Phi(zeta) = post(Psi(zeta))` where each coordinate of `Psi`
//! is `p_j(zeta) / (1 - beta_j zeta)` with a polynomial `p_j` and a pole
//! `1 / beta_j` outside the closed unit disc, and `post` is an optional
//! change of frame (unitary plus translation). Polynomial discs have no
//! poles.

use crate::cvector::{c, CVector, C64};
use crate::domain::Frame;
use crate::error::{Error, Result};
use crate::interval::{CInterval, Interval};
use crate::par;
use crate::region::Region;

/// Largest admissible pole parameter `|beta_j|`.
pub const MAX_POLE: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDisc {
    /// Numerator coefficients by degree.
    pub coeffs: Vec<CVector>,
    pub poles: Option<CVector>,
    /// `Phi = post.from_base(Psi)`.
    pub post: Option<Frame>,
}

impl AnalyticDisc {
    pub fn new(coeffs: Vec<CVector>) -> Result<Self> {
        Self::rational(coeffs, None)
    }

    pub fn rational(coeffs: Vec<CVector>, poles: Option<CVector>) -> Result<Self> {
        let n = coeffs
            .first()
            .ok_or_else(|| Error::InvalidArgument("disc needs a constant term".into()))?
            .dim();
        for cf in &coeffs {
            cf.check_dim(n)?;
            if !cf.is_finite() {
                return Err(Error::InvalidArgument("non-finite disc coefficient".into()));
            }
        }
        if let Some(b) = &poles {
            b.check_dim(n)?;
            if b.0.iter().any(|x| !(x.norm() <= MAX_POLE)) {
                return Err(Error::InvalidArgument(format!(
                    "pole parameters must satisfy |beta| <= {MAX_POLE}"
                )));
            }
        }
        Ok(AnalyticDisc {
            coeffs,
            poles,
            post: None,
        })
    }

    /// `z + zeta v`.
    pub fn linear(z: &CVector, v: &CVector) -> Self {
        AnalyticDisc {
            coeffs: vec![z.clone(), v.clone()],
            poles: None,
            post: None,
        }
    }

    /// `Psi_j = z_j + mu (X_j zeta + zeta^2 e_j(zeta)) / (1 - beta_j zeta)`
    /// with `e_j = sum_d extra[d]_j zeta^d`. Then `Psi(0) = z` and
    /// `Psi'(0) = mu X`; with `extra` empty each coordinate is a Möbius
    /// image of the disc.
    pub fn shaped(z: &CVector, mu: f64, x: &CVector, poles: Option<&CVector>, extra: &[CVector]) -> Self {
        let n = z.dim();
        let mut p1 = x.scale_real(mu);
        if let Some(b) = poles {
            for j in 0..n {
                p1[j] -= b[j] * z[j];
            }
        }
        let mut coeffs = vec![z.clone(), p1];
        coeffs.extend(extra.iter().map(|e| e.scale_real(mu)));
        AnalyticDisc {
            coeffs,
            poles: poles.cloned(),
            post: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn pole(&self, j: usize) -> C64 {
        self.poles.as_ref().map_or(c(0.0, 0.0), |b| b[j])
    }

    /// `Psi(zeta)` (before the change of frame).
    pub fn eval_inner(&self, zeta: C64) -> CVector {
        let n = self.dim();
        let deg = self.degree();
        CVector(
            (0..n)
                .map(|j| {
                    let mut acc = self.coeffs[deg][j];
                    for d in (0..deg).rev() {
                        acc = acc * zeta + self.coeffs[d][j];
                    }
                    acc / (C64::new(1.0, 0.0) - self.pole(j) * zeta)
                })
                .collect(),
        )
    }

    pub fn eval(&self, zeta: C64) -> CVector {
        let v = self.eval_inner(zeta);
        match &self.post {
            Some(f) => f.from_base(&v),
            None => v,
        }
    }

    pub fn center(&self) -> CVector {
        self.eval(c(0.0, 0.0))
    }

    /// `Phi'(0)`.
    pub fn derivative_at_zero(&self) -> CVector {
        let n = self.dim();
        let d = CVector(
            (0..n)
                .map(|j| {
                    let p1 = self.coeffs.get(1).map_or(c(0.0, 0.0), |v| v[j]);
                    p1 + self.pole(j) * self.coeffs[0][j]
                })
                .collect(),
        );
        match &self.post {
            Some(f) => f.vec_from_base(&d),
            None => d,
        }
    }

    /// `mu` with `Phi'(0) = mu X`, if `Phi'(0)` is a nonnegative multiple of
    /// `X` to relative tolerance `tol`.
    pub fn scale_along(&self, x: &CVector, tol: f64) -> Option<f64> {
        let d = self.derivative_at_zero();
        let mu = d.inner(x) / x.norm_sqr();
        let resid = (&d - &x.scale(mu)).norm();
        let scale = d.norm().max(1e-300);
        (mu.re >= 0.0 && mu.im.abs() <= tol * mu.norm().max(1e-300) && resid <= tol * scale)
            .then_some(mu.re)
    }

    /// The same disc expressed in the base coordinates of `frame`.
    pub fn to_base(&self, frame: &Frame) -> Result<AnalyticDisc> {
        if self.post.as_ref() == Some(frame) {
            return Ok(AnalyticDisc {
                post: None,
                ..self.clone()
            });
        }
        let plain = self.without_post()?;
        if frame.is_identity() {
            return Ok(plain);
        }
        if plain.poles.is_some() {
            return Err(Error::InvalidArgument(
                "a rational disc can only be moved into the frame it was built in".into(),
            ));
        }
        Ok(plain.map_coeffs(|d, cf| if d == 0 { frame.to_base(cf) } else { frame.vec_to_base(cf) }))
    }

    /// Attach a change of frame: the result is `frame.from_base(Phi)`.
    pub fn from_base(&self, frame: &Frame) -> AnalyticDisc {
        if frame.is_identity() {
            return self.clone();
        }
        match (&self.post, &self.poles) {
            (None, None) => self.map_coeffs(|d, cf| {
                if d == 0 {
                    frame.from_base(cf)
                } else {
                    frame.vec_from_base(cf)
                }
            }),
            (None, Some(_)) => AnalyticDisc {
                post: Some(frame.clone()),
                ..self.clone()
            },
            (Some(inner), _) => {
                // frame.from_base(inner.from_base(w)) = (U_i U_f)^* w + frame.from_base(t_i)
                let composed = Frame {
                    u: inner.u.compose(&frame.u),
                    shift: frame.from_base(&inner.shift),
                };
                AnalyticDisc {
                    post: Some(composed),
                    ..self.clone()
                }
            }
        }
    }

    fn without_post(&self) -> Result<AnalyticDisc> {
        match &self.post {
            None => Ok(self.clone()),
            Some(f) if self.poles.is_none() => Ok(AnalyticDisc {
                post: None,
                ..self.clone()
            }
            .from_base(f)),
            Some(_) => Err(Error::InvalidArgument(
                "a rational disc can only be moved into the frame it was built in".into(),
            )),
        }
    }

    fn map_coeffs(&self, f: impl Fn(usize, &CVector) -> CVector) -> AnalyticDisc {
        AnalyticDisc {
            coeffs: self.coeffs.iter().enumerate().map(|(d, cf)| f(d, cf)).collect(),
            poles: self.poles.clone(),
            post: self.post.clone(),
        }
    }

    /// Numerator coefficients as `[[re, im], ...]` per degree.
    pub fn coefficient_table(&self) -> Vec<Vec<[f64; 2]>> {
        self.coeffs
            .iter()
            .map(|cf| cf.0.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }

    pub fn pole_table(&self) -> Option<Vec<[f64; 2]>> {
        self.poles
            .as_ref()
            .map(|b| b.0.iter().map(|z| [z.re, z.im]).collect())
    }

    /// Enclosures of `Phi o m` and `(Phi o m)'` over the square of
    /// half-side `h` around `zc`, where `m` is the disc automorphism
    /// `(zeta + s) / (1 + conj(s) zeta)` (the identity for `s = None`).
    fn enclose(&self, s: Option<C64>, zc: C64, h: f64) -> (Vec<CInterval>, Vec<CInterval>) {
        let n = self.dim();
        let deg = self.degree();
        let one = CInterval::point(c(1.0, 0.0));
        let zbox = CInterval::around(zc, h);
        let (z, chain) = match s {
            None => (zbox, None),
            Some(s) => {
                let den = one + zbox.scale(s.conj());
                let dm = CInterval::point(c(1.0 - s.norm_sqr(), 0.0)) / (den * den);
                // mean value form; direct evaluation loses the cancellation
                // between numerator and denominator
                let w = CInterval::point(automorphism(Some(s), zc)) + dm * CInterval::around(c(0.0, 0.0), h);
                (w, Some(dm))
            }
        };
        let at_center = self.eval_inner(automorphism(s, zc));
        let dz = CInterval::around(c(0.0, 0.0), h);
        let mut vals = Vec::with_capacity(n);
        let mut ders = Vec::with_capacity(n);
        for j in 0..n {
            let beta = self.pole(j);
            // numerator of the derivative, p' q + beta p, expanded in powers
            // of the variable so that its cancellations are exact
            let coeff = |k: usize| if k <= deg { self.coeffs[k][j] } else { c(0.0, 0.0) };
            let mut num = CInterval::point(c(0.0, 0.0));
            for k in (0..=deg).rev() {
                let nk = coeff(k + 1) * (k as f64 + 1.0) - beta * coeff(k) * (k as f64 - 1.0);
                num = num * z + CInterval::point(nk);
            }
            let mut der = if beta == c(0.0, 0.0) {
                num
            } else {
                let q = one - z.scale(beta);
                num / (q * q)
            };
            if let Some(dm) = chain {
                der = der * dm;
            }
            // Psi(m(zeta)) - Psi(m(zc)) = (average derivative on the segment) (zeta - zc)
            vals.push(CInterval::point(at_center[j]) + der * dz);
            ders.push(der);
        }
        match &self.post {
            None => (vals, ders),
            Some(f) => (apply_frame(f, &vals, true), apply_frame(f, &ders, false)),
        }
    }

    /// Automorphism parameter spreading out the neighbourhood of the pole
    /// closest to the unit circle, or `None` when every pole is far from it.
    ///
    /// For the pole `1 / beta` with `kappa = 1 - |beta|` the parameter is
    /// `s = t conj(beta) / |beta|` with `(1 - t) / (1 + t) = sqrt(kappa)`,
    /// which balances the resolution needed near the pole against the
    /// compression at the opposite side of the circle.
    fn certification_parameter(&self) -> Option<C64> {
        let b = self
            .poles
            .as_ref()?
            .0
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        let kappa = 1.0 - b.norm();
        if kappa >= REPARAM_BELOW {
            return None;
        }
        let q = kappa.sqrt();
        let t = (1.0 - q) / (1.0 + q);
        Some(b.conj() * (t / b.norm()))
    }
}

/// Poles with `1 - |beta|` below this are certified after reparametrization.
const REPARAM_BELOW: f64 = 0.05;

fn automorphism(s: Option<C64>, zeta: C64) -> C64 {
    match s {
        None => zeta,
        Some(s) => (zeta + s) / (C64::new(1.0, 0.0) + s.conj() * zeta),
    }
}

fn apply_frame(f: &Frame, v: &[CInterval], affine: bool) -> Vec<CInterval> {
    let n = v.len();
    // from_base: U^* w + shift
    (0..n)
        .map(|j| {
            let mut acc = if affine {
                CInterval::point(f.shift[j])
            } else {
                CInterval::point(c(0.0, 0.0))
            };
            for (k, vk) in v.iter().enumerate() {
                acc = acc + vk.scale(f.u.0[(k, j)].conj());
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub radii: usize,
    pub angles: usize,
    /// Extra subdivision levels allowed per initial cell.
    pub max_depth: u32,
    /// Leaf cells allowed per initial cell.
    pub cell_budget: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            radii: 64,
            angles: 256,
            max_depth: 10,
            cell_budget: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub ok: bool,
    /// When `ok`, a certified lower bound for `-value` on the image of the
    /// closed disc; otherwise minus the largest sampled value.
    pub margin: f64,
    pub cells: usize,
}

#[derive(Clone, Copy)]
struct Cell {
    r0: f64,
    r1: f64,
    t0: f64,
    t1: f64,
}

impl Cell {
    fn center(&self) -> C64 {
        C64::from_polar(0.5 * (self.r0 + self.r1), 0.5 * (self.t0 + self.t1))
    }

    /// Largest distance from the centre to a point of the cell. The arc
    /// bulges by at most `r1 (1 - cos(dt / 2))` beyond the corner chord.
    fn reach(&self, ctr: C64) -> f64 {
        let mut h: f64 = 0.0;
        for r in [self.r0, self.r1] {
            for t in [self.t0, self.t1] {
                h = h.max((C64::from_polar(r, t) - ctr).norm());
            }
        }
        let bulge = self.r1 * (1.0 - (0.5 * (self.t1 - self.t0)).cos());
        (h + bulge) * (1.0 + 1e-12)
    }

    fn split(&self) -> [Cell; 4] {
        let rm = 0.5 * (self.r0 + self.r1);
        let tm = 0.5 * (self.t0 + self.t1);
        [
            Cell { r1: rm, t1: tm, ..*self },
            Cell { r1: rm, t0: tm, ..*self },
            Cell { r0: rm, t1: tm, ..*self },
            Cell { r0: rm, t0: tm, ..*self },
        ]
    }
}

fn to_box(v: &[CInterval]) -> Vec<Interval> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Enclosure of `(cos t, sin t)` for `t` in `[t0, t1]`.
fn cos_sin_range(t0: f64, t1: f64) -> (Interval, Interval) {
    let (mut clo, mut chi) = (t0.cos().min(t1.cos()), t0.cos().max(t1.cos()));
    let (mut slo, mut shi) = (t0.sin().min(t1.sin()), t0.sin().max(t1.sin()));
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut k = (t0 / half_pi).ceil() as i64;
    while (k as f64) * half_pi <= t1 {
        match k.rem_euclid(4) {
            0 => chi = 1.0,
            1 => shi = 1.0,
            2 => clo = -1.0,
            _ => slo = -1.0,
        }
        k += 1;
    }
    let pad = 4.0 * f64::EPSILON;
    (
        Interval::new(clo - pad, chi + pad),
        Interval::new(slo - pad, shi + pad),
    )
}

/// Upper bound for the region value over the image of a cell.
///
/// Each piece `f` of the region is bounded three ways and the smallest
/// bound is kept: the interval enclosure over the image box; the mean value
/// form around the cell centre; and a polar form anchored at the middle of
/// the outer arc, which moves along the arc and then radially inward, so
/// that at a boundary maximum only the (small) tangential derivative
/// contributes.
fn cell_bound<R: Region + ?Sized>(region: &R, disc: &AnalyticDisc, s: Option<C64>, cell: &Cell) -> f64 {
    let ctr = cell.center();
    let h = cell.reach(ctr);
    let (vals, ders) = disc.enclose(s, ctr, h);
    let b = to_box(&vals);
    let center = disc.eval(automorphism(s, ctr));
    let tm = 0.5 * (cell.t0 + cell.t1);
    let anchor = disc.eval(automorphism(s, C64::from_polar(cell.r1, tm)));
    let at_center = region.piece_values(&center);
    let at_anchor = region.piece_values(&anchor);
    let (cs, sn) = cos_sin_range(cell.t0, cell.t1);
    let arc = cell.r1 * 0.5 * (cell.t1 - cell.t0) * (1.0 + 1e-12);
    let depth = cell.r1 - cell.r0;
    let scale = 1.0 + center.norm_sqr() + anchor.norm_sqr();
    let mut worst = f64::NEG_INFINITY;
    for (k, piece) in region.pieces(&b).into_iter().enumerate() {
        let mut bound = piece.value.hi;
        if let Some(g) = piece.gradient {
            // d/ds and d/dt of f(Phi(s + i t))
            let mut ds = Interval::point(0.0);
            let mut dt = Interval::point(0.0);
            for (j, d) in ders.iter().enumerate() {
                let (gx, gy) = (g[2 * j], g[2 * j + 1]);
                ds = ds + gx * d.re + gy * d.im;
                dt = dt + gy * d.re - gx * d.im;
            }
            let fudge = 1e-12 * (at_center[k].abs() + at_anchor[k].abs() + scale);
            let centered = at_center[k] + ds.mag().hypot(dt.mag()) * h;
            let radial = ds * cs + dt * sn;
            let tangential = dt * cs - ds * sn;
            let polar = at_anchor[k] + arc * tangential.mag() + depth * (-radial.lo).max(0.0);
            bound = bound.min(centered.min(polar) + fudge);
        }
        if bound.is_nan() {
            return f64::INFINITY;
        }
        worst = worst.max(bound);
    }
    worst
}

/// Certifies that the image of the closed unit disc lies in the region.
pub fn certify_disc_containment<R: Region + ?Sized>(region: &R, disc: &AnalyticDisc) -> Containment {
    certify_with(region, disc, &CertifyOptions::default())
}

pub fn certify_with<R: Region + ?Sized>(region: &R, disc: &AnalyticDisc, opts: &CertifyOptions) -> Containment {
    let finite = disc.coeffs.iter().all(|cf| cf.is_finite())
        && disc.poles.as_ref().is_none_or(|b| b.0.iter().all(|x| x.norm() <= MAX_POLE));
    if !finite {
        return Containment {
            ok: false,
            margin: 0.0,
            cells: 0,
        };
    }
    // cheap rejection
    let pre = sampled_max(region, disc, 32, 128);
    if !(pre < 0.0) {
        return Containment {
            ok: false,
            margin: if pre.is_finite() { -pre } else { f64::NEG_INFINITY },
            cells: 0,
        };
    }
    // the image of the closed disc is unchanged by precomposition with an
    // automorphism
    let s = disc.certification_parameter();
    let two_pi = 2.0 * std::f64::consts::PI;
    let (nr, na) = (opts.radii, opts.angles);
    let results = par::map_range(nr * na, |idx| {
        let (i, k) = (idx / na, idx % na);
        let root = Cell {
            r0: i as f64 / nr as f64,
            r1: (i + 1) as f64 / nr as f64,
            t0: two_pi * k as f64 / na as f64,
            t1: two_pi * (k + 1) as f64 / na as f64,
        };
        let mut stack = vec![(root, 0u32)];
        let mut margin = f64::INFINITY;
        let mut leaves = 0usize;
        while let Some((cell, depth)) = stack.pop() {
            let b = cell_bound(region, disc, s, &cell);
            if b < 0.0 {
                margin = margin.min(-b);
                leaves += 1;
                continue;
            }
            if depth >= opts.max_depth || leaves + stack.len() + 4 > opts.cell_budget {
                return (false, 0.0, leaves);
            }
            for sub in cell.split() {
                stack.push((sub, depth + 1));
            }
        }
        (true, margin, leaves)
    });
    let cells = results.iter().map(|r| r.2).sum();
    if results.iter().all(|r| r.0) {
        let margin = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        Containment {
            ok: margin > 0.0,
            margin,
            cells,
        }
    } else {
        Containment {
            ok: false,
            margin: -pre,
            cells,
        }
    }
}

/// Largest sampled region value over a polar grid of the closed unit disc
/// (including the centre and the unit circle).
pub fn sampled_max<R: Region + ?Sized>(region: &R, disc: &AnalyticDisc, radii: usize, angles: usize) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let rows = par::map_range(radii, |i| {
        let r = (i + 1) as f64 / radii as f64;
        let mut m = f64::NEG_INFINITY;
        for k in 0..angles {
            let v = region.value(&disc.eval(C64::from_polar(r, two_pi * k as f64 / angles as f64)));
            m = m.max(if v.is_nan() { f64::INFINITY } else { v });
        }
        m
    });
    let c0 = region.value(&disc.eval(c(0.0, 0.0)));
    rows.into_iter().fold(c0, f64::max)
}

/// Soundness re-check at the dense grid (256 radii x 1024 angles).
pub fn resample_max<R: Region + ?Sized>(region: &R, disc: &AnalyticDisc) -> f64 {
    sampled_max(region, disc, 256, 1024)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::CanonicalDomain;
    use crate::cvector::Unitary;
    use rand::SeedableRng;

    fn scalar_disc(cs: &[C64]) -> AnalyticDisc {
        AnalyticDisc::new(cs.iter().map(|&v| CVector::new(vec![v])).collect()).unwrap()
    }

    #[test]
    fn half_scale_disc_is_inside_unit_disc() {
        let d = scalar_disc(&[c(0.0, 0.0), c(0.5, 0.0)]);
        let r = certify_disc_containment(&CanonicalDomain::UnitDisc, &d);
        assert!(r.ok);
        assert!(r.margin > 0.7 && r.margin <= 0.75, "{}", r.margin);
        assert!(resample_max(&CanonicalDomain::UnitDisc, &d) < 0.0);
    }

    #[test]
    fn identity_disc_is_rejected() {
        let d = scalar_disc(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(!certify_disc_containment(&CanonicalDomain::UnitDisc, &d).ok);
    }

    #[test]
    fn shaped_family_has_prescribed_jet() {
        let z = CVector::new(vec![c(0.1, 0.2), c(-0.3, 0.0)]);
        let x = CVector::new(vec![c(1.0, -1.0), c(0.5, 0.5)]);
        let poles = CVector::new(vec![c(0.3, -0.2), c(0.0, 0.6)]);
        let extra = vec![CVector::new(vec![c(0.2, 0.0), c(0.0, 0.1)])];
        let d = AnalyticDisc::shaped(&z, 0.7, &x, Some(&poles), &extra);
        assert!(d.center().dist(&z) < 1e-14);
        let mu = d.scale_along(&x, 1e-12).unwrap();
        assert!((mu - 0.7).abs() < 1e-13);
        let h = 1e-6;
        let fd = (&d.eval(c(h, 0.0)) - &d.eval(c(-h, 0.0))).scale_real(0.5 / h);
        assert!(fd.dist(&x.scale_real(0.7)) < 1e-8);
    }

    #[test]
    fn near_extremal_mobius_disc_is_certified() {
        // psi_z(tau zeta) shrunk by 1e-4 stays inside the unit disc
        let z = CVector::new(vec![c(0.6, 0.3)]);
        let x = CVector::new(vec![c(0.0, 1.0)]);
        let tau = c(0.0, 1.0);
        let beta = CVector::new(vec![-z[0].conj() * tau]);
        let mu = (1.0 - z.norm_sqr()) * (1.0 - 1e-4);
        let d = AnalyticDisc::shaped(&z, mu, &x, Some(&beta), &[]);
        let cert = certify_disc_containment(&CanonicalDomain::UnitDisc, &d);
        assert!(cert.ok, "{cert:?}");
        let exact = AnalyticDisc::shaped(&z, 1.0 - z.norm_sqr(), &x, Some(&beta), &[]);
        assert!(!certify_disc_containment(&CanonicalDomain::UnitDisc, &exact).ok);
    }

    #[test]
    fn half_plane_disc_with_pole_near_circle() {
        let z = CVector::new(vec![c(1.0, 0.0)]);
        let s = 0.99;
        let one = CVector::new(vec![c(1.0, 0.0)]);
        let beta = CVector::new(vec![c(s, 0.0)]);
        let d = AnalyticDisc::shaped(&z, (1.0 + s) * 0.999, &one, Some(&beta), &[]);
        assert!(certify_disc_containment(&CanonicalDomain::RightHalfPlane, &d).ok);
        let over = AnalyticDisc::shaped(&z, (1.0 + s) * 1.001, &one, Some(&beta), &[]);
        assert!(!certify_disc_containment(&CanonicalDomain::RightHalfPlane, &over).ok);
    }

    #[test]
    fn frames_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let frame = Frame {
            u: Unitary::random(2, &mut rng),
            shift: CVector::new(vec![c(0.1, 0.0), c(0.0, -0.2)]),
        };
        let z = CVector::new(vec![c(0.2, 0.0), c(0.0, 0.1)]);
        let x = CVector::new(vec![c(0.0, 1.0), c(1.0, 0.0)]);
        let zeta = c(0.3, -0.4);
        let poly = AnalyticDisc::shaped(&z, 0.3, &x, None, std::slice::from_ref(&x));
        let moved = poly.from_base(&frame);
        assert!(moved.eval(zeta).dist(&frame.from_base(&poly.eval(zeta))) < 1e-14);
        assert!(moved.to_base(&frame).unwrap().eval(zeta).dist(&poly.eval(zeta)) < 1e-14);

        let beta = CVector::new(vec![c(0.5, 0.0), c(0.0, 0.2)]);
        let rat = AnalyticDisc::shaped(&z, 0.3, &x, Some(&beta), &[]);
        let moved = rat.from_base(&frame);
        assert!(moved.eval(zeta).dist(&frame.from_base(&rat.eval(zeta))) < 1e-14);
        assert_eq!(moved.to_base(&frame).unwrap(), rat);
        let d = frame.vec_from_base(&rat.derivative_at_zero());
        assert!(moved.derivative_at_zero().dist(&d) < 1e-14);

        // a rotated copy certifies in the ball like the original
        let ball = CanonicalDomain::Ball(1.0);
        let rot = Frame {
            u: frame.u.clone(),
            shift: CVector::zeros(2),
        };
        assert!(certify_disc_containment(&ball, &rat).ok);
        assert!(certify_disc_containment(&ball, &rat.from_base(&rot)).ok);
    }
}
