//! Two-sided bounds for a single query, packaged as a serializable record.

use serde::Serialize;

use crate::canonical::{slit_complement_lower_bound, CanonicalDomain, Localization};
use crate::cvector::{CVector, C64};
use crate::disc::AnalyticDisc;
use crate::domain::{DomainSpec, Frame, Shape};
use crate::envelope::EnvelopeSummary;
use crate::error::Result;
use crate::holomap::{contraction_transfer, HoloMapSpec};
use crate::lower::{normal_estimate_c11, pseudoconvex_lower_bound, LocalizedLower, PipelineOptions};
use crate::optimize::{disc_upper_bound_optimize, optimize_in_domain, OptimizeOptions};
use crate::region::{Clipped, Region};
use crate::upper::DiscUpper;

pub const SCHEMA_VERSION: u32 = 1;

/// How the lower bound was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum LowerCertificate {
    /// Contraction into the complement of a segment.
    SlitReduction { segment: [[f64; 2]; 2] },
    /// Contraction by a holomorphic map into a canonical domain.
    ContractionMap { target: CanonicalDomain },
    /// Envelope estimate in a boundary patch, transferred by `tanh(ell_hat)`.
    Localized {
        /// Envelope exponent, 2 for the C^2 estimate and 3 for the
        /// pseudoconvex one.
        m: f64,
        factor: f64,
        patch_value: f64,
        envelope: EnvelopeSummary,
        localization: Localization,
        rescaling: f64,
        depth: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Query {
    pub domain: String,
    pub z: CVector,
    pub x: CVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margins {
    /// Certified `-max r` over the witness disc.
    pub containment: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub schema_version: u32,
    pub query: Query,
    pub lower: Option<f64>,
    pub lower_certificate: Option<LowerCertificate>,
    pub upper: Option<f64>,
    /// `[re, im]` of each coordinate, by degree, of the numerators of the
    /// witness disc in the domain's base coordinates (the query coordinates
    /// unless the domain carries a unitary frame).
    pub witness_coefficients: Option<Vec<Vec<[f64; 2]>>>,
    pub witness_poles: Option<Vec<[f64; 2]>>,
    pub margins: Option<Margins>,
    /// Reasons for missing sides.
    pub diagnostics: Vec<String>,
}

impl BoundResult {
    fn new(domain: &str, z: &CVector, x: &CVector) -> Self {
        BoundResult {
            schema_version: SCHEMA_VERSION,
            query: Query {
                domain: domain.to_string(),
                z: z.clone(),
                x: x.clone(),
            },
            lower: None,
            lower_certificate: None,
            upper: None,
            witness_coefficients: None,
            witness_poles: None,
            margins: None,
            diagnostics: Vec::new(),
        }
    }

    /// Records `u` with its witness expressed in `frame`'s base coordinates.
    fn set_upper(&mut self, u: DiscUpper, frame: Option<&Frame>) {
        let witness = match frame {
            Some(f) => u.witness.to_base(f).unwrap_or(u.witness),
            None => u.witness,
        };
        self.upper = Some(u.value);
        self.witness_coefficients = Some(witness.coefficient_table());
        self.witness_poles = witness.pole_table();
        self.margins = Some(Margins {
            containment: u.margin,
            cells: u.cells,
        });
    }

    fn set_lower(&mut self, value: f64, cert: LowerCertificate) {
        if self.lower.is_none_or(|l| value > l) {
            self.lower = Some(value);
            self.lower_certificate = Some(cert);
        }
    }

    fn note(&mut self, what: &str, e: impl std::fmt::Display) {
        self.diagnostics.push(format!("{what}: {e}"));
    }

    /// Both sides certified.
    pub fn is_sandwich(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }

    /// `lower <= upper` up to relative `tol` (vacuous with a side missing).
    pub fn is_consistent(&self, tol: f64) -> bool {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => l <= u * (1.0 + tol),
            _ => true,
        }
    }
}

fn localized_certificate(m: f64, l: &LocalizedLower) -> LowerCertificate {
    LowerCertificate::Localized {
        m,
        factor: l.localization.tanh(),
        patch_value: l.patch_value,
        envelope: l.envelope,
        localization: l.localization,
        rescaling: l.estimate.c,
        depth: l.depth,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BoundOptions {
    pub pipeline: PipelineOptions,
    pub optimize: OptimizeOptions,
}

/// Lower bound from the enclosing ball (exact when `r` is a ball) and the
/// envelope pipelines (the cubic one when the domain is declared
/// pseudoconvex and C^3), upper bound from the disc
/// optimizer. Failures of either side are recorded in `diagnostics`; an
/// error is returned only for invalid queries.
pub fn bound_domain(dom: &DomainSpec, z: &CVector, x: &CVector, opts: &BoundOptions) -> Result<BoundResult> {
    let w = dom.check_interior(z)?;
    x.check_dim(dom.dim())?;
    let mut out = BoundResult::new(&dom.name, z, x);
    // the domain lies in its enclosing ball, and is a ball when r is one
    let radius = match dom.shape {
        Shape::Ball { radius } if radius <= dom.enclosing_radius => radius,
        _ => dom.enclosing_radius,
    };
    let target = CanonicalDomain::Ball(radius);
    match crate::canonical::kobayashi_canonical(&target, &w, &dom.frame.vec_to_base(x)) {
        Ok(f) => out.set_lower(f.value, LowerCertificate::ContractionMap { target }),
        Err(e) => out.note("lower (inclusion)", e),
    }
    match normal_estimate_c11(dom, z, x, &opts.pipeline) {
        Ok(l) if l.value > 0.0 => out.set_lower(l.value, localized_certificate(2.0, &l)),
        Ok(_) => out.note("lower (m = 2)", "zero normal component"),
        Err(e) => out.note("lower (m = 2)", e),
    }
    if dom.pseudoconvex_known && dom.regularity.at_least_c3() {
        match pseudoconvex_lower_bound(dom, z, x, &opts.pipeline) {
            Ok(l) if l.value > 0.0 => out.set_lower(l.value, localized_certificate(3.0, &l)),
            Ok(_) => {}
            Err(e) => out.note("lower (m = 3)", e),
        }
    }
    match optimize_in_domain(dom, z, x, &opts.optimize) {
        Ok(u) => out.set_upper(u, Some(&dom.frame)),
        Err(e) => out.note("upper", e),
    }
    Ok(out)
}

/// Bounds for a canonical domain: the exact value on both sides, with the
/// optimizer's witness disc.
pub fn bound_canonical(dom: &CanonicalDomain, z: &CVector, x: &CVector, opts: &OptimizeOptions) -> Result<BoundResult> {
    let exact = crate::canonical::kobayashi_canonical(dom, z, x)?;
    let mut out = BoundResult::new(&format!("{dom:?}"), z, x);
    out.set_lower(
        exact.value,
        LowerCertificate::ContractionMap { target: dom.clone() },
    );
    let u = disc_upper_bound_optimize(dom, z, x, opts)?;
    out.set_upper(u, None);
    Ok(out)
}

/// Bounds on `C \ [z0, z1]` intersected with `B(0, clip)`: the slit
/// reduction below and the optimizer above.
pub fn bound_slit(segment: (C64, C64), clip: f64, z: C64, x: C64, opts: &OptimizeOptions) -> Result<BoundResult> {
    let zv = CVector::new(vec![z]);
    let xv = CVector::new(vec![x]);
    let mut out = BoundResult::new("slit-complement", &zv, &xv);
    let lower = slit_complement_lower_bound(z, x, segment)?;
    out.set_lower(
        lower,
        LowerCertificate::SlitReduction {
            segment: [[segment.0.re, segment.0.im], [segment.1.re, segment.1.im]],
        },
    );
    let region = Clipped {
        inner: CanonicalDomain::SlitComplement {
            z0: segment.0,
            z1: segment.1,
        },
        radius: clip,
    };
    if !(region.value(&zv) < 0.0) {
        return Err(crate::error::Error::NotInterior("point is not inside the clipped slit complement".into()));
    }
    out.set_upper(disc_upper_bound_optimize(&region, &zv, &xv, opts)?, None);
    Ok(out)
}

/// Lower bound through a map into a canonical domain, upper bound from the
/// optimizer on `dom`.
pub fn bound_by_contraction(
    dom: &DomainSpec,
    h: &HoloMapSpec,
    target: &CanonicalDomain,
    z: &CVector,
    x: &CVector,
    opts: &OptimizeOptions,
) -> Result<BoundResult> {
    dom.check_interior(z)?;
    let mut out = BoundResult::new(&dom.name, z, x);
    match contraction_transfer(h, target, z, x) {
        Ok(v) => out.set_lower(v, LowerCertificate::ContractionMap { target: target.clone() }),
        Err(e) => out.note("lower", e),
    }
    match optimize_in_domain(dom, z, x, opts) {
        Ok(u) => out.set_upper(u, Some(&dom.frame)),
        Err(e) => out.note("upper", e),
    }
    Ok(out)
}

/// The witness disc of a record (base coordinates), for independent
/// re-checks.
pub fn witness_disc(res: &BoundResult) -> Option<Result<AnalyticDisc>> {
    let coeffs = res.witness_coefficients.as_ref()?;
    let n = res.query.z.dim();
    let to_vecs = |table: &Vec<Vec<[f64; 2]>>| -> Vec<CVector> {
        table
            .iter()
            .map(|row| CVector::new(row.iter().map(|p| C64::new(p[0], p[1])).collect()))
            .collect()
    };
    let poles = res
        .witness_poles
        .as_ref()
        .map(|p| CVector::new(p.iter().map(|q| C64::new(q[0], q[1])).collect()));
    let vecs = to_vecs(coeffs);
    if vecs.iter().any(|v| v.dim() != n) {
        return Some(Err(crate::error::Error::DimensionMismatch {
            expected: n,
            got: vecs.first().map_or(0, |v| v.dim()),
        }));
    }
    Some(AnalyticDisc::rational(vecs, poles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvector::c;
    use crate::models::unit_ball;

    #[test]
    fn slit_sandwich_near_the_segment() {
        let r = bound_slit((c(0.0, 0.0), c(-1.0, 0.0)), 10.0, c(0.01, 0.0), c(1.0, 0.0), &OptimizeOptions::default())
            .unwrap();
        let (l, u) = (r.lower.unwrap(), r.upper.unwrap());
        assert!(l >= 0.125 * 100.0 && l <= u && u <= 100.0 * (1.0 + 1e-9), "{l} {u}");
    }

    #[test]
    fn ball_record_is_consistent_and_serializes() {
        let dom = unit_ball(2).unwrap();
        let z = CVector::new(vec![c(0.9, 0.0), c(0.0, 0.0)]);
        let x = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let r = bound_domain(&dom, &z, &x, &BoundOptions::default()).unwrap();
        assert!(r.is_sandwich() && r.is_consistent(1e-12), "{r:?}");
        let exact = 1.0 / (1.0 - 0.81);
        // a ball is recognised, so the lower side is its closed form
        assert!((r.lower.unwrap() - exact).abs() <= 1e-12 * exact && r.upper.unwrap() >= exact * (1.0 - 1e-9));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["lower_certificate"]["kind"], "ContractionMap");
        let disc = witness_disc(&r).unwrap().unwrap();
        assert!(disc.center().dist(&z) < 1e-12);
    }
}
