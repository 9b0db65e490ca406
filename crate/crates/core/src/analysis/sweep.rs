//! Bounds along inner normal rays `p - delta n_p` and their fitted exponents.

use std::fmt;

use serde::Serialize;

use crate::analysis::fit::{fit_blowup_exponent, PowerFit};
use crate::cvector::{c, CVector, Unitary};
use crate::domain::DomainSpec;
use crate::envelope::{EnvelopeOptions, EnvelopeParams};
use crate::error::{Error, Result};
use crate::levi::wirtinger_gradient;
use crate::lower::{
    normal_estimate_c11, normal_slice_lower_bound, pseudoconvex_lower_bound, tangential_weighted_lower_bound, Cone,
    PipelineOptions,
};
use crate::optimize::{optimize_in_domain, OptimizeOptions};
use crate::par;
use crate::upper::{disc_upper_bound_normal_family, disc_upper_bound_quadratic_family};

/// Coordinates `v = U(w - p)` at a boundary point `p` with the outward
/// normal along `+Re v_n`.
#[derive(Debug, Clone)]
pub struct BoundaryChart {
    /// Boundary point in domain coordinates.
    pub point: CVector,
    base: CVector,
    rotation: Unitary,
}

impl BoundaryChart {
    pub fn at(dom: &DomainSpec, p: &CVector) -> Result<Self> {
        p.check_dim(dom.dim())?;
        let base = dom.frame.to_base(p);
        let g = match wirtinger_gradient(&dom.field, &base) {
            Err(Error::SingularLocus(_)) => fd_wirtinger_gradient(dom, &base),
            other => other?,
        };
        let gn = g.norm();
        if gn <= 1e-12 {
            return Err(Error::Degenerate("gradient vanishes at the base point".into()));
        }
        if dom.field.value(&base).abs() > 1e-8 * gn.max(1.0) {
            return Err(Error::Precondition("base point is not on the boundary".into()));
        }
        let n = dom.dim();
        let nu = g.conj().scale_real(1.0 / gn);
        let rotation = if nu.dist(&CVector::unit(n, n - 1)) <= NORMAL_SNAP {
            Unitary::identity(n)
        } else {
            Unitary::to_last_axis(&nu)?
        };
        Ok(BoundaryChart {
            point: p.clone(),
            base,
            rotation,
        })
    }

    pub fn point_to_domain(&self, dom: &DomainSpec, v: &CVector) -> CVector {
        dom.frame.from_base(&(&self.rotation.adjoint().apply(v) + &self.base))
    }

    pub fn vec_to_domain(&self, dom: &DomainSpec, v: &CVector) -> CVector {
        dom.frame.vec_from_base(&self.rotation.adjoint().apply(v))
    }

    /// Chart coordinates coincide with domain coordinates.
    pub fn is_standard(&self, dom: &DomainSpec) -> bool {
        self.point.norm() == 0.0 && dom.frame.is_identity() && self.rotation == Unitary::identity(self.point.dim())
    }
}

/// Normals this close to `e_n` keep the identity rotation. Covers the
/// finite-difference gradient used where the symbolic jet is singular.
const NORMAL_SNAP: f64 = 1e-6;

/// Central differences for `dr/dz_j`, for fields whose symbolic derivative
/// is flagged at the point (as `|z_2| |z|` at the origin, which is still
/// differentiable).
fn fd_wirtinger_gradient(dom: &DomainSpec, w: &CVector) -> CVector {
    let h = 1e-7 * w.norm().max(1.0);
    let f = |v: &CVector| dom.field.value(v);
    CVector(
        (0..w.dim())
            .map(|j| {
                let step = |e: crate::cvector::C64| {
                    let mut p = w.clone();
                    let mut m = w.clone();
                    p[j] += e;
                    m[j] -= e;
                    (f(&p) - f(&m)) / (2.0 * h)
                };
                let dx = step(c(h, 0.0));
                let dy = step(c(0.0, h));
                c(0.5 * dx, -0.5 * dy)
            })
            .collect(),
    )
}

/// Direction at depth `delta`, in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DirectionRule {
    Fixed(CVector),
    /// `e_n`.
    Normal,
    /// `delta^{-exponent} t + e_n`.
    Scaled { tangential: CVector, exponent: f64 },
}

impl DirectionRule {
    pub fn at(&self, n: usize, delta: f64) -> CVector {
        match self {
            DirectionRule::Fixed(x) => x.clone(),
            DirectionRule::Normal => CVector::unit(n, n - 1),
            DirectionRule::Scaled { tangential, exponent } => {
                let mut x = tangential.scale_real(delta.powf(-exponent));
                x[n - 1] = c(1.0, 0.0);
                x
            }
        }
    }
}

impl fmt::Display for DirectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionRule::Fixed(x) => write!(f, "fixed {:?}", x.to_real()),
            DirectionRule::Normal => write!(f, "normal"),
            DirectionRule::Scaled { tangential, exponent } => {
                write!(f, "delta^-{exponent} {:?} + e_n", tangential.to_real())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum LowerMethod {
    None,
    /// Quadratic envelope pipeline with localization.
    C11,
    /// Cubic envelope pipeline for pseudoconvex C^3 domains.
    Pseudoconvex,
    /// Normal slice in a known envelope (chart coordinates).
    ModelNormal(EnvelopeParams),
    /// Tangentially weighted estimate in a known envelope.
    ModelTangential(EnvelopeParams),
}

#[derive(Debug, Clone)]
pub enum UpperMethod {
    None,
    Optimize(OptimizeOptions),
    /// Discs with a quadratic first coordinate for the model domains.
    QuadraticFamily { m: f64 },
    /// Linear discs in the chart with the holomorphic quadratic correction.
    NormalFamily,
}

impl LowerMethod {
    pub fn name(&self) -> &'static str {
        match self {
            LowerMethod::None => "none",
            LowerMethod::C11 => "c11",
            LowerMethod::Pseudoconvex => "pseudoconvex",
            LowerMethod::ModelNormal(_) => "model-normal",
            LowerMethod::ModelTangential(_) => "model-tangential",
        }
    }
}

impl UpperMethod {
    pub fn name(&self) -> &'static str {
        match self {
            UpperMethod::None => "none",
            UpperMethod::Optimize(_) => "optimize",
            UpperMethod::QuadraticFamily { .. } => "quadratic-disc-family",
            UpperMethod::NormalFamily => "normal-family",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base_point: CVector,
    pub direction: DirectionRule,
    /// Strictly decreasing.
    pub deltas: Vec<f64>,
    pub lower: LowerMethod,
    pub upper: UpperMethod,
    pub cone: Cone,
    pub envelope: EnvelopeOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub delta: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub flags: Vec<String>,
}

impl Sample {
    pub fn consistent(&self) -> bool {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => l <= u * (1.0 + 1e-12),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub domain: String,
    pub base_point: CVector,
    pub direction: String,
    pub lower_method: String,
    pub upper_method: String,
    pub samples: Vec<Sample>,
    pub lower_fit: Option<PowerFit>,
    pub upper_fit: Option<PowerFit>,
    /// Samples with `lower > upper`.
    pub violations: usize,
}

impl SweepReport {
    /// Slope of the lower bounds when the fit is reliable.
    pub fn lower_slope(&self) -> Option<f64> {
        self.lower_fit.filter(|f| f.is_reliable()).map(|f| f.slope)
    }

    pub fn upper_slope(&self) -> Option<f64> {
        self.upper_fit.filter(|f| f.is_reliable()).map(|f| f.slope)
    }

    /// Columns `delta, lower, upper, lower_ok, upper_ok, flags`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["delta", "lower", "upper", "lower_ok", "upper_ok", "flags"])
            .map_err(io)?;
        let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for s in &self.samples {
            w.write_record([
                format!("{:e}", s.delta),
                num(s.lower),
                num(s.upper),
                s.lower.is_some().to_string(),
                s.upper.is_some().to_string(),
                s.flags.join("; "),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }
}

fn check_grid(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("depths must be positive".into()));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("depth grid must be strictly decreasing".into()));
    }
    Ok(())
}

fn lower_at(
    dom: &DomainSpec,
    cfg: &SweepConfig,
    z: &CVector,
    x: &CVector,
    zl: &CVector,
    xl: &CVector,
) -> Result<f64> {
    let pipeline = PipelineOptions {
        envelope: cfg.envelope,
        cone: cfg.cone,
    };
    match &cfg.lower {
        LowerMethod::None => Err(Error::InvalidArgument("no lower method".into())),
        LowerMethod::C11 => Ok(normal_estimate_c11(dom, z, x, &pipeline)?.value),
        LowerMethod::Pseudoconvex => Ok(pseudoconvex_lower_bound(dom, z, x, &pipeline)?.value),
        LowerMethod::ModelNormal(env) => Ok(normal_slice_lower_bound(env, zl, xl, &cfg.cone)?.value),
        LowerMethod::ModelTangential(env) => Ok(tangential_weighted_lower_bound(env, zl, xl, &cfg.cone)?.value),
    }
}

fn upper_at(
    dom: &DomainSpec,
    cfg: &SweepConfig,
    chart: &BoundaryChart,
    delta: f64,
    z: &CVector,
    x: &CVector,
    xl: &CVector,
) -> Result<f64> {
    match &cfg.upper {
        UpperMethod::None => Err(Error::InvalidArgument("no upper method".into())),
        UpperMethod::Optimize(o) => Ok(optimize_in_domain(dom, z, x, o)?.value),
        UpperMethod::QuadraticFamily { m } => {
            if !chart.is_standard(dom) {
                return Err(Error::Precondition(
                    "the quadratic disc family needs the model in normal form at the origin".into(),
                ));
            }
            Ok(disc_upper_bound_quadratic_family(dom, *m, z, x, &cfg.cone)?.value)
        }
        UpperMethod::NormalFamily => {
            Ok(disc_upper_bound_normal_family(dom, &chart.point, delta, xl)?.0.value)
        }
    }
}

/// Queries the configured engines at `p(delta) = p - delta n_p` for each
/// depth. Failed certificates leave the side empty and are flagged; fits
/// use the certified samples.
pub fn normal_ray_sweep(dom: &DomainSpec, cfg: &SweepConfig) -> Result<SweepReport> {
    check_grid(&cfg.deltas)?;
    let chart = BoundaryChart::at(dom, &cfg.base_point)?;
    let n = dom.dim();
    let samples = par::map(&cfg.deltas, |&delta| {
        let mut zl = CVector::zeros(n);
        zl[n - 1] = c(-delta, 0.0);
        let xl = cfg.direction.at(n, delta);
        let z = chart.point_to_domain(dom, &zl);
        let x = chart.vec_to_domain(dom, &xl);
        let mut flags = Vec::new();
        let lower = match cfg.lower {
            LowerMethod::None => None,
            _ => lower_at(dom, cfg, &z, &x, &zl, &xl)
                .map_err(|e| flags.push(format!("lower: {e}")))
                .ok(),
        };
        let upper = match cfg.upper {
            UpperMethod::None => None,
            _ => upper_at(dom, cfg, &chart, delta, &z, &x, &xl)
                .map_err(|e| flags.push(format!("upper: {e}")))
                .ok(),
        };
        Sample {
            delta,
            lower,
            upper,
            flags,
        }
    });
    let fit = |pick: fn(&Sample) -> Option<f64>| {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter_map(|s| pick(s).filter(|v| *v > 0.0).map(|v| (s.delta, v)))
            .collect();
        fit_blowup_exponent(&pts).ok()
    };
    let lower_fit = fit(|s| s.lower);
    let upper_fit = fit(|s| s.upper);
    let violations = samples.iter().filter(|s| !s.consistent()).count();
    Ok(SweepReport {
        domain: dom.name.clone(),
        base_point: cfg.base_point.clone(),
        direction: cfg.direction.to_string(),
        lower_method: cfg.lower.name().to_string(),
        upper_method: cfg.upper.name().to_string(),
        samples,
        lower_fit,
        upper_fit,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fit::log_grid;
    use crate::models::unit_ball;

    #[test]
    fn ball_radial_sweep() {
        let dom = unit_ball(2).unwrap();
        let p = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let cfg = SweepConfig {
            base_point: p,
            direction: DirectionRule::Normal,
            deltas: log_grid(1e-2, 1e-4, 5),
            lower: LowerMethod::C11,
            upper: UpperMethod::Optimize(OptimizeOptions { degree: 1, effort: 10 }),
            cone: Cone::default(),
            envelope: EnvelopeOptions::default(),
        };
        let r = normal_ray_sweep(&dom, &cfg).unwrap();
        assert_eq!(r.violations, 0);
        let lo = r.lower_slope().unwrap();
        let up = r.upper_slope().unwrap();
        // the localization factor still grows over this range, so only
        // blow-up is checked on the lower side
        assert!(lo < -0.4, "{lo}");
        assert!((up + 1.0).abs() < 0.05, "{up}");
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("delta,lower,upper,lower_ok,upper_ok,flags"));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn rejects_increasing_grid() {
        let dom = unit_ball(2).unwrap();
        let cfg = SweepConfig {
            base_point: CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            direction: DirectionRule::Normal,
            deltas: vec![1e-3, 1e-2, 1e-4, 1e-5],
            lower: LowerMethod::None,
            upper: UpperMethod::None,
            cone: Cone::default(),
            envelope: EnvelopeOptions::default(),
        };
        assert!(normal_ray_sweep(&dom, &cfg).is_err());
    }
}
