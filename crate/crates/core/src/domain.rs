//! Domains `{r < 0}` inside an enclosing ball, with optional unitary frame.
//!
//! A `DomainSpec` stores the defining function in its own *base*
//! coordinates `w`. An optional affine unitary frame `w = U(z - t)` places
//! a copy of the domain elsewhere in C^n; all engines convert queries to base
//! coordinates, compute there, and convert results back. Since unitary
//! translations are biholomorphic isometries nothing is lost.
//!
//! The domain is `{w : r(w) < 0, |w| < R_enc}`, so unbounded sublevel sets
//! such as half-spaces are clipped by the enclosing ball.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cvector::{random_in_ball, CVector, Unitary};
use crate::error::{Error, Result};
use crate::expr::ScalarFieldExpr;
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    C2,
    C3,
    /// `C^{1,1}`
    C11,
    RealAnalytic,
}

impl Regularity {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "c2" => Ok(Regularity::C2),
            "c3" => Ok(Regularity::C3),
            "c11" | "c1,1" | "coneone" => Ok(Regularity::C11),
            "realanalytic" | "analytic" | "comega" => Ok(Regularity::RealAnalytic),
            other => Err(Error::InvalidArgument(format!("unknown regularity '{other}'"))),
        }
    }

    /// Whether third derivatives of `r` are available.
    pub fn at_least_c3(self) -> bool {
        matches!(self, Regularity::C3 | Regularity::RealAnalytic)
    }
}

/// Closed forms recognised for exact distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Generic,
    /// `r = |w|^2 - radius^2`
    Ball { radius: f64 },
    /// `r = Re w_n`
    HalfSpace,
}

/// Affine unitary change of coordinates `w = U (z - shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub u: Unitary,
    pub shift: CVector,
}

impl Frame {
    pub fn identity(n: usize) -> Self {
        Frame {
            u: Unitary::identity(n),
            shift: CVector::zeros(n),
        }
    }

    pub fn to_base(&self, z: &CVector) -> CVector {
        self.u.apply(&(z - &self.shift))
    }

    pub fn vec_to_base(&self, x: &CVector) -> CVector {
        self.u.apply(x)
    }

    pub fn from_base(&self, w: &CVector) -> CVector {
        &self.u.adjoint().apply(w) + &self.shift
    }

    pub fn vec_from_base(&self, x: &CVector) -> CVector {
        self.u.adjoint().apply(x)
    }

    pub fn is_identity(&self) -> bool {
        self.shift.norm() == 0.0 && self.u == Unitary::identity(self.u.dim())
    }
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub name: String,
    pub field: ScalarFieldExpr,
    pub enclosing_radius: f64,
    /// Validated bound for `|grad r|` over the enclosing ball.
    pub gradient_bound: f64,
    pub regularity: Regularity,
    pub pseudoconvex_known: bool,
    /// Interior point in base coordinates.
    pub witness_point: CVector,
    /// Depth below which boundary projections are unique.
    pub tubular_radius: Option<f64>,
    pub shape: Shape,
    pub frame: Frame,
}

const VALIDATION_SAMPLES: usize = 2000;
const GRADIENT_SAFETY: f64 = 1.25;

impl DomainSpec {
    /// Builds and validates a domain. The gradient bound is sampled when not
    /// supplied and checked against the samples when it is.
    pub fn new(
        name: impl Into<String>,
        field: ScalarFieldExpr,
        enclosing_radius: f64,
        regularity: Regularity,
        witness_point: CVector,
        gradient_bound: Option<f64>,
    ) -> Result<Self> {
        let n = field.dim;
        witness_point.check_dim(n)?;
        if !(enclosing_radius > 0.0 && enclosing_radius.is_finite()) {
            return Err(Error::Validation("enclosing_radius must be positive".into()));
        }
        let sampled = sampled_gradient_sup(&field, enclosing_radius);
        let gradient_bound = match gradient_bound {
            Some(g) if g + 1e-12 < sampled => {
                return Err(Error::Validation(format!(
                    "gradient_bound {g} is below the sampled sup {sampled}"
                )))
            }
            Some(g) => g,
            None => GRADIENT_SAFETY * sampled.max(1e-12),
        };
        let shape = detect_shape(&field);
        let dom = DomainSpec {
            name: name.into(),
            field,
            enclosing_radius,
            gradient_bound,
            regularity,
            pseudoconvex_known: false,
            witness_point,
            tubular_radius: None,
            shape,
            frame: Frame::identity(n),
        };
        let wv = dom.field.value(&dom.witness_point);
        if !(wv < 0.0) || dom.witness_point.norm() >= enclosing_radius {
            return Err(Error::Validation(format!(
                "witness point is not interior (r = {wv})"
            )));
        }
        Ok(dom)
    }

    pub fn with_pseudoconvex(mut self, known: bool) -> Self {
        self.pseudoconvex_known = known;
        self
    }

    pub fn with_tubular_radius(mut self, radius: f64) -> Self {
        self.tubular_radius = Some(radius);
        self
    }

    /// The image of this domain under `z -> U z + t`.
    pub fn transformed(&self, u: &Unitary, t: &CVector) -> DomainSpec {
        // new base map: w = F(U^{-1}(z - t)) = V U^*(z - t - U s) with F = V(. - s)
        let ua = u.adjoint();
        let shift = &u.apply(&self.frame.shift) + t;
        let mut out = self.clone();
        out.frame = Frame {
            u: self.frame.u.compose(&ua),
            shift,
        };
        out
    }

    pub fn dim(&self) -> usize {
        self.field.dim
    }

    /// `max(r(w), |w|^2 - R_enc^2)` in base coordinates: negative exactly
    /// on the domain.
    pub fn base_value(&self, w: &CVector) -> f64 {
        let r = self.field.value(w);
        let ball = w.norm_sqr() - self.enclosing_radius * self.enclosing_radius;
        r.max(ball)
    }

    pub fn base_range(&self, b: &[Interval]) -> Interval {
        let r = self.field.range(b);
        let ball = b
            .iter()
            .fold(Interval::point(0.0), |acc, x| acc + x.sqr())
            - Interval::point(self.enclosing_radius * self.enclosing_radius);
        r.max(ball)
    }

    pub fn contains(&self, z: &CVector) -> bool {
        z.dim() == self.dim() && self.base_value(&self.frame.to_base(z)) < 0.0
    }

    pub fn check_interior(&self, z: &CVector) -> Result<CVector> {
        z.check_dim(self.dim())?;
        let w = self.frame.to_base(z);
        let v = self.base_value(&w);
        if !(v < 0.0) {
            return Err(Error::NotInterior(format!(
                "defining value {v:.3e} at the query point"
            )));
        }
        Ok(w)
    }

    /// Lipschitz constant of `base_value` on the enclosing ball.
    pub fn lipschitz(&self) -> f64 {
        self.gradient_bound.max(2.0 * self.enclosing_radius)
    }
}

fn sampled_gradient_sup(field: &ScalarFieldExpr, radius: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b6f62);
    let mut sup: f64 = 0.0;
    for _ in 0..VALIDATION_SAMPLES {
        let w = random_in_ball(field.dim, radius, &mut rng);
        if let Ok((jet, None)) = field.jet_flagged(&w) {
            sup = sup.max(jet.grad_norm());
        }
    }
    sup
}

fn detect_shape(field: &ScalarFieldExpr) -> Shape {
    let n = field.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a17);
    let pts: Vec<CVector> = (0..16).map(|_| random_in_ball(n, 2.0, &mut rng)).collect();
    let halfspace = pts.iter().all(|w| field.value(w) == w.last().re);
    if halfspace {
        return Shape::HalfSpace;
    }
    let r0 = field.value(&CVector::zeros(n));
    if r0 < 0.0 {
        let ball = pts.iter().all(|w| {
            let expect = w.norm_sqr() + r0;
            (field.value(w) - expect).abs() <= 1e-12 * (1.0 + expect.abs())
        });
        if ball {
            return Shape::Ball { radius: (-r0).sqrt() };
        }
    }
    Shape::Generic
}
