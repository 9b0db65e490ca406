//! Ready-made domains used by the experiments and tests.

use crate::cvector::{c, CVector};
use crate::distance::inner_axis_point;
use crate::domain::{DomainSpec, Regularity};
use crate::envelope::EnvelopeParams;
use crate::error::Result;
use crate::parse::parse_field;

/// The unit ball in C^n.
pub fn unit_ball(n: usize) -> Result<DomainSpec> {
    let terms: Vec<String> = (1..=n).map(|j| format!("abs2({j})")).collect();
    let mut src = format!("{} -1", terms.join(" "));
    for _ in 0..n {
        src = format!("+ {src}");
    }
    let f = parse_field(&src, n)?;
    Ok(DomainSpec::new("ball", f, 1.25, Regularity::RealAnalytic, CVector::zeros(n), None)?
        .with_pseudoconvex(true)
        .with_tubular_radius(0.5))
}

/// `Re z_2 - |z_1|^2 < 0` in `B(0, 2)`: the restricted Levi form is `-1` at
/// the origin.
pub fn saddle() -> Result<DomainSpec> {
    let f = parse_field("+ re(2) * -1 abs2(1)", 2)?;
    Ok(DomainSpec::new("saddle", f, 2.0, Regularity::RealAnalytic, inner_axis_point(2, 0.5), None)?
        .with_tubular_radius(0.25))
}

/// `Re z_2 - 2a|z_1|^2 + b|z_2|^2 < 0` in `B(0, 2)`; the least restricted
/// Levi eigenvalue of `r` at the origin is `-2a`.
pub fn concave_patch(a: f64, b: f64) -> Result<DomainSpec> {
    let src = format!("+ + re(2) * {} abs2(1) * {b} abs2(2)", -2.0 * a);
    let f = parse_field(&src, 2)?;
    Ok(DomainSpec::new("concave", f, 2.0, Regularity::RealAnalytic, inner_axis_point(2, 0.5), None)?
        .with_tubular_radius(0.1))
}

/// `Re z_2 + |z_1|^4 < 0` in `B(0, 2)`: pseudoconvex, with a Levi form
/// vanishing at the origin.
pub fn quartic() -> Result<DomainSpec> {
    let f = parse_field("+ re(2) absp(1, 4)", 2)?;
    Ok(DomainSpec::new("quartic", f, 2.0, Regularity::RealAnalytic, inner_axis_point(2, 0.5), None)?
        .with_pseudoconvex(true)
        .with_tubular_radius(0.1))
}

/// Parameters of the model `Re z_2 - A|z_1|^m + B(|z_2|^m + |z_2||z|) < 0`
/// in `B(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaModel {
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub radius: f64,
}

impl OmegaModel {
    pub fn new(m: f64) -> Self {
        OmegaModel { m, a: 1.0, b: 1.0, radius: 4.0 }
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let (m, a, b) = (self.m, self.a, self.b);
        let src = format!("+ + re(2) * {} absp(1, {m}) * {b} + absp(2, {m}) * absp(2, 1) norm", -a);
        let f = parse_field(&src, 2)?;
        let reg = if m >= 3.0 { Regularity::C3 } else { Regularity::C2 };
        DomainSpec::new(format!("omega-m{m}"), f, self.radius, reg, inner_axis_point(2, 0.1), None)
    }

    /// The envelope `Re z_2 < A|z_1|^m` that contains the model. The `B`
    /// terms are nonnegative, so no mixed term is needed.
    pub fn envelope(&self) -> EnvelopeParams {
        EnvelopeParams::model(2, self.m, self.a, self.radius).with_mixed(0.0)
    }

    /// The direction `(1, 1)` used in the tangentially weighted sweeps.
    pub fn cone_direction() -> CVector {
        CVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)])
    }
}
