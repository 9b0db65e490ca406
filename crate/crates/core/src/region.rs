//! The membership interface shared by user domains and model domains, used
//! by the disc certifier and optimizer.

use crate::cvector::CVector;
use crate::domain::DomainSpec;
use crate::interval::Interval;

/// Enclosure of one function `f_k` of a decomposition `value = max_k f_k`
/// over a box, with an enclosure of its real gradient when available.
#[derive(Debug, Clone)]
pub struct PieceRange {
    pub value: Interval,
    pub gradient: Option<Vec<Interval>>,
}

/// An open set `{value < 0}` in C^n.
pub trait Region: Sync + Send {
    /// Negative exactly on the region.
    fn value(&self, w: &CVector) -> f64;

    /// Enclosure of `value` over a box (2n interleaved real intervals).
    fn range(&self, b: &[Interval]) -> Interval;

    /// Lipschitz constant of `value` on the part of the region that matters
    /// for containment, when one is known.
    fn lipschitz(&self) -> Option<f64>;

    /// Distance from an interior point to the complement, or a lower bound
    /// for it. Zero outside.
    fn inner_radius(&self, w: &CVector) -> f64;

    /// Point values of the pieces, in the order of [`Region::pieces`].
    fn piece_values(&self, w: &CVector) -> Vec<f64> {
        vec![self.value(w)]
    }

    fn pieces(&self, b: &[Interval]) -> Vec<PieceRange> {
        vec![PieceRange {
            value: self.range(b),
            gradient: None,
        }]
    }
}

/// `|w|^2 - radius^2` over a box.
pub(crate) fn sphere_piece(b: &[Interval], radius: f64) -> PieceRange {
    PieceRange {
        value: b.iter().fold(Interval::point(0.0), |acc, x| acc + x.sqr())
            - Interval::point(radius * radius),
        gradient: Some(b.iter().map(|x| x.scale(2.0)).collect()),
    }
}

impl Region for DomainSpec {
    fn value(&self, w: &CVector) -> f64 {
        self.base_value(w)
    }

    fn range(&self, b: &[Interval]) -> Interval {
        self.base_range(b)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(DomainSpec::lipschitz(self))
    }

    fn inner_radius(&self, w: &CVector) -> f64 {
        if self.base_value(w) >= 0.0 {
            return 0.0;
        }
        let to_sphere = self.enclosing_radius - w.norm();
        let to_zero_set = match crate::distance::project_base(self, w) {
            Ok(p) => p.distance,
            // |r(w)| <= G dist(w, {r = 0}) on the enclosing ball
            Err(_) => -self.field.value(w) / self.gradient_bound,
        };
        to_sphere.min(to_zero_set).max(0.0)
    }

    fn piece_values(&self, w: &CVector) -> Vec<f64> {
        let r2 = self.enclosing_radius * self.enclosing_radius;
        vec![self.field.value(w), w.norm_sqr() - r2]
    }

    fn pieces(&self, b: &[Interval]) -> Vec<PieceRange> {
        let (v, g) = self.field.grad_range(b);
        vec![
            PieceRange {
                value: v,
                gradient: Some(g),
            },
            sphere_piece(b, self.enclosing_radius),
        ]
    }
}

/// `region ∩ B(0, radius)`.
#[derive(Debug, Clone)]
pub struct Clipped<R> {
    pub inner: R,
    pub radius: f64,
}

impl<R: Region> Region for Clipped<R> {
    fn value(&self, w: &CVector) -> f64 {
        self.inner
            .value(w)
            .max(w.norm_sqr() - self.radius * self.radius)
    }

    fn range(&self, b: &[Interval]) -> Interval {
        self.inner.range(b).max(sphere_piece(b, self.radius).value)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz().map(|l| l.max(2.0 * self.radius))
    }

    fn inner_radius(&self, w: &CVector) -> f64 {
        self.inner
            .inner_radius(w)
            .min((self.radius - w.norm()).max(0.0))
    }

    fn piece_values(&self, w: &CVector) -> Vec<f64> {
        let mut v = self.inner.piece_values(w);
        v.push(w.norm_sqr() - self.radius * self.radius);
        v
    }

    fn pieces(&self, b: &[Interval]) -> Vec<PieceRange> {
        let mut v = self.inner.pieces(b);
        v.push(sphere_piece(b, self.radius));
        v
    }
}
