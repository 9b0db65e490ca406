//! Closed real intervals with outward rounding, used to enclose the range of
//! a defining function over a box.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan());
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    fn widened(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value attained.
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn sqr(self) -> Self {
        let (a, b) = (self.mig(), self.mag());
        Self::widened(a * a, b * b).clamp_nonneg()
    }

    pub fn powi(self, k: i32) -> Self {
        match k {
            0 => Interval::point(1.0),
            1 => self,
            k if k < 0 => {
                let p = self.powi(-k);
                if p.contains_zero() {
                    Interval::new(f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    Self::widened(1.0 / p.hi, 1.0 / p.lo)
                }
            }
            k if k % 2 == 0 => {
                let (a, b) = (self.mig(), self.mag());
                Self::widened(a.powi(k), b.powi(k)).clamp_nonneg()
            }
            k => Self::widened(self.lo.powi(k), self.hi.powi(k)),
        }
    }

    /// `x^p` for an interval of nonnegative numbers and real `p > 0`.
    pub fn pow_nonneg(self, p: f64) -> Self {
        let lo = self.lo.max(0.0);
        let hi = self.hi.max(0.0);
        Self::widened(lo.powf(p), hi.powf(p)).clamp_nonneg()
    }

    pub fn sqrt(self) -> Self {
        self.pow_nonneg(0.5)
    }

    fn clamp_nonneg(self) -> Self {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi,
        }
    }

    /// Enclosure of `x / n` given `|x| <= n`, so the ratio lies in `[-1, 1]`.
    pub fn unit_ratio(self, n: Interval) -> Interval {
        let unit = Interval::new(-1.0, 1.0);
        if n.lo > 0.0 {
            (self * Interval::widened(1.0 / n.hi, 1.0 / n.lo)).intersect(unit)
        } else {
            unit
        }
    }

    pub fn intersect(self, other: Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Interval { lo, hi }
        } else {
            // rounding can separate enclosures of the same quantity
            Interval { lo: hi, hi: lo }
        }
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// `1 / x` for an interval not containing zero.
    pub fn recip(self) -> Interval {
        if self.contains_zero() {
            Interval::new(f64::NEG_INFINITY, f64::INFINITY)
        } else {
            Self::widened(1.0 / self.hi, 1.0 / self.lo)
        }
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn scale(self, s: f64) -> Interval {
        if s >= 0.0 {
            Self::widened(self.lo * s, self.hi * s)
        } else {
            Self::widened(self.hi * s, self.lo * s)
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::widened(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::widened(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi)
    }
}

/// Rectangular complex interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CInterval {
    pub re: Interval,
    pub im: Interval,
}

impl CInterval {
    pub fn point(z: num_complex::Complex64) -> Self {
        CInterval {
            re: Interval::point(z.re),
            im: Interval::point(z.im),
        }
    }

    /// Square of side `2h` centred at `z`.
    pub fn around(z: num_complex::Complex64, h: f64) -> Self {
        CInterval {
            re: Interval::widened(z.re - h, z.re + h),
            im: Interval::widened(z.im - h, z.im + h),
        }
    }

    /// Upper bound for the modulus.
    pub fn mag(&self) -> f64 {
        let (a, b) = (self.re.mag(), self.im.mag());
        a.hypot(b).next_up()
    }

    /// Lower bound for the modulus.
    pub fn mig(&self) -> f64 {
        let (a, b) = (self.re.mig(), self.im.mig());
        a.hypot(b).next_down().max(0.0)
    }

    pub fn scale(self, k: num_complex::Complex64) -> CInterval {
        self * CInterval::point(k)
    }
}

impl Add for CInterval {
    type Output = CInterval;
    fn add(self, o: CInterval) -> CInterval {
        CInterval {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for CInterval {
    type Output = CInterval;
    fn sub(self, o: CInterval) -> CInterval {
        CInterval {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Mul for CInterval {
    type Output = CInterval;
    fn mul(self, o: CInterval) -> CInterval {
        CInterval {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl Div for CInterval {
    type Output = CInterval;
    fn div(self, o: CInterval) -> CInterval {
        let inv = (o.re.sqr() + o.im.sqr()).recip();
        let num = self
            * CInterval {
                re: o.re,
                im: -o.im,
            };
        CInterval {
            re: num.re * inv,
            im: num.im * inv,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn product_encloses_samples(a in -5.0..5.0f64, w1 in 0.0..2.0f64,
                                    b in -5.0..5.0f64, w2 in 0.0..2.0f64,
                                    s in 0.0..1.0f64, t in 0.0..1.0f64) {
            let x = Interval::new(a, a + w1);
            let y = Interval::new(b, b + w2);
            let (xs, ys) = (a + s * w1, b + t * w2);
            let p = x * y;
            prop_assert!(p.lo <= xs * ys && xs * ys <= p.hi);
            let q = x.sqr();
            prop_assert!(q.lo <= xs * xs && xs * xs <= q.hi);
            let r = x.powi(3);
            prop_assert!(r.lo <= xs.powi(3) && xs.powi(3) <= r.hi);
        }
    }

    proptest! {
        #[test]
        fn complex_quotient_encloses_samples(a in -3.0..3.0f64, b in -3.0..3.0f64,
                                             c in 0.5..3.0f64, d in -3.0..3.0f64,
                                             h in 0.0..0.3f64, s in -1.0..1.0f64, t in -1.0..1.0f64) {
            use num_complex::Complex64 as C;
            let (p, q) = (C::new(a, b), C::new(c, d));
            let (pp, qq) = (p + C::new(s * h, t * h), q + C::new(t * h, -s * h));
            let r = CInterval::around(p, h) / CInterval::around(q, h);
            let v = pp / qq;
            prop_assert!(r.re.lo <= v.re && v.re <= r.re.hi);
            prop_assert!(r.im.lo <= v.im && v.im <= r.im.hi);
            prop_assert!(r.mag() >= v.norm());
        }
    }

    #[test]
    fn square_of_straddling_interval_starts_at_zero() {
        let x = Interval::new(-1.0, 2.0).sqr();
        assert_eq!(x.lo, 0.0);
        assert!(x.hi >= 4.0);
    }
}
