//! Real-valued defining functions `r(z)` on C^n as expression trees.
//!
//! Variables are the real coordinates `x_1, y_1, ..., x_n, y_n` with
//! `z_j = x_j + i y_j`. Evaluation comes in three flavours: plain values,
//! second-order jets (value, real gradient, real Hessian) and interval
//! enclosures over axis-aligned boxes.

use std::fmt;

use crate::cvector::CVector;
use crate::error::{Error, Result};
use crate::interval::Interval;

/// Expression node. Coordinate indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// `Re z_j`
    Re(usize),
    /// `Im z_j`
    Im(usize),
    /// `|z_j|^2`
    Abs2(usize),
    /// `|z_j|^m`, `m >= 1`
    AbsPow(usize, f64),
    /// Euclidean norm `|z|`
    Norm,
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Pow(Box<Node>, i32),
}

impl Node {
    pub fn c(x: f64) -> Node {
        Node::Const(x)
    }
    pub fn re(j: usize) -> Node {
        Node::Re(j)
    }
    pub fn im(j: usize) -> Node {
        Node::Im(j)
    }
    pub fn abs2(j: usize) -> Node {
        Node::Abs2(j)
    }
    pub fn absp(j: usize, m: f64) -> Node {
        Node::AbsPow(j, m)
    }
    pub fn sum(terms: Vec<Node>) -> Node {
        Node::Sum(terms)
    }
    pub fn product(factors: Vec<Node>) -> Node {
        Node::Product(factors)
    }
    pub fn scaled(k: f64, e: Node) -> Node {
        Node::Product(vec![Node::Const(k), e])
    }
    pub fn pow(e: Node, k: i32) -> Node {
        Node::Pow(Box::new(e), k)
    }

    fn max_index(&self) -> Option<usize> {
        match self {
            Node::Const(_) | Node::Norm => None,
            Node::Re(j) | Node::Im(j) | Node::Abs2(j) | Node::AbsPow(j, _) => Some(*j),
            Node::Sum(v) | Node::Product(v) => v.iter().filter_map(|n| n.max_index()).max(),
            Node::Pow(e, _) => e.max_index(),
        }
    }

    fn eval(&self, z: &CVector) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Re(j) => z[*j].re,
            Node::Im(j) => z[*j].im,
            Node::Abs2(j) => z[*j].norm_sqr(),
            Node::AbsPow(j, m) => abs_pow(z[*j].norm_sqr(), *m),
            Node::Norm => z.norm(),
            Node::Sum(v) => v.iter().map(|n| n.eval(z)).sum(),
            Node::Product(v) => v.iter().map(|n| n.eval(z)).product(),
            Node::Pow(e, k) => e.eval(z).powi(*k),
        }
    }

    fn eval_interval(&self, b: &[Interval]) -> Interval {
        match self {
            Node::Const(c) => Interval::point(*c),
            Node::Re(j) => b[2 * j],
            Node::Im(j) => b[2 * j + 1],
            Node::Abs2(j) => b[2 * j].sqr() + b[2 * j + 1].sqr(),
            Node::AbsPow(j, m) => {
                let s = b[2 * j].sqr() + b[2 * j + 1].sqr();
                s.pow_nonneg(m / 2.0)
            }
            Node::Norm => b
                .iter()
                .fold(Interval::point(0.0), |acc, x| acc + x.sqr())
                .sqrt(),
            Node::Sum(v) => v
                .iter()
                .fold(Interval::point(0.0), |acc, n| acc + n.eval_interval(b)),
            Node::Product(v) => v
                .iter()
                .fold(Interval::point(1.0), |acc, n| acc * n.eval_interval(b)),
            Node::Pow(e, k) => e.eval_interval(b).powi(*k),
        }
    }

    /// Range of the value and of the real gradient over a box.
    fn eval_grad_interval(&self, b: &[Interval]) -> (Interval, Vec<Interval>) {
        let nv = b.len();
        let zero = || vec![Interval::point(0.0); nv];
        match self {
            Node::Const(c) => (Interval::point(*c), zero()),
            Node::Re(j) | Node::Im(j) => {
                let i = if matches!(self, Node::Re(_)) { 2 * j } else { 2 * j + 1 };
                let mut g = zero();
                g[i] = Interval::point(1.0);
                (b[i], g)
            }
            Node::Abs2(j) => {
                let mut g = zero();
                g[2 * j] = b[2 * j].scale(2.0);
                g[2 * j + 1] = b[2 * j + 1].scale(2.0);
                (b[2 * j].sqr() + b[2 * j + 1].sqr(), g)
            }
            Node::AbsPow(j, m) => {
                let (x, y) = (b[2 * j], b[2 * j + 1]);
                let s = x.sqr() + y.sqr();
                let mut g = zero();
                if *m >= 2.0 {
                    // m |z|^(m-2) (x, y)
                    let f = s.pow_nonneg(m / 2.0 - 1.0).scale(*m);
                    g[2 * j] = f * x;
                    g[2 * j + 1] = f * y;
                } else {
                    // m |z|^(m-1) (x, y) / |z|
                    let f = s.pow_nonneg((m - 1.0) / 2.0).scale(*m);
                    let nrm = s.sqrt();
                    g[2 * j] = f * x.unit_ratio(nrm);
                    g[2 * j + 1] = f * y.unit_ratio(nrm);
                }
                (s.pow_nonneg(m / 2.0), g)
            }
            Node::Norm => {
                let nrm = b.iter().fold(Interval::point(0.0), |acc, x| acc + x.sqr()).sqrt();
                let g = b.iter().map(|x| x.unit_ratio(nrm)).collect();
                (nrm, g)
            }
            Node::Sum(v) => v.iter().fold((Interval::point(0.0), zero()), |(a, ga), n| {
                let (c, gc) = n.eval_grad_interval(b);
                (a + c, ga.into_iter().zip(gc).map(|(p, q)| p + q).collect())
            }),
            Node::Product(v) => v.iter().fold((Interval::point(1.0), zero()), |(a, ga), n| {
                let (c, gc) = n.eval_grad_interval(b);
                let g = ga.into_iter().zip(gc).map(|(p, q)| a * q + c * p).collect();
                (a * c, g)
            }),
            Node::Pow(e, k) => {
                let (u, gu) = e.eval_grad_interval(b);
                let d = u.powi(k - 1).scale(*k as f64);
                (u.powi(*k), gu.into_iter().map(|q| d * q).collect())
            }
        }
    }

    fn eval_jet(&self, z: &CVector, flags: &mut Singular) -> Jet {
        let nv = 2 * z.dim();
        match self {
            Node::Const(c) => Jet::constant(*c, nv),
            Node::Re(j) => Jet::variable(z[*j].re, 2 * j, nv),
            Node::Im(j) => Jet::variable(z[*j].im, 2 * j + 1, nv),
            Node::Abs2(j) => modulus_sqr_jet(z, *j),
            Node::AbsPow(j, m) => {
                let s = modulus_sqr_jet(z, *j);
                power_of_sqr(s, *m, flags, || format!("|z_{}|^{} at z_{} = 0", j + 1, m, j + 1))
            }
            Node::Norm => {
                let s = (0..z.dim()).fold(Jet::constant(0.0, nv), |acc, j| {
                    acc.add(&modulus_sqr_jet(z, j))
                });
                power_of_sqr(s, 1.0, flags, || "|z| at z = 0".to_string())
            }
            Node::Sum(v) => v
                .iter()
                .fold(Jet::constant(0.0, nv), |acc, n| acc.add(&n.eval_jet(z, flags))),
            Node::Product(v) => v
                .iter()
                .fold(Jet::constant(1.0, nv), |acc, n| acc.mul(&n.eval_jet(z, flags))),
            Node::Pow(e, k) => {
                let u = e.eval_jet(z, flags);
                let k = *k;
                let x = u.v;
                if k < 0 && x == 0.0 {
                    flags.mark("negative power of zero".into());
                }
                let kf = k as f64;
                u.compose(
                    x.powi(k),
                    kf * x.powi(k - 1),
                    kf * (kf - 1.0) * x.powi(k - 2),
                )
            }
        }
    }
}

fn abs_pow(s: f64, m: f64) -> f64 {
    if is_even_integer(m) {
        s.powi((m / 2.0) as i32)
    } else {
        s.powf(m / 2.0)
    }
}

fn is_even_integer(m: f64) -> bool {
    m.fract() == 0.0 && (m as i64) % 2 == 0
}

fn modulus_sqr_jet(z: &CVector, j: usize) -> Jet {
    let nv = 2 * z.dim();
    let x = Jet::variable(z[j].re, 2 * j, nv);
    let y = Jet::variable(z[j].im, 2 * j + 1, nv);
    x.mul(&x).add(&y.mul(&y))
}

/// `s^(m/2)` for a jet `s >= 0`; flags `s = 0` unless `m` is an even integer.
fn power_of_sqr(s: Jet, m: f64, flags: &mut Singular, what: impl FnOnce() -> String) -> Jet {
    let p = m / 2.0;
    if is_even_integer(m) {
        let k = p as i32;
        let x = s.v;
        let kf = k as f64;
        let d1 = if k >= 1 { kf * x.powi(k - 1) } else { 0.0 };
        let d2 = if k >= 2 { kf * (kf - 1.0) * x.powi(k - 2) } else { 0.0 };
        return s.compose(x.powi(k), d1, d2);
    }
    if s.v <= 0.0 {
        flags.mark(what());
        // one-sided limits: value and (for m > 1) gradient vanish
        let nv = s.g.len();
        return Jet::constant(0.0, nv);
    }
    let x = s.v;
    s.compose(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
}

#[derive(Debug, Default)]
struct Singular(Option<String>);

impl Singular {
    fn mark(&mut self, why: String) {
        if self.0.is_none() {
            self.0 = Some(why);
        }
    }
}

/// Value, real gradient and real Hessian with respect to
/// `(x_1, y_1, ..., x_n, y_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: Vec<f64>,
    /// Row-major `2n x 2n`.
    pub h: Vec<f64>,
}

impl Jet {
    fn constant(v: f64, nv: usize) -> Jet {
        Jet {
            v,
            g: vec![0.0; nv],
            h: vec![0.0; nv * nv],
        }
    }

    fn variable(v: f64, idx: usize, nv: usize) -> Jet {
        let mut j = Jet::constant(v, nv);
        j.g[idx] = 1.0;
        j
    }

    fn add(&self, o: &Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a + b).collect(),
            h: self.h.iter().zip(&o.h).map(|(a, b)| a + b).collect(),
        }
    }

    fn mul(&self, o: &Jet) -> Jet {
        let nv = self.g.len();
        let mut h = vec![0.0; nv * nv];
        for i in 0..nv {
            for k in 0..nv {
                h[i * nv + k] = self.v * o.h[i * nv + k]
                    + o.v * self.h[i * nv + k]
                    + self.g[i] * o.g[k]
                    + o.g[i] * self.g[k];
            }
        }
        Jet {
            v: self.v * o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a * o.v + self.v * b).collect(),
            h,
        }
    }

    /// Chain rule for `phi(self)` given `phi`, `phi'`, `phi''` at `self.v`.
    fn compose(&self, f: f64, d1: f64, d2: f64) -> Jet {
        let nv = self.g.len();
        let mut h = vec![0.0; nv * nv];
        for i in 0..nv {
            for k in 0..nv {
                h[i * nv + k] = d1 * self.h[i * nv + k] + d2 * self.g[i] * self.g[k];
            }
        }
        Jet {
            v: f,
            g: self.g.iter().map(|a| d1 * a).collect(),
            h,
        }
    }

    pub fn hess(&self, i: usize, k: usize) -> f64 {
        self.h[i * self.g.len() + k]
    }

    pub fn grad_norm(&self) -> f64 {
        self.g.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// A defining function on C^n (`ScalarFieldExpr`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldExpr {
    pub root: Node,
    pub dim: usize,
}

impl ScalarFieldExpr {
    pub fn new(root: Node, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if let Some(j) = root.max_index() {
            if j >= dim {
                return Err(Error::InvalidArgument(format!(
                    "variable z_{} used in a field of dimension {}",
                    j + 1,
                    dim
                )));
            }
        }
        Ok(ScalarFieldExpr { root, dim })
    }

    pub fn eval(&self, z: &CVector) -> Result<f64> {
        z.check_dim(self.dim)?;
        Ok(self.root.eval(z))
    }

    /// Unchecked evaluation for hot loops.
    #[inline]
    pub fn value(&self, z: &CVector) -> f64 {
        self.root.eval(z)
    }

    /// Second-order jet; errors on a declared singular locus.
    pub fn jet(&self, z: &CVector) -> Result<Jet> {
        let (j, sing) = self.jet_flagged(z)?;
        match sing {
            Some(why) => Err(Error::SingularLocus(why)),
            None => Ok(j),
        }
    }

    /// Second-order jet together with the singular-locus flag; on the locus
    /// the offending subterm contributes its one-sided limit.
    pub fn jet_flagged(&self, z: &CVector) -> Result<(Jet, Option<String>)> {
        z.check_dim(self.dim)?;
        let mut flags = Singular::default();
        let j = self.root.eval_jet(z, &mut flags);
        Ok((j, flags.0))
    }

    /// Enclosure of the range over the box `b` (2n intervals, interleaved).
    pub fn range(&self, b: &[Interval]) -> Interval {
        debug_assert_eq!(b.len(), 2 * self.dim);
        self.root.eval_interval(b)
    }

    /// Enclosures of the value and of the real gradient (interleaved
    /// `d/dx_j, d/dy_j`) over the box `b`.
    pub fn grad_range(&self, b: &[Interval]) -> (Interval, Vec<Interval>) {
        debug_assert_eq!(b.len(), 2 * self.dim);
        self.root.eval_grad_interval(b)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "const({c})"),
            Node::Re(j) => write!(f, "re({})", j + 1),
            Node::Im(j) => write!(f, "im({})", j + 1),
            Node::Abs2(j) => write!(f, "abs2({})", j + 1),
            Node::AbsPow(j, m) => write!(f, "absp({},{})", j + 1, m),
            Node::Norm => write!(f, "norm"),
            Node::Sum(v) | Node::Product(v) => {
                let op = if matches!(self, Node::Sum(_)) { "+" } else { "*" };
                match v.len() {
                    0 => write!(f, "const({})", if op == "+" { 0.0 } else { 1.0 }),
                    1 => write!(f, "{}", v[0]),
                    _ => {
                        // binary prefix chain: op a op b c ...
                        for _ in 0..v.len() - 1 {
                            write!(f, "{op} ")?;
                        }
                        let parts: Vec<String> = v.iter().map(|n| n.to_string()).collect();
                        write!(f, "{}", parts.join(" "))
                    }
                }
            }
            Node::Pow(e, k) => write!(f, "^ {e} {k}"),
        }
    }
}

impl fmt::Display for ScalarFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}
