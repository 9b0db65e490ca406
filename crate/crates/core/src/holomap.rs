//! Holomorphic maps `C^n -> C^m` given by rational expressions in the
//! complex coordinates, with exact complex Jacobians.
//!
//! Component grammar (prefix, like defining functions):
//!
//! ```text
//! expr := NUMBER | c(RE, IM) | z(J) | + expr expr | - expr expr
//!       | * expr expr | / expr expr | ^ expr INTEGER
//! ```

use nalgebra::DMatrix;

use crate::canonical::{kobayashi_canonical, CanonicalDomain};
use crate::cvector::{c, CVector, Unitary, C64};
use crate::error::{Error, Result};
use crate::parse::{err_at, tokenize, Origin, Token, TokenKind};

#[derive(Debug, Clone, PartialEq)]
pub enum CExpr {
    Const(C64),
    /// 0-based coordinate.
    Var(usize),
    Add(Box<CExpr>, Box<CExpr>),
    Sub(Box<CExpr>, Box<CExpr>),
    Mul(Box<CExpr>, Box<CExpr>),
    Div(Box<CExpr>, Box<CExpr>),
    Pow(Box<CExpr>, u32),
}

impl CExpr {
    pub fn var(j: usize) -> CExpr {
        CExpr::Var(j)
    }
    pub fn constant(v: C64) -> CExpr {
        CExpr::Const(v)
    }
    pub fn add(a: CExpr, b: CExpr) -> CExpr {
        CExpr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: CExpr, b: CExpr) -> CExpr {
        CExpr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: CExpr, b: CExpr) -> CExpr {
        CExpr::Mul(Box::new(a), Box::new(b))
    }
    pub fn div(a: CExpr, b: CExpr) -> CExpr {
        CExpr::Div(Box::new(a), Box::new(b))
    }
    pub fn pow(a: CExpr, k: u32) -> CExpr {
        CExpr::Pow(Box::new(a), k)
    }

    fn max_index(&self) -> Option<usize> {
        match self {
            CExpr::Const(_) => None,
            CExpr::Var(j) => Some(*j),
            CExpr::Add(a, b) | CExpr::Sub(a, b) | CExpr::Mul(a, b) | CExpr::Div(a, b) => {
                a.max_index().max(b.max_index())
            }
            CExpr::Pow(a, _) => a.max_index(),
        }
    }

    /// Value and gradient `(d/dz_k)_k`.
    fn eval_grad(&self, z: &CVector) -> Result<(C64, Vec<C64>)> {
        let n = z.dim();
        let zero = c(0.0, 0.0);
        Ok(match self {
            CExpr::Const(v) => (*v, vec![zero; n]),
            CExpr::Var(j) => {
                let mut g = vec![zero; n];
                g[*j] = c(1.0, 0.0);
                (z[*j], g)
            }
            CExpr::Add(a, b) | CExpr::Sub(a, b) => {
                let (u, gu) = a.eval_grad(z)?;
                let (v, gv) = b.eval_grad(z)?;
                let s = if matches!(self, CExpr::Add(..)) { 1.0 } else { -1.0 };
                (u + v * s, gu.iter().zip(&gv).map(|(p, q)| p + q * s).collect())
            }
            CExpr::Mul(a, b) => {
                let (u, gu) = a.eval_grad(z)?;
                let (v, gv) = b.eval_grad(z)?;
                (u * v, gu.iter().zip(&gv).map(|(p, q)| p * v + u * q).collect())
            }
            CExpr::Div(a, b) => {
                let (u, gu) = a.eval_grad(z)?;
                let (v, gv) = b.eval_grad(z)?;
                if v.norm() == 0.0 || !v.is_finite() {
                    return Err(Error::SingularLocus(format!("denominator vanishes at {z:?}")));
                }
                let v2 = v * v;
                (u / v, gu.iter().zip(&gv).map(|(p, q)| (p * v - u * q) / v2).collect())
            }
            CExpr::Pow(a, k) => {
                let (u, gu) = a.eval_grad(z)?;
                if *k == 0 {
                    return Ok((c(1.0, 0.0), vec![zero; n]));
                }
                let d = u.powu(k - 1) * (*k as f64);
                (u.powu(*k), gu.iter().map(|p| p * d).collect())
            }
        })
    }
}

/// A holomorphic map given componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloMapSpec {
    pub components: Vec<CExpr>,
    pub dim_in: usize,
}

impl HoloMapSpec {
    pub fn new(components: Vec<CExpr>, dim_in: usize) -> Result<Self> {
        if components.is_empty() || dim_in == 0 {
            return Err(Error::InvalidArgument("maps need at least one component and variable".into()));
        }
        for (i, e) in components.iter().enumerate() {
            if let Some(j) = e.max_index() {
                if j >= dim_in {
                    return Err(Error::InvalidArgument(format!(
                        "component {} uses z_{} but the source has dimension {}",
                        i + 1,
                        j + 1,
                        dim_in
                    )));
                }
            }
        }
        Ok(HoloMapSpec { components, dim_in })
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn identity(n: usize) -> Self {
        HoloMapSpec {
            components: (0..n).map(CExpr::Var).collect(),
            dim_in: n,
        }
    }

    /// `z -> U z`.
    pub fn unitary(u: &Unitary) -> Self {
        let n = u.dim();
        let components = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| CExpr::mul(CExpr::Const(u.0[(i, k)]), CExpr::Var(k)))
                    .reduce(CExpr::add)
                    .expect("nonempty")
            })
            .collect();
        HoloMapSpec { components, dim_in: n }
    }

    /// The automorphism of the unit ball exchanging `0` and `a e_1`
    /// (`-1 < a < 1`): `((a - z_1), -s z_2, ..., -s z_n) / (1 - a z_1)` with
    /// `s = sqrt(1 - a^2)`.
    pub fn ball_automorphism(n: usize, a: f64) -> Self {
        let s = (1.0 - a * a).sqrt();
        let den = CExpr::sub(CExpr::Const(c(1.0, 0.0)), CExpr::mul(CExpr::Const(c(a, 0.0)), CExpr::Var(0)));
        let mut components = vec![CExpr::div(
            CExpr::sub(CExpr::Const(c(a, 0.0)), CExpr::Var(0)),
            den.clone(),
        )];
        for k in 1..n {
            components.push(CExpr::div(
                CExpr::mul(CExpr::Const(c(-s, 0.0)), CExpr::Var(k)),
                den.clone(),
            ));
        }
        HoloMapSpec { components, dim_in: n }
    }

    /// `w -> w + w^2 / 4` on C.
    pub fn half_plane_squaring() -> Self {
        HoloMapSpec {
            components: vec![CExpr::add(
                CExpr::Var(0),
                CExpr::mul(CExpr::Const(c(0.25, 0.0)), CExpr::pow(CExpr::Var(0), 2)),
            )],
            dim_in: 1,
        }
    }

    pub fn eval(&self, z: &CVector) -> Result<CVector> {
        Ok(self.jacobian(z)?.0)
    }

    /// Value and complex Jacobian `J_ik = d Phi_i / d z_k`.
    pub fn jacobian(&self, z: &CVector) -> Result<(CVector, DMatrix<C64>)> {
        z.check_dim(self.dim_in)?;
        let m = self.dim_out();
        let mut vals = Vec::with_capacity(m);
        let mut jac = DMatrix::from_element(m, self.dim_in, c(0.0, 0.0));
        for (i, e) in self.components.iter().enumerate() {
            let (v, g) = e.eval_grad(z)?;
            vals.push(v);
            for (k, gk) in g.into_iter().enumerate() {
                jac[(i, k)] = gk;
            }
        }
        Ok((CVector(vals), jac))
    }

    /// `Phi_{*z} X`.
    pub fn pushforward(&self, z: &CVector, x: &CVector) -> Result<CVector> {
        x.check_dim(self.dim_in)?;
        let (_, j) = self.jacobian(z)?;
        Ok(CVector(
            (0..self.dim_out())
                .map(|i| (0..self.dim_in).map(|k| j[(i, k)] * x[k]).sum())
                .collect(),
        ))
    }

    /// Largest relative deviation between the Jacobian and central finite
    /// differences at the given points.
    pub fn jacobian_fd_deviation(&self, points: &[CVector]) -> Result<f64> {
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for z in points {
            let (_, j) = self.jacobian(z)?;
            for k in 0..self.dim_in {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[k] += c(h, 0.0);
                zm[k] -= c(h, 0.0);
                let fd = (&self.eval(&zp)? - &self.eval(&zm)?).scale_real(0.5 / h);
                for i in 0..self.dim_out() {
                    let scale = j[(i, k)].norm().max(1.0);
                    worst = worst.max((fd[i] - j[(i, k)]).norm() / scale);
                }
            }
        }
        Ok(worst)
    }
}

/// `F_G(h(z), h'(z) X)`: a lower bound for the metric of any domain that `h`
/// maps into `G`.
pub fn contraction_transfer(h: &HoloMapSpec, target: &CanonicalDomain, z: &CVector, x: &CVector) -> Result<f64> {
    let (w, _) = h.jacobian(z)?;
    let v = h.pushforward(z, x)?;
    Ok(kobayashi_canonical(target, &w, &v)?.value)
}

struct MapParser {
    toks: Vec<Token>,
    pos: usize,
    dim: usize,
    end: (usize, usize),
}

impl MapParser {
    fn next(&mut self) -> Result<Token> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| err_at(self.end.0, self.end.1, "expression ends early"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self) -> Result<CExpr> {
        let t = self.next()?;
        match &t.kind {
            TokenKind::Number(v) => Ok(CExpr::Const(c(*v, 0.0))),
            TokenKind::Op(op) => {
                let a = self.expr()?;
                if *op == '^' {
                    let k = self.next()?;
                    return match k.kind {
                        TokenKind::Number(v) if v >= 0.0 && v.fract() == 0.0 => Ok(CExpr::pow(a, v as u32)),
                        _ => Err(err_at(k.line, k.column, "exponent must be a nonnegative integer")),
                    };
                }
                let b = self.expr()?;
                Ok(match op {
                    '+' => CExpr::add(a, b),
                    '-' => CExpr::sub(a, b),
                    '*' => CExpr::mul(a, b),
                    _ => CExpr::div(a, b),
                })
            }
            TokenKind::Call(name, args) if name == "z" => {
                if args.len() != 1 || args[0].fract() != 0.0 || args[0] < 1.0 || args[0] as usize > self.dim {
                    return Err(err_at(
                        t.line,
                        t.column,
                        format!("z(J) needs an index between 1 and {}", self.dim),
                    ));
                }
                Ok(CExpr::Var(args[0] as usize - 1))
            }
            TokenKind::Call(name, args) if name == "c" => match args.as_slice() {
                [re, im] => Ok(CExpr::Const(c(*re, *im))),
                _ => Err(err_at(t.line, t.column, "c(RE, IM) takes two numbers")),
            },
            TokenKind::Call(name, _) | TokenKind::Word(name) => {
                Err(err_at(t.line, t.column, format!("unknown token '{name}'")))
            }
        }
    }
}

fn end_of(src: &str, origin: Origin) -> (usize, usize) {
    let mut line = origin.line;
    let mut col = origin.column;
    for ch in src.chars() {
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// Parses one component over `dim` complex variables.
pub fn parse_component_at(src: &str, dim: usize, origin: Origin) -> Result<CExpr> {
    let toks = tokenize(src, origin, &['+', '-', '*', '/', '^'])?;
    let mut p = MapParser {
        toks,
        pos: 0,
        dim,
        end: end_of(src, origin),
    };
    let e = p.expr()?;
    if let Some(t) = p.toks.get(p.pos) {
        return Err(err_at(t.line, t.column, "unexpected trailing tokens"));
    }
    Ok(e)
}

pub fn parse_map(components: &[&str], dim: usize) -> Result<HoloMapSpec> {
    let comps = components
        .iter()
        .map(|s| parse_component_at(s, dim, Origin::default()))
        .collect::<Result<Vec<_>>>()?;
    HoloMapSpec::new(comps, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn parses_and_differentiates() {
        let m = parse_map(&["+ z(1) * 0.25 ^ z(1) 2", "/ z(2) - 1 * c(0.5, 0) z(1)"], 2).unwrap();
        let z = CVector::new(vec![c(0.3, 0.1), c(-0.2, 0.4)]);
        let (v, j) = m.jacobian(&z).unwrap();
        let z1 = z[0];
        assert!((v[0] - (z1 + 0.25 * z1 * z1)).norm() < 1e-15);
        assert!((j[(0, 0)] - (1.0 + 0.5 * z1)).norm() < 1e-15);
        let pts = vec![z.clone(), CVector::new(vec![c(-0.5, 0.2), c(0.1, 0.0)])];
        assert!(m.jacobian_fd_deviation(&pts).unwrap() < 1e-6);
    }

    #[test]
    fn reports_positions() {
        let e = parse_component_at("+ z(1) sin", 1, Origin { line: 4, column: 10 }).unwrap_err();
        match e {
            Error::Parse { line, column, message } => {
                assert_eq!((line, column), (4, 17));
                assert!(message.contains("sin"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_map(&["z(3)"], 2).is_err());
    }

    #[test]
    fn ball_automorphism_is_an_involution_fixing_the_sphere() {
        let m = HoloMapSpec::ball_automorphism(2, 0.3);
        let z = CVector::new(vec![c(0.2, -0.1), c(0.3, 0.4)]);
        let back = m.eval(&m.eval(&z).unwrap()).unwrap();
        assert!(back.dist(&z) < 1e-14);
        let p = CVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        assert!((m.eval(&p).unwrap().norm() - 1.0).abs() < 1e-14);
        assert!(m.jacobian_fd_deviation(&[z]).unwrap() < 1e-6);
    }

    #[test]
    fn contraction_of_identity_and_projection() {
        let z = CVector::new(vec![c(0.3, 0.2)]);
        let x = CVector::new(vec![c(1.0, 0.0)]);
        let id = HoloMapSpec::identity(1);
        let exact = kobayashi_canonical(&CanonicalDomain::UnitDisc, &z, &x).unwrap().value;
        assert_eq!(contraction_transfer(&id, &CanonicalDomain::UnitDisc, &z, &x).unwrap(), exact);
        // w -> -z_2 maps {Re z_2 < 0} into the right half-plane
        let proj = parse_map(&["* -1 z(2)"], 2).unwrap();
        let delta = 1e-3;
        let p = CVector::new(vec![c(0.0, 0.0), c(-delta, 0.0)]);
        let e2 = CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let v = contraction_transfer(&proj, &CanonicalDomain::RightHalfPlane, &p, &e2).unwrap();
        assert!((v - 1.0 / (2.0 * delta)).abs() < 1e-9);
    }

    #[test]
    fn unitary_map_matches_matrix() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = Unitary::random(3, &mut rng);
        let m = HoloMapSpec::unitary(&u);
        let z = CVector::new(vec![c(0.1, 0.2), c(-0.3, 0.0), c(0.0, 0.5)]);
        assert!(m.eval(&z).unwrap().dist(&u.apply(&z)) < 1e-15);
    }
}
