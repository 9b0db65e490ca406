//! Points and tangent vectors in C^n, plus the unitary frames used to
//! normalize boundary points.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A point or tangent vector in C^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVector(pub Vec<C64>);

impl CVector {
    pub fn new(entries: Vec<C64>) -> Self {
        CVector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        CVector(vec![C64::new(0.0, 0.0); n])
    }

    /// The `j`-th standard basis vector (0-based).
    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[j] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_reals(parts: &[(f64, f64)]) -> Self {
        CVector(parts.iter().map(|&(x, y)| C64::new(x, y)).collect())
    }

    /// Interleaved real coordinates `(x_1, y_1, ..., x_n, y_n)`.
    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn from_real(xs: &[f64]) -> Self {
        CVector(xs.chunks(2).map(|p| C64::new(p[0], p[1])).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian pairing `<u, v> = sum u_j conj(v_j)`.
    pub fn inner(&self, other: &CVector) -> C64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(u, v)| u * v.conj())
            .sum()
    }

    /// Bilinear pairing `sum u_j v_j` (a (1,0)-form acting on a vector).
    pub fn pair(&self, other: &CVector) -> C64 {
        self.0.iter().zip(&other.0).map(|(u, v)| u * v).sum()
    }

    pub fn conj(&self) -> CVector {
        CVector(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn normalized(&self) -> Option<CVector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale_real(1.0 / n))
    }

    /// Last coordinate `z_n`.
    pub fn last(&self) -> C64 {
        *self.0.last().expect("CVector of length zero")
    }

    /// Tangential coordinates `(z_1, ..., z_{n-1})`.
    pub fn head(&self) -> &[C64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn head_norm(&self) -> f64 {
        self.head().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &CVector) -> f64 {
        (self - other).norm()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.dim(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &CVector {
    type Output = CVector;
    fn neg(self) -> CVector {
        CVector(self.0.iter().map(|a| -a).collect())
    }
}

impl Mul<f64> for &CVector {
    type Output = CVector;
    fn mul(self, s: f64) -> CVector {
        self.scale_real(s)
    }
}

/// A unitary matrix acting on C^n.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary(pub DMatrix<C64>);

impl Unitary {
    pub fn identity(n: usize) -> Self {
        Unitary(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..n {
                *o += self.0[(i, j)] * v.0[j];
            }
        }
        CVector(out)
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }

    pub fn compose(&self, other: &Unitary) -> Unitary {
        Unitary(&self.0 * &other.0)
    }

    /// Haar-like random unitary from Gram-Schmidt on a complex Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let cols: Vec<CVector> = (0..n)
                .map(|_| {
                    CVector(
                        (0..n)
                            .map(|_| C64::new(gaussian(rng), gaussian(rng)))
                            .collect(),
                    )
                })
                .collect();
            if let Some(basis) = gram_schmidt(&cols) {
                return Unitary(columns_to_matrix(&basis));
            }
        }
    }

    /// A unitary `U` with `U * normal = e_n` (last basis vector).
    ///
    /// The remaining rows are an orthonormal basis of the complex tangent
    /// space, completed from the standard basis.
    pub fn to_last_axis(normal: &CVector) -> Result<Self> {
        let n = normal.dim();
        let nu = normal
            .normalized()
            .ok_or_else(|| Error::Degenerate("zero normal vector".into()))?;
        let mut candidates = vec![nu.clone()];
        // order standard vectors by how little they overlap the normal
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| nu.0[a].norm().partial_cmp(&nu.0[b].norm()).unwrap());
        for j in order {
            candidates.push(CVector::unit(n, j));
        }
        let mut basis: Vec<CVector> = Vec::with_capacity(n);
        for v in candidates {
            let mut w = v.clone();
            for b in &basis {
                let p = w.inner(b);
                w = &w - &b.scale(p);
            }
            if let Some(w) = w.normalized() {
                if w.norm() > 0.5 {
                    basis.push(w);
                }
            }
            if basis.len() == n {
                break;
            }
        }
        // basis[0] = normal; rotate so it is the last row
        basis.rotate_left(1);
        let m = columns_to_matrix(&basis);
        Ok(Unitary(m.adjoint()))
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gram_schmidt(vs: &[CVector]) -> Option<Vec<CVector>> {
    let mut out: Vec<CVector> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for b in &out {
            let p = w.inner(b);
            w = &w - &b.scale(p);
        }
        let nrm = w.norm();
        if nrm < 1e-8 {
            return None;
        }
        out.push(w.scale_real(1.0 / nrm));
    }
    Some(out)
}

fn columns_to_matrix(cols: &[CVector]) -> DMatrix<C64> {
    let n = cols.len();
    DMatrix::from_fn(n, n, |i, j| cols[j].0[i])
}

/// Random point with norm below `radius`, uniform in the ball.
pub fn random_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> CVector {
    loop {
        let v = CVector(
            (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        if v.norm() < 1.0 {
            return v.scale_real(radius);
        }
    }
}

/// Random vector on the unit sphere of C^n.
pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector(
            (0..n)
                .map(|_| C64::new(gaussian(rng), gaussian(rng)))
                .collect(),
        );
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hermitian_pairing_is_conjugate_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = random_in_ball(3, 2.0, &mut rng);
            let v = random_in_ball(3, 2.0, &mut rng);
            let a = u.inner(&v);
            let b = v.inner(&u).conj();
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(CVector::zeros(2).norm(), 0.0);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = Unitary::random(3, &mut rng);
        let prod = &u.0 * u.0.adjoint();
        let err = (prod - DMatrix::<C64>::identity(3, 3)).norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn frame_sends_normal_to_last_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..4 {
            let nu = random_unit(n, &mut rng);
            let u = Unitary::to_last_axis(&nu).unwrap();
            let img = u.apply(&nu);
            assert!((img.last() - C64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(img.head_norm() < 1e-12);
            let prod = &u.0 * u.0.adjoint();
            assert!((prod - DMatrix::<C64>::identity(n, n)).norm() < 1e-12);
        }
    }
}
