//! Wirtinger calculus on defining functions: complex gradients, Levi forms
//! and their restriction to the complex tangent space.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cvector::{c, CVector, Unitary, C64};
use crate::error::Result;
use crate::expr::{Jet, ScalarFieldExpr};

/// `(dr/dz_j)_j` with `d/dz = (d/dx - i d/dy) / 2`.
pub fn wirtinger_gradient(field: &ScalarFieldExpr, z: &CVector) -> Result<CVector> {
    let jet = field.jet(z)?;
    Ok(gradient_from_jet(&jet))
}

pub(crate) fn gradient_from_jet(jet: &Jet) -> CVector {
    let n = jet.g.len() / 2;
    CVector((0..n).map(|j| c(0.5 * jet.g[2 * j], -0.5 * jet.g[2 * j + 1])).collect())
}

/// `d^2 r / dz_j dzbar_k`.
pub(crate) fn levi_matrix_from_jet(jet: &Jet) -> DMatrix<C64> {
    let n = jet.g.len() / 2;
    DMatrix::from_fn(n, n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        0.25 * c(
            jet.hess(xj, xk) + jet.hess(yj, yk),
            jet.hess(xj, yk) - jet.hess(yj, xk),
        )
    })
}

/// `d^2 r / dz_j dz_k` (the pure holomorphic part of the Hessian).
pub(crate) fn holomorphic_hessian_from_jet(jet: &Jet) -> DMatrix<C64> {
    let n = jet.g.len() / 2;
    DMatrix::from_fn(n, n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        0.25 * c(
            jet.hess(xj, xk) - jet.hess(yj, yk),
            -(jet.hess(xj, yk) + jet.hess(yj, xk)),
        )
    })
}

/// Levi form restricted to the complex tangent space
/// `{X : sum_j (dr/dz_j) X_j = 0}`.
#[derive(Debug, Clone)]
pub struct RestrictedLevi {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit tangent vectors in C^n, one per eigenvalue.
    pub eigenvectors: Vec<CVector>,
}

#[derive(Debug, Clone)]
pub struct LeviData {
    pub matrix: DMatrix<C64>,
    pub gradient: CVector,
    /// Absent when the gradient vanishes.
    pub restricted: Option<RestrictedLevi>,
}

impl LeviData {
    pub fn restricted_eigenvalues(&self) -> Option<&[f64]> {
        self.restricted.as_ref().map(|r| r.eigenvalues.as_slice())
    }

    pub fn min_restricted(&self) -> Option<f64> {
        self.restricted_eigenvalues()
            .and_then(|e| e.first().copied())
    }
}

const DEGENERATE_GRADIENT: f64 = 1e-12;

pub fn levi_form(field: &ScalarFieldExpr, z: &CVector) -> Result<LeviData> {
    let jet = field.jet(z)?;
    Ok(levi_from_jet(&jet))
}

pub(crate) fn levi_from_jet(jet: &Jet) -> LeviData {
    let matrix = levi_matrix_from_jet(jet);
    let gradient = gradient_from_jet(jet);
    let restricted = restrict(&matrix, &gradient);
    LeviData {
        matrix,
        gradient,
        restricted,
    }
}

fn restrict(m: &DMatrix<C64>, gradient: &CVector) -> Option<RestrictedLevi> {
    let n = gradient.dim();
    if gradient.norm() <= DEGENERATE_GRADIENT {
        return None;
    }
    if n == 1 {
        return Some(RestrictedLevi {
            eigenvalues: vec![],
            eigenvectors: vec![],
        });
    }
    // conj(dr) spans the orthogonal complement of the tangent space
    let u = Unitary::to_last_axis(&gradient.conj()).ok()?;
    let basis: Vec<CVector> = (0..n - 1)
        .map(|a| CVector((0..n).map(|j| u.0[(a, j)].conj()).collect()))
        .collect();
    let k = n - 1;
    let red = DMatrix::from_fn(k, k, |a, b| {
        let mut s = C64::new(0.0, 0.0);
        for j in 0..n {
            for l in 0..n {
                s += basis[a][j] * m[(j, l)] * basis[b][l].conj();
            }
        }
        s
    });
    // sum c_a conj(c_b) red_ab = c^* red^T c
    let h = red.transpose();
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut pairs: Vec<(f64, CVector)> = (0..k)
        .map(|i| {
            let col = eig.eigenvectors.column(i);
            let mut v = CVector::zeros(n);
            for (a, b) in basis.iter().enumerate() {
                v = &v + &b.scale(col[a]);
            }
            (eig.eigenvalues[i], v.normalized().unwrap_or(v))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    Some(RestrictedLevi {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors: pairs.into_iter().map(|p| p.1).collect(),
    })
}

/// Value of the Levi form `sum M_jk X_j conj(X_k)`.
pub fn levi_value(m: &DMatrix<C64>, x: &CVector) -> f64 {
    let n = x.dim();
    let mut s = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            s += m[(j, k)] * x[j] * x[k].conj();
        }
    }
    s.re
}
