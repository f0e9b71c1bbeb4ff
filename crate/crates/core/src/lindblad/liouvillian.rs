//! Vectorized Liouvillian and the matrix-exponential reference propagator.
//!
//! Vectorization is column stacking, `vec(A X B) = (B^T kron A) vec(X)`,
//! which is also nalgebra's storage order.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fock::{same_space, CMatrix, DensityMatrix, Operator, C64};

/// `L` such that `vec(rhs(rho)) = L vec(rho)`; shape `d^2 x d^2`.
pub fn liouvillian_matrix(h: &Operator, collapses: &[Operator]) -> Result<CMatrix> {
    for c in collapses {
        same_space(h.space(), c.space())?;
    }
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    let hm = h.matrix();
    let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for c in collapses {
        let cm = c.matrix();
        let cdc = cm.adjoint() * cm;
        l += cm.conjugate().kronecker(cm);
        l -= (id.kronecker(&cdc) + cdc.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
    }
    Ok(l)
}

pub fn vectorize(rho: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, d: usize) -> Result<CMatrix> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: v.len(),
        });
    }
    Ok(CMatrix::from_column_slice(d, d, v.as_slice()))
}

/// `exp(L t)` by Padé scaling and squaring.
pub fn propagator(liouvillian: &CMatrix, t: f64) -> CMatrix {
    (liouvillian * C64::new(t, 0.0)).exp()
}

/// `rho(t) = unvec(exp(L t) vec(rho0))`.
pub fn expm_evolve(liouvillian: &CMatrix, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    let d = rho0.dim();
    if liouvillian.nrows() != d * d || liouvillian.ncols() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: liouvillian.nrows(),
        });
    }
    let v = propagator(liouvillian, t) * vectorize(rho0.matrix());
    DensityMatrix::new(rho0.space().clone(), unvectorize(&v, d)?)
}
