//! Linear readout trained in one shot by the Moore-Penrose pseudo-inverse.
//!
//! Orientation: feature matrices hold one sample per row and one feature per
//! column, targets one sample per row. A weight matrix maps features to
//! targets, `targets ~ F W^T`, so it has one row per target and one column
//! per feature.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

const SVD_MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    matrix: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn num_targets(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Pseudo-inverse by SVD. Singular values at or below
/// `rel_tol * sigma_max` are treated as zero.
pub fn pseudo_inverse(f: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    if f.is_empty() {
        return Err(Error::ShapeMismatch("cannot invert an empty matrix".into()));
    }
    if !(rel_tol.is_finite() && rel_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("rel_tol must be >= 0, got {rel_tol}")));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::SvdFailed);
    }
    let svd = SVD::try_new(f.clone(), true, true, f64::EPSILON, SVD_MAX_ITERATIONS).ok_or(Error::SvdFailed)?;
    let u = svd.u.as_ref().ok_or(Error::SvdFailed)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::SvdFailed)?;
    let sigma = &svd.singular_values;
    let cutoff = rel_tol * sigma.max();
    let mut out = DMatrix::zeros(f.ncols(), f.nrows());
    for (i, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            // out += v_i u_i^T / s
            out.ger(1.0 / s, &v_t.row(i).transpose(), &u.column(i), 1.0);
        }
    }
    Ok(out)
}

/// Fits `W` with `targets ~ F W^T`.
///
/// `ridge = 0` gives `W = Y^T (F^T)^+`, the minimum-norm least-squares fit.
/// `ridge > 0` gives `W = Y^T F (F^T F + ridge I)^-1`.
pub fn train_readout(f: &DMatrix<f64>, targets: &DMatrix<f64>, rel_tol: f64, ridge: f64) -> Result<WeightMatrix> {
    if f.nrows() != targets.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows but {} target rows",
            f.nrows(),
            targets.nrows()
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {ridge}")));
    }
    if ridge == 0.0 {
        let pinv = pseudo_inverse(f, rel_tol)?;
        return Ok(WeightMatrix::new((pinv * targets).transpose()));
    }
    let n = f.ncols();
    let gram = f.transpose() * f + DMatrix::identity(n, n) * ridge;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("regularized Gram matrix is not positive definite".into()))?;
    let w_t = chol.solve(&(f.transpose() * targets));
    Ok(WeightMatrix::new(w_t.transpose()))
}

/// `F W^T`, one prediction row per sample.
pub fn predict(w: &WeightMatrix, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if w.num_features() != f.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "weights expect {} features, got {}",
            w.num_features(),
            f.ncols()
        )));
    }
    Ok(f * w.matrix.transpose())
}
