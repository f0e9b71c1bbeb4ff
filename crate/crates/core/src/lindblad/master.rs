//! Dense reference forms of the Lindblad dissipator and master-equation
//! right-hand side. The integrator uses the compiled form in `kernel`.

use crate::error::Result;
use crate::fock::{same_space, CMatrix, DensityMatrix, Operator, C64};

/// `C rho C^+ - 1/2 C^+C rho - 1/2 rho C^+C`.
pub fn dissipator(c: &Operator, rho: &DensityMatrix) -> Result<CMatrix> {
    same_space(c.space(), rho.space())?;
    let c = c.matrix();
    let cd = c.adjoint();
    let cdc = &cd * c;
    let r = rho.matrix();
    let jump = c * r * &cd;
    let anti = &cdc * r + r * &cdc;
    Ok(jump - anti * C64::new(0.5, 0.0))
}

/// `-i[H, rho] + sum_C D[C](rho)`.
pub fn rhs(h: &Operator, collapses: &[Operator], rho: &DensityMatrix) -> Result<CMatrix> {
    same_space(h.space(), rho.space())?;
    let r = rho.matrix();
    let comm = h.matrix() * r - r * h.matrix();
    let mut out = comm * C64::new(0.0, -1.0);
    for c in collapses {
        out += dissipator(c, rho)?;
    }
    Ok(out)
}
