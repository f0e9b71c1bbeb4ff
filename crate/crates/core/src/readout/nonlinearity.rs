use crate::error::{Error, Result};

/// Euclidean norm of the residual of the least-squares fit `ys ~ alpha + beta xs`.
/// `xs` need not be sorted but must not be constant.
pub fn affine_fit_residual(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch(format!("{} xs but {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= f64::EPSILON * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::Degenerate("xs are constant".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - alpha - beta * x;
            r * r
        })
        .sum();
    Ok(rss.sqrt())
}

/// Affine-fit residual of `ys` against `xs`, relative to `max |ys|`.
/// Zero for exactly affine data.
pub fn nonlinearity_score(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Degenerate("xs must be strictly increasing".into()));
    }
    let residual = affine_fit_residual(xs, ys)?;
    let scale = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs())).max(1e-12);
    Ok(residual / scale)
}
