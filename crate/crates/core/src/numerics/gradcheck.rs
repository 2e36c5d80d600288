//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GradCheck {
    /// Max over all entries of `|g_a - g_n| / max(1e-8, |g_a| + |g_n|)`.
    pub max_rel_error: f64,
    /// Same quantity restricted to each parameter matrix.
    pub per_tensor: Vec<f64>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `f` around `params`.
pub fn finite_diff_check(
    mut f: impl FnMut(&[Matrix]) -> Result<f64>,
    params: &[Matrix],
    analytic: &[Matrix],
    eps: f64,
) -> Result<GradCheck> {
    if !(eps > 0.0) {
        return Err(Error::Usage(format!("finite-difference step must be positive, got {eps}")));
    }
    if params.len() != analytic.len() {
        return Err(Error::Usage(format!(
            "{} parameter matrices but {} gradients",
            params.len(),
            analytic.len()
        )));
    }
    for (p, g) in params.iter().zip(analytic) {
        p.expect_same_shape(g, "finite_diff_check")?;
    }

    let mut work = params.to_vec();
    let mut per_tensor = Vec::with_capacity(params.len());
    for t in 0..params.len() {
        let mut worst: f64 = 0.0;
        for k in 0..params[t].len() {
            let orig = params[t].as_slice()[k];
            work[t].as_mut_slice()[k] = orig + eps;
            let up = f(&work)?;
            work[t].as_mut_slice()[k] = orig - eps;
            let down = f(&work)?;
            work[t].as_mut_slice()[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max(relative_error(analytic[t].as_slice()[k], numeric));
        }
        per_tensor.push(worst);
    }
    Ok(GradCheck {
        max_rel_error: per_tensor.iter().copied().fold(0.0, f64::max),
        per_tensor,
    })
}
