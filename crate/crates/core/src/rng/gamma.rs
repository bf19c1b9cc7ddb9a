use super::DeviateBuffer;
use crate::{Error, Result};

/// Hard cap on rejection iterations; hitting it means the deviate source is broken.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    alpha: f64,
    rate: f64,
}

impl GammaParams {
    pub fn new(alpha: f64, rate: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma needs positive finite shape and rate, got ({alpha}, {rate})"
            )));
        }
        Ok(Self { alpha, rate })
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Marsaglia–Tsang squeeze/rejection for shape >= 1, unit rate.
fn gamma_ge1(alpha: f64, u: &mut DeviateBuffer, n: &mut DeviateBuffer) -> Result<f64> {
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    for _ in 0..MAX_REJECTIONS {
        let x = n.next();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let uu = u.next();
        let x2 = x * x;
        if uu < 1.0 - 0.0331 * x2 * x2 {
            return Ok(d * v);
        }
        if uu.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return Ok(d * v);
        }
    }
    Err(Error::RejectionLimit(MAX_REJECTIONS))
}

/// One Gamma(alpha, rate) deviate from buffered uniforms and normals.
///
/// Shape below 1 samples Gamma(alpha + 1) and scales by `U^(1/alpha)`, taking
/// one extra uniform after the rejection loop.
pub fn gamma_sample(
    params: &GammaParams,
    u_buf: &mut DeviateBuffer,
    n_buf: &mut DeviateBuffer,
) -> Result<f64> {
    let alpha = params.alpha;
    let g = if alpha < 1.0 {
        let g = gamma_ge1(alpha + 1.0, u_buf, n_buf)?;
        g * u_buf.next().powf(1.0 / alpha)
    } else {
        gamma_ge1(alpha, u_buf, n_buf)?
    };
    Ok(g / params.rate)
}

/// Dirichlet via normalized Gamma(alpha_i, 1) draws. An all-zero draw (tiny
/// alphas underflowing) is retried once.
pub fn dirichlet_sample(
    alphas: &[f64],
    u_buf: &mut DeviateBuffer,
    n_buf: &mut DeviateBuffer,
) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("dirichlet needs at least one alpha".into()));
    }
    let params = alphas
        .iter()
        .map(|&a| GammaParams::new(a, 1.0))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..2 {
        let mut y = params
            .iter()
            .map(|p| gamma_sample(p, u_buf, n_buf))
            .collect::<Result<Vec<_>>>()?;
        let total: f64 = y.iter().sum();
        if total > 0.0 {
            y.iter_mut().for_each(|v| *v /= total);
            return Ok(y);
        }
    }
    Err(Error::DirichletUnderflow)
}
