//! Slice-within-Gibbs for Bayesian logistic regression with a diagonal
//! Gaussian prior.
//!
//! Each coordinate is drawn with Neal's stepping-out and shrinkage slice
//! sampler. With the differential-update path every conditional evaluation
//! costs one pass over a single column of X instead of the full matrix.

use std::io::Write;
use std::time::Instant;

use crate::glm::{Coefficients, DesignMatrix, ExecPlan, GlmEvaluator, GlmWorkspace};
use crate::rng::{DeviateBuffer, DeviateKind, Stream, DEFAULT_CAPACITY};
use crate::{Error, Result};

/// Independent `N(mu_k, sigma_k^2)` prior on each coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma.len() || mu.is_empty() {
            return Err(Error::Dimension(format!(
                "prior mu has length {}, sigma has length {}",
                mu.len(),
                sigma.len()
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) || sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument("prior needs finite mu and positive finite sigma".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn isotropic(k: usize, mu: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![mu; k], vec![sigma; k])
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Log-density of coordinate `k` at `value`, without the normalizing constant.
    #[inline]
    pub fn log_density_coord(&self, k: usize, value: f64) -> f64 {
        let d = (value - self.mu[k]) / self.sigma[k];
        -0.5 * d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceParams {
    /// Initial bracket width.
    pub width: f64,
    /// Total stepping-out expansions allowed before giving up.
    pub max_steps: usize,
}

impl Default for SliceParams {
    fn default() -> Self {
        Self {
            width: 1.0,
            max_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_iter: usize,
    pub n_burnin: usize,
    pub seed: u64,
    pub slice: SliceParams,
    /// Evaluate conditionals through the maintained `X * beta` (default) or by
    /// full recomputation.
    pub diff_update: bool,
}

impl ChainConfig {
    pub fn new(n_iter: usize, n_burnin: usize, seed: u64) -> Self {
        Self {
            n_iter,
            n_burnin,
            seed,
            slice: SliceParams::default(),
            diff_update: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.n_burnin >= self.n_iter {
            return Err(Error::InvalidArgument(format!(
                "need n_iter >= 1 and n_burnin < n_iter, got {} / {}",
                self.n_iter, self.n_burnin
            )));
        }
        if !(self.slice.width > 0.0 && self.slice.width.is_finite()) {
            return Err(Error::InvalidArgument("slice width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// One row per retained iteration.
    pub draws: Vec<Vec<f64>>,
    /// Conditional-posterior evaluations over the whole run.
    pub accept_evals: u64,
    pub wall_time: f64,
}

impl ChainOutput {
    pub fn n_cols(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let n = self.draws.len() as f64;
        let mut m = vec![0.0; self.n_cols()];
        for row in &self.draws {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    pub fn posterior_sd(&self) -> Vec<f64> {
        let mean = self.posterior_mean();
        let n = self.draws.len() as f64;
        let mut v = vec![0.0; mean.len()];
        for row in &self.draws {
            for ((a, b), m) in v.iter_mut().zip(row).zip(&mean) {
                *a += (b - m) * (b - m);
            }
        }
        v.iter().map(|s| (s / (n - 1.0).max(1.0)).sqrt()).collect()
    }

    /// CSV with a `beta_<k>` header and one row per retained draw.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.n_cols()).map(|k| format!("beta_{k}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for row in &self.draws {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Conditional log-posterior of coordinate `k` at `beta_k + delta`, up to
/// terms that do not depend on `beta_k`.
pub fn log_posterior_coord(
    eval: &GlmEvaluator,
    ws: &GlmWorkspace,
    data: &DesignMatrix,
    prior: &GaussianPrior,
    k: usize,
    delta: f64,
) -> Result<f64> {
    let ll = eval.diff_loglike(ws, data, k, delta)?;
    if prior.len() != ws.n_cols() {
        return Err(Error::Dimension("prior and workspace disagree on K".into()));
    }
    Ok(ll + prior.log_density_coord(k, ws.beta()[k] + delta))
}

/// One univariate slice-sampling step from `delta = 0` on `logf`.
///
/// Returns the accepted offset and the number of `logf` evaluations.
pub fn slice_step<F>(mut logf: F, rng: &mut DeviateBuffer, params: &SliceParams) -> Result<(f64, u64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let w = params.width;
    let mut evals = 0u64;
    let mut f = |x: f64| {
        evals += 1;
        logf(x)
    };
    let f0 = f(0.0)?;
    let level = f0 + (1.0 - rng.next()).ln();
    let mut left = -w * rng.next();
    let mut right = left + w;
    let mut steps = 0;
    while f(left)? > level {
        if steps == params.max_steps {
            return Err(Error::SliceWidenLimit(params.max_steps));
        }
        left -= w;
        steps += 1;
    }
    while f(right)? > level {
        if steps == params.max_steps {
            return Err(Error::SliceWidenLimit(params.max_steps));
        }
        right += w;
        steps += 1;
    }
    loop {
        let x = left + rng.next() * (right - left);
        if f(x)? > level {
            return Ok((x, evals));
        }
        if x < 0.0 {
            left = x;
        } else {
            right = x;
        }
        // The current point is always in the slice; a collapsed bracket means
        // the target is a spike at it.
        if right - left <= 1e-12 * w {
            return Ok((0.0, evals));
        }
    }
}

/// Draws coordinate `k` from its conditional posterior and commits the new
/// value to the workspace. Returns the new `beta_k` and the evaluation count.
pub fn slice_sample_coord(
    eval: &GlmEvaluator,
    ws: &mut GlmWorkspace,
    data: &DesignMatrix,
    prior: &GaussianPrior,
    k: usize,
    rng: &mut DeviateBuffer,
    params: &SliceParams,
) -> Result<(f64, u64)> {
    let (delta, evals) = {
        let ws_ref = &*ws;
        slice_step(|d| log_posterior_coord(eval, ws_ref, data, prior, k, d), rng, params)?
    };
    eval.commit_update(ws, k, delta)?;
    Ok((ws.beta()[k], evals))
}

fn full_log_posterior_coord(
    eval: &GlmEvaluator,
    data: &DesignMatrix,
    prior: &GaussianPrior,
    beta: &mut [f64],
    k: usize,
    delta: f64,
) -> Result<f64> {
    let orig = beta[k];
    beta[k] = orig + delta;
    let coeffs = Coefficients::new(beta.to_vec());
    beta[k] = orig;
    Ok(eval.loglike(data, &coeffs?)? + prior.log_density_coord(k, orig + delta))
}

/// Systematic-scan Gibbs over `k = 0..K` starting at the prior mean.
pub fn run_chain(data: &DesignMatrix, prior: &GaussianPrior, cfg: &ChainConfig, plan: &ExecPlan) -> Result<ChainOutput> {
    cfg.validate()?;
    let k_dim = data.n_cols();
    if prior.len() != k_dim {
        return Err(Error::Dimension(format!("prior has length {}, data has K = {k_dim}", prior.len())));
    }
    let eval = GlmEvaluator::new(*plan)?;
    let mut rng = DeviateBuffer::new(DeviateKind::Uniform01, Stream::new(cfg.seed), DEFAULT_CAPACITY);
    let start = Instant::now();
    let mut draws = Vec::with_capacity(cfg.n_iter - cfg.n_burnin);
    let mut total_evals = 0;

    if cfg.diff_update {
        let mut ws = GlmWorkspace::new(data, &Coefficients::new(prior.mu().to_vec())?, true)?;
        for iter in 0..cfg.n_iter {
            for k in 0..k_dim {
                let (_, e) = slice_sample_coord(&eval, &mut ws, data, prior, k, &mut rng, &cfg.slice)?;
                total_evals += e;
            }
            if cfg!(debug_assertions) && (iter + 1) % 100 == 0 {
                let drift = ws.max_drift(data);
                debug_assert!(drift <= 1e-8, "workspace drifted by {drift} at iteration {iter}");
            }
            if iter >= cfg.n_burnin {
                draws.push(ws.beta().to_vec());
            }
        }
    } else {
        let mut beta = prior.mu().to_vec();
        for iter in 0..cfg.n_iter {
            for k in 0..k_dim {
                let (delta, e) = {
                    let beta_ref = &mut beta;
                    slice_step(
                        |d| full_log_posterior_coord(&eval, data, prior, beta_ref, k, d),
                        &mut rng,
                        &cfg.slice,
                    )?
                };
                beta[k] += delta;
                total_evals += e;
            }
            if iter >= cfg.n_burnin {
                draws.push(beta.clone());
            }
        }
    }
    Ok(ChainOutput {
        draws,
        accept_evals: total_evals,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::synthetic_random;

    #[test]
    fn prior_validation() {
        assert!(GaussianPrior::new(vec![0.0], vec![0.0]).is_err());
        assert!(GaussianPrior::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let p = GaussianPrior::isotropic(2, 1.0, 2.0).unwrap();
        assert_eq!(p.log_density_coord(1, 3.0), -0.5);
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(5, 5, 0).validate().is_err());
        assert!(ChainConfig::new(0, 0, 0).validate().is_err());
        let mut c = ChainConfig::new(5, 1, 0);
        c.slice.width = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn one_stored_draw() {
        let (d, _) = synthetic_random(40, 2, 1).unwrap();
        let prior = GaussianPrior::isotropic(2, 0.0, 1.0).unwrap();
        let out = run_chain(&d, &prior, &ChainConfig::new(4, 3, 7), &ExecPlan::default()).unwrap();
        assert_eq!(out.draws.len(), 1);
        assert!(out.accept_evals > 0);
    }

    #[test]
    fn widen_limit_is_reported() {
        // A flat target never leaves the slice.
        let mut rng = DeviateBuffer::uniform(3, 64);
        let p = SliceParams { width: 1.0, max_steps: 5 };
        let r = slice_step(|_| Ok(0.0), &mut rng, &p);
        assert!(matches!(r, Err(Error::SliceWidenLimit(5))));
    }

    #[test]
    fn spike_target_stays_near_mode() {
        let mut rng = DeviateBuffer::uniform(4, 64);
        let p = SliceParams::default();
        for _ in 0..100 {
            let (x, _) = slice_step(|x| Ok(-1e12 * x * x), &mut rng, &p).unwrap();
            assert!(x.abs() <= p.width);
        }
    }

    #[test]
    fn draws_csv_header() {
        let out = ChainOutput {
            draws: vec![vec![1.0, 2.0]],
            accept_evals: 1,
            wall_time: 0.0,
        };
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("beta_0,beta_1\n"));
    }
}
