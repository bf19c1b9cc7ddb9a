//! Logistic-regression log-likelihood and gradient kernels.
//!
//! The log-likelihood of coefficients `beta` is
//! `L(beta) = -sum_n [(1 - y_n) * t_n + log(1 + exp(-t_n))]` with `t_n = x_n . beta`.
//! Each evaluation runs as a linear-algebra map (`t = X beta`), a
//! transcendental map over `t`, and a reduction. [`Strategy`] picks how these
//! stages are split across workers; every strategy returns the same value up
//! to floating-point reassociation.

mod data;
mod eval;
pub mod kernels;
mod shard;
mod workspace;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

pub use data::{read_csv, synthetic_logistic, synthetic_random, write_csv};
pub use eval::{diff_loglike, commit_update, loglike, loglike_grad, GlmEvaluator, GradResult};
pub use shard::{make_sharded, Shard, ShardedMatrix};
pub use workspace::GlmWorkspace;

use crate::{Error, Result};

/// Row-major `N x K` covariates with a binary response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(n_rows: usize, n_cols: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Dimension(format!(
                "design matrix needs N >= 1 and K >= 1, got {n_rows}x{n_cols}"
            )));
        }
        if x.len() != n_rows * n_cols || y.len() != n_rows {
            return Err(Error::Dimension(format!(
                "expected {} covariates and {n_rows} responses, got {} and {}",
                n_rows * n_cols,
                x.len(),
                y.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("x[{}, {}]", i / n_cols, i % n_cols)));
        }
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(format!("y[{i}] = {} is not 0 or 1", y[i])));
        }
        Ok(Self { n_rows, n_cols, x, y })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn row(&self, n: usize) -> &[f64] {
        &self.x[n * self.n_cols..(n + 1) * self.n_cols]
    }

    /// Column-major copy: column `k` occupies `k*N..(k+1)*N`.
    pub fn transposed(&self) -> Vec<f64> {
        let (n, k) = (self.n_rows, self.n_cols);
        let mut xt = vec![0.0; n * k];
        for (r, row) in self.x.chunks_exact(k).enumerate() {
            for (c, &v) in row.iter().enumerate() {
                xt[c * n + r] = v;
            }
        }
        xt
    }
}

/// Finite coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some(i) = beta.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("beta[{i}]")));
        }
        Ok(Self(beta))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Coefficients {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Sequence of maps: one parallel region per stage over the full arrays.
    Som,
    /// Map of sequences: every row runs all stages before the next row.
    Mos,
    /// Partial loop fusion: one region, each worker runs the stage sequence
    /// over its own row block with private accumulators.
    Plf,
    /// PLF with each worker block split into cache-sized chunks.
    PlfChunked,
    /// PLF over per-shard private copies of X and y.
    Sharded,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Som,
        Strategy::Mos,
        Strategy::Plf,
        Strategy::PlfChunked,
        Strategy::Sharded,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Som => "som",
            Strategy::Mos => "mos",
            Strategy::Plf => "plf",
            Strategy::PlfChunked => "plf-chunked",
            Strategy::Sharded => "sharded",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "som" => Ok(Strategy::Som),
            "mos" => Ok(Strategy::Mos),
            "plf" => Ok(Strategy::Plf),
            "plf-chunked" | "plfchunked" | "plf_chunked" | "chunked" => Ok(Strategy::PlfChunked),
            "sharded" | "numa" => Ok(Strategy::Sharded),
            other => Err(Error::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

/// How an evaluation is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecPlan {
    pub strategy: Strategy,
    pub workers: usize,
    /// Chunks per worker block; only read by [`Strategy::PlfChunked`].
    pub n_chunks: usize,
}

impl ExecPlan {
    pub fn new(strategy: Strategy, workers: usize, n_chunks: usize) -> Result<Self> {
        let plan = Self {
            strategy,
            workers,
            n_chunks,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn sequential() -> Self {
        Self {
            strategy: Strategy::Plf,
            workers: 1,
            n_chunks: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidArgument("plan needs workers >= 1".into()));
        }
        if self.n_chunks == 0 {
            return Err(Error::InvalidArgument("plan needs n_chunks >= 1".into()));
        }
        Ok(())
    }
}

impl Default for ExecPlan {
    fn default() -> Self {
        Self::sequential()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_matrix_validation() {
        assert!(DesignMatrix::new(0, 1, vec![], vec![]).is_err());
        assert!(DesignMatrix::new(1, 2, vec![1.0], vec![1.0]).is_err());
        assert!(DesignMatrix::new(1, 1, vec![f64::NAN], vec![1.0]).is_err());
        assert!(DesignMatrix::new(1, 1, vec![1.0], vec![0.5]).is_err());
        let d = DesignMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.transposed(), vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn coefficients_reject_non_finite() {
        assert!(Coefficients::new(vec![0.0, f64::INFINITY]).is_err());
        assert_eq!(Coefficients::zeros(3).len(), 3);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!(ExecPlan::new(Strategy::Plf, 0, 1).is_err());
        assert!(ExecPlan::new(Strategy::PlfChunked, 2, 0).is_err());
    }
}
