use super::{kernels, Coefficients, DesignMatrix};
use crate::{Error, Result};

/// Maintained `X * beta` for differential updates.
///
/// The column-major copy `xt` is built once at construction; X never changes.
#[derive(Debug, Clone)]
pub struct GlmWorkspace {
    n_rows: usize,
    n_cols: usize,
    pub(crate) xbeta: Vec<f64>,
    pub(crate) xt: Option<Vec<f64>>,
    pub(crate) beta_current: Vec<f64>,
}

impl GlmWorkspace {
    pub fn new(data: &DesignMatrix, beta: &Coefficients, with_transpose: bool) -> Result<Self> {
        if beta.len() != data.n_cols() {
            return Err(Error::Dimension(format!(
                "beta has length {}, data has K = {}",
                beta.len(),
                data.n_cols()
            )));
        }
        let mut xbeta = vec![0.0; data.n_rows()];
        kernels::la_map(data.x(), data.n_cols(), beta, &mut xbeta);
        Ok(Self {
            n_rows: data.n_rows(),
            n_cols: data.n_cols(),
            xbeta,
            xt: with_transpose.then(|| data.transposed()),
            beta_current: beta.to_vec(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn xbeta(&self) -> &[f64] {
        &self.xbeta
    }
    pub fn beta(&self) -> &[f64] {
        &self.beta_current
    }
    pub fn has_transpose(&self) -> bool {
        self.xt.is_some()
    }

    pub(crate) fn column(&self, k: usize) -> &[f64] {
        let xt = self.xt.as_deref().expect("caller checks for xt");
        &xt[k * self.n_rows..(k + 1) * self.n_rows]
    }

    /// Largest absolute difference between the maintained `X * beta` and a
    /// fresh recomputation.
    pub fn max_drift(&self, data: &DesignMatrix) -> f64 {
        let mut fresh = vec![0.0; self.n_rows];
        kernels::la_map(data.x(), self.n_cols, &self.beta_current, &mut fresh);
        fresh
            .iter()
            .zip(&self.xbeta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Recomputes `X * beta` from scratch.
    pub fn refresh(&mut self, data: &DesignMatrix) {
        kernels::la_map(data.x(), self.n_cols, &self.beta_current, &mut self.xbeta);
    }
}
