use super::kernels::{self, GRAD_TR_FLOPS, TR_FLOPS};
use super::{make_sharded, Coefficients, DesignMatrix, ExecPlan, GlmWorkspace, ShardedMatrix, Strategy};
use crate::exec::{chunk_ranges, partition, split_mut, Counters, Pool, Stats};
use crate::{Error, Result};

/// Log-likelihood value and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradResult {
    pub f: f64,
    pub g: Vec<f64>,
}

#[derive(Clone, Copy)]
struct RowBlock<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl RowBlock<'_> {
    fn rows(&self) -> usize {
        self.y.len()
    }
}

struct Partial {
    f: f64,
    g: Vec<f64>,
}

/// Evaluates log-likelihoods under a fixed [`ExecPlan`], owning the worker
/// pool and the instrumentation counters.
#[derive(Debug)]
pub struct GlmEvaluator {
    plan: ExecPlan,
    pool: Pool,
    counters: Counters,
}

fn flat_blocks(data: &DesignMatrix, workers: usize) -> Vec<Vec<RowBlock<'_>>> {
    let k = data.n_cols();
    partition(data.n_rows(), workers)
        .into_iter()
        .map(|r| {
            vec![RowBlock {
                x: &data.x()[r.start * k..r.end * k],
                y: &data.y()[r],
            }]
        })
        .collect()
}

/// Shards are handed to workers in contiguous groups so a shard always
/// lands on the same worker.
fn shard_blocks(sh: &ShardedMatrix, workers: usize) -> Vec<Vec<RowBlock<'_>>> {
    partition(sh.n_shards(), workers)
        .into_iter()
        .map(|r| {
            sh.shards()[r]
                .iter()
                .map(|s| RowBlock { x: s.x(), y: s.y() })
                .collect()
        })
        .collect()
}

impl GlmEvaluator {
    pub fn new(plan: ExecPlan) -> Result<Self> {
        plan.validate()?;
        Ok(Self {
            plan,
            pool: Pool::new(plan.workers)?,
            counters: Counters::default(),
        })
    }

    pub fn plan(&self) -> &ExecPlan {
        &self.plan
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn stats(&self) -> Stats {
        self.counters.snapshot()
    }

    pub fn reset_stats(&self) {
        self.counters.reset()
    }

    fn check_beta(k: usize, beta: &[f64]) -> Result<()> {
        if beta.len() != k {
            return Err(Error::Dimension(format!("beta has length {}, data has K = {k}", beta.len())));
        }
        if let Some(i) = beta.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("beta[{i}]")));
        }
        Ok(())
    }

    pub fn loglike(&self, data: &DesignMatrix, beta: &Coefficients) -> Result<f64> {
        Ok(self.evaluate(data, beta, false)?.f)
    }

    pub fn loglike_grad(&self, data: &DesignMatrix, beta: &Coefficients) -> Result<GradResult> {
        self.evaluate(data, beta, true)
    }

    pub fn loglike_sharded(&self, data: &ShardedMatrix, beta: &Coefficients) -> Result<f64> {
        Ok(self.evaluate_sharded(data, beta, false)?.f)
    }

    pub fn loglike_grad_sharded(&self, data: &ShardedMatrix, beta: &Coefficients) -> Result<GradResult> {
        self.evaluate_sharded(data, beta, true)
    }

    fn evaluate(&self, data: &DesignMatrix, beta: &[f64], grad: bool) -> Result<GradResult> {
        Self::check_beta(data.n_cols(), beta)?;
        if self.plan.strategy == Strategy::Sharded {
            let sh = make_sharded(data, self.plan.workers.min(data.n_rows()))?;
            return self.evaluate_sharded(&sh, beta, grad);
        }
        let blocks = flat_blocks(data, self.plan.workers);
        Ok(self.run(&blocks, data.n_rows(), data.n_cols(), beta, grad))
    }

    fn evaluate_sharded(&self, data: &ShardedMatrix, beta: &[f64], grad: bool) -> Result<GradResult> {
        Self::check_beta(data.n_cols(), beta)?;
        let blocks = shard_blocks(data, self.plan.workers);
        Ok(self.run(&blocks, data.n_rows(), data.n_cols(), beta, grad))
    }

    fn run(&self, blocks: &[Vec<RowBlock<'_>>], n: usize, k: usize, beta: &[f64], grad: bool) -> GradResult {
        let out = match self.plan.strategy {
            Strategy::Som => self.som(blocks, n, k, beta, grad),
            Strategy::Mos => self.mos(blocks, k, beta, grad),
            Strategy::Plf | Strategy::Sharded => self.plf(blocks, k, beta, grad, 1),
            Strategy::PlfChunked => self.plf(blocks, k, beta, grad, self.plan.n_chunks),
        };
        let per_row = if grad {
            4 * k as u64 + TR_FLOPS + GRAD_TR_FLOPS
        } else {
            2 * k as u64 + TR_FLOPS
        };
        self.counters.flops(n as u64 * per_row);
        self.counters.eval();
        out
    }

    /// Merges worker-private accumulators in ascending worker order.
    fn merge(&self, partials: Vec<Partial>, k: usize, grad: bool) -> GradResult {
        let mut f = 0.0;
        let mut g = vec![0.0; if grad { k } else { 0 }];
        for p in partials {
            f += p.f;
            for (a, b) in g.iter_mut().zip(&p.g) {
                *a += b;
            }
            self.counters.merge();
        }
        GradResult { f, g }
    }

    fn som(&self, blocks: &[Vec<RowBlock<'_>>], n: usize, k: usize, beta: &[f64], grad: bool) -> GradResult {
        let ranges = partition_by_blocks(blocks);
        let mut xb = vec![0.0; n];
        self.counters.region();
        self.pool.map_items(split_mut(&mut xb, &ranges), |w, out| {
            let mut off = 0;
            for b in &blocks[w] {
                kernels::la_map(b.x, k, beta, &mut out[off..off + b.rows()]);
                off += b.rows();
            }
        });
        if !grad {
            self.counters.region();
            let partials = self.pool.map(blocks.len(), |w| {
                let xs = &xb[ranges[w].clone()];
                let mut off = 0;
                let mut f = 0.0;
                for b in &blocks[w] {
                    f += kernels::tr_reduce(&xs[off..off + b.rows()], b.y);
                    off += b.rows();
                }
                Partial { f, g: Vec::new() }
            });
            return self.merge(partials, k, false);
        }
        let mut gf = vec![0.0; n];
        self.counters.region();
        let fs = self.pool.map_items(split_mut(&mut gf, &ranges), |w, out| {
            let xs = &xb[ranges[w].clone()];
            let mut off = 0;
            let mut f = 0.0;
            for b in &blocks[w] {
                let r = off..off + b.rows();
                f += kernels::tr_grad_map(&xs[r.clone()], b.y, &mut out[r]);
                off += b.rows();
            }
            Partial { f, g: Vec::new() }
        });
        let f = self.merge(fs, k, false).f;
        self.counters.region();
        let gs = self.pool.map(blocks.len(), |w| {
            let gfs = &gf[ranges[w].clone()];
            let mut g = vec![0.0; k];
            let mut off = 0;
            for b in &blocks[w] {
                kernels::la_t_accumulate(b.x, k, &gfs[off..off + b.rows()], &mut g);
                off += b.rows();
            }
            Partial { f: 0.0, g }
        });
        let g = self.merge(gs, k, true).g;
        GradResult { f, g }
    }

    fn mos(&self, blocks: &[Vec<RowBlock<'_>>], k: usize, beta: &[f64], grad: bool) -> GradResult {
        self.counters.region();
        let partials = self.pool.map(blocks.len(), |w| {
            let mut g = vec![0.0; if grad { k } else { 0 }];
            let mut f = 0.0;
            for b in &blocks[w] {
                let gs = if grad { Some(g.as_mut_slice()) } else { None };
                f += kernels::fused_rows(b.x, b.y, k, beta, gs);
            }
            Partial { f, g }
        });
        self.merge(partials, k, grad)
    }

    fn plf(&self, blocks: &[Vec<RowBlock<'_>>], k: usize, beta: &[f64], grad: bool, n_chunks: usize) -> GradResult {
        self.counters.region();
        let partials = self.pool.map(blocks.len(), |w| {
            let chunks: Vec<(RowBlock<'_>, std::ops::Range<usize>)> = blocks[w]
                .iter()
                .flat_map(|b| chunk_ranges(0..b.rows(), n_chunks).into_iter().map(move |r| (*b, r)))
                .collect();
            let cap = chunks.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
            let mut xb = vec![0.0; cap];
            let mut gf = vec![0.0; if grad { cap } else { 0 }];
            let mut g = vec![0.0; if grad { k } else { 0 }];
            let mut f = 0.0;
            for (b, r) in chunks {
                let len = r.len();
                let x = &b.x[r.start * k..r.end * k];
                let y = &b.y[r];
                kernels::la_map(x, k, beta, &mut xb[..len]);
                if grad {
                    f += kernels::tr_grad_map(&xb[..len], y, &mut gf[..len]);
                    kernels::la_t_accumulate(x, k, &gf[..len], &mut g);
                } else {
                    f += kernels::tr_reduce(&xb[..len], y);
                }
            }
            Partial { f, g }
        });
        self.merge(partials, k, grad)
    }

    fn check_ws(ws: &GlmWorkspace, n: usize, k: usize) -> Result<()> {
        if ws.n_rows() != n {
            return Err(Error::Dimension(format!("workspace has {} rows, data has {n}", ws.n_rows())));
        }
        if k >= ws.n_cols() {
            return Err(Error::OutOfRange {
                index: k,
                len: ws.n_cols(),
            });
        }
        if ws.xt.is_none() {
            return Err(Error::MissingTranspose);
        }
        Ok(())
    }

    /// Log-likelihood at the workspace coefficients with coordinate `k`
    /// shifted by `delta`, touching only column `k` of X. Read-only.
    pub fn diff_loglike(&self, ws: &GlmWorkspace, data: &DesignMatrix, k: usize, delta: f64) -> Result<f64> {
        let n = data.n_rows();
        Self::check_ws(ws, n, k)?;
        if !delta.is_finite() {
            return Err(Error::NonFinite("delta".into()));
        }
        let col = ws.column(k);
        let xbeta = &ws.xbeta;
        let y = data.y();
        let ranges = partition(n, self.plan.workers);
        self.counters.region();
        let partials = self.pool.map(ranges.len(), |w| {
            let r = ranges[w].clone();
            let f = kernels::tr_reduce_shifted(&xbeta[r.clone()], &col[r.clone()], delta, &y[r]);
            Partial { f, g: Vec::new() }
        });
        self.counters.flops(n as u64 * (2 + TR_FLOPS));
        self.counters.eval();
        Ok(self.merge(partials, 0, false).f)
    }

    /// Applies `beta[k] += delta` to the workspace: `xbeta += delta * X_k`.
    pub fn commit_update(&self, ws: &mut GlmWorkspace, k: usize, delta: f64) -> Result<()> {
        let n = ws.n_rows();
        Self::check_ws(ws, n, k)?;
        if !delta.is_finite() {
            return Err(Error::NonFinite("delta".into()));
        }
        let ranges = partition(n, self.plan.workers);
        let xt = ws.xt.as_deref().expect("checked above");
        let col = &xt[k * n..(k + 1) * n];
        let items: Vec<_> = split_mut(&mut ws.xbeta, &ranges)
            .into_iter()
            .zip(ranges.iter())
            .map(|(out, r)| (out, &col[r.clone()]))
            .collect();
        self.counters.region();
        self.pool.map_items(items, |_, (out, c)| {
            for (o, &x) in out.iter_mut().zip(c) {
                *o += delta * x;
            }
        });
        ws.beta_current[k] += delta;
        Ok(())
    }
}

fn partition_by_blocks(blocks: &[Vec<RowBlock<'_>>]) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    blocks
        .iter()
        .map(|bs| {
            let len: usize = bs.iter().map(|b| b.rows()).sum();
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

pub fn loglike(data: &DesignMatrix, beta: &Coefficients, plan: &ExecPlan) -> Result<f64> {
    GlmEvaluator::new(*plan)?.loglike(data, beta)
}

pub fn loglike_grad(data: &DesignMatrix, beta: &Coefficients, plan: &ExecPlan) -> Result<GradResult> {
    GlmEvaluator::new(*plan)?.loglike_grad(data, beta)
}

pub fn diff_loglike(ws: &GlmWorkspace, data: &DesignMatrix, k: usize, delta: f64, plan: &ExecPlan) -> Result<f64> {
    GlmEvaluator::new(*plan)?.diff_loglike(ws, data, k, delta)
}

pub fn commit_update(ws: &mut GlmWorkspace, k: usize, delta: f64, plan: &ExecPlan) -> Result<()> {
    GlmEvaluator::new(*plan)?.commit_update(ws, k, delta)
}
