//! Hierarchical logistic regression over `M` groups with a fixed shared
//! Gaussian hyperprior.
//!
//! Given the hyperprior, group coefficient vectors are conditionally
//! independent, so the available workers can go either across groups
//! ([`MappingMode::Coarse`]) or inside each group's likelihood
//! ([`MappingMode::Fine`]). Each group owns its RNG stream, derived from
//! `(seed, group index)`, so scheduling never changes the draws.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::exec::Pool;
use crate::glm::{synthetic_logistic, Coefficients, DesignMatrix, ExecPlan, GlmEvaluator, GlmWorkspace, Strategy};
use crate::perf::{BenchRecord, HardwareDescriptor};
use crate::rng::{DeviateBuffer, DeviateKind, Stream, DEFAULT_CAPACITY};
use crate::sampler::{slice_sample_coord, GaussianPrior, SliceParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HbDataset {
    groups: Vec<DesignMatrix>,
}

impl HbDataset {
    pub fn new(groups: Vec<DesignMatrix>) -> Result<Self> {
        let k = groups
            .first()
            .ok_or_else(|| Error::InvalidArgument("need at least one group".into()))?
            .n_cols();
        if let Some(m) = groups.iter().position(|g| g.n_cols() != k) {
            return Err(Error::Dimension(format!("group {m} has K = {}, expected {k}", groups[m].n_cols())));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[DesignMatrix] {
        &self.groups
    }

    pub fn m_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_cols(&self) -> usize {
        self.groups[0].n_cols()
    }

    pub fn total_rows(&self) -> usize {
        self.groups.iter().map(DesignMatrix::n_rows).sum()
    }
}

/// `M` groups of `navg` rows each, with `beta_m` drawn from `prior`.
pub fn synthetic_hb(m: usize, k: usize, navg: usize, prior: &GaussianPrior, seed: u64) -> Result<(HbDataset, Vec<Coefficients>)> {
    if prior.len() != k {
        return Err(Error::Dimension(format!("prior has length {}, K = {k}", prior.len())));
    }
    let root = Stream::new(seed).split(0x4842);
    let mut groups = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    for g in 0..m {
        let s = root.split(g as u64);
        let beta: Vec<f64> = (0..k)
            .map(|j| prior.mu()[j] + prior.sigma()[j] * s.normal(j as u64))
            .collect();
        groups.push(synthetic_logistic(navg, k, &beta, s.key())?);
        betas.push(Coefficients::new(beta)?);
    }
    Ok((HbDataset::new(groups)?, betas))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingMode {
    /// Workers across groups, each group's likelihood sequential.
    Coarse,
    /// Groups in sequence, each group's likelihood row-parallel.
    Fine,
}

impl fmt::Display for MappingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MappingMode::Coarse => "coarse",
            MappingMode::Fine => "fine",
        })
    }
}

impl FromStr for MappingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coarse" => Ok(MappingMode::Coarse),
            "fine" => Ok(MappingMode::Fine),
            other => Err(Error::InvalidArgument(format!("unknown mapping mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappingPolicy {
    pub mode: MappingMode,
    pub workers: usize,
    /// Coordinate sweeps per group per HB iteration; higher values reuse a
    /// group's data while it is cache-resident.
    pub neval: usize,
}

impl MappingPolicy {
    pub fn new(mode: MappingMode, workers: usize, neval: usize) -> Result<Self> {
        if workers == 0 || neval == 0 {
            return Err(Error::InvalidArgument("mapping policy needs workers >= 1 and neval >= 1".into()));
        }
        Ok(Self { mode, workers, neval })
    }
}

#[derive(Debug, Clone)]
struct GroupState {
    ws: GlmWorkspace,
    rng: DeviateBuffer,
}

/// Per-group RNG for group `m` under master seed `seed`.
pub fn group_rng(seed: u64, m: usize) -> DeviateBuffer {
    DeviateBuffer::new(DeviateKind::Uniform01, Stream::new(seed).split(m as u64), DEFAULT_CAPACITY)
}

fn update_group(
    eval: &GlmEvaluator,
    state: &mut GroupState,
    data: &DesignMatrix,
    prior: &GaussianPrior,
    neval: usize,
    slice: &SliceParams,
) -> Result<u64> {
    let mut evals = 0;
    for _ in 0..neval {
        for k in 0..data.n_cols() {
            evals += slice_sample_coord(eval, &mut state.ws, data, prior, k, &mut state.rng, slice)?.1;
        }
    }
    Ok(evals)
}

/// Stateful HB Gibbs sampler: one workspace and RNG stream per group.
#[derive(Debug)]
pub struct HbSampler<'a> {
    ds: &'a HbDataset,
    prior: GaussianPrior,
    policy: MappingPolicy,
    slice: SliceParams,
    states: Vec<GroupState>,
    pool: Pool,
    /// Sequential evaluator shared by coarse workers.
    seq_eval: GlmEvaluator,
    /// Row-parallel evaluator for fine mapping.
    fine_eval: GlmEvaluator,
    evals: u64,
}

impl<'a> HbSampler<'a> {
    /// Starts every group at the prior mean.
    pub fn new(ds: &'a HbDataset, prior: GaussianPrior, policy: MappingPolicy, seed: u64) -> Result<Self> {
        let start = Coefficients::new(prior.mu().to_vec())?;
        let betas = vec![start; ds.m_groups()];
        let rngs = (0..ds.m_groups()).map(|m| group_rng(seed, m)).collect();
        Self::with_state(ds, prior, policy, &betas, rngs)
    }

    pub fn with_state(
        ds: &'a HbDataset,
        prior: GaussianPrior,
        policy: MappingPolicy,
        betas: &[Coefficients],
        rngs: Vec<DeviateBuffer>,
    ) -> Result<Self> {
        let policy = MappingPolicy::new(policy.mode, policy.workers, policy.neval)?;
        if prior.len() != ds.n_cols() {
            return Err(Error::Dimension("prior and dataset disagree on K".into()));
        }
        if betas.len() != ds.m_groups() || rngs.len() != ds.m_groups() {
            return Err(Error::Dimension(format!(
                "need {} coefficient vectors and RNG streams, got {} and {}",
                ds.m_groups(),
                betas.len(),
                rngs.len()
            )));
        }
        let states = ds
            .groups()
            .iter()
            .zip(betas)
            .zip(rngs)
            .map(|((g, b), rng)| Ok(GroupState { ws: GlmWorkspace::new(g, b, true)?, rng }))
            .collect::<Result<Vec<_>>>()?;
        let (pool_workers, fine_workers) = match policy.mode {
            MappingMode::Coarse => (policy.workers, 1),
            MappingMode::Fine => (1, policy.workers),
        };
        Ok(Self {
            ds,
            prior,
            policy,
            slice: SliceParams::default(),
            states,
            pool: Pool::new(pool_workers)?,
            seq_eval: GlmEvaluator::new(ExecPlan::sequential())?,
            fine_eval: GlmEvaluator::new(ExecPlan::new(Strategy::Plf, fine_workers, 1)?)?,
            evals: 0,
        })
    }

    pub fn with_slice(mut self, slice: SliceParams) -> Self {
        self.slice = slice;
        self
    }

    pub fn policy(&self) -> &MappingPolicy {
        &self.policy
    }

    /// Conditional-posterior evaluations so far.
    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn betas(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.ws.beta().to_vec()).collect()
    }

    pub fn into_rngs(self) -> Vec<DeviateBuffer> {
        self.states.into_iter().map(|s| s.rng).collect()
    }

    /// Updates every group once (`neval` coordinate sweeps each).
    pub fn sweep(&mut self) -> Result<()> {
        let neval = self.policy.neval;
        let groups = self.ds.groups();
        let prior = &self.prior;
        let slice = &self.slice;
        let evals = match self.policy.mode {
            MappingMode::Fine => {
                let mut total = 0;
                for (state, data) in self.states.iter_mut().zip(groups) {
                    total += update_group(&self.fine_eval, state, data, prior, neval, slice)?;
                }
                total
            }
            MappingMode::Coarse => {
                let workers = self.pool.workers();
                let mut buckets: Vec<Vec<(usize, &mut GroupState)>> = (0..workers).map(|_| Vec::new()).collect();
                for (m, state) in self.states.iter_mut().enumerate() {
                    buckets[m % workers].push((m, state));
                }
                let eval = &self.seq_eval;
                let results = self.pool.map_items(buckets, |_, bucket| {
                    let mut total = 0;
                    for (m, state) in bucket {
                        total += update_group(eval, state, &groups[m], prior, neval, slice)?;
                    }
                    Ok::<u64, Error>(total)
                });
                let mut total = 0;
                for r in results {
                    total += r?;
                }
                total
            }
        };
        self.evals += evals;
        Ok(())
    }
}

/// One HB sweep from explicit coefficients and per-group RNG streams.
/// Returns the updated coefficients; `rngs` advance in place.
pub fn hb_sweep(
    ds: &HbDataset,
    betas: &[Coefficients],
    prior: &GaussianPrior,
    policy: &MappingPolicy,
    rngs: &mut Vec<DeviateBuffer>,
) -> Result<Vec<Coefficients>> {
    let mut sampler = HbSampler::with_state(ds, prior.clone(), *policy, betas, std::mem::take(rngs))?;
    let res = sampler.sweep();
    let out = sampler.betas();
    *rngs = sampler.into_rngs();
    res?;
    out.into_iter().map(Coefficients::new).collect()
}

/// Grid for [`hb_benchmark`].
#[derive(Debug, Clone, PartialEq)]
pub struct HbBenchConfig {
    pub m_groups: usize,
    pub k: usize,
    pub navgs: Vec<usize>,
    pub nevals: Vec<usize>,
    pub modes: Vec<MappingMode>,
    pub workers: Vec<usize>,
    /// Timed sweeps per repetition.
    pub sweeps: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for HbBenchConfig {
    fn default() -> Self {
        Self {
            m_groups: 20,
            k: 50,
            navgs: vec![1000, 5000, 20_000],
            nevals: vec![1, 10],
            modes: vec![MappingMode::Coarse, MappingMode::Fine],
            workers: vec![4],
            sweeps: 1,
            reps: 3,
            seed: 1,
        }
    }
}

/// Times every `(mode, workers, navg, neval)` cell. CPR is per group row per
/// conditional-posterior evaluation; the label carries mode and neval.
pub fn hb_benchmark(cfg: &HbBenchConfig, hw: &HardwareDescriptor) -> Result<Vec<BenchRecord>> {
    if cfg.reps == 0 || cfg.sweeps == 0 {
        return Err(Error::InvalidArgument("hb benchmark needs reps >= 1 and sweeps >= 1".into()));
    }
    let prior = GaussianPrior::isotropic(cfg.k, 0.0, 1.0)?;
    let mut out = Vec::new();
    for &navg in &cfg.navgs {
        let (ds, _) = synthetic_hb(cfg.m_groups, cfg.k, navg, &prior, cfg.seed)?;
        for &mode in &cfg.modes {
            for &workers in &cfg.workers {
                for &neval in &cfg.nevals {
                    let label = format!("hb-{mode}-neval{neval}");
                    let policy = MappingPolicy::new(mode, workers, neval)?;
                    let mut sampler = HbSampler::new(&ds, prior.clone(), policy, cfg.seed)?;
                    sampler.sweep()?;
                    // Slice-sampler evaluation counts vary per rep, so the
                    // median is taken over cycles per row-evaluation.
                    let mut reps = Vec::with_capacity(cfg.reps);
                    for _ in 0..cfg.reps {
                        let before = sampler.evals();
                        let t = Instant::now();
                        for _ in 0..cfg.sweeps {
                            sampler.sweep()?;
                        }
                        reps.push((t.elapsed().as_secs_f64(), (sampler.evals() - before).max(1)));
                    }
                    reps.sort_by(|a, b| (a.0 / a.1 as f64).total_cmp(&(b.0 / b.1 as f64)));
                    let (wall, evals) = reps[reps.len() / 2];
                    out.push(BenchRecord::from_timing(label, navg, cfg.k, workers, 1, wall, evals, hw));
                }
            }
        }
    }
    Ok(out)
}
